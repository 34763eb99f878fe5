//! Dense linear algebra over GF(2^m): bit-packed binary matrices, generic
//! field matrices, Gaussian elimination with pivot/consistency reporting,
//! inversion, and kernel (null-space) bases.
//!
//! `FieldMatrix` is the general type; binary matrices transparently take a
//! word-parallel path with identical semantics (same pivot order, same
//! particular solution with free variables set to zero).

use crate::gf::{Fe, FieldSpec};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("entry {value} out of range for field of order {q}")]
    EntryRange { value: u32, q: u32 },
    #[error("parse error: {0}")]
    Parse(String),
}

/// Outcome of Gaussian elimination on `A` (optionally augmented with `B`).
#[derive(Debug, Clone)]
pub struct EliminationReport {
    pub rank: usize,
    pub pivot_cols: Vec<usize>,
    /// Whether `A x = b` admits a solution. Trivially true when no
    /// right-hand side was supplied.
    pub consistent: bool,
    /// A particular solution (free variables zeroed), one column per
    /// right-hand side; `Some` iff a right-hand side was supplied and the
    /// system is consistent.
    pub solution: Option<FieldMatrix>,
}

impl EliminationReport {
    /// True when the solution is unique (full column rank and consistent).
    pub fn unique(&self, cols: usize) -> bool {
        self.consistent && self.rank == cols
    }
}

// ---------------------------------------------------------------------------
// Bit-packed binary matrices
// ---------------------------------------------------------------------------

/// Row-major bit-packed matrix over GF(2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    wpr: usize, // words per row
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let wpr = cols.div_ceil(64).max(1);
        Self { rows, cols, wpr, data: vec![0; rows * wpr] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for w in 0..m.wpr {
                m.data[r * m.wpr + w] = rng.gen();
            }
            m.mask_tail(r);
        }
        m
    }

    fn mask_tail(&mut self, row: usize) {
        let tail = self.cols % 64;
        if tail != 0 && self.cols > 0 {
            let last = row * self.wpr + (self.cols - 1) / 64;
            self.data[last] &= (1u64 << tail) - 1;
        } else if self.cols == 0 {
            for w in 0..self.wpr {
                self.data[row * self.wpr + w] = 0;
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        (self.data[r * self.wpr + c / 64] >> (c % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let w = r * self.wpr + c / 64;
        let bit = 1u64 << (c % 64);
        if v {
            self.data[w] |= bit;
        } else {
            self.data[w] &= !bit;
        }
    }

    pub fn row_weight(&self, r: usize) -> usize {
        (0..self.wpr)
            .map(|w| self.data[r * self.wpr + w].count_ones() as usize)
            .sum()
    }

    /// dst ^= src (row indices).
    pub fn row_xor(&mut self, dst: usize, src: usize) {
        debug_assert!(dst != src);
        let wpr = self.wpr;
        let (s, d) = (src * wpr, dst * wpr);
        if s < d {
            let (a, b) = self.data.split_at_mut(d);
            for w in 0..wpr {
                b[w] ^= a[s + w];
            }
        } else {
            let (a, b) = self.data.split_at_mut(s);
            for w in 0..wpr {
                a[d + w] ^= b[w];
            }
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let wpr = self.wpr;
        for w in 0..wpr {
            self.data.swap(a * wpr + w, b * wpr + w);
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    t.set(c, r, true);
                }
            }
        }
        t
    }

    /// Matrix product over GF(2).
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for w in 0..self.wpr {
                let mut bits = self.data[r * self.wpr + w];
                while bits != 0 {
                    let j = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let (dst, src) = (r * out.wpr, j * other.wpr);
                    for k in 0..out.wpr {
                        out.data[dst + k] ^= other.data[src + k];
                    }
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.eliminate(None).rank
    }

    /// Gaussian elimination (Gauss-Jordan) with optional right-hand sides
    /// (`rhs` has one row per equation, one column per system).
    pub fn eliminate(&self, rhs: Option<&BitMatrix>) -> BitElimination {
        if let Some(b) = rhs {
            assert_eq!(b.rows, self.rows, "rhs row count must match");
        }
        let mut work = self.clone();
        let mut aug = rhs.cloned();
        let mut pivot_cols = Vec::new();
        let mut pr = 0usize;
        for col in 0..work.cols {
            let Some(sel) = (pr..work.rows).find(|&r| work.get(r, col)) else {
                continue;
            };
            work.swap_rows(pr, sel);
            if let Some(a) = aug.as_mut() {
                a.swap_rows(pr, sel);
            }
            for r in 0..work.rows {
                if r != pr && work.get(r, col) {
                    work.row_xor(r, pr);
                    if let Some(a) = aug.as_mut() {
                        a.row_xor(r, pr);
                    }
                }
            }
            pivot_cols.push(col);
            pr += 1;
            if pr == work.rows {
                break;
            }
        }
        let rank = pr;
        let mut consistent = true;
        if let Some(a) = aug.as_ref() {
            for r in rank..work.rows {
                if a.row_weight(r) != 0 {
                    consistent = false;
                    break;
                }
            }
        }
        let solution = match (aug.as_ref(), consistent) {
            (Some(a), true) => {
                let w = a.cols;
                let mut x = BitMatrix::zeros(work.cols, w);
                for (i, &pc) in pivot_cols.iter().enumerate() {
                    for j in 0..w {
                        if a.get(i, j) {
                            x.set(pc, j, true);
                        }
                    }
                }
                Some(x)
            }
            _ => None,
        };
        BitElimination { rank, pivot_cols, consistent, solution }
    }

    pub fn invert(&self) -> Option<BitMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let id = BitMatrix::identity(self.rows);
        let rep = self.eliminate(Some(&id));
        if rep.rank == self.rows {
            rep.solution
        } else {
            None
        }
    }

    pub fn to_field(&self) -> FieldMatrix {
        let field = FieldSpec::binary();
        let mut m = FieldMatrix::zeros(self.rows, self.cols, &field);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    m.set(r, c, 1);
                }
            }
        }
        m
    }
}

/// Elimination outcome on the bit-packed path.
#[derive(Debug, Clone)]
pub struct BitElimination {
    pub rank: usize,
    pub pivot_cols: Vec<usize>,
    pub consistent: bool,
    pub solution: Option<BitMatrix>,
}

// ---------------------------------------------------------------------------
// Generic field matrices
// ---------------------------------------------------------------------------

/// Row-major dense matrix over GF(2^m).
#[derive(Clone, Debug, PartialEq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    field: FieldSpec,
    data: Vec<Fe>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize, field: &FieldSpec) -> Self {
        Self { rows, cols, field: field.clone(), data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize, field: &FieldSpec) -> Self {
        let mut m = Self::zeros(n, n, field);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(field: &FieldSpec, rows: &[Vec<Fe>]) -> Result<Self, MatrixError> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), ncols, field);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(MatrixError::Dimension(format!(
                    "row {r} has {} entries, expected {ncols}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                if v >= field.q() {
                    return Err(MatrixError::EntryRange { value: v, q: field.q() });
                }
                m.set(r, c, v);
            }
        }
        Ok(m)
    }

    pub fn random<R: Rng + ?Sized>(
        rows: usize,
        cols: usize,
        field: &FieldSpec,
        rng: &mut R,
    ) -> Self {
        let mut m = Self::zeros(rows, cols, field);
        for v in m.data.iter_mut() {
            *v = field.random(rng);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Fe {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Fe) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Fe] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows, &self.field);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        assert_eq!(self.field, other.field, "fields must agree");
        let f = &self.field;
        let mut out = Self::zeros(self.rows, other.cols, f);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if b != 0 {
                        let cur = out.get(r, c);
                        out.set(r, c, f.add(cur, f.mul(a, b)));
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a ^= b; // addition is xor in characteristic 2
        }
        out
    }

    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row counts must agree");
        let mut out = Self::zeros(self.rows, self.cols + other.cols, &self.field);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(r, c, self.get(r, c));
            }
            for c in 0..other.cols {
                out.set(r, self.cols + c, other.get(r, c));
            }
        }
        out
    }

    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols, "column counts must agree");
        let mut out = Self::zeros(self.rows + other.rows, self.cols, &self.field);
        out.data[..self.data.len()].copy_from_slice(&self.data);
        out.data[self.data.len()..].copy_from_slice(&other.data);
        out
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len(), &self.field);
        for r in 0..self.rows {
            for (j, &c) in idx.iter().enumerate() {
                out.set(r, j, self.get(r, c));
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len(), self.cols, &self.field);
        for (i, &r) in idx.iter().enumerate() {
            for c in 0..self.cols {
                out.set(i, c, self.get(r, c));
            }
        }
        out
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Whether every entry is zero.
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn rank(&self) -> usize {
        self.eliminate(None).rank
    }

    /// Gaussian elimination with optional right-hand sides. Binary matrices
    /// take the word-parallel path; results are identical to the generic
    /// path (same pivots, same particular solution).
    pub fn eliminate(&self, rhs: Option<&FieldMatrix>) -> EliminationReport {
        if self.field.is_binary() {
            let bit = self.to_bit().expect("binary matrix");
            let brhs = rhs.map(|b| b.to_bit().expect("binary rhs"));
            let rep = bit.eliminate(brhs.as_ref());
            return EliminationReport {
                rank: rep.rank,
                pivot_cols: rep.pivot_cols,
                consistent: rep.consistent,
                solution: rep.solution.map(|s| s.to_field()),
            };
        }
        self.eliminate_generic(rhs)
    }

    /// The generic elimination path, exposed for equivalence testing.
    pub fn eliminate_generic(&self, rhs: Option<&FieldMatrix>) -> EliminationReport {
        if let Some(b) = rhs {
            assert_eq!(b.rows, self.rows, "rhs row count must match");
        }
        let f = self.field.clone();
        let mut work = self.clone();
        let mut aug = rhs.cloned();
        let mut pivot_cols = Vec::new();
        let mut pr = 0usize;
        for col in 0..work.cols {
            let Some(sel) = (pr..work.rows).find(|&r| work.get(r, col) != 0) else {
                continue;
            };
            work.swap_rows(pr, sel);
            if let Some(a) = aug.as_mut() {
                a.swap_rows(pr, sel);
            }
            // Normalize the pivot row.
            let inv = f.inv(work.get(pr, col));
            if inv != 1 {
                for c in 0..work.cols {
                    let v = work.get(pr, c);
                    work.set(pr, c, f.mul(v, inv));
                }
                if let Some(a) = aug.as_mut() {
                    for c in 0..a.cols {
                        let v = a.get(pr, c);
                        a.set(pr, c, f.mul(v, inv));
                    }
                }
            }
            // Clear the column everywhere else.
            for r in 0..work.rows {
                if r == pr {
                    continue;
                }
                let factor = work.get(r, col);
                if factor == 0 {
                    continue;
                }
                for c in 0..work.cols {
                    let v = f.sub(work.get(r, c), f.mul(factor, work.get(pr, c)));
                    work.set(r, c, v);
                }
                if let Some(a) = aug.as_mut() {
                    for c in 0..a.cols {
                        let v = f.sub(a.get(r, c), f.mul(factor, a.get(pr, c)));
                        a.set(r, c, v);
                    }
                }
            }
            pivot_cols.push(col);
            pr += 1;
            if pr == work.rows {
                break;
            }
        }
        let rank = pr;
        let mut consistent = true;
        if let Some(a) = aug.as_ref() {
            'rows: for r in rank..work.rows {
                for c in 0..a.cols {
                    if a.get(r, c) != 0 {
                        consistent = false;
                        break 'rows;
                    }
                }
            }
        }
        let solution = match (aug.as_ref(), consistent) {
            (Some(a), true) => {
                let mut x = FieldMatrix::zeros(work.cols, a.cols, &f);
                for (i, &pc) in pivot_cols.iter().enumerate() {
                    for j in 0..a.cols {
                        x.set(pc, j, a.get(i, j));
                    }
                }
                Some(x)
            }
            _ => None,
        };
        EliminationReport { rank, pivot_cols, consistent, solution }
    }

    pub fn invert(&self) -> Option<FieldMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let id = FieldMatrix::identity(self.rows, &self.field);
        let rep = self.eliminate(Some(&id));
        if rep.rank == self.rows {
            rep.solution
        } else {
            None
        }
    }

    /// Basis of the right kernel {x : A x = 0}, one basis vector per row of
    /// the result ((cols - rank) x cols).
    pub fn kernel(&self) -> FieldMatrix {
        let f = self.field.clone();
        // Re-run elimination keeping the reduced matrix.
        let mut work = self.clone();
        let mut pivot_cols = Vec::new();
        let mut pr = 0usize;
        for col in 0..work.cols {
            let Some(sel) = (pr..work.rows).find(|&r| work.get(r, col) != 0) else {
                continue;
            };
            work.swap_rows(pr, sel);
            let inv = f.inv(work.get(pr, col));
            if inv != 1 {
                for c in 0..work.cols {
                    let v = work.get(pr, c);
                    work.set(pr, c, f.mul(v, inv));
                }
            }
            for r in 0..work.rows {
                if r == pr {
                    continue;
                }
                let factor = work.get(r, col);
                if factor == 0 {
                    continue;
                }
                for c in 0..work.cols {
                    let v = f.sub(work.get(r, c), f.mul(factor, work.get(pr, c)));
                    work.set(r, c, v);
                }
            }
            pivot_cols.push(col);
            pr += 1;
            if pr == work.rows {
                break;
            }
        }
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; work.cols];
            for &c in &pivot_cols {
                v[c] = true;
            }
            v
        };
        let free_cols: Vec<usize> = (0..work.cols).filter(|&c| !is_pivot[c]).collect();
        let mut basis = FieldMatrix::zeros(free_cols.len(), work.cols, &f);
        for (b, &fc) in free_cols.iter().enumerate() {
            basis.set(b, fc, 1);
            for (i, &pc) in pivot_cols.iter().enumerate() {
                // x[pc] = -coef; negation is identity in characteristic 2.
                basis.set(b, pc, work.get(i, fc));
            }
        }
        basis
    }

    pub fn to_bit(&self) -> Option<BitMatrix> {
        if !self.field.is_binary() {
            return None;
        }
        let mut b = BitMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) != 0 {
                    b.set(r, c, true);
                }
            }
        }
        Some(b)
    }

    /// Serialize as a header line "rows cols q" followed by one
    /// space-separated line per row.
    pub fn dump(&self) -> String {
        let mut s = format!("{} {} {}\n", self.rows, self.cols, self.field.q());
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parse the `dump` format. The field is reconstructed from q under the
    /// conventional reduction polynomial.
    pub fn parse(text: &str) -> Result<Self, MatrixError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| MatrixError::Parse("empty input".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(MatrixError::Parse(format!(
                "header must be 'rows cols q', got '{header}'"
            )));
        }
        let rows: usize = parts[0]
            .parse()
            .map_err(|e| MatrixError::Parse(format!("bad row count: {e}")))?;
        let cols: usize = parts[1]
            .parse()
            .map_err(|e| MatrixError::Parse(format!("bad col count: {e}")))?;
        let q: u32 = parts[2]
            .parse()
            .map_err(|e| MatrixError::Parse(format!("bad field order: {e}")))?;
        let field = FieldSpec::with_order(q)
            .map_err(|e| MatrixError::Parse(format!("bad field order: {e}")))?;
        let mut m = FieldMatrix::zeros(rows, cols, &field);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| MatrixError::Parse(format!("missing row {r}")))?;
            let entries: Vec<&str> = line.split_whitespace().collect();
            if entries.len() != cols {
                return Err(MatrixError::Parse(format!(
                    "row {r} has {} entries, expected {cols}",
                    entries.len()
                )));
            }
            for (c, e) in entries.iter().enumerate() {
                let v: u32 = e
                    .parse()
                    .map_err(|e| MatrixError::Parse(format!("bad entry: {e}")))?;
                if v >= q {
                    return Err(MatrixError::EntryRange { value: v, q });
                }
                m.set(r, c, v);
            }
        }
        Ok(m)
    }
}

/// v · M for a row vector v (length = M.rows()).
pub fn vec_mat(v: &[Fe], m: &FieldMatrix) -> Vec<Fe> {
    assert_eq!(v.len(), m.rows(), "vector length must equal row count");
    let f = m.field();
    let mut out = vec![0u32; m.cols()];
    for (r, &vr) in v.iter().enumerate() {
        if vr == 0 {
            continue;
        }
        for c in 0..m.cols() {
            let a = m.get(r, c);
            if a != 0 {
                out[c] = f.add(out[c], f.mul(vr, a));
            }
        }
    }
    out
}

/// M · v for a column vector v (length = M.cols()).
pub fn mat_vec(m: &FieldMatrix, v: &[Fe]) -> Vec<Fe> {
    assert_eq!(v.len(), m.cols(), "vector length must equal column count");
    let f = m.field();
    let mut out = vec![0u32; m.rows()];
    for r in 0..m.rows() {
        let mut acc = 0u32;
        for (c, &vc) in v.iter().enumerate() {
            if vc != 0 {
                let a = m.get(r, c);
                if a != 0 {
                    acc = f.add(acc, f.mul(a, vc));
                }
            }
        }
        out[r] = acc;
    }
    out
}

/// Convenience wrapper: solve A x = b (b as columns) and report rank,
/// pivots, consistency, and a particular solution.
pub fn gaussian_solve(a: &FieldMatrix, b: &FieldMatrix) -> EliminationReport {
    a.eliminate(Some(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf2() -> FieldSpec {
        FieldSpec::binary()
    }

    #[test]
    fn exhaustive_2x2_binary_invertibility() {
        // Oracle for the smallest interesting case: of the 16 binary 2x2
        // matrices exactly 6 are invertible (|GL(2,2)| = 6).
        let f = gf2();
        let mut invertible = 0;
        for bits in 0..16u32 {
            let rows = vec![
                vec![bits & 1, (bits >> 1) & 1],
                vec![(bits >> 2) & 1, (bits >> 3) & 1],
            ];
            let m = FieldMatrix::from_rows(&f, &rows).unwrap();
            if m.rank() == 2 {
                invertible += 1;
                assert!(m.invert().is_some());
            } else {
                assert!(m.invert().is_none());
            }
        }
        assert_eq!(invertible, 6);
    }

    #[test]
    fn exhaustive_3x3_binary_invertibility() {
        // |GL(3,2)| = (8-1)(8-2)(8-4) = 168.
        let mut invertible = 0;
        for bits in 0..512u32 {
            let mut m = BitMatrix::zeros(3, 3);
            for i in 0..9 {
                if (bits >> i) & 1 == 1 {
                    m.set(i / 3, i % 3, true);
                }
            }
            if m.rank() == 3 {
                invertible += 1;
            }
        }
        assert_eq!(invertible, 168);
    }

    #[test]
    fn bit_and_generic_paths_agree() {
        let f = gf2();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let (r, c) = if trial % 2 == 0 { (32, 32) } else { (20, 35) };
            let a = FieldMatrix::random(r, c, &f, &mut rng);
            let b = FieldMatrix::random(r, 3, &f, &mut rng);
            let fast = a.eliminate(Some(&b));
            let slow = a.eliminate_generic(Some(&b));
            assert_eq!(fast.rank, slow.rank);
            assert_eq!(fast.pivot_cols, slow.pivot_cols);
            assert_eq!(fast.consistent, slow.consistent);
            match (fast.solution, slow.solution) {
                (Some(x), Some(y)) => assert_eq!(x, y),
                (None, None) => {}
                _ => panic!("solution presence differs between paths"),
            }
        }
    }

    #[test]
    fn solve_recovers_unique_solution() {
        for m_deg in [1u32, 4] {
            let f = FieldSpec::new(m_deg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for _ in 0..20 {
                // Build an invertible matrix by rejection.
                let a = loop {
                    let cand = FieldMatrix::random(8, 8, &f, &mut rng);
                    if cand.rank() == 8 {
                        break cand;
                    }
                };
                let x: Vec<Fe> = (0..8).map(|_| f.random(&mut rng)).collect();
                let b = mat_vec(&a, &x);
                let bm = FieldMatrix::from_rows(&f, &[b]).unwrap().transpose();
                let rep = gaussian_solve(&a, &bm);
                assert!(rep.consistent);
                assert!(rep.unique(8));
                let sol = rep.solution.unwrap();
                let got: Vec<Fe> = (0..8).map(|i| sol.get(i, 0)).collect();
                assert_eq!(got, x);
            }
        }
    }

    #[test]
    fn underdetermined_particular_solution_satisfies_system() {
        let f = FieldSpec::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let a = FieldMatrix::random(3, 6, &f, &mut rng);
            let x: Vec<Fe> = (0..6).map(|_| f.random(&mut rng)).collect();
            let b = mat_vec(&a, &x);
            let bm = FieldMatrix::from_rows(&f, &[b.clone()]).unwrap().transpose();
            let rep = gaussian_solve(&a, &bm);
            assert!(rep.consistent);
            let sol = rep.solution.unwrap();
            let got: Vec<Fe> = (0..6).map(|i| sol.get(i, 0)).collect();
            assert_eq!(mat_vec(&a, &got), b);
        }
    }

    #[test]
    fn inconsistent_system_detected() {
        let f = gf2();
        let a = FieldMatrix::from_rows(&f, &[vec![1, 0], vec![1, 0]]).unwrap();
        let b = FieldMatrix::from_rows(&f, &[vec![1], vec![0]]).unwrap();
        let rep = gaussian_solve(&a, &b);
        assert!(!rep.consistent);
        assert!(rep.solution.is_none());
        assert_eq!(rep.rank, 1);
    }

    #[test]
    fn degenerate_shapes() {
        let f = gf2();
        assert_eq!(FieldMatrix::zeros(0, 5, &f).rank(), 0);
        assert_eq!(FieldMatrix::zeros(5, 0, &f).rank(), 0);
        assert_eq!(BitMatrix::zeros(0, 7).rank(), 0);
        // A x = b with zero columns: consistent iff b = 0.
        let a = FieldMatrix::zeros(2, 0, &f);
        let b0 = FieldMatrix::zeros(2, 1, &f);
        assert!(gaussian_solve(&a, &b0).consistent);
        let b1 = FieldMatrix::from_rows(&f, &[vec![1], vec![0]]).unwrap();
        assert!(!gaussian_solve(&a, &b1).consistent);
    }

    #[test]
    fn inverse_roundtrip_gf16() {
        let f = FieldSpec::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = loop {
            let cand = FieldMatrix::random(6, 6, &f, &mut rng);
            if cand.rank() == 6 {
                break cand;
            }
        };
        let inv = a.invert().unwrap();
        assert_eq!(a.mul(&inv), FieldMatrix::identity(6, &f));
        assert_eq!(inv.mul(&a), FieldMatrix::identity(6, &f));
    }

    #[test]
    fn kernel_is_orthogonal_basis() {
        let f = FieldSpec::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = FieldMatrix::random(4, 9, &f, &mut rng);
            let k = a.kernel();
            assert_eq!(k.rows(), 9 - a.rank());
            // Every basis vector is annihilated.
            for r in 0..k.rows() {
                let prod = mat_vec(&a, k.row(r));
                assert!(prod.iter().all(|&v| v == 0));
            }
            // Basis is independent.
            assert_eq!(k.rank(), k.rows());
        }
    }

    #[test]
    fn matmul_transpose_identity() {
        let f = FieldSpec::new(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = FieldMatrix::random(4, 5, &f, &mut rng);
        let b = FieldMatrix::random(5, 3, &f, &mut rng);
        let ab_t = a.mul(&b).transpose();
        let bt_at = b.transpose().mul(&a.transpose());
        assert_eq!(ab_t, bt_at);
    }

    #[test]
    fn bit_matmul_matches_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let a = BitMatrix::random(7, 9, &mut rng);
        let b = BitMatrix::random(9, 4, &mut rng);
        let fast = a.mul(&b);
        let slow = a.to_field().mul(&b.to_field()).to_bit().unwrap();
        assert_eq!(fast, slow);
    }

    #[test]
    fn dump_parse_roundtrip() {
        let f = FieldSpec::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = FieldMatrix::random(3, 5, &f, &mut rng);
        let text = a.dump();
        let parsed = FieldMatrix::parse(&text).unwrap();
        assert_eq!(a, parsed);
        assert!(text.starts_with("3 5 16\n"));
        // Range violations are rejected.
        assert!(FieldMatrix::parse("1 1 2\n4\n").is_err());
        assert!(FieldMatrix::parse("1 2 2\n1\n").is_err());
    }

    #[test]
    fn vec_mat_agrees_with_mul() {
        let f = FieldSpec::new(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = FieldMatrix::random(5, 7, &f, &mut rng);
        let v: Vec<Fe> = (0..5).map(|_| f.random(&mut rng)).collect();
        let as_mat = FieldMatrix::from_rows(&f, &[v.clone()]).unwrap().mul(&m);
        assert_eq!(vec_mat(&v, &m), as_mat.row(0).to_vec());
    }
}
