//! Raptor codes: a fountain (LT) code applied to the output of a high-rate
//! outer "precode", plus a concatenated variant that appends dense random
//! columns to a fixed block code.
//!
//! Decoding works on the constraint system over the intermediate word v:
//! the parity rows of the precode (right-hand side zero) stacked with one
//! equation per received output symbol.

use crate::degree::DegreeDistribution;
use crate::gf::{Fe, FieldSpec};
use crate::inactivation::{inactivation_decode, InactivationStrategy, SparseSystem};
use crate::linalg::{gaussian_solve, vec_mat, FieldMatrix};
use crate::lt::{sample_dense_column, sample_sparse_column, LtColumn};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RaptorError {
    #[error("invalid precode parameters: {0}")]
    InvalidParameters(String),
    #[error("precode requires the binary field")]
    BinaryFieldRequired,
    #[error("degree distribution reaches degree {degree} but the intermediate block has {h} symbols")]
    DegreeExceedsIntermediate { degree: usize, h: usize },
    #[error("no invertible systematic head found in {0} attempts")]
    SystematicRetriesExhausted(usize),
}

/// Outer code: generator (k x h) and parity-check (h-k x h) matrices with
/// G * H^T = 0. `systematic` marks a generator whose first k columns are
/// the identity, so the source word is a prefix of the intermediate word.
#[derive(Debug, Clone)]
pub struct Precode {
    pub field: FieldSpec,
    pub k: usize,
    pub h: usize,
    pub generator: FieldMatrix,
    pub parity: FieldMatrix,
    pub systematic: bool,
}

/// Serializable recipe for building a precode at a given source size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PrecodeSpec {
    /// Systematic generator [I | P] with P uniform over the field.
    LinearRandom { h: usize },
    /// Binary Hamming code (2^t - 1, 2^t - 1 - t); k must match.
    Hamming { t: u32 },
    /// Single parity-check code (k+1, k).
    SingleParityCheck,
    /// Reed-Solomon style code from a Vandermonde parity check on the
    /// points 1..n; MDS, needs n <= q - 1.
    Grs { n: usize },
    /// Standardized raptor outer code: circulant LDPC rows plus dense
    /// Gray-pattern rows, both with identity tails.
    R10Style,
}

impl PrecodeSpec {
    pub fn build<R: Rng + ?Sized>(
        &self,
        k: usize,
        field: &FieldSpec,
        rng: &mut R,
    ) -> Result<Precode, RaptorError> {
        match *self {
            PrecodeSpec::LinearRandom { h } => Precode::linear_random(k, h, field, rng),
            PrecodeSpec::Hamming { t } => {
                let p = Precode::hamming(t, field)?;
                if p.k != k {
                    return Err(RaptorError::InvalidParameters(format!(
                        "hamming t={t} has k={}, requested k={k}",
                        p.k
                    )));
                }
                Ok(p)
            }
            PrecodeSpec::SingleParityCheck => Precode::single_parity_check(k, field),
            PrecodeSpec::Grs { n } => Precode::grs(k, n, field),
            PrecodeSpec::R10Style => {
                if !field.is_binary() {
                    return Err(RaptorError::BinaryFieldRequired);
                }
                Precode::r10_style(k)
            }
        }
    }
}

/// Block sizes of the standardized raptor outer code for k source symbols:
/// s LDPC rows, h_prime dense rows, intermediate length h = k + s + h_prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct R10Params {
    pub x: usize,
    pub s: usize,
    pub h_prime: usize,
    pub h: usize,
}

impl R10Params {
    pub fn for_source(k: usize) -> Result<Self, RaptorError> {
        if k == 0 {
            return Err(RaptorError::InvalidParameters("k must be positive".into()));
        }
        let x = (1usize..).find(|&x| x * (x - 1) >= 2 * k).unwrap();
        let s = {
            let mut c = k.div_ceil(100) + x;
            while !is_prime(c) {
                c += 1;
            }
            c
        };
        let h_prime = (1usize..)
            .find(|&hp| central_binomial(hp) >= (k + s) as u128)
            .unwrap();
        Ok(R10Params { x, s, h_prime, h: k + s + h_prime })
    }
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// C(n, ceil(n/2)) without going through floats.
fn central_binomial(n: usize) -> u128 {
    let k = n.div_ceil(2);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Rows (as sets of row indices) of the circulant LDPC block: column c of
/// the first k columns carries ones at {j, j+a, j+2a} mod s where
/// j = c mod s and a = 1 + (c / s mod (s - 1)).
fn ldpc_column_rows(c: usize, s: usize) -> [usize; 3] {
    let b = c / s;
    let j = c % s;
    let a = 1 + (b % (s - 1));
    [j, (j + a) % s, (j + 2 * a) % s]
}

/// First `count` Gray-code values with exactly ceil(h_prime/2) bits set,
/// enumerated as gray(i) = i xor (i >> 1) for i = 1, 2, ...
fn hdpc_patterns(h_prime: usize, count: usize) -> Vec<u32> {
    let want = h_prime.div_ceil(2) as u32;
    let mut out = Vec::with_capacity(count);
    let mut i: u32 = 1;
    while out.len() < count {
        let g = i ^ (i >> 1);
        if g.count_ones() == want {
            out.push(g);
        }
        i += 1;
    }
    out
}

impl Precode {
    fn finish(
        field: FieldSpec,
        k: usize,
        generator: FieldMatrix,
        parity: FieldMatrix,
        systematic: bool,
    ) -> Precode {
        let h = generator.cols();
        debug_assert_eq!(parity.cols(), h);
        debug_assert!(generator.mul(&parity.transpose()).is_zero());
        Precode { field, k, h, generator, parity, systematic }
    }

    /// Systematic [I | P] with P drawn uniformly; parity [P^T | I].
    pub fn linear_random<R: Rng + ?Sized>(
        k: usize,
        h: usize,
        field: &FieldSpec,
        rng: &mut R,
    ) -> Result<Precode, RaptorError> {
        if k == 0 || h < k {
            return Err(RaptorError::InvalidParameters(format!("need 0 < k <= h, got k={k} h={h}")));
        }
        let r = h - k;
        let mut g = FieldMatrix::zeros(k, h, field);
        let mut hm = FieldMatrix::zeros(r, h, field);
        for i in 0..k {
            g.set(i, i, 1);
        }
        for j in 0..r {
            hm.set(j, k + j, 1);
        }
        for i in 0..k {
            for j in 0..r {
                let p = field.random(rng);
                g.set(i, k + j, p);
                hm.set(j, i, p); // char-2 fields: -p = p
            }
        }
        Ok(Precode::finish(field.clone(), k, g, hm, true))
    }

    /// Binary Hamming code (2^t - 1, 2^t - 1 - t) in systematic column
    /// order: parity check [A | I_t] with A the weight->=2 patterns.
    pub fn hamming(t: u32, field: &FieldSpec) -> Result<Precode, RaptorError> {
        if !field.is_binary() {
            return Err(RaptorError::BinaryFieldRequired);
        }
        if !(2..=16).contains(&t) {
            return Err(RaptorError::InvalidParameters(format!("hamming t={t} out of range")));
        }
        let n = (1usize << t) - 1;
        let k = n - t as usize;
        let heavy: Vec<u32> = (1..=n as u32).filter(|p| p.count_ones() >= 2).collect();
        debug_assert_eq!(heavy.len(), k);
        let mut hm = FieldMatrix::zeros(t as usize, n, field);
        for (c, &pat) in heavy.iter().enumerate() {
            for r in 0..t {
                if pat >> r & 1 == 1 {
                    hm.set(r as usize, c, 1);
                }
            }
        }
        for r in 0..t as usize {
            hm.set(r, k + r, 1);
        }
        let mut g = FieldMatrix::zeros(k, n, field);
        for i in 0..k {
            g.set(i, i, 1);
            for r in 0..t as usize {
                g.set(i, k + r, hm.get(r, i));
            }
        }
        Ok(Precode::finish(field.clone(), k, g, hm, true))
    }

    /// Single parity-check code (k+1, k): one all-ones parity row.
    pub fn single_parity_check(k: usize, field: &FieldSpec) -> Result<Precode, RaptorError> {
        if k == 0 {
            return Err(RaptorError::InvalidParameters("k must be positive".into()));
        }
        let n = k + 1;
        let mut g = FieldMatrix::zeros(k, n, field);
        for i in 0..k {
            g.set(i, i, 1);
            g.set(i, k, 1);
        }
        let mut hm = FieldMatrix::zeros(1, n, field);
        for j in 0..n {
            hm.set(0, j, 1);
        }
        Ok(Precode::finish(field.clone(), k, g, hm, true))
    }

    /// MDS code from the Vandermonde parity check h_{i,j} = a_j^i on the
    /// distinct nonzero points a_j = j+1, systematized so the generator is
    /// [I | P]. Requires n <= q - 1.
    pub fn grs(k: usize, n: usize, field: &FieldSpec) -> Result<Precode, RaptorError> {
        if k == 0 || n <= k {
            return Err(RaptorError::InvalidParameters(format!("need 0 < k < n, got k={k} n={n}")));
        }
        if n > field.q() as usize - 1 {
            return Err(RaptorError::InvalidParameters(format!(
                "n={n} exceeds the {} nonzero points of GF({})",
                field.q() - 1,
                field.q()
            )));
        }
        let r = n - k;
        let mut hm = FieldMatrix::zeros(r, n, field);
        for j in 0..n {
            let alpha = (j + 1) as Fe;
            for i in 0..r {
                hm.set(i, j, field.pow(alpha, i as u64));
            }
        }
        // Systematize: with H = [H1 | H2], the parity block of the
        // generator is (H2^{-1} H1)^T (char 2: negation is identity).
        let h1 = hm.select_columns(&(0..k).collect::<Vec<_>>());
        let h2 = hm.select_columns(&(k..n).collect::<Vec<_>>());
        let h2_inv = h2
            .invert()
            .expect("any r columns of a Vandermonde parity check are independent");
        let p = h2_inv.mul(&h1).transpose();
        let mut g = FieldMatrix::zeros(k, n, field);
        for i in 0..k {
            g.set(i, i, 1);
            for j in 0..r {
                g.set(i, k + j, p.get(i, j));
            }
        }
        Ok(Precode::finish(field.clone(), k, g, hm, true))
    }

    /// Standardized raptor outer code over GF(2): s circulant LDPC rows on
    /// the first k columns with an identity tail, then h' dense rows whose
    /// first k+s columns are constant-weight Gray patterns, again with an
    /// identity tail. Systematic by construction.
    pub fn r10_style(k: usize) -> Result<Precode, RaptorError> {
        let params = R10Params::for_source(k)?;
        let (s, hp, h) = (params.s, params.h_prime, params.h);
        let field = FieldSpec::binary();
        let patterns = hdpc_patterns(hp, k + s);
        let mut hm = FieldMatrix::zeros(s + hp, h, &field);
        for c in 0..k {
            for r in ldpc_column_rows(c, s) {
                hm.set(r, c, 1);
            }
        }
        for r in 0..s {
            hm.set(r, k + r, 1);
        }
        for (c, &pat) in patterns.iter().enumerate() {
            for b in 0..hp {
                if pat >> b & 1 == 1 {
                    hm.set(s + b, c, 1);
                }
            }
        }
        for b in 0..hp {
            hm.set(s + b, k + s + b, 1);
        }
        // Generator row i: source unit vector, LDPC parities read off the
        // circulant, dense parities folded over source and LDPC columns.
        let mut g = FieldMatrix::zeros(k, h, &field);
        for i in 0..k {
            g.set(i, i, 1);
            let rows = ldpc_column_rows(i, s);
            for r in rows {
                g.set(i, k + r, 1);
            }
            for b in 0..hp {
                let mut bit = patterns[i] >> b & 1;
                for r in rows {
                    bit ^= patterns[k + r] >> b & 1;
                }
                g.set(i, k + s + b, bit);
            }
        }
        Ok(Precode::finish(field, k, g, hm, true))
    }

    /// Arbitrary full-rank generator; the parity check is computed as the
    /// null space of the generator's row space.
    pub fn explicit(generator: FieldMatrix) -> Result<Precode, RaptorError> {
        let k = generator.rows();
        let h = generator.cols();
        if k == 0 || h < k {
            return Err(RaptorError::InvalidParameters("generator must be k x h with k <= h".into()));
        }
        if generator.rank() != k {
            return Err(RaptorError::InvalidParameters("generator must have full row rank".into()));
        }
        let field = generator.field().clone();
        let parity = generator.kernel();
        let systematic = (0..k).all(|i| {
            (0..k).all(|j| generator.get(i, j) == if i == j { 1 } else { 0 })
        });
        Ok(Precode::finish(field, k, generator, parity, systematic))
    }

    /// Column j of the generator as a sparse fountain column over k source
    /// variables.
    pub fn generator_column(&self, j: usize) -> LtColumn {
        let mut vars = Vec::new();
        let mut coefs = Vec::new();
        for i in 0..self.k {
            let c = self.generator.get(i, j);
            if c != 0 {
                vars.push(i as u32);
                coefs.push(c);
            }
        }
        LtColumn { vars, coefs }
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.h as f64
    }
}

/// Outcome of a raptor decode attempt.
#[derive(Debug, Clone)]
pub struct RaptorReport {
    pub success: bool,
    pub intermediate: Option<Vec<Fe>>,
    pub source: Option<Vec<Fe>>,
    pub inactivations: usize,
    pub rank: usize,
    pub consistent: bool,
}

/// Precode plus an LT layer driven by a degree distribution over the
/// intermediate symbols.
#[derive(Debug, Clone)]
pub struct RaptorCode {
    pub precode: Precode,
    pub dist: DegreeDistribution,
}

impl RaptorCode {
    pub fn new(precode: Precode, dist: DegreeDistribution) -> Result<Self, RaptorError> {
        if dist.max_degree() > precode.h {
            return Err(RaptorError::DegreeExceedsIntermediate {
                degree: dist.max_degree(),
                h: precode.h,
            });
        }
        Ok(Self { precode, dist })
    }

    /// u * G_p.
    pub fn intermediate(&self, u: &[Fe]) -> Vec<Fe> {
        assert_eq!(u.len(), self.precode.k);
        vec_mat(u, &self.precode.generator)
    }

    pub fn encode<R: Rng + ?Sized>(
        &self,
        u: &[Fe],
        n: usize,
        rng: &mut R,
    ) -> (Vec<LtColumn>, Vec<Fe>) {
        let v = self.intermediate(u);
        let f = &self.precode.field;
        let mut cols = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let col = sample_sparse_column(self.precode.h, &self.dist, f, rng);
            ys.push(col.apply(&v, f));
            cols.push(col);
        }
        (cols, ys)
    }

    /// Parity rows (rhs 0) stacked with one equation per received symbol,
    /// all over the h intermediate variables.
    pub fn constraint_system(&self, columns: &[LtColumn], symbols: &[Fe]) -> SparseSystem {
        assert_eq!(columns.len(), symbols.len());
        let p = &self.precode;
        let mut sys = SparseSystem::new(p.h, p.field.clone());
        for r in 0..p.parity.rows() {
            let mut vars = Vec::new();
            let mut coefs = Vec::new();
            for c in 0..p.h {
                let x = p.parity.get(r, c);
                if x != 0 {
                    vars.push(c as u32);
                    coefs.push(x);
                }
            }
            sys.push(&vars, &coefs, 0);
        }
        for (col, &y) in columns.iter().zip(symbols.iter()) {
            sys.push(&col.vars, &col.coefs, y);
        }
        sys
    }

    pub fn decode<R: Rng + ?Sized>(
        &self,
        columns: &[LtColumn],
        symbols: &[Fe],
        strategy: InactivationStrategy,
        rng: &mut R,
    ) -> RaptorReport {
        let sys = self.constraint_system(columns, symbols);
        let rep = inactivation_decode(&sys, strategy, rng);
        let (intermediate, source) = match rep.solution {
            Some(v) => {
                let u = self.recover_source(&v);
                (Some(v), Some(u))
            }
            None => (None, None),
        };
        RaptorReport {
            success: rep.success,
            intermediate,
            source,
            inactivations: rep.inactivations,
            rank: rep.rank,
            consistent: rep.consistent,
        }
    }

    /// Source word from a decoded intermediate word.
    pub fn recover_source(&self, v: &[Fe]) -> Vec<Fe> {
        let p = &self.precode;
        assert_eq!(v.len(), p.h);
        if p.systematic {
            return v[..p.k].to_vec();
        }
        let mut rhs = FieldMatrix::zeros(p.h, 1, &p.field);
        for (i, &x) in v.iter().enumerate() {
            rhs.set(i, 0, x);
        }
        let rep = gaussian_solve(&p.generator.transpose(), &rhs);
        debug_assert!(rep.consistent && rep.rank == p.k);
        let sol = rep.solution.expect("full-rank generator always inverts");
        (0..p.k).map(|i| sol.get(i, 0)).collect()
    }
}

/// Retry budget for finding an invertible systematic head.
pub const SYSTEMATIC_ATTEMPTS: usize = 32;

/// Raptor code arranged so the first k output symbols are the source word
/// verbatim: the head columns G1 are resampled until F = G_p * G1 is
/// invertible, and the source is pre-transformed by F^{-1}.
#[derive(Debug, Clone)]
pub struct SystematicRaptor {
    pub code: RaptorCode,
    pub head_columns: Vec<LtColumn>,
    transform: FieldMatrix,
    transform_inv: FieldMatrix,
    pub attempts_used: usize,
}

impl SystematicRaptor {
    pub fn build<R: Rng + ?Sized>(code: RaptorCode, rng: &mut R) -> Result<Self, RaptorError> {
        let p = &code.precode;
        let f = p.field.clone();
        for attempt in 1..=SYSTEMATIC_ATTEMPTS {
            let cols: Vec<LtColumn> = (0..p.k)
                .map(|_| sample_sparse_column(p.h, &code.dist, &f, rng))
                .collect();
            // F = G_p * G1, with G1 the h x k matrix of head columns.
            let mut g1 = FieldMatrix::zeros(p.h, p.k, &f);
            for (j, col) in cols.iter().enumerate() {
                for (&v, &c) in col.vars.iter().zip(col.coefs.iter()) {
                    g1.set(v as usize, j, c);
                }
            }
            let fmat = p.generator.mul(&g1);
            if let Some(inv) = fmat.invert() {
                return Ok(Self {
                    code,
                    head_columns: cols,
                    transform: fmat,
                    transform_inv: inv,
                    attempts_used: attempt,
                });
            }
        }
        Err(RaptorError::SystematicRetriesExhausted(SYSTEMATIC_ATTEMPTS))
    }

    /// Intermediate word carrying u systematically.
    pub fn intermediate(&self, u: &[Fe]) -> Vec<Fe> {
        let w = vec_mat(u, &self.transform_inv);
        self.code.intermediate(&w)
    }

    pub fn encode<R: Rng + ?Sized>(
        &self,
        u: &[Fe],
        n: usize,
        rng: &mut R,
    ) -> (Vec<LtColumn>, Vec<Fe>) {
        let p = &self.code.precode;
        let f = &p.field;
        let v = self.intermediate(u);
        let mut cols = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for j in 0..n {
            let col = if j < p.k {
                self.head_columns[j].clone()
            } else {
                sample_sparse_column(p.h, &self.code.dist, f, rng)
            };
            let y = col.apply(&v, f);
            if j < p.k {
                debug_assert_eq!(y, u[j], "systematic head must reproduce the source");
            }
            ys.push(y);
            cols.push(col);
        }
        (cols, ys)
    }

    /// Decode from any received subset; the head transform is undone after
    /// the constraint system yields the intermediate word.
    pub fn decode<R: Rng + ?Sized>(
        &self,
        columns: &[LtColumn],
        symbols: &[Fe],
        strategy: InactivationStrategy,
        rng: &mut R,
    ) -> RaptorReport {
        let mut rep = self.code.decode(columns, symbols, strategy, rng);
        if let Some(w) = rep.source.take() {
            // The constraint system recovers w = u * F^{-1}; map back.
            rep.source = Some(vec_mat(&w, &self.transform));
        }
        rep
    }
}

/// Fixed block code followed by unlimited dense random columns: output j
/// for j < n is column j of the outer generator, afterwards dense uniform.
#[derive(Debug, Clone)]
pub struct ConcatCode {
    pub precode: Precode,
}

impl ConcatCode {
    pub fn new(precode: Precode) -> Self {
        Self { precode }
    }

    pub fn column<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> LtColumn {
        if j < self.precode.h {
            self.precode.generator_column(j)
        } else {
            sample_dense_column(self.precode.k, &self.precode.field, rng)
        }
    }

    pub fn encode<R: Rng + ?Sized>(
        &self,
        u: &[Fe],
        n: usize,
        rng: &mut R,
    ) -> (Vec<LtColumn>, Vec<Fe>) {
        assert_eq!(u.len(), self.precode.k);
        let f = &self.precode.field;
        let mut cols = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for j in 0..n {
            let col = self.column(j, rng);
            ys.push(col.apply(u, f));
            cols.push(col);
        }
        (cols, ys)
    }
}
