//! Fountain encoders over GF(2^m) and their baseline decoders.
//!
//! Two column models are supported: sparse columns whose degree is drawn
//! from a degree distribution with distinct uniform neighbors (binary
//! coefficients 1, q-ary coefficients uniform nonzero), and dense columns
//! whose k coefficients are i.i.d. uniform over the whole field (zeros
//! kept). Decoding is either iterative peeling (ripple/cloud) or maximum
//! likelihood via Gaussian elimination.

use crate::degree::DegreeDistribution;
use crate::gf::{Fe, FieldSpec};
use crate::linalg::{gaussian_solve, FieldMatrix};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LtError {
    #[error("systematic construction failed after {attempts} attempts")]
    SystematicRetriesExhausted { attempts: usize },
    #[error("degree distribution reaches degree {dmax} but only {k} source symbols exist")]
    DegreeExceedsSource { dmax: usize, k: usize },
}

/// One generator-matrix column: sorted distinct variable indices with their
/// coefficients. Dense (random-linear) columns list all k variables and may
/// carry zero coefficients; sparse columns carry only nonzero entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LtColumn {
    pub vars: Vec<u32>,
    pub coefs: Vec<Fe>,
}

impl LtColumn {
    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    /// (variable, coefficient) pairs with nonzero coefficient.
    pub fn nonzero(&self) -> impl Iterator<Item = (u32, Fe)> + '_ {
        self.vars
            .iter()
            .zip(self.coefs.iter())
            .filter(|(_, &c)| c != 0)
            .map(|(&v, &c)| (v, c))
    }

    /// Number of nonzero coefficients.
    pub fn weight(&self) -> usize {
        self.coefs.iter().filter(|&&c| c != 0).count()
    }

    /// y = sum_i coef_i v_i.
    pub fn apply(&self, v: &[Fe], field: &FieldSpec) -> Fe {
        let mut acc = 0u32;
        for (var, coef) in self.nonzero() {
            acc = field.add(acc, field.mul(coef, v[var as usize]));
        }
        acc
    }
}

/// Draw a sparse fountain column: degree from `dist`, distinct uniform
/// neighbors, coefficient 1 for binary fields and uniform nonzero otherwise.
pub fn sample_sparse_column<R: Rng + ?Sized>(
    k: usize,
    dist: &DegreeDistribution,
    field: &FieldSpec,
    rng: &mut R,
) -> LtColumn {
    debug_assert!(dist.max_degree() <= k);
    let d = dist.sample(rng).min(k);
    let mut vars: Vec<u32> = rand::seq::index::sample(rng, k, d)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    vars.sort_unstable();
    let coefs = if field.is_binary() {
        vec![1; d]
    } else {
        (0..d).map(|_| field.random_nonzero(rng)).collect()
    };
    LtColumn { vars, coefs }
}

/// Draw a dense random-linear column: all k coefficients i.i.d. uniform over
/// the field, zeros included.
pub fn sample_dense_column<R: Rng + ?Sized>(
    k: usize,
    field: &FieldSpec,
    rng: &mut R,
) -> LtColumn {
    LtColumn {
        vars: (0..k as u32).collect(),
        coefs: (0..k).map(|_| field.random(rng)).collect(),
    }
}

/// y = sum_i coef_i v_i for each column.
pub fn apply_columns(v: &[Fe], cols: &[LtColumn], field: &FieldSpec) -> Vec<Fe> {
    cols.iter().map(|col| col.apply(v, field)).collect()
}

/// Encode n output symbols of `v` under the sparse column model.
pub fn lt_encode<R: Rng + ?Sized>(
    v: &[Fe],
    dist: &DegreeDistribution,
    n: usize,
    field: &FieldSpec,
    rng: &mut R,
) -> Result<(Vec<LtColumn>, Vec<Fe>), LtError> {
    if dist.max_degree() > v.len() {
        return Err(LtError::DegreeExceedsSource { dmax: dist.max_degree(), k: v.len() });
    }
    let cols: Vec<LtColumn> = (0..n)
        .map(|_| sample_sparse_column(v.len(), dist, field, rng))
        .collect();
    let ys = apply_columns(v, &cols, field);
    Ok((cols, ys))
}

/// Encode n output symbols of `v` under the dense random-linear model.
pub fn lrfc_encode<R: Rng + ?Sized>(
    v: &[Fe],
    n: usize,
    field: &FieldSpec,
    rng: &mut R,
) -> (Vec<LtColumn>, Vec<Fe>) {
    let cols: Vec<LtColumn> = (0..n)
        .map(|_| sample_dense_column(v.len(), field, rng))
        .collect();
    let ys = apply_columns(v, &cols, field);
    (cols, ys)
}

/// What a receiver holds: the surviving columns and their symbols.
#[derive(Debug, Clone)]
pub struct ReceivedSet {
    pub k: usize,
    pub field: FieldSpec,
    pub columns: Vec<LtColumn>,
    pub symbols: Vec<Fe>,
}

impl ReceivedSet {
    pub fn new(k: usize, field: FieldSpec) -> Self {
        Self { k, field, columns: Vec::new(), symbols: Vec::new() }
    }

    pub fn push(&mut self, col: LtColumn, symbol: Fe) {
        self.columns.push(col);
        self.symbols.push(symbol);
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// The received equations as a dense (m x k) matrix (one row per
    /// received symbol) plus the (m x 1) right-hand side.
    pub fn to_dense(&self) -> (FieldMatrix, FieldMatrix) {
        let mut a = FieldMatrix::zeros(self.len(), self.k, &self.field);
        let mut b = FieldMatrix::zeros(self.len(), 1, &self.field);
        for (r, col) in self.columns.iter().enumerate() {
            for (var, coef) in col.nonzero() {
                a.set(r, var as usize, coef);
            }
            b.set(r, 0, self.symbols[r]);
        }
        (a, b)
    }
}

/// Outcome of maximum-likelihood decoding.
#[derive(Debug, Clone)]
pub struct MlDecodeResult {
    pub success: bool,
    pub rank: usize,
    pub solution: Option<Vec<Fe>>,
}

/// Decode by Gaussian elimination on the received equations. Succeeds iff
/// the received generator submatrix has full column rank (and the equations
/// are consistent, which holds for genuinely received data).
pub fn ml_decode(rs: &ReceivedSet) -> MlDecodeResult {
    let (a, b) = rs.to_dense();
    let rep = gaussian_solve(&a, &b);
    let success = rep.consistent && rep.rank == rs.k;
    let solution = if success {
        rep.solution
            .as_ref()
            .map(|s| (0..rs.k).map(|i| s.get(i, 0)).collect())
    } else {
        None
    };
    MlDecodeResult { success, rank: rep.rank, solution }
}

/// One peeling step: which variable was resolved through which equation,
/// with the ripple/cloud census before the step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeelStep {
    pub var: u32,
    pub equation: usize,
    pub ripple_before: usize,
    pub cloud_before: usize,
}

#[derive(Debug, Clone)]
pub struct PeelOutcome {
    /// Present iff every source symbol was resolved.
    pub solution: Option<Vec<Fe>>,
    pub steps: Vec<PeelStep>,
    pub resolved: usize,
}

/// Iterative (ripple) decoding: repeatedly pick a reduced-degree-1 equation
/// uniformly at random, resolve its variable, and substitute. Stops when the
/// ripple empties.
pub fn peel_decode<R: Rng + ?Sized>(rs: &ReceivedSet, rng: &mut R) -> PeelOutcome {
    let k = rs.k;
    let f = &rs.field;
    let m = rs.len();
    // Per-equation working state over nonzero entries only.
    let mut active_cnt = vec![0usize; m];
    let mut rhs: Vec<Fe> = rs.symbols.clone();
    let mut incidence: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (j, col) in rs.columns.iter().enumerate() {
        for (var, _) in col.nonzero() {
            active_cnt[j] += 1;
            incidence[var as usize].push(j);
        }
    }
    let coef_of = |j: usize, var: u32| -> Fe {
        let col = &rs.columns[j];
        match col.vars.binary_search(&var) {
            Ok(i) => col.coefs[i],
            Err(_) => 0,
        }
    };
    let mut value: Vec<Option<Fe>> = vec![None; k];
    let mut steps = Vec::new();
    let mut resolved = 0usize;
    loop {
        // Census of the reduced graph.
        let mut ripple = Vec::new();
        let mut cloud = 0usize;
        for j in 0..m {
            match active_cnt[j] {
                1 => ripple.push(j),
                c if c >= 2 => cloud += 1,
                _ => {}
            }
        }
        if ripple.is_empty() || resolved == k {
            break;
        }
        let eq = ripple[rng.gen_range(0..ripple.len())];
        // The single still-active variable in this equation.
        let (var, coef) = rs.columns[eq]
            .nonzero()
            .find(|&(v, _)| value[v as usize].is_none())
            .expect("ripple equation has one active variable");
        let val = f.div(rhs[eq], coef);
        value[var as usize] = Some(val);
        resolved += 1;
        steps.push(PeelStep {
            var,
            equation: eq,
            ripple_before: ripple.len(),
            cloud_before: cloud,
        });
        // Substitute into every equation touching var.
        for &j in &incidence[var as usize] {
            let c = coef_of(j, var);
            debug_assert!(c != 0);
            rhs[j] = f.sub(rhs[j], f.mul(c, val));
            active_cnt[j] -= 1;
        }
    }
    let solution = if resolved == k {
        Some(value.into_iter().map(|v| v.unwrap()).collect())
    } else {
        None
    };
    PeelOutcome { solution, steps, resolved }
}

/// Zero-overhead construction: k fresh columns are drawn until their k x k
/// matrix is invertible; source words are pre-warped through the inverse so
/// the first k outputs reproduce the source verbatim.
#[derive(Debug, Clone)]
pub struct SystematicLt {
    pub k: usize,
    pub field: FieldSpec,
    pub dist: DegreeDistribution,
    /// The k columns whose outputs are the systematic copies.
    pub head_columns: Vec<LtColumn>,
    head_inv: FieldMatrix,
    pub attempts_used: usize,
}

/// Retry budget shared by the systematic constructions.
pub const SYSTEMATIC_ATTEMPTS: usize = 32;

impl SystematicLt {
    pub fn build<R: Rng + ?Sized>(
        k: usize,
        dist: &DegreeDistribution,
        field: &FieldSpec,
        rng: &mut R,
    ) -> Result<Self, LtError> {
        if dist.max_degree() > k {
            return Err(LtError::DegreeExceedsSource { dmax: dist.max_degree(), k });
        }
        for attempt in 1..=SYSTEMATIC_ATTEMPTS {
            let cols: Vec<LtColumn> = (0..k)
                .map(|_| sample_sparse_column(k, dist, field, rng))
                .collect();
            let mut g1 = FieldMatrix::zeros(k, k, field);
            for (j, col) in cols.iter().enumerate() {
                for (var, coef) in col.nonzero() {
                    g1.set(var as usize, j, coef);
                }
            }
            if let Some(inv) = g1.invert() {
                return Ok(Self {
                    k,
                    field: field.clone(),
                    dist: dist.clone(),
                    head_columns: cols,
                    head_inv: inv,
                    attempts_used: attempt,
                });
            }
        }
        Err(LtError::SystematicRetriesExhausted { attempts: SYSTEMATIC_ATTEMPTS })
    }

    /// The warped word w with w · G_head = u.
    pub fn intermediate(&self, u: &[Fe]) -> Vec<Fe> {
        assert_eq!(u.len(), self.k);
        crate::linalg::vec_mat(u, &self.head_inv)
    }

    /// Encode n >= k outputs: the first k are the systematic copies of u,
    /// the rest are fresh fountain outputs of the warped word.
    pub fn encode<R: Rng + ?Sized>(
        &self,
        u: &[Fe],
        n: usize,
        rng: &mut R,
    ) -> (Vec<LtColumn>, Vec<Fe>) {
        assert!(n >= self.k);
        let w = self.intermediate(u);
        let mut cols = self.head_columns.clone();
        let mut ys: Vec<Fe> = u.to_vec();
        debug_assert_eq!(apply_columns(&w, &cols, &self.field), ys);
        for _ in self.k..n {
            let col = sample_sparse_column(self.k, &self.dist, &self.field, rng);
            let y = apply_columns(&w, std::slice::from_ref(&col), &self.field)[0];
            cols.push(col);
            ys.push(y);
        }
        (cols, ys)
    }

    /// Recover u from any received subset (columns refer to the warped
    /// word): decode w by elimination, then re-encode through the head
    /// columns.
    pub fn decode(&self, rs: &ReceivedSet) -> Option<Vec<Fe>> {
        let w = ml_decode(rs).solution?;
        Some(apply_columns(&w, &self.head_columns, &self.field))
    }
}
