//! Output-degree distributions for fountain encoders: ideal/robust soliton
//! families, the standardized ten-parameter table, truncated robust soliton,
//! binomial references, plus sampling and a small text exchange format.

use crate::numeric::ln_binomial_pmf;
use rand::Rng;
use std::fmt::Write as _;
use thiserror::Error;

/// Tolerance for accepting caller-supplied masses as a distribution.
pub const MASS_SUM_TOL: f64 = 1e-12;
/// Looser tolerance used when loading from text files.
pub const FILE_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DegreeError {
    #[error("distribution has no positive mass")]
    Empty,
    #[error("negative mass {mass} at degree {degree}")]
    Negative { degree: usize, mass: f64 },
    #[error("masses sum to {sum}, outside tolerance of 1")]
    SumNotOne { sum: f64 },
    #[error("degree 0 cannot carry mass")]
    DegreeZero,
    #[error("robust soliton parameters give R = {r}; need R > 1")]
    InvalidSolitonParams { r: f64 },
    #[error("binomial parameter p = {p} outside (0, 1)")]
    InvalidBinomialP { p: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

/// Robust-soliton parameters. `c` is the multiplicative constant and
/// `delta` the failure-probability knob inside the logarithm:
/// R = c · ln(k/delta) · sqrt(k).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsdParams {
    pub k: usize,
    pub c: f64,
    pub delta: f64,
}

impl RsdParams {
    pub fn ripple_size(&self) -> f64 {
        self.c * (self.k as f64 / self.delta).ln() * (self.k as f64).sqrt()
    }
}

/// A probability distribution over output degrees 1..=dmax.
///
/// Invariants: masses are nonnegative and sum to 1 (renormalized exactly at
/// construction after a tolerance check), the top degree carries positive
/// mass, and degree 0 never carries mass.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    /// probs[d] = mass on degree d; probs[0] == 0.
    probs: Vec<f64>,
    /// Cumulative masses over degrees 1..=dmax, for sampling.
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    /// Build from (degree, mass) pairs. Degrees must be >= 1 and distinct.
    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self, DegreeError> {
        let dmax = pairs
            .iter()
            .filter(|(_, p)| *p != 0.0)
            .map(|(d, _)| *d)
            .max()
            .ok_or(DegreeError::Empty)?;
        let mut probs = vec![0.0; dmax + 1];
        for &(d, p) in pairs {
            if d == 0 && p != 0.0 {
                return Err(DegreeError::DegreeZero);
            }
            if p < 0.0 {
                return Err(DegreeError::Negative { degree: d, mass: p });
            }
            if d <= dmax {
                probs[d] += p;
            }
        }
        Self::from_mass_vector(probs, MASS_SUM_TOL)
    }

    /// Build from a vector of masses for degrees 1, 2, 3, ... in order.
    pub fn from_degree_one_masses(masses: &[f64]) -> Result<Self, DegreeError> {
        let mut probs = Vec::with_capacity(masses.len() + 1);
        probs.push(0.0);
        probs.extend_from_slice(masses);
        Self::from_mass_vector(probs, MASS_SUM_TOL)
    }

    fn from_mass_vector(mut probs: Vec<f64>, tol: f64) -> Result<Self, DegreeError> {
        if !probs.is_empty() && probs[0] != 0.0 {
            return Err(DegreeError::DegreeZero);
        }
        for (d, &p) in probs.iter().enumerate() {
            if p < 0.0 || !p.is_finite() {
                return Err(DegreeError::Negative { degree: d, mass: p });
            }
        }
        while probs.last() == Some(&0.0) {
            probs.pop();
        }
        if probs.len() < 2 {
            return Err(DegreeError::Empty);
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(DegreeError::SumNotOne { sum });
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        let mut cdf = Vec::with_capacity(probs.len() - 1);
        let mut acc = 0.0;
        for &p in &probs[1..] {
            acc += p;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Ok(Self { probs, cdf })
    }

    /// Ideal soliton for k source symbols: mass 1/k on degree 1 and
    /// 1/(d(d-1)) on degrees 2..=k.
    pub fn ideal_soliton(k: usize) -> Self {
        assert!(k >= 1);
        let mut probs = vec![0.0; k + 1];
        probs[1] = 1.0 / k as f64;
        for d in 2..=k {
            probs[d] = 1.0 / (d as f64 * (d as f64 - 1.0));
        }
        Self::from_mass_vector(probs, 1e-9).expect("ideal soliton is a distribution")
    }

    /// Robust soliton: mixture of the ideal soliton with the spike/boost
    /// term tau, normalized by beta. The spike sits at round(k/(R-1)),
    /// clamped into [1, k].
    pub fn robust_soliton(params: &RsdParams) -> Result<Self, DegreeError> {
        let k = params.k;
        assert!(k >= 1);
        let r = params.ripple_size();
        if !(r > 1.0) || !r.is_finite() {
            return Err(DegreeError::InvalidSolitonParams { r });
        }
        let spike = ((k as f64 / (r - 1.0)).round() as usize).clamp(1, k);
        let ideal = Self::ideal_soliton(k);
        let mut masses = vec![0.0; k + 1];
        for d in 1..=k {
            let tau = if d < spike {
                r / (d as f64 * k as f64)
            } else if d == spike {
                r * (r / params.delta).ln() / k as f64
            } else {
                0.0
            };
            masses[d] = ideal.prob(d) + tau;
        }
        let beta: f64 = masses.iter().sum();
        for m in masses.iter_mut() {
            *m /= beta;
        }
        Self::from_mass_vector(masses, 1e-9)
    }

    /// Robust soliton truncated at dmax: masses above dmax are folded into
    /// the dmax bucket.
    pub fn truncated_robust_soliton(
        params: &RsdParams,
        dmax: usize,
    ) -> Result<Self, DegreeError> {
        assert!(dmax >= 1);
        let full = Self::robust_soliton(params)?;
        Ok(full.clamped_to(dmax))
    }

    /// Fold all mass above `dmax` onto `dmax`. This mirrors what the sparse
    /// encoder does when a distribution is used with fewer variables than its
    /// top degree, so analyses stay in step with the sampled columns.
    pub fn clamped_to(&self, dmax: usize) -> Self {
        assert!(dmax >= 1);
        let mut masses = vec![0.0; dmax.min(self.max_degree()) + 1];
        for d in 1..=self.max_degree() {
            masses[d.min(dmax)] += self.prob(d);
        }
        Self::from_mass_vector(masses, 1e-9).expect("clamping preserves total mass")
    }

    /// The standardized ten-mass table used by the deployed raptor codes,
    /// with exact dyadic masses (numerators over 2^20). The popular
    /// four-decimal rendering {1: 0.0098, 2: 0.4590, 3: 0.2110, 4: 0.1134,
    /// 10: 0.1113, 11: 0.0799, 40: 0.0156} is this table rounded.
    pub fn standardized_raptor() -> Self {
        const NUM: [(usize, f64); 7] = [
            (1, 10241.0),
            (2, 481341.0),
            (3, 221212.0),
            (4, 118901.0),
            (10, 116751.0),
            (11, 83743.0),
            (40, 16387.0),
        ];
        const DEN: f64 = (1u32 << 20) as f64;
        let mut masses = vec![0.0; 41];
        for &(d, n) in &NUM {
            masses[d] = n / DEN;
        }
        Self::from_mass_vector(masses, 0.0).expect("table sums to exactly 1")
    }

    /// Heavier-tailed reference distribution (mean about 5.82, degrees up to
    /// 66) used alongside the standardized table in ensemble studies. The
    /// published four-decimal masses sum to 1.0001, so they are renormalized.
    pub fn heavy_tail_reference() -> Self {
        const TABLE: [(usize, f64); 11] = [
            (1, 0.0048),
            (2, 0.4965),
            (3, 0.1669),
            (4, 0.0734),
            (5, 0.0822),
            (8, 0.0575),
            (9, 0.036),
            (18, 0.0012),
            (19, 0.0543),
            (65, 0.0182),
            (66, 0.0091),
        ];
        let total: f64 = TABLE.iter().map(|&(_, p)| p).sum();
        let pairs: Vec<_> = TABLE.iter().map(|&(d, p)| (d, p / total)).collect();
        Self::from_pairs(&pairs).expect("normalized table is a distribution")
    }

    /// Binomial reference: degree of a column whose k coefficients are
    /// i.i.d. nonzero with probability p, conditioned on being nonzero.
    pub fn binomial_truncated(k: usize, p: f64) -> Result<Self, DegreeError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DegreeError::InvalidBinomialP { p });
        }
        let mut masses = vec![0.0; k + 1];
        for d in 1..=k {
            masses[d] = ln_binomial_pmf(k as u64, d as u64, p).exp();
        }
        let sum: f64 = masses.iter().sum();
        for m in masses.iter_mut() {
            *m /= sum;
        }
        Self::from_mass_vector(masses, 1e-9)
    }

    /// Binomial reference at p = 1/2: the degree profile of uniformly random
    /// binary columns, conditioned on being nonzero.
    pub fn binomial_half(k: usize) -> Self {
        Self::binomial_truncated(k, 0.5).expect("p = 1/2 is valid")
    }

    pub fn max_degree(&self) -> usize {
        self.probs.len() - 1
    }

    /// Mass on degree d (0 outside the support range).
    #[inline]
    pub fn prob(&self, d: usize) -> f64 {
        self.probs.get(d).copied().unwrap_or(0.0)
    }

    /// Masses indexed by degree; entry 0 is always 0.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// (degree, mass) pairs with positive mass, ascending.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(d, &p)| (d, p))
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(d, &p)| d as f64 * p)
            .sum()
    }

    /// Evaluate the generating polynomial sum_d prob(d) x^d.
    pub fn poly_eval(&self, x: f64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(d, &p)| p * x.powi(d as i32))
            .sum()
    }

    /// Draw a degree. Deterministic given the RNG state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        (idx + 1).min(self.max_degree())
    }

    /// Serialize as "degree mass" lines (positive masses only, ascending).
    pub fn to_text(&self) -> String {
        let mut s = String::from("# degree mass\n");
        for (d, p) in self.support() {
            let _ = writeln!(s, "{d} {p}");
        }
        s
    }

    /// Parse the `to_text` format: '#' starts a comment, each data line is
    /// "degree mass". Masses must sum to 1 within a 1e-9 tolerance and are
    /// renormalized exactly.
    pub fn parse_text(text: &str) -> Result<Self, DegreeError> {
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(dtok), Some(ptok), None) = (it.next(), it.next(), it.next()) else {
                return Err(DegreeError::Parse(format!(
                    "line {}: expected 'degree mass'",
                    lineno + 1
                )));
            };
            let d: usize = dtok.parse().map_err(|e| {
                DegreeError::Parse(format!("line {}: bad degree: {e}", lineno + 1))
            })?;
            let p: f64 = ptok.parse().map_err(|e| {
                DegreeError::Parse(format!("line {}: bad mass: {e}", lineno + 1))
            })?;
            if pairs.iter().any(|&(d0, _)| d0 == d) {
                return Err(DegreeError::Parse(format!(
                    "line {}: duplicate degree {d}",
                    lineno + 1
                )));
            }
            pairs.push((d, p));
        }
        if pairs.is_empty() {
            return Err(DegreeError::Empty);
        }
        let dmax = pairs.iter().map(|&(d, _)| d).max().unwrap();
        let mut probs = vec![0.0; dmax + 1];
        for &(d, p) in &pairs {
            if d == 0 && p != 0.0 {
                return Err(DegreeError::DegreeZero);
            }
            if p < 0.0 {
                return Err(DegreeError::Negative { degree: d, mass: p });
            }
            probs[d] = p;
        }
        Self::from_mass_vector(probs, FILE_SUM_TOL)
    }
}
