//! Distance spectra: exact and ensemble-average weight enumerators, the
//! asymptotic growth rate of a precode + sparse-generator cascade, and the
//! rate region where the typical minimum distance grows linearly with length.

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::degree::DegreeDistribution;
use crate::numeric::{binary_entropy, golden_section_max, ln_binomial, log_sum_exp, KahanSum};

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error("rate pair ({r_i}, {r_o}) must lie in (0,1] x (0,1]")]
    InvalidRates { r_i: f64, r_o: f64 },
    #[error(
        "inner rate times length is {product:.4}, too far from an integer intermediate count; \
         round to {lo} or {hi}, or pass explicit sizes"
    )]
    AmbiguousIntermediateCount { product: f64, lo: usize, hi: usize },
    #[error("degree distribution reaches degree {dmax} but only {h} intermediate symbols exist")]
    DegreeExceedsLength { dmax: usize, h: usize },
    #[error("sizes must satisfy n >= 1 and h >= dim >= 0, got n={n}, h={h}, dim={dim}")]
    InvalidSizes { n: usize, h: usize, dim: usize },
    #[error("parity width {t} outside the exactly representable range 2..=7")]
    ParityWidthUnsupported { t: u32 },
    #[error("cannot expurgate below weight {d_s}: short-word mass {theta:.4} is not below 1/2")]
    ExpurgationInfeasible { d_s: usize, theta: f64 },
}

/// Expected codeword multiplicities A_0..A_n, stored as base-2 logarithms so
/// that lengths in the thousands do not overflow. `coefficient` gives the
/// linear view (possibly infinite for astronomically large mid-weights).
#[derive(Debug, Clone)]
pub struct WeightEnumerator {
    log2_coeffs: Vec<f64>,
}

impl WeightEnumerator {
    pub fn from_linear(coeffs: &[f64]) -> Self {
        assert!(!coeffs.is_empty());
        assert!(coeffs.iter().all(|&a| a >= 0.0));
        Self {
            log2_coeffs: coeffs.iter().map(|&a| a.log2()).collect(),
        }
    }

    pub fn from_log2(log2_coeffs: Vec<f64>) -> Self {
        assert!(!log2_coeffs.is_empty());
        Self { log2_coeffs }
    }

    /// Block length n (the largest weight tracked).
    pub fn length(&self) -> usize {
        self.log2_coeffs.len() - 1
    }

    pub fn coefficient(&self, d: usize) -> f64 {
        self.log2_coeffs[d].exp2()
    }

    pub fn log2_coefficient(&self, d: usize) -> f64 {
        self.log2_coeffs[d]
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.log2_coeffs.iter().map(|&l| l.exp2()).collect()
    }

    /// A_0 − 1: the expected number of spurious zero-weight words. Evaluated
    /// from the stored logarithm so tiny excesses keep full precision.
    pub fn zero_excess(&self) -> f64 {
        (self.log2_coeffs[0] * LN_2).exp_m1()
    }

    pub fn total(&self) -> f64 {
        let mut sum = KahanSum::new();
        for &l in &self.log2_coeffs {
            sum.add(l.exp2());
        }
        sum.value()
    }
}

/// Pascal row n as exact 128-bit integers; n must stay below 128 so the
/// central coefficient fits.
pub(crate) fn pascal_row(n: usize) -> Vec<i128> {
    let mut row = vec![1i128];
    for _ in 0..n {
        let mut next = vec![1i128; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    row
}

/// Exact weight enumerator of the (2^t − 1, 2^t − 1 − t) single-error-correcting
/// code, by the classical recursion (i+1)·A_{i+1} = C(n,i) − A_i − (n−i+1)·A_{i−1}.
pub fn hamming_weight_enumerator(t: u32) -> Result<Vec<i128>, SpectraError> {
    if !(2..=7).contains(&t) {
        return Err(SpectraError::ParityWidthUnsupported { t });
    }
    let n = (1usize << t) - 1;
    let binom = pascal_row(n);
    let mut a = vec![0i128; n + 1];
    a[0] = 1;
    for i in 0..n {
        let prev = if i == 0 { 0 } else { a[i - 1] };
        let num = binom[i] - a[i] - (n as i128 - i as i128 + 1) * prev;
        debug_assert!(num % (i as i128 + 1) == 0);
        a[i + 1] = num / (i as i128 + 1);
    }
    Ok(a)
}

pub fn hamming_spectrum(t: u32) -> Result<WeightEnumerator, SpectraError> {
    let a = hamming_weight_enumerator(t)?;
    let linear: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    Ok(WeightEnumerator::from_linear(&linear))
}

/// Ensemble-average weight enumerator of an (h, dim) code whose parity-check
/// matrix is drawn uniformly over the order-q field: Ā_l = C(h,l)(q−1)^l·q^{−(h−dim)}
/// for l ≥ 1, and exactly one zero-weight word.
pub fn linear_random_spectrum(h: usize, dim: usize, q: u32) -> WeightEnumerator {
    assert!(h >= dim && q >= 2);
    let deficit = (h - dim) as f64;
    let mut log2 = Vec::with_capacity(h + 1);
    log2.push(0.0);
    for l in 1..=h {
        let ln = ln_binomial(h as u64, l as u64) + l as f64 * ((q - 1) as f64).ln()
            - deficit * (q as f64).ln();
        log2.push(ln / LN_2);
    }
    WeightEnumerator::from_log2(log2)
}

/// Probability that one sparse-generator output bit equals 1 given that the
/// h-symbol input word has weight l: each degree-j output XORs a uniformly
/// chosen j-subset, and the subset must hit the support an odd number of times.
pub fn lt_one_probability(dist: &DegreeDistribution, h: usize, l: usize) -> f64 {
    assert!(l <= h);
    let mut sum = KahanSum::new();
    for (j, pj) in dist.support() {
        if pj == 0.0 {
            continue;
        }
        let ln_denom = ln_binomial(h as u64, j as u64);
        let mut i = 1;
        while i <= l.min(j) {
            if j - i <= h - l {
                let ln_term = ln_binomial(l as u64, i as u64)
                    + ln_binomial((h - l) as u64, (j - i) as u64)
                    - ln_denom;
                sum.add(pj * ln_term.exp());
            }
            i += 2;
        }
    }
    sum.value().clamp(0.0, 1.0)
}

/// Same quantity summed from the complementary hypergeometric form (counting
/// over the output's neighbor set instead of the input support).
#[cfg(test)]
fn lt_one_probability_neighbor_form(dist: &DegreeDistribution, h: usize, l: usize) -> f64 {
    assert!(l <= h);
    let mut sum = KahanSum::new();
    for (j, pj) in dist.support() {
        if pj == 0.0 {
            continue;
        }
        let ln_denom = ln_binomial(h as u64, l as u64);
        let mut i = 1;
        while i <= l.min(j) {
            if l - i <= h - j {
                let ln_term = ln_binomial(j as u64, i as u64)
                    + ln_binomial((h - j) as u64, (l - i) as u64)
                    - ln_denom;
                sum.add(pj * ln_term.exp());
            }
            i += 2;
        }
    }
    sum.value().clamp(0.0, 1.0)
}

/// Expected weight enumerator of the cascade of a random (h, dim) binary
/// precode with n independently drawn sparse-generator outputs, by explicit
/// sizes. The zero coefficient counts the true zero word plus the expected
/// number of nonzero inputs that map to the all-zero output.
pub fn raptor_ensemble_spectrum_sizes(
    dist: &DegreeDistribution,
    n: usize,
    h: usize,
    dim: usize,
) -> Result<WeightEnumerator, SpectraError> {
    if n == 0 || dim > h {
        return Err(SpectraError::InvalidSizes { n, h, dim });
    }
    if dist.max_degree() > h {
        return Err(SpectraError::DegreeExceedsLength {
            dmax: dist.max_degree(),
            h,
        });
    }
    let deficit = (h - dim) as f64;
    let mut ln_p = Vec::with_capacity(h + 1);
    let mut ln_1mp = Vec::with_capacity(h + 1);
    let mut ln_choose = Vec::with_capacity(h + 1);
    ln_p.push(f64::NEG_INFINITY);
    ln_1mp.push(0.0);
    ln_choose.push(0.0);
    for l in 1..=h {
        let p = lt_one_probability(dist, h, l);
        debug_assert!((0.0..=1.0).contains(&p));
        ln_p.push(if p > 0.0 { p.ln() } else { f64::NEG_INFINITY });
        ln_1mp.push(if p < 1.0 {
            (-p).ln_1p()
        } else {
            f64::NEG_INFINITY
        });
        ln_choose.push(ln_binomial(h as u64, l as u64));
    }

    let mut log2 = vec![f64::NEG_INFINITY; n + 1];
    let mut terms = Vec::with_capacity(h);
    // Zero weight: 1 + q^{-(h-dim)} * sum_l C(h,l) (1-p_l)^n, kept accurate for
    // excesses far below 1.
    terms.clear();
    for l in 1..=h {
        terms.push(ln_choose[l] + n as f64 * ln_1mp[l]);
    }
    let ln_excess = -deficit * LN_2 + log_sum_exp(&terms);
    log2[0] = if ln_excess <= 0.0 {
        ln_excess.exp().ln_1p() / LN_2
    } else {
        (ln_excess + (-ln_excess).exp().ln_1p()) / LN_2
    };

    for d in 1..=n {
        terms.clear();
        for l in 1..=h {
            let t = ln_choose[l] + d as f64 * ln_p[l] + (n - d) as f64 * ln_1mp[l];
            if t.is_finite() {
                terms.push(t);
            }
        }
        if terms.is_empty() {
            continue;
        }
        let ln_a = ln_binomial(n as u64, d as u64) - deficit * LN_2 + log_sum_exp(&terms);
        log2[d] = ln_a / LN_2;
    }
    Ok(WeightEnumerator::from_log2(log2))
}

/// Rate pair of the cascade: `r_i` for the sparse inner stage (h inputs to n
/// outputs), `r_o` for the precode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePair {
    pub r_i: f64,
    pub r_o: f64,
}

impl RatePair {
    pub fn new(r_i: f64, r_o: f64) -> Result<Self, SpectraError> {
        if !(r_i > 0.0 && r_i <= 1.0 && r_o > 0.0 && r_o <= 1.0) {
            return Err(SpectraError::InvalidRates { r_i, r_o });
        }
        Ok(Self { r_i, r_o })
    }

    pub fn overall(&self) -> f64 {
        self.r_i * self.r_o
    }
}

/// Rate-based entry point: h = round(r_i·n) and dim = round(r_o·h), rejecting
/// only roundings that move the product by more than 0.1.
pub fn raptor_ensemble_spectrum(
    dist: &DegreeDistribution,
    rates: RatePair,
    n: usize,
) -> Result<WeightEnumerator, SpectraError> {
    let product = rates.r_i * n as f64;
    let h = product.round();
    if (product - h).abs() > 0.1 {
        return Err(SpectraError::AmbiguousIntermediateCount {
            product,
            lo: product.floor() as usize,
            hi: product.ceil() as usize,
        });
    }
    let h = h as usize;
    let dim = (rates.r_o * h as f64).round() as usize;
    raptor_ensemble_spectrum_sizes(dist, n, h, dim)
}

/// Asymptotic probability that an output bit equals 1 when the input weight
/// fraction is λ: ½·Σ_j Ω_j (1 − (1−2λ)^j). Small λ goes through log1p/expm1
/// so the leading λ·Ω̄ behaviour keeps full relative precision.
pub fn asymptotic_one_probability(dist: &DegreeDistribution, lambda: f64) -> f64 {
    let mut sum = KahanSum::new();
    if lambda < 0.25 {
        let base = (-2.0 * lambda).ln_1p();
        for (j, pj) in dist.support() {
            sum.add(pj * -(j as f64 * base).exp_m1());
        }
    } else {
        for (j, pj) in dist.support() {
            sum.add(pj * (1.0 - (1.0 - 2.0 * lambda).powi(j as i32)));
        }
    }
    (0.5 * sum.value()).clamp(0.0, 1.0)
}

fn asymptotic_one_probability_slope(dist: &DegreeDistribution, lambda: f64) -> f64 {
    let mut sum = KahanSum::new();
    for (j, pj) in dist.support() {
        sum.add(pj * j as f64 * (1.0 - 2.0 * lambda).powi(j as i32 - 1));
    }
    sum.value()
}

/// Per-output exponent of input weight fraction λ at output weight fraction δ:
/// r_i·H_b(λ) + δ·log2 ϱ(λ) + (1−δ)·log2(1−ϱ(λ)).
pub fn inner_weight_exponent(dist: &DegreeDistribution, r_i: f64, delta: f64, lambda: f64) -> f64 {
    let rho = asymptotic_one_probability(dist, lambda);
    let mut v = r_i * binary_entropy(lambda);
    if delta > 0.0 {
        v += delta * rho.log2();
    }
    if delta < 1.0 {
        v += (1.0 - delta) * (1.0 - rho).log2();
    }
    v
}

fn inner_exponent_slope(dist: &DegreeDistribution, r_i: f64, delta: f64, lambda: f64) -> f64 {
    let rho = asymptotic_one_probability(dist, lambda);
    let slope = asymptotic_one_probability_slope(dist, lambda);
    r_i * ((1.0 - lambda) / lambda).log2() + slope / LN_2 * (delta - rho) / (rho * (1.0 - rho))
}

fn has_even_mass(dist: &DegreeDistribution) -> bool {
    dist.support().any(|(j, pj)| j % 2 == 0 && pj > 0.0)
}

/// Maximize the inner exponent over the admissible λ domain: a dense log-grid
/// pass, golden-section refinement restarted on three nested brackets, a
/// stationarity polish on the slope, and the λ=1 endpoint when even-degree
/// mass keeps the exponent finite there.
pub fn maximize_inner_exponent(dist: &DegreeDistribution, r_i: f64, delta: f64) -> (f64, f64) {
    const GRID: usize = 600;
    let t_lo = (1e-12f64).ln();
    let t_hi = (1.0 - 1e-9f64).ln();
    let eval = |t: f64| inner_weight_exponent(dist, r_i, delta, t.exp());

    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let t = t_lo + (t_hi - t_lo) * i as f64 / GRID as f64;
        let v = eval(t);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let step = (t_hi - t_lo) / GRID as f64;
    let grid_t = |i: usize| t_lo + step * i as f64;

    let mut best = (grid_t(best_i).exp(), best_v);
    for width in [1usize, 2, 4] {
        let a = grid_t(best_i.saturating_sub(width));
        let b = grid_t((best_i + width).min(GRID));
        let (t_star, v) = golden_section_max(eval, a, b, 1e-10, 400);
        if v > best.1 {
            best = (t_star.exp(), v);
        }
    }

    // Polish to a stationary point of the slope when one is bracketed nearby.
    let (lambda, _) = best;
    let (mut a, mut b) = (lambda * 0.98, (lambda * 1.02).min(1.0 - 1e-9));
    let (sa, sb) = (
        inner_exponent_slope(dist, r_i, delta, a),
        inner_exponent_slope(dist, r_i, delta, b),
    );
    if sa > 0.0 && sb < 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            let s = inner_exponent_slope(dist, r_i, delta, mid);
            if s.abs() < 1e-9 || (b - a) < 1e-17 {
                break;
            }
            if s > 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let mid = 0.5 * (a + b);
        let v = inner_weight_exponent(dist, r_i, delta, mid);
        if v >= best.1 {
            best = (mid, v);
        }
    }

    if has_even_mass(dist) {
        let v = inner_weight_exponent(dist, r_i, delta, 1.0);
        if v > best.1 {
            best = (1.0, v);
        }
    }
    best
}

/// Growth rate of the ensemble-average spectrum at output weight fraction δ:
/// H_b(δ) − r_i(1−r_o) + max_λ inner exponent.
pub fn growth_rate(dist: &DegreeDistribution, rates: RatePair, delta: f64) -> f64 {
    let (_, fmax) = maximize_inner_exponent(dist, rates.r_i, delta);
    binary_entropy(delta) - rates.r_i * (1.0 - rates.r_o) + fmax
}

/// Derivative of the growth rate, from the envelope of the inner maximization:
/// log2((1−δ)/δ) + log2(ϱ(λ*)/(1−ϱ(λ*))). Independent of the precode rate.
pub fn growth_rate_derivative(dist: &DegreeDistribution, r_i: f64, delta: f64) -> f64 {
    let (lambda, _) = maximize_inner_exponent(dist, r_i, delta);
    let rho = asymptotic_one_probability(dist, lambda);
    ((1.0 - delta) / delta).log2() + (rho / (1.0 - rho)).log2()
}

#[derive(Debug, Clone, Copy)]
pub struct GrowthPoint {
    pub delta: f64,
    pub growth: f64,
    pub maximizer: f64,
}

#[derive(Debug, Clone)]
pub struct GrowthCurve {
    pub points: Vec<GrowthPoint>,
}

impl GrowthCurve {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("delta\tgrowth\tmaximizer\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.10}\t{:.10}\t{:.10}\n",
                p.delta, p.growth, p.maximizer
            ));
        }
        out
    }
}

pub fn growth_curve(dist: &DegreeDistribution, rates: RatePair, deltas: &[f64]) -> GrowthCurve {
    let points = deltas
        .iter()
        .map(|&delta| {
            let (maximizer, fmax) = maximize_inner_exponent(dist, rates.r_i, delta);
            GrowthPoint {
                delta,
                growth: binary_entropy(delta) - rates.r_i * (1.0 - rates.r_o) + fmax,
                maximizer,
            }
        })
        .collect();
    GrowthCurve { points }
}

/// Membership in the positive typical-distance region, with the signed margin
/// r_i(1−r_o) − max_λ{r_i·H_b(λ) + log2(1−ϱ(λ))}. The max term is the inner
/// exponent at δ = 0, i.e. the exponent of inputs mapping to the zero output.
pub fn region_membership(dist: &DegreeDistribution, rates: RatePair) -> (bool, f64) {
    let (_, zero_exponent) = maximize_inner_exponent(dist, rates.r_i, 0.0);
    let margin = rates.r_i * (1.0 - rates.r_o) - zero_exponent;
    (margin > 0.0, margin)
}

/// Infimum output-weight fraction with positive growth: zero outside the
/// region, otherwise the unique sign change of G on (0, 1/2].
pub fn typical_distance_fraction(dist: &DegreeDistribution, rates: RatePair) -> f64 {
    let (inside, _) = region_membership(dist, rates);
    if !inside {
        return 0.0;
    }
    let g = |delta: f64| growth_rate(dist, rates, delta);
    let mut lo = 1e-12;
    let mut hi = 0.5;
    debug_assert!(g(hi) > 0.0);
    if g(lo) >= 0.0 {
        return 0.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The root of H_b(x) − x on (0,1) determines where the closed-form outer
/// bound on the precode rate stops binding; the bound itself only depends on
/// the mean output degree.
pub fn outer_rate_root() -> f64 {
    let f = |x: f64| binary_entropy(x) - x;
    let mut lo = 0.5;
    let mut hi = 0.999;
    debug_assert!(f(lo) > 0.0 && f(hi) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    1.0 - 0.5 * (lo + hi)
}

/// Outer bound on the positive-distance region: r_i ≤ min(φ(r_o), 1/r_o) where
/// φ uses the mean output degree once r_o exceeds the closed-form root.
pub fn region_outer_bound(mean_degree: f64, rates: RatePair) -> bool {
    assert!(mean_degree > 0.0);
    let r_o = rates.r_o;
    let star = outer_rate_root();
    let phi = if r_o > star {
        mean_degree * (1.0 / r_o).log2() / (binary_entropy(1.0 - r_o) - (1.0 - r_o))
    } else {
        1.0 / r_o
    };
    rates.r_i <= phi.min(1.0 / r_o)
}

/// Largest precode rate keeping a fixed overall rate inside the region, found
/// by bisecting the membership margin along the isorate curve r_i = R/r_o.
pub fn region_boundary_outer_rate(dist: &DegreeDistribution, overall_rate: f64) -> Option<f64> {
    assert!(overall_rate > 0.0 && overall_rate < 1.0);
    let margin = |r_o: f64| {
        let rates = RatePair {
            r_i: overall_rate / r_o,
            r_o,
        };
        region_membership(dist, rates).1
    };
    let mut lo = overall_rate;
    let mut hi = 1.0 - 1e-9;
    if margin(lo) <= 0.0 {
        return None;
    }
    if margin(hi) > 0.0 {
        return Some(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Largest inner rate keeping (r_i, r_o) inside the region for a fixed
/// precode rate; `Some(1.0)` when the whole axis is inside.
pub fn region_boundary_inner_rate(dist: &DegreeDistribution, r_o: f64) -> Option<f64> {
    assert!(r_o > 0.0 && r_o < 1.0);
    let margin = |r_i: f64| region_membership(dist, RatePair { r_i, r_o }).1;
    let mut lo = 1e-3;
    let mut hi = 1.0;
    if margin(lo) <= 0.0 {
        return None;
    }
    if margin(hi) > 0.0 {
        return Some(1.0);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Largest d such that the expected number of nonzero words of weight at most
/// d (plus any zero-word excess) stays below 1/2; at least half the ensemble
/// then has minimum distance beyond d. Zero when the excess alone crosses it.
pub fn typical_min_distance(we: &WeightEnumerator) -> usize {
    let mut mass = we.zero_excess();
    if mass > 0.5 {
        return 0;
    }
    let mut d = 0;
    while d < we.length() {
        let next = mass + we.coefficient(d + 1);
        if next >= 0.5 {
            break;
        }
        mass = next;
        d += 1;
    }
    d
}

/// Keep only the at-least-half fraction of codes with minimum distance above
/// d_s: coefficients up to d_s vanish, the rest at most double.
pub fn expurgate(we: &WeightEnumerator, d_s: usize) -> Result<WeightEnumerator, SpectraError> {
    let mut theta = we.zero_excess();
    for d in 1..=d_s.min(we.length()) {
        theta += we.coefficient(d);
    }
    if !(theta < 0.5) {
        return Err(SpectraError::ExpurgationInfeasible { d_s, theta });
    }
    let mut log2 = vec![f64::NEG_INFINITY; we.length() + 1];
    log2[0] = 0.0;
    for d in (d_s + 1)..=we.length() {
        log2[d] = we.log2_coefficient(d) + 1.0;
    }
    Ok(WeightEnumerator::from_log2(log2))
}
