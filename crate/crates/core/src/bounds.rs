//! Closed-form failure-probability bounds: the two-sided random-fountain
//! bracket, the coverage lower bound for sparse-generator fountains, the
//! Krawtchouk-kernel upper bounds for precoded fountains (deterministic and
//! ensemble-average outer codes), classical block-code bounds over the
//! erasure channel, bounds and weight enumerators for parallel block/fountain
//! concatenations, and the multicast transmission-overhead model.

use crate::degree::DegreeDistribution;
use crate::numeric::{ln_binomial, ln_binomial_pmf, log_sum_exp, DoubleDouble, KahanSum};
use crate::spectra::{pascal_row, WeightEnumerator};
use std::f64::consts::LN_2;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("the split weight-enumerator closed form supports t in 3..=7, got {t}")]
    CowefWidthUnsupported { t: u32 },
}

/// Two-sided bracket for a dense random-generator fountain over a field of
/// order `q` at absolute receiver overhead `delta`:
/// q^(-delta-1) <= Pf < q^(-delta) / (q-1).
pub fn lrfc_bounds(q: u32, delta: u32) -> (f64, f64) {
    assert!(q >= 2);
    let q = q as f64;
    let lower = q.powi(-(delta as i32) - 1);
    let upper = q.powi(-(delta as i32)) / (q - 1.0);
    (lower, upper)
}

/// How a numerically delicate bound value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericStatus {
    /// Compensated f64 summation resolved the value.
    Stable,
    /// The f64 pass drowned in cancellation; an extended-precision pass
    /// resolved the value.
    Refined,
    /// Even extended precision cannot resolve the alternating sum; the value
    /// is pessimistically saturated to 1.
    Saturated,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundEstimate {
    pub value: f64,
    pub status: NumericStatus,
}

/// Per-weight avoidance probabilities S_i = sum_d Omega_d C(k-i,d)/C(k,d),
/// streamed incrementally over i. S_i is the probability that one output
/// column misses a fixed set of i input symbols entirely.
struct AvoidanceSeries {
    k: usize,
    degrees: Vec<usize>,
    masses: Vec<f64>,
    ratios: Vec<f64>,
    i: usize,
}

impl AvoidanceSeries {
    fn new(dist: &DegreeDistribution, k: usize) -> Self {
        let (degrees, masses): (Vec<usize>, Vec<f64>) = dist.support().unzip();
        Self { k, ratios: vec![1.0; degrees.len()], degrees, masses, i: 0 }
    }

    /// Advance to the next i and return S_i.
    fn next_value(&mut self) -> f64 {
        self.i += 1;
        let n = self.k - self.i + 1;
        let mut s = KahanSum::new();
        for (slot, &d) in self.degrees.iter().enumerate() {
            self.ratios[slot] *= (n as f64 - d as f64).max(0.0) / n as f64;
            s.add(self.masses[slot] * self.ratios[slot]);
        }
        s.value().max(0.0)
    }
}

/// Lower bound on the ML decoding failure probability of a binary sparse
/// fountain with k inputs once m output symbols are held: the exact
/// probability that some input symbol appears in none of the m columns,
/// P = sum_i (-1)^(i+1) C(k,i) S_i^m.
///
/// The alternating terms can dwarf the result; the estimate reports whether
/// plain compensated summation sufficed, an extended-precision pass was
/// needed, or the sum is unresolvable and saturated to 1.
pub fn lt_ml_lower_bound_with_receipts(
    dist: &DegreeDistribution,
    k: usize,
    m: usize,
) -> BoundEstimate {
    assert!(k >= 1, "need at least one input symbol");
    assert!(
        dist.max_degree() <= k,
        "clamp the distribution to k before bounding (see DegreeDistribution::clamped_to)"
    );
    if m == 0 {
        return BoundEstimate { value: 1.0, status: NumericStatus::Stable };
    }

    // First pass: terms via exp(ln), compensated alternating sum.
    let mut series = AvoidanceSeries::new(dist, k);
    let mut sum = KahanSum::new();
    let mut sum_abs = 0.0f64;
    let mut overflow = false;
    for i in 1..=k {
        let s = series.next_value();
        if s <= 0.0 {
            break;
        }
        let ln_term = ln_binomial(k as u64, i as u64) + m as f64 * s.ln();
        if ln_term > 700.0 {
            overflow = true;
            break;
        }
        let term = ln_term.exp();
        sum.add(if i % 2 == 1 { term } else { -term });
        sum_abs += term;
    }
    if !overflow {
        let value = sum.value();
        let noise = 1e-15 * sum_abs;
        if value >= noise && value >= -1e-9 {
            return BoundEstimate { value: value.clamp(0.0, 1.0), status: NumericStatus::Stable };
        }
    } else {
        // Terms beyond f64 range: extended precision cannot cancel them either.
        return BoundEstimate { value: 1.0, status: NumericStatus::Saturated };
    }

    // Extended-precision pass: double-double ratios, powers, and binomials.
    let (degrees, masses): (Vec<usize>, Vec<f64>) = dist.support().unzip();
    let mut ratios = vec![DoubleDouble::from_f64(1.0); degrees.len()];
    let mut choose = DoubleDouble::from_f64(1.0); // C(k, i), updated per i
    let mut sum = DoubleDouble::zero();
    let mut sum_abs = 0.0f64;
    for i in 1..=k {
        let n = (k - i + 1) as f64;
        let mut s = DoubleDouble::zero();
        for (slot, &d) in degrees.iter().enumerate() {
            ratios[slot] = ratios[slot].mul_f64((n - d as f64).max(0.0)).div_f64(n);
            s = s.add(ratios[slot].mul_f64(masses[slot]));
        }
        choose = choose.mul_f64(n).div_f64(i as f64);
        if s.to_f64() <= 0.0 {
            break;
        }
        let term = choose.mul(s.powi(m as u64));
        let t = term.to_f64();
        if !t.is_finite() {
            return BoundEstimate { value: 1.0, status: NumericStatus::Saturated };
        }
        sum = sum.add(if i % 2 == 1 { term } else { term.mul_f64(-1.0) });
        sum_abs += t.abs();
    }
    let value = sum.to_f64();
    let noise = 1e-30 * sum_abs;
    if value >= noise && value >= -1e-9 {
        BoundEstimate { value: value.clamp(0.0, 1.0), status: NumericStatus::Refined }
    } else {
        BoundEstimate { value: 1.0, status: NumericStatus::Saturated }
    }
}

/// Same bound with the receipt count given as relative overhead:
/// m = round(k (1 + epsilon_rel)).
pub fn lt_ml_lower_bound(
    dist: &DegreeDistribution,
    k: usize,
    epsilon_rel: f64,
) -> BoundEstimate {
    assert!(epsilon_rel >= -1.0);
    let m = (k as f64 * (1.0 + epsilon_rel)).round() as usize;
    lt_ml_lower_bound_with_receipts(dist, k, m)
}

/// Krawtchouk polynomial K_j(x; n, q) by the defining alternating sum.
pub fn krawtchouk_direct(j: usize, x: usize, n: usize, q: u32) -> f64 {
    assert!(x <= n && j <= n && q >= 2);
    let qm1 = (q - 1) as f64;
    let mut sum = KahanSum::new();
    for i in j.saturating_sub(n - x)..=j.min(x) {
        let ln = ln_binomial(x as u64, i as u64)
            + ln_binomial((n - x) as u64, (j - i) as u64)
            + (j - i) as f64 * qm1.ln();
        let term = ln.exp();
        sum.add(if i % 2 == 1 { -term } else { term });
    }
    sum.value()
}

/// Memoized table of Krawtchouk values K_j(l; h, q) for j up to a degree cap,
/// built with the three-term recurrence in j. Immutable after construction.
#[derive(Debug, Clone)]
pub struct KrawtchoukKernel {
    h: usize,
    q: u32,
    /// table[j][l] = K_j(l)
    table: Vec<Vec<f64>>,
}

impl KrawtchoukKernel {
    pub fn new(h: usize, q: u32, max_degree: usize) -> Self {
        assert!(q >= 2 && max_degree <= h);
        let qf = q as f64;
        let qm1 = qf - 1.0;
        let mut table = Vec::with_capacity(max_degree + 1);
        table.push(vec![1.0; h + 1]);
        if max_degree >= 1 {
            table.push((0..=h).map(|l| qm1 * h as f64 - qf * l as f64).collect());
        }
        for j in 2..=max_degree {
            // The recurrence in j is cheap and accurate while K_j(0) is
            // still growing. Once it decays, rounding inherited from the
            // larger earlier rows would swamp the small values, so those
            // rows use the direct sum, whose error stays proportional to
            // the row's own scale K_j(0).
            let row = if qm1 * (h - j + 1) as f64 >= j as f64 {
                let prev = &table[j - 1];
                let before = &table[j - 2];
                (0..=h)
                    .map(|l| {
                        let a = (j - 1) as f64 + qm1 * (h - j + 1) as f64 - qf * l as f64;
                        let b = qm1 * (h - j + 2) as f64;
                        (a * prev[l] - b * before[l]) / j as f64
                    })
                    .collect()
            } else {
                (0..=h).map(|l| krawtchouk_direct(j, l, h, q)).collect()
            };
            table.push(row);
        }
        Self { h, q, table }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn max_degree(&self) -> usize {
        self.table.len() - 1
    }

    pub fn value(&self, j: usize, l: usize) -> f64 {
        self.table[j][l]
    }

    /// K_j(0) = C(h,j) (q-1)^j, the normalizer of the ratio form.
    pub fn zero_value(&self, j: usize) -> f64 {
        self.table[j][0]
    }
}

/// Probability that a sum of i i.i.d. uniform nonzero field elements is zero:
/// (1/q)(1 + (-1)^i / (q-1)^(i-1)).
pub fn uniform_nonzero_sum_zero_probability(i: usize, q: u32) -> f64 {
    let qm1 = (q - 1) as f64;
    let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
    ((1.0 + sign * qm1.powi(1 - i as i32)) / q as f64).clamp(0.0, 1.0)
}

/// pi_l for l = 0..=h: the probability that one sparse output symbol over
/// F_q evaluates to zero on a fixed intermediate word of weight l, in the
/// Krawtchouk-ratio form pi_l = 1/q + (q-1)/q sum_j Omega_j K_j(l)/K_j(0).
pub fn lt_zero_probabilities(kernel: &KrawtchoukKernel, dist: &DegreeDistribution) -> Vec<f64> {
    assert!(dist.max_degree() <= kernel.max_degree());
    let q = kernel.q() as f64;
    (0..=kernel.h())
        .map(|l| {
            let mut s = KahanSum::new();
            for (j, mass) in dist.support() {
                s.add(mass * kernel.value(j, l) / kernel.zero_value(j));
            }
            (1.0 / q + (q - 1.0) / q * s.value()).clamp(0.0, 1.0)
        })
        .collect()
}

/// The same pi_l assembled from first principles: condition on the output
/// degree j and the overlap i between its support and the weight-l word
/// (hypergeometric), then apply the zero-sum kernel q_i.
pub fn lt_zero_probability_overlap(
    dist: &DegreeDistribution,
    h: usize,
    q: u32,
    l: usize,
) -> f64 {
    assert!(l <= h && dist.max_degree() <= h);
    let mut total = KahanSum::new();
    for (j, mass) in dist.support() {
        let ln_denom = ln_binomial(h as u64, j as u64);
        let mut inner = KahanSum::new();
        for i in j.saturating_sub(h - l)..=j.min(l) {
            let ln = ln_binomial(l as u64, i as u64)
                + ln_binomial((h - l) as u64, (j - i) as u64)
                - ln_denom;
            inner.add(ln.exp() * uniform_nonzero_sum_zero_probability(i, q));
        }
        total.add(mass * inner.value());
    }
    total.value().clamp(0.0, 1.0)
}

/// Union bound on the ML failure probability of a precoded fountain over F_q
/// whose outer code has weight enumerator `outer_we` (length h), once
/// m = k + delta output symbols are held:
/// Pf <= sum_l A_l pi_l^m / (q-1).
///
/// The value is a bound and may exceed 1 at small overheads; callers wanting
/// a probability clamp it. With an ensemble-average enumerator the same
/// expression bounds the ensemble-average failure probability.
pub fn raptor_ml_upper_bound(
    outer_we: &WeightEnumerator,
    dist: &DegreeDistribution,
    q: u32,
    k: usize,
    delta: usize,
) -> f64 {
    let h = outer_we.length();
    let kernel = KrawtchoukKernel::new(h, q, dist.max_degree());
    raptor_ml_upper_bound_with_kernel(outer_we, dist, &kernel, k, delta)
}

/// As `raptor_ml_upper_bound` with a prebuilt kernel, for overhead sweeps.
pub fn raptor_ml_upper_bound_with_kernel(
    outer_we: &WeightEnumerator,
    dist: &DegreeDistribution,
    kernel: &KrawtchoukKernel,
    k: usize,
    delta: usize,
) -> f64 {
    assert_eq!(outer_we.length(), kernel.h());
    let pis = lt_zero_probabilities(kernel, dist);
    let m = (k + delta) as f64;
    let ln_terms: Vec<f64> = (1..=kernel.h())
        .map(|l| outer_we.log2_coefficient(l) * LN_2 + m * pis[l].ln())
        .filter(|t| t.is_finite())
        .collect();
    (log_sum_exp(&ln_terms) - ((kernel.q() - 1) as f64).ln()).exp()
}

/// Average-failure bound for a fountain whose outer code is drawn from the
/// random parity-check ensemble with expected weight enumerator `avg_we`.
pub fn raptor_ensemble_ml_upper_bound(
    avg_we: &WeightEnumerator,
    dist: &DegreeDistribution,
    q: u32,
    k: usize,
    delta: usize,
) -> f64 {
    raptor_ml_upper_bound(avg_we, dist, q, k, delta)
}

/// Upper bound for a plain (non-precoded) sparse fountain: the precode-free
/// special case with A_l = C(k,l)(q-1)^(l-1) over length k.
pub fn lt_ml_upper_bound(dist: &DegreeDistribution, q: u32, k: usize, delta: usize) -> f64 {
    let qm1 = (q - 1) as f64;
    let log2: Vec<f64> = (0..=k)
        .map(|l| {
            if l == 0 {
                f64::NEG_INFINITY
            } else {
                (ln_binomial(k as u64, l as u64) + (l as f64 - 1.0) * qm1.ln()) / LN_2
            }
        })
        .collect();
    let we = WeightEnumerator::from_log2(log2);
    raptor_ml_upper_bound(&we, dist, q, k, delta)
}

/// Block error probability of an (n,k) MDS code over a memoryless erasure
/// channel, and a lower bound for every other (n,k) code: the probability of
/// more than n-k erasures.
pub fn singleton_bound(n: usize, k: usize, eps: f64) -> f64 {
    assert!(k <= n && (0.0..=1.0).contains(&eps));
    if eps == 0.0 {
        return 0.0;
    }
    let mut sum = KahanSum::new();
    for e in (n - k + 1)..=n {
        sum.add(ln_binomial_pmf(n as u64, e as u64, eps).exp());
    }
    sum.value().clamp(0.0, 1.0)
}

/// Upper bound on the average block error probability of random binary
/// linear codes: the MDS tail plus a 2^(-(n-k-e)) rank-deficiency term.
pub fn berlekamp_bound(n: usize, k: usize, eps: f64) -> f64 {
    assert!(k <= n && (0.0..=1.0).contains(&eps));
    if eps == 0.0 {
        return 0.0;
    }
    let mut sum = KahanSum::new();
    sum.add(singleton_bound(n, k, eps));
    for e in 1..=(n - k) {
        let ln = ln_binomial_pmf(n as u64, e as u64, eps) - ((n - k - e) as f64) * LN_2;
        sum.add(ln.exp());
    }
    sum.value().min(1.0)
}

/// Weight-enumerator upper bound on the (ensemble-average) block error
/// probability over an erasure channel: for each erasure count e, the
/// probability that some nonzero codeword hides inside the erased set,
/// capped at 1. With `include_zero_excess` the surplus of weight-0 words
/// (A_0 - 1, all-singular codes in an ensemble) is added.
pub fn di_upper_bound(
    we: &WeightEnumerator,
    k: usize,
    eps: f64,
    include_zero_excess: bool,
) -> f64 {
    let n = we.length();
    assert!(k <= n && (0.0..=1.0).contains(&eps));
    let excess = if include_zero_excess { we.zero_excess() } else { 0.0 };
    if eps == 0.0 {
        return excess.min(1.0).max(0.0);
    }
    let mut sum = KahanSum::new();
    sum.add(singleton_bound(n, k, eps));
    for e in 1..=(n - k) {
        let mut hidden = Vec::with_capacity(e);
        for w in 1..=e {
            let log2 = (ln_binomial(e as u64, w as u64) - ln_binomial(n as u64, w as u64)) / LN_2
                + we.log2_coefficient(w);
            if log2.is_finite() {
                hidden.push(log2 * LN_2);
            }
        }
        let cover = log_sum_exp(&hidden).exp().min(1.0);
        sum.add(ln_binomial_pmf(n as u64, e as u64, eps).exp() * cover);
    }
    (sum.value() + excess).max(0.0)
}

/// Probability that fewer than k of the n_c MDS-coded symbols survive the
/// channel, the event that leaves decoding to the random tail.
pub fn mds_outer_shortfall(n_c: usize, k: usize, eps: f64) -> f64 {
    assert!(k <= n_c && (0.0..=1.0).contains(&eps));
    let mut survive = KahanSum::new();
    for i in k..=n_c {
        survive.add(ln_binomial_pmf(n_c as u64, i as u64, 1.0 - eps).exp());
    }
    (1.0 - survive.value()).clamp(0.0, 1.0)
}

/// Failure bracket for the parallel concatenation of an (n_c,k) MDS block
/// code with a dense random fountain over F_q: the plain fountain bracket
/// scaled by the shortfall probability P(eps).
pub fn concat_bounds(n_c: usize, k: usize, q: u32, eps: f64, delta: u32) -> (f64, f64) {
    let p = mds_outer_shortfall(n_c, k, eps);
    let (lower, upper) = lrfc_bounds(q, delta);
    (p * lower, p * upper)
}

/// Split weight enumerator of a systematic code: rows[i][w] counts codewords
/// with message weight i and appended (non-message) weight w. Ensemble
/// averages make the entries fractional.
#[derive(Debug, Clone)]
pub struct CoWef {
    rows: Vec<Vec<f64>>,
}

impl CoWef {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        assert!(!rows.is_empty() && !rows[0].is_empty());
        assert!(
            (rows[0][0] - 1.0).abs() < 1e-9 && rows[0][1..].iter().all(|&c| c.abs() < 1e-9),
            "a linear code maps the zero message to the zero word"
        );
        assert!(rows.iter().flatten().all(|&c| c >= -1e-9));
        Self { rows }
    }

    /// Largest message weight tracked (the code dimension).
    pub fn input_limit(&self) -> usize {
        self.rows.len() - 1
    }

    /// Largest appended weight tracked.
    pub fn output_limit(&self) -> usize {
        self.rows.iter().map(|r| r.len() - 1).max().unwrap()
    }

    pub fn coefficient(&self, i: usize, w: usize) -> f64 {
        self.rows.get(i).and_then(|r| r.get(w)).copied().unwrap_or(0.0)
    }

    /// Collapse to the plain weight enumerator A_d = sum over i+w = d.
    pub fn weight_enumerator(&self) -> WeightEnumerator {
        let n = self.input_limit() + self.output_limit();
        let mut coeffs = vec![0.0; n + 1];
        for (i, row) in self.rows.iter().enumerate() {
            for (w, &c) in row.iter().enumerate() {
                coeffs[i + w] += c;
            }
        }
        WeightEnumerator::from_linear(&coeffs)
    }
}

/// Exact split weight enumerator of the (2^t - 1, 2^t - 1 - t) systematic
/// parity-check-optimal code, expanded from its closed bivariate generating
/// function. Supported for t in 3..=7.
pub fn hamming_cowef(t: u32) -> Result<CoWef, BoundsError> {
    if !(3..=7).contains(&t) {
        return Err(BoundsError::CowefWidthUnsupported { t });
    }
    let t = t as usize;
    let half = 1usize << (t - 1);
    let k = (1usize << t) - 1 - t;

    // Bivariate polynomials on an (x-degree, parity-degree) grid, exact i128.
    let grid_mul = |a: &Vec<Vec<i128>>, b: &Vec<Vec<i128>>| -> Vec<Vec<i128>> {
        let (ra, ca) = (a.len(), a[0].len());
        let (rb, cb) = (b.len(), b[0].len());
        let mut out = vec![vec![0i128; ca + cb - 1]; ra + rb - 1];
        for ia in 0..ra {
            for wa in 0..ca {
                if a[ia][wa] == 0 {
                    continue;
                }
                for ib in 0..rb {
                    for wb in 0..cb {
                        out[ia + ib][wa + wb] += a[ia][wa] * b[ib][wb];
                    }
                }
            }
        }
        out
    };
    let in_x = |n: usize, minus: bool| -> Vec<Vec<i128>> {
        pascal_row(n)
            .into_iter()
            .enumerate()
            .map(|(d, c)| vec![if minus && d % 2 == 1 { -c } else { c }])
            .collect()
    };
    let one_plus_cap = {
        // (1 + X)^t as a single x-degree row.
        vec![pascal_row(t).to_vec()]
    };
    let one_minus_x_cap = {
        // (1 - xX)^t lives on the grid diagonal.
        let row = pascal_row(t);
        let mut g = vec![vec![0i128; t + 1]; t + 1];
        for (d, &c) in row.iter().enumerate() {
            g[d][d] = if d % 2 == 1 { -c } else { c };
        }
        g
    };

    let p1 = grid_mul(&in_x(half - t, true), &one_minus_x_cap);
    let p2 = grid_mul(&in_x(half, true), &one_plus_cap);
    let p3 = grid_mul(&in_x(half, false), &one_plus_cap);
    let scale = 1i128 << t;
    let mut combo = vec![vec![0i128; t + 1]; half + 1];
    for (grid, factor) in [(&p1, scale), (&p2, -1), (&p3, 1)] {
        for (i, row) in grid.iter().enumerate() {
            for (w, &c) in row.iter().enumerate() {
                combo[i][w] += factor * c;
            }
        }
    }
    let full = grid_mul(&in_x(half - t - 1, false), &combo);
    let rows: Vec<Vec<f64>> = full
        .into_iter()
        .take(k + 1)
        .map(|row| {
            row.into_iter()
                .map(|c| {
                    debug_assert_eq!(c % scale, 0, "generating function divides exactly");
                    (c / scale) as f64
                })
                .collect()
        })
        .collect();
    Ok(CoWef::from_rows(rows))
}

/// Split enumerator of the parallel concatenation of a systematic precode
/// with a dense random tail of h_c symbols over F_q: each precode row is
/// convolved with the tail's binomial weight profile (an input of weight
/// i != 0 turns each tail symbol nonzero independently with probability
/// (q-1)/q; the zero input leaves the tail zero).
pub fn concat_cowef(precode: &CoWef, h_c: usize, q: u32) -> CoWef {
    if h_c == 0 {
        return precode.clone();
    }
    let p = (q - 1) as f64 / q as f64;
    let tail_pmf: Vec<f64> = (0..=h_c)
        .map(|w| ln_binomial_pmf(h_c as u64, w as u64, p).exp())
        .collect();
    let rows = (0..=precode.input_limit())
        .map(|i| {
            let row = &precode.rows[i];
            if i == 0 {
                return row.clone();
            }
            let mut out = vec![0.0; row.len() + h_c];
            for (w1, &c) in row.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (w2, &b) in tail_pmf.iter().enumerate() {
                    out[w1 + w2] += c * b;
                }
            }
            out
        })
        .collect();
    CoWef::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Upper,
    Lower,
    ExactModel,
}

/// A sampled Pf curve over an overhead or erasure-probability grid, with
/// log-slope extrapolation past the last grid point. Values are clamped to
/// [0,1] so the curve is usable as a probability model.
#[derive(Debug, Clone)]
pub struct BoundCurve {
    kind: BoundKind,
    points: Vec<(f64, f64)>,
}

impl BoundCurve {
    pub fn new(kind: BoundKind, mut points: Vec<(f64, f64)>) -> Self {
        assert!(!points.is_empty(), "a bound curve needs at least one point");
        assert!(points.iter().all(|&(x, v)| x.is_finite() && v.is_finite()));
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for p in &mut points {
            p.1 = p.1.clamp(0.0, 1.0);
        }
        Self { kind, points }
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Value at x: interpolated log-linearly inside the grid, held constant
    /// before it, extrapolated with the last log-slope beyond it.
    pub fn value_at(&self, x: f64) -> f64 {
        let pts = &self.points;
        if pts.len() == 1 || x <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts.len() - 1;
        if x >= pts[last].0 {
            let (x1, v1) = pts[last - 1];
            let (x2, v2) = pts[last];
            if v1 <= 0.0 || v2 <= 0.0 {
                return v2;
            }
            let slope = (v2.ln() - v1.ln()) / (x2 - x1);
            return (v2.ln() + slope * (x - x2)).exp().clamp(0.0, 1.0);
        }
        let hi = pts.partition_point(|p| p.0 < x);
        let (x1, v1) = pts[hi - 1];
        let (x2, v2) = pts[hi];
        if x == x2 {
            return v2;
        }
        let f = (x - x1) / (x2 - x1);
        if v1 > 0.0 && v2 > 0.0 {
            (v1.ln() + f * (v2.ln() - v1.ln())).exp()
        } else {
            v1 + f * (v2 - v1)
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# x\tvalue\n");
        for &(x, v) in &self.points {
            out.push_str(&format!("{x}\t{v:e}\n"));
        }
        out
    }
}

/// Upper-bound failure curve of a dense random fountain on the overhead grid
/// 0..=delta_max.
pub fn lrfc_upper_curve(q: u32, delta_max: u32) -> BoundCurve {
    let points = (0..=delta_max).map(|d| (d as f64, lrfc_bounds(q, d).1)).collect();
    BoundCurve::new(BoundKind::Upper, points)
}

/// Upper-bound failure curve of the MDS-precoded concatenation on the
/// overhead grid 0..=delta_max at erasure probability eps.
pub fn concat_upper_curve(n_c: usize, k: usize, q: u32, eps: f64, delta_max: u32) -> BoundCurve {
    let points = (0..=delta_max).map(|d| (d as f64, concat_bounds(n_c, k, q, eps, d).1)).collect();
    BoundCurve::new(BoundKind::Upper, points)
}

/// Probability that at least one of `n_receivers` independent receivers
/// fails to decode after k + delta symbols have been transmitted over
/// channels of erasure probability eps, for a scheme whose per-receiver
/// failure probability at absolute overhead d is `pf.value_at(d)`.
pub fn multicast_failure_probability(
    n_receivers: f64,
    k: usize,
    eps: f64,
    delta: usize,
    pf: &BoundCurve,
) -> f64 {
    assert!(n_receivers >= 1.0 && (0.0..=1.0).contains(&eps));
    let sent = k + delta;
    let mut pse = KahanSum::new();
    for m in 0..=sent {
        let s = ln_binomial_pmf(sent as u64, m as u64, 1.0 - eps).exp();
        if m < k {
            pse.add(s);
        } else {
            pse.add(s * pf.value_at((m - k) as f64));
        }
    }
    let pse = pse.value().clamp(0.0, 1.0);
    -(n_receivers * (-pse).ln_1p()).exp_m1()
}

/// Smallest transmission overhead whose system failure probability meets
/// `target`, or None if delta_limit is not enough.
pub fn transmission_overhead_for_target(
    n_receivers: f64,
    k: usize,
    eps: f64,
    target: f64,
    pf: &BoundCurve,
    delta_limit: usize,
) -> Option<usize> {
    (0..=delta_limit).find(|&d| multicast_failure_probability(n_receivers, k, eps, d, pf) <= target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degree::RsdParams;
    use crate::gf::FieldSpec;
    use crate::numeric::binomial;
    use crate::linalg::{BitMatrix, FieldMatrix};
    use crate::lt::sample_sparse_column;
    use crate::raptor::Precode;
    use crate::spectra::{hamming_spectrum, linear_random_spectrum, lt_one_probability};
    use crate::linalg::vec_mat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lrfc_bracket_pinned_values() {
        assert_eq!(lrfc_bounds(2, 0), (0.5, 1.0));
        let (lo, hi) = lrfc_bounds(16, 2);
        assert!((lo - 16f64.powi(-3)).abs() < 1e-18);
        assert!((hi - 16f64.powi(-2) / 15.0).abs() < 1e-18);
        for delta in 0..20 {
            let (lo, hi) = lrfc_bounds(4, delta);
            assert!(lo < hi && lo > 0.0 && hi <= 1.0);
        }
    }

    #[test]
    fn lrfc_bracket_contains_exhaustive_rank_census() {
        // All binary 3 x m matrices, exact failure fraction.
        let k = 3;
        for m in [4usize, 5] {
            let mut failures = 0usize;
            let total = 1usize << (k * m);
            for code in 0..total {
                let mut mat = BitMatrix::zeros(k, m);
                for c in 0..m {
                    for r in 0..k {
                        mat.set(r, c, code >> (c * k + r) & 1 == 1);
                    }
                }
                if mat.rank() < k {
                    failures += 1;
                }
            }
            let pf = failures as f64 / total as f64;
            let (lo, hi) = lrfc_bounds(2, (m - k) as u32);
            assert!(lo <= pf && pf < hi, "m={m}: {pf} outside [{lo}, {hi})");
        }
    }

    #[test]
    fn full_degree_point_mass_bound_is_zero() {
        let dist = DegreeDistribution::from_pairs(&[(5, 1.0)]).unwrap();
        let est = lt_ml_lower_bound_with_receipts(&dist, 5, 7);
        assert_eq!(est.value, 0.0);
        assert_eq!(est.status, NumericStatus::Stable);
        // Zero receipts always fail.
        let est = lt_ml_lower_bound_with_receipts(&dist, 5, 0);
        assert_eq!(est.value, 1.0);
    }

    /// Enumerate every possible draw of m sparse columns for a tiny code and
    /// compare the bound against (a) the exact probability of an uncovered
    /// input symbol, which it should equal, and (b) the exact failure
    /// probability, which it should never exceed.
    #[test]
    fn coverage_bound_matches_exhaustive_enumeration() {
        let k = 3usize;
        let dist =
            DegreeDistribution::from_pairs(&[(1, 0.3), (2, 0.45), (3, 0.25)]).unwrap();
        // All nonempty supports with their sampling probabilities.
        let mut supports: Vec<(u32, f64)> = Vec::new();
        for mask in 1u32..8 {
            let d = mask.count_ones() as usize;
            supports.push((mask, dist.prob(d) / binomial(k as u64, d as u64)));
        }
        for m in [3usize, 5] {
            let mut p_uncovered = KahanSum::new();
            let mut p_fail = KahanSum::new();
            let combos = supports.len().pow(m as u32);
            for combo in 0..combos {
                let mut idx = combo;
                let mut prob = 1.0;
                let mut cover = 0u32;
                let mut mat = BitMatrix::zeros(k, m);
                for c in 0..m {
                    let (mask, p) = supports[idx % supports.len()];
                    idx /= supports.len();
                    prob *= p;
                    cover |= mask;
                    for r in 0..k {
                        mat.set(r, c, mask >> r & 1 == 1);
                    }
                }
                if cover != 7 {
                    p_uncovered.add(prob);
                }
                if mat.rank() < k {
                    p_fail.add(prob);
                }
            }
            let est = lt_ml_lower_bound_with_receipts(&dist, k, m);
            assert_eq!(est.status, NumericStatus::Stable);
            assert!((est.value - p_uncovered.value()).abs() < 1e-12);
            assert!(est.value <= p_fail.value() + 1e-12);
        }
    }

    #[test]
    fn coverage_bound_saturates_when_terms_explode() {
        let dist = DegreeDistribution::from_pairs(&[(2, 0.5), (3, 0.5)]).unwrap();
        let est = lt_ml_lower_bound_with_receipts(&dist, 2000, 2000);
        assert_eq!(est.status, NumericStatus::Saturated);
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn coverage_bound_refines_mid_range_cancellation() {
        let dist = DegreeDistribution::from_pairs(&[(2, 0.5), (3, 0.5)]).unwrap();
        let est = lt_ml_lower_bound_with_receipts(&dist, 685, 685);
        assert_eq!(est.status, NumericStatus::Refined);
        assert!(est.value > 0.99 && est.value <= 1.0);
    }

    #[test]
    fn relative_overhead_entry_point_rounds_receipts() {
        let dist = DegreeDistribution::from_pairs(&[(2, 0.5), (3, 0.5)]).unwrap();
        let a = lt_ml_lower_bound(&dist, 100, 0.05);
        let b = lt_ml_lower_bound_with_receipts(&dist, 100, 105);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn krawtchouk_recurrence_matches_direct_sum() {
        // Small length: the pure recurrence is well-conditioned over the
        // whole degree range, so run it to the end and compare everywhere.
        let (h, q) = (16usize, 2u32);
        let kernel = KrawtchoukKernel::new(h, q, h);
        let mut rows: Vec<Vec<f64>> = vec![vec![1.0; h + 1]];
        rows.push((0..=h).map(|l| (h as f64) - 2.0 * l as f64).collect());
        for j in 2..=h {
            let row = (0..=h)
                .map(|l| {
                    let a = (j - 1) as f64 + (h - j + 1) as f64 - 2.0 * l as f64;
                    let b = (h - j + 2) as f64;
                    (a * rows[j - 1][l] - b * rows[j - 2][l]) / j as f64
                })
                .collect();
            rows.push(row);
        }
        for j in 0..=h {
            let scale = kernel.zero_value(j).max(1.0);
            for l in 0..=h {
                let direct = krawtchouk_direct(j, l, h, q);
                assert!((rows[j][l] - direct).abs() <= 1e-10 * scale, "rec j={j} l={l}");
                assert!((kernel.value(j, l) - direct).abs() <= 1e-10 * scale, "tab j={j} l={l}");
            }
        }
        // Larger geometries: the memo table (recurrence while the scale
        // grows, direct afterwards) tracks the direct sum at every entry.
        for &(h, q) in &[(64usize, 4u32), (128, 16), (128, 2)] {
            let kernel = KrawtchoukKernel::new(h, q, h);
            for j in 0..=h {
                let scale = kernel.zero_value(j);
                for l in (0..=h).step_by(1 + h / 33) {
                    let direct = krawtchouk_direct(j, l, h, q);
                    assert!(
                        (kernel.value(j, l) - direct).abs() <= 1e-10 * scale,
                        "h={h} q={q} j={j} l={l}"
                    );
                }
            }
        }
    }

    #[test]
    fn krawtchouk_pinned_structure() {
        let kernel = KrawtchoukKernel::new(10, 4, 6);
        for l in 0..=10 {
            assert_eq!(kernel.value(0, l), 1.0);
            // Degree 1: (q-1)h - ql.
            assert_eq!(kernel.value(1, l), 30.0 - 4.0 * l as f64);
        }
        for j in 0..=6 {
            let expect = binomial(10, j as u64) * 3f64.powi(j as i32);
            assert!((kernel.zero_value(j) - expect).abs() < 1e-9 * expect);
        }
        // Orthogonality with the weight measure C(h,l)(q-1)^l.
        let (h, q) = (6usize, 4u32);
        let small = KrawtchoukKernel::new(h, q, h);
        for a in 0..=h {
            for b in 0..=h {
                let mut s = KahanSum::new();
                for l in 0..=h {
                    let w = binomial(h as u64, l as u64) * 3f64.powi(l as i32);
                    s.add(w * small.value(a, l) * small.value(b, l));
                }
                let expect = if a == b {
                    (q as f64).powi(h as i32) * binomial(h as u64, a as u64)
                        * 3f64.powi(a as i32)
                } else {
                    0.0
                };
                assert!((s.value() - expect).abs() < 1e-6 * (q as f64).powi(h as i32));
            }
        }
    }

    #[test]
    fn zero_sum_kernel_edges() {
        assert_eq!(uniform_nonzero_sum_zero_probability(0, 2), 1.0);
        assert_eq!(uniform_nonzero_sum_zero_probability(1, 2), 0.0);
        assert_eq!(uniform_nonzero_sum_zero_probability(2, 2), 1.0);
        assert_eq!(uniform_nonzero_sum_zero_probability(1, 16), 0.0);
        let q3 = uniform_nonzero_sum_zero_probability(2, 4);
        assert!((q3 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_forms_agree() {
        for &(h, q) in &[(8usize, 2u32), (8, 4), (33, 2), (33, 16), (64, 2), (64, 4), (64, 16)] {
            let dist = DegreeDistribution::robust_soliton(&RsdParams {
                k: h,
                c: 0.2,
                delta: 0.1,
            })
            .unwrap();
            let kernel = KrawtchoukKernel::new(h, q, dist.max_degree());
            let ratio_form = lt_zero_probabilities(&kernel, &dist);
            assert!((ratio_form[0] - 1.0).abs() < 1e-12);
            for l in 0..=h {
                let overlap_form = lt_zero_probability_overlap(&dist, h, q, l);
                assert!(
                    (ratio_form[l] - overlap_form).abs() < 1e-10,
                    "h={h} q={q} l={l}: {} vs {}",
                    ratio_form[l],
                    overlap_form
                );
            }
        }
    }

    #[test]
    fn binary_zero_probability_complements_parity_form() {
        // Over F_2 the zero probability is one minus the odd-overlap
        // probability used by the distance-spectrum module.
        let dist = DegreeDistribution::standardized_raptor();
        let h = 63;
        let kernel = KrawtchoukKernel::new(h, 2, dist.max_degree());
        let pis = lt_zero_probabilities(&kernel, &dist);
        for l in 0..=h {
            let p_one = lt_one_probability(&dist, h, l);
            assert!((pis[l] - (1.0 - p_one)).abs() < 1e-12, "l={l}");
        }
    }

    #[test]
    fn precoded_upper_bound_dominates_monte_carlo() {
        // (15,11) outer code, sparse inner fountain, rank-test trials.
        let field = FieldSpec::binary();
        let pre = Precode::hamming(4, &field).unwrap();
        let (h, k) = (pre.h, pre.k);
        let we = hamming_spectrum(4).unwrap();
        let dist = DegreeDistribution::robust_soliton(&RsdParams { k: h, c: 0.2, delta: 0.1 })
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(901);
        for delta in [3usize, 6] {
            let bound = raptor_ml_upper_bound(&we, &dist, 2, k, delta);
            let trials = 1500;
            let mut failures = 0;
            for _ in 0..trials {
                let m = k + delta;
                let mut rows = Vec::with_capacity(h - k + m);
                for r in 0..h - k {
                    rows.push(pre.parity.row(r).to_vec());
                }
                for _ in 0..m {
                    let col = sample_sparse_column(h, &dist, &field, &mut rng);
                    let mut row = vec![0; h];
                    for (slot, &v) in col.vars.iter().enumerate() {
                        row[v as usize] = col.coefs[slot];
                    }
                    rows.push(row);
                }
                let mat = FieldMatrix::from_rows(&field, &rows).unwrap();
                if mat.rank() < h {
                    failures += 1;
                }
            }
            let pf = failures as f64 / trials as f64;
            let stderr = (pf * (1.0 - pf) / trials as f64).sqrt();
            assert!(
                pf <= bound + 3.0 * stderr,
                "delta={delta}: mc {pf} above bound {bound}"
            );
        }
    }

    #[test]
    fn ensemble_upper_bound_dominates_sampled_codes() {
        // Binary (70,64) parity-check ensemble.
        let dist = DegreeDistribution::standardized_raptor();
        let (h, k, delta) = (70usize, 64usize, 4usize);
        let avg = linear_random_spectrum(h, k, 2);
        let bound = raptor_ensemble_ml_upper_bound(&avg, &dist, 2, k, delta);
        let field = FieldSpec::binary();
        let mut rng = ChaCha8Rng::seed_from_u64(902);
        let (codes, trials_per) = (80, 250);
        let mut failures = 0usize;
        for _ in 0..codes {
            let parity = BitMatrix::random(h - k, h, &mut rng);
            for _ in 0..trials_per {
                let mut mat = BitMatrix::zeros(h - k + k + delta, h);
                for r in 0..h - k {
                    for c in 0..h {
                        mat.set(r, c, parity.get(r, c));
                    }
                }
                for m in 0..k + delta {
                    let col = sample_sparse_column(h, &dist, &field, &mut rng);
                    for &v in &col.vars {
                        mat.set(h - k + m, v as usize, true);
                    }
                }
                if mat.rank() < h {
                    failures += 1;
                }
            }
        }
        let trials = (codes * trials_per) as f64;
        let pf = failures as f64 / trials;
        let stderr = (pf * (1.0 - pf) / trials).sqrt();
        assert!(pf <= bound + 3.0 * stderr, "mc {pf} above ensemble bound {bound}");

        // Quaternary (24,20) ensemble, dense rank oracle over F_4.
        let field4 = FieldSpec::new(2).unwrap();
        let (h, k, delta) = (24usize, 20usize, 3usize);
        let dist4 = DegreeDistribution::robust_soliton(&RsdParams { k: h, c: 0.2, delta: 0.1 })
            .unwrap();
        let avg4 = linear_random_spectrum(h, k, 4);
        let bound4 = raptor_ensemble_ml_upper_bound(&avg4, &dist4, 4, k, delta);
        let mut failures = 0usize;
        let (codes, trials_per) = (50, 200);
        for _ in 0..codes {
            let parity = FieldMatrix::random(h - k, h, &field4, &mut rng);
            for _ in 0..trials_per {
                let mut rows: Vec<Vec<u32>> =
                    (0..h - k).map(|r| parity.row(r).to_vec()).collect();
                for _ in 0..k + delta {
                    let col = sample_sparse_column(h, &dist4, &field4, &mut rng);
                    let mut row = vec![0; h];
                    for (slot, &v) in col.vars.iter().enumerate() {
                        row[v as usize] = col.coefs[slot];
                    }
                    rows.push(row);
                }
                if FieldMatrix::from_rows(&field4, &rows).unwrap().rank() < h {
                    failures += 1;
                }
            }
        }
        let trials = (codes * trials_per) as f64;
        let pf = failures as f64 / trials;
        let stderr = (pf * (1.0 - pf) / trials).sqrt();
        assert!(pf <= bound4 + 3.0 * stderr, "mc {pf} above ensemble bound {bound4}");

        // Once past the vacuous zero-overhead region, a larger field buys a
        // uniformly lower bound at equal overhead.
        for d in 3..=8 {
            let b2 = raptor_ensemble_ml_upper_bound(&linear_random_spectrum(70, 64, 2), &dist, 2, 64, d);
            let b4 = raptor_ensemble_ml_upper_bound(&linear_random_spectrum(70, 64, 4), &dist, 4, 64, d);
            assert!(b4 < b2, "delta={d}");
        }
    }

    #[test]
    fn plain_fountain_bounds_bracket_each_other() {
        let k = 64;
        let dist = DegreeDistribution::robust_soliton(&RsdParams { k, c: 0.2, delta: 0.05 })
            .unwrap();
        let mut prev_upper = f64::INFINITY;
        for delta in 0..=12usize {
            let lower = lt_ml_lower_bound_with_receipts(&dist, k, k + delta);
            assert_eq!(lower.status, NumericStatus::Stable);
            let upper = lt_ml_upper_bound(&dist, 2, k, delta);
            assert!(lower.value <= upper * (1.0 + 1e-12), "delta={delta}");
            assert!(upper < prev_upper);
            prev_upper = upper;
        }
        // Both bounds pinch the truth once the overhead is moderate.
        let lower = lt_ml_lower_bound_with_receipts(&dist, k, k + 12).value;
        let upper = lt_ml_upper_bound(&dist, 2, k, 12);
        assert!(upper / lower < 2.0, "loose pinch: {lower} vs {upper}");
    }

    #[test]
    fn block_bound_edges_and_ordering() {
        for &(n, k) in &[(63usize, 57usize), (30, 20)] {
            assert_eq!(singleton_bound(n, k, 0.0), 0.0);
            assert_eq!(berlekamp_bound(n, k, 0.0), 0.0);
            assert_eq!(singleton_bound(n, k, 1.0), 1.0);
            for i in 1..20 {
                let eps = i as f64 / 20.0;
                let s = singleton_bound(n, k, eps);
                let b = berlekamp_bound(n, k, eps);
                assert!(s <= b + 1e-15, "eps={eps}");
            }
        }
    }

    #[test]
    fn hidden_codeword_bound_is_exact_for_repetition_codes() {
        // (3,1) repetition: ML fails only when all three symbols are erased.
        let we = WeightEnumerator::from_linear(&[1.0, 0.0, 0.0, 1.0]);
        for i in 0..=10 {
            let eps = i as f64 / 10.0;
            let bound = di_upper_bound(&we, 1, eps, false);
            assert!((bound - eps.powi(3)).abs() < 1e-12, "eps={eps}");
        }
    }

    #[test]
    fn hidden_codeword_bound_dominates_exhaustive_ml() {
        // Exact (7,4) block error probability by erasure-pattern enumeration.
        let field = FieldSpec::binary();
        let pre = Precode::hamming(3, &field).unwrap();
        let words: Vec<u32> = (1u32..16)
            .map(|u| {
                let msg: Vec<u32> = (0..4).map(|b| u >> b & 1).collect();
                let cw = vec_mat(&msg, &pre.generator);
                cw.iter().enumerate().fold(0u32, |acc, (i, &v)| acc | (v & 1) << i)
            })
            .collect();
        let we = hamming_spectrum(3).unwrap();
        for i in 1..10 {
            let eps = i as f64 / 10.0;
            let mut exact = KahanSum::new();
            for pattern in 0u32..128 {
                let e = pattern.count_ones() as usize;
                // ML fails iff some nonzero codeword lies inside the erasures.
                if words.iter().any(|&w| w & !pattern == 0) {
                    exact.add(
                        eps.powi(e as i32) * (1.0 - eps).powi(7 - e as i32),
                    );
                }
            }
            let bound = di_upper_bound(&we, 4, eps, false);
            assert!(bound >= exact.value() - 1e-12, "eps={eps}");
            assert!(bound >= singleton_bound(7, 4, eps));
        }
    }

    #[test]
    fn mds_shortfall_and_concat_bracket() {
        assert_eq!(mds_outer_shortfall(11, 10, 0.0), 0.0);
        assert_eq!(concat_bounds(11, 10, 2, 0.0, 3), (0.0, 0.0));
        // Fully erased channel degenerates to the plain fountain bracket.
        assert_eq!(concat_bounds(11, 10, 2, 1.0, 3), lrfc_bounds(2, 3));
        // (11,10) single-parity-check shortfall at eps = 0.1, by hand.
        let p = mds_outer_shortfall(11, 10, 0.1);
        let q_hand = 0.9f64.powi(11) + 11.0 * 0.1 * 0.9f64.powi(10);
        assert!((p - (1.0 - q_hand)).abs() < 1e-14);
        for delta in 0..=6 {
            let (lo, hi) = concat_bounds(11, 10, 2, 0.1, delta);
            let (plain_lo, plain_hi) = lrfc_bounds(2, delta);
            assert!(lo < hi && lo <= plain_lo && hi <= plain_hi);
        }
    }

    #[test]
    fn split_enumerator_matches_systematic_enumeration() {
        let field = FieldSpec::binary();
        let pre = Precode::hamming(3, &field).unwrap();
        let mut counts = vec![vec![0.0f64; 4]; 5];
        for u in 0u32..16 {
            let msg: Vec<u32> = (0..4).map(|b| u >> b & 1).collect();
            let cw = vec_mat(&msg, &pre.generator);
            let i = msg.iter().sum::<u32>() as usize;
            let w = cw[4..].iter().filter(|&&v| v != 0).count();
            counts[i][w] += 1.0;
        }
        let cowef = hamming_cowef(3).unwrap();
        assert_eq!(cowef.input_limit(), 4);
        assert_eq!(cowef.output_limit(), 3);
        for i in 0..=4 {
            for w in 0..=3 {
                assert!(
                    (cowef.coefficient(i, w) - counts[i][w]).abs() < 1e-9,
                    "i={i} w={w}: {} vs {}",
                    cowef.coefficient(i, w),
                    counts[i][w]
                );
            }
        }
        // Collapsed, it is the classical weight enumerator.
        let we = cowef.weight_enumerator();
        let expect = [1.0, 0.0, 0.0, 7.0, 7.0, 0.0, 0.0, 1.0];
        for (d, &e) in expect.iter().enumerate() {
            assert!((we.coefficient(d) - e).abs() < 1e-9, "d={d}");
        }
    }

    #[test]
    fn split_enumerators_collapse_to_recursion_values() {
        for t in 3..=7u32 {
            let we = hamming_cowef(t).unwrap().weight_enumerator();
            let reference = hamming_spectrum(t).unwrap();
            assert_eq!(we.length(), reference.length());
            for d in 0..=we.length() {
                let r = reference.coefficient(d);
                let tol = 1e-9 * r.max(1.0);
                assert!((we.coefficient(d) - r).abs() < tol, "t={t} d={d}");
            }
        }
        assert!(matches!(
            hamming_cowef(2),
            Err(BoundsError::CowefWidthUnsupported { t: 2 })
        ));
    }

    #[test]
    fn concatenation_spreads_and_preserves_mass() {
        let pre = hamming_cowef(6).unwrap();
        // Zero tail is the identity.
        let same = concat_cowef(&pre, 0, 2);
        for i in 0..=pre.input_limit() {
            for w in 0..=pre.output_limit() {
                assert_eq!(same.coefficient(i, w), pre.coefficient(i, w));
            }
        }
        // Rate-1/2 tail: 63 + 51 = 114 total symbols from 57 message symbols.
        let concat = concat_cowef(&pre, 51, 2);
        let we = concat.weight_enumerator();
        assert_eq!(we.length(), 114);
        let total_codewords = 2f64.powi(57);
        assert!((we.total() / total_codewords - 1.0).abs() < 1e-9);
        // Fewer expected low-weight words than the equal-rate random ensemble.
        let random = linear_random_spectrum(114, 57, 2);
        for d in 1..=6 {
            assert!(we.coefficient(d) < random.coefficient(d), "d={d}");
        }
    }

    #[test]
    fn curve_interpolates_and_extrapolates_log_slope() {
        let curve = lrfc_upper_curve(2, 10);
        assert_eq!(curve.kind(), BoundKind::Upper);
        assert_eq!(curve.value_at(0.0), 1.0);
        assert!((curve.value_at(7.0) - 2f64.powi(-7)).abs() < 1e-15);
        // Beyond the grid the last log-slope continues the geometric decay.
        let v = curve.value_at(15.0);
        assert!((v - 2f64.powi(-15)).abs() < 1e-12 * v.abs().max(1e-30));
        // Log-linear between integer grid points.
        let mid = curve.value_at(3.5);
        assert!((mid - 2f64.powi(-3) * 2f64.powf(-0.5)).abs() < 1e-15);
        // Before the grid the first value holds.
        assert_eq!(curve.value_at(-2.0), 1.0);
    }

    #[test]
    fn multicast_reference_overheads() {
        let n = 1e4;
        let (k, eps, target) = (10usize, 0.01, 1e-4);
        let plain = lrfc_upper_curve(2, 32);
        let concat = concat_upper_curve(11, 10, 2, eps, 32);
        let d_plain = transmission_overhead_for_target(n, k, eps, target, &plain, 64).unwrap();
        let d_concat = transmission_overhead_for_target(n, k, eps, target, &concat, 64).unwrap();
        assert_eq!(d_concat, 20);
        assert_eq!(d_plain, 28);
        // One receiver reduces to the per-receiver failure probability.
        let pse1 = multicast_failure_probability(1.0, k, eps, 5, &plain);
        assert!(pse1 > 0.0 && pse1 < 1.0);
        // Monotone in the transmission overhead.
        let mut prev = 1.0;
        for d in 0..30 {
            let pe = multicast_failure_probability(n, k, eps, d, &concat);
            assert!(pe <= prev + 1e-12);
            prev = pe;
        }
        // A clean channel with an ideal fountain never fails.
        let ideal = BoundCurve::new(BoundKind::ExactModel, vec![(0.0, 0.0), (32.0, 0.0)]);
        for d in 0..5 {
            assert_eq!(multicast_failure_probability(n, k, 0.0, d, &ideal), 0.0);
        }
    }
}
