//! Finite-length analysis of inactivation decoding.
//!
//! The decoder state is summarized by (c, r): c equations in the cloud
//! (reduced degree >= 2) and r in the ripple (reduced degree 1), with u
//! variables still active. Each decoding step settles exactly one variable
//! — peeling when the ripple is nonempty, inactivating otherwise — so the
//! number of inactivations Y is the number of steps that start with an
//! empty ripple.
//!
//! Provided here: the exact per-step release probability of a cloud
//! equation, a first-order dynamic program for E[Y], a full dynamic
//! program for the distribution of Y, an exhaustive oracle that averages
//! the true process over every equation multiset (exponential, for toy
//! sizes), a fast binomial approximation of the ripple trajectory, and a
//! single-layer surrogate for precoded ensembles.

use crate::degree::DegreeDistribution;
use crate::linalg::FieldMatrix;
use crate::numeric::{binomial, binomial_ratio, ln_binomial_pmf};
use std::collections::HashMap;

/// Probability that a cloud equation releases (drops to reduced degree 1)
/// on the step from u to u-1 active variables, for u = 1..=k, along with
/// the states where the cloud-membership probability vanishes (there the
/// value is pinned to zero).
#[derive(Debug, Clone)]
pub struct ReleaseProbabilities {
    pub values: Vec<f64>,
    pub degenerate: Vec<usize>,
}

pub fn release_probabilities(dist: &DegreeDistribution, k: usize) -> ReleaseProbabilities {
    assert!(k >= 1);
    assert!(dist.max_degree() <= k);
    let mut values = vec![0.0; k];
    let mut degenerate = Vec::new();
    for u in 1..=k {
        if u == 1 {
            continue; // no other active variable can be waiting
        }
        let mut num = 0.0;
        let mut den = 1.0;
        for (d, p) in dist.support() {
            let df = d as f64;
            if d >= 2 {
                // Release: the settled variable and exactly one other
                // active variable lie in the equation.
                num += p
                    * df
                    * (df - 1.0)
                    * ((u - 1) as f64 / (k as f64 * (k - 1) as f64))
                    * binomial_ratio((k - u) as u64, (k - 2) as u64, (d - 2) as u64);
            }
            // In the cloud means neither reduced degree 1 ...
            den -= p
                * u as f64
                * binomial_ratio((k - u) as u64, k as u64, (d - 1) as u64)
                * (df / (k - d + 1) as f64);
            // ... nor reduced degree 0.
            den -= p * binomial_ratio((k - u) as u64, k as u64, d as u64);
        }
        if den <= 1e-14 {
            degenerate.push(u);
            continue;
        }
        values[u - 1] = (num / den).clamp(0.0, 1.0);
    }
    ReleaseProbabilities { values, degenerate }
}

/// Binomial pmf terms (x, Pr{X = x}) for X ~ Bin(n, p), starting at the
/// mode and expanding outward. With `cut` = 0 every term is produced;
/// otherwise terms below `cut` beyond the mode are dropped.
fn binomial_terms(n: usize, p: f64, cut: f64, out: &mut Vec<(usize, f64)>) {
    out.clear();
    if n == 0 || p <= 0.0 {
        out.push((0, 1.0));
        return;
    }
    if p >= 1.0 {
        out.push((n, 1.0));
        return;
    }
    let mode = (((n + 1) as f64) * p) as usize;
    let mode = mode.min(n);
    let pm = ln_binomial_pmf(n as u64, mode as u64, p).exp();
    let odds = p / (1.0 - p);
    out.push((mode, pm));
    // Downward from the mode: pmf(x-1) = pmf(x) * x / ((n-x+1) * odds).
    let mut v = pm;
    let mut x = mode;
    while x > 0 {
        v *= x as f64 / ((n - x + 1) as f64 * odds);
        x -= 1;
        if cut > 0.0 && v < cut {
            break;
        }
        out.push((x, v));
    }
    // Upward: pmf(x+1) = pmf(x) * (n-x) * odds / (x+1).
    let mut v = pm;
    let mut x = mode;
    while x < n {
        v *= (n - x) as f64 * odds / (x + 1) as f64;
        x += 1;
        if cut > 0.0 && v < cut {
            break;
        }
        out.push((x, v));
    }
}

/// Sparse (c, r) grid with O(touched) iteration and clearing.
struct Grid {
    side: usize,
    mass: Vec<f64>,
    touched: Vec<u32>,
}

impl Grid {
    fn new(side: usize) -> Self {
        Grid { side, mass: vec![0.0; side * side], touched: Vec::new() }
    }

    #[inline]
    fn idx(&self, c: usize, r: usize) -> usize {
        c * self.side + r
    }

    #[inline]
    fn add(&mut self, c: usize, r: usize, w: f64) {
        let i = self.idx(c, r);
        if self.mass[i] == 0.0 && w > 0.0 {
            self.touched.push(i as u32);
        }
        self.mass[i] += w;
    }

    fn clear(&mut self) {
        for &i in &self.touched {
            self.mass[i as usize] = 0.0;
        }
        self.touched.clear();
    }
}

/// First-order analysis output.
#[derive(Debug, Clone)]
pub struct FirstOrderDp {
    /// E[Y], the expected number of inactivations.
    pub expected_inactivations: f64,
    /// Pr{ripple empty at the step from u to u-1}, indexed by u-1.
    pub inactivation_probability: Vec<f64>,
    /// E[ripple size] at each state u, indexed by u-1.
    pub expected_ripple: Vec<f64>,
    /// States u where the release probability was pinned to zero.
    pub degenerate_states: Vec<usize>,
}

/// March the (cloud, ripple) dynamic program from u=k down to u=1,
/// accumulating the probability of an empty ripple at each step. `prune`
/// drops state mass below the threshold (0 keeps everything exactly).
pub fn expected_inactivations_dp(
    dist: &DegreeDistribution,
    k: usize,
    m: usize,
    prune: f64,
) -> FirstOrderDp {
    assert!(k >= 1);
    let rel = release_probabilities(dist, k);
    let side = m + 1;
    let mut cur = Grid::new(side);
    let mut next = Grid::new(side);
    // Initially each of the m equations is ripple with probability
    // Omega_1, cloud otherwise. Log-space weights: the plain binomial
    // coefficient overflows f64 near m = 1030.
    let w1 = dist.prob(1);
    for r in 0..=m {
        let w = ln_binomial_pmf(m as u64, r as u64, w1).exp();
        if w > 0.0 {
            cur.add(m - r, r, w);
        }
    }
    let cut = if prune == 0.0 { 0.0 } else { prune * 1e-2 };
    let mut inactivation_probability = vec![0.0; k];
    let mut expected_ripple = vec![0.0; k];
    let mut ey = 0.0;
    let mut e_terms: Vec<(usize, f64)> = Vec::new();
    let mut b_terms: Vec<(usize, f64)> = Vec::new();
    for u in (1..=k).rev() {
        for &i in &cur.touched {
            let w = cur.mass[i as usize];
            if w <= 0.0 {
                continue;
            }
            let r = i as usize % side;
            if r == 0 {
                inactivation_probability[u - 1] += w;
            }
            expected_ripple[u - 1] += r as f64 * w;
        }
        ey += inactivation_probability[u - 1];
        if u == 1 {
            break;
        }
        let p_u = rel.values[u - 1];
        for &i in &cur.touched {
            let w = cur.mass[i as usize];
            if w <= prune {
                continue;
            }
            let c = i as usize / side;
            let r = i as usize % side;
            // Peeling consumes the pivot plus each other ripple equation
            // that held the same variable: survivors s ~ Bin(r-1, 1-1/u).
            if r > 0 {
                binomial_terms(r - 1, 1.0 - 1.0 / u as f64, cut, &mut e_terms);
            } else {
                e_terms.clear();
                e_terms.push((0, 1.0));
            }
            binomial_terms(c, p_u, cut, &mut b_terms);
            for &(s, ws) in &e_terms {
                for &(b, wb) in &b_terms {
                    next.add(c - b, s + b, w * ws * wb);
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
        next.clear();
    }
    FirstOrderDp {
        expected_inactivations: ey,
        inactivation_probability,
        expected_ripple,
        degenerate_states: rel.degenerate,
    }
}

/// Distribution of the inactivation count.
#[derive(Debug, Clone)]
pub struct InactivationDistribution {
    /// Pr{Y = y} for y = 0..=y_cap.
    pub pmf: Vec<f64>,
    /// Pr{Y > y_cap}.
    pub overflow: f64,
    /// Mean of the capped distribution (overflow counted at y_cap + 1,
    /// hence a lower bound when overflow > 0).
    pub mean: f64,
    pub degenerate_states: Vec<usize>,
}

/// Full dynamic program: the (c, r) grid carries a distribution over the
/// inactivation count, which shifts by one wherever a step starts with an
/// empty ripple. Counts beyond `y_cap` fold into an overflow bucket.
pub fn inactivation_distribution_dp(
    dist: &DegreeDistribution,
    k: usize,
    m: usize,
    y_cap: usize,
    prune: f64,
) -> InactivationDistribution {
    assert!(k >= 1);
    let rel = release_probabilities(dist, k);
    let side = m + 1;
    let ylen = y_cap + 2; // counts 0..=y_cap plus overflow
    let mut cur_y = vec![0.0; side * side * ylen];
    let mut next_y = vec![0.0; side * side * ylen];
    let mut cur = Grid::new(side);
    let mut next = Grid::new(side);
    let w1 = dist.prob(1);
    for r in 0..=m {
        let w = ln_binomial_pmf(m as u64, r as u64, w1).exp();
        if w > 0.0 {
            cur.add(m - r, r, w);
            cur_y[(cur.idx(m - r, r)) * ylen] = w; // all mass at y = 0
        }
    }
    let cut = if prune == 0.0 { 0.0 } else { prune * 1e-2 };
    let mut e_terms: Vec<(usize, f64)> = Vec::new();
    let mut b_terms: Vec<(usize, f64)> = Vec::new();
    let mut shifted = vec![0.0; ylen];
    for u in (1..=k).rev() {
        if u == 1 {
            break;
        }
        let p_u = rel.values[u - 1];
        for &i in &cur.touched {
            let w = cur.mass[i as usize];
            if w <= prune {
                continue;
            }
            let c = i as usize / side;
            let r = i as usize % side;
            let base = i as usize * ylen;
            // An empty ripple means this step is an inactivation: the
            // count distribution shifts by one before the releases land.
            let src: &[f64] = if r == 0 {
                shifted[0] = 0.0;
                for y in 1..=y_cap {
                    shifted[y] = cur_y[base + y - 1];
                }
                shifted[y_cap + 1] =
                    cur_y[base + y_cap] + cur_y[base + y_cap + 1];
                e_terms.clear();
                e_terms.push((0, 1.0));
                &shifted
            } else {
                binomial_terms(r - 1, 1.0 - 1.0 / u as f64, cut, &mut e_terms);
                &cur_y[base..base + ylen]
            };
            binomial_terms(c, p_u, cut, &mut b_terms);
            for &(s, ws) in e_terms.iter() {
                for &(b, wb) in &b_terms {
                    let scale = ws * wb;
                    if scale <= 0.0 {
                        continue;
                    }
                    next.add(c - b, s + b, w * scale);
                    let tbase = next.idx(c - b, s + b) * ylen;
                    for y in 0..ylen {
                        next_y[tbase + y] += src[y] * scale;
                    }
                }
            }
        }
        for &i in &cur.touched {
            let base = i as usize * ylen;
            cur_y[base..base + ylen].fill(0.0);
        }
        cur.clear();
        std::mem::swap(&mut cur, &mut next);
        std::mem::swap(&mut cur_y, &mut next_y);
    }
    // Final step at u = 1: an empty ripple costs one last inactivation.
    let mut pmf = vec![0.0; y_cap + 1];
    let mut overflow = 0.0;
    for &i in &cur.touched {
        let r = i as usize % side;
        let base = i as usize * ylen;
        if r == 0 {
            for y in 1..=y_cap {
                pmf[y] += cur_y[base + y - 1];
            }
            overflow += cur_y[base + y_cap] + cur_y[base + y_cap + 1];
        } else {
            for y in 0..=y_cap {
                pmf[y] += cur_y[base + y];
            }
            overflow += cur_y[base + y_cap + 1];
        }
    }
    let mean = pmf
        .iter()
        .enumerate()
        .map(|(y, &p)| y as f64 * p)
        .sum::<f64>()
        + overflow * (y_cap + 1) as f64;
    InactivationDistribution { pmf, overflow, mean, degenerate_states: rel.degenerate }
}

/// Exact distribution of the inactivation count for the true decoding
/// process, averaged over every possible equation multiset. Exponential in
/// k and m — toy sizes only.
pub fn exhaustive_inactivation_pmf(
    dist: &DegreeDistribution,
    k: usize,
    m: usize,
) -> Vec<f64> {
    assert!(k <= 16, "exhaustive oracle is exponential in k");
    assert!(dist.max_degree() <= k);
    // Every possible equation support with its sampling probability.
    let mut supports: Vec<(u32, f64)> = Vec::new();
    for (d, p) in dist.support() {
        let per = p / binomial(k as u64, d as u64);
        let mut mask = (1u32 << d) - 1;
        let limit = 1u32 << k;
        while mask < limit {
            supports.push((mask, per));
            // Next subset of the same size (Gosper's hack).
            let c = mask & mask.wrapping_neg();
            let r = mask + c;
            if r >= limit || mask == 0 {
                break;
            }
            mask = (((r ^ mask) >> 2) / c) | r;
        }
    }
    let mut pmf = vec![0.0; k + 1];
    let mut counts = vec![0usize; supports.len()];
    enumerate_multisets(&supports, m, 0, 1.0, &mut counts, &mut |counts, weight| {
        let eqs: Vec<(u32, usize)> = supports
            .iter()
            .zip(counts.iter())
            .filter(|(_, &n)| n > 0)
            .map(|(&(mask, _), &n)| (mask, n))
            .collect();
        let mut memo: HashMap<u32, Vec<f64>> = HashMap::new();
        let dist_y = process_pmf(&eqs, k, 0, &mut memo);
        for (y, &p) in dist_y.iter().enumerate() {
            pmf[y] += weight * p;
        }
    });
    pmf
}

/// Recursively assign multiplicities to each support; the weight carries
/// the multinomial coefficient and the per-draw probabilities.
fn enumerate_multisets(
    supports: &[(u32, f64)],
    remaining: usize,
    idx: usize,
    weight: f64,
    counts: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize], f64),
) {
    if idx == supports.len() {
        if remaining == 0 {
            visit(counts, weight);
        }
        return;
    }
    if idx == supports.len() - 1 {
        counts[idx] = remaining;
        let w = weight * supports[idx].1.powi(remaining as i32);
        visit(counts, w);
        counts[idx] = 0;
        return;
    }
    for n in 0..=remaining {
        counts[idx] = n;
        let w = weight * binomial(remaining as u64, n as u64) * supports[idx].1.powi(n as i32);
        enumerate_multisets(supports, remaining - n, idx + 1, w, counts, visit);
    }
    counts[idx] = 0;
}

/// Distribution of future inactivations from a removed-variable mask:
/// uniform choice over ripple equations (with multiplicity), uniform
/// choice of the inactivation victim.
fn process_pmf(
    eqs: &[(u32, usize)],
    k: usize,
    mask: u32,
    memo: &mut HashMap<u32, Vec<f64>>,
) -> Vec<f64> {
    if let Some(v) = memo.get(&mask) {
        return v.clone();
    }
    let active = !mask & ((1u32 << k) - 1);
    let u = active.count_ones() as usize;
    let result = if u == 0 {
        let mut v = vec![0.0; k + 1];
        v[0] = 1.0;
        v
    } else {
        // Ripple equations and their single active variable.
        let mut ripple: Vec<(u32, usize)> = Vec::new();
        let mut total = 0usize;
        for &(supp, n) in eqs {
            let rem = supp & active;
            if rem.count_ones() == 1 {
                ripple.push((rem, n));
                total += n;
            }
        }
        let mut v = vec![0.0; k + 1];
        if total > 0 {
            for &(var_bit, n) in &ripple {
                let child = process_pmf(eqs, k, mask | var_bit, memo);
                let w = n as f64 / total as f64;
                for y in 0..=k {
                    v[y] += w * child[y];
                }
            }
        } else {
            // Inactivate a uniformly chosen active variable.
            let w = 1.0 / u as f64;
            for b in 0..k {
                let bit = 1u32 << b;
                if active & bit != 0 {
                    let child = process_pmf(eqs, k, mask | bit, memo);
                    for y in 0..k {
                        v[y + 1] += w * child[y];
                    }
                }
            }
        }
        v
    };
    memo.insert(mask, result.clone());
    result
}

pub fn expected_inactivations_exhaustive(
    dist: &DegreeDistribution,
    k: usize,
    m: usize,
) -> f64 {
    exhaustive_inactivation_pmf(dist, k, m)
        .iter()
        .enumerate()
        .map(|(y, &p)| y as f64 * p)
        .sum()
}

/// Fast approximate analysis: evolve the expected fraction r_{u,d} of
/// equations at reduced degree d as u shrinks, treating the ripple as a
/// binomial census.
#[derive(Debug, Clone)]
pub struct BinomialApprox {
    /// Approximate E[Y].
    pub expected_inactivations: f64,
    /// Approximate expected ripple size m * r_{u,1}, indexed by u-1.
    pub ripple: Vec<f64>,
}

pub fn binomial_ripple_approximation(
    dist: &DegreeDistribution,
    k: usize,
    m: usize,
) -> BinomialApprox {
    assert!(k >= 1);
    let dmax = dist.max_degree();
    // r[d] for d = 0..=dmax+1; the entry above dmax stays zero.
    let mut r = vec![0.0f64; dmax + 2];
    for (d, p) in dist.support() {
        r[d] = p;
    }
    let mf = m as f64;
    let mut ripple = vec![0.0; k];
    let mut ey = 0.0;
    for u in (1..=k).rev() {
        ripple[u - 1] = mf * r[1];
        ey += (1.0 - r[1]).powi(m as i32);
        if u == 1 {
            break;
        }
        let uf = u as f64;
        // Probability that no equation currently sits at reduced degree 1,
        // in which case the settled variable is an inactivation and reaches
        // a degree-1 equation only through the d >= 2 flow.
        let p_empty = (1.0 - r[1]).powi(m as i32);
        let mut nr = vec![0.0f64; dmax + 2];
        for d in 2..=dmax {
            nr[d] = (1.0 - d as f64 / uf) * r[d] + ((d + 1) as f64 / uf) * r[d + 1];
        }
        nr[1] = (1.0 - 1.0 / uf) * r[1] + (2.0 / uf) * r[2]
            - (1.0 - 1.0 / uf) * (1.0 - p_empty) / mf;
        for x in nr.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        r = nr;
    }
    BinomialApprox { expected_inactivations: ey, ripple }
}

/// Degree distribution of the rows of a parity-check matrix (row weights,
/// uniform over rows).
pub fn parity_row_degree_distribution(parity: &FieldMatrix) -> DegreeDistribution {
    assert!(parity.rows() > 0);
    let mut masses: HashMap<usize, f64> = HashMap::new();
    let per = 1.0 / parity.rows() as f64;
    for r in 0..parity.rows() {
        let w = (0..parity.cols()).filter(|&c| parity.get(r, c) != 0).count();
        *masses.entry(w).or_insert(0.0) += per;
    }
    let mut pairs: Vec<(usize, f64)> = masses.into_iter().collect();
    pairs.sort_unstable_by_key(|&(d, _)| d);
    DegreeDistribution::from_pairs(&pairs).expect("row weights are positive")
}

/// Two-point approximation of the standardized raptor parity-row degrees:
/// the circulant rows weigh about 3k/s + 1, the dense rows (k+s)/2 + 1.
pub fn r10_two_point_parity_distribution(
    k: usize,
    s: usize,
    h_prime: usize,
) -> DegreeDistribution {
    let d_ldpc = 3 * ((k as f64 / s as f64).round() as usize) + 1;
    let d_dense = ((k + s) as f64 / 2.0).round() as usize + 1;
    let total = (s + h_prime) as f64;
    DegreeDistribution::from_pairs(&[
        (d_ldpc, s as f64 / total),
        (d_dense, h_prime as f64 / total),
    ])
    .expect("two positive masses")
}

/// Single-layer surrogate of a precoded ensemble: the receiver holds
/// h - k parity equations and m received symbols over h variables, so the
/// mixture (h-k)/(h-k+m) * Theta + m/(h-k+m) * Omega plays the role of the
/// output degree distribution of a plain LT code with h inputs and
/// h - k + m outputs.
pub fn surrogate_intermediate_distribution(
    theta: &DegreeDistribution,
    omega: &DegreeDistribution,
    h: usize,
    k: usize,
    m: usize,
) -> DegreeDistribution {
    assert!(h > k);
    let wp = (h - k) as f64 / (h - k + m) as f64;
    let wo = m as f64 / (h - k + m) as f64;
    let dmax = theta.max_degree().max(omega.max_degree());
    let mut mass = vec![0.0; dmax + 1];
    for (d, p) in theta.support() {
        mass[d] += wp * p;
    }
    for (d, p) in omega.support() {
        mass[d] += wo * p;
    }
    let pairs: Vec<(usize, f64)> = mass
        .iter()
        .enumerate()
        .filter(|&(_, &p)| p > 0.0)
        .map(|(d, &p)| (d, p))
        .collect();
    DegreeDistribution::from_pairs(&pairs).expect("mixture of two distributions")
}

/// Binomial approximation applied to the surrogate view of a precoded
/// ensemble: h variables, h - k + m equations.
pub fn surrogate_binomial_approximation(
    theta: &DegreeDistribution,
    omega: &DegreeDistribution,
    h: usize,
    k: usize,
    m: usize,
) -> BinomialApprox {
    let mix = surrogate_intermediate_distribution(theta, omega, h, k, m);
    binomial_ripple_approximation(&mix, h, h - k + m)
}
