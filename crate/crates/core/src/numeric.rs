//! Scalar numeric utilities shared by the analysis, bounds, and spectra
//! layers: log-gamma machinery, compensated summation, double-double
//! accumulation for alternating sums, incomplete-gamma tails, and a
//! golden-section optimizer.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Natural log of the gamma function (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        PI.ln() - (PI * x).sin().abs().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + 7.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

const LN_FACT_CACHE: usize = 1 << 16;

/// ln(n!), table-backed for n < 2^16.
pub fn ln_factorial(n: u64) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..LN_FACT_CACHE as u64)
            .map(|i| ln_gamma(i as f64 + 1.0))
            .collect()
    });
    if (n as usize) < LN_FACT_CACHE {
        table[n as usize]
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// ln C(n, k); negative infinity when k > n.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// C(n, k) in f64 (exact for small arguments, correctly rounded-ish beyond).
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    // Product form keeps small cases exact where ln/exp would round.
    if n <= 60 {
        let mut acc = 1.0f64;
        for j in 0..k {
            acc = acc * (n - j) as f64 / (j + 1) as f64;
        }
        acc.round()
    } else {
        ln_binomial(n, k).exp()
    }
}

/// C(a, k) / C(b, k) for a <= b, as a product of k stable ratios.
/// Returns 0 when k > a (the numerator vanishes).
pub fn binomial_ratio(a: u64, b: u64, k: u64) -> f64 {
    debug_assert!(a <= b);
    if k > a {
        return 0.0;
    }
    if k > b {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for j in 0..k {
        acc *= (a - j) as f64 / (b - j) as f64;
    }
    acc
}

/// ln of the binomial pmf C(n,k) p^k (1-p)^(n-k), with exact p ∈ {0,1} edges.
pub fn ln_binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_binomial(n, k) + k as f64 * p.ln() + (n - k) as f64 * (-p).ln_1p()
}

/// log(sum(exp(v))) without overflow; empty input gives -inf.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = v.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Kahan–Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Unevaluated double-double value hi + lo with |lo| <= ulp(hi)/2.
#[derive(Clone, Copy, Debug, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl DoubleDouble {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn add_f64(self, x: f64) -> Self {
        let (s1, e1) = two_sum(self.hi, x);
        let lo = self.lo + e1;
        let (hi, lo) = two_sum(s1, lo);
        Self { hi, lo }
    }

    pub fn add(self, other: Self) -> Self {
        self.add_f64(other.hi).add_f64(other.lo)
    }

    pub fn mul_f64(self, x: f64) -> Self {
        let (p, e) = two_prod(self.hi, x);
        let lo = self.lo.mul_add(x, e);
        let (hi, lo) = two_sum(p, lo);
        Self { hi, lo }
    }

    pub fn mul(self, other: Self) -> Self {
        let (p, e) = two_prod(self.hi, other.hi);
        let lo = self.hi.mul_add(other.lo, self.lo.mul_add(other.hi, e));
        let (hi, lo) = two_sum(p, lo);
        Self { hi, lo }
    }

    pub fn div_f64(self, x: f64) -> Self {
        let q1 = self.hi / x;
        let (p, e) = two_prod(q1, x);
        let q2 = ((self.hi - p) - e + self.lo) / x;
        let (hi, lo) = two_sum(q1, q2);
        Self { hi, lo }
    }

    /// Non-negative integer power by binary exponentiation.
    pub fn powi(self, mut n: u64) -> Self {
        let mut base = self;
        let mut acc = Self::from_f64(1.0);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            n >>= 1;
        }
        acc
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Regularized lower incomplete gamma P(a, x).
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        (1.0 - gamma_q_continued_fraction(a, x)).clamp(0.0, 1.0)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn regularized_gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - gamma_p_series(a, x)).clamp(0.0, 1.0)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..1000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    (sum.ln() + a * x.ln() - x - ln_gamma(a)).exp().clamp(0.0, 1.0)
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    ((a * x.ln() - x - ln_gamma(a)).exp() * h).clamp(0.0, 1.0)
}

/// Survival function of the chi-squared distribution with `dof` degrees of
/// freedom: P(X > x).
pub fn chi_squared_sf(x: f64, dof: f64) -> f64 {
    assert!(dof > 0.0);
    if x <= 0.0 {
        return 1.0;
    }
    regularized_gamma_q(dof / 2.0, x / 2.0)
}

/// Binary entropy in bits; 0 at the endpoints.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

/// Golden-section maximization of a unimodal function on [a, b].
/// Returns (argmax, max). Robust enough for the multimodal callers here when
/// combined with restarts on subintervals.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (hi - lo).abs() < tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    if f1 >= f2 && f1 >= fm {
        (x1, f1)
    } else if f2 >= f1 && f2 >= fm {
        (x2, f2)
    } else {
        (mid, fm)
    }
}
