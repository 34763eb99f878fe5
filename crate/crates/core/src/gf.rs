//! Arithmetic over binary extension fields GF(2^m) for 1 <= m <= 16.
//!
//! Elements are represented as `u32` values below `q = 2^m`, encoding
//! polynomial coefficients over GF(2) (bit i is the coefficient of x^i).
//! Multiplication and inversion go through log/antilog tables built once at
//! construction; the table build doubles as a primitivity check of the
//! reduction polynomial.

use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// A field element. Valid values are `0..q` for the field that produced it.
pub type Fe = u32;

/// Conventional primitive reduction polynomials, indexed by degree m.
/// Bit i holds the coefficient of x^i, including the leading x^m term.
const PRIMITIVE_POLYS: [u32; 17] = [
    0,       // unused
    0b11,    // x + 1
    0b111,   // x^2 + x + 1
    0b1011,  // x^3 + x + 1
    0b1_0011, // x^4 + x + 1
    0b10_0101,
    0b100_0011,
    0b1000_1001,
    0x11D,
    0x211,
    0x409,
    0x805,
    0x1053,
    0x201B,
    0x4443,
    0x8003,
    0x1100B,
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("unsupported extension degree m={0}; need 1 <= m <= 16")]
    UnsupportedDegree(u32),
    #[error("polynomial {poly:#x} is not a primitive polynomial of degree {m}")]
    NotPrimitive { poly: u32, m: u32 },
}

struct Inner {
    m: u32,
    q: u32,
    poly: u32,
    /// log[a] for a in 1..q (index 0 unused).
    log: Vec<u16>,
    /// exp[i] = x^i for i in 0..2(q-1), doubled so products skip the mod.
    exp: Vec<u16>,
}

/// A binary extension field GF(2^m). Cheap to clone (shared tables).
#[derive(Clone)]
pub struct FieldSpec {
    inner: Arc<Inner>,
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.inner.m == other.inner.m && self.inner.poly == other.inner.poly
    }
}
impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}; poly={:#x})", self.inner.m, self.inner.poly)
    }
}

impl FieldSpec {
    /// The field GF(2^m) under its conventional primitive polynomial.
    pub fn new(m: u32) -> Result<Self, FieldError> {
        if !(1..=16).contains(&m) {
            return Err(FieldError::UnsupportedDegree(m));
        }
        Self::with_poly(m, PRIMITIVE_POLYS[m as usize])
    }

    /// The field of order q (q must be a power of two in 2..=2^16).
    pub fn with_order(q: u32) -> Result<Self, FieldError> {
        if q < 2 || !q.is_power_of_two() {
            return Err(FieldError::UnsupportedDegree(0));
        }
        Self::new(q.trailing_zeros())
    }

    /// GF(2).
    pub fn binary() -> Self {
        Self::new(1).expect("GF(2) always constructs")
    }

    /// Build GF(2^m) modulo a caller-supplied polynomial. The polynomial must
    /// be primitive of degree m; this is verified by checking that x has
    /// multiplicative order exactly 2^m - 1.
    pub fn with_poly(m: u32, poly: u32) -> Result<Self, FieldError> {
        if !(1..=16).contains(&m) {
            return Err(FieldError::UnsupportedDegree(m));
        }
        let q: u32 = 1 << m;
        let bad = FieldError::NotPrimitive { poly, m };
        // Degree must be exactly m and the constant term 1 (otherwise x is a
        // zero divisor and cannot generate the multiplicative group).
        if poly >> m != 1 || poly & 1 == 0 {
            return Err(bad);
        }
        let mask_high = 1u32 << (m - 1);
        let xtimes = |a: u32| -> u32 {
            if a & mask_high != 0 {
                ((a << 1) ^ poly) & (q - 1)
            } else {
                a << 1
            }
        };
        let order = (q - 1) as usize;
        let mut exp = vec![0u16; 2 * order.max(1)];
        let mut log = vec![0u16; q as usize];
        let mut cur = 1u32;
        for i in 0..order {
            if cur == 1 && i > 0 {
                return Err(bad); // x cycled early: not primitive
            }
            exp[i] = cur as u16;
            log[cur as usize] = i as u16;
            cur = xtimes(cur);
        }
        if cur != 1 {
            return Err(bad); // did not return to 1: not irreducible
        }
        for i in 0..order {
            exp[order + i] = exp[i];
        }
        Ok(Self {
            inner: Arc::new(Inner { m, q, poly, log, exp }),
        })
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.inner.q
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.inner.m
    }

    pub fn poly(&self) -> u32 {
        self.inner.poly
    }

    #[inline]
    pub fn is_binary(&self) -> bool {
        self.inner.m == 1
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        a ^ b
    }

    /// Subtraction coincides with addition in characteristic 2.
    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a == 0 || b == 0 {
            return 0;
        }
        let t = &self.inner;
        t.exp[t.log[a as usize] as usize + t.log[b as usize] as usize] as Fe
    }

    /// Multiplicative inverse. Panics on 0.
    #[inline]
    pub fn inv(&self, a: Fe) -> Fe {
        assert!(a != 0, "inverse of zero");
        let t = &self.inner;
        let order = (t.q - 1) as usize;
        t.exp[order - t.log[a as usize] as usize] as Fe
    }

    #[inline]
    pub fn div(&self, a: Fe, b: Fe) -> Fe {
        self.mul(a, self.inv(b))
    }

    pub fn pow(&self, a: Fe, e: u64) -> Fe {
        if a == 0 {
            return u32::from(e == 0);
        }
        let t = &self.inner;
        let order = (t.q - 1) as u64;
        let idx = (t.log[a as usize] as u64 * (e % order)) % order;
        t.exp[idx as usize] as Fe
    }

    /// x^i, the i-th power of the primitive element.
    pub fn alpha_pow(&self, i: u64) -> Fe {
        self.pow(2u32.min(self.inner.q - 1), i)
    }

    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        rng.gen_range(0..self.inner.q)
    }

    pub fn random_nonzero<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        rng.gen_range(1..self.inner.q)
    }

    /// Iterator over all field elements, 0 first.
    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        0..self.inner.q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventional_polys_are_primitive() {
        for m in 1..=16 {
            let f = FieldSpec::new(m).unwrap();
            assert_eq!(f.q(), 1 << m);
        }
    }

    #[test]
    fn gf16_matches_hand_table() {
        // GF(16) mod x^4 + x + 1: alpha^4 = alpha + 1.
        let f = FieldSpec::new(4).unwrap();
        assert_eq!(f.pow(0b0010, 4), 0b0011);
        assert_eq!(f.mul(0b0010, 0b1001), 0b0001); // x * (x^3+1) = x^4+x = 1
        assert_eq!(f.inv(0b0010), 0b1001);
        assert_eq!(f.add(0b1010, 0b0110), 0b1100);
    }

    #[test]
    fn gf16_axioms_exhaustive() {
        let f = FieldSpec::new(4).unwrap();
        for a in f.elements() {
            for b in f.elements() {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for c in f.elements() {
                    assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                    assert_eq!(
                        f.mul(a, f.add(b, c)),
                        f.add(f.mul(a, b), f.mul(a, c))
                    );
                }
            }
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a)), 1);
            }
        }
    }

    #[test]
    fn gf256_inverses_exhaustive() {
        let f = FieldSpec::new(8).unwrap();
        for a in 1..f.q() {
            let inv = f.inv(a);
            assert_eq!(f.mul(a, inv), 1);
            assert_eq!(f.div(a, a), 1);
        }
    }

    #[test]
    fn binary_field_is_mod_two() {
        let f = FieldSpec::binary();
        assert_eq!(f.add(1, 1), 0);
        assert_eq!(f.mul(1, 1), 1);
        assert_eq!(f.mul(1, 0), 0);
        assert_eq!(f.inv(1), 1);
    }

    #[test]
    fn pow_edge_cases() {
        let f = FieldSpec::new(4).unwrap();
        assert_eq!(f.pow(0, 0), 1);
        assert_eq!(f.pow(0, 5), 0);
        assert_eq!(f.pow(7, 0), 1);
        // Fermat: a^(q-1) = 1
        for a in 1..f.q() {
            assert_eq!(f.pow(a, 15), 1);
        }
    }

    #[test]
    fn rejects_non_primitive_polynomials() {
        // x^4+x^3+x^2+x+1 is irreducible but has x of order 5: not primitive.
        assert!(FieldSpec::with_poly(4, 0b11111).is_err());
        // x^4+x^2+1 = (x^2+x+1)^2 is reducible.
        assert!(FieldSpec::with_poly(4, 0b10101).is_err());
        // Wrong degree.
        assert!(FieldSpec::with_poly(4, 0b1011).is_err());
        // Even constant term.
        assert!(FieldSpec::with_poly(4, 0b10010).is_err());
    }

    #[test]
    fn with_order_maps_q_to_m() {
        assert_eq!(FieldSpec::with_order(2).unwrap().m(), 1);
        assert_eq!(FieldSpec::with_order(16).unwrap().m(), 4);
        assert_eq!(FieldSpec::with_order(256).unwrap().m(), 8);
        assert!(FieldSpec::with_order(3).is_err());
        assert!(FieldSpec::with_order(0).is_err());
    }
}
