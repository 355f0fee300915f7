//! Nonnegative floating point numbers with an unbounded binary exponent.
//!
//! The dynamic-programming path only ever adds nonnegative terms, so a
//! mantissa in `[1, 2)` paired with an `i64` exponent never loses range and
//! never needs a transcendental call in the inner loop.

const MANTISSA_MASK: u64 = (1u64 << 52) - 1;
const ZERO_EXP: i64 = i64::MIN / 4;
/// Shifts larger than this make the smaller addend irrelevant.
const MAX_SHIFT: i64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Ext {
    m: f64,
    e: i64,
}

impl Ext {
    pub const ZERO: Ext = Ext { m: 0.0, e: ZERO_EXP };
    pub const ONE: Ext = Ext { m: 1.0, e: 0 };

    /// Panics in debug builds on negative or non-finite input.
    pub fn from_f64(x: f64) -> Ext {
        debug_assert!(x >= 0.0 && x.is_finite());
        Ext::normalized(x, 0)
    }

    #[cfg(test)]
    pub fn from_ln(ln: f64) -> Ext {
        if ln == f64::NEG_INFINITY {
            return Ext::ZERO;
        }
        let e2 = ln / std::f64::consts::LN_2;
        let whole = e2.floor();
        let frac = ln - whole * std::f64::consts::LN_2;
        Ext::normalized(frac.exp(), whole as i64)
    }

    pub fn is_zero(self) -> bool {
        self.m == 0.0
    }

    pub fn ln(self) -> f64 {
        if self.m == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.m.ln() + self.e as f64 * std::f64::consts::LN_2
        }
    }

    #[inline(always)]
    fn normalized(m: f64, e: i64) -> Ext {
        if m == 0.0 {
            return Ext::ZERO;
        }
        let bits = m.to_bits();
        let raw = ((bits >> 52) & 0x7ff) as i64;
        if raw == 0 {
            // subnormal mantissa; rescale once and retry
            return Ext::normalized(m * f64::from_bits(((1023 + 64) as u64) << 52), e - 64);
        }
        Ext {
            m: f64::from_bits((bits & MANTISSA_MASK) | (1023u64 << 52)),
            e: e + raw - 1023,
        }
    }

    #[inline(always)]
    fn pow2_neg(d: i64) -> f64 {
        if d > MAX_SHIFT {
            0.0
        } else {
            f64::from_bits(((1023 - d) as u64) << 52)
        }
    }

    #[cfg(test)]
    pub fn mul(self, other: Ext) -> Ext {
        if self.m == 0.0 || other.m == 0.0 {
            return Ext::ZERO;
        }
        Ext::normalized(self.m * other.m, self.e + other.e)
    }

    #[cfg(test)]
    pub fn add(self, other: Ext) -> Ext {
        let d = other.e - self.e;
        if d >= 0 {
            Ext::normalized(self.m * Ext::pow2_neg(d) + other.m, other.e)
        } else {
            Ext::normalized(self.m + other.m * Ext::pow2_neg(-d), self.e)
        }
    }

    /// `self + a * b`, the single update of the elementary-symmetric DP.
    #[inline(always)]
    pub fn add_product(self, a: Ext, b: Ext) -> Ext {
        let tm = a.m * b.m;
        let te = a.e + b.e;
        let d = te - self.e;
        if d >= 0 {
            Ext::normalized(self.m * Ext::pow2_neg(d) + tm, te)
        } else {
            Ext::normalized(self.m + tm * Ext::pow2_neg(-d), self.e)
        }
    }
}
