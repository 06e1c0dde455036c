//! Directed-rounding enclosures for the few non-rational quantities.
//!
//! Everything in this crate is an exact rational except powers with a
//! non-integer exponent `β = p/q`. Those are evaluated as enclosures
//! `[lo, hi]` of exact rationals whose endpoints are dyadics computed with
//! outward rounding at a requested precision: `x^{1/q}` is bracketed via the
//! exact integer `q`-th root of `⌊x·2^{q·bits}⌋`, so no floating point ever
//! enters the computation. Rational inputs stay exact (`Value::Exact`).

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::params::Beta;

/// Guard bits added on top of the requested precision.
const GUARD_BITS: u32 = 16;

/// An exact rational interval `[lo, hi]` known to contain the true value,
/// with endpoints outward-rounded at `bits` of working precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Enclosure {
    pub lo: BigRational,
    pub hi: BigRational,
    pub bits: u32,
}

impl Enclosure {
    pub fn exact(v: BigRational, bits: u32) -> Self {
        Enclosure {
            lo: v.clone(),
            hi: v,
            bits,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigRational::from_integer(2.into())
    }

    pub fn to_f64(&self) -> f64 {
        self.midpoint().to_f64().unwrap_or(f64::NAN)
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
            bits: self.bits.min(other.bits),
        }
    }

    /// Scale by a nonnegative exact rational.
    pub fn scale(&self, c: &BigRational) -> Enclosure {
        debug_assert!(!c.is_negative());
        Enclosure {
            lo: &self.lo * c,
            hi: &self.hi * c,
            bits: self.bits,
        }
    }

    /// Quotient of enclosures of positive values.
    pub fn div(&self, den: &Enclosure) -> Enclosure {
        debug_assert!(den.lo.is_positive());
        Enclosure {
            lo: &self.lo / &den.hi,
            hi: &self.hi / &den.lo,
            bits: self.bits.min(den.bits),
        }
    }
}

/// An exactly-known or enclosure-valued number.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(BigRational),
    Approx(Enclosure),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Approx(e) => e.to_f64(),
        }
    }

    pub fn midpoint(&self) -> BigRational {
        match self {
            Value::Exact(r) => r.clone(),
            Value::Approx(e) => e.midpoint(),
        }
    }

    /// `"exact"` or `"approx(<bits>)"` — the rounding note carried into CSV.
    pub fn mode(&self) -> String {
        match self {
            Value::Exact(_) => "exact".into(),
            Value::Approx(e) => format!("approx({})", e.bits),
        }
    }

    pub fn exact_value(&self) -> Option<&BigRational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Approx(_) => None,
        }
    }

    fn as_enclosure(&self, bits: u32) -> Enclosure {
        match self {
            Value::Exact(r) => Enclosure::exact(r.clone(), bits),
            Value::Approx(e) => e.clone(),
        }
    }

    /// Product of nonnegative values.
    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            (a, b) => {
                let (ea, eb) = (a.as_enclosure(u32::MAX), b.as_enclosure(u32::MAX));
                let bits = ea.bits.min(eb.bits);
                Value::Approx(Enclosure {
                    lo: &ea.lo * &eb.lo,
                    hi: &ea.hi * &eb.hi,
                    bits,
                })
            }
        }
    }

    /// Quotient by a positive value.
    pub fn div(&self, den: &Value) -> Value {
        match (self, den) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a / b),
            (a, b) => {
                let (ea, eb) = (a.as_enclosure(u32::MAX), b.as_enclosure(u32::MAX));
                let bits = ea.bits.min(eb.bits);
                Value::Approx(ea.div(&Enclosure { bits, ..eb }))
            }
        }
    }

    /// Difference (result may be negative; enclosures widen outward).
    pub fn sub(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a - b),
            (a, b) => {
                let (ea, eb) = (a.as_enclosure(u32::MAX), b.as_enclosure(u32::MAX));
                let bits = ea.bits.min(eb.bits);
                Value::Approx(Enclosure {
                    lo: &ea.lo - &eb.hi,
                    hi: &ea.hi - &eb.lo,
                    bits,
                })
            }
        }
    }

    /// Definitely nonnegative (for exact values, plain sign; for
    /// enclosures, the lower endpoint decides).
    pub fn is_nonneg(&self) -> bool {
        match self {
            Value::Exact(r) => !r.is_negative(),
            Value::Approx(e) => !e.lo.is_negative(),
        }
    }

    /// Possibly nonnegative (upper endpoint not below zero).
    pub fn may_be_nonneg(&self) -> bool {
        match self {
            Value::Exact(r) => !r.is_negative(),
            Value::Approx(e) => !e.hi.is_negative(),
        }
    }
}

fn biguint_ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Enclose `x^{1/q}` for a nonnegative rational `x`.
///
/// With `z = ⌊x·2^{q·prec}⌋` and `y = ⌊z^{1/q}⌋`, the true root lies in
/// `[y/2^prec, (y+1)/2^prec]`; the lower bound is exact because the floor of
/// a root of a floor equals the floor of the root.
pub fn root_enclosure(x: &BigRational, q: u32, bits: u32) -> Result<Enclosure> {
    if x.is_negative() {
        return Err(Error::Invalid("root of a negative value".into()));
    }
    if q == 1 {
        return Ok(Enclosure::exact(x.clone(), bits));
    }
    let prec = bits + GUARD_BITS;
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    let scaled = (num << (q as u64 * prec as u64)) / den;
    let y = scaled.nth_root(q);
    let denom = BigUint::one() << prec;
    let exact = y.pow(q) * den == num << (q as u64 * prec as u64);
    let lo = biguint_ratio(y.clone(), denom.clone());
    let hi = if exact {
        lo.clone()
    } else {
        biguint_ratio(y + BigUint::one(), denom)
    };
    Ok(Enclosure { lo, hi, bits })
}

/// `x^{p/q}` for nonnegative rational `x` and any nonnegative rational
/// exponent: exact when `q = 1`, else an enclosure of `(x^p)^{1/q}`.
pub fn pow_value_frac(x: &BigRational, p: u32, q: u32, bits: u32) -> Result<Value> {
    if x.is_negative() {
        return Err(Error::Invalid("power of a negative value".into()));
    }
    if q == 0 {
        return Err(Error::Invalid("zero exponent denominator".into()));
    }
    let xp = pow_rational(x, p);
    // q-th roots of 0 and 1 stay exact
    if q == 1 || xp.is_zero() || xp.is_one() {
        return Ok(Value::Exact(xp));
    }
    Ok(Value::Approx(root_enclosure(&xp, q, bits)?))
}

/// `x^β` for a moment exponent `β ≥ 1`.
pub fn pow_value(x: &BigRational, beta: &Beta, bits: u32) -> Result<Value> {
    pow_value_frac(x, beta.numer(), beta.denom(), bits)
}

/// Exact integer power of a rational.
pub fn pow_rational(x: &BigRational, p: u32) -> BigRational {
    BigRational::new(x.numer().pow(p), x.denom().pow(p))
}

/// Deterministic decimal rendering of an exact rational with `digits`
/// fractional digits, rounding half away from zero.
pub fn decimal_string(r: &BigRational, digits: usize) -> String {
    let sign = if r.is_negative() { "-" } else { "" };
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let scale = BigUint::from(10u32).pow(digits as u32);
    let scaled = num * &scale;
    let q = &scaled / den;
    let r2 = &scaled % den;
    // round half away from zero
    let q = if &r2 * 2u32 >= *den { q + 1u32 } else { q };
    let int = &q / &scale;
    let frac = &q % &scale;
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac:0>width$}", width = digits)
    }
}

/// Decimal digits needed to faithfully carry `bits` bits of precision.
pub fn digits_for_bits(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1
}

/// Render a [`Value`] at the given binary precision.
pub fn render_value(v: &Value, bits: u32) -> String {
    let digits = digits_for_bits(bits);
    decimal_string(&v.midpoint(), digits)
}
