//! Scalar abstraction shared by every score computation.
//!
//! Scores are sums of products of small ratios (permutation weights, tuple
//! probabilities, 1/(1+k) responsibilities). Any field-like numeric type that
//! can be built from a ratio of integers works; the exact instantiation is
//! [`BigRational`], the approximate ones are `f64` and `f32`.

use std::fmt::Debug;
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Numeric type a score can be computed in.
pub trait Scalar: Num + Clone + Debug + PartialOrd + Sum + Send + Sync + 'static {
    /// `num / den`. `den` must be nonzero.
    fn from_ratio(num: u128, den: u128) -> Self;

    fn from_count(n: u128) -> Self {
        Self::from_ratio(n, 1)
    }

    fn as_f64(&self) -> f64;

    fn abs_value(&self) -> Self {
        if *self < Self::zero() {
            Self::zero() - self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: u128, den: u128) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn as_f64(&self) -> f64 {
        // numer/denom may not fit in f64 individually even when the ratio does
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                let shift = self.denom().bits().saturating_sub(60) as usize;
                let n = (self.numer() >> shift).to_f64().unwrap_or(f64::NAN);
                let d = (self.denom() >> shift).to_f64().unwrap_or(f64::NAN);
                n / d
            }
        }
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }
}

impl Scalar for f64 {
    fn from_ratio(num: u128, den: u128) -> Self {
        num as f64 / den as f64
    }

    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn from_ratio(num: u128, den: u128) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn as_f64(&self) -> f64 {
        *self as f64
    }
}

/// `1 / (1 + k)`, the responsibility attached to a minimum contingency of size `k`.
pub fn inverse_succ<S: Scalar>(k: usize) -> S {
    S::from_ratio(1, k as u128 + 1)
}

/// Shapley permutation weight `k! (n-k-1)! / n!` for a coalition of size `k`
/// among `n` players.
pub fn shapley_weight<S: Scalar>(n: usize, k: usize) -> S {
    debug_assert!(k < n);
    // k!(n-k-1)!/n! = 1 / (n * C(n-1, k))
    S::from_ratio(1, n as u128 * binomial(n as u128 - 1, k as u128))
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Renders a rational as `p/q`, always with an explicit denominator.
pub fn ratio_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// serde adapter writing a rational as its `p/q` string.
pub fn serialize_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&ratio_string(r))
}

/// Parses `p/q`, a bare integer, or a finite decimal such as `0.05`.
pub fn parse_ratio(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let negative = int.starts_with('-');
        let int_part: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let frac_num: BigInt = frac.parse().ok()?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac = BigRational::new(frac_num, scale);
        let whole = BigRational::from_integer(int_part.abs());
        let value = whole + frac;
        return Some(if negative { -value } else { value });
    }
    let n: BigInt = text.parse().ok()?;
    Some(BigRational::from_integer(n))
}

/// Decimal rendering with a fixed number of fractional digits.
pub fn decimal_string(r: &BigRational, digits: usize) -> String {
    let negative = r.is_negative();
    let r = r.abs();
    let scale = num_traits::pow(BigInt::from(10), digits);
    let scaled = (r * BigRational::from_integer(scale.clone())).round().to_integer();
    let int = &scaled / &scale;
    let frac = &scaled % &scale;
    let sign = if negative && !scaled.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{:0>width$}", frac.to_string(), width = digits)
    }
}
