//! Coefficient rings shared by the polyvector and Hochschild algebra.
//!
//! Three rings are provided: exact rationals, plain floats, and [`Sensitive`],
//! a float that carries first-order sensitivities with respect to a set of
//! Monte-Carlo weights so that statistical error bars can be pushed through
//! any multilinear expression.

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => Some(Rational::from_integer(text.parse().ok()?)),
    }
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_int(value: i64) -> Self;
    fn from_rational(value: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Text form used by the file formats (`p/q` for exact values).
    fn to_text(&self) -> String;
    /// Coefficient standing for a graph weight: `exact` when known, otherwise
    /// the sampled `value`, tagged with the weight's slot `index`. `None` when
    /// this ring cannot hold an inexact weight.
    fn from_weight(value: f64, exact: Option<&Rational>, index: u32) -> Option<Self>;

    fn scale_int(&self, k: i64) -> Self {
        self.clone() * Self::from_int(k)
    }
}

impl Scalar for Rational {
    fn from_int(value: i64) -> Self {
        Rational::from_integer(BigInt::from(value))
    }
    fn from_rational(value: &Rational) -> Self {
        value.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_text(&self) -> String {
        format_rational(self)
    }
    fn from_weight(_: f64, exact: Option<&Rational>, _: u32) -> Option<Self> {
        exact.cloned()
    }
}

impl Scalar for f64 {
    fn from_int(value: i64) -> Self {
        value as f64
    }
    fn from_rational(value: &Rational) -> Self {
        ToPrimitive::to_f64(value).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_text(&self) -> String {
        format!("{self:e}")
    }
    fn from_weight(value: f64, exact: Option<&Rational>, _: u32) -> Option<Self> {
        Some(exact.map_or(value, <f64 as Scalar>::from_rational))
    }
}

/// Absolute slack for floating-point cancellation in residual checks.
pub const EXACT_FLOOR: f64 = 1e-9;

/// Summary of a residual made of weight-sensitive coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Assessment {
    /// Largest absolute coefficient.
    pub norm: f64,
    /// Largest propagated error bound over the coefficients.
    pub bound: f64,
    /// Largest `|value| / bound` (0 when every coefficient vanishes).
    pub worst_ratio: f64,
    pub pass: bool,
}

pub fn assess<'a>(values: impl IntoIterator<Item = &'a Sensitive>, stderr: &[f64], tolerance: f64) -> Assessment {
    let mut a = Assessment { norm: 0.0, bound: 0.0, worst_ratio: 0.0, pass: true };
    for v in values {
        let b = v.error_bound(stderr);
        a.norm = a.norm.max(v.value.abs());
        a.bound = a.bound.max(b);
        if v.value.abs() > EXACT_FLOOR {
            a.worst_ratio = a.worst_ratio.max(if b > 0.0 { v.value.abs() / b } else { f64::INFINITY });
        }
        a.pass &= v.within(stderr, tolerance);
    }
    a
}

/// A float together with its partial derivatives with respect to indexed
/// weights. The gradient is kept sparse and sorted by weight index.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Sensitive {
    pub value: f64,
    pub grad: Vec<(u32, f64)>,
}

impl Sensitive {
    pub fn constant(value: f64) -> Self {
        Sensitive { value, grad: Vec::new() }
    }

    /// A weight variable: value `value`, unit derivative in slot `index`.
    pub fn variable(value: f64, index: u32) -> Self {
        Sensitive { value, grad: vec![(index, 1.0)] }
    }

    /// First-order error bound `Σ |∂/∂w_i| σ_i`.
    pub fn error_bound(&self, stderr: &[f64]) -> f64 {
        self.grad
            .iter()
            .map(|&(i, d)| d.abs() * stderr.get(i as usize).copied().unwrap_or(0.0))
            .fold(0.0, |acc, x| acc + x)
    }

    /// `|value| <= tolerance * error_bound + EXACT_FLOOR`.
    pub fn within(&self, stderr: &[f64], tolerance: f64) -> bool {
        self.value.abs() <= tolerance * self.error_bound(stderr) + EXACT_FLOOR
    }

    fn combine(a: &[(u32, f64)], sa: f64, b: &[(u32, f64)], sb: f64) -> Vec<(u32, f64)> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&(ka, va)), Some(&(kb, vb))) if ka == kb => {
                    i += 1;
                    j += 1;
                    (ka, va * sa + vb * sb)
                }
                (Some(&(ka, va)), Some(&(kb, _))) if ka < kb => {
                    i += 1;
                    (ka, va * sa)
                }
                (Some(&(ka, va)), None) => {
                    i += 1;
                    (ka, va * sa)
                }
                (_, Some(&(kb, vb))) => {
                    j += 1;
                    (kb, vb * sb)
                }
                (None, None) => unreachable!(),
            };
            if next.1 != 0.0 {
                out.push(next);
            }
        }
        out
    }
}

impl Add for Sensitive {
    type Output = Sensitive;
    fn add(self, rhs: Sensitive) -> Sensitive {
        Sensitive {
            value: self.value + rhs.value,
            grad: Sensitive::combine(&self.grad, 1.0, &rhs.grad, 1.0),
        }
    }
}

impl Sub for Sensitive {
    type Output = Sensitive;
    fn sub(self, rhs: Sensitive) -> Sensitive {
        Sensitive {
            value: self.value - rhs.value,
            grad: Sensitive::combine(&self.grad, 1.0, &rhs.grad, -1.0),
        }
    }
}

impl Mul for Sensitive {
    type Output = Sensitive;
    fn mul(self, rhs: Sensitive) -> Sensitive {
        Sensitive {
            value: self.value * rhs.value,
            grad: Sensitive::combine(&self.grad, rhs.value, &rhs.grad, self.value),
        }
    }
}

impl Neg for Sensitive {
    type Output = Sensitive;
    fn neg(self) -> Sensitive {
        Sensitive {
            value: -self.value,
            grad: self.grad.into_iter().map(|(k, v)| (k, -v)).collect(),
        }
    }
}

impl Zero for Sensitive {
    fn zero() -> Self {
        Sensitive::constant(0.0)
    }
    fn is_zero(&self) -> bool {
        self.value == 0.0 && self.grad.is_empty()
    }
}

impl One for Sensitive {
    fn one() -> Self {
        Sensitive::constant(1.0)
    }
}

impl Scalar for Sensitive {
    fn from_int(value: i64) -> Self {
        Sensitive::constant(value as f64)
    }
    fn from_rational(value: &Rational) -> Self {
        Sensitive::constant(<f64 as Scalar>::from_rational(value))
    }
    fn to_f64(&self) -> f64 {
        self.value
    }
    fn to_text(&self) -> String {
        format!("{:e}", self.value)
    }
    fn from_weight(value: f64, exact: Option<&Rational>, index: u32) -> Option<Self> {
        Some(match exact {
            Some(r) => Sensitive::from_rational(r),
            None => Sensitive::variable(value, index),
        })
    }
}

impl Display for Sensitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

pub fn abs_f64<C: Scalar>(c: &C) -> f64 {
    c.to_f64().abs()
}

pub fn rational_abs(r: &Rational) -> Rational {
    r.abs()
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_text_round_trip() {
        let r = rational(-13, 12);
        assert_eq!(format_rational(&r), "-13/12");
        assert_eq!(parse_rational("-13/12"), Some(r));
        assert_eq!(parse_rational("4"), Some(rational(4, 1)));
        assert_eq!(parse_rational("1/0"), None);
    }

    #[test]
    fn sensitivity_product_rule() {
        let a = Sensitive::variable(2.0, 0);
        let b = Sensitive::variable(3.0, 1);
        let c = a.clone() * b + a * Sensitive::constant(5.0);
        assert_eq!(c.value, 16.0);
        assert_eq!(c.grad, vec![(0, 8.0), (1, 2.0)]);
        assert!((c.error_bound(&[0.1, 0.01]) - 0.82).abs() < 1e-12);
    }

    #[test]
    fn cancelling_gradients_are_dropped() {
        let a = Sensitive::variable(1.0, 3);
        let d = a.clone() - a;
        assert!(d.is_zero());
    }
}
