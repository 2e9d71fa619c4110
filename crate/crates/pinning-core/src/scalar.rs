//! Scalar types shared by the numeric, extended-precision and exact-series
//! code paths.
//!
//! [`Field`] is what the harmonium matrix builder needs: arithmetic plus
//! `sqrt` and `exp`. [`Real`] adds ordering for eigensolvers. Three
//! implementations exist: `f64`, [`Mp`] (binary floating point with `P`
//! bits of mantissa) and [`Series`] (power series with rational
//! coefficients truncated after `δ^K`).

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Field:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(n: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn zero() -> Self {
        Self::from_i64(0)
    }

    fn one() -> Self {
        Self::from_i64(1)
    }

    fn is_zero(&self) -> bool;

    fn sqrt(&self) -> Self;

    fn exp(&self) -> Self;
}

pub trait Real: Field + PartialOrd {
    fn from_f64(x: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;

    fn ln(&self) -> Self;

    /// Unit roundoff of the type.
    fn epsilon() -> Self;
}

impl Field for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn sqrt(&self) -> Self {
        libm::sqrt(*self)
    }

    fn exp(&self) -> Self {
        libm::exp(*self)
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        libm::fabs(*self)
    }

    fn ln(&self) -> Self {
        libm::log(*self)
    }

    fn epsilon() -> Self {
        f64::EPSILON
    }
}

const RM: RoundingMode = RoundingMode::ToEven;

/// Binary floating point with `P` mantissa bits.
#[derive(Clone, Debug)]
pub struct Mp<const P: usize>(BigFloat);

impl<const P: usize> Mp<P> {
    pub fn inner(&self) -> &BigFloat {
        &self.0
    }

    fn consts() -> Consts {
        Consts::new().expect("astro-float constant cache")
    }
}

impl<const P: usize> Add for Mp<P> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Mp(self.0.add(&rhs.0, P, RM))
    }
}

impl<const P: usize> Sub for Mp<P> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Mp(self.0.sub(&rhs.0, P, RM))
    }
}

impl<const P: usize> Mul for Mp<P> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Mp(self.0.mul(&rhs.0, P, RM))
    }
}

impl<const P: usize> Div for Mp<P> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Mp(self.0.div(&rhs.0, P, RM))
    }
}

impl<const P: usize> Neg for Mp<P> {
    type Output = Self;
    fn neg(self) -> Self {
        Mp(self.0.neg())
    }
}

impl<const P: usize> PartialEq for Mp<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.partial_cmp(&other.0) == Some(Ordering::Equal)
    }
}

impl<const P: usize> PartialOrd for Mp<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

impl<const P: usize> Field for Mp<P> {
    fn from_i64(n: i64) -> Self {
        Mp(BigFloat::from_i64(n, P))
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn sqrt(&self) -> Self {
        Mp(self.0.sqrt(P, RM))
    }

    fn exp(&self) -> Self {
        Mp(self.0.exp(P, RM, &mut Self::consts()))
    }
}

impl<const P: usize> Real for Mp<P> {
    fn from_f64(x: f64) -> Self {
        Mp(BigFloat::from_f64(x, P))
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        match self.0.as_raw_parts() {
            Some((words, _, sign, exponent, _)) => {
                // value = 0.m * 2^e with the most significant word last
                let hi = words.last().copied().unwrap_or(0) as f64;
                let lo = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
                let frac = (hi + lo / 18446744073709551616.0) / 18446744073709551616.0;
                let v = libm::ldexp(frac, exponent);
                if sign.is_negative() {
                    -v
                } else {
                    v
                }
            }
            None if self.0.is_nan() => f64::NAN,
            None if self.0.is_negative() => f64::NEG_INFINITY,
            None => f64::INFINITY,
        }
    }

    fn abs(&self) -> Self {
        Mp(self.0.abs())
    }

    fn ln(&self) -> Self {
        Mp(self.0.ln(P, RM, &mut Self::consts()))
    }

    fn epsilon() -> Self {
        let two = BigFloat::from_i64(2, P);
        let e = BigFloat::from_i64(-(P as i64) + 2, P);
        Mp(two.pow(&e, P, RM, &mut Self::consts()))
    }
}

/// Natural logarithm of an [`Mp`] value as `f64`, finite even when the
/// value itself underflows `f64`.
pub fn ln_to_f64<T: Real>(x: &T) -> f64 {
    x.ln().to_f64()
}

/// Truncated power series `c_0 + c_1 δ + ... + c_K δ^K` with rational
/// coefficients.
///
/// Only the operations needed by the harmonium builder are supported:
/// `sqrt` requires a constant term that is the square of a positive
/// rational, `exp` requires a zero constant term and division requires a
/// nonzero constant term. Violations are programming errors and panic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series<const K: usize> {
    c: Vec<BigRational>,
}

impl<const K: usize> Series<K> {
    pub fn from_coeffs(mut c: Vec<BigRational>) -> Self {
        c.resize(K + 1, BigRational::zero());
        c.truncate(K + 1);
        Self { c }
    }

    /// The series `δ`.
    pub fn variable() -> Self {
        let mut c = vec![BigRational::zero(); K + 1];
        if K >= 1 {
            c[1] = BigRational::one();
        }
        Self { c }
    }

    pub fn constant(x: BigRational) -> Self {
        Self::from_coeffs(vec![x])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.c
    }

    pub fn into_coeffs(self) -> Vec<BigRational> {
        self.c
    }

    /// Evaluates the polynomial at `x` in `f64`.
    pub fn eval_f64(&self, x: f64) -> f64 {
        self.c
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    fn inverse(&self) -> Self {
        let c0 = &self.c[0];
        assert!(!c0.is_zero(), "series inverse needs a nonzero constant term");
        let inv0 = c0.recip();
        let mut out = vec![BigRational::zero(); K + 1];
        out[0] = inv0.clone();
        for n in 1..=K {
            let mut s = BigRational::zero();
            for k in 1..=n {
                s += &self.c[k] * &out[n - k];
            }
            out[n] = -s * &inv0;
        }
        Self { c: out }
    }
}

impl<const K: usize> Add for Series<K> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self {
            c: self.c.into_iter().zip(rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<const K: usize> Sub for Series<K> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self {
            c: self.c.into_iter().zip(rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<const K: usize> Mul for Series<K> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = vec![BigRational::zero(); K + 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.c.iter().take(K + 1 - i).enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Self { c: out }
    }
}

impl<const K: usize> Div for Series<K> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        if rhs.c[1..].iter().all(Zero::is_zero) {
            let d = rhs.c[0].clone();
            assert!(!d.is_zero(), "series division by zero");
            return Self {
                c: self.c.into_iter().map(|a| a / &d).collect(),
            };
        }
        self * rhs.inverse()
    }
}

impl<const K: usize> Neg for Series<K> {
    type Output = Self;
    fn neg(self) -> Self {
        Self {
            c: self.c.into_iter().map(|a| -a).collect(),
        }
    }
}

fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

impl<const K: usize> Field for Series<K> {
    fn from_i64(n: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(n)))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::constant(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn is_zero(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    fn sqrt(&self) -> Self {
        let s0 = rational_sqrt(&self.c[0])
            .filter(|s| !s.is_zero())
            .expect("series sqrt needs a positive rational square as constant term");
        let two_s0 = &s0 * BigRational::from_integer(BigInt::from(2));
        let mut out = vec![BigRational::zero(); K + 1];
        out[0] = s0;
        for n in 1..=K {
            let mut acc = self.c[n].clone();
            for i in 1..n {
                acc -= &out[i] * &out[n - i];
            }
            out[n] = acc / &two_s0;
        }
        Self { c: out }
    }

    fn exp(&self) -> Self {
        assert!(self.c[0].is_zero(), "series exp needs a zero constant term");
        let mut out = vec![BigRational::zero(); K + 1];
        out[0] = BigRational::one();
        for n in 1..=K {
            let mut acc = BigRational::zero();
            for k in 1..=n {
                acc += BigRational::from_integer(BigInt::from(k)) * &self.c[k] * &out[n - k];
            }
            out[n] = acc / BigRational::from_integer(BigInt::from(n));
        }
        Self { c: out }
    }
}

impl<const K: usize> fmt::Display for Series<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c}) d")?,
                _ => write!(f, "({c}) d^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}
