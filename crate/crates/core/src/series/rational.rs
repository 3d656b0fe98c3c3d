//! Exact rationals and the cyclotomic field Q(ξ), ξ a primitive cube root of unity.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::SeriesError;

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

/// Shorthand for `n/d` as a [`Rational`].
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Formats a rational as `"p"` or `"p/q"`.
pub fn fmt_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, SeriesError> {
    let s = s.trim();
    let bad = || SeriesError::Parse(s.to_string());
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
        None => Ok(Rational::from_integer(
            BigInt::from_str(s).map_err(|_| bad())?,
        )),
    }
}

/// Element `re + xi·ξ` of Q(ξ) with ξ² = −1 − ξ.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct CycRational {
    pub re: Rational,
    pub xi: Rational,
}

impl CycRational {
    pub fn new(re: Rational, xi: Rational) -> Self {
        Self { re, xi }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from(Rational::one())
    }

    /// ξ itself.
    pub fn xi() -> Self {
        Self::new(Rational::zero(), Rational::one())
    }

    /// ξ^k for any integer k.
    pub fn xi_pow(k: i64) -> Self {
        match k.rem_euclid(3) {
            0 => Self::one(),
            1 => Self::xi(),
            _ => Self::new(-Rational::one(), -Rational::one()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.xi.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.xi.is_zero()
    }

    /// The rational value, if the ξ-part vanishes.
    pub fn as_rational(&self) -> Option<&Rational> {
        self.xi.is_zero().then_some(&self.re)
    }

    /// Galois conjugate ξ ↦ ξ² = −1 − ξ.
    pub fn conj(&self) -> Self {
        Self::new(&self.re - &self.xi, -self.xi.clone())
    }

    /// Field norm a² − ab + b², a rational.
    pub fn norm(&self) -> Rational {
        &self.re * &self.re - &self.re * &self.xi + &self.xi * &self.xi
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        let c = self.conj();
        Some(Self::new(c.re / &n, c.xi / n))
    }

    pub fn scale(&self, r: &Rational) -> Self {
        Self::new(&self.re * r, &self.xi * r)
    }

    pub fn pow(&self, e: i64) -> Self {
        if e < 0 {
            return self.inv().expect("zero to a negative power").pow(-e);
        }
        let mut base = self.clone();
        let mut acc = Self::one();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Canonical string: `"p/q"` when rational, otherwise `"p/q+r/s*x"`.
    pub fn to_exact_string(&self) -> String {
        if self.xi.is_zero() {
            return fmt_rational(&self.re);
        }
        let sign = if self.xi.is_negative() { "-" } else { "+" };
        format!(
            "{}{}{}*x",
            fmt_rational(&self.re),
            sign,
            fmt_rational(&self.xi.abs())
        )
    }

    pub fn parse(s: &str) -> Result<Self, SeriesError> {
        let s = s.trim();
        if let Some(body) = s.strip_suffix("*x") {
            // split at the last sign that is not the leading one
            let idx = body
                .char_indices()
                .skip(1)
                .filter(|(_, c)| *c == '+' || *c == '-')
                .map(|(i, _)| i)
                .last()
                .ok_or_else(|| SeriesError::Parse(s.to_string()))?;
            let re = parse_rational(&body[..idx])?;
            let xi = parse_rational(body[idx..].trim_start_matches('+'))?;
            Ok(Self::new(re, xi))
        } else {
            Ok(Self::from(parse_rational(s)?))
        }
    }
}

impl From<Rational> for CycRational {
    fn from(re: Rational) -> Self {
        Self {
            re,
            xi: Rational::zero(),
        }
    }
}

impl From<i64> for CycRational {
    fn from(n: i64) -> Self {
        Self::from(int(n))
    }
}

impl fmt::Display for CycRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_exact_string())
    }
}

impl<'a> Add<&'a CycRational> for &'a CycRational {
    type Output = CycRational;
    fn add(self, o: &CycRational) -> CycRational {
        CycRational::new(&self.re + &o.re, &self.xi + &o.xi)
    }
}

impl<'a> Sub<&'a CycRational> for &'a CycRational {
    type Output = CycRational;
    fn sub(self, o: &CycRational) -> CycRational {
        CycRational::new(&self.re - &o.re, &self.xi - &o.xi)
    }
}

impl<'a> Mul<&'a CycRational> for &'a CycRational {
    type Output = CycRational;
    fn mul(self, o: &CycRational) -> CycRational {
        if self.xi.is_zero() {
            return o.scale(&self.re);
        }
        if o.xi.is_zero() {
            return self.scale(&o.re);
        }
        // (a + bξ)(c + dξ) = ac − bd + (ad + bc − bd)ξ
        let ac = &self.re * &o.re;
        let bd = &self.xi * &o.xi;
        let ad = &self.re * &o.xi;
        let bc = &self.xi * &o.re;
        CycRational::new(&ac - &bd, ad + bc - bd)
    }
}

impl Neg for CycRational {
    type Output = CycRational;
    fn neg(self) -> CycRational {
        CycRational::new(-self.re, -self.xi)
    }
}

impl Neg for &CycRational {
    type Output = CycRational;
    fn neg(self) -> CycRational {
        CycRational::new(-self.re.clone(), -self.xi.clone())
    }
}

impl AddAssign<&CycRational> for CycRational {
    fn add_assign(&mut self, o: &CycRational) {
        self.re += &o.re;
        self.xi += &o.xi;
    }
}

impl SubAssign<&CycRational> for CycRational {
    fn sub_assign(&mut self, o: &CycRational) {
        self.re -= &o.re;
        self.xi -= &o.xi;
    }
}

impl MulAssign<&CycRational> for CycRational {
    fn mul_assign(&mut self, o: &CycRational) {
        *self = &*self * o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_is_a_cube_root_of_unity() {
        let x = CycRational::xi();
        assert_eq!(x.pow(3), CycRational::one());
        let s = &(&CycRational::one() + &x) + &x.pow(2);
        assert!(s.is_zero());
        assert_eq!(CycRational::xi_pow(-1), x.pow(2));
    }

    #[test]
    fn inverse_and_norm() {
        let a = CycRational::new(rat(2, 3), rat(-5, 7));
        let one = &a * &a.inv().unwrap();
        assert_eq!(one, CycRational::one());
        assert!(CycRational::zero().inv().is_none());
        // 1 − ξ has norm 3
        let w = CycRational::new(int(1), int(-1));
        assert_eq!(w.norm(), int(3));
    }

    #[test]
    fn exact_strings_round_trip() {
        for v in [
            CycRational::from(rat(-3, 4)),
            CycRational::new(rat(1, 2), rat(-7, 3)),
            CycRational::new(int(0), int(5)),
        ] {
            let s = v.to_exact_string();
            assert_eq!(CycRational::parse(&s).unwrap(), v, "{s}");
        }
        assert_eq!(fmt_rational(&rat(6, 3)), "2");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }
}
