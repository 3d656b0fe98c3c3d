//! Dense truncated power series over Q(ξ).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::rational::{CycRational, Rational};
use super::SeriesError;

/// Formal variable a series is expanded in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Var {
    /// The complex-structure parameter `q`.
    SmallQ,
    /// The modular variable `Q`.
    BigQ,
    Z,
    L,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::SmallQ => "q",
            Var::BigQ => "Q",
            Var::Z => "z",
            Var::L => "L",
        })
    }
}

/// `c_0 + c_1 x + … + c_N x^N + O(x^{N+1})`; `order()` is the inclusive
/// truncation order `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSeries {
    coeffs: Vec<CycRational>,
    var: Var,
}

impl PowerSeries {
    pub fn from_coeffs(var: Var, coeffs: Vec<CycRational>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least one coefficient");
        Self { coeffs, var }
    }

    pub fn from_rationals(var: Var, coeffs: impl IntoIterator<Item = Rational>) -> Self {
        Self::from_coeffs(var, coeffs.into_iter().map(CycRational::from).collect())
    }

    pub fn from_ints(var: Var, coeffs: &[i64]) -> Self {
        Self::from_coeffs(var, coeffs.iter().map(|&c| CycRational::from(c)).collect())
    }

    pub fn zero(var: Var, order: usize) -> Self {
        Self::from_coeffs(var, vec![CycRational::zero(); order + 1])
    }

    pub fn constant(var: Var, order: usize, c: CycRational) -> Self {
        let mut s = Self::zero(var, order);
        s.coeffs[0] = c;
        s
    }

    pub fn one(var: Var, order: usize) -> Self {
        Self::constant(var, order, CycRational::one())
    }

    /// The series `x` itself.
    pub fn identity(var: Var, order: usize) -> Self {
        Self::monomial(var, order, 1, CycRational::one())
    }

    pub fn monomial(var: Var, order: usize, power: usize, c: CycRational) -> Self {
        let mut s = Self::zero(var, order);
        if power <= order {
            s.coeffs[power] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn var(&self) -> Var {
        self.var
    }

    pub fn coeffs(&self) -> &[CycRational] {
        &self.coeffs
    }

    /// Coefficient of `x^i`; zero beyond the stored range is *not* assumed,
    /// so asking past the order panics.
    pub fn coeff(&self, i: usize) -> &CycRational {
        &self.coeffs[i]
    }

    pub fn set_coeff(&mut self, i: usize, c: CycRational) {
        self.coeffs[i] = c;
    }

    pub fn constant_term(&self) -> &CycRational {
        &self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(CycRational::is_zero)
    }

    /// True when every coefficient has vanishing ξ-part.
    pub fn is_rational(&self) -> bool {
        self.coeffs.iter().all(CycRational::is_rational)
    }

    /// Rational coefficients, or the first index carrying a ξ-part.
    pub fn rational_coeffs(&self) -> Result<Vec<Rational>, usize> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.as_rational().cloned().ok_or(i))
            .collect()
    }

    /// Index of the first nonzero coefficient.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn with_var(mut self, var: Var) -> Self {
        self.var = var;
        self
    }

    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        Self::from_coeffs(self.var, self.coeffs[..=n].to_vec())
    }

    fn check_var(&self, other: &Self) -> Result<(), SeriesError> {
        if self.var != other.var {
            return Err(SeriesError::VarMismatch {
                left: self.var,
                right: other.var,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_var(other)?;
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect();
        Ok(Self::from_coeffs(self.var, coeffs))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_var(other)?;
        let n = self.order().min(other.order());
        let coeffs = (0..=n).map(|i| &self.coeffs[i] - &other.coeffs[i]).collect();
        Ok(Self::from_coeffs(self.var, coeffs))
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_var(other)?;
        let n = self.order().min(other.order());
        let a_rat = self.is_rational();
        let b_rat = other.is_rational();
        let mut out = Vec::with_capacity(n + 1);
        if a_rat && b_rat {
            for k in 0..=n {
                let mut acc = Rational::zero();
                for i in 0..=k {
                    let (x, y) = (&self.coeffs[i].re, &other.coeffs[k - i].re);
                    if !x.is_zero() && !y.is_zero() {
                        acc += x * y;
                    }
                }
                out.push(CycRational::from(acc));
            }
        } else {
            for k in 0..=n {
                let mut acc = CycRational::zero();
                for i in 0..=k {
                    let (x, y) = (&self.coeffs[i], &other.coeffs[k - i]);
                    if !x.is_zero() && !y.is_zero() {
                        acc += &(x * y);
                    }
                }
                out.push(acc);
            }
        }
        Ok(Self::from_coeffs(self.var, out))
    }

    pub fn scale(&self, c: &CycRational) -> Self {
        Self::from_coeffs(self.var, self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        Self::from_coeffs(self.var, self.coeffs.iter().map(|x| x.scale(r)).collect())
    }

    pub fn add_constant(&self, c: &CycRational) -> Self {
        let mut s = self.clone();
        s.coeffs[0] += c;
        s
    }

    /// Multiplies by `x^k`, keeping the order.
    pub fn shift(&self, k: usize) -> Self {
        let n = self.order();
        let mut s = Self::zero(self.var, n);
        for i in k..=n {
            s.coeffs[i] = self.coeffs[i - k].clone();
        }
        s
    }

    /// `x·d/dx`: coefficient of `x^d` multiplied by `d`.
    pub fn qddq(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(d, c)| c.scale(&Rational::from_integer(BigInt::from(d))))
            .collect();
        Self::from_coeffs(self.var, coeffs)
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn invert_unit(&self) -> Result<Self, SeriesError> {
        let a0inv = self.coeffs[0].inv().ok_or(SeriesError::NonInvertible)?;
        let n = self.order();
        let mut b: Vec<CycRational> = Vec::with_capacity(n + 1);
        b.push(a0inv.clone());
        for k in 1..=n {
            let mut acc = CycRational::zero();
            for i in 1..=k {
                if !self.coeffs[i].is_zero() {
                    acc += &(&self.coeffs[i] * &b[k - i]);
                }
            }
            b.push(-(&acc * &a0inv));
        }
        Ok(Self::from_coeffs(self.var, b))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, SeriesError> {
        self.checked_mul(&other.invert_unit()?)
    }

    /// `a^e` for a rational exponent, by the binomial recurrence
    /// `n f_n = Σ_{k=1}^{n} (e k − (n − k)) a_k f_{n−k}`; requires `a(0) = 1`.
    pub fn pow_rational(&self, e: &Rational) -> Result<Self, SeriesError> {
        if self.coeffs[0] != CycRational::one() {
            return Err(SeriesError::Precondition(
                "pow_rational needs constant term 1".into(),
            ));
        }
        let n = self.order();
        let mut f: Vec<CycRational> = Vec::with_capacity(n + 1);
        f.push(CycRational::one());
        for m in 1..=n {
            let mut acc = CycRational::zero();
            for k in 1..=m {
                if self.coeffs[k].is_zero() {
                    continue;
                }
                let w = e * Rational::from_integer(BigInt::from(k))
                    - Rational::from_integer(BigInt::from(m - k));
                acc += &(&self.coeffs[k] * &f[m - k]).scale(&w);
            }
            f.push(acc.scale(&Rational::new(BigInt::one(), BigInt::from(m))));
        }
        Ok(Self::from_coeffs(self.var, f))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.var, self.order());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Integer power, negative exponents through [`invert_unit`](Self::invert_unit).
    pub fn powi(&self, e: i64) -> Result<Self, SeriesError> {
        if e >= 0 {
            Ok(self.pow(e as u32))
        } else {
            Ok(self.invert_unit()?.pow((-e) as u32))
        }
    }

    /// Formal logarithm; requires constant term 1.
    pub fn log(&self) -> Result<Self, SeriesError> {
        if self.coeffs[0] != CycRational::one() {
            return Err(SeriesError::Precondition("log needs constant term 1".into()));
        }
        // x·(log a)' = x a'/a
        let ratio = self.qddq().checked_div(self)?;
        let mut coeffs = vec![CycRational::zero()];
        for d in 1..=self.order() {
            coeffs.push(ratio.coeffs[d].scale(&Rational::new(BigInt::one(), BigInt::from(d))));
        }
        Ok(Self::from_coeffs(self.var, coeffs))
    }

    /// Formal exponential; requires constant term 0.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::Precondition("exp needs constant term 0".into()));
        }
        let n = self.order();
        let mut f: Vec<CycRational> = Vec::with_capacity(n + 1);
        f.push(CycRational::one());
        for m in 1..=n {
            let mut acc = CycRational::zero();
            for k in 1..=m {
                if self.coeffs[k].is_zero() {
                    continue;
                }
                acc += &(&self.coeffs[k] * &f[m - k])
                    .scale(&Rational::from_integer(BigInt::from(k)));
            }
            f.push(acc.scale(&Rational::new(BigInt::one(), BigInt::from(m))));
        }
        Ok(Self::from_coeffs(self.var, f))
    }

    /// `self(inner(y))`, Horner evaluation. The result is expanded in the
    /// inner variable and carries the smaller of the two orders.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        if !inner.coeffs[0].is_zero() {
            return Err(SeriesError::Precondition(
                "inner series of a composition must have zero constant term".into(),
            ));
        }
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut acc = Self::constant(inner.var, n, self.coeffs[n].clone());
        for k in (0..n).rev() {
            acc = (&acc * &inner).add_constant(&self.coeffs[k]);
        }
        Ok(acc)
    }

    /// Compositional inverse by Lagrange inversion,
    /// `[y^n] b = (1/n) [x^{n−1}] (x/a(x))^n`, expanded in `var`.
    pub fn revert(&self, var: Var) -> Result<Self, SeriesError> {
        if !self.coeffs[0].is_zero() {
            return Err(SeriesError::Precondition(
                "revert needs zero constant term".into(),
            ));
        }
        let n = self.order();
        if n == 0 {
            return Ok(Self::zero(var, 0));
        }
        if self.coeffs[1].is_zero() {
            return Err(SeriesError::Precondition(
                "revert needs an invertible linear coefficient".into(),
            ));
        }
        // a(x)/x, order n−1
        let quotient = Self::from_coeffs(self.var, self.coeffs[1..].to_vec());
        let phi = quotient.invert_unit()?;
        let mut out = vec![CycRational::zero()];
        let mut power = Self::one(self.var, n - 1);
        for m in 1..=n {
            power = &power * &phi;
            out.push(power.coeffs[m - 1].scale(&Rational::new(BigInt::one(), BigInt::from(m))));
        }
        Ok(Self::from_coeffs(var, out))
    }

    /// First index where `self` and `other` differ, up to the common order.
    pub fn first_difference(&self, other: &Self) -> Option<usize> {
        let n = self.order().min(other.order());
        (0..=n).find(|&i| self.coeffs[i] != other.coeffs[i])
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(CycRational::to_exact_string).collect()
    }

    pub fn from_strings(var: Var, items: &[String]) -> Result<Self, SeriesError> {
        if items.is_empty() {
            return Err(SeriesError::Parse("empty series".into()));
        }
        let coeffs = items
            .iter()
            .map(|s| CycRational::parse(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_coeffs(var, coeffs))
    }
}

impl fmt::Display for PowerSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c}){}", self.var)?,
                _ => write!(f, "({c}){}^{i}", self.var)?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O({}^{})", self.var, self.order() + 1)
    }
}

impl<'a> Add<&'a PowerSeries> for &'a PowerSeries {
    type Output = PowerSeries;
    fn add(self, o: &PowerSeries) -> PowerSeries {
        self.checked_add(o).expect("series variable mismatch")
    }
}

impl<'a> Sub<&'a PowerSeries> for &'a PowerSeries {
    type Output = PowerSeries;
    fn sub(self, o: &PowerSeries) -> PowerSeries {
        self.checked_sub(o).expect("series variable mismatch")
    }
}

impl<'a> Mul<&'a PowerSeries> for &'a PowerSeries {
    type Output = PowerSeries;
    fn mul(self, o: &PowerSeries) -> PowerSeries {
        self.checked_mul(o).expect("series variable mismatch")
    }
}

impl Neg for &PowerSeries {
    type Output = PowerSeries;
    fn neg(self) -> PowerSeries {
        PowerSeries::from_coeffs(self.var, self.coeffs.iter().map(|c| -c).collect())
    }
}
