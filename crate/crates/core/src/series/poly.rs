//! Sparse polynomials in the generators: `LPoly` is a Laurent polynomial in
//! `L` over Q, `XLPoly` a polynomial in `X₁` and `L` over Q(ξ).

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use super::power::PowerSeries;
use super::rational::{fmt_rational, int, CycRational, Rational};
use super::SeriesError;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LPoly {
    coeffs: BTreeMap<i32, Rational>,
}

impl LPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(0, Rational::one())
    }

    pub fn monomial(e: i32, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(e, c);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i32, Rational)>) -> Self {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn add_term(&mut self, e: i32, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(e).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn coeff(&self, e: i32) -> Rational {
        self.coeffs.get(&e).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &Rational)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_polynomial(&self) -> bool {
        self.coeffs.keys().all(|&e| e >= 0)
    }

    pub fn support(&self) -> Vec<i32> {
        self.coeffs.keys().copied().collect()
    }

    pub fn max_exp(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn min_exp(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in other.terms() {
            out.add_term(e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_terms(self.terms().map(|(e, x)| (e, x * c)))
    }

    pub fn shift(&self, k: i32) -> Self {
        Self::from_terms(self.terms().map(|(e, c)| (e + k, c.clone())))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (e1, c1) in self.terms() {
            for (e2, c2) in other.terms() {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        Self::from_terms(self.terms().map(|(e, c)| (e - 1, c * int(e as i64))))
    }

    /// `q d/dq = (1/3) L (L³ − 1) d/dL`.
    pub fn theta(&self) -> Self {
        let d = self.derivative();
        d.shift(4).sub(&d.shift(1)).scale(&Rational::new(1.into(), 3.into()))
    }

    /// `L⁻¹ q d/dq = (1/3)(L³ − 1) d/dL`.
    pub fn l_theta(&self) -> Self {
        self.theta().shift(-1)
    }

    /// Antiderivative with zero constant term; fails on an `L⁻¹` term.
    pub fn integrate(&self) -> Result<Self, SeriesError> {
        let mut out = Self::zero();
        for (e, c) in self.terms() {
            if e == -1 {
                return Err(SeriesError::Precondition(
                    "integrand has an L^-1 term".into(),
                ));
            }
            out.add_term(e + 1, c / int(e as i64 + 1));
        }
        Ok(out)
    }

    /// Exact quotient `self / divisor`, or `None` if a remainder is left.
    pub fn div_exact(&self, divisor: &Self) -> Option<Self> {
        let (top, bottom) = (divisor.max_exp()?, divisor.min_exp()?);
        let lead = divisor.coeff(top);
        let floor = self.min_exp().unwrap_or(0) - bottom;
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some(e) = rem.max_exp() {
            let shift = e - top;
            if shift < floor {
                return None;
            }
            let c = rem.coeff(e) / &lead;
            rem = rem.sub(&divisor.shift(shift).scale(&c));
            quot.add_term(shift, c);
        }
        Some(quot)
    }

    pub fn eval(&self, l: &Rational) -> Rational {
        self.terms().map(|(e, c)| c * l.pow(e)).sum()
    }

    /// Substitutes a q-series for `L` (negative powers use `L⁻¹`).
    pub fn to_series(&self, l: &PowerSeries, l_inv: &PowerSeries) -> PowerSeries {
        let mut out = PowerSeries::zero(l.var(), l.order());
        for (e, c) in self.terms() {
            let base = if e >= 0 { l.pow(e as u32) } else { l_inv.pow((-e) as u32) };
            out = &out + &base.scale_rational(c);
        }
        out
    }

    pub fn to_exact_map(&self) -> BTreeMap<i32, String> {
        self.terms().map(|(e, c)| (e, fmt_rational(c))).collect()
    }
}

impl fmt::Display for LPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .rev()
            .map(|(e, c)| match e {
                0 => format!("({})", fmt_rational(c)),
                _ => format!("({})*L^{}", fmt_rational(c), e),
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Polynomial in `X₁` and `L` with Q(ξ) coefficients, keyed by `(a, b)` for
/// `X₁^a L^b`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct XLPoly {
    terms: BTreeMap<(u32, u32), CycRational>,
}

impl XLPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(CycRational::one())
    }

    pub fn constant(c: CycRational) -> Self {
        Self::monomial(0, 0, c)
    }

    pub fn monomial(a: u32, b: u32, c: CycRational) -> Self {
        let mut p = Self::zero();
        p.add_term(a, b, c);
        p
    }

    pub fn x1() -> Self {
        Self::monomial(1, 0, CycRational::one())
    }

    /// Embeds a polynomial (non-negative exponents only) in `L`.
    pub fn from_lpoly(p: &LPoly) -> Self {
        assert!(p.is_polynomial(), "Laurent terms cannot be embedded");
        let mut out = Self::zero();
        for (e, c) in p.terms() {
            out.add_term(0, e as u32, CycRational::from(c.clone()));
        }
        out
    }

    pub fn add_term(&mut self, a: u32, b: u32, c: CycRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry((a, b)).or_insert_with(CycRational::zero);
        *slot += &c;
        if slot.is_zero() {
            self.terms.remove(&(a, b));
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = ((u32, u32), &CycRational)> {
        self.terms.iter().map(|(k, c)| (*k, c))
    }

    pub fn coeff(&self, a: u32, b: u32) -> CycRational {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(CycRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.terms.values().all(CycRational::is_rational)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_assign(&mut self, other: &Self) {
        for ((a, b), c) in other.terms() {
            self.add_term(a, b, c.clone());
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&CycRational::from(-1))
    }

    pub fn scale(&self, c: &CycRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = Self::zero();
        for (k, x) in self.terms() {
            out.add_term(k.0, k.1, x * c);
        }
        out
    }

    pub fn scale_rational(&self, r: &Rational) -> Self {
        self.scale(&CycRational::from(r.clone()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for ((a1, b1), c1) in self.terms() {
            for ((a2, b2), c2) in other.terms() {
                out.add_term(a1 + a2, b1 + b2, c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    pub fn partial_x1(&self) -> Self {
        let mut out = Self::zero();
        for ((a, b), c) in self.terms() {
            if a > 0 {
                out.add_term(a - 1, b, c.scale(&int(a as i64)));
            }
        }
        out
    }

    /// Coefficient of `X₁^a` as a polynomial in `L`.
    pub fn x1_coefficient(&self, a: u32) -> Self {
        let mut out = Self::zero();
        for ((a2, b), c) in self.terms() {
            if a2 == a {
                out.add_term(0, b, c.clone());
            }
        }
        out
    }

    pub fn max_x1_degree(&self) -> u32 {
        self.terms.keys().map(|k| k.0).max().unwrap_or(0)
    }

    /// Weights `2a + b` of all monomials.
    pub fn weights(&self) -> Vec<u32> {
        self.terms.keys().map(|&(a, b)| 2 * a + b).collect()
    }

    /// Substitutes q-series for `X₁` and `L`.
    pub fn eval_series(&self, x1: &PowerSeries, l: &PowerSeries) -> PowerSeries {
        let mut out = PowerSeries::zero(l.var(), l.order().min(x1.order()));
        let mut xp: Vec<PowerSeries> = vec![PowerSeries::one(x1.var(), x1.order())];
        let mut lp: Vec<PowerSeries> = vec![PowerSeries::one(l.var(), l.order())];
        for ((a, b), c) in self.terms() {
            while xp.len() <= a as usize {
                let next = xp.last().unwrap() * x1;
                xp.push(next);
            }
            while lp.len() <= b as usize {
                let next = lp.last().unwrap() * l;
                lp.push(next);
            }
            out = &out + &(&xp[a as usize] * &lp[b as usize]).scale(c);
        }
        out
    }

    pub fn eval(&self, x1: &CycRational, l: &CycRational) -> CycRational {
        let mut out = CycRational::zero();
        for ((a, b), c) in self.terms() {
            out += &(&(c * &x1.pow(a as i64)) * &l.pow(b as i64));
        }
        out
    }

    /// Rational coefficients keyed `(a, b)`, or `None` if some coefficient has a ξ-part.
    pub fn rational_terms(&self) -> Option<BTreeMap<(u32, u32), Rational>> {
        self.terms()
            .map(|(k, c)| c.as_rational().map(|r| (k, r.clone())))
            .collect()
    }

    pub fn to_exact_map(&self) -> BTreeMap<String, String> {
        self.terms()
            .map(|((a, b), c)| (format!("X1^{a}*L^{b}"), c.to_exact_string()))
            .collect()
    }
}

impl fmt::Display for XLPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self
            .terms()
            .map(|((a, b), c)| format!("({c})*X1^{a}*L^{b}"))
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rat;

    #[test]
    fn l_theta_of_l_matches_known_identity() {
        // L⁻¹θL = (L³ − 1)/3
        let l = LPoly::monomial(1, int(1));
        let want = LPoly::from_terms([(3, rat(1, 3)), (0, rat(-1, 3))]);
        assert_eq!(l.l_theta(), want);
    }

    #[test]
    fn exact_division() {
        let d = LPoly::from_terms([(4, int(1)), (1, int(-1))]);
        let q = LPoly::from_terms([(2, int(3)), (-1, int(2)), (0, rat(1, 7))]);
        let p = q.mul(&d);
        assert_eq!(p.div_exact(&d), Some(q));
        assert_eq!(p.add(&LPoly::one()).div_exact(&d), None);
    }

    #[test]
    fn integrate_refuses_log_term() {
        assert!(LPoly::monomial(-1, int(1)).integrate().is_err());
        let p = LPoly::from_terms([(2, int(3)), (0, int(1))]);
        assert_eq!(p.integrate().unwrap().derivative(), p);
    }

    #[test]
    fn xl_products_and_partials() {
        let p = XLPoly::x1().add(&XLPoly::monomial(0, 2, CycRational::from(3)));
        let sq = p.mul(&p);
        assert_eq!(sq.coeff(2, 0), CycRational::from(1));
        assert_eq!(sq.coeff(1, 2), CycRational::from(6));
        assert_eq!(sq.partial_x1(), p.scale(&CycRational::from(2)));
    }
}
