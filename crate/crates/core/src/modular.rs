//! Quasi-modular forms for Γ₀(3): cubic theta functions, Eisenstein series,
//! the mirror identification `27q = 1 − b³/a³` and exact fits into
//! `Q[a², E₂, E₄, E₆]`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::check::{compare_series, CheckReport};
use crate::linalg;
use crate::mirror::{GeneratorValues, MirrorData};
use crate::series::{fmt_rational, int, rat, CycRational, PowerSeries, Rational, Var};

#[derive(Clone, Debug)]
pub struct ThetaSeries {
    pub a: PowerSeries,
    pub b: PowerSeries,
    pub order: usize,
}

pub fn theta_series(order: usize) -> ThetaSeries {
    // n² + nm + m² ≥ (n² + m²)/2, so |n|,|m| ≤ √(2·order) covers every norm ≤ order
    let bound = ((2 * order) as f64).sqrt() as i64 + 1;
    let mut a = vec![CycRational::zero(); order + 1];
    let mut b = vec![CycRational::zero(); order + 1];
    for n in -bound..=bound {
        for m in -bound..=bound {
            let norm = n * n + n * m + m * m;
            if n.abs() == bound || m.abs() == bound {
                assert!(norm > order as i64, "lattice bound too small");
                continue;
            }
            if norm as usize <= order {
                a[norm as usize] += &CycRational::one();
                b[norm as usize] += &CycRational::xi_pow(n - m);
            }
        }
    }
    let b = PowerSeries::from_coeffs(Var::BigQ, b);
    assert!(b.is_rational(), "b(Q) must have rational coefficients");
    ThetaSeries { a: PowerSeries::from_coeffs(Var::BigQ, a), b, order }
}

fn divisor_power_sum(n: u64, p: u32) -> BigInt {
    (1..=n).filter(|d| n.is_multiple_of(*d)).map(|d| BigInt::from(d).pow(p)).sum()
}

/// `E_2 = 1 − 24Σσ₁Qⁿ`, `E_4 = 1 + 240Σσ₃Qⁿ`, `E_6 = 1 − 504Σσ₅Qⁿ`.
pub fn eisenstein(k: u32, order: usize) -> PowerSeries {
    let (c, p) = match k {
        2 => (-24, 1),
        4 => (240, 3),
        6 => (-504, 5),
        _ => panic!("only weights 2, 4, 6 are supported"),
    };
    let coeffs = (0..=order as u64).map(|n| {
        if n == 0 {
            Rational::one()
        } else {
            Rational::from_integer(divisor_power_sum(n, p) * c)
        }
    });
    PowerSeries::from_rationals(Var::BigQ, coeffs)
}

/// `Q·d/dQ a = aE₂/12 + a³/4 − b³/3` and `Q·d/dQ b³ = b³E₂/4 − a²b³/4`.
pub fn serre_derivative_check(ts: &ThetaSeries, order: usize) -> CheckReport {
    let mut rep = CheckReport::new("serre");
    let n = order.min(ts.order);
    let e2 = eisenstein(2, n);
    let a = ts.a.truncate(n);
    let b3 = ts.b.truncate(n).pow(3);
    let a3 = a.pow(3);
    let rhs = &(&(&a * &e2).scale_rational(&rat(1, 12)) + &a3.scale_rational(&rat(1, 4))) - &b3.scale_rational(&rat(1, 3));
    rep.push(compare_series("Q a' = a E2/12 + a^3/4 - b^3/3", &a.qddq(), &rhs, n));
    let rhs = &(&b3 * &e2).scale_rational(&rat(1, 4)) - &(&(&a * &a) * &b3).scale_rational(&rat(1, 4));
    rep.push(compare_series("Q (b^3)' = b^3 E2/4 - a^2 b^3/4", &b3.qddq(), &rhs, n));
    rep
}

/// `a(Q) = I₀(q(Q))`, `L⁻³(q(Q)) = b³/a³` and `27q(Q) = 1 − b³/a³`.
pub fn identification_check(ts: &ThetaSeries, md: &MirrorData, order: usize) -> CheckReport {
    let mut rep = CheckReport::new("identification");
    let n = order.min(ts.order).min(md.order);
    let a = ts.a.truncate(n);
    let ratio = &ts.b.truncate(n).pow(3) * &a.pow(3).invert_unit().expect("a(0) = 1");
    rep.push(compare_series("a(Q) = I0(q(Q))", &a, &md.to_modular(&md.i0), n));
    let l_inv3 = md.to_modular(&md.l_inv().pow(3));
    rep.push(compare_series("L^-3(q(Q)) = b^3/a^3", &l_inv3, &ratio, n));
    let lhs = md.inverse_q.truncate(n).scale_rational(&int(27));
    let rhs = ratio.scale_rational(&int(-1)).add_constant(&CycRational::one());
    rep.push(compare_series("27 q(Q) = 1 - b^3/a^3", &lhs, &rhs, n));
    rep
}

/// `a^{2i} E₂^j E₄^k E₆^l (ab)^m`; `m ∈ {0,1}` only in the extended ring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Monomial {
    pub a2: u32,
    pub e2: u32,
    pub e4: u32,
    pub e6: u32,
    pub ab: u32,
}

impl Monomial {
    pub fn weight(&self) -> u32 {
        2 * self.a2 + 2 * self.e2 + 4 * self.e4 + 6 * self.e6 + 2 * self.ab
    }

    pub fn is_modular(&self) -> bool {
        self.e2 == 0
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (name, e) in [("a^2", self.a2), ("E2", self.e2), ("E4", self.e4), ("E6", self.e6), ("ab", self.ab)] {
            match e {
                0 => {}
                1 => parts.push(name.to_string()),
                _ => parts.push(format!("({name})^{e}")),
            }
        }
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

/// All monomials of the given weight in `Q[a², E₂, E₄, E₆]`, optionally with
/// one factor `ab` adjoined.
pub fn weight_basis(weight: u32, with_ab: bool) -> Vec<Monomial> {
    assert!(weight.is_multiple_of(2), "quasi-modular weights here are even");
    let mut out = Vec::new();
    for ab in 0..=u32::from(with_ab) {
        if 2 * ab > weight {
            continue;
        }
        let rest = weight - 2 * ab;
        for e6 in 0..=rest / 6 {
            for e4 in 0..=(rest - 6 * e6) / 4 {
                let left = (rest - 6 * e6 - 4 * e4) / 2;
                for e2 in 0..=left {
                    out.push(Monomial { a2: left - e2, e2, e4, e6, ab });
                }
            }
        }
    }
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct QuasiModPoly {
    pub terms: BTreeMap<Monomial, Rational>,
    pub weight: u32,
}

impl QuasiModPoly {
    pub fn zero(weight: u32) -> Self {
        Self { terms: BTreeMap::new(), weight }
    }

    pub fn from_terms(weight: u32, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero(weight);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        assert_eq!(m.weight(), self.weight, "monomial {m} has the wrong weight");
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn uses_ab(&self) -> bool {
        self.terms.keys().any(|m| m.ab > 0)
    }

    pub fn to_exact_map(&self) -> BTreeMap<String, String> {
        self.terms.iter().map(|(m, c)| (m.to_string(), fmt_rational(c))).collect()
    }
}

impl fmt::Display for QuasiModPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(m, c)| format!("({})*{}", fmt_rational(c), m)).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Formal derivative in the `E₂` generator.
pub fn e2_partial(p: &QuasiModPoly) -> QuasiModPoly {
    let mut out = QuasiModPoly::zero(p.weight.saturating_sub(2));
    for (m, c) in &p.terms {
        if m.e2 > 0 {
            let lowered = Monomial { e2: m.e2 - 1, ..*m };
            out.add_term(lowered, c * int(m.e2 as i64));
        }
    }
    out
}

/// Q-expansions of the ring generators at a fixed order.
#[derive(Clone, Debug)]
pub struct ModularContext {
    pub order: usize,
    pub theta: ThetaSeries,
    pub a2: PowerSeries,
    pub e2: PowerSeries,
    pub e4: PowerSeries,
    pub e6: PowerSeries,
    pub ab: PowerSeries,
}

impl ModularContext {
    pub fn new(order: usize) -> Self {
        let theta = theta_series(order);
        Self {
            order,
            a2: theta.a.pow(2),
            ab: &theta.a * &theta.b,
            e2: eisenstein(2, order),
            e4: eisenstein(4, order),
            e6: eisenstein(6, order),
            theta,
        }
    }

    pub fn monomial(&self, m: &Monomial) -> PowerSeries {
        let mut out = PowerSeries::one(Var::BigQ, self.order);
        for (s, e) in [(&self.a2, m.a2), (&self.e2, m.e2), (&self.e4, m.e4), (&self.e6, m.e6), (&self.ab, m.ab)] {
            if e > 0 {
                out = &out * &s.pow(e);
            }
        }
        out
    }

    pub fn evaluate(&self, p: &QuasiModPoly) -> PowerSeries {
        let mut out = PowerSeries::zero(Var::BigQ, self.order);
        for (m, c) in &p.terms {
            out = &out + &self.monomial(m).scale_rational(c);
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitOutcome {
    pub weight: u32,
    pub with_ab: bool,
    /// `None` when the series is not in the span.
    #[serde(serialize_with = "ser_poly")]
    pub poly: Option<QuasiModPoly>,
    pub unique: bool,
    pub basis_size: usize,
    /// Number of coefficients used (all of them must be reproduced).
    pub equations: usize,
    pub first_inconsistent_order: Option<usize>,
}

fn ser_poly<S: serde::Serializer>(p: &Option<QuasiModPoly>, s: S) -> Result<S::Ok, S::Error> {
    match p {
        Some(p) => s.serialize_some(&p.to_exact_map()),
        None => s.serialize_none(),
    }
}

impl FitOutcome {
    pub fn succeeded(&self) -> bool {
        self.poly.is_some()
    }
}

/// Fits a rational Q-series exactly into the weight stratum. Every available
/// coefficient is an equation, and at least `guard` of them exceed the basis
/// size, so a successful fit is also a verification.
pub fn fit_to_qmod(series: &PowerSeries, weight: u32, guard: usize, ctx: &ModularContext, with_ab: bool) -> FitOutcome {
    let basis = weight_basis(weight, with_ab);
    let n = series.order().min(ctx.order);
    assert!(n + 1 >= basis.len() + guard, "series too short for the requested guard");
    let target = series.truncate(n).rational_coeffs().expect("fits need rational coefficients");
    let cols: Vec<Vec<Rational>> = basis
        .iter()
        .map(|m| ctx.monomial(m).truncate(n).rational_coeffs().expect("rational basis"))
        .collect();
    let sol = linalg::solve(&cols, &target);
    let unique = sol.is_unique(basis.len());
    let poly = sol
        .solution
        .map(|x| QuasiModPoly::from_terms(weight, basis.iter().copied().zip(x)));
    FitOutcome {
        weight,
        with_ab,
        poly,
        unique,
        basis_size: basis.len(),
        equations: n + 1,
        first_inconsistent_order: sol.inconsistent_row,
    }
}

/// The four generator identities transported to `Q`.
pub fn generator_dictionary_check(md: &MirrorData, gv: &GeneratorValues, ctx: &ModularContext, order: usize) -> CheckReport {
    let mut rep = CheckReport::new("modgene");
    let n = order.min(ctx.order).min(md.order);
    let k = &md.i0.pow(2) * &md.l_inv().pow(2);
    let to_q = |s: &PowerSeries| md.to_modular(s).truncate(n);
    let (a2, e2, e4, e6) = (ctx.a2.truncate(n), ctx.e2.truncate(n), ctx.e4.truncate(n), ctx.e6.truncate(n));
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lhs = to_q(&(&k * gv.x(1)));
    let rhs = (&e2 - &a2).scale_rational(&rat(1, 12));
    rep.push(compare_series("(I0^2/L^2) X1 = E2/12 - a^2/12", &lhs, &rhs, n));
    let lhs = to_q(&(&k * gv.y(1)));
    rep.push(compare_series("(I0^2/L^2) Y1 = a^2/3", &lhs, &a2.scale_rational(&rat(1, 3)), n));
    let lhs = to_q(&(&k.pow(2) * gv.y(2)));
    let rhs = (&e4 - &a4).scale_rational(&rat(1, 36));
    rep.push(compare_series("(I0^2/L^2)^2 Y2 = -a^4/36 + E4/36", &lhs, &rhs, n));
    let lhs = to_q(&(&k.pow(3) * gv.y(3)));
    let rhs = &(&a6 + &(&a2 * &e4)).scale_rational(&rat(1, 216)) - &e6.scale_rational(&rat(1, 108));
    rep.push(compare_series("(I0^2/L^2)^3 Y3 = a^6/216 + a^2 E4/216 - E6/108", &lhs, &rhs, n));
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mirror::generator_values;

    fn big(c: &[i64]) -> PowerSeries {
        PowerSeries::from_ints(Var::BigQ, c)
    }

    #[test]
    fn theta_examples() {
        let ts = theta_series(12);
        assert_eq!(ts.a.truncate(4), big(&[1, 6, 0, 6, 6]));
        assert_eq!(*ts.b.coeff(1), CycRational::from(-3));
        assert!(ts.b.is_rational());
        // b³/a³ has constant term 1
        let r = &ts.b.pow(3) * &ts.a.pow(3).invert_unit().unwrap();
        assert_eq!(*r.constant_term(), CycRational::one());
    }

    #[test]
    fn eisenstein_examples() {
        assert_eq!(eisenstein(2, 2), big(&[1, -24, -72]));
        assert_eq!(*eisenstein(4, 3).coeff(1), CycRational::from(240));
        assert_eq!(*eisenstein(6, 3).constant_term(), CycRational::one());
        // E₄² = E₈ = 1 + 480Σσ₇
        let e8: Vec<i64> = (0..6u64).map(|n| if n == 0 { 1 } else { 480 * (1..=n).filter(|d| n % d == 0).map(|d| d.pow(7) as i64).sum::<i64>() }).collect();
        assert_eq!(eisenstein(4, 5).pow(2), big(&e8));
    }

    #[test]
    fn serre_identities_hold_and_detect_perturbation() {
        let ts = theta_series(30);
        assert!(serre_derivative_check(&ts, 30).passed());
        let mut bad = ts.clone();
        let c = bad.b.coeff(5) + &CycRational::one();
        bad.b.set_coeff(5, c);
        assert!(!serre_derivative_check(&bad, 30).passed());
    }

    #[test]
    fn identification_holds() {
        let md = MirrorData::new(20);
        let ts = theta_series(20);
        let rep = identification_check(&ts, &md, 20);
        assert!(rep.passed(), "{:?}", rep.first_failure());
        let i0q = md.to_modular(&md.i0);
        assert_eq!(*i0q.coeff(1), CycRational::from(6));
    }

    #[test]
    fn weight_basis_counts() {
        assert_eq!(weight_basis(0, false).len(), 1);
        assert_eq!(weight_basis(2, false).len(), 2);
        let w6 = weight_basis(6, false);
        assert_eq!(w6.len(), 7);
        // stars and bars: number of (i,j,k,l) with i+j+2k+3l = w/2
        for w in (0..=16).step_by(2) {
            let h = w / 2;
            let mut count = 0;
            for l in 0..=h / 3 {
                for k in 0..=(h - 3 * l) / 2 {
                    count += h - 3 * l - 2 * k + 1;
                }
            }
            assert_eq!(weight_basis(w, false).len() as u32, count);
        }
        assert!(weight_basis(4, true).iter().any(|m| m.ab == 1));
    }

    #[test]
    fn e2_partial_examples() {
        let m = |a2, e2| Monomial { a2, e2, e4: 0, e6: 0, ab: 0 };
        let p = QuasiModPoly::from_terms(4, [(m(1, 1), int(1))]);
        assert_eq!(e2_partial(&p), QuasiModPoly::from_terms(2, [(m(1, 0), int(1))]));
        let p = QuasiModPoly::from_terms(4, [(m(0, 2), int(1))]);
        assert_eq!(e2_partial(&p), QuasiModPoly::from_terms(2, [(m(0, 1), int(2))]));
        let p = QuasiModPoly::from_terms(4, [(m(2, 0), int(1))]);
        assert!(e2_partial(&p).is_zero());
    }

    #[test]
    fn fits() {
        let ctx = ModularContext::new(30);
        let md = MirrorData::new(30);
        let gv = generator_values(&md, 3);
        let k = &md.i0.pow(2) * &md.l_inv().pow(2);
        let s = md.to_modular(&(&k * gv.x(1)));
        let fit = fit_to_qmod(&s, 2, 10, &ctx, false);
        let m = |a2, e2| Monomial { a2, e2, e4: 0, e6: 0, ab: 0 };
        let want = QuasiModPoly::from_terms(2, [(m(0, 1), rat(1, 12)), (m(1, 0), rat(-1, 12))]);
        assert_eq!(fit.poly, Some(want));
        assert!(fit.unique);

        let zero = fit_to_qmod(&PowerSeries::zero(Var::BigQ, 30), 4, 10, &ctx, false);
        assert!(zero.poly.unwrap().is_zero());

        let p = QuasiModPoly::from_terms(4, [(m(1, 1), int(1))]);
        let back = fit_to_qmod(&ctx.evaluate(&p), 4, 10, &ctx, false);
        assert_eq!(back.poly, Some(p));

        // a·b is not in the weight-2 span of a², E₂
        let fail = fit_to_qmod(&ctx.ab, 2, 10, &ctx, false);
        assert!(!fail.succeeded());
        assert!(fit_to_qmod(&ctx.ab, 2, 10, &ctx, true).succeeded());
    }

    #[test]
    fn monomials_become_dependent_at_weight_eight() {
        // M₈(Γ₀(3)) is 3-dimensional but a⁸, a⁴E₄, a²E₆, E₄² are four monomials
        let ctx = ModularContext::new(40);
        let e4sq = ctx.e4.pow(2);
        let fit = fit_to_qmod(&e4sq, 8, 10, &ctx, false);
        assert!(fit.succeeded() && !fit.unique);
        assert!(fit_to_qmod(&ctx.e4, 4, 10, &ctx, false).unique);
    }

    #[test]
    fn generator_dictionary_holds() {
        let md = MirrorData::new(20);
        let gv = generator_values(&md, 3);
        let ctx = ModularContext::new(20);
        let rep = generator_dictionary_check(&md, &gv, &ctx, 20);
        assert!(rep.passed(), "{:?}", rep.first_failure());
        // Q¹ of the first identity: −3 = (−24 − 12)/12
        let k = &md.i0.pow(2) * &md.l_inv().pow(2);
        let s = md.to_modular(&(&k * gv.x(1)));
        assert_eq!(*s.coeff(1), CycRational::from(-3));
    }
}
