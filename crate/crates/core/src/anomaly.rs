//! Finite generation, quasi-modularity and the holomorphic anomaly equation.
//!
//! The `E₂`-dependence of a correlator sits entirely in `X₁`: with
//! `I₀ = a`, `I₀/L = b` and `X₁ = (E₂ − a²)/(12 b²)`, the derivative
//! `∂/∂E₂` of `(I₀/L)^w P(X₁, L)` is `(I₀/L)^{w−2} (1/12) ∂P/∂X₁`.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::check::{compare_series, CheckReport};
use crate::graph_sum::{correlator, CorrelatorRequest, GraphSumError, QContext, Theory};
use crate::intersections::KappaPsiMonomial;
use crate::linalg;
use crate::modular::{e2_partial, fit_to_qmod, FitOutcome, ModularContext, QuasiModPoly};
use crate::series::{fmt_rational, int, rat, CycRational, PowerSeries, Rational, Var, XLPoly};

#[derive(Debug, Error)]
pub enum AnomalyError {
    #[error("insufficient order: {needed} coefficients needed, {available} available")]
    InsufficientOrder { needed: usize, available: usize },
    #[error("series is not in the span of degree-{degree} generators (first inconsistent coefficient q^{order})")]
    InconsistentFit { degree: i64, order: usize },
    #[error("no loop normalization among {tried:?} satisfies the anomaly equation at (1,1)")]
    ConventionResolution { tried: Vec<String> },
    #[error("the anomaly equation needs g ≥ 1")]
    GenusZero,
    #[error(transparent)]
    GraphSum(#[from] GraphSumError),
}

/// `(I₀/L)^w λ^p Σ c_{ab} X₁^a L^b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GeneratorPoly {
    #[serde(serialize_with = "ser_terms")]
    pub terms: BTreeMap<(u32, u32), Rational>,
    pub degree: i64,
    pub prefactor_weight: i32,
    pub lambda_power: i64,
}

fn ser_terms<S: serde::Serializer>(t: &BTreeMap<(u32, u32), Rational>, s: S) -> Result<S::Ok, S::Error> {
    let m: BTreeMap<String, String> = t.iter().map(|((a, b), c)| (format!("X1^{a}*L^{b}"), fmt_rational(c))).collect();
    m.serialize(s)
}

/// Monomials `X₁^a L^b` allowed in degree `d`: weight `2a + b ≤ 2d` with
/// `2a + b ≡ 2d (mod 3)`, where `X₁` has weight 2 and `L` weight 1.
pub fn fit_basis(degree: i64) -> Vec<(u32, u32)> {
    let top = 2 * degree.max(0) as u32;
    let mut out = Vec::new();
    for a in 0..=top / 2 {
        for b in 0..=top - 2 * a {
            if (2 * a + b) % 3 == top % 3 {
                out.push((a, b));
            }
        }
    }
    out
}

impl GeneratorPoly {
    pub fn as_xl(&self) -> XLPoly {
        let mut p = XLPoly::zero();
        for (&(a, b), c) in &self.terms {
            p.add_term(a, b, CycRational::from(c.clone()));
        }
        p
    }

    /// q-expansion at `λ = 1`.
    pub fn to_series(&self, qc: &QContext) -> PowerSeries {
        &self.as_xl().eval_series(qc.gv.x(1), &qc.md.l) * &qc.prefactor(self.prefactor_weight)
    }

    /// `∂/∂E₂` in the generator representation: `(1/12) ∂_{X₁}` with the
    /// prefactor weight lowered by 2.
    pub fn e2_derivative(&self) -> GeneratorPoly {
        let mut terms = BTreeMap::new();
        for (&(a, b), c) in &self.terms {
            if a > 0 {
                terms.insert((a - 1, b), c * int(a as i64) * rat(1, 12));
            }
        }
        GeneratorPoly {
            terms,
            degree: self.degree - 1,
            prefactor_weight: self.prefactor_weight - 2,
            lambda_power: self.lambda_power,
        }
    }
}

/// Exact fit of `series / (I₀/L)^w` in the degree-`d` generator basis; all
/// available coefficients are equations and at least `guard` of them are
/// surplus.
pub fn fit_finite_generation(
    series: &PowerSeries,
    g: u32,
    insertions: &[usize],
    degree: i64,
    guard: usize,
    qc: &QContext,
) -> Result<GeneratorPoly, AnomalyError> {
    let req = CorrelatorRequest::fundamental(g, insertions.to_vec(), 0);
    let w = req.prefactor_weight();
    let lambda_power = g as i64 - 1 + insertions.iter().sum::<usize>() as i64 - degree;
    let basis = fit_basis(degree);
    let n = series.order().min(qc.order());
    let needed = basis.len() + guard;
    if n + 1 < needed {
        return Err(AnomalyError::InsufficientOrder { needed, available: n + 1 });
    }
    let stripped = &series.truncate(n) * &qc.prefactor(-w).truncate(n);
    let target = stripped.rational_coeffs().map_err(|k| AnomalyError::InconsistentFit { degree, order: k })?;
    let x1 = qc.gv.x(1).truncate(n);
    let l = qc.md.l.truncate(n);
    let cols: Vec<Vec<Rational>> = basis
        .iter()
        .map(|&(a, b)| {
            (&x1.pow(a) * &l.pow(b)).rational_coeffs().expect("generators are rational")
        })
        .collect();
    let sol = linalg::solve(&cols, &target);
    match sol.solution {
        Some(x) => Ok(GeneratorPoly {
            terms: basis.into_iter().zip(x).filter(|(_, c)| !c.is_zero()).collect(),
            degree,
            prefactor_weight: w,
            lambda_power,
        }),
        None => Err(AnomalyError::InconsistentFit { degree, order: sol.inconsistent_row.unwrap_or(0) }),
    }
}

/// q-series of `∂/∂E₂` of the fitted correlator.
pub fn e2_derivative_series(p: &GeneratorPoly, qc: &QContext) -> PowerSeries {
    p.e2_derivative().to_series(qc)
}

#[derive(Clone, Debug, Serialize)]
pub struct Certification {
    pub weight: u32,
    /// Fit in `Q[a², E₂, E₄, E₆]`.
    pub plain: FitOutcome,
    /// Fit with `ab` adjoined.
    pub extended: FitOutcome,
}

impl Certification {
    pub fn certified(&self) -> Option<&QuasiModPoly> {
        self.plain.poly.as_ref().or(self.extended.poly.as_ref())
    }
}

/// Transports the fitted correlator to `Q` and fits it at weight `2d`,
/// in both ring variants.
pub fn quasimodularity_certify(p: &GeneratorPoly, qc: &QContext, ctx: &ModularContext, guard: usize) -> Result<Certification, AnomalyError> {
    let weight = 2 * p.degree.max(0) as u32;
    let q_series = qc.md.to_modular(&p.to_series(qc));
    let n = q_series.order().min(ctx.order);
    for with_ab in [false, true] {
        let needed = crate::modular::weight_basis(weight, with_ab).len() + guard;
        if n + 1 < needed {
            return Err(AnomalyError::InsufficientOrder { needed, available: n + 1 });
        }
    }
    Ok(Certification {
        weight,
        plain: fit_to_qmod(&q_series, weight, guard, ctx, false),
        extended: fit_to_qmod(&q_series, weight, guard, ctx, true),
    })
}

/// `e2_partial` of the certified form against the transported
/// generator-side derivative.
pub fn e2_two_route_check(p: &GeneratorPoly, cert: &QuasiModPoly, qc: &QContext, ctx: &ModularContext, order: usize) -> CheckReport {
    let mut rep = CheckReport::new("e2_two_route");
    let modular = ctx.evaluate(&e2_partial(cert));
    let generator = qc.md.to_modular(&e2_derivative_series(p, qc));
    rep.push(compare_series("d/dE2 quasi-modular vs generator", &modular, &generator, order));
    rep
}

/// Loop and split normalizations of the boundary terms, as multiples of the
/// pushforward along the gluing maps (split sums run over ordered pairs).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConventionFlags {
    #[serde(serialize_with = "ser_rational")]
    pub loop_factor: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub split_factor: Rational,
    pub resolved_at: String,
    /// Candidate loop factors and whether each made the residual vanish.
    pub candidates: Vec<(String, bool)>,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_rational(r))
}

fn ser_series<S: serde::Serializer>(p: &PowerSeries, s: S) -> Result<S::Ok, S::Error> {
    p.to_strings().serialize(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct HAEReport {
    pub g: u32,
    pub n: usize,
    pub order: usize,
    #[serde(serialize_with = "ser_series")]
    pub lhs: PowerSeries,
    #[serde(serialize_with = "ser_series")]
    pub rhs_dilaton: PowerSeries,
    #[serde(serialize_with = "ser_series")]
    pub rhs_loop: PowerSeries,
    #[serde(serialize_with = "ser_series")]
    pub rhs_split: PowerSeries,
    #[serde(serialize_with = "ser_series")]
    pub residual: PowerSeries,
    pub fitted: GeneratorPoly,
    pub convention_flags: ConventionFlags,
    pub passed: bool,
}

/// Boundary terms before the convention factors are applied.
struct RawTerms {
    lhs: PowerSeries,
    dilaton: PowerSeries,
    loop_: PowerSeries,
    split: PowerSeries,
    fitted: GeneratorPoly,
}

fn zero(order: usize) -> PowerSeries {
    PowerSeries::zero(Var::SmallQ, order)
}

/// Paired correlator series, zero when the pairing exceeds the dimension.
fn paired(g: u32, insertions: Vec<usize>, pairing: KappaPsiMonomial, theory: &Theory, qc: &QContext, order: usize) -> Result<PowerSeries, AnomalyError> {
    let req = CorrelatorRequest::new(g, insertions, pairing, order);
    if req.degree() < 0 {
        return Ok(zero(order));
    }
    Ok(correlator(&req, theory, qc)?.series.truncate(order))
}

fn raw_terms(g: u32, ins: &[usize], pairing: &KappaPsiMonomial, order: usize, guard: usize, theory: &Theory, qc: &QContext) -> Result<RawTerms, AnomalyError> {
    if g == 0 {
        return Err(AnomalyError::GenusZero);
    }
    let n = ins.len();
    let ins = ins.to_vec();
    let req = CorrelatorRequest::new(g, ins.clone(), pairing.clone(), qc.order());
    let full = correlator(&req, theory, qc)?;
    let fitted = fit_finite_generation(&full.series, g, &ins, req.degree(), guard, qc)?;
    let lhs = e2_derivative_series(&fitted, qc).truncate(order);

    let mut dilaton = zero(order);
    for j in (0..n).filter(|&j| ins[j] == 1) {
        let mut i2 = ins.clone();
        i2[j] = 0;
        let mut psi = pairing.psi.clone();
        psi[j] += 1;
        let s = paired(g, i2, KappaPsiMonomial::new(psi, pairing.kappa.clone()), theory, qc, order)?;
        dilaton = &dilaton + &s.scale_rational(&rat(1, 12));
    }

    // i^*: ψ at old markings stay, κ pull back to κ
    let mut loop_ = zero(order);
    if g >= 1 && 2 * (g as i64 - 1) + n as i64 > 0 {
        let mut i2 = ins.clone();
        i2.extend([0, 0]);
        let mut psi = pairing.psi.clone();
        psi.extend([0, 0]);
        let s = paired(g - 1, i2, KappaPsiMonomial::new(psi, pairing.kappa.clone()), theory, qc, order)?;
        loop_ = s.scale_rational(&rat(-1, 36));
    }

    // j^*: ψ follow their markings, each κ goes to one side
    let mut split = zero(order);
    let m = pairing.kappa.len();
    for g1 in 0..=g {
        let g2 = g - g1;
        for mask in 0u32..(1 << n) {
            let s1: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 1).collect();
            let s2: Vec<usize> = (0..n).filter(|&j| mask >> j & 1 == 0).collect();
            if 2 * g1 as i64 - 1 + s1.len() as i64 <= 0 || 2 * g2 as i64 - 1 + s2.len() as i64 <= 0 {
                continue;
            }
            for kmask in 0u32..(1 << m) {
                let side = |set: &[usize], first: bool| {
                    let mut psi: Vec<u32> = set.iter().map(|&j| pairing.psi[j]).collect();
                    psi.push(0);
                    let kappa: Vec<u32> =
                        (0..m).filter(|&i| (kmask >> i & 1 == 1) == first).map(|i| pairing.kappa[i]).collect();
                    let mut i2: Vec<usize> = set.iter().map(|&j| ins[j]).collect();
                    i2.push(0);
                    (i2, KappaPsiMonomial::new(psi, kappa))
                };
                let (ia, pa) = side(&s1, true);
                let (ib, pb) = side(&s2, false);
                let a = paired(g1, ia, pa, theory, qc, order)?;
                if a.is_zero() {
                    continue;
                }
                let b = paired(g2, ib, pb, theory, qc, order)?;
                split = &split + &(&a * &b).scale_rational(&rat(-1, 36));
            }
        }
    }
    Ok(RawTerms { lhs, dilaton, loop_, split, fitted })
}

fn assemble(g: u32, n: usize, order: usize, raw: RawTerms, flags: ConventionFlags) -> HAEReport {
    let rhs_loop = raw.loop_.scale_rational(&flags.loop_factor);
    let rhs_split = raw.split.scale_rational(&flags.split_factor);
    let residual = &(&(&raw.lhs - &raw.dilaton) - &rhs_loop) - &rhs_split;
    let passed = residual.truncate(order).is_zero();
    HAEReport {
        g,
        n,
        order,
        lhs: raw.lhs,
        rhs_dilaton: raw.dilaton,
        rhs_loop,
        rhs_split,
        residual,
        fitted: raw.fitted,
        convention_flags: flags,
        passed,
    }
}

/// Candidate loop normalizations tried at `(1,1)`.
pub fn loop_candidates() -> Vec<Rational> {
    vec![rat(1, 2), int(1), int(2)]
}

/// Finds the loop normalization that makes the `(1,1)` instance hold. The
/// split sum, which is empty at `(1,1)`, uses the same factor: both come
/// from cutting one edge, where the two new legs can be ordered two ways.
pub fn resolve_conventions(order: usize, guard: usize, theory: &Theory, qc: &QContext) -> Result<ConventionFlags, AnomalyError> {
    let raw = raw_terms(1, &[1], &KappaPsiMonomial::new(vec![0], vec![]), order, guard, theory, qc)?;
    let base = &(&raw.lhs - &raw.dilaton) - &raw.split;
    let mut candidates = Vec::new();
    let mut winners = Vec::new();
    for c in loop_candidates() {
        let ok = (&base - &raw.loop_.scale_rational(&c)).truncate(order).is_zero();
        candidates.push((fmt_rational(&c), ok));
        if ok {
            winners.push(c);
        }
    }
    if winners.len() != 1 {
        return Err(AnomalyError::ConventionResolution { tried: candidates.into_iter().map(|(c, _)| c).collect() });
    }
    let c = winners.remove(0);
    Ok(ConventionFlags { loop_factor: c.clone(), split_factor: c, resolved_at: "(g,n)=(1,1), pairing 1".into(), candidates })
}

/// The anomaly equation for `Ω_{g,n}(H,…,H)` paired with `pairing`, under the
/// given conventions.
#[allow(clippy::too_many_arguments)]
pub fn hae_check(
    g: u32,
    n: usize,
    pairing: &KappaPsiMonomial,
    order: usize,
    guard: usize,
    flags: &ConventionFlags,
    theory: &Theory,
    qc: &QContext,
) -> Result<HAEReport, AnomalyError> {
    hae_check_insertions(g, &vec![1; n], pairing, order, guard, flags, theory, qc)
}

/// General insertions `H^{i_j}`; the dilaton-type term only runs over the
/// `H` insertions.
#[allow(clippy::too_many_arguments)]
pub fn hae_check_insertions(
    g: u32,
    insertions: &[usize],
    pairing: &KappaPsiMonomial,
    order: usize,
    guard: usize,
    flags: &ConventionFlags,
    theory: &Theory,
    qc: &QContext,
) -> Result<HAEReport, AnomalyError> {
    let raw = raw_terms(g, insertions, pairing, order, guard, theory, qc)?;
    Ok(assemble(g, insertions.len(), order, raw, flags.clone()))
}

/// Genus-2 instances with no markings, paired with `κ₂` and `κ₁²`.
pub fn extended_genus_two(order: usize, guard: usize, flags: &ConventionFlags, theory: &Theory, qc: &QContext) -> Result<Vec<(String, HAEReport)>, AnomalyError> {
    let mut out = Vec::new();
    for (name, kappa) in [("kappa_2", vec![2]), ("kappa_1^2", vec![1, 1])] {
        let pairing = KappaPsiMonomial::new(vec![], kappa);
        out.push((name.to_string(), hae_check(2, 0, &pairing, order, guard, flags, theory, qc)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(order: usize) -> (Theory, QContext) {
        (Theory::new(int(1), 3).unwrap(), QContext::new(order))
    }

    #[test]
    fn basis_shapes() {
        assert_eq!(fit_basis(0), vec![(0, 0)]);
        assert_eq!(fit_basis(1), vec![(0, 2), (1, 0)]);
        assert_eq!(fit_basis(2), vec![(0, 1), (0, 4), (1, 2), (2, 0)]);
    }

    #[test]
    fn generator_round_trip() {
        let (_, qc) = setup(25);
        let s = &(&qc.md.i0.pow(2) * &qc.md.l_inv().pow(2)) * qc.gv.x(1);
        let p = fit_finite_generation(&s, 1, &[1], 1, 10, &qc).unwrap();
        assert_eq!(p.terms, BTreeMap::from([((1, 0), int(1))]));
        let d = e2_derivative_series(&p, &qc);
        assert_eq!(d.truncate(20), PowerSeries::constant(Var::SmallQ, 25, rat(1, 12).into()).truncate(20));
    }

    #[test]
    fn grading_violations_are_reported() {
        let (_, qc) = setup(25);
        // L³ has weight 3, which is not allowed in degree 1
        let s = &(&qc.md.i0.pow(2) * &qc.md.l_inv().pow(2)) * &qc.md.l.pow(3);
        assert!(matches!(fit_finite_generation(&s, 1, &[1], 1, 10, &qc), Err(AnomalyError::InconsistentFit { .. })));
        let short = QContext::new(5);
        assert!(matches!(
            fit_finite_generation(&short.md.l, 1, &[1], 1, 10, &short),
            Err(AnomalyError::InsufficientOrder { .. })
        ));
    }

    #[test]
    fn genus_one_one_point() {
        let (th, qc) = setup(30);
        let req = CorrelatorRequest::fundamental(1, vec![1], 30);
        let res = correlator(&req, &th, &qc).unwrap();
        let p = fit_finite_generation(&res.series, 1, &[1], 1, 10, &qc).unwrap();
        assert_eq!(p.terms, BTreeMap::from([((0, 2), rat(-1, 12)), ((1, 0), rat(-3, 8))]));
        assert_eq!(p.terms, res.symbolic.poly);
        let ctx = ModularContext::new(20);
        let cert = quasimodularity_certify(&p, &qc, &ctx, 10).unwrap();
        let qm = cert.plain.poly.clone().expect("weight-2 fit");
        assert!(!qm.uses_ab());
        assert!(e2_two_route_check(&p, &qm, &qc, &ctx, 15).passed());
    }

    #[test]
    fn anomaly_equation_low_genus() {
        let (th, qc) = setup(30);
        let flags = resolve_conventions(15, 10, &th, &qc).unwrap();
        assert_eq!(flags.loop_factor, rat(1, 2));
        let r11 = hae_check(1, 1, &KappaPsiMonomial::new(vec![0], vec![]), 15, 10, &flags, &th, &qc).unwrap();
        assert!(r11.passed);
        assert!(r11.rhs_split.is_zero());
        let r12 = hae_check(1, 2, &KappaPsiMonomial::new(vec![0, 0], vec![]), 12, 10, &flags, &th, &qc).unwrap();
        assert!(r12.passed, "{:?}", r12.residual.first_nonzero());
        // ⟨H,H,1⟩₀ = 0 kills the split term here
        assert!(r12.rhs_split.is_zero());
    }

    #[test]
    fn split_normalization_is_pinned() {
        let (th, qc) = setup(30);
        let flags = resolve_conventions(12, 10, &th, &qc).unwrap();
        // κ₁ pulls back to the genus-one side, where ⟨1⟩ survives
        let pairing = KappaPsiMonomial::new(vec![0, 0], vec![1]);
        let good = hae_check_insertions(1, &[2, 2], &pairing, 12, 10, &flags, &th, &qc).unwrap();
        assert!(!good.rhs_split.is_zero());
        assert!(good.passed, "{:?}", good.residual.first_nonzero());
        let wrong = ConventionFlags { split_factor: int(1), ..flags.clone() };
        let bad = hae_check_insertions(1, &[2, 2], &pairing, 12, 10, &wrong, &th, &qc).unwrap();
        assert!(!bad.passed);
        let mixed = hae_check_insertions(1, &[1, 2, 0], &KappaPsiMonomial::new(vec![0, 0, 0], vec![]), 10, 10, &flags, &th, &qc).unwrap();
        assert!(mixed.passed, "{:?}", mixed.residual.first_nonzero());
    }
}

#[cfg(test)]
mod heavier {
    use super::*;

    #[test]
    fn genus_one_two_point_weight_four() {
        let th = Theory::new(int(1), 3).unwrap();
        let qc = QContext::new(30);
        let res = correlator(&CorrelatorRequest::fundamental(1, vec![1, 1], 30), &th, &qc).unwrap();
        let p = fit_finite_generation(&res.series, 1, &[1, 1], 2, 10, &qc).unwrap();
        assert_eq!(p.terms, res.symbolic.poly);
        let ctx = ModularContext::new(25);
        let cert = quasimodularity_certify(&p, &qc, &ctx, 10).unwrap();
        let qm = cert.plain.poly.clone().expect("plain ring suffices at weight 4");
        assert!(cert.plain.unique);
        assert_eq!(cert.extended.poly.as_ref(), Some(&qm));
        assert!(e2_two_route_check(&p, &qm, &qc, &ctx, 15).passed());
    }

    #[test]
    fn genus_two_extended() {
        let th = Theory::new(int(1), 3).unwrap();
        let qc = QContext::new(25);
        let flags = resolve_conventions(10, 10, &th, &qc).unwrap();
        for (name, rep) in extended_genus_two(10, 10, &flags, &th, &qc).unwrap() {
            assert!(rep.passed, "{name}: {:?}", rep.residual.first_nonzero());
        }
    }
}
