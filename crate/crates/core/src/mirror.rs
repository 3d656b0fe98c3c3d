//! Geometric side of the mirror correspondence: the I-function coefficients,
//! `L = (1 − 27q)^{-1/3}`, the Birkhoff ladder `I_{m,n}`, the mirror map and
//! the generators `X_k`, `Y_k`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::check::{compare_series, expect_zero, CheckReport};
use crate::series::{int, rat, CycRational, PowerSeries, Rational, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IWhich {
    I0,
    I1,
}

/// `(3d)!/(d!)^3`.
pub fn i0_coefficient(d: u64) -> BigInt {
    let mut num = BigInt::one();
    for k in 1..=3 * d {
        num *= k;
    }
    let mut den = BigInt::one();
    for k in 1..=d {
        den *= k;
    }
    num / (&den * &den * &den)
}

/// Closed-form coefficients of `I_0` or `I_1` through `q^{d_max}`.
pub fn i_series(d_max: usize, which: IWhich) -> PowerSeries {
    let coeffs = (0..=d_max as u64).map(|d| {
        let base = Rational::from_integer(i0_coefficient(d));
        match which {
            IWhich::I0 => base,
            IWhich::I1 => {
                let harmonic: Rational = (d + 1..=3 * d).map(|m| rat(3, m as i64)).sum();
                base * harmonic
            }
        }
    });
    PowerSeries::from_rationals(Var::SmallQ, coeffs)
}

/// Element `c0 + c1·h + c2·h² + c3·h³ + c4·μ` of `Q[h, μ]` truncated above
/// weight 3, where `h` has weight 1 and `μ = λ³` has weight 3.
type Weighted = [Rational; 5];

fn wmul(a: &Weighted, b: &Weighted) -> Weighted {
    let mut out: Weighted = Default::default();
    for i in 0..4 {
        for j in 0..4 - i {
            out[i + j] += &a[i] * &b[j];
        }
    }
    out[4] = &a[0] * &b[4] + &a[4] * &b[0];
    out
}

fn wone() -> Weighted {
    let mut w: Weighted = Default::default();
    w[0] = Rational::one();
    w
}

/// `(h + d)³ − μ`
fn wdenominator(d: i64) -> Weighted {
    let d = int(d);
    [
        d.pow(3),
        int(3) * d.pow(2),
        int(3) * &d,
        Rational::one(),
        -Rational::one(),
    ]
}

/// Inverse of a unit `u = c0(1 + n)` with `n` nilpotent.
fn winv(u: &Weighted) -> Weighted {
    let c0_inv = u[0].recip();
    let mut n: Weighted = u.clone().map(|c| c * &c0_inv);
    n[0] = Rational::zero();
    let neg_n = n.map(|c| -c);
    let mut sum = wone();
    let mut p = wone();
    for _ in 0..3 {
        p = wmul(&p, &neg_n);
        for (s, c) in sum.iter_mut().zip(p.iter()) {
            *s += c;
        }
    }
    sum.map(|c| c * &c0_inv)
}

/// Frobenius expansion of the equivariant hypergeometric series
/// `Σ_d q^d Π_{k=1}^{3d}(3h+k) / Π_{k=1}^{d}((h+k)³ − μ)` in the weighted
/// truncation, one q-series per component `[1, h, h², h³, μ]`.
pub fn frobenius_components(order: usize) -> [PowerSeries; 5] {
    let mut term = wone();
    let mut cols: [Vec<Rational>; 5] = Default::default();
    for (k, col) in cols.iter_mut().enumerate() {
        col.push(term[k].clone());
    }
    for d in 1..=order as i64 {
        for k in 3 * d - 2..=3 * d {
            let mut lin: Weighted = Default::default();
            lin[0] = int(k);
            lin[1] = int(3);
            term = wmul(&term, &lin);
        }
        term = wmul(&term, &winv(&wdenominator(d)));
        for (k, col) in cols.iter_mut().enumerate() {
            col.push(term[k].clone());
        }
    }
    cols.map(|c| PowerSeries::from_rationals(Var::SmallQ, c))
}

/// `[I_0, I_1, I_2, I_3]`, where `I_3` collects the weight-3 part under
/// `h³ = λ³` (the relation in equivariant cohomology of P²).
pub fn frobenius_basis(order: usize) -> [PowerSeries; 4] {
    let [c0, c1, c2, c3, c4] = frobenius_components(order);
    [c0, c1, c2, &c3 + &c4]
}

/// `(I_2, I_3)` from the Frobenius method.
pub fn frobenius_solutions(order: usize) -> (PowerSeries, PowerSeries) {
    let [_, _, i2, i3] = frobenius_basis(order);
    (i2, i3)
}

/// Applies `(h+θ)³ − μ − q(3h+3θ+1)(3h+3θ+2)(3h+3θ+3)` to the Frobenius
/// components. The result must be `h³ − μ`, which is zero in the quotient.
pub fn frobenius_residual(comps: &[PowerSeries; 5]) -> [PowerSeries; 5] {
    let order = comps[0].order();
    let q = PowerSeries::identity(Var::SmallQ, order);
    // (a·h + b·θ + c) acting componentwise
    let apply = |v: &[PowerSeries; 5], a: i64, b: i64, c: i64| -> [PowerSeries; 5] {
        std::array::from_fn(|k| {
            let mut s = &v[k].qddq().scale_rational(&int(b)) + &v[k].scale_rational(&int(c));
            if (1..4).contains(&k) {
                s = &s + &v[k - 1].scale_rational(&int(a));
            }
            s
        })
    };
    let mut left = comps.clone();
    for _ in 0..3 {
        left = apply(&left, 1, 1, 0);
    }
    left[4] = &left[4] - &comps[0];
    let mut right = comps.clone();
    for k in 1..=3 {
        right = apply(&right, 3, 3, k);
    }
    std::array::from_fn(|k| &left[k] - &(&q * &right[k]))
}

/// Shared geometric data at a fixed q-order.
#[derive(Clone, Debug)]
pub struct MirrorData {
    pub order: usize,
    pub i0: PowerSeries,
    pub i1: PowerSeries,
    pub i2: PowerSeries,
    pub i3: PowerSeries,
    pub l: PowerSeries,
    /// `I_{m,n}` for `0 ≤ m ≤ n ≤ 3`.
    pub ladder: BTreeMap<(usize, usize), PowerSeries>,
    /// `Q(q) = q·exp(I_1/I_0)`.
    pub mirror_q: PowerSeries,
    /// `q(Q)`, the compositional inverse of the mirror map.
    pub inverse_q: PowerSeries,
}

impl MirrorData {
    pub fn new(order: usize) -> Self {
        let i0 = i_series(order, IWhich::I0);
        let i1 = i_series(order, IWhich::I1);
        let (i2, i3) = frobenius_solutions(order);
        let l = l_series(order);
        let mut md = Self {
            order,
            i0,
            i1,
            i2,
            i3,
            l,
            ladder: BTreeMap::new(),
            mirror_q: PowerSeries::zero(Var::SmallQ, order),
            inverse_q: PowerSeries::zero(Var::BigQ, order),
        };
        md.ladder = birkhoff_ladder(&md, 3, 3);
        md.mirror_q = mirror_map(&md);
        md.inverse_q = md
            .mirror_q
            .revert(Var::BigQ)
            .expect("mirror map has unit linear term");
        md
    }

    pub fn i_n(&self, n: usize) -> &PowerSeries {
        match n {
            0 => &self.i0,
            1 => &self.i1,
            2 => &self.i2,
            3 => &self.i3,
            _ => panic!("only I_0..I_3 are available"),
        }
    }

    pub fn ladder_entry(&self, m: usize, n: usize) -> &PowerSeries {
        &self.ladder[&(m, n)]
    }

    pub fn l_inv(&self) -> PowerSeries {
        self.l.invert_unit().expect("L is a unit")
    }

    /// `L^{-1} q d/dq`, the degree-raising derivation on generators.
    pub fn l_theta(&self, s: &PowerSeries) -> PowerSeries {
        &self.l_inv() * &s.qddq()
    }

    /// Substitutes `q = q(Q)`.
    pub fn to_modular(&self, s: &PowerSeries) -> PowerSeries {
        s.compose(&self.inverse_q).expect("inverse mirror map has zero constant term")
    }
}

pub fn l_series(order: usize) -> PowerSeries {
    let mut base = PowerSeries::one(Var::SmallQ, order);
    if order >= 1 {
        base.set_coeff(1, CycRational::from(-27));
    }
    base.pow_rational(&rat(-1, 3)).expect("unit constant term")
}

/// `I_{m,n} = I_{m−1,n−1}/I_{m−1,m−1} + θ(I_{m−1,n}/I_{m−1,m−1})`, `I_{0,n} = I_n`.
pub fn birkhoff_ladder(md: &MirrorData, m_max: usize, n_max: usize) -> BTreeMap<(usize, usize), PowerSeries> {
    let mut out = BTreeMap::new();
    for n in 0..=n_max {
        out.insert((0, n), md.i_n(n).clone());
    }
    for m in 1..=m_max {
        for n in m..=n_max {
            let diag = out[&(m - 1, m - 1)].invert_unit().expect("diagonal ladder entries are units");
            let a = &out[&(m - 1, n - 1)] * &diag;
            let b = (&out[&(m - 1, n)] * &diag).qddq();
            out.insert((m, n), &a + &b);
        }
    }
    out
}

/// `Q(q) = q·exp(I_1/I_0)`.
pub fn mirror_map(md: &MirrorData) -> PowerSeries {
    let tau = &md.i1 * &md.i0.invert_unit().expect("I0 is a unit");
    tau.exp().expect("I1/I0 has zero constant term").shift(1)
}

/// Picard-Fuchs residual `(1−27q)θ²I_0 − 27qθI_0 − 6qI_0`.
pub fn pf_residual(i0: &PowerSeries) -> PowerSeries {
    let n = i0.order();
    let q = PowerSeries::identity(Var::SmallQ, n);
    let mut one_minus = PowerSeries::one(Var::SmallQ, n);
    if n >= 1 {
        one_minus.set_coeff(1, CycRational::from(-27));
    }
    let t1 = i0.qddq();
    let t2 = t1.qddq();
    let a = &one_minus * &t2;
    let b = (&q * &t1).scale_rational(&int(27));
    let c = (&q * i0).scale_rational(&int(6));
    &(&a - &b) - &c
}

pub fn pf_check_i0(i0: &PowerSeries) -> CheckReport {
    let mut r = CheckReport::new("pf");
    r.push(expect_zero("Picard-Fuchs equation for I0", &pf_residual(i0), i0.order()));
    r
}

/// Zinger–Zagier relations and the two routes to `I_{1,1}`.
pub fn zinger_zagier_check(md: &MirrorData, order: usize) -> CheckReport {
    let mut r = CheckReport::new("zz");
    let l3 = md.l.pow(3);
    let i11 = md.ladder_entry(1, 1);
    let i22 = md.ladder_entry(2, 2);
    let i33 = md.ladder_entry(3, 3);
    r.push(compare_series("I11*I22*I33 = L^3", &(&(i11 * i22) * i33), &l3, order));
    r.push(compare_series("I22 = I00", i22, md.ladder_entry(0, 0), order));
    r.push(compare_series("I33 = I00", i33, md.ladder_entry(0, 0), order));
    let i0sq_inv = md.i0.pow(2).invert_unit().expect("unit");
    r.push(compare_series("I11 = L^3/I0^2", i11, &(&l3 * &i0sq_inv), order));
    let res = frobenius_residual(&frobenius_components(order.min(md.order)));
    let n = res[0].order();
    for (k, s) in res.iter().enumerate().take(3) {
        r.push(expect_zero(format!("Frobenius residual h^{k}"), s, order));
    }
    r.push(compare_series("Frobenius residual h^3 = 1", &res[3], &PowerSeries::one(Var::SmallQ, n), order));
    r.push(compare_series("Frobenius residual mu = -1", &res[4], &PowerSeries::constant(Var::SmallQ, n, CycRational::from(-1)), order));
    r
}

/// `X_k = (L^{-1}θ)^k ln(I_0/L)` and `Y_k = (L^{-1}θ)^k ln(q^{1/3}L)`.
#[derive(Clone, Debug)]
pub struct GeneratorValues {
    pub x: Vec<PowerSeries>,
    pub y: Vec<PowerSeries>,
    pub max_k: usize,
}

impl GeneratorValues {
    /// `X_k`, 1-based.
    pub fn x(&self, k: usize) -> &PowerSeries {
        &self.x[k - 1]
    }

    pub fn y(&self, k: usize) -> &PowerSeries {
        &self.y[k - 1]
    }
}

pub fn generator_values(md: &MirrorData, k_max: usize) -> GeneratorValues {
    let l_inv = md.l_inv();
    let theta_log_l = &md.l.qddq() * &l_inv;
    let theta_log_i0 = &md.i0.qddq() * &md.i0.invert_unit().expect("unit");
    // θ ln q^{1/3} = 1/3 exactly
    let mut x = vec![&l_inv * &(&theta_log_i0 - &theta_log_l)];
    let mut y = vec![&l_inv * &theta_log_l.add_constant(&CycRational::from(rat(1, 3)))];
    for k in 1..k_max {
        x.push(&l_inv * &x[k - 1].qddq());
        y.push(&l_inv * &y[k - 1].qddq());
    }
    GeneratorValues { x, y, max_k: k_max }
}

/// Checks the polynomial relations among the generators through `order`.
pub fn generator_relations_check(md: &MirrorData, gv: &GeneratorValues, order: usize) -> CheckReport {
    assert!(gv.max_k >= 4, "generator checks need k_max >= 4");
    let mut r = CheckReport::new("generators");
    let (x1, x2) = (gv.x(1), gv.x(2));
    let (y1, y2, y3, y4) = (gv.y(1), gv.y(2), gv.y(3), gv.y(4));
    let n = order.min(x1.order());
    let one = PowerSeries::one(Var::SmallQ, n);
    let rhs = &(-&(x1 * x1)) - &y2.scale_rational(&rat(1, 2));
    r.push(compare_series("X2 = -X1^2 - Y2/2", x2, &rhs, n));
    r.push(compare_series("L^2 = 3 Y1", &md.l.pow(2), &y1.scale_rational(&int(3)), n));
    let rhs = &(y1 * y1).scale_rational(&int(9)) - &y2.scale_rational(&rat(9, 2));
    r.push(compare_series("L = 9 Y1^2 - 9/2 Y2", &md.l, &rhs, n));
    let rhs = &(&y1.pow(3).scale_rational(&int(27)) - &(y1 * y2).scale_rational(&rat(135, 2)))
        + &y3.scale_rational(&rat(27, 2));
    r.push(compare_series("1 = 27 Y1^3 - 135/2 Y1 Y2 + 27/2 Y3", &one, &rhs, n));
    // derivative of the previous identity solved for Y4
    let rhs = &(&(y2 * y2) + &(y1 * y3)).scale_rational(&int(5)) - &(&(y1 * y1) * y2).scale_rational(&int(6));
    r.push(compare_series("Y4 = 5(Y2^2 + Y1 Y3) - 6 Y1^2 Y2", y4, &rhs, n));
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::qseries;

    #[test]
    fn i_series_examples() {
        assert_eq!(i_series(3, IWhich::I0), qseries(&[1, 6, 90, 1680]));
        let i1 = i_series(3, IWhich::I1);
        assert_eq!(*i1.coeff(0), CycRational::zero());
        assert_eq!(*i1.coeff(1), CycRational::from(15));
        // 90·(3/3 + 3/4 + 3/5 + 3/6) = 513/2
        assert_eq!(*i1.coeff(2), CycRational::from(rat(513, 2)));
    }

    #[test]
    fn frobenius_reproduces_closed_forms() {
        let [i0, i1, i2, i3] = frobenius_basis(12);
        assert_eq!(i0, i_series(12, IWhich::I0));
        assert_eq!(i1, i_series(12, IWhich::I1));
        assert!(i2.constant_term().is_zero());
        assert!(i3.constant_term().is_zero());
        // μ-component: (3d)!/(d!)³ · Σ_{k≤d} 1/k³
        let mu = &frobenius_components(12)[4];
        for d in 0..=12u64 {
            let h3: Rational = (1..=d).map(|k| rat(1, (k * k * k) as i64)).sum();
            let want = Rational::from_integer(i0_coefficient(d)) * h3;
            assert_eq!(*mu.coeff(d as usize), CycRational::from(want));
        }
    }

    #[test]
    fn pf_residual_vanishes_and_detects_perturbation() {
        assert!(pf_check_i0(&i_series(50, IWhich::I0)).passed());
        let mut bumped = i_series(20, IWhich::I0);
        let c = bumped.coeff(7) + &CycRational::one();
        bumped.set_coeff(7, c);
        let rep = pf_check_i0(&bumped);
        let (_, f) = rep.first_failure().unwrap();
        assert_eq!(f.order, 7);
        assert!(pf_check_i0(&i_series(0, IWhich::I0)).passed());
    }

    #[test]
    fn ladder_examples() {
        let md = MirrorData::new(6);
        assert_eq!(md.ladder_entry(1, 1).truncate(2), qseries(&[1, 15, 333]));
        assert_eq!(md.ladder_entry(0, 0), &md.i0);
        for m in 0..=3 {
            assert_eq!(*md.ladder_entry(m, m).constant_term(), CycRational::one());
        }
    }

    #[test]
    fn zinger_zagier_relations_hold() {
        let md = MirrorData::new(30);
        let rep = zinger_zagier_check(&md, 30);
        assert!(rep.passed(), "{:?}", rep.first_failure());
    }

    #[test]
    fn mirror_map_examples() {
        let md = MirrorData::new(30);
        assert_eq!(md.mirror_q.truncate(3), qseries(&[0, 1, 15, 279]));
        let big_q = md.mirror_q.compose(&md.inverse_q).unwrap();
        assert_eq!(big_q, PowerSeries::identity(Var::BigQ, 30));
        // θQ/Q = I11
        let q_over = PowerSeries::from_coeffs(Var::SmallQ, md.mirror_q.coeffs()[1..].to_vec());
        let theta_q_over = PowerSeries::from_coeffs(Var::SmallQ, md.mirror_q.qddq().coeffs()[1..].to_vec());
        let lhs = &theta_q_over * &q_over.invert_unit().unwrap();
        assert_eq!(lhs, md.ladder_entry(1, 1).truncate(29));
    }

    #[test]
    fn generator_examples() {
        let md = MirrorData::new(30);
        let gv = generator_values(&md, 4);
        assert_eq!(gv.x(1).truncate(1), qseries(&[0, -3]));
        assert_eq!(*gv.y(1).constant_term(), CycRational::from(rat(1, 3)));
        assert_eq!(md.l.pow(2), gv.y(1).scale_rational(&int(3)));
        let rep = generator_relations_check(&md, &gv, 30);
        assert!(rep.passed(), "{:?}", rep.first_failure());
        // q=0 value of the cubic identity
        let c = |s: &PowerSeries| s.constant_term().re.clone();
        let v = int(27) * c(gv.y(1)).pow(3) - rat(135, 2) * c(gv.y(1)) * c(gv.y(2))
            + rat(27, 2) * c(gv.y(3));
        assert_eq!(v, int(1));
    }

    #[test]
    fn perturbed_generator_is_flagged() {
        let md = MirrorData::new(12);
        let mut gv = generator_values(&md, 4);
        let bumped = gv.y[1].coeff(3) + &CycRational::one();
        gv.y[1].set_coeff(3, bumped);
        let rep = generator_relations_check(&md, &gv, 12);
        assert!(!rep.passed());
    }
}
