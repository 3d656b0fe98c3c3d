//! Stable graphs and the Givental–Teleman graph sum.
//!
//! Every correlator is computed symbolically: after the α-sums it is
//! `(I₀/L)^w λ^p P(X₁, L)` with `P` rational, and q-series come from
//! substituting the generator expansions. Vertex integrands are pure ψ/κ
//! monomials, evaluated through [`crate::intersections`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::intersections::{kappa_to_psi, IntersectionError, KappaPsiMonomial};
use crate::mirror::{generator_values, GeneratorValues, MirrorData};
use crate::rmatrix::{
    build_r_columns, edge_kernels, solve_r_recursion, EdgeKernel, FrameData, RColumns, RMatrixError, RSeries,
    ROW_PREFACTOR,
};
use crate::series::{fmt_rational, int, CycRational, LPoly, PowerSeries, Rational, XLPoly};

pub const DEFAULT_MAX_GENUS: u32 = 2;
pub const MAX_MARKINGS: usize = 6;

#[derive(Debug, Error)]
pub enum GraphSumError {
    #[error("(g, n) = ({g}, {n}) is unstable")]
    Unstable { g: u32, n: usize },
    #[error("(g, n) = ({g}, {n}) is outside the supported range (g ≤ {g_max}, n ≤ {MAX_MARKINGS})")]
    OutOfRange { g: u32, n: usize, g_max: u32 },
    #[error("insertion index {0} is not one of 0, 1, 2")]
    Insertion(usize),
    #[error("pairing class has {found} ψ exponents for {n} markings")]
    PairingShape { found: usize, n: usize },
    #[error("pairing class degree {pairing} exceeds dimension {dim}")]
    PairingDegree { pairing: u32, dim: usize },
    #[error("R-matrix data only reach dimension {have}, need {need}")]
    InsufficientOrder { have: usize, need: usize },
    #[error("α-sum left an irrational coefficient in graph {graph}")]
    XiPart { graph: String },
    #[error(transparent)]
    RMatrix(#[from] RMatrixError),
    #[error(transparent)]
    Intersection(#[from] IntersectionError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Vertex {
    pub genus: u32,
    pub half_edges: Vec<usize>,
}

/// Half-edges `0..n` are the legs (half-edge `j` is marking `j`); edge `e`
/// joins half-edges `n + 2e` and `n + 2e + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StableGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(usize, usize)>,
    /// `legs[j]` is the vertex carrying marking `j`.
    pub legs: Vec<usize>,
    pub aut: u64,
}

impl StableGraph {
    pub fn n(&self) -> usize {
        self.legs.len()
    }

    pub fn h1(&self) -> u32 {
        (self.edges.len() + 1 - self.vertices.len()) as u32
    }

    pub fn genus(&self) -> u32 {
        self.vertices.iter().map(|v| v.genus).sum::<u32>() + self.h1()
    }

    pub fn vertex_of(&self, half_edge: usize) -> usize {
        self.vertices
            .iter()
            .position(|v| v.half_edges.contains(&half_edge))
            .expect("every half-edge sits at a vertex")
    }

    pub fn valence(&self, v: usize) -> usize {
        self.vertices[v].half_edges.len()
    }

    /// `dim M̄_{g_v, n_v}`.
    pub fn vertex_dim(&self, v: usize) -> i64 {
        3 * self.vertices[v].genus as i64 - 3 + self.valence(v) as i64
    }

    pub fn is_stable(&self) -> bool {
        (0..self.vertices.len()).all(|v| 2 * self.vertices[v].genus as i64 - 2 + self.valence(v) as i64 > 0)
    }

    pub fn describe(&self) -> String {
        let verts: Vec<String> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let legs: Vec<String> = (0..self.n()).filter(|&j| self.legs[j] == i).map(|j| j.to_string()).collect();
                format!("v{i}[g{};{}]", v.genus, legs.join(","))
            })
            .collect();
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|&(a, b)| format!("v{}-v{}", self.vertex_of(a), self.vertex_of(b)))
            .collect();
        format!("{} | {} | aut {}", verts.join(" "), edges.join(" "), self.aut)
    }

    fn from_encoding(enc: &Encoding, aut: u64) -> Self {
        let nv = enc.genera.len();
        let n = enc.legs.len();
        let mut vertices: Vec<Vertex> = enc.genera.iter().map(|&g| Vertex { genus: g, half_edges: vec![] }).collect();
        for (j, &v) in enc.legs.iter().enumerate() {
            vertices[v].half_edges.push(j);
        }
        let mut edges = Vec::new();
        let mut next = n;
        for u in 0..nv {
            for w in u..nv {
                for _ in 0..enc.mult[u][w] {
                    vertices[u].half_edges.push(next);
                    vertices[w].half_edges.push(next + 1);
                    edges.push((next, next + 1));
                    next += 2;
                }
            }
        }
        Self { vertices, edges, legs: enc.legs.clone(), aut }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Encoding {
    genera: Vec<u32>,
    mult: Vec<Vec<u32>>,
    legs: Vec<usize>,
}

impl Encoding {
    fn permuted(&self, p: &[usize]) -> Self {
        let nv = self.genera.len();
        let mut genera = vec![0; nv];
        let mut mult = vec![vec![0; nv]; nv];
        for u in 0..nv {
            genera[p[u]] = self.genera[u];
            for w in u..nv {
                let (a, b) = (p[u].min(p[w]), p[u].max(p[w]));
                mult[a][b] = self.mult[u][w];
            }
        }
        let legs = self.legs.iter().map(|&v| p[v]).collect();
        Self { genera, mult, legs }
    }

    fn connected(&self) -> bool {
        let nv = self.genera.len();
        let mut seen = vec![false; nv];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for w in 0..nv {
                let m = if u <= w { self.mult[u][w] } else { self.mult[w][u] };
                if m > 0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn stable(&self) -> bool {
        let nv = self.genera.len();
        (0..nv).all(|v| {
            let mut val = self.legs.iter().filter(|&&x| x == v).count() as i64;
            for w in 0..nv {
                let m = if v <= w { self.mult[v][w] } else { self.mult[w][v] } as i64;
                val += if v == w { 2 * m } else { m };
            }
            2 * self.genera[v] as i64 - 2 + val > 0
        })
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn factorial(n: u32) -> u64 {
    (1..=n as u64).product()
}

/// Ways to distribute `total` identical items over `slots` slots.
fn distributions(total: u32, slots: usize) -> Vec<Vec<u32>> {
    if slots == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in distributions(total - first, slots - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub fn enumerate_stable_graphs(g: u32, n: usize) -> Result<Vec<StableGraph>, GraphSumError> {
    enumerate_stable_graphs_up_to(g, n, DEFAULT_MAX_GENUS)
}

/// All stable graphs of type `(g, n)` up to isomorphism fixing the legs.
pub fn enumerate_stable_graphs_up_to(g: u32, n: usize, g_max: u32) -> Result<Vec<StableGraph>, GraphSumError> {
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(GraphSumError::Unstable { g, n });
    }
    if g > g_max || n > MAX_MARKINGS {
        return Err(GraphSumError::OutOfRange { g, n, g_max });
    }
    let mut found: BTreeMap<Encoding, u64> = BTreeMap::new();
    let max_vertices = (2 * g as usize + n).saturating_sub(2);
    for nv in 1..=max_vertices {
        let perms = permutations(nv);
        let slots: Vec<(usize, usize)> = (0..nv).flat_map(|u| (u..nv).map(move |w| (u, w))).collect();
        for genera in distributions_bounded(nv, g) {
            let gsum: u32 = genera.iter().sum();
            let ne = g - gsum + nv as u32 - 1;
            for dist in distributions(ne, slots.len()) {
                let mut mult = vec![vec![0; nv]; nv];
                for (&(u, w), &m) in slots.iter().zip(&dist) {
                    mult[u][w] = m;
                }
                for code in 0..nv.pow(n as u32) {
                    let legs: Vec<usize> = (0..n).map(|j| code / nv.pow(j as u32) % nv).collect();
                    let enc = Encoding { genera: genera.clone(), mult: mult.clone(), legs };
                    if !enc.stable() || !enc.connected() {
                        continue;
                    }
                    let canon = perms.iter().map(|p| enc.permuted(p)).min().expect("nonempty");
                    if found.contains_key(&canon) {
                        continue;
                    }
                    let symmetric = perms.iter().filter(|p| canon.permuted(p) == canon).count() as u64;
                    let mut aut = symmetric;
                    for u in 0..nv {
                        for w in u..nv {
                            let m = canon.mult[u][w];
                            aut *= factorial(m);
                            if u == w {
                                aut *= 1 << m;
                            }
                        }
                    }
                    found.insert(canon, aut);
                }
            }
        }
    }
    Ok(found.iter().map(|(e, &a)| StableGraph::from_encoding(e, a)).collect())
}

/// Genus vectors of length `nv` with entries summing to at most `g`.
fn distributions_bounded(nv: usize, g: u32) -> Vec<Vec<u32>> {
    (0..=g).flat_map(|s| distributions(s, nv)).collect()
}

/// R-matrix data, edge kernels and κ-tail coefficients at a fixed `λ`,
/// sized for vertex integrands of dimension up to `max_dim`.
pub struct Theory {
    pub frame: FrameData,
    pub rs: RSeries,
    pub cols: RColumns,
    pub kernels: BTreeMap<(usize, usize), EdgeKernel>,
    /// `ℓ_M = [t^M] log Σ_k r_k t^k`.
    pub log_r: Vec<LPoly>,
    pub max_dim: usize,
    memo: Mutex<HashMap<String, SymbolicCorrelator>>,
}

impl Theory {
    pub fn new(lambda: Rational, max_dim: usize) -> Result<Self, GraphSumError> {
        let rs = solve_r_recursion(max_dim + 1)?;
        let cols = build_r_columns(&rs, max_dim + 1)?;
        let frame = FrameData::new(lambda);
        let kernels = edge_kernels(&cols, &frame, max_dim)?;
        let log_r = rs.log_coefficients();
        Ok(Self { frame, rs, cols, kernels, log_r, max_dim, memo: Mutex::new(HashMap::new()) })
    }

    /// `s_M^α` in `exp(Σ_M s_M^α κ_M)`, the resummed κ-tails at a vertex of color α.
    pub fn tail_coefficient(&self, alpha: usize, m: usize) -> XLPoly {
        let sign = if m.is_multiple_of(2) { int(-1) } else { int(1) };
        XLPoly::from_lpoly(&self.log_r[m]).scale(&self.frame.h_pow(alpha, -(m as i64)).scale(&sign))
    }

    /// `[ψ^k] R_i^α(−ψ)` without its `(I₀/L)` prefactor.
    pub fn leg(&self, alpha: usize, i: usize, k: usize) -> XLPoly {
        self.cols.leg(&self.frame, alpha, i, k)
    }

    /// κ-multisets of total degree `r` with their tail coefficients.
    fn tail_terms(&self, alpha: usize, r: usize) -> Vec<(Vec<u32>, XLPoly)> {
        let mut out = Vec::new();
        for parts in partitions(r as u32, r as u32) {
            let mut coeff = XLPoly::one();
            let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
            for &p in &parts {
                coeff = coeff.mul(&self.tail_coefficient(alpha, p as usize));
                *counts.entry(p).or_insert(0) += 1;
            }
            let denom: u64 = counts.values().map(|&c| factorial(c)).product();
            let coeff = coeff.scale_rational(&Rational::new(1.into(), denom.into()));
            if !coeff.is_zero() {
                out.push((parts, coeff));
            }
        }
        out
    }
}

/// Partitions of `n` into parts of size at most `max`, largest first.
fn partitions(n: u32, max: u32) -> Vec<Vec<u32>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in (1..=max.min(n)).rev() {
        for mut rest in partitions(n - first, first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CorrelatorRequest {
    pub g: u32,
    /// Each entry `i` stands for the insertion `H^i`.
    pub insertions: Vec<usize>,
    /// Tautological class paired against the correlator; `psi` has one entry per marking.
    pub pairing: KappaPsiMonomial,
    pub order: usize,
}

impl CorrelatorRequest {
    pub fn new(g: u32, insertions: Vec<usize>, pairing: KappaPsiMonomial, order: usize) -> Self {
        Self { g, insertions, pairing, order }
    }

    /// Paired with the fundamental class.
    pub fn fundamental(g: u32, insertions: Vec<usize>, order: usize) -> Self {
        let n = insertions.len();
        Self::new(g, insertions, KappaPsiMonomial::new(vec![0; n], vec![]), order)
    }

    pub fn n(&self) -> usize {
        self.insertions.len()
    }

    pub fn dim(&self) -> i64 {
        3 * self.g as i64 - 3 + self.n() as i64
    }

    /// Cohomological degree of the correlator part being paired.
    pub fn degree(&self) -> i64 {
        self.dim() - self.pairing.degree() as i64
    }

    pub fn prefactor_weight(&self) -> i32 {
        2 * self.g as i32 - 2 + self.insertions.iter().map(|&i| ROW_PREFACTOR[i]).sum::<i32>()
    }

    pub fn lambda_power(&self) -> i64 {
        self.g as i64 - 1 + self.insertions.iter().sum::<usize>() as i64 - self.degree()
    }

    fn key(&self) -> String {
        format!("{}|{:?}|{:?}|{:?}", self.g, self.insertions, self.pairing.psi, self.pairing.kappa)
    }

    pub fn validate(&self) -> Result<(), GraphSumError> {
        let n = self.n();
        if 2 * self.g as i64 - 2 + n as i64 <= 0 {
            return Err(GraphSumError::Unstable { g: self.g, n });
        }
        if let Some(&bad) = self.insertions.iter().find(|&&i| i > 2) {
            return Err(GraphSumError::Insertion(bad));
        }
        if self.pairing.psi.len() != n {
            return Err(GraphSumError::PairingShape { found: self.pairing.psi.len(), n });
        }
        if self.degree() < 0 {
            return Err(GraphSumError::PairingDegree { pairing: self.pairing.degree(), dim: self.dim() as usize });
        }
        Ok(())
    }
}

/// `λ^p (I₀/L)^w P(X₁, L)` with the `λ^p` divided out of `poly`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SymbolicCorrelator {
    #[serde(serialize_with = "ser_terms")]
    pub poly: BTreeMap<(u32, u32), Rational>,
    pub prefactor_weight: i32,
    pub lambda_power: i64,
    pub degree: i64,
    pub graph_count: usize,
    pub contributions: Vec<GraphTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GraphTerm {
    pub graph: String,
    #[serde(serialize_with = "ser_terms")]
    pub poly: BTreeMap<(u32, u32), Rational>,
}

fn ser_terms<S: serde::Serializer>(t: &BTreeMap<(u32, u32), Rational>, s: S) -> Result<S::Ok, S::Error> {
    let m: BTreeMap<String, String> = t.iter().map(|((a, b), c)| (format!("X1^{a}*L^{b}"), fmt_rational(c))).collect();
    m.serialize(s)
}

impl SymbolicCorrelator {
    pub fn as_xl(&self) -> XLPoly {
        let mut p = XLPoly::zero();
        for (&(a, b), c) in &self.poly {
            p.add_term(a, b, CycRational::from(c.clone()));
        }
        p
    }

    /// `(I₀/L)^w P(X₁(q), L(q))`, at `λ = 1`.
    pub fn series(&self, qc: &QContext) -> PowerSeries {
        let base = self.as_xl().eval_series(qc.gv.x(1), &qc.md.l);
        &base * &qc.prefactor(self.prefactor_weight)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelatorResult {
    pub request: CorrelatorRequest,
    pub symbolic: SymbolicCorrelator,
    #[serde(serialize_with = "ser_series")]
    pub series: PowerSeries,
}

fn ser_series<S: serde::Serializer>(p: &PowerSeries, s: S) -> Result<S::Ok, S::Error> {
    p.to_strings().serialize(s)
}

/// Mirror data and generator expansions at one q-order.
#[derive(Clone, Debug)]
pub struct QContext {
    pub md: MirrorData,
    pub gv: GeneratorValues,
}

impl QContext {
    pub fn new(order: usize) -> Self {
        let md = MirrorData::new(order);
        let gv = generator_values(&md, 4);
        Self { md, gv }
    }

    pub fn order(&self) -> usize {
        self.md.order
    }

    /// `(I₀/L)^w`.
    pub fn prefactor(&self, w: i32) -> PowerSeries {
        let b = &self.md.i0 * &self.md.l_inv();
        b.powi(w as i64).expect("I₀/L is a unit")
    }
}

/// Sum over colorings of one graph's contribution, divided by `|Aut|`,
/// without the `(I₀/L)^w` prefactor and at the theory's `λ`.
pub fn graph_contribution(graph: &StableGraph, req: &CorrelatorRequest, theory: &Theory) -> Result<XLPoly, GraphSumError> {
    req.validate()?;
    let nv = graph.vertices.len();
    let n = graph.n();
    let need = req.dim() as usize;
    if need > theory.max_dim {
        return Err(GraphSumError::InsufficientOrder { have: theory.max_dim, need });
    }
    // the ψ-budget each vertex offers to the correlator, before κ from the pairing
    let half_count = n + 2 * graph.edges.len();
    let mut vertex_of = vec![0; half_count];
    for (v, vert) in graph.vertices.iter().enumerate() {
        for &h in &vert.half_edges {
            vertex_of[h] = v;
        }
    }
    let mut base_budget: Vec<i64> = (0..nv).map(|v| graph.vertex_dim(v)).collect();
    for j in 0..n {
        base_budget[vertex_of[j]] -= req.pairing.psi[j] as i64;
    }
    if base_budget.iter().any(|&b| b < 0) {
        return Ok(XLPoly::zero());
    }
    let kappas = &req.pairing.kappa;
    let mut total = XLPoly::zero();
    for coloring in 0..3usize.pow(nv as u32) {
        let alpha: Vec<usize> = (0..nv).map(|v| coloring / 3usize.pow(v as u32) % 3).collect();
        for assign in 0..nv.pow(kappas.len() as u32) {
            let owner: Vec<usize> = (0..kappas.len()).map(|i| assign / nv.pow(i as u32) % nv).collect();
            let mut budget = base_budget.clone();
            let mut vertex_kappa: Vec<Vec<u32>> = vec![vec![]; nv];
            for (i, &v) in owner.iter().enumerate() {
                budget[v] -= kappas[i] as i64;
                vertex_kappa[v].push(kappas[i]);
            }
            if budget.iter().any(|&b| b < 0) {
                continue;
            }
            let ctx = Assembly { graph, req, theory, alpha: &alpha, vertex_of: &vertex_of, vertex_kappa: &vertex_kappa };
            let mut exps = vec![0usize; half_count];
            total.add_assign(&ctx.sum_exponents(0, &mut exps, &mut budget.clone())?);
        }
    }
    Ok(total.scale_rational(&Rational::new(1.into(), graph.aut.into())))
}

struct Assembly<'a> {
    graph: &'a StableGraph,
    req: &'a CorrelatorRequest,
    theory: &'a Theory,
    alpha: &'a [usize],
    vertex_of: &'a [usize],
    vertex_kappa: &'a [Vec<u32>],
}

impl Assembly<'_> {
    /// Assigns ψ-exponents to half-edges `h..`, then closes each vertex with κ-tails.
    fn sum_exponents(&self, h: usize, exps: &mut Vec<usize>, budget: &mut Vec<i64>) -> Result<XLPoly, GraphSumError> {
        if h == exps.len() {
            return self.close(exps, budget);
        }
        let v = self.vertex_of[h];
        let mut acc = XLPoly::zero();
        for k in 0..=budget[v].max(0) as usize {
            exps[h] = k;
            budget[v] -= k as i64;
            acc.add_assign(&self.sum_exponents(h + 1, exps, budget)?);
            budget[v] += k as i64;
        }
        exps[h] = 0;
        Ok(acc)
    }

    fn close(&self, exps: &[usize], budget: &[i64]) -> Result<XLPoly, GraphSumError> {
        let g = self.graph;
        let n = g.n();
        let mut weight = XLPoly::one();
        for j in 0..n {
            let a = self.alpha[g.legs[j]];
            weight = weight.mul(&self.theory.leg(a, self.req.insertions[j], exps[j]));
            if weight.is_zero() {
                return Ok(weight);
            }
        }
        for &(h1, h2) in &g.edges {
            let (a, b) = (self.alpha[self.vertex_of[h1]], self.alpha[self.vertex_of[h2]]);
            let v = self.theory.kernels[&(a, b)].get(exps[h1], exps[h2]);
            weight = weight.mul(&v);
            if weight.is_zero() {
                return Ok(weight);
            }
        }
        for (v, vert) in g.vertices.iter().enumerate() {
            let a = self.alpha[v];
            let mut local = XLPoly::zero();
            let psi: Vec<u32> = vert
                .half_edges
                .iter()
                .map(|&h| exps[h] as u32 + if h < n { self.req.pairing.psi[h] } else { 0 })
                .collect();
            for (tails, coeff) in self.theory.tail_terms(a, budget[v] as usize) {
                let mut kappa = self.vertex_kappa[v].clone();
                kappa.extend(tails);
                let integral = kappa_to_psi(&KappaPsiMonomial::new(psi.clone(), kappa), vert.genus)?;
                if !integral.is_zero() {
                    local.add_assign(&coeff.scale_rational(&integral));
                }
            }
            let vertex = self.theory.frame.h_pow(a, vert.genus as i64 - 1);
            weight = weight.mul(&local.scale(&vertex));
            if weight.is_zero() {
                return Ok(weight);
            }
        }
        Ok(weight)
    }
}

fn rational_part(p: &XLPoly, graph: &str) -> Result<BTreeMap<(u32, u32), Rational>, GraphSumError> {
    p.rational_terms().ok_or_else(|| GraphSumError::XiPart { graph: graph.to_string() })
}

/// Symbolic correlator, memoized per request on the theory.
pub fn correlator_symbolic(req: &CorrelatorRequest, theory: &Theory) -> Result<SymbolicCorrelator, GraphSumError> {
    req.validate()?;
    let key = req.key();
    if let Some(hit) = theory.memo.lock().expect("memo lock").get(&key) {
        return Ok(hit.clone());
    }
    let graphs = enumerate_stable_graphs_up_to(req.g, req.n(), req.g.max(DEFAULT_MAX_GENUS))?;
    let terms: Vec<(String, XLPoly)> = graphs
        .par_iter()
        .map(|gr| graph_contribution(gr, req, theory).map(|p| (gr.describe(), p)))
        .collect::<Result<_, _>>()?;
    let lambda_scale = theory.frame.lambda.pow(req.lambda_power() as i32).recip();
    let mut total = XLPoly::zero();
    let mut contributions = Vec::new();
    for (name, p) in &terms {
        let p = p.scale_rational(&lambda_scale);
        contributions.push(GraphTerm { graph: name.clone(), poly: rational_part(&p, name)? });
        total.add_assign(&p);
    }
    let out = SymbolicCorrelator {
        poly: rational_part(&total, "total")?,
        prefactor_weight: req.prefactor_weight(),
        lambda_power: req.lambda_power(),
        degree: req.degree(),
        graph_count: graphs.len(),
        contributions,
    };
    theory.memo.lock().expect("memo lock").insert(key, out.clone());
    Ok(out)
}

pub fn correlator(req: &CorrelatorRequest, theory: &Theory, qc: &QContext) -> Result<CorrelatorResult, GraphSumError> {
    let symbolic = correlator_symbolic(req, theory)?;
    let series = symbolic.series(qc).truncate(req.order.min(qc.order()));
    Ok(CorrelatorResult { request: req.clone(), symbolic, series })
}

/// `⟨H^a, H^b, H^c⟩_{0,3}` from the quantum product: `H∗1 = H`,
/// `H∗H = (I_{2,2}/I_{1,1}) H²`, `H∗H² = λ³ (I_{3,3}/I_{1,1})·1`, with the
/// twisted pairing and the unit axiom for the rest. Returns `(series, λ-power)`.
pub fn quantum_triple(a: usize, b: usize, c: usize, md: &MirrorData) -> (PowerSeries, i64) {
    let mut t = [a, b, c];
    t.sort_unstable();
    let order = md.order;
    let zero = || PowerSeries::zero(crate::series::Var::SmallQ, order);
    let pairing = |x: usize, y: usize| -> (Rational, i64) {
        match (x.min(y), x.max(y)) {
            (0, 1) => (int(3), 0),
            (2, 2) => (int(3), 3),
            _ => (Rational::zero(), 0),
        }
    };
    if t[0] == 0 {
        let (v, p) = pairing(t[1], t[2]);
        return (PowerSeries::constant(crate::series::Var::SmallQ, order, v.into()), p);
    }
    let i11_inv = md.ladder_entry(1, 1).invert_unit().expect("unit");
    // H∗H^x as (coefficient series, λ-power, basis index)
    let (coef, lp, idx) = match t[1] {
        1 => (md.ladder_entry(2, 2) * &i11_inv, 0, 2),
        2 => (md.ladder_entry(3, 3) * &i11_inv, 3, 0),
        _ => unreachable!(),
    };
    let (pv, pp) = pairing(idx, t[2]);
    if pv.is_zero() {
        return (zero(), 0);
    }
    (coef.scale_rational(&pv), lp + pp)
}

/// The ten unordered triples compared between the graph sum and the quantum product.
pub fn genus_zero_oracle(theory: &Theory, qc: &QContext, order: usize) -> Result<crate::check::CheckReport, GraphSumError> {
    let mut rep = crate::check::CheckReport::new("genus0_oracle");
    let triples: BTreeSet<[usize; 3]> = (0..27)
        .map(|c| {
            let mut t = [c % 3, c / 3 % 3, c / 9];
            t.sort_unstable();
            t
        })
        .collect();
    for t in triples {
        let req = CorrelatorRequest::fundamental(0, t.to_vec(), order);
        let got = correlator(&req, theory, qc)?;
        let (want, lp) = quantum_triple(t[0], t[1], t[2], &qc.md);
        let label = format!("<H^{},H^{},H^{}>", t[0], t[1], t[2]);
        if !want.is_zero() && lp != got.symbolic.lambda_power {
            rep.push(crate::check::IdentityOutcome::fail(
                label,
                0,
                format!("λ-power {} vs {}", got.symbolic.lambda_power, lp),
            ));
            continue;
        }
        rep.push(crate::check::compare_series(label, &got.series, &want, order));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::rat;

    #[test]
    fn small_enumerations() {
        let g03 = enumerate_stable_graphs(0, 3).unwrap();
        assert_eq!(g03.len(), 1);
        assert_eq!(g03[0].aut, 1);
        let g11 = enumerate_stable_graphs(1, 1).unwrap();
        assert_eq!(g11.len(), 2);
        let mut auts: Vec<u64> = g11.iter().map(|g| g.aut).collect();
        auts.sort();
        assert_eq!(auts, vec![1, 2]);
        assert_eq!(enumerate_stable_graphs(0, 4).unwrap().len(), 4);
        assert_eq!(enumerate_stable_graphs(1, 2).unwrap().len(), 5);
        assert_eq!(enumerate_stable_graphs(2, 0).unwrap().len(), 7);
        for gr in enumerate_stable_graphs(2, 1).unwrap() {
            assert!(gr.is_stable());
            assert_eq!(gr.genus(), 2);
        }
        assert!(matches!(enumerate_stable_graphs(0, 2), Err(GraphSumError::Unstable { .. })));
        assert!(matches!(enumerate_stable_graphs(9, 1), Err(GraphSumError::OutOfRange { .. })));
    }

    /// Independent enumeration: degenerate the trivial graph by adding
    /// self-nodes and splitting vertices, compare graphs through brute-force
    /// half-edge isomorphisms, and count automorphisms the same way.
    mod brute {
        use super::super::*;

        #[derive(Clone, Debug)]
        pub struct Raw {
            pub genera: Vec<u32>,
            /// vertex of each half-edge
            pub at: Vec<usize>,
            /// partner of each half-edge, `None` for legs
            pub pair: Vec<Option<usize>>,
            /// marking of each leg half-edge
            pub mark: Vec<Option<usize>>,
        }

        impl Raw {
            fn add_half(&mut self, v: usize) -> usize {
                self.at.push(v);
                self.pair.push(None);
                self.mark.push(None);
                self.at.len() - 1
            }
        }

        pub fn trivial(g: u32, n: usize) -> Raw {
            Raw { genera: vec![g], at: vec![0; n], pair: vec![None; n], mark: (0..n).map(Some).collect() }
        }

        fn stable(r: &Raw) -> bool {
            (0..r.genera.len()).all(|v| 2 * r.genera[v] as i64 - 2 + r.at.iter().filter(|&&x| x == v).count() as i64 > 0)
        }

        pub fn degenerations(r: &Raw) -> Vec<Raw> {
            let mut out = Vec::new();
            for v in 0..r.genera.len() {
                if r.genera[v] >= 1 {
                    let mut s = r.clone();
                    s.genera[v] -= 1;
                    let a = s.add_half(v);
                    let b = s.add_half(v);
                    s.pair[a] = Some(b);
                    s.pair[b] = Some(a);
                    if stable(&s) {
                        out.push(s);
                    }
                }
                let halves: Vec<usize> = (0..r.at.len()).filter(|&h| r.at[h] == v).collect();
                for g1 in 0..=r.genera[v] {
                    for mask in 0u32..(1 << halves.len()) {
                        let mut s = r.clone();
                        let w = s.genera.len();
                        s.genera[v] = g1;
                        s.genera.push(r.genera[v] - g1);
                        for (i, &h) in halves.iter().enumerate() {
                            if mask >> i & 1 == 1 {
                                s.at[h] = w;
                            }
                        }
                        let a = s.add_half(v);
                        let b = s.add_half(w);
                        s.pair[a] = Some(b);
                        s.pair[b] = Some(a);
                        if stable(&s) {
                            out.push(s);
                        }
                    }
                }
            }
            out
        }

        /// Bijections of half-edges (and induced vertex maps) from `x` to `y`.
        pub fn isomorphisms(x: &Raw, y: &Raw) -> u64 {
            if x.at.len() != y.at.len() || x.genera.len() != y.genera.len() {
                return 0;
            }
            let nh = x.at.len();
            let mut count = 0;
            let mut map = vec![usize::MAX; nh];
            let mut used = vec![false; nh];
            fn go(x: &Raw, y: &Raw, h: usize, map: &mut Vec<usize>, used: &mut Vec<bool>, count: &mut u64) {
                if h == map.len() {
                    // induced vertex map must be well defined, bijective and genus preserving
                    let mut vmap = vec![usize::MAX; x.genera.len()];
                    for k in 0..map.len() {
                        let (a, b) = (x.at[k], y.at[map[k]]);
                        if vmap[a] == usize::MAX {
                            vmap[a] = b;
                        } else if vmap[a] != b {
                            return;
                        }
                    }
                    let mut seen = vec![false; y.genera.len()];
                    for (a, &b) in vmap.iter().enumerate() {
                        if b == usize::MAX {
                            // isolated vertex without half-edges cannot occur for stable graphs with edges
                            return;
                        }
                        if seen[b] || x.genera[a] != y.genera[b] {
                            return;
                        }
                        seen[b] = true;
                    }
                    *count += 1;
                    return;
                }
                for t in 0..map.len() {
                    if used[t] || x.mark[h] != y.mark[t] {
                        continue;
                    }
                    if let Some(p) = x.pair[h] {
                        if p < h && y.pair[map[p]] != Some(t) {
                            continue;
                        }
                        if y.pair[t].is_none() {
                            continue;
                        }
                    } else if y.pair[t].is_some() {
                        continue;
                    }
                    used[t] = true;
                    map[h] = t;
                    go(x, y, h + 1, map, used, count);
                    used[t] = false;
                }
                map[h] = usize::MAX;
            }
            if x.at.is_empty() {
                return if x.genera == y.genera { 1 } else { 0 };
            }
            go(x, y, 0, &mut map, &mut used, &mut count);
            count
        }

        /// Isomorphism classes with automorphism counts.
        pub fn classes(g: u32, n: usize) -> Vec<(Raw, u64)> {
            let mut reps: Vec<Raw> = vec![];
            let mut frontier = vec![trivial(g, n)];
            while let Some(r) = frontier.pop() {
                if reps.iter().any(|s| isomorphisms(&r, s) > 0) {
                    continue;
                }
                frontier.extend(degenerations(&r));
                reps.push(r);
            }
            reps.into_iter().map(|r| { let a = isomorphisms(&r, &r); (r, a) }).collect()
        }

        pub fn from_graph(gr: &StableGraph) -> Raw {
            let nh = gr.n() + 2 * gr.edges.len();
            let mut r = Raw { genera: gr.vertices.iter().map(|v| v.genus).collect(), at: vec![0; nh], pair: vec![None; nh], mark: vec![None; nh] };
            for (v, vert) in gr.vertices.iter().enumerate() {
                for &h in &vert.half_edges {
                    r.at[h] = v;
                }
            }
            for j in 0..gr.n() {
                r.mark[j] = Some(j);
            }
            for &(a, b) in &gr.edges {
                r.pair[a] = Some(b);
                r.pair[b] = Some(a);
            }
            r
        }
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for (g, n) in [(0, 3), (0, 4), (0, 5), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1)] {
            let ours = enumerate_stable_graphs(g, n).unwrap();
            let theirs = brute::classes(g, n);
            assert_eq!(ours.len(), theirs.len(), "count at ({g},{n})");
            for gr in &ours {
                let raw = brute::from_graph(gr);
                let (_, aut) = theirs.iter().find(|(r, _)| brute::isomorphisms(&raw, r) > 0).expect("graph present");
                assert_eq!(gr.aut, *aut, "aut of {}", gr.describe());
            }
        }
    }

    fn theory() -> Theory {
        Theory::new(int(1), 3).unwrap()
    }

    #[test]
    fn genus_one_hand_assembly() {
        let th = theory();
        let req = CorrelatorRequest::fundamental(1, vec![1], 10);
        let graphs = enumerate_stable_graphs(1, 1).unwrap();
        let loop_graph = graphs.iter().find(|g| g.edges.len() == 1).unwrap();
        // loop: (1/2) Σ_α λ_α⁻¹ · λ_α · V^{αα}_{00} ⟨τ₀³⟩₀ with V_{00} = r₁ − X₁/3
        let r1 = XLPoly::from_lpoly(th.rs.r(1));
        let v00 = r1.sub(&XLPoly::x1().scale_rational(&rat(1, 3)));
        assert_eq!(th.kernels[&(0, 0)].get(0, 0), v00);
        let want_loop = v00.scale_rational(&rat(3, 2));
        assert_eq!(graph_contribution(loop_graph, &req, &th).unwrap(), want_loop);
        let at_zero = want_loop.eval(&CycRational::zero(), &CycRational::one());
        assert_eq!(at_zero, CycRational::from(rat(-1, 12)));
        // smooth vertex: ψ-leg (X₁ − r₁)/8 plus κ₁-tail r₁/8
        let smooth = graphs.iter().find(|g| g.edges.is_empty()).unwrap();
        assert_eq!(graph_contribution(smooth, &req, &th).unwrap(), XLPoly::x1().scale_rational(&rat(1, 8)));
    }

    #[test]
    fn genus_zero_triples_match_quantum_product() {
        let th = theory();
        let qc = QContext::new(15);
        let rep = genus_zero_oracle(&th, &qc, 15).unwrap();
        assert!(rep.passed(), "{:?}", rep.first_failure());
        assert_eq!(rep.identities.len(), 10);
    }

    #[test]
    fn lambda_homogeneity() {
        let one = theory();
        let two = Theory::new(int(2), 3).unwrap();
        for (g, ins) in [(1u32, vec![1]), (1, vec![1, 1]), (1, vec![0, 2]), (0, vec![1, 1, 2, 0]), (1, vec![0])] {
            let req = CorrelatorRequest::fundamental(g, ins, 5);
            assert_eq!(correlator_symbolic(&req, &one).unwrap().poly, correlator_symbolic(&req, &two).unwrap().poly);
        }
    }

    #[test]
    fn degree_zero_parts_are_topological() {
        // ω_{1,1}(1) = Σ_α Δ_α⁰ = 3 paired with ψ₁ gives 3/24
        let th = theory();
        let req = CorrelatorRequest::new(1, vec![0], KappaPsiMonomial::new(vec![1], vec![]), 5);
        let s = correlator_symbolic(&req, &th).unwrap();
        assert_eq!(s.poly, BTreeMap::from([((0, 0), rat(1, 8))]));
    }

    #[test]
    fn request_validation() {
        let th = theory();
        let bad = CorrelatorRequest::new(1, vec![3], KappaPsiMonomial::new(vec![0], vec![]), 5);
        assert!(matches!(correlator_symbolic(&bad, &th), Err(GraphSumError::Insertion(3))));
        let heavy = CorrelatorRequest::new(1, vec![1], KappaPsiMonomial::new(vec![2], vec![]), 5);
        assert!(matches!(correlator_symbolic(&heavy, &th), Err(GraphSumError::PairingDegree { .. })));
    }
}
