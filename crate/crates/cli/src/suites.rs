//! Verification suites, one per checked family of identities.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use mirrorforge_core::anomaly::{
    e2_two_route_check, fit_finite_generation, hae_check, quasimodularity_certify, resolve_conventions, AnomalyError, ConventionFlags,
    GeneratorPoly,
};
use mirrorforge_core::check::{compare_values, CheckReport, IdentityOutcome};
use mirrorforge_core::graph_sum::{correlator, genus_zero_oracle, CorrelatorRequest, GraphSumError, QContext, Theory};
use mirrorforge_core::intersections::{
    psi_integral_reduced, psi_integral_uncached, CacheStore, IntersectionEngine, KappaPsiMonomial, LoadStatus, TauKey,
};
use mirrorforge_core::mirror::{generator_relations_check, generator_values, i_series, pf_check_i0, zinger_zagier_check, IWhich, MirrorData};
use mirrorforge_core::modular::{generator_dictionary_check, identification_check, serre_derivative_check, theta_series, ModularContext};
use mirrorforge_core::rmatrix::{
    bernoulli_polynomial, build_r_columns, delta_tw_q0_check, edge_kernels, edge_numerator_on_antidiagonal, initial_constants,
    qde_check, quantum_a_matrix, r_structure_check, solve_r_recursion, FrameData, RColumns, RSeries,
};
use mirrorforge_core::series::{int, rat, CycRational, LPoly};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::report::VerificationReport;

/// Every suite, in dependency order.
pub const SUITES: &[&str] = &[
    "rmatrix",
    "initial",
    "q0",
    "pf",
    "zz",
    "generators",
    "serre",
    "identification",
    "modgene",
    "qde",
    "edge",
    "oracle",
    "quasimod",
    "hae",
    "e2",
    "dvv",
    "cache",
];

/// Largest `3g−3+n` covered by the intersection-number checks.
pub const DVV_MAX_DIM: i64 = 6;

/// Shared, lazily built data; suites running concurrently reuse it.
pub struct SuiteContext {
    pub config: RunConfig,
    /// Comparison order forced on every suite.
    pub order_override: Option<usize>,
    rs: OnceLock<RSeries>,
    cols: OnceLock<RColumns>,
    theory: OnceLock<Result<Theory, String>>,
    qc: OnceLock<QContext>,
    mirror: Mutex<HashMap<usize, Arc<MirrorData>>>,
    modular: OnceLock<ModularContext>,
    conventions: OnceLock<Result<ConventionFlags, SuiteError>>,
}

#[derive(Clone, Debug)]
enum SuiteError {
    Insufficient { needed: usize, available: usize },
    Other(String),
}

impl From<AnomalyError> for SuiteError {
    fn from(e: AnomalyError) -> Self {
        match e {
            AnomalyError::InsufficientOrder { needed, available } => SuiteError::Insufficient { needed, available },
            e => SuiteError::Other(e.to_string()),
        }
    }
}

impl From<GraphSumError> for SuiteError {
    fn from(e: GraphSumError) -> Self {
        SuiteError::Other(e.to_string())
    }
}

type SuiteResult = Result<VerificationReport, SuiteError>;

impl SuiteContext {
    pub fn new(config: RunConfig, order_override: Option<usize>) -> Self {
        Self {
            config,
            order_override,
            rs: OnceLock::new(),
            cols: OnceLock::new(),
            theory: OnceLock::new(),
            qc: OnceLock::new(),
            mirror: Mutex::new(HashMap::new()),
            modular: OnceLock::new(),
            conventions: OnceLock::new(),
        }
    }

    fn order(&self, default: usize) -> usize {
        self.order_override.unwrap_or_else(|| self.config.suite_order(default))
    }

    /// q-order of the series that fits are run on.
    fn working_order(&self) -> usize {
        self.config.q_order.max(self.order_override.unwrap_or(0))
    }

    fn rs(&self) -> &RSeries {
        self.rs.get_or_init(|| solve_r_recursion(self.config.z_order.max(12)).expect("R recursion at the configured depth"))
    }

    fn cols(&self) -> &RColumns {
        self.cols.get_or_init(|| build_r_columns(self.rs(), self.config.z_order).expect("graded R columns"))
    }

    fn theory(&self) -> Result<&Theory, SuiteError> {
        self.theory
            .get_or_init(|| Theory::new(int(1), 3).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| SuiteError::Other(e.clone()))
    }

    fn qc(&self) -> &QContext {
        self.qc.get_or_init(|| QContext::new(self.working_order()))
    }

    fn mirror(&self, order: usize) -> Arc<MirrorData> {
        let mut m = self.mirror.lock().expect("mirror cache");
        m.entry(order).or_insert_with(|| Arc::new(MirrorData::new(order))).clone()
    }

    fn modular(&self) -> &ModularContext {
        self.modular.get_or_init(|| ModularContext::new(self.working_order()))
    }

    fn conventions(&self) -> Result<&ConventionFlags, SuiteError> {
        let order = self.order(15);
        self.conventions
            .get_or_init(|| Ok(resolve_conventions(order, self.config.guard, self.theory()?, self.qc())?))
            .as_ref()
            .map_err(Clone::clone)
    }

    fn fitted(&self, g: u32, insertions: &[usize], degree: i64) -> Result<GeneratorPoly, SuiteError> {
        let qc = self.qc();
        let req = CorrelatorRequest::fundamental(g, insertions.to_vec(), qc.order());
        let res = correlator(&req, self.theory()?, qc)?;
        Ok(fit_finite_generation(&res.series, g, insertions, degree, self.config.guard, qc)?)
    }
}

pub fn is_suite(name: &str) -> bool {
    SUITES.contains(&name)
}

/// Runs one suite and records its wall time.
pub fn run_suite(ctx: &SuiteContext, name: &str) -> VerificationReport {
    let start = Instant::now();
    let result = match name {
        "rmatrix" => closed_forms(ctx),
        "initial" => initial(ctx),
        "q0" => q0(ctx),
        "pf" => Ok(checks(name, vec![pf_check_i0(&i_series(ctx.order(50), IWhich::I0))])),
        "zz" => {
            let n = ctx.order(30);
            Ok(checks(name, vec![zinger_zagier_check(&ctx.mirror(n), n)]))
        }
        "generators" => {
            let n = ctx.order(30);
            let md = ctx.mirror(n);
            Ok(checks(name, vec![generator_relations_check(&md, &generator_values(&md, 4), n)]))
        }
        "serre" => {
            let n = ctx.order(30);
            Ok(checks(name, vec![serre_derivative_check(&theta_series(n), n)]))
        }
        "identification" => {
            let n = ctx.order(20);
            Ok(checks(name, vec![identification_check(&theta_series(n), &ctx.mirror(n), n)]))
        }
        "modgene" => {
            let n = ctx.order(20);
            let md = ctx.mirror(n);
            let gv = generator_values(&md, 4);
            Ok(checks(name, vec![generator_dictionary_check(&md, &gv, &ModularContext::new(n), n)]))
        }
        "qde" => qde(ctx),
        "edge" => edge(ctx),
        "oracle" => oracle(ctx),
        "quasimod" => quasimod(ctx),
        "hae" => hae(ctx),
        "e2" => e2(ctx),
        "dvv" => Ok(dvv()),
        "cache" => cache_round_trip(),
        other => Err(SuiteError::Other(format!("unknown suite {other}"))),
    };
    let mut rep = match result {
        Ok(r) => r,
        Err(SuiteError::Insufficient { needed, available }) => VerificationReport::insufficient(name, needed, available),
        Err(SuiteError::Other(msg)) => VerificationReport::error(name, msg),
    };
    rep.timing_ms = start.elapsed().as_millis() as u64;
    rep
}

/// Runs the named suites concurrently; results come back in the given order.
pub fn run_suites(ctx: &SuiteContext, names: &[&str]) -> Vec<VerificationReport> {
    names.par_iter().map(|n| run_suite(ctx, n)).collect()
}

pub fn run_all(ctx: &SuiteContext) -> Vec<VerificationReport> {
    run_suites(ctx, SUITES)
}

fn checks(name: &str, reports: Vec<CheckReport>) -> VerificationReport {
    VerificationReport::from_checks(name, reports)
}

fn poly_identity(label: &str, order: usize, got: &LPoly, want: &LPoly) -> IdentityOutcome {
    if got == want {
        IdentityOutcome::pass(label, order)
    } else {
        IdentityOutcome::fail(label, order, got.sub(want).to_string())
    }
}

fn closed_forms(ctx: &SuiteContext) -> SuiteResult {
    let rs = ctx.rs();
    let mut rep = CheckReport::new("rmatrix");
    rep.push(poly_identity("r_1 = -L^2/18", 1, rs.r(1), &LPoly::monomial(2, rat(-1, 18))));
    rep.push(poly_identity("r_2 = L^4/648", 2, rs.r(2), &LPoly::monomial(4, rat(1, 648))));
    let r3 = LPoly::from_terms([(6, int(2875)), (3, int(-3600)), (0, int(702))]).scale(&rat(1, 174960));
    rep.push(poly_identity("r_3 = (2875L^6 - 3600L^3 + 702)/174960", 3, rs.r(3), &r3));
    Ok(checks("rmatrix", vec![rep]).note("r", mirrorforge_core::rmatrix::dump(rs, ctx.cols()).r))
}

fn initial(ctx: &SuiteContext) -> SuiteResult {
    let rs = ctx.rs();
    let consts = initial_constants(rs.k_max);
    let mut rep = CheckReport::new("initial");
    let at0 = CycRational::from(rs.r(3).coeff(0));
    rep.push(compare_values("r_3(0) = 13/3240", &at0, &CycRational::from(rat(13, 3240))));
    let b4 = bernoulli_polynomial(4, &rat(1, 3)) / int(4);
    rep.push(compare_values("r_3(0) = B_4(1/3)/4", &at0, &CycRational::from(b4)));
    Ok(checks("initial", vec![rep, r_structure_check(rs, &consts)]))
}

fn q0(ctx: &SuiteContext) -> SuiteResult {
    let rs = ctx.rs();
    let mut rep = CheckReport::new("q0");
    rep.push(compare_values("r_1(1) = -1/18", &CycRational::from(rs.r(1).eval(&int(1))), &CycRational::from(rat(-1, 18))));
    rep.push(compare_values("r_2(1) = 1/648", &CycRational::from(rs.r(2).eval(&int(1))), &CycRational::from(rat(1, 648))));
    Ok(checks("q0", vec![rep, delta_tw_q0_check(rs, 8)]))
}

fn qde(ctx: &SuiteContext) -> SuiteResult {
    let n = ctx.order(25);
    let md = ctx.mirror(n);
    let gv = generator_values(&md, 2);
    let cols = ctx.cols();
    let z = ctx.config.z_order.saturating_sub(1);
    Ok(checks("qde", vec![qde_check(cols, &quantum_a_matrix(&md), &md, &gv, z, n)]))
}

fn edge(ctx: &SuiteContext) -> SuiteResult {
    let cols = ctx.cols();
    let frame = FrameData::new(int(1));
    let z = ctx.config.z_order.saturating_sub(1);
    let mut rep = CheckReport::new("edge");
    for a in 0..3 {
        for b in 0..3 {
            let label = format!("(z+w) divides N^{{{a}{b}}}");
            let bad = edge_numerator_on_antidiagonal(cols, &frame, a, b, z).into_iter().enumerate().find(|(_, p)| !p.is_zero());
            rep.push(match bad {
                None => IdentityOutcome::pass(label, z),
                Some((s, p)) => IdentityOutcome::fail(label, s, p.to_string()),
            });
        }
    }
    let degree = ctx.config.z_order.saturating_sub(2);
    rep.push(match edge_kernels(cols, &frame, degree) {
        Ok(_) => IdentityOutcome::pass("exact edge-kernel quotient", degree),
        Err(e) => IdentityOutcome::fail("exact edge-kernel quotient", degree, e.to_string()),
    });
    Ok(checks("edge", vec![rep]))
}

fn oracle(ctx: &SuiteContext) -> SuiteResult {
    let n = ctx.order(15);
    let rep = genus_zero_oracle(ctx.theory()?, ctx.qc(), n)?;
    Ok(checks("oracle", vec![rep]))
}

fn certify_one(ctx: &SuiteContext, insertions: &[usize], degree: i64, rep: &mut CheckReport) -> Result<serde_json::Value, SuiteError> {
    let p = ctx.fitted(1, insertions, degree)?;
    let cert = quasimodularity_certify(&p, ctx.qc(), ctx.modular(), ctx.config.guard)?;
    let label = format!("Omega_{{1,{}}} degree {degree} quasi-modular of weight {}", insertions.len(), cert.weight);
    rep.push(match cert.certified() {
        Some(_) => IdentityOutcome::pass(label, cert.plain.equations),
        None => {
            let at = cert.plain.first_inconsistent_order.unwrap_or(0);
            IdentityOutcome::fail(label, at, "not in the quasi-modular span".into())
        }
    });
    Ok(serde_json::json!({ "generator": p, "certification": cert }))
}

fn quasimod(ctx: &SuiteContext) -> SuiteResult {
    let mut rep = CheckReport::new("quasimod");
    let one = certify_one(ctx, &[1], 1, &mut rep)?;
    let two = certify_one(ctx, &[1, 1], 2, &mut rep)?;
    Ok(checks("quasimod", vec![rep]).note("omega_1_1", one).note("omega_1_2", two))
}

fn hae_identity(label: &str, r: &mirrorforge_core::anomaly::HAEReport) -> IdentityOutcome {
    match r.residual.truncate(r.order).first_nonzero() {
        None => IdentityOutcome::pass(label, r.order),
        Some(k) => IdentityOutcome::fail(label, k, r.residual.coeff(k).to_exact_string()),
    }
}

fn hae(ctx: &SuiteContext) -> SuiteResult {
    let flags = ctx.conventions()?;
    let theory = ctx.theory()?;
    let (o1, o2) = (ctx.order(15), ctx.order(12));
    let guard = ctx.config.guard;
    let r11 = hae_check(1, 1, &KappaPsiMonomial::new(vec![0], vec![]), o1, guard, flags, theory, ctx.qc())?;
    let r12 = hae_check(1, 2, &KappaPsiMonomial::new(vec![0, 0], vec![]), o2, guard, flags, theory, ctx.qc())?;
    let mut rep = CheckReport::new("hae");
    rep.push(hae_identity("HAE residual at (1,1)", &r11));
    rep.push(hae_identity("HAE residual at (1,2)", &r12));
    Ok(checks("hae", vec![rep]).note("convention_flags", flags).note("reports", vec![r11, r12]))
}

fn e2(ctx: &SuiteContext) -> SuiteResult {
    let p = ctx.fitted(1, &[1], 1)?;
    let cert = quasimodularity_certify(&p, ctx.qc(), ctx.modular(), ctx.config.guard)?;
    let Some(form) = cert.certified() else {
        let mut rep = CheckReport::new("e2");
        rep.push(IdentityOutcome::fail("Omega_{1,1} certifies", 0, "not in the quasi-modular span".into()));
        return Ok(checks("e2", vec![rep]));
    };
    let n = ctx.order(15);
    Ok(checks("e2", vec![e2_two_route_check(&p, form, ctx.qc(), ctx.modular(), n)]).note("certified", form.to_exact_map()))
}

/// All stable keys with `3g−3+n ≤ max_dim` whose ψ-degree matches the dimension.
pub fn stable_keys(max_dim: i64) -> Vec<TauKey> {
    fn multisets(n: usize, sum: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            if sum == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for a in (0..=sum.min(max)).rev() {
            cur.push(a);
            multisets(n - 1, sum - a, a, cur, out);
            cur.pop();
        }
    }
    let mut keys = Vec::new();
    for g in 0..=((max_dim + 3) / 3) as u32 {
        for n in 0..=(max_dim + 3) as usize {
            let dim = 3 * g as i64 - 3 + n as i64;
            if dim < 0 || dim > max_dim || 2 * g as i64 - 2 + n as i64 <= 0 {
                continue;
            }
            let mut out = Vec::new();
            multisets(n, dim as u32, dim as u32, &mut Vec::new(), &mut out);
            keys.extend(out.into_iter().map(|a| TauKey::new(g, a)));
        }
    }
    keys
}

fn dvv() -> VerificationReport {
    let keys = stable_keys(DVV_MAX_DIM);
    let outcomes: Vec<IdentityOutcome> = keys
        .par_iter()
        .map(|k| {
            let label = format!("<{:?}>_{}", k.a, k.g);
            let (raw, reduced) = (psi_integral_uncached(k), psi_integral_reduced(k));
            if raw == reduced {
                IdentityOutcome::pass(label, k.dimension() as usize)
            } else {
                IdentityOutcome::fail(label, k.dimension() as usize, mirrorforge_core::series::fmt_rational(&(raw - reduced)))
            }
        })
        .collect();
    let mut rep = CheckReport::new("dvv");
    outcomes.into_iter().for_each(|o| rep.push(o));
    checks("dvv", vec![rep]).note("keys", keys.len())
}

fn cache_round_trip() -> SuiteResult {
    let engine = IntersectionEngine::new();
    for k in stable_keys(DVV_MAX_DIM) {
        engine.psi_integral(&k).map_err(|e| SuiteError::Other(e.to_string()))?;
    }
    let path = std::env::temp_dir().join(format!("mirrorforge-roundtrip-{}-{:?}.json", std::process::id(), std::thread::current().id()));
    let mut store = CacheStore::new(&path);
    store.absorb(&engine);
    let io = |e: mirrorforge_core::intersections::IntersectionError| SuiteError::Other(e.to_string());
    store.save().map_err(io)?;
    let (back, status) = CacheStore::load(&path).map_err(io)?;
    let _ = std::fs::remove_file(&path);
    let mut rep = CheckReport::new("cache");
    let label = "cache save/load is lossless";
    rep.push(if back.entries == store.entries && status == LoadStatus::Loaded(store.entries.len()) {
        IdentityOutcome::pass(label, store.entries.len())
    } else {
        IdentityOutcome::fail(label, back.entries.len(), format!("{} entries written", store.entries.len()))
    });
    let fresh = IntersectionEngine::new();
    fresh.preload(&back.entries);
    let rederived = back.entries.iter().all(|(k, v)| psi_integral_uncached(k) == *v && fresh.psi_integral(k).ok().as_ref() == Some(v));
    rep.push(if rederived {
        IdentityOutcome::pass("cached values rederive", back.entries.len())
    } else {
        IdentityOutcome::fail("cached values rederive", 0, "mismatch".into())
    });
    Ok(checks("cache", vec![rep]).note("entries", store.entries.len()))
}

/// Suite names grouped by acceptance criterion.
pub fn criteria() -> BTreeMap<u32, (&'static str, Vec<&'static str>)> {
    BTreeMap::from([
        (1, ("R-matrix closed forms", vec!["rmatrix"])),
        (2, ("initial-condition consistency", vec!["initial"])),
        (3, ("q=0 cross-check", vec!["q0"])),
        (4, ("Picard-Fuchs and Zinger-Zagier", vec!["pf", "zz"])),
        (5, ("generator relations", vec!["generators"])),
        (6, ("modular suite", vec!["serre", "identification", "modgene"])),
        (7, ("QDE and edge kernel", vec!["qde", "edge"])),
        (8, ("genus-zero graph-sum oracle", vec!["oracle"])),
        (9, ("quasi-modularity", vec!["quasimod"])),
        (10, ("holomorphic anomaly equation", vec!["hae"])),
        (11, ("E2-derivative two routes", vec!["e2"])),
        (12, ("intersection-number infrastructure", vec!["dvv", "cache"])),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_key_enumeration() {
        let keys = stable_keys(1);
        let want = [TauKey::new(0, vec![0, 0, 0]), TauKey::new(0, vec![1, 0, 0, 0]), TauKey::new(1, vec![1])];
        assert_eq!(keys.len(), want.len());
        for k in want {
            assert!(keys.contains(&k), "{k:?}");
        }
        assert!(stable_keys(DVV_MAX_DIM).iter().all(|k| k.is_stable() && k.degree() == k.dimension()));
    }

    #[test]
    fn light_suites_pass() {
        let ctx = SuiteContext::new(RunConfig::default(), None);
        for s in ["rmatrix", "initial", "q0", "pf", "serre"] {
            let r = run_suite(&ctx, s);
            assert!(r.pass, "{s}: {:?}", r.first_failure);
        }
        assert!(run_suite(&ctx, "nope").first_failure.is_some());
    }
}
