//! Verb implementations; each returns a report or a usage error.

use std::time::Instant;

use mirrorforge_core::anomaly::{
    e2_two_route_check, fit_finite_generation, hae_check_insertions, quasimodularity_certify, resolve_conventions, AnomalyError,
};
use mirrorforge_core::check::{CheckReport, IdentityOutcome};
use mirrorforge_core::graph_sum::{correlator, CorrelatorRequest, CorrelatorResult, GraphSumError, QContext, Theory};
use mirrorforge_core::intersections::{kappa_to_psi, CacheStore, IntersectionEngine, KappaPsiMonomial, LoadStatus, CACHE_SCHEMA};
use mirrorforge_core::mirror::{generator_values, MirrorData};
use mirrorforge_core::modular::{eisenstein, theta_series, ModularContext};
use mirrorforge_core::rmatrix::{build_r_columns, dump, solve_r_recursion};
use mirrorforge_core::series::{fmt_rational, int, PowerSeries};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::{Report, VerificationReport};
use crate::suites::{self, SuiteContext};
use crate::{CacheAction, CorrelatorArgs, CliError, Verb};

pub fn run(verb: &Verb, config: &RunConfig) -> Result<Report, CliError> {
    match verb {
        Verb::Series { name, order } => series(name, order.unwrap_or(config.q_order), config),
        Verb::Verify { suite, order } => verify(suite, *order, config),
        Verb::Rmatrix { k } => rmatrix(k.unwrap_or(config.z_order), config),
        Verb::Modular { order } => modular(order.unwrap_or(config.q_order), config),
        Verb::Intersect { g, psi, kappa } => intersect(*g, psi, kappa, config),
        Verb::Correlator(args) => correlator_verb(args, config),
        Verb::Fit(args) => fit_verb(args, config, false),
        Verb::Certify(args) => fit_verb(args, config, true),
        Verb::Hae(args) => hae_verb(args, config),
        Verb::Cache { action } => cache(*action, config),
    }
}

fn series_data(name: &str, s: &PowerSeries) -> Value {
    json!({ "name": name, "var": s.var().to_string(), "order": s.order(), "coefficients": s.to_strings() })
}

fn series(name: &str, order: usize, config: &RunConfig) -> Result<Report, CliError> {
    let md = MirrorData::new(order);
    let s = match name {
        "i0" => md.i0.clone(),
        "i1" => md.i1.clone(),
        "i2" => md.i2.clone(),
        "i3" => md.i3.clone(),
        "l" => md.l.clone(),
        "l-inv" => md.l_inv(),
        "mirror-q" => md.mirror_q.clone(),
        "inverse-q" => md.inverse_q.clone(),
        _ => {
            let bad = || CliError::Invalid(format!("unknown series {name:?}"));
            let digits: Vec<usize> = name.get(1..).filter(|d| !d.is_empty()).ok_or_else(bad)?.chars().map(|c| c.to_digit(10).map(|d| d as usize)).collect::<Option<_>>().ok_or_else(bad)?;
            match (name.as_bytes()[0], digits.as_slice()) {
                (b'x', [k @ 1..=2]) => generator_values(&md, 4).x(*k).clone(),
                (b'y', [k @ 1..=4]) => generator_values(&md, 4).y(*k).clone(),
                (b'i', [m, n]) if m <= n && *n <= 3 => md.ladder_entry(*m, *n).clone(),
                _ => return Err(bad()),
            }
        }
    };
    Ok(Report::data("series", config, true, series_data(name, &s)))
}

fn verify(suite: &str, order: Option<usize>, config: &RunConfig) -> Result<Report, CliError> {
    let ctx = SuiteContext::new(config.clone(), order);
    let reports = if suite == "all" {
        suites::run_all(&ctx)
    } else if suites::is_suite(suite) {
        vec![suites::run_suite(&ctx, suite)]
    } else {
        return Err(CliError::Suite(suite.to_string()));
    };
    Ok(Report::suites("verify", config, reports))
}

fn rmatrix(k: usize, config: &RunConfig) -> Result<Report, CliError> {
    let invalid = |e: mirrorforge_core::rmatrix::RMatrixError| CliError::Invalid(e.to_string());
    let rs = solve_r_recursion(k).map_err(invalid)?;
    let cols = build_r_columns(&rs, k).map_err(invalid)?;
    Ok(Report::data("rmatrix", config, true, dump(&rs, &cols)))
}

fn modular(order: usize, config: &RunConfig) -> Result<Report, CliError> {
    let ts = theta_series(order);
    let data = json!({
        "order": order,
        "a": ts.a.to_strings(),
        "b": ts.b.to_strings(),
        "e2": eisenstein(2, order).to_strings(),
        "e4": eisenstein(4, order).to_strings(),
        "e6": eisenstein(6, order).to_strings(),
    });
    Ok(Report::data("modular", config, true, data))
}

fn load_cache(config: &RunConfig) -> Result<(CacheStore, LoadStatus), CliError> {
    let (store, status) = CacheStore::load(&config.cache_path).map_err(|e| CliError::Invalid(e.to_string()))?;
    IntersectionEngine::global().preload(&store.entries);
    Ok((store, status))
}

fn save_cache(store: &mut CacheStore) -> Result<(), CliError> {
    store.absorb(IntersectionEngine::global());
    if store.dirty {
        store.save().map_err(|e| CliError::Invalid(e.to_string()))?;
    }
    Ok(())
}

fn status_value(status: &LoadStatus) -> Value {
    match status {
        LoadStatus::Loaded(n) => json!({ "loaded": n }),
        LoadStatus::Missing => json!("missing"),
    }
}

fn intersect(g: u32, psi: &[u32], kappa: &[u32], config: &RunConfig) -> Result<Report, CliError> {
    let (mut store, status) = load_cache(config)?;
    let m = KappaPsiMonomial::new(psi.to_vec(), kappa.to_vec());
    let value = kappa_to_psi(&m, g).map_err(|e| CliError::Invalid(e.to_string()))?;
    save_cache(&mut store)?;
    let data = json!({
        "g": g,
        "psi": m.psi,
        "kappa": m.kappa,
        "value": fmt_rational(&value),
        "cache": { "path": config.cache_path, "status": status_value(&status), "entries": store.entries.len() },
    });
    Ok(Report::data("intersect", config, true, data))
}

fn parse_insertion(s: &str) -> Result<usize, CliError> {
    match s.trim() {
        "1" | "0" => Ok(0),
        "H" | "h" => Ok(1),
        "H2" | "H^2" | "h2" | "2" => Ok(2),
        other => Err(CliError::Invalid(format!("insertion {other:?} is not 1, H or H2"))),
    }
}

fn parse_list(s: &str) -> Result<Vec<u32>, CliError> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| CliError::Invalid(format!("{x:?} is not an exponent")))).collect()
}

/// `psi:a1,..`, `kappa:k1,..` or both joined by `+`.
pub fn parse_pairing(text: Option<&str>, n: usize) -> Result<KappaPsiMonomial, CliError> {
    let (mut psi, mut kappa) = (None, Vec::new());
    for part in text.unwrap_or("").split('+').filter(|p| !p.is_empty()) {
        match part.split_once(':') {
            Some(("psi", list)) => psi = Some(parse_list(list)?),
            Some(("kappa", list)) => kappa = parse_list(list)?,
            _ => return Err(CliError::Invalid(format!("pairing {part:?} is not psi:.. or kappa:.."))),
        }
    }
    Ok(KappaPsiMonomial::new(psi.unwrap_or_else(|| vec![0; n]), kappa))
}

struct Prepared {
    req: CorrelatorRequest,
    theory: Theory,
    qc: QContext,
}

fn usage(e: GraphSumError) -> CliError {
    match e {
        GraphSumError::XiPart { .. } | GraphSumError::RMatrix(_) => CliError::Computation(e.to_string()),
        e => CliError::Invalid(e.to_string()),
    }
}

fn prepare(args: &CorrelatorArgs, config: &RunConfig) -> Result<Prepared, CliError> {
    config.check_genus(args.g)?;
    let mut insertions = args.ins.iter().map(|s| parse_insertion(s)).collect::<Result<Vec<_>, _>>()?;
    match args.n {
        Some(n) if insertions.is_empty() => insertions = vec![1; n],
        Some(n) if n != insertions.len() => {
            return Err(CliError::Invalid(format!("--n {n} but {} insertions", insertions.len())));
        }
        _ => {}
    }
    let pairing = parse_pairing(args.pair.as_deref(), insertions.len())?;
    let order = args.order.unwrap_or(config.q_order);
    let req = CorrelatorRequest::new(args.g, insertions, pairing, order);
    req.validate().map_err(usage)?;
    if let Some(d) = args.deg {
        if d != req.degree() {
            return Err(CliError::Invalid(format!("--deg {d} but the pairing class leaves degree {}", req.degree())));
        }
    }
    config.check_z_order(req.dim())?;
    let theory = Theory::new(int(1), req.dim().max(1) as usize).map_err(usage)?;
    Ok(Prepared { req, theory, qc: QContext::new(order) })
}

fn evaluate(p: &Prepared) -> Result<CorrelatorResult, CliError> {
    correlator(&p.req, &p.theory, &p.qc).map_err(usage)
}

fn correlator_verb(args: &CorrelatorArgs, config: &RunConfig) -> Result<Report, CliError> {
    let p = prepare(args, config)?;
    let res = evaluate(&p)?;
    let mut data = serde_json::to_value(&res).expect("correlator serializes");
    if !args.explain {
        if let Some(s) = data.get_mut("symbolic").and_then(Value::as_object_mut) {
            s.remove("contributions");
        }
    }
    Ok(Report::data("correlator", config, true, data))
}

fn anomaly_report(suite: &str, e: AnomalyError) -> Result<VerificationReport, CliError> {
    match e {
        AnomalyError::InsufficientOrder { needed, available } => Ok(VerificationReport::insufficient(suite, needed, available)),
        AnomalyError::InconsistentFit { degree, order } => {
            let mut rep = CheckReport::new(suite);
            rep.push(IdentityOutcome::fail(format!("degree-{degree} generator fit"), order, "inconsistent".into()));
            Ok(VerificationReport::from_checks(suite, vec![rep]))
        }
        AnomalyError::GenusZero => Err(CliError::Invalid(e.to_string())),
        e => Ok(VerificationReport::error(suite, e.to_string())),
    }
}

/// Single-suite report for a verb, stamped with the elapsed time.
fn timed(verb: &str, config: &RunConfig, start: Instant, mut rep: VerificationReport) -> Report {
    rep.timing_ms = start.elapsed().as_millis() as u64;
    Report::suites(verb, config, vec![rep])
}

fn fit_verb(args: &CorrelatorArgs, config: &RunConfig, certify: bool) -> Result<Report, CliError> {
    let start = Instant::now();
    let verb = if certify { "certify" } else { "fit" };
    let p = prepare(args, config)?;
    let res = evaluate(&p)?;
    let fitted = fit_finite_generation(&res.series, p.req.g, &p.req.insertions, p.req.degree(), config.guard, &p.qc);
    let poly = match fitted {
        Ok(poly) => poly,
        Err(e) => return Ok(timed(verb, config, start, anomaly_report(verb, e)?)),
    };
    let mut rep = CheckReport::new(verb);
    let label = "fit reproduces the graph-sum polynomial";
    rep.push(if poly.terms == res.symbolic.poly {
        IdentityOutcome::pass(label, p.qc.order())
    } else {
        IdentityOutcome::fail(label, p.qc.order(), "coefficients differ".into())
    });
    if !certify {
        let out = VerificationReport::from_checks(verb, vec![rep]).note("generator", &poly);
        return Ok(timed(verb, config, start, out));
    }
    let ctx = ModularContext::new(p.qc.order());
    let cert = match quasimodularity_certify(&poly, &p.qc, &ctx, config.guard) {
        Ok(c) => c,
        Err(e) => return Ok(timed(verb, config, start, anomaly_report(verb, e)?)),
    };
    let label = format!("quasi-modular of weight {}", cert.weight);
    match cert.certified() {
        Some(form) => {
            rep.push(IdentityOutcome::pass(label, cert.plain.equations));
            rep.extend(e2_two_route_check(&poly, form, &p.qc, &ctx, p.qc.order()));
        }
        None => rep.push(IdentityOutcome::fail(label, cert.plain.first_inconsistent_order.unwrap_or(0), "not in the span".into())),
    }
    let out = VerificationReport::from_checks(verb, vec![rep]).note("generator", &poly).note("certification", &cert);
    Ok(timed(verb, config, start, out))
}

fn hae_verb(args: &CorrelatorArgs, config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let p = prepare(args, config)?;
    if p.req.g == 0 {
        return Err(CliError::Invalid(AnomalyError::GenusZero.to_string()));
    }
    let order = p.qc.order();
    let run = || -> Result<_, AnomalyError> {
        let flags = resolve_conventions(order, config.guard, &p.theory, &p.qc)?;
        hae_check_insertions(p.req.g, &p.req.insertions, &p.req.pairing, order, config.guard, &flags, &p.theory, &p.qc)
    };
    let out = match run() {
        Ok(r) => {
            let mut rep = CheckReport::new("hae");
            let label = format!("HAE residual at ({},{})", r.g, r.n);
            rep.push(match r.residual.truncate(order).first_nonzero() {
                None => IdentityOutcome::pass(label, order),
                Some(k) => IdentityOutcome::fail(label, k, r.residual.coeff(k).to_exact_string()),
            });
            VerificationReport::from_checks("hae", vec![rep]).note("convention_flags", &r.convention_flags).note("report", &r)
        }
        Err(e) => anomaly_report("hae", e)?,
    };
    Ok(timed("hae", config, start, out))
}

fn cache(action: CacheAction, config: &RunConfig) -> Result<Report, CliError> {
    let path = json!(config.cache_path);
    match action {
        CacheAction::Stats => {
            let (store, status) = load_cache(config)?;
            let data = json!({ "path": path, "schema": CACHE_SCHEMA, "status": status_value(&status), "entries": store.entries.len() });
            Ok(Report::data("cache", config, true, data))
        }
        CacheAction::Warm { dim } => {
            let (mut store, _) = load_cache(config)?;
            let before = store.entries.len();
            for k in suites::stable_keys(dim) {
                IntersectionEngine::global().psi_integral(&k).map_err(|e| CliError::Invalid(e.to_string()))?;
            }
            save_cache(&mut store)?;
            let data = json!({ "path": path, "schema": CACHE_SCHEMA, "entries": store.entries.len(), "added": store.entries.len() - before });
            Ok(Report::data("cache", config, true, data))
        }
        CacheAction::Clear => {
            let removed = match std::fs::remove_file(&config.cache_path) {
                Ok(()) => true,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => false,
                Err(e) => return Err(CliError::Invalid(e.to_string())),
            };
            Ok(Report::data("cache", config, true, json!({ "path": path, "removed": removed })))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_parsing() {
        assert_eq!(parse_pairing(None, 2).unwrap(), KappaPsiMonomial::new(vec![0, 0], vec![]));
        assert_eq!(parse_pairing(Some("kappa:1"), 1).unwrap(), KappaPsiMonomial::new(vec![0], vec![1]));
        assert_eq!(parse_pairing(Some("psi:1,0+kappa:2,1"), 2).unwrap(), KappaPsiMonomial::new(vec![1, 0], vec![1, 2]));
        assert!(parse_pairing(Some("lambda:1"), 1).is_err());
        assert!(parse_pairing(Some("psi:x"), 1).is_err());
    }

    #[test]
    fn insertion_parsing() {
        assert_eq!(["1", "H", "H2", "H^2"].map(|s| parse_insertion(s).unwrap()), [0, 1, 2, 2]);
        assert!(parse_insertion("H3").is_err());
    }

    #[test]
    fn l_series_dump() {
        let r = series("l", 2, &RunConfig::default()).unwrap();
        assert_eq!(r.data["coefficients"], json!(["1", "9", "162"]));
    }
}
