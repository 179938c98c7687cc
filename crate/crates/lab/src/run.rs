//! discretize → constants → depths → seed → integrate → analyze

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use kirchhoff_core::dynamics::{
    bounded_budget, check_vacuum, integrate, monitor_invariance, vacuum_radius, InvarianceCase, Trace, TraceRow,
};
use kirchhoff_core::seeds::Certificate;
use kirchhoff_core::wells::{estimate_depths, Constants, DepthEstimate, WellDepths};
use kirchhoff_core::{
    evaluate_i, evaluate_j, seed, verify_certificate, Derived, Discretization, Field, Growth, Params, SeedRecipe,
    SeedResult,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::{Analysis, RunConfig, SeedSource};
use crate::error::{LabError, LabResult};
use crate::output::{self, CONSTANTS_SCHEMA, SUMMARY_SCHEMA};

/// Discretization and the constants computed on it.
#[derive(Debug)]
pub struct Workspace {
    pub disc: Discretization<f64>,
    pub constants: Constants<f64>,
}

impl Workspace {
    pub fn build(cfg: &RunConfig) -> LabResult<Self> {
        let disc = Discretization::new(cfg.domain.clone())?;
        let constants = Constants::for_exponent(&disc, cfg.p, cfg.constants.tol)?;
        Ok(Workspace { disc, constants })
    }
}

/// `a` and `λ` may be given relative to Λ̂ and bλ̂₁.
pub fn resolve_params(cfg: &RunConfig, constants: &Constants<f64>) -> LabResult<Params<f64>> {
    let a = cfg.a.resolve(1.0 / constants.lambda_big());
    let lambda = cfg.lambda.resolve(cfg.b * constants.lambda1());
    Ok(Params::new(a, cfg.b, lambda, cfg.p)?)
}

/// Refuses analyses whose regime the parameters are outside of.
pub fn check_regime(cfg: &RunConfig, params: &Params<f64>, constants: &Constants<f64>) -> LabResult<()> {
    let growth = params.growth();
    for a in &cfg.analyses {
        match a {
            Analysis::Invariance if growth == Growth::Sublinear => {
                return Err(LabError::Hypothesis("invariance: no invariant-set statement for 1 < p < 3".into()));
            }
            Analysis::Blowup if growth == Growth::Sublinear => {
                return Err(LabError::Hypothesis("blowup: solutions are bounded for 1 < p < 3".into()));
            }
            Analysis::Blowup if growth == Growth::Critical && params.a * constants.lambda_big() >= 1.0 => {
                return Err(LabError::Hypothesis(format!(
                    "blowup: p = 3 requires 0 < a < 1/Λ, got aΛ = {}",
                    params.a * constants.lambda_big()
                )));
            }
            Analysis::Vacuum => {
                vacuum_radius(params, constants).map_err(|e| LabError::Hypothesis(format!("vacuum: {e}")))?;
            }
            _ => {}
        }
    }
    if let (Some(case), true) = (cfg.invariance_case, cfg.wants(Analysis::Invariance)) {
        let ok = match case {
            InvarianceCase::A1 | InvarianceCase::A2 | InvarianceCase::B => growth == Growth::Critical,
            InvarianceCase::C1 | InvarianceCase::C2 => growth == Growth::Superlinear,
        };
        if !ok {
            return Err(LabError::Hypothesis(format!("invariance: case {} does not apply at p = {}", case.name(), params.p)));
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct DataFile {
    u0: Vec<f64>,
    u1: Vec<f64>,
}

/// Initial data with whatever certificate came with them.
pub struct Seeded {
    pub u0: Field<f64>,
    pub u1: Field<f64>,
    pub result: Option<SeedResult<f64>>,
    pub source: String,
}

pub fn recipe_for(cfg: &RunConfig, params: &Params<f64>) -> Option<SeedRecipe<f64>> {
    match &cfg.seed {
        SeedSource::Recipe { kind, margin, perturbation, scale } => {
            let mut r = SeedRecipe::new(*kind, *params).with_seed(cfg.rng_seed);
            if let Some(m) = margin {
                r.margin = *m;
            }
            if let Some(p) = perturbation {
                r.perturbation = *p;
            }
            if let Some((k, m)) = scale {
                r = r.with_scale(*k, *m);
            }
            Some(r)
        }
        SeedSource::File(_) => None,
    }
}

pub fn seed_stage(cfg: &RunConfig, ws: &Workspace, params: &Params<f64>, depths: &WellDepths<f64>) -> LabResult<Seeded> {
    match &cfg.seed {
        SeedSource::Recipe { kind, .. } => {
            let r = recipe_for(cfg, params).expect("recipe source");
            let res = seed(&r, &ws.disc, &ws.constants, depths)?;
            Ok(Seeded { u0: res.u0.clone(), u1: res.u1.clone(), result: Some(res), source: kind.name().to_string() })
        }
        SeedSource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Config(format!("seed file {}: {e}", path.display())))?;
            let d: DataFile = serde_json::from_str(&text)
                .map_err(|e| LabError::Config(format!("seed file {}: {e}", path.display())))?;
            Ok(Seeded {
                u0: ws.disc.field(d.u0)?,
                u1: ws.disc.field(d.u1)?,
                result: None,
                source: format!("file:{}", path.display()),
            })
        }
    }
}

/// The `t = 0` row, computed before integrating.
pub fn initial_row(params: &Params<f64>, disc: &Discretization<f64>, u0: &Field<f64>, u1: &Field<f64>) -> LabResult<TraceRow<f64>> {
    let n = disc.norms(u0, params.p)?;
    let ut = disc.norms(u1, params.p)?;
    let j = evaluate_j(params, &n);
    Ok(TraceRow {
        t: 0.0,
        ut_l2sq: ut.m2,
        grad_l2sq: n.g2,
        m: n.m2,
        lp1: n.lp1,
        j,
        i: evaluate_i(params, &n),
        e: 0.5 * ut.m2 + j,
        mprime: 2.0 * disc.inner(u0.values(), u1.values()),
    })
}

/// Data-dependent hypotheses, still checked before integrating.
pub fn check_data(
    cfg: &RunConfig,
    params: &Params<f64>,
    ws: &Workspace,
    depths: &WellDepths<f64>,
    row: &TraceRow<f64>,
) -> LabResult<Option<InvarianceCase>> {
    if cfg.wants(Analysis::Vacuum) {
        if !(row.e <= 0.0) {
            return Err(LabError::Hypothesis(format!("vacuum: requires E(0) ≤ 0, got {}", row.e)));
        }
        if !(row.grad_l2sq > 0.0) {
            return Err(LabError::Hypothesis("vacuum: requires ‖∇u₀‖₂ > 0".into()));
        }
    }
    if !cfg.wants(Analysis::Invariance) {
        return Ok(None);
    }
    let eps = cfg.nehari_eps;
    let wrap = |e: kirchhoff_core::Error| LabError::Hypothesis(format!("invariance: {e}"));
    let case = match cfg.invariance_case {
        Some(c) => {
            c.check_hypotheses(params, &ws.constants, depths, row, eps).map_err(wrap)?;
            c
        }
        None => InvarianceCase::infer(params, &ws.constants, depths, row, eps).map_err(wrap)?,
    };
    Ok(Some(case))
}

fn derived(d: &Derived<f64>) -> Value {
    match d {
        Derived::Value(v) => json!(v),
        Derived::Absent(_) => Value::Null,
    }
}

fn depth_estimate(d: &Derived<DepthEstimate<f64>>) -> Value {
    match d {
        Derived::Value(e) => json!({
            "value": e.value,
            "sample_min": e.sample_min,
            "lower": e.lower,
            "upper": e.upper,
            "in_bracket": e.in_bracket,
        }),
        Derived::Absent(r) => json!({ "absent": r }),
    }
}

pub fn depths_json(d: &WellDepths<f64>) -> Value {
    json!({
        "d3": depth_estimate(&d.d3),
        "dp": depth_estimate(&d.dp),
        "d3_plus": derived(&d.d3_plus),
        "d3_minus": derived(&d.d3_minus),
        "delta_estimate": derived(&d.delta_estimate),
        "n_ray_samples": d.n_ray_samples,
    })
}

pub fn constants_json(ws: &Workspace, params: &Params<f64>, depths: &WellDepths<f64>) -> Value {
    let c = &ws.constants;
    let s_q: Vec<Value> = c
        .sobolev
        .entries
        .iter()
        .map(|e| json!({ "q": e.q, "S_q": e.s_q, "iterations": e.iterations }))
        .collect();
    json!({
        "schema": CONSTANTS_SCHEMA,
        "domain": { "extents": ws.disc.spec().extents, "resolution": ws.disc.spec().resolution },
        "nodes": ws.disc.n_nodes(),
        "lambda1": c.lambda1(),
        "eigen_residual": c.eigen.residual,
        "Lambda": c.lambda_big(),
        "inv_Lambda": 1.0 / c.lambda_big(),
        "S_q": s_q,
        "params": params_json(params),
        "depths": depths_json(depths),
    })
}

fn params_json(p: &Params<f64>) -> Value {
    json!({ "a": p.a, "b": p.b, "lambda": p.lambda, "p": p.p })
}

pub fn certificate_json(
    res: &SeedResult<f64>,
    params: &Params<f64>,
    ws: &Workspace,
    depths: &WellDepths<f64>,
) -> Value {
    let c: &Certificate<f64> = &res.certificate;
    let checks: Vec<Value> = c
        .checks
        .iter()
        .map(|k| {
            json!({
                "name": k.name,
                "lhs": k.lhs,
                "relation": k.relation.symbol(),
                "rhs": k.rhs,
                "tol": k.tol,
                "holds": k.holds,
            })
        })
        .collect();
    let extras: serde_json::Map<String, Value> = c.extras.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    json!({
        "recipe": res.kind.name(),
        "k": res.k,
        "m": res.m,
        "E0": c.e0,
        "E0_formula": c.e0_formula,
        "J_u0": c.j_u0,
        "I_u0": c.i_u0,
        "M_u0": c.m_u0,
        "grad_norm_u0": c.grad_norm_u0,
        "overlap": c.overlap,
        "checks": checks,
        "extras": extras,
        "all_hold": c.all_hold(),
        "verified": verify_certificate(res, params, &ws.disc, &ws.constants, depths),
    })
}

/// Everything up to the initial data.
pub struct Prepared {
    pub params: Params<f64>,
    pub depths: WellDepths<f64>,
    pub seeded: Seeded,
}

pub fn prepare(cfg: &RunConfig, ws: &Workspace) -> LabResult<Prepared> {
    let params = resolve_params(cfg, &ws.constants)?;
    check_regime(cfg, &params, &ws.constants)?;
    let depths = estimate_depths(&params, &ws.disc, &ws.constants, cfg.constants.n_rays, cfg.constants.depth_seed)?;
    let seeded = seed_stage(cfg, ws, &params, &depths)?;
    Ok(Prepared { params, depths, seeded })
}

/// Result of one run, before anything is written.
pub struct RunArtifacts {
    pub summary: Value,
    pub trace: Trace<f64>,
    pub constants: Value,
}

pub fn execute(cfg: &RunConfig, ws: &Workspace) -> LabResult<RunArtifacts> {
    let start = Instant::now();
    let Prepared { params, depths, seeded } = prepare(cfg, ws)?;
    let row0 = initial_row(&params, &ws.disc, &seeded.u0, &seeded.u1)?;
    let case = check_data(cfg, &params, ws, &depths, &row0)?;

    let (trace, report) = integrate(&params, &ws.disc, &seeded.u0, &seeded.u1, &cfg.sim)?;

    let invariance = match case {
        Some(c) => {
            let v = monitor_invariance(&params, &trace, &depths, &ws.constants, c, cfg.nehari_eps)?;
            let first: Vec<Value> = v
                .iter()
                .take(10)
                .map(|x| json!({ "row": x.row, "t": x.t, "kind": format!("{:?}", x.kind), "J": x.j }))
                .collect();
            json!({ "case": c.name(), "violations": v.len(), "first": first })
        }
        None => Value::Null,
    };
    let vacuum = if cfg.wants(Analysis::Vacuum) {
        let v = check_vacuum(&trace, &params, &ws.constants)?;
        json!({
            "regime": v.regime.name(),
            "radius": v.radius,
            "threshold": v.threshold,
            "min_grad_norm": v.min_grad_norm,
            "violations": v.violations.len(),
            "ok": v.ok,
        })
    } else {
        Value::Null
    };
    let blowup = if cfg.wants(Analysis::Blowup) {
        json!({
            "alpha": report.alpha_used,
            "t0": report.t0,
            "concavity_violations": report.concavity_violations,
            "samples": report.samples,
            "threshold_hit": report.threshold_hit.name(),
        })
    } else {
        Value::Null
    };
    let e0 = row0.e;
    let budget = match bounded_budget(&params, &ws.constants, &depths, e0) {
        Ok(b) => json!({ "kind": b.kind.name(), "value": b.value }),
        Err(_) => Value::Null,
    };
    let certificate = seeded.result.as_ref().map(|r| certificate_json(r, &params, ws, &depths));
    let analyses: Vec<&str> = cfg.analyses.iter().map(|a| a.name()).collect();
    let config = serde_json::to_value(&cfg.raw).map_err(|e| LabError::Runtime(e.to_string()))?;
    let vacuum_ok = vacuum.get("ok").cloned().unwrap_or(Value::Null);

    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "config": config,
        "params": params_json(&params),
        "constants": {
            "lambda1": ws.constants.lambda1(),
            "Lambda": ws.constants.lambda_big(),
            "S_p1": ws.constants.sp1(params.p),
        },
        "depths": depths_json(&depths),
        "seed": { "source": seeded.source, "certificate": certificate },
        "outcome": report.outcome.name(),
        "halt": trace.halt.name(),
        "final_time": trace.final_time(),
        "steps": trace.steps,
        "dt_halvings": trace.dt_halvings,
        "T1_estimate": report.t1_estimate,
        "blowup": blowup,
        "invariance": invariance,
        "vacuum": vacuum,
        "vacuum_ok": vacuum_ok,
        "budget": budget,
        "energy": {
            "E0": e0,
            "relative_drift": trace.relative_energy_drift(),
            "absolute_drift": trace.absolute_energy_drift(),
        },
        "sup_ut_plus_grad": trace.sup_norm_sum(),
        "analyses": analyses,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    debug_assert!(output::validate_summary(&summary).is_ok());
    let constants = constants_json(ws, &params, &depths);
    Ok(RunArtifacts { summary, trace, constants })
}

pub fn write_artifacts(dir: &Path, art: &RunArtifacts) -> LabResult<()> {
    std::fs::create_dir_all(dir)?;
    output::write_trace(&dir.join("trace.csv"), &art.trace)?;
    output::write_json(&dir.join("summary.json"), &art.summary)?;
    output::write_json(&dir.join("constants.json"), &art.constants)?;
    Ok(())
}

/// Runs on a prebuilt workspace and writes into `cfg.output_dir`.
pub fn run_in(cfg: &RunConfig, ws: &Workspace) -> LabResult<Value> {
    let art = execute(cfg, ws)?;
    write_artifacts(&cfg.output_dir, &art)?;
    Ok(art.summary)
}

pub fn run(cfg: &RunConfig) -> LabResult<Value> {
    let ws = Arc::new(Workspace::build(cfg)?);
    run_in(cfg, &ws)
}

/// `constants` verb: λ̂₁, Λ̂, S_q and depths.
pub fn constants_only(cfg: &RunConfig) -> LabResult<Value> {
    let ws = Workspace::build(cfg)?;
    let params = resolve_params(cfg, &ws.constants)?;
    let depths = estimate_depths(&params, &ws.disc, &ws.constants, cfg.constants.n_rays, cfg.constants.depth_seed)?;
    Ok(constants_json(&ws, &params, &depths))
}

/// `seed` verb: initial data and certificate.
pub fn seed_only(cfg: &RunConfig) -> LabResult<Value> {
    let ws = Workspace::build(cfg)?;
    let Prepared { params, depths, seeded } = prepare(cfg, &ws)?;
    let certificate = seeded.result.as_ref().map(|r| certificate_json(r, &params, &ws, &depths));
    Ok(json!({
        "params": params_json(&params),
        "source": seeded.source,
        "certificate": certificate,
        "u0": seeded.u0.values(),
        "u1": seeded.u1.values(),
    }))
}
