//! Browser bindings for three interactive views:
//!
//! * [`scatter`]: one graph and treatment draw, degree against D̄*, with r².
//! * [`bias_sweep`]: population D̄*-regression coefficient and its isolation
//!   bias as the edge deletion probability (hence the isolated share) varies.
//! * [`simulate`]: a small Monte Carlo run of all three regressions.
//!
//! Each binding returns a JSON string. The `*_json` functions hold the logic
//! and also run natively.

use std::collections::BTreeMap;

use serde::Serialize;
use spillover_core::dgp::{BuiltinDesign, Design};
use spillover_core::exposure::{ExposureProfile, TreatmentVector};
use spillover_core::graph::{DegreeHistogram, GraphGenerator, WattsStrogatz};
use spillover_core::montecarlo::{run, SimConfig};
use spillover_core::oracle::OracleReport;
use spillover_core::rng::{derive_seed, StreamTag};
use wasm_bindgen::prelude::*;

/// Demo runs are capped so the page stays responsive.
pub const MAX_NODES: usize = 5000;
pub const MAX_REPS: usize = 500;

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn check_size(n: usize) -> Result<(), String> {
    if n > MAX_NODES {
        return Err(format!("n = {n} exceeds the demo limit of {MAX_NODES}"));
    }
    Ok(())
}

#[derive(Serialize)]
struct ScatterPoint {
    degree: usize,
    dbar_star: f64,
    count: usize,
}

#[derive(Serialize)]
struct ScatterOut {
    n: usize,
    isolated_share: f64,
    mean_degree: f64,
    r2_dbar: Option<f64>,
    r2_dbar_star: Option<f64>,
    points: Vec<ScatterPoint>,
}

pub fn scatter_json(n: usize, k: usize, beta: f64, delete_prob: f64, p: f64, seed: u64) -> Out {
    check_size(n)?;
    let net = WattsStrogatz { n, k, beta, delete_prob }
        .generate(derive_seed(seed, 0, StreamTag::Graph))
        .map_err(err)?;
    let tr = TreatmentVector::assign_bernoulli(n, p, derive_seed(seed, 0, StreamTag::Treatment))
        .map_err(err)?;
    let profile = ExposureProfile::compute(&net, &tr).map_err(err)?;
    let diag = profile.diagnostics();
    // D̄* takes finitely many values per degree, so points are merged with counts.
    let mut cells: BTreeMap<(usize, u64), usize> = BTreeMap::new();
    for i in 0..n {
        *cells.entry((profile.gamma[i], profile.dbar_star[i].to_bits())).or_insert(0) += 1;
    }
    let summary = net.summarize();
    let out = ScatterOut {
        n,
        isolated_share: summary.isolated_fraction,
        mean_degree: summary.mean_degree,
        r2_dbar: diag.r2_dbar,
        r2_dbar_star: diag.r2_dbar_star,
        points: cells
            .into_iter()
            .map(|((degree, bits), count)| ScatterPoint {
                degree,
                dbar_star: f64::from_bits(bits),
                count,
            })
            .collect(),
    };
    serde_json::to_string(&out).map_err(err)
}

#[derive(Serialize)]
struct SweepPoint {
    delete_prob: f64,
    isolated_share: f64,
    bias: Option<f64>,
    weighted: Option<f64>,
    total: Option<f64>,
    beta_dbar: Option<f64>,
}

/// Pools `graphs` draws per deletion probability into one degree histogram.
#[allow(clippy::too_many_arguments)]
pub fn bias_sweep_json(
    design: u8,
    c: f64,
    p: f64,
    n: usize,
    k: usize,
    beta: f64,
    graphs: usize,
    steps: usize,
    seed: u64,
) -> Out {
    check_size(n)?;
    if graphs == 0 || graphs > 50 || !(2..=41).contains(&steps) {
        return Err("graphs must be in 1..=50 and steps in 2..=41".into());
    }
    let design = BuiltinDesign::new(design, c).map_err(err)?;
    let mut points = Vec::with_capacity(steps);
    for s in 0..steps {
        // Stop short of 1, where every node is isolated.
        let delete_prob = 0.95 * s as f64 / (steps - 1) as f64;
        let ws = WattsStrogatz { n, k, beta, delete_prob };
        let mut degrees = Vec::with_capacity(n * graphs);
        for g in 0..graphs {
            degrees.extend(ws.generate(derive_seed(seed, g as u64, StreamTag::Graph)).map_err(err)?.degrees());
        }
        let hist = DegreeHistogram::from_degrees(degrees);
        let spec = design.expand(hist.max_degree());
        let o = OracleReport::compute(&spec, &hist, p).map_err(err)?;
        points.push(SweepPoint {
            delete_prob,
            isolated_share: 1.0 - o.p_gamma,
            bias: o.eta_dbar_bias,
            weighted: o.eta_dbar_weighted,
            total: o.eta_dbar_total,
            beta_dbar: o.beta_dbar,
        });
    }
    serde_json::to_string(&points).map_err(err)
}

#[derive(Serialize)]
struct SimRow {
    spec: &'static str,
    coef: &'static str,
    mean_estimate: f64,
    true_coef: f64,
    bias: f64,
    ci_low: f64,
    ci_high: f64,
    coverage: f64,
}

#[derive(Serialize)]
struct SimOut {
    reps_used: usize,
    n_excluded: usize,
    isolated_share: f64,
    warning: Option<String>,
    rows: Vec<SimRow>,
}

pub fn simulate_json(design: u8, c: f64, n: usize, reps: usize, p: f64, seed: u64) -> Out {
    check_size(n)?;
    if reps > MAX_REPS {
        return Err(format!("reps = {reps} exceeds the demo limit of {MAX_REPS}"));
    }
    let config = SimConfig {
        n,
        reps,
        p,
        design: Design::Builtin(BuiltinDesign::new(design, c).map_err(err)?),
        generator: GraphGenerator::calibrated(),
        base_seed: seed,
        regenerate_graph_each_rep: true,
    };
    let report = run(&config).map_err(err)?;
    let out = SimOut {
        reps_used: report.reps_used,
        n_excluded: report.n_excluded,
        isolated_share: report.graph_stats.mean_isolated_fraction,
        warning: report.warning.clone(),
        rows: report
            .rows
            .iter()
            .map(|r| SimRow {
                spec: r.spec.as_str(),
                coef: r.coef.as_str(),
                mean_estimate: r.mean_estimate,
                true_coef: r.true_coef,
                bias: r.bias,
                ci_low: r.ci95.0,
                ci_high: r.ci95.1,
                coverage: r.coverage,
            })
            .collect(),
    };
    serde_json::to_string(&out).map_err(err)
}

fn js(r: Out) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn scatter(n: usize, k: usize, beta: f64, delete_prob: f64, p: f64, seed: u32) -> Result<String, JsError> {
    js(scatter_json(n, k, beta, delete_prob, p, seed.into()))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bias_sweep(
    design: u8,
    c: f64,
    p: f64,
    n: usize,
    k: usize,
    beta: f64,
    graphs: usize,
    steps: usize,
    seed: u32,
) -> Result<String, JsError> {
    js(bias_sweep_json(design, c, p, n, k, beta, graphs, steps, seed.into()))
}

#[wasm_bindgen]
pub fn simulate(design: u8, c: f64, n: usize, reps: usize, p: f64, seed: u32) -> Result<String, JsError> {
    js(simulate_json(design, c, n, reps, p, seed.into()))
}
