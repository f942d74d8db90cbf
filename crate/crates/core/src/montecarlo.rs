//! Repeated simulation of graph, treatment and outcome, with all three
//! spillover regressions fitted on every repetition.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dgp::Design;
use crate::error::{Error, Result};
use crate::estimators::{
    dbar_regression, dbar_star_regression, t_regression, RegressionFit, SpecName, D,
};
use crate::exposure::{ExposureProfile, TreatmentVector};
use crate::graph::{GraphGenerator, Network};
use crate::oracle::OracleReport;
use crate::rng::{derive_seed, StreamTag};

/// Exclusion share above which a run carries a warning.
pub const EXCLUSION_WARNING_SHARE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub reps: usize,
    pub p: f64,
    pub design: Design,
    pub generator: GraphGenerator,
    pub base_seed: u64,
    #[serde(default = "default_true")]
    pub regenerate_graph_each_rep: bool,
}

fn default_true() -> bool {
    true
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::Parameter("reps must be at least 1".into()));
        }
        if self.n < 10 {
            return Err(Error::Parameter(format!("n = {} must be at least 10", self.n)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Parameter(format!("p = {} must lie in (0, 1)", self.p)));
        }
        self.generator.validate(self.n)
    }

    /// Design id and spillover scale for labelling output, when builtin.
    pub fn design_label(&self) -> (String, Option<f64>) {
        match &self.design {
            Design::Builtin(b) => (b.id().to_string(), Some(b.c)),
            Design::Custom(_) => ("custom".to_string(), None),
        }
    }
}

/// Which coefficient of a specification a row summarises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefKind {
    Spillover,
    Direct,
}

impl CoefKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CoefKind::Spillover => "spillover",
            CoefKind::Direct => "direct",
        }
    }

    pub fn coef_name(&self, spec: SpecName) -> &'static str {
        match self {
            CoefKind::Spillover => spec.spillover_coef(),
            CoefKind::Direct => D,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub spec: SpecName,
    pub coef: CoefKind,
    pub mean_estimate: f64,
    /// Standard deviation of the estimates over √reps; `None` for one rep.
    pub mc_se: Option<f64>,
    pub mean_reported_se: f64,
    /// `mean_estimate ± 1.96 · mean_reported_se`, the typical per-rep interval.
    pub ci95: (f64, f64),
    /// `mean_estimate ± 1.96 · mc_se`.
    pub ci95_of_mean: Option<(f64, f64)>,
    /// Average per-rep "true coefficient" (weighted part for the D̄* spillover).
    pub true_coef: f64,
    /// Average per-rep population projection (bias included).
    pub projection: f64,
    /// `mean_estimate − true_coef`.
    pub bias: f64,
    /// Share of reps whose interval covers that rep's `true_coef`.
    pub coverage: f64,
    /// Share of reps whose interval covers that rep's projection.
    pub projection_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub mean_isolated_fraction: f64,
    pub mean_degree: f64,
    pub mean_max_degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub config: SimConfig,
    pub reps_used: usize,
    pub n_excluded: usize,
    pub exclusion_reasons: BTreeMap<String, usize>,
    pub warning: Option<String>,
    pub graph_stats: GraphStats,
    pub rows: Vec<AggregateRow>,
}

impl AggregateReport {
    pub fn row(&self, spec: SpecName, coef: CoefKind) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.spec == spec && r.coef == coef)
    }
}

/// Everything kept from one successful repetition.
#[derive(Debug, Clone)]
struct RepResult {
    fits: [RegressionFit; 3],
    oracle: OracleReport,
    isolated_fraction: f64,
    mean_degree: f64,
    max_degree: usize,
}

fn run_rep(config: &SimConfig, fixed: Option<&Network>, rep: u64) -> Result<RepResult> {
    let owned;
    let net = match fixed {
        Some(net) => net,
        None => {
            owned = config
                .generator
                .generate(config.n, derive_seed(config.base_seed, rep, StreamTag::Graph))?;
            &owned
        }
    };
    let tr = TreatmentVector::assign_bernoulli(
        config.n,
        config.p,
        derive_seed(config.base_seed, rep, StreamTag::Treatment),
    )?;
    let profile = ExposureProfile::compute(net, &tr)?;
    let hist = net.degree_histogram();
    let spec = config.design.spec_for(&hist)?;
    let y = spec.outcomes_from_profile(&profile, derive_seed(config.base_seed, rep, StreamTag::Noise))?;
    let fits = [
        t_regression(&profile, &y)?,
        dbar_regression(&profile, &y)?,
        dbar_star_regression(&profile, &y)?,
    ];
    let oracle = OracleReport::compute(&spec, &hist, config.p)?;
    let summary = hist.summary();
    Ok(RepResult {
        fits,
        oracle,
        isolated_fraction: summary.isolated_fraction,
        mean_degree: summary.mean_degree,
        max_degree: summary.max_degree,
    })
}

fn fixed_graph(config: &SimConfig) -> Result<Option<Network>> {
    if config.regenerate_graph_each_rep {
        Ok(None)
    } else {
        config
            .generator
            .generate(config.n, derive_seed(config.base_seed, 0, StreamTag::Graph))
            .map(Some)
    }
}

/// Runs every repetition, in parallel when the `parallel` feature is on.
/// The report does not depend on execution order.
pub fn run(config: &SimConfig) -> Result<AggregateReport> {
    config.validate()?;
    let fixed = fixed_graph(config)?;
    #[cfg(feature = "parallel")]
    let results: Vec<Result<RepResult>> = {
        use rayon::prelude::*;
        (0..config.reps as u64)
            .into_par_iter()
            .map(|r| run_rep(config, fixed.as_ref(), r))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<RepResult>> = (0..config.reps as u64)
        .map(|r| run_rep(config, fixed.as_ref(), r))
        .collect();
    aggregate(config, results)
}

/// Same as [`run`] on the calling thread only.
pub fn run_serial(config: &SimConfig) -> Result<AggregateReport> {
    config.validate()?;
    let fixed = fixed_graph(config)?;
    let results = (0..config.reps as u64)
        .map(|r| run_rep(config, fixed.as_ref(), r))
        .collect();
    aggregate(config, results)
}

fn exclusion_reason(err: &Error) -> Option<String> {
    match err {
        Error::Singular { columns } => Some(format!("singular ({})", columns.join(", "))),
        Error::EmptySubsample(_) => Some("empty subsample".to_string()),
        Error::Config(msg) => Some(format!("design: {msg}")),
        _ => None,
    }
}

fn aggregate(config: &SimConfig, results: Vec<Result<RepResult>>) -> Result<AggregateReport> {
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    let mut ok = Vec::with_capacity(results.len());
    let mut first_failure = None;
    for r in results {
        match r {
            Ok(rep) => ok.push(rep),
            Err(e) => match exclusion_reason(&e) {
                Some(reason) => {
                    *reasons.entry(reason).or_insert(0) += 1;
                    first_failure.get_or_insert(e);
                }
                None => return Err(e),
            },
        }
    }
    let n_excluded = config.reps - ok.len();
    if ok.is_empty() {
        // Every repetition failed; surface the failure of the first one.
        return Err(first_failure.expect("at least one repetition"));
    }
    let share = n_excluded as f64 / config.reps as f64;
    let warning = (share > EXCLUSION_WARNING_SHARE).then(|| {
        format!(
            "{n_excluded} of {} repetitions ({:.1}%) excluded",
            config.reps,
            100.0 * share
        )
    });

    let m = ok.len() as f64;
    let graph_stats = GraphStats {
        mean_isolated_fraction: ok.iter().map(|r| r.isolated_fraction).sum::<f64>() / m,
        mean_degree: ok.iter().map(|r| r.mean_degree).sum::<f64>() / m,
        mean_max_degree: ok.iter().map(|r| r.max_degree as f64).sum::<f64>() / m,
    };

    let mut rows = Vec::new();
    for (s, spec) in SpecName::MAIN.into_iter().enumerate() {
        for kind in [CoefKind::Spillover, CoefKind::Direct] {
            let name = kind.coef_name(spec);
            let mut est = Vec::with_capacity(ok.len());
            let (mut se_sum, mut truth_sum, mut proj_sum) = (0.0, 0.0, 0.0);
            let (mut covered, mut proj_covered) = (0usize, 0usize);
            for rep in &ok {
                let fit = &rep.fits[s];
                let b = fit.coef(name).expect("coefficient present");
                let (lo, hi) = fit.ci_of(name).expect("coefficient present");
                let truth = rep.oracle.target(spec, name).unwrap_or(f64::NAN);
                let proj = rep.oracle.projection(spec, name).unwrap_or(f64::NAN);
                est.push(b);
                se_sum += fit.se_of(name).expect("coefficient present");
                truth_sum += truth;
                proj_sum += proj;
                covered += usize::from(lo <= truth && truth <= hi);
                proj_covered += usize::from(lo <= proj && proj <= hi);
            }
            let mean = est.iter().sum::<f64>() / m;
            let mc_se = (ok.len() > 1).then(|| {
                let var = est.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (m - 1.0);
                (var / m).sqrt()
            });
            let mean_se = se_sum / m;
            let true_coef = truth_sum / m;
            rows.push(AggregateRow {
                spec,
                coef: kind,
                mean_estimate: mean,
                mc_se,
                mean_reported_se: mean_se,
                ci95: (mean - 1.96 * mean_se, mean + 1.96 * mean_se),
                ci95_of_mean: mc_se.map(|s| (mean - 1.96 * s, mean + 1.96 * s)),
                true_coef,
                projection: proj_sum / m,
                bias: mean - true_coef,
                coverage: covered as f64 / m,
                projection_coverage: proj_covered as f64 / m,
            });
        }
    }

    Ok(AggregateReport {
        config: config.clone(),
        reps_used: ok.len(),
        n_excluded,
        exclusion_reasons: reasons,
        warning,
        graph_stats,
        rows,
    })
}

pub const RESULTS_HEADER: [&str; 12] = [
    "design",
    "c",
    "spec",
    "coef",
    "mean_estimate",
    "true_coef",
    "bias",
    "ci_low",
    "ci_high",
    "coverage",
    "mc_se",
    "n_excluded",
];

/// Writes the results table for one or more runs, six rows per run.
pub fn write_results_csv<W: Write>(reports: &[AggregateReport], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(RESULTS_HEADER)?;
    for report in reports {
        let (design, c) = report.config.design_label();
        for row in &report.rows {
            wtr.write_record([
                design.clone(),
                c.map(|v| v.to_string()).unwrap_or_default(),
                row.spec.as_str().to_string(),
                row.coef.as_str().to_string(),
                row.mean_estimate.to_string(),
                row.true_coef.to_string(),
                row.bias.to_string(),
                row.ci95.0.to_string(),
                row.ci95.1.to_string(),
                row.coverage.to_string(),
                row.mc_se.map(|v| v.to_string()).unwrap_or_default(),
                report.n_excluded.to_string(),
            ])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::BuiltinDesign;

    fn config(design: u8, c: f64, reps: usize) -> SimConfig {
        SimConfig {
            n: 200,
            reps,
            p: 0.5,
            design: Design::Builtin(BuiltinDesign::new(design, c).unwrap()),
            generator: GraphGenerator::calibrated(),
            base_seed: 42,
            regenerate_graph_each_rep: true,
        }
    }

    #[test]
    fn validation() {
        let mut c = config(1, 0.0, 0);
        assert!(run(&c).is_err());
        c.reps = 1;
        c.n = 5;
        assert!(run(&c).is_err());
        c.n = 100;
        c.p = 1.0;
        assert!(run(&c).is_err());
    }

    #[test]
    fn single_rep_equals_single_fit() {
        let cfg = config(1, -0.5, 1);
        let report = run(&cfg).unwrap();
        let net = cfg.generator.generate(cfg.n, derive_seed(42, 0, StreamTag::Graph)).unwrap();
        let tr =
            TreatmentVector::assign_bernoulli(cfg.n, 0.5, derive_seed(42, 0, StreamTag::Treatment))
                .unwrap();
        let prof = ExposureProfile::compute(&net, &tr).unwrap();
        let spec = BuiltinDesign::new(1, -0.5).unwrap().expand(net.summarize().max_degree);
        let y = spec
            .outcomes_from_profile(&prof, derive_seed(42, 0, StreamTag::Noise))
            .unwrap();
        let fit = dbar_star_regression(&prof, &y).unwrap();
        let row = report.row(SpecName::DbarStarReg, CoefKind::Spillover).unwrap();
        assert_eq!(row.mean_estimate, fit.spillover().unwrap());
        assert_eq!(row.mc_se, None);
        assert_eq!(report.rows.len(), 6);
    }

    #[test]
    fn deterministic_and_order_independent() {
        let cfg = config(2, -0.5, 40);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        let c = run_serial(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn fixed_graph_variant() {
        let mut cfg = config(1, 0.0, 20);
        cfg.regenerate_graph_each_rep = false;
        let report = run(&cfg).unwrap();
        // One graph: the per-rep oracle is constant, so the averaged bias part
        // equals that graph's oracle.
        let net = cfg.generator.generate(cfg.n, derive_seed(42, 0, StreamTag::Graph)).unwrap();
        let hist = net.degree_histogram();
        let spec = BuiltinDesign::new(1, 0.0).unwrap().expand(hist.max_degree());
        let oracle = OracleReport::compute(&spec, &hist, 0.5).unwrap();
        let row = report.row(SpecName::DbarStarReg, CoefKind::Spillover).unwrap();
        assert!((row.projection - oracle.eta_dbar_total.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_reps_are_excluded_and_counted() {
        // A very sparse ER graph on 10 nodes often has fewer than four
        // non-isolated units, which the D̄-regression cannot fit.
        let cfg = SimConfig {
            n: 10,
            reps: 50,
            p: 0.5,
            design: Design::Builtin(BuiltinDesign::new(3, 0.0).unwrap()),
            generator: GraphGenerator::ErdosRenyi { mean_degree: 0.3 },
            base_seed: 1,
            regenerate_graph_each_rep: true,
        };
        let report = run(&cfg).unwrap();
        assert!(report.n_excluded > 0);
        assert_eq!(report.reps_used + report.n_excluded, 50);
        assert_eq!(report.exclusion_reasons.values().sum::<usize>(), report.n_excluded);
        assert!(report.warning.is_some());

        let empty = SimConfig {
            generator: GraphGenerator::ErdosRenyi { mean_degree: 1e-9 },
            ..cfg
        };
        assert!(matches!(
            run(&empty),
            Err(Error::Singular { .. } | Error::EmptySubsample(_))
        ));
    }

    #[test]
    fn csv_has_six_rows_per_run() {
        let reports = vec![run(&config(1, 0.0, 3)).unwrap(), run(&config(3, -0.5, 3)).unwrap()];
        let mut buf = Vec::new();
        write_results_csv(&reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULTS_HEADER.join(","));
        assert_eq!(lines.len(), 13);
        assert!(lines[1].starts_with("1,0,t_reg,spillover,"));
        assert!(lines[7].starts_with("3,-0.5,t_reg,spillover,"));
    }
}
