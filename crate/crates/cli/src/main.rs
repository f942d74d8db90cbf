//! `spillover`: simulate, scatter, oracle and audit subcommands.

mod args;
mod config;
mod manifest;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use spillover_core::audit::{audit, Dataset, DatasetColumns};
use spillover_core::exposure::{ExposureProfile, TreatmentVector};
use spillover_core::graph::{DegreeHistogram, Network};
use spillover_core::montecarlo::{self, SimConfig};
use spillover_core::oracle::OracleReport;
use spillover_core::rng::{derive_seed, StreamTag};

use args::{AuditArgs, Cli, Command, OracleArgs, ScatterArgs, SimulateArgs};
use config::Loaded;
use manifest::{RunManifest, RunSummary};

const EXIT_USAGE: u8 = 2;
const EXIT_INGESTION: u8 = 3;
const EXIT_SINGULAR: u8 = 4;
const EXIT_IO: u8 = 5;

const DEFAULT_N: usize = 1000;
const DEFAULT_REPS: usize = 5000;
const DEFAULT_P: f64 = 0.5;
const DEFAULT_SEED: u64 = 42;

/// A flag combination or value the command cannot accept.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use spillover_core::Error as E;
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Parameter(_) => EXIT_USAGE,
                E::Ingestion { .. } | E::Config(_) => EXIT_INGESTION,
                E::Csv(c) if c.is_io_error() => EXIT_IO,
                E::Csv(_) => EXIT_INGESTION,
                E::Singular { .. } | E::EmptySubsample(_) => EXIT_SINGULAR,
                E::Io(_) => EXIT_IO,
                E::TooLarge { .. } => EXIT_USAGE,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Scatter(a) => scatter(a),
        Command::Oracle(a) => oracle(a),
        Command::Audit(a) => run_audit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let configs = match config::load(a.common.config.as_deref())? {
        Loaded::Manifest(m) => {
            let g = &a.graph;
            let other = g.graph.is_some()
                || g.k.is_some()
                || g.beta.is_some()
                || g.delete_prob.is_some()
                || g.mean_degree.is_some()
                || a.design.design.is_some()
                || a.design.c.is_some()
                || a.design.design_file.is_some()
                || a.fixed_graph;
            if other {
                return Err(usage(
                    "a replayed manifest accepts only --seed, --n, --reps, --p and --out",
                ));
            }
            let mut configs = m.configs;
            for cfg in &mut configs {
                config::override_sim(cfg, a.common.seed, a.graph.n, a.reps, a.p);
            }
            configs
        }
        Loaded::File(file) => {
            let generator = config::resolve_generator(file.generator, &a.graph)?;
            let designs = config::resolve_designs(&file, &a.design, &[0.0])?;
            designs
                .into_iter()
                .map(|design| SimConfig {
                    n: a.graph.n.or(file.n).unwrap_or(DEFAULT_N),
                    reps: a.reps.or(file.reps).unwrap_or(DEFAULT_REPS),
                    p: a.p.or(file.p).unwrap_or(DEFAULT_P),
                    design,
                    generator,
                    base_seed: a.common.seed.or(file.base_seed).unwrap_or(DEFAULT_SEED),
                    regenerate_graph_each_rep: !a.fixed_graph
                        && file.regenerate_graph_each_rep.unwrap_or(true),
                })
                .collect()
        }
    };
    for cfg in &configs {
        cfg.validate().map_err(|e| usage(e.to_string()))?;
    }

    let out = a.common.out.unwrap_or_else(|| PathBuf::from("results.csv"));
    let manifest_path = a.manifest.unwrap_or_else(|| manifest::default_path(&out));
    let timestamp = chrono::Utc::now().to_rfc3339();
    let start = Instant::now();
    let mut reports = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let report = if a.serial {
            montecarlo::run_serial(cfg)?
        } else {
            montecarlo::run(cfg)?
        };
        if let Some(w) = &report.warning {
            eprintln!("warning: {w}");
        }
        reports.push(report);
    }
    let duration = start.elapsed();

    let mut w = create(&out)?;
    montecarlo::write_results_csv(&reports, &mut w)?;
    w.flush()?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp,
        configs,
        outputs: vec![out.clone(), manifest_path.clone()],
        duration_secs: duration.as_secs_f64(),
        runs: reports
            .iter()
            .map(|r| {
                let (design, c) = r.config.design_label();
                RunSummary {
                    design,
                    c,
                    reps_used: r.reps_used,
                    n_excluded: r.n_excluded,
                    warning: r.warning.clone(),
                }
            })
            .collect(),
    };
    manifest.write(&manifest_path)?;

    print!("{}", report::simulation_table(&reports));
    println!(
        "wrote {} and {} ({:.1} s)",
        out.display(),
        manifest_path.display(),
        duration.as_secs_f64()
    );
    Ok(())
}

fn scatter(a: ScatterArgs) -> Result<()> {
    let file = config::load_file(a.common.config.as_deref())?;
    let generator = config::resolve_generator(file.generator, &a.graph)?;
    let n = a.graph.n.or(file.n).unwrap_or(DEFAULT_N);
    let p = a.p.or(file.p).unwrap_or(DEFAULT_P);
    let seed = a.common.seed.or(file.base_seed).unwrap_or(DEFAULT_SEED);
    generator.validate(n).map_err(|e| usage(e.to_string()))?;
    if !(p > 0.0 && p < 1.0) {
        return Err(usage(format!("p = {p} must lie in (0, 1)")));
    }

    let net = generator.generate(n, derive_seed(seed, 0, StreamTag::Graph))?;
    let tr = TreatmentVector::assign_bernoulli(n, p, derive_seed(seed, 0, StreamTag::Treatment))?;
    let profile = ExposureProfile::compute(&net, &tr)?;

    let out = a.common.out.unwrap_or_else(|| PathBuf::from("scatter.csv"));
    let mut w = create(&out)?;
    profile.write_scatter_csv(&mut w)?;
    w.flush()?;

    if let Some(path) = &a.edges_out {
        let mut w = create(path)?;
        net.write_edge_list_csv(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &a.data_out {
        let mut design_args = a.design;
        if design_args.design.is_none() && design_args.design_file.is_none() && file.design_file.is_none() {
            design_args.design = Some(file.designs.as_ref().map_or("1".into(), |d| {
                d.iter().map(u8::to_string).collect::<Vec<_>>().join(",")
            }));
        }
        let designs = config::resolve_designs(&file, &design_args, &[0.0])?;
        let [design] = designs.as_slice() else {
            return Err(usage("--data-out needs exactly one design and one c value"));
        };
        let spec = design.spec_for(&net.degree_histogram())?;
        let outcome = spec.outcomes_from_profile(&profile, derive_seed(seed, 0, StreamTag::Noise))?;
        let data = Dataset {
            treatment: tr.indicators().to_vec(),
            outcome,
        };
        let mut w = create(path)?;
        data.write_csv(&mut w)?;
        w.flush()?;
    }

    print!("{}", report::scatter_summary(&net.summarize(), &profile.diagnostics()));
    println!("wrote {}", out.display());
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<()> {
    let file = config::load_file(a.common.config.as_deref())?;
    let p = a.p.or(file.p).unwrap_or(DEFAULT_P);
    if !(p > 0.0 && p < 1.0) {
        return Err(usage(format!("p = {p} must lie in (0, 1)")));
    }
    let (hist, source) = if let Some(path) = &a.histogram {
        (DegreeHistogram::read_csv(open(path)?)?, format!("histogram {}", path.display()))
    } else if let Some(path) = &a.edges {
        let net = Network::read_edge_list_csv(open(path)?, a.nodes)?;
        (net.degree_histogram(), format!("edge list {}", path.display()))
    } else {
        let generator = config::resolve_generator(file.generator, &a.graph)?;
        let n = a.graph.n.or(file.n).unwrap_or(DEFAULT_N);
        let seed = a.common.seed.or(file.base_seed).unwrap_or(DEFAULT_SEED);
        generator.validate(n).map_err(|e| usage(e.to_string()))?;
        let net = generator.generate(n, derive_seed(seed, 0, StreamTag::Graph))?;
        (net.degree_histogram(), format!("generated graph, n = {n}, seed {seed}"))
    };

    let designs = config::resolve_designs(&file, &a.design, &[0.0])?;
    let mut rows = Vec::new();
    for design in &designs {
        let spec = design.spec_for(&hist)?;
        rows.push((design.clone(), OracleReport::compute(&spec, &hist, p)?));
    }
    print!("{}", report::oracle_text(&source, &hist.summary(), &rows));
    if let Some(path) = &a.common.out {
        let mut w = create(path)?;
        report::write_oracle_csv(&rows, &mut w)?;
        w.flush()?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_audit(a: AuditArgs) -> Result<()> {
    let file = config::load_file(a.common.config.as_deref())?;
    let from_file = file.audit.unwrap_or_default();
    let defaults = DatasetColumns::default();
    let cols = DatasetColumns {
        id: a.id_col.or(from_file.id_col).unwrap_or(defaults.id),
        treatment: a.treatment_col.or(from_file.treatment_col).unwrap_or(defaults.treatment),
        outcome: a.outcome_col.or(from_file.outcome_col).unwrap_or(defaults.outcome),
    };
    let data = Dataset::read_csv(open(&a.data)?, &cols)
        .with_context(|| format!("reading {}", a.data.display()))?;
    let net = Network::read_edge_list_csv(open(&a.edges)?, Some(data.len()))
        .with_context(|| format!("reading {}", a.edges.display()))?;
    let report = audit(&net, &data)?;
    print!("{}", report::audit_text(&report));
    if let Some(path) = &a.common.out {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
