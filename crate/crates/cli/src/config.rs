//! Config file schema and flag resolution. Flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use spillover_core::dgp::{BuiltinDesign, Design, DesignSpec};
use spillover_core::graph::GraphGenerator;
use spillover_core::montecarlo::SimConfig;

use crate::args::{DesignArgs, GraphArgs, GraphKind};
use crate::manifest::RunManifest;
use crate::UsageError;

/// Keys accepted in a TOML config file. Names mirror `SimConfig`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(alias = "seed")]
    pub base_seed: Option<u64>,
    pub n: Option<usize>,
    pub reps: Option<usize>,
    pub p: Option<f64>,
    pub regenerate_graph_each_rep: Option<bool>,
    pub designs: Option<Vec<u8>>,
    pub c: Option<Vec<f64>>,
    pub design_file: Option<PathBuf>,
    pub noise_sd: Option<f64>,
    pub generator: Option<GraphGenerator>,
    pub audit: Option<AuditColumns>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditColumns {
    pub id_col: Option<String>,
    pub treatment_col: Option<String>,
    pub outcome_col: Option<String>,
}

pub enum Loaded {
    File(ConfigFile),
    Manifest(RunManifest),
}

pub fn load(path: Option<&Path>) -> Result<Loaded> {
    let Some(path) = path else {
        return Ok(Loaded::File(ConfigFile::default()));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        let manifest: RunManifest = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("{} is not a run manifest: {e}", path.display())))?;
        return Ok(Loaded::Manifest(manifest));
    }
    let file: ConfigFile = toml::from_str(&text)
        .map_err(|e| UsageError(format!("bad config file {}: {e}", path.display())))?;
    Ok(Loaded::File(file))
}

/// Plain config only; manifests are accepted by `simulate` alone.
pub fn load_file(path: Option<&Path>) -> Result<ConfigFile> {
    match load(path)? {
        Loaded::File(f) => Ok(f),
        Loaded::Manifest(_) => Err(UsageError("only `simulate` can replay a manifest".into()).into()),
    }
}

pub fn resolve_generator(base: Option<GraphGenerator>, flags: &GraphArgs) -> Result<GraphGenerator> {
    let ws_flags = flags.k.is_some() || flags.beta.is_some() || flags.delete_prob.is_some();
    let kind = match (flags.graph, base) {
        (Some(k), _) => k,
        (None, Some(GraphGenerator::ErdosRenyi { .. })) => GraphKind::Er,
        (None, _) if flags.mean_degree.is_some() && !ws_flags => GraphKind::Er,
        (None, _) => GraphKind::Ws,
    };
    match kind {
        GraphKind::Ws => {
            if flags.mean_degree.is_some() {
                return Err(UsageError("--mean-degree applies to --graph er only".into()).into());
            }
            let (mut k, mut beta, mut delete_prob) = match base {
                Some(GraphGenerator::WattsStrogatz { k, beta, delete_prob }) => (k, beta, delete_prob),
                _ => match GraphGenerator::calibrated() {
                    GraphGenerator::WattsStrogatz { k, beta, delete_prob } => (k, beta, delete_prob),
                    GraphGenerator::ErdosRenyi { .. } => unreachable!(),
                },
            };
            k = flags.k.unwrap_or(k);
            beta = flags.beta.unwrap_or(beta);
            delete_prob = flags.delete_prob.unwrap_or(delete_prob);
            Ok(GraphGenerator::WattsStrogatz { k, beta, delete_prob })
        }
        GraphKind::Er => {
            if ws_flags {
                return Err(UsageError("--k, --beta and --delete-prob apply to --graph ws only".into()).into());
            }
            let base_mean = match base {
                Some(GraphGenerator::ErdosRenyi { mean_degree }) => Some(mean_degree),
                _ => None,
            };
            let mean_degree = flags
                .mean_degree
                .or(base_mean)
                .ok_or_else(|| UsageError("--graph er needs --mean-degree".into()))?;
            Ok(GraphGenerator::ErdosRenyi { mean_degree })
        }
    }
}

fn parse_design_ids(s: &str) -> Result<Vec<u8>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(vec![1, 2, 3]);
    }
    s.split(',')
        .map(|t| match t.trim().parse::<u8>() {
            Ok(id @ 1..=3) => Ok(id),
            _ => Err(UsageError(format!("unknown design `{t}`; use 1, 2, 3 or all")).into()),
        })
        .collect()
}

/// Designs requested by flags or config, in output order (c outer, design inner).
pub fn resolve_designs(file: &ConfigFile, flags: &DesignArgs, default_c: &[f64]) -> Result<Vec<Design>> {
    let design_file = flags.design_file.as_ref().or(file.design_file.as_ref());
    if let Some(path) = design_file.filter(|_| flags.design.is_none() && flags.c.is_none()) {
        let noise_sd = flags.noise_sd.or(file.noise_sd).unwrap_or(1.0);
        let reader = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        return Ok(vec![Design::Custom(DesignSpec::read_csv(reader, noise_sd)?)]);
    }
    let ids = match &flags.design {
        Some(s) => parse_design_ids(s)?,
        None => file.designs.clone().unwrap_or_else(|| vec![1, 2, 3]),
    };
    let cs = flags.c.clone().or_else(|| file.c.clone()).unwrap_or_else(|| default_c.to_vec());
    if ids.is_empty() || cs.is_empty() {
        return Err(UsageError("no design or c value selected".into()).into());
    }
    let mut out = Vec::new();
    for &c in &cs {
        for &id in &ids {
            out.push(Design::Builtin(
                BuiltinDesign::new(id, c).map_err(|e| UsageError(e.to_string()))?,
            ));
        }
    }
    Ok(out)
}

/// Applies scalar overrides to configs replayed from a manifest.
pub fn override_sim(cfg: &mut SimConfig, seed: Option<u64>, n: Option<usize>, reps: Option<usize>, p: Option<f64>) {
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(n) = n {
        cfg.n = n;
    }
    if let Some(r) = reps {
        cfg.reps = r;
    }
    if let Some(p) = p {
        cfg.p = p;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_schema() {
        let text = r#"
            seed = 7
            n = 500
            reps = 100
            designs = [1, 3]
            c = [0.0, -0.5]

            [generator]
            kind = "erdos_renyi"
            mean_degree = 2.5
        "#;
        let cfg: ConfigFile = toml::from_str(text).unwrap();
        assert_eq!(cfg.base_seed, Some(7));
        assert_eq!(cfg.generator, Some(GraphGenerator::ErdosRenyi { mean_degree: 2.5 }));
        assert!(toml::from_str::<ConfigFile>("nn = 3").is_err());
    }

    #[test]
    fn generator_flags_override_file() {
        let flags = GraphArgs { k: Some(4), ..Default::default() };
        let g = resolve_generator(None, &flags).unwrap();
        assert!(matches!(g, GraphGenerator::WattsStrogatz { k: 4, .. }));

        let er = Some(GraphGenerator::ErdosRenyi { mean_degree: 3.0 });
        let flags = GraphArgs { mean_degree: Some(1.0), ..Default::default() };
        assert_eq!(resolve_generator(er, &flags).unwrap(), GraphGenerator::ErdosRenyi { mean_degree: 1.0 });

        let flags = GraphArgs { graph: Some(GraphKind::Er), ..Default::default() };
        assert!(resolve_generator(None, &flags).is_err());
        let flags = GraphArgs { graph: Some(GraphKind::Er), beta: Some(0.1), mean_degree: Some(1.0), ..Default::default() };
        assert!(resolve_generator(None, &flags).is_err());
    }

    #[test]
    fn design_lists() {
        assert_eq!(parse_design_ids("all").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_design_ids("3,1").unwrap(), vec![3, 1]);
        assert!(parse_design_ids("4").is_err());
    }
}
