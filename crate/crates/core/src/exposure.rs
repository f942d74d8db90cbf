//! Treatment assignment and neighborhood exposure.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DegreeSummary, Network};
use crate::rng::rng_from_seed;

/// Binary treatment indicators drawn independently of the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreatmentVector {
    d: Vec<bool>,
    /// Assignment probability, stored as bits so the type stays `Eq`.
    p_bits: u64,
}

impl TreatmentVector {
    /// iid Bernoulli(`p`) draws.
    pub fn assign_bernoulli(n: usize, p: f64, seed: u64) -> Result<Self> {
        check_open_probability(p)?;
        let mut rng = rng_from_seed(seed);
        let d = (0..n).map(|_| rng.random::<f64>() < p).collect();
        Ok(TreatmentVector {
            d,
            p_bits: p.to_bits(),
        })
    }

    /// Wraps observed indicators; `p` is the design probability (or the
    /// sample treated share when the design is unknown).
    pub fn from_indicators(d: Vec<bool>, p: f64) -> Result<Self> {
        check_open_probability(p)?;
        Ok(TreatmentVector {
            d,
            p_bits: p.to_bits(),
        })
    }

    pub fn p(&self) -> f64 {
        f64::from_bits(self.p_bits)
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn is_treated(&self, i: usize) -> bool {
        self.d[i]
    }

    pub fn indicators(&self) -> &[bool] {
        &self.d
    }

    pub fn treated_share(&self) -> f64 {
        if self.d.is_empty() {
            return 0.0;
        }
        self.d.iter().filter(|&&x| x).count() as f64 / self.d.len() as f64
    }
}

fn check_open_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "treatment probability {p} must lie strictly between 0 and 1"
        )))
    }
}

/// Per-unit exposure statistics.
///
/// `dbar[i]` is `None` for isolated units: the treated-neighbor fraction does
/// not exist there. `dbar_star` is the zero-imputed version.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureProfile {
    pub d: Vec<bool>,
    pub t: Vec<usize>,
    pub gamma: Vec<usize>,
    pub dbar: Vec<Option<f64>>,
    pub dbar_star: Vec<f64>,
}

impl ExposureProfile {
    pub fn compute(net: &Network, tr: &TreatmentVector) -> Result<Self> {
        if tr.len() != net.n() {
            return Err(Error::Parameter(format!(
                "treatment vector has {} entries but the network has {} nodes",
                tr.len(),
                net.n()
            )));
        }
        let n = net.n();
        let mut t = Vec::with_capacity(n);
        let mut gamma = Vec::with_capacity(n);
        let mut dbar = Vec::with_capacity(n);
        let mut dbar_star = Vec::with_capacity(n);
        for i in 0..n {
            let nb = net.neighbors(i);
            let ti = nb.iter().filter(|&&j| tr.is_treated(j)).count();
            let g = nb.len();
            let frac = (g > 0).then(|| ti as f64 / g as f64);
            t.push(ti);
            gamma.push(g);
            dbar.push(frac);
            dbar_star.push(frac.unwrap_or(0.0));
        }
        Ok(ExposureProfile {
            d: tr.indicators().to_vec(),
            t,
            gamma,
            dbar,
            dbar_star,
        })
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn diagnostics(&self) -> ExposureDiagnostics {
        let (deg_pos, dbar_pos): (Vec<f64>, Vec<f64>) = self
            .gamma
            .iter()
            .zip(&self.dbar)
            .filter_map(|(&g, db)| db.map(|v| (g as f64, v)))
            .unzip();
        let deg_all: Vec<f64> = self.gamma.iter().map(|&g| g as f64).collect();
        let on_pos = moments(&deg_pos, &dbar_pos);
        let on_all = moments(&deg_all, &self.dbar_star);
        ExposureDiagnostics {
            cov_dbar_degree_on_positive: on_pos.map(|m| m.cov),
            cov_dbar_star_degree: on_all.map(|m| m.cov),
            r2_dbar: on_pos.and_then(|m| m.r_squared()),
            r2_dbar_star: on_all.and_then(|m| m.r_squared()),
        }
    }

    /// Scatter export with columns `node,degree,dbar,dbar_star,isolated`;
    /// `dbar` is left empty for isolated nodes.
    pub fn write_scatter_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["node", "degree", "dbar", "dbar_star", "isolated"])?;
        for i in 0..self.n() {
            wtr.write_record([
                i.to_string(),
                self.gamma[i].to_string(),
                self.dbar[i].map(|v| v.to_string()).unwrap_or_default(),
                self.dbar_star[i].to_string(),
                u8::from(self.gamma[i] == 0).to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Sample covariances (1/n convention) and squared correlations between
/// degree and the neighbor-treatment fraction. `None` marks a statistic with
/// no data or, for r², a zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureDiagnostics {
    /// Cov(D̄, γ) on non-isolated units.
    pub cov_dbar_degree_on_positive: Option<f64>,
    /// Cov(D̄*, γ) on all units.
    pub cov_dbar_star_degree: Option<f64>,
    pub r2_dbar: Option<f64>,
    pub r2_dbar_star: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct PairMoments {
    var_x: f64,
    var_y: f64,
    cov: f64,
}

impl PairMoments {
    fn r_squared(&self) -> Option<f64> {
        (self.var_x > 0.0 && self.var_y > 0.0).then(|| self.cov * self.cov / (self.var_x * self.var_y))
    }
}

fn moments(x: &[f64], y: &[f64]) -> Option<PairMoments> {
    if x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    Some(PairMoments {
        var_x: sxx / n,
        var_y: syy / n,
        cov: sxy / n,
    })
}

/// Cov(D̄*, γ) = {E(γ | γ>0) − E(γ)} · p · Pr(γ>0) on the degree distribution
/// summarised by `summary`.
///
/// Zero when no node is isolated or when every node is.
pub fn cov_dbar_star_degree_closed_form(summary: &DegreeSummary, p: f64) -> f64 {
    match summary.mean_degree_positive {
        Some(mean_pos) if summary.isolated_fraction > 0.0 => {
            (mean_pos - summary.mean_degree) * p * summary.p_gamma()
        }
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DegreeHistogram;

    fn path3() -> Network {
        Network::from_edge_list(&[(0, 1), (1, 2)], 3).unwrap()
    }

    #[test]
    fn bernoulli_is_reproducible() {
        let a = TreatmentVector::assign_bernoulli(5, 0.5, 11).unwrap();
        let b = TreatmentVector::assign_bernoulli(5, 0.5, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.p(), 0.5);
        let c = TreatmentVector::assign_bernoulli(3, 0.99, 1).unwrap();
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn bernoulli_rejects_boundary_probabilities() {
        for p in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(TreatmentVector::assign_bernoulli(4, p, 0).is_err(), "{p}");
        }
    }

    #[test]
    fn bernoulli_mean_within_binomial_band() {
        let n = 100_000;
        let band = 3.0 * (0.25f64 / n as f64).sqrt();
        for seed in 0..10 {
            let tr = TreatmentVector::assign_bernoulli(n, 0.5, seed).unwrap();
            assert!((tr.treated_share() - 0.5).abs() < band, "seed {seed}");
        }
    }

    #[test]
    fn path_graph_exposure() {
        let tr = TreatmentVector::from_indicators(vec![true, false, true], 0.5).unwrap();
        let prof = ExposureProfile::compute(&path3(), &tr).unwrap();
        assert_eq!(prof.t, vec![0, 2, 0]);
        assert_eq!(prof.gamma, vec![1, 2, 1]);
        assert_eq!(prof.dbar, vec![Some(0.0), Some(1.0), Some(0.0)]);
        assert_eq!(prof.dbar_star, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn isolated_node_has_no_fraction() {
        let net = Network::from_edge_list(&[(0, 1)], 3).unwrap();
        let tr = TreatmentVector::from_indicators(vec![true, true, true], 0.5).unwrap();
        let prof = ExposureProfile::compute(&net, &tr).unwrap();
        assert_eq!(prof.t[2], 0);
        assert_eq!(prof.dbar[2], None);
        assert_eq!(prof.dbar_star[2], 0.0);
    }

    #[test]
    fn star_center() {
        let net = Network::from_edge_list(&[(0, 1), (0, 2), (0, 3), (0, 4)], 5).unwrap();
        let tr =
            TreatmentVector::from_indicators(vec![false, true, false, true, false], 0.5).unwrap();
        let prof = ExposureProfile::compute(&net, &tr).unwrap();
        assert_eq!(prof.t[0], 2);
        assert_eq!(prof.dbar[0], Some(0.5));
    }

    #[test]
    fn length_mismatch() {
        let tr = TreatmentVector::from_indicators(vec![true], 0.5).unwrap();
        assert!(matches!(
            ExposureProfile::compute(&path3(), &tr),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn closed_form_covariance_examples() {
        let s = DegreeHistogram::from_degrees([0, 0, 2, 2]).summary();
        assert!((cov_dbar_star_degree_closed_form(&s, 0.5) - 0.25).abs() < 1e-15);
        let s = DegreeHistogram::from_degrees([1, 2, 3]).summary();
        assert_eq!(cov_dbar_star_degree_closed_form(&s, 0.5), 0.0);
        let s = DegreeHistogram::from_degrees([0, 0]).summary();
        assert_eq!(cov_dbar_star_degree_closed_form(&s, 0.5), 0.0);
    }

    #[test]
    fn constant_degree_subsample_has_zero_covariance() {
        let net = Network::from_edge_list(&[(0, 1), (2, 3)], 5).unwrap();
        let tr = TreatmentVector::from_indicators(vec![true, false, true, true, false], 0.5)
            .unwrap();
        let diag = ExposureProfile::compute(&net, &tr).unwrap().diagnostics();
        assert_eq!(diag.cov_dbar_degree_on_positive, Some(0.0));
        assert_eq!(diag.r2_dbar, None);
    }

    #[test]
    fn hand_covariance() {
        // degrees (0, 1, 1), D̄* = (0, 1, 0): means 2/3 and 1/3,
        // cov = [(-2/3)(-1/3) + (1/3)(2/3) + (1/3)(-1/3)] / 3 = (2/9 + 2/9 - 1/9) / 3 = 1/9.
        let net = Network::from_edge_list(&[(1, 2)], 3).unwrap();
        let tr = TreatmentVector::from_indicators(vec![false, false, true], 0.5).unwrap();
        let prof = ExposureProfile::compute(&net, &tr).unwrap();
        assert_eq!(prof.dbar_star, vec![0.0, 1.0, 0.0]);
        let diag = prof.diagnostics();
        assert!((diag.cov_dbar_star_degree.unwrap() - 1.0 / 9.0).abs() < 1e-15);
        // var(γ) = 2/9, var(D̄*) = 2/9 → r² = (1/81)/(4/81) = 1/4
        assert!((diag.r2_dbar_star.unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn scatter_csv_layout() {
        let net = Network::from_edge_list(&[(0, 1)], 3).unwrap();
        let tr = TreatmentVector::from_indicators(vec![true, false, false], 0.5).unwrap();
        let prof = ExposureProfile::compute(&net, &tr).unwrap();
        let mut buf = Vec::new();
        prof.write_scatter_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "node,degree,dbar,dbar_star,isolated\n0,1,0,0,0\n1,1,1,1,0\n2,0,,0,1\n"
        );
    }
}
