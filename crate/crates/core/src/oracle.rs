//! Population coefficients of the three spillover regressions.
//!
//! All expectations are taken over the empirical degree distribution of a
//! realised network, with own treatment `D ~ Bernoulli(p)` and treated-neighbor
//! count `T | γ ~ Binomial(γ, p)` independent of `D`. Under that law:
//!
//! - T-regression: `α_d = E μᵈᵉ(γ)` and `α_t = E{(γ / Eγ) λˢᵉ(γ)}`.
//! - D̄-regression on γ>0: `β_d = E μᵈᵉ(γ)` and
//!   `β_d̄ = E{w(γ) γ λˢᵉ(γ) | γ>0}` with `w(γ) = (1/γ) / E(1/γ | γ>0)`.
//! - D̄*-regression: `η_d = E μᵈᵉ(γ)` and `η_d̄ = bias + weighted`, where
//!   `bias = (Δθ⁰⁰ + pΔμᵈᵉ)(1 − p_γ) / {p(1 − p_γ) + (1 − p) E(1/γ | γ>0)}`
//!   and the weighted part is `E{γλ D̄(D̄ − p p_γ) | γ>0} / E{D̄(D̄ − p p_γ) | γ>0}`
//!   evaluated with `E(D̄² | γ) = p² + p(1 − p)/γ`.
//!
//! [`enumeration_population_ols`] computes the same coefficients by brute
//! force over all treatment vectors of a small graph and is the independent
//! check on the formulas.

use serde::{Deserialize, Serialize};

use crate::dgp::{true_effect_deltas, DesignSpec};
use crate::error::{Error, Result};
use crate::estimators::{SpecName, D, DBAR, DBAR_STAR, GAMMA, INTERCEPT, T};
use crate::graph::{DegreeHistogram, Network};

/// Largest graph [`enumeration_population_ols`] accepts.
pub const MAX_ENUMERATION_NODES: usize = 12;

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("p = {p} must lie strictly between 0 and 1")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TCoefficients {
    pub alpha_d: f64,
    /// `None` when every node is isolated.
    pub alpha_t: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbarCoefficients {
    pub beta_d: f64,
    pub beta_dbar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbarStarCoefficients {
    pub eta_d: f64,
    /// Contamination from baseline and direct-effect gaps; `None` when p_γ = 0.
    pub bias: Option<f64>,
    /// Weighted average of γλˢᵉ(γ); `None` when p_γ = 0.
    pub weighted: Option<f64>,
}

impl DbarStarCoefficients {
    pub fn total(&self) -> Option<f64> {
        Some(self.bias? + self.weighted?)
    }
}

/// `w_t(γ) = γ / E(γ)` on every degree of `hist`; `None` when E(γ) = 0.
pub fn t_weights(hist: &DegreeHistogram) -> Option<Vec<(usize, f64)>> {
    let mean = hist.mean_of(|g| g as f64)?;
    (mean > 0.0).then(|| hist.iter().map(|(g, _)| (g, g as f64 / mean)).collect())
}

/// `w_d̄(γ) = (1/γ) / E(1/γ | γ>0)` on the positive degrees of `hist`.
pub fn dbar_weights(hist: &DegreeHistogram) -> Option<Vec<(usize, f64)>> {
    let mean_inv = hist.positive_mean_of(|g| 1.0 / g as f64)?;
    Some(
        hist.positive_part()
            .iter()
            .map(|(g, _)| (g, (1.0 / g as f64) / mean_inv))
            .collect(),
    )
}

pub fn true_t_coefficients(spec: &DesignSpec, hist: &DegreeHistogram, p: f64) -> Result<TCoefficients> {
    check_p(p)?;
    spec.ensure_covers(hist)?;
    let alpha_d = hist
        .mean_of(|g| spec.mu_de[&g])
        .ok_or_else(|| Error::Parameter("empty degree histogram".into()))?;
    let alpha_t = t_weights(hist).map(|w| {
        let total = hist.total() as f64;
        w.iter()
            .map(|&(g, wg)| hist.count(g) as f64 / total * wg * spec.lambda_se[&g])
            .sum()
    });
    Ok(TCoefficients { alpha_d, alpha_t })
}

pub fn true_dbar_coefficients(
    spec: &DesignSpec,
    hist: &DegreeHistogram,
    p: f64,
) -> Result<DbarCoefficients> {
    check_p(p)?;
    spec.ensure_covers(hist)?;
    let pos = hist.positive_part();
    let weights = dbar_weights(hist)
        .ok_or_else(|| Error::EmptySubsample("no node with positive degree".into()))?;
    let total = pos.total() as f64;
    let beta_dbar = weights
        .iter()
        .map(|&(g, wg)| pos.count(g) as f64 / total * wg * g as f64 * spec.lambda_se[&g])
        .sum();
    let beta_d = pos.mean_of(|g| spec.mu_de[&g]).expect("non-empty");
    Ok(DbarCoefficients { beta_d, beta_dbar })
}

/// Isolation bias of the D̄*-regression spillover coefficient.
///
/// Exactly zero when `p_gamma == 1`.
pub fn dbar_star_bias(
    delta_theta00: f64,
    delta_mu_de: f64,
    p: f64,
    p_gamma: f64,
    mean_inv_degree_positive: f64,
) -> f64 {
    if p_gamma >= 1.0 {
        return 0.0;
    }
    let iso = 1.0 - p_gamma;
    (delta_theta00 + p * delta_mu_de) * iso / (p * iso + (1.0 - p) * mean_inv_degree_positive)
}

pub fn true_dbar_star_coefficients(
    spec: &DesignSpec,
    hist: &DegreeHistogram,
    p: f64,
) -> Result<DbarStarCoefficients> {
    check_p(p)?;
    spec.ensure_covers(hist)?;
    let eta_d = hist
        .mean_of(|g| spec.mu_de[&g])
        .ok_or_else(|| Error::Parameter("empty degree histogram".into()))?;
    let pos = hist.positive_part();
    if pos.total() == 0 {
        return Ok(DbarStarCoefficients {
            eta_d,
            bias: None,
            weighted: None,
        });
    }
    let p_gamma = pos.total() as f64 / hist.total() as f64;
    let mean_inv = pos.mean_of(|g| 1.0 / g as f64).expect("non-empty");

    let bias = if hist.count(0) == 0 {
        0.0
    } else {
        let deltas = true_effect_deltas(spec, hist)?;
        dbar_star_bias(
            deltas.delta_theta00.expect("both masses present"),
            deltas.delta_mu_de.expect("both masses present"),
            p,
            p_gamma,
            mean_inv,
        )
    };

    // E{D̄(D̄ − p p_γ) | γ} = p² + p(1−p)/γ − p² p_γ.
    let kernel = |g: usize| p * p + p * (1.0 - p) / g as f64 - p * p * p_gamma;
    let num = pos
        .mean_of(|g| g as f64 * spec.lambda_se[&g] * kernel(g))
        .expect("non-empty");
    let den = pos.mean_of(kernel).expect("non-empty");

    Ok(DbarStarCoefficients {
        eta_d,
        bias: Some(bias),
        weighted: Some(num / den),
    })
}

/// Every population quantity for one design, degree distribution and `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub p: f64,
    pub p_gamma: f64,
    pub alpha_d: f64,
    pub alpha_t: Option<f64>,
    pub beta_d: Option<f64>,
    pub beta_dbar: Option<f64>,
    pub eta_d: f64,
    pub eta_dbar_bias: Option<f64>,
    pub eta_dbar_weighted: Option<f64>,
    pub eta_dbar_total: Option<f64>,
    pub delta_theta00: Option<f64>,
    pub delta_mu_de: Option<f64>,
    pub mean_degree: f64,
    pub mean_inv_degree_positive: Option<f64>,
    /// E(D̄*) = p · p_γ.
    pub e_dbar_star: f64,
    /// Var(D̄*) = p p_γ {p(1 − p_γ) + (1 − p) E(1/γ | γ>0)}.
    pub var_dbar_star: f64,
    /// Cov(D̄*, γ) = {E(γ | γ>0) − E(γ)} p p_γ.
    pub cov_dbar_star_degree: f64,
}

impl OracleReport {
    pub fn compute(spec: &DesignSpec, hist: &DegreeHistogram, p: f64) -> Result<Self> {
        let t = true_t_coefficients(spec, hist, p)?;
        let dbar = match true_dbar_coefficients(spec, hist, p) {
            Ok(c) => Some(c),
            Err(Error::EmptySubsample(_)) => None,
            Err(e) => return Err(e),
        };
        let star = true_dbar_star_coefficients(spec, hist, p)?;
        let deltas = true_effect_deltas(spec, hist)?;
        let summary = hist.summary();
        let p_gamma = summary.p_gamma();
        let var_dbar_star = summary
            .mean_inverse_degree_positive
            .map(|mi| p * p_gamma * (p * (1.0 - p_gamma) + (1.0 - p) * mi))
            .unwrap_or(0.0);
        Ok(OracleReport {
            p,
            p_gamma,
            alpha_d: t.alpha_d,
            alpha_t: t.alpha_t,
            beta_d: dbar.map(|c| c.beta_d),
            beta_dbar: dbar.map(|c| c.beta_dbar),
            eta_d: star.eta_d,
            eta_dbar_bias: star.bias,
            eta_dbar_weighted: star.weighted,
            eta_dbar_total: star.total(),
            delta_theta00: deltas.delta_theta00,
            delta_mu_de: deltas.delta_mu_de,
            mean_degree: summary.mean_degree,
            mean_inv_degree_positive: summary.mean_inverse_degree_positive,
            e_dbar_star: p * p_gamma,
            var_dbar_star,
            cov_dbar_star_degree: crate::exposure::cov_dbar_star_degree_closed_form(&summary, p),
        })
    }

    /// The "true coefficient" reported for `(spec, coef)`: the weighted part
    /// for the D̄*-regression spillover, the identified value otherwise.
    pub fn target(&self, spec: SpecName, coef: &str) -> Option<f64> {
        match (spec, coef) {
            (SpecName::TReg, D) => Some(self.alpha_d),
            (SpecName::TReg, T) => self.alpha_t,
            (SpecName::DbarReg, D) => self.beta_d,
            (SpecName::DbarReg, DBAR) => self.beta_dbar,
            (SpecName::DbarStarReg, D) => Some(self.eta_d),
            (SpecName::DbarStarReg, DBAR_STAR) => self.eta_dbar_weighted,
            _ => None,
        }
    }

    /// The population projection coefficient, i.e. bias included.
    pub fn projection(&self, spec: SpecName, coef: &str) -> Option<f64> {
        match (spec, coef) {
            (SpecName::DbarStarReg, DBAR_STAR) => self.eta_dbar_total,
            _ => self.target(spec, coef),
        }
    }
}

/// Exact moments of D̄* over all treatment vectors and a uniformly drawn unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnumeratedExposureMoments {
    pub e_dbar_star: f64,
    pub var_dbar_star: f64,
    pub cov_dbar_star_degree: f64,
}

/// Visits every treatment vector of an `n`-node graph with its probability.
fn for_each_assignment(n: usize, p: f64, mut f: impl FnMut(&[bool], f64)) {
    let mut d = vec![false; n];
    for mask in 0u64..(1u64 << n) {
        let mut treated = 0;
        for (i, di) in d.iter_mut().enumerate() {
            *di = mask >> i & 1 == 1;
            treated += usize::from(*di);
        }
        let prob = p.powi(treated as i32) * (1.0 - p).powi((n - treated) as i32);
        f(&d, prob);
    }
}

fn check_enumerable(net: &Network) -> Result<()> {
    if net.n() > MAX_ENUMERATION_NODES {
        return Err(Error::TooLarge {
            n: net.n(),
            max: MAX_ENUMERATION_NODES,
        });
    }
    if net.n() == 0 {
        return Err(Error::Parameter("enumeration needs at least one node".into()));
    }
    Ok(())
}

fn treated_neighbors(net: &Network, d: &[bool], i: usize) -> usize {
    net.neighbors(i).iter().filter(|&&j| d[j]).count()
}

pub fn enumerate_exposure_moments(net: &Network, p: f64) -> Result<EnumeratedExposureMoments> {
    check_p(p)?;
    check_enumerable(net)?;
    let n = net.n();
    let unit = 1.0 / n as f64;
    let (mut m1, mut m2, mut mg, mut mxg) = (0.0, 0.0, 0.0, 0.0);
    for_each_assignment(n, p, |d, prob| {
        for i in 0..n {
            let g = net.degree(i);
            let x = if g == 0 {
                0.0
            } else {
                treated_neighbors(net, d, i) as f64 / g as f64
            };
            let w = prob * unit;
            m1 += w * x;
            m2 += w * x * x;
            mg += w * g as f64;
            mxg += w * x * g as f64;
        }
    });
    Ok(EnumeratedExposureMoments {
        e_dbar_star: m1,
        var_dbar_star: m2 - m1 * m1,
        cov_dbar_star_degree: mxg - m1 * mg,
    })
}

/// Population OLS coefficients of specification `which`, by enumerating all
/// `2ⁿ` treatment vectors and drawing the unit uniformly (uniformly among
/// non-isolated units for `dbar_reg`). Outcomes are the noise-free part of the
/// design; noise does not affect the projection.
pub fn enumeration_population_ols(
    net: &Network,
    spec: &DesignSpec,
    p: f64,
    which: SpecName,
) -> Result<Vec<(String, f64)>> {
    check_p(p)?;
    check_enumerable(net)?;
    spec.ensure_covers(&net.degree_histogram())?;
    let names: &[&str] = match which {
        SpecName::TReg => &[INTERCEPT, D, T, GAMMA],
        SpecName::DbarReg => &[INTERCEPT, D, DBAR],
        SpecName::DbarStarReg => &[INTERCEPT, D, DBAR_STAR],
        SpecName::Stratified => {
            return Err(Error::Parameter(
                "enumeration covers t_reg, dbar_reg and dbar_star_reg".into(),
            ))
        }
    };
    let units: Vec<usize> = (0..net.n())
        .filter(|&i| which != SpecName::DbarReg || net.degree(i) > 0)
        .collect();
    if units.is_empty() {
        return Err(Error::EmptySubsample("no node with positive degree".into()));
    }
    let k = names.len();
    let unit_w = 1.0 / units.len() as f64;
    let mut moment = vec![vec![0.0; k]; k];
    let mut cross = vec![0.0; k];
    let mut w = vec![0.0; k];
    for_each_assignment(net.n(), p, |d, prob| {
        for &i in &units {
            let g = net.degree(i);
            let t = treated_neighbors(net, d, i) as f64;
            let di = if d[i] { 1.0 } else { 0.0 };
            let frac = if g == 0 { 0.0 } else { t / g as f64 };
            w[0] = 1.0;
            w[1] = di;
            match which {
                SpecName::TReg => {
                    w[2] = t;
                    w[3] = g as f64;
                }
                _ => w[2] = frac,
            }
            let e = spec.at(g).expect("coverage checked");
            let y = e.theta00 + e.mu_de * di + e.lambda_se * t;
            let weight = prob * unit_w;
            for a in 0..k {
                cross[a] += weight * w[a] * y;
                for b in 0..k {
                    moment[a][b] += weight * w[a] * w[b];
                }
            }
        }
    });
    let coef = solve_spd(&moment, &cross, names)?;
    Ok(names.iter().map(|s| s.to_string()).zip(coef).collect())
}

/// Cholesky solve of a symmetric positive semi-definite system; a pivot below
/// 1e-10 of its diagonal entry marks that column as collinear.
fn solve_spd(a: &[Vec<f64>], b: &[f64], names: &[&str]) -> Result<Vec<f64>> {
    let k = b.len();
    let mut l = vec![vec![0.0; k]; k];
    let mut collinear = Vec::new();
    for j in 0..k {
        let s: f64 = (0..j).map(|m| l[j][m] * l[j][m]).sum();
        let pivot = a[j][j] - s;
        if !(pivot > 1e-10 * a[j][j].abs()) || a[j][j] == 0.0 {
            collinear.push(names[j].to_string());
            continue;
        }
        l[j][j] = pivot.sqrt();
        for i in (j + 1)..k {
            let s: f64 = (0..j).map(|m| l[i][m] * l[j][m]).sum();
            l[i][j] = (a[i][j] - s) / l[j][j];
        }
    }
    if !collinear.is_empty() {
        return Err(Error::Singular { columns: collinear });
    }
    let mut z = vec![0.0; k];
    for i in 0..k {
        let s: f64 = (0..i).map(|m| l[i][m] * z[m]).sum();
        z[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = ((i + 1)..k).map(|m| l[m][i] * x[m]).sum();
        x[i] = (z[i] - s) / l[i][i];
    }
    Ok(x)
}
