//! Least squares and the spillover regressions.
//!
//! [`ols`] solves through a Householder QR factorisation and reports
//! homoskedastic standard errors. The specification helpers build the design
//! matrices from an [`ExposureProfile`]:
//!
//! | spec            | sample      | regressors         |
//! |-----------------|-------------|--------------------|
//! | `t_reg`         | all units   | 1, D, T, γ         |
//! | `dbar_reg`      | γ > 0       | 1, D, D̄            |
//! | `dbar_star_reg` | all units   | 1, D, D̄* (0 if γ=0) |
//! | `stratified`    | γ = g       | 1, D, T (1, D at g=0) |

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::ExposureProfile;

pub const INTERCEPT: &str = "intercept";
pub const D: &str = "d";
pub const T: &str = "t";
pub const GAMMA: &str = "gamma";
pub const DBAR: &str = "dbar";
pub const DBAR_STAR: &str = "dbar_star";

/// Two-sided 95% normal critical value.
pub const Z95: f64 = 1.96;

/// Relative threshold below which a pivot marks a column as collinear.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecName {
    TReg,
    DbarReg,
    DbarStarReg,
    Stratified,
}

impl SpecName {
    pub const MAIN: [SpecName; 3] = [SpecName::TReg, SpecName::DbarReg, SpecName::DbarStarReg];

    pub fn as_str(&self) -> &'static str {
        match self {
            SpecName::TReg => "t_reg",
            SpecName::DbarReg => "dbar_reg",
            SpecName::DbarStarReg => "dbar_star_reg",
            SpecName::Stratified => "stratified",
        }
    }

    /// Name of the spillover coefficient in this specification.
    pub fn spillover_coef(&self) -> &'static str {
        match self {
            SpecName::TReg | SpecName::Stratified => T,
            SpecName::DbarReg => DBAR,
            SpecName::DbarStarReg => DBAR_STAR,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            SpecName::TReg,
            SpecName::DbarReg,
            SpecName::DbarStarReg,
            SpecName::Stratified,
        ]
        .into_iter()
        .find(|x| x.as_str() == s)
    }
}

impl fmt::Display for SpecName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Named columns of a design matrix, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl DesignMatrix {
    /// Starts a matrix with a constant column of length `n`.
    pub fn with_intercept(n: usize) -> Self {
        DesignMatrix {
            names: vec![INTERCEPT.to_string()],
            columns: vec![vec![1.0; n]],
        }
    }

    pub fn push(&mut self, name: &str, column: Vec<f64>) -> &mut Self {
        assert_eq!(column.len(), self.rows(), "column `{name}` has the wrong length");
        self.names.push(name.to_string());
        self.columns.push(column);
        self
    }

    pub fn rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub spec_name: SpecName,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub se: Vec<f64>,
    pub ci95: Vec<(f64, f64)>,
    pub n_used: usize,
    pub r_squared: f64,
    pub rss: f64,
    /// max_j |X_j' r|, the residual-orthogonality diagnostic.
    pub max_abs_score: f64,
}

impl RegressionFit {
    fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index(name).map(|j| self.coefficients[j])
    }

    pub fn se_of(&self, name: &str) -> Option<f64> {
        self.index(name).map(|j| self.se[j])
    }

    pub fn ci_of(&self, name: &str) -> Option<(f64, f64)> {
        self.index(name).map(|j| self.ci95[j])
    }

    pub fn spillover(&self) -> Option<f64> {
        self.coef(self.spec_name.spillover_coef())
    }

    pub fn direct(&self) -> Option<f64> {
        self.coef(D)
    }
}

/// Ordinary least squares of `y` on the columns of `x`.
///
/// Fails with [`Error::Singular`] naming every column whose residual after
/// projection on the preceding columns is below [`RANK_TOL`] of its norm.
pub fn ols(x: &DesignMatrix, y: &[f64], spec_name: SpecName) -> Result<RegressionFit> {
    let n = x.rows();
    let k = x.cols();
    if y.len() != n {
        return Err(Error::Parameter(format!(
            "outcome has {} rows, design matrix has {n}",
            y.len()
        )));
    }
    if n <= k {
        return Err(Error::Parameter(format!(
            "{spec_name}: {n} observations cannot fit {k} coefficients"
        )));
    }

    // Householder QR. `a` holds the reflected columns, `v[j]` the reflector
    // for pivot row j.
    let mut a: Vec<Vec<f64>> = x.columns.clone();
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k);
    let mut collinear = Vec::new();
    for j in 0..k {
        let col_norm = norm(&x.columns[j]);
        let col = &mut a[j];
        for (r, (v, beta)) in reflectors.iter().enumerate() {
            apply_reflector(v, *beta, &mut col[r..]);
        }
        let r = reflectors.len();
        let tail_norm = norm(&col[r..]);
        if col_norm == 0.0 || tail_norm <= RANK_TOL * col_norm {
            collinear.push(x.names[j].clone());
            continue;
        }
        let alpha = if col[r] > 0.0 { -tail_norm } else { tail_norm };
        let mut v = col[r..].to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|t| t * t).sum();
        let beta = 2.0 / vtv;
        col[r] = alpha;
        for c in &mut col[r + 1..] {
            *c = 0.0;
        }
        reflectors.push((v, beta));
    }
    if !collinear.is_empty() {
        return Err(Error::Singular { columns: collinear });
    }

    // R is the leading k x k block of `a`.
    let r_at = |i: usize, j: usize| a[j][i];
    let mut qty = y.to_vec();
    for (r, (v, beta)) in reflectors.iter().enumerate() {
        apply_reflector(v, *beta, &mut qty[r..]);
    }
    let mut coef = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = qty[i];
        for j in (i + 1)..k {
            s -= r_at(i, j) * coef[j];
        }
        coef[i] = s / r_at(i, i);
    }

    // Rinv upper triangular; diag((X'X)^-1) = row sums of squares of Rinv.
    let mut rinv = vec![vec![0.0; k]; k];
    for j in 0..k {
        rinv[j][j] = 1.0 / r_at(j, j);
        for i in (0..j).rev() {
            let mut s = 0.0;
            for m in (i + 1)..=j {
                s += r_at(i, m) * rinv[m][j];
            }
            rinv[i][j] = -s / r_at(i, i);
        }
    }

    let mut resid = y.to_vec();
    for (j, col) in x.columns.iter().enumerate() {
        for (ri, xi) in resid.iter_mut().zip(col) {
            *ri -= coef[j] * xi;
        }
    }
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let sigma2 = rss / (n - k) as f64;
    let se: Vec<f64> = (0..k)
        .map(|i| (sigma2 * rinv[i].iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();
    let ci95 = coef
        .iter()
        .zip(&se)
        .map(|(b, s)| (b - Z95 * s, b + Z95 * s))
        .collect();
    let max_abs_score = x
        .columns
        .iter()
        .map(|col| col.iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let ybar = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - ybar) * (v - ybar)).sum();
    let r_squared = if tss > 0.0 {
        1.0 - rss / tss
    } else if rss == 0.0 {
        1.0
    } else {
        0.0
    };

    Ok(RegressionFit {
        spec_name,
        names: x.names.clone(),
        coefficients: coef,
        se,
        ci95,
        n_used: n,
        r_squared,
        rss,
        max_abs_score,
    })
}

fn norm(v: &[f64]) -> f64 {
    // Scaled to avoid overflow on large entries.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>().sqrt()
}

fn apply_reflector(v: &[f64], beta: f64, x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let s = beta * dot;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= s * vi;
    }
}

fn indicator(d: &[bool]) -> impl Iterator<Item = f64> + '_ {
    d.iter().map(|&x| if x { 1.0 } else { 0.0 })
}

fn check_outcome_len(profile: &ExposureProfile, y: &[f64]) -> Result<()> {
    if profile.n() != y.len() {
        return Err(Error::Parameter(format!(
            "outcome has {} entries, exposure profile has {}",
            y.len(),
            profile.n()
        )));
    }
    Ok(())
}

/// Y on (1, D, T, γ) over all units.
pub fn t_regression(profile: &ExposureProfile, y: &[f64]) -> Result<RegressionFit> {
    check_outcome_len(profile, y)?;
    if profile.n() < 5 {
        return Err(Error::Parameter("t_reg needs at least 5 units".into()));
    }
    let mut x = DesignMatrix::with_intercept(profile.n());
    x.push(D, indicator(&profile.d).collect())
        .push(T, profile.t.iter().map(|&t| t as f64).collect())
        .push(GAMMA, profile.gamma.iter().map(|&g| g as f64).collect());
    ols(&x, y, SpecName::TReg)
}

/// Y on (1, D, D̄) over non-isolated units only.
pub fn dbar_regression(profile: &ExposureProfile, y: &[f64]) -> Result<RegressionFit> {
    check_outcome_len(profile, y)?;
    let keep: Vec<usize> = (0..profile.n()).filter(|&i| profile.dbar[i].is_some()).collect();
    if keep.len() < 4 {
        return Err(Error::EmptySubsample(format!(
            "dbar_reg needs at least 4 non-isolated units, found {}",
            keep.len()
        )));
    }
    let mut x = DesignMatrix::with_intercept(keep.len());
    x.push(D, keep.iter().map(|&i| if profile.d[i] { 1.0 } else { 0.0 }).collect())
        .push(DBAR, keep.iter().filter_map(|&i| profile.dbar[i]).collect());
    let ys: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
    ols(&x, &ys, SpecName::DbarReg)
}

/// Y on (1, D, D̄*) over all units, with D̄* = 0 on isolated units.
pub fn dbar_star_regression(profile: &ExposureProfile, y: &[f64]) -> Result<RegressionFit> {
    check_outcome_len(profile, y)?;
    if profile.n() < 4 {
        return Err(Error::Parameter("dbar_star_reg needs at least 4 units".into()));
    }
    let mut x = DesignMatrix::with_intercept(profile.n());
    x.push(D, indicator(&profile.d).collect())
        .push(DBAR_STAR, profile.dbar_star.clone());
    ols(&x, y, SpecName::DbarStarReg)
}

/// Degree-by-degree fits. Strata that cannot be fit are listed in `skipped`
/// with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedFits {
    pub fits: BTreeMap<usize, RegressionFit>,
    pub skipped: BTreeMap<usize, String>,
}

/// Within each degree stratum γ = g, Y on (1, D, T); on g = 0 only (1, D),
/// since spillovers are not identified for isolated units.
pub fn stratified_regression(profile: &ExposureProfile, y: &[f64]) -> Result<StratifiedFits> {
    check_outcome_len(profile, y)?;
    let mut strata: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..profile.n() {
        strata.entry(profile.gamma[i]).or_default().push(i);
    }
    let mut out = StratifiedFits {
        fits: BTreeMap::new(),
        skipped: BTreeMap::new(),
    };
    for (g, idx) in strata {
        let k = if g == 0 { 2 } else { 3 };
        let treated = idx.iter().filter(|&&i| profile.d[i]).count();
        let reason = if treated == 0 || treated == idx.len() {
            Some("no treatment variation".to_string())
        } else if idx.len() < k + 2 {
            Some(format!("too few units ({} < {})", idx.len(), k + 2))
        } else if g > 0 && idx.iter().all(|&i| profile.t[i] == profile.t[idx[0]]) {
            Some("no neighbor-treatment variation".to_string())
        } else {
            None
        };
        if let Some(reason) = reason {
            out.skipped.insert(g, reason);
            continue;
        }
        let mut x = DesignMatrix::with_intercept(idx.len());
        x.push(D, idx.iter().map(|&i| if profile.d[i] { 1.0 } else { 0.0 }).collect());
        if g > 0 {
            x.push(T, idx.iter().map(|&i| profile.t[i] as f64).collect());
        }
        let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        match ols(&x, &ys, SpecName::Stratified) {
            Ok(fit) => {
                out.fits.insert(g, fit);
            }
            Err(Error::Singular { columns }) => {
                out.skipped
                    .insert(g, format!("singular design ({})", columns.join(", ")));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
