//! Diagnosing an observed network experiment for isolated-node imputation bias.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    dbar_regression, dbar_star_regression, stratified_regression, t_regression, RegressionFit,
    StratifiedFits, D, INTERCEPT,
};
use crate::exposure::{cov_dbar_star_degree_closed_form, ExposureDiagnostics, ExposureProfile, TreatmentVector};
use crate::graph::{DegreeSummary, Network};
use crate::oracle::dbar_star_bias;

/// Column names of the unit-level data file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetColumns {
    pub id: String,
    pub treatment: String,
    pub outcome: String,
}

impl Default for DatasetColumns {
    fn default() -> Self {
        DatasetColumns {
            id: "id".into(),
            treatment: "treatment".into(),
            outcome: "outcome".into(),
        }
    }
}

/// Treatment and outcome indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub treatment: Vec<bool>,
    pub outcome: Vec<f64>,
}

impl Dataset {
    /// Reads a CSV with one row per unit. Ids must be exactly `0..rows`.
    pub fn read_csv<R: Read>(reader: R, cols: &DatasetColumns) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::ingestion(None, format!("data file lacks column `{name}`")))
        };
        let (ci, ct, cy) = (find(&cols.id)?, find(&cols.treatment)?, find(&cols.outcome)?);
        let mut rows: Vec<(usize, bool, f64)> = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |c: usize| record.get(c).unwrap_or("");
            let id: usize = field(ci)
                .parse()
                .map_err(|_| Error::ingestion(row, format!("bad unit id `{}`", field(ci))))?;
            let d = match field(ct) {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::ingestion(
                        row,
                        format!("treatment must be 0 or 1, found `{other}`"),
                    ))
                }
            };
            let y = field(cy)
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::ingestion(row, format!("bad outcome `{}`", field(cy))))?;
            rows.push((id, d, y));
        }
        let n = rows.len();
        let mut treatment = vec![None; n];
        let mut outcome = vec![0.0; n];
        for (row, &(id, d, y)) in rows.iter().enumerate() {
            if id >= n {
                return Err(Error::ingestion(
                    row,
                    format!("unit id {id} outside 0..{n}; ids must be 0-based and contiguous"),
                ));
            }
            if treatment[id].is_some() {
                return Err(Error::ingestion(row, format!("unit id {id} appears twice")));
            }
            treatment[id] = Some(d);
            outcome[id] = y;
        }
        Ok(Dataset {
            treatment: treatment.into_iter().map(|d| d.expect("ids are a permutation")).collect(),
            outcome,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["id", "treatment", "outcome"])?;
        for (i, (&d, &y)) in self.treatment.iter().zip(&self.outcome).enumerate() {
            wtr.write_record([i.to_string(), u8::from(d).to_string(), y.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.outcome.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcome.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub summary: DegreeSummary,
    pub treated_share: f64,
    pub diagnostics: ExposureDiagnostics,
    /// Closed-form Cov(D̄*, γ) with the sample treated share plugged in.
    pub cov_closed_form: f64,
    pub t_fit: Option<RegressionFit>,
    pub dbar_fit: Option<RegressionFit>,
    pub dbar_star_fit: Option<RegressionFit>,
    /// Specifications that could not be fit, with the reason.
    pub failed_fits: BTreeMap<String, String>,
    pub stratified: StratifiedFits,
    pub delta_theta00_hat: Option<f64>,
    pub delta_mu_de_hat: Option<f64>,
    /// Isolation bias implied by the plug-in gaps.
    pub implied_bias: Option<f64>,
    pub warning: Option<String>,
}

/// Audits a dataset against its network. Node `i` of `net` is unit id `i`.
pub fn audit(net: &Network, data: &Dataset) -> Result<AuditReport> {
    if data.len() != net.n() {
        return Err(Error::ingestion(
            None,
            format!(
                "data has {} units but the edge list spans {} nodes",
                data.len(),
                net.n()
            ),
        ));
    }
    let share = data.treatment.iter().filter(|&&d| d).count() as f64 / data.len().max(1) as f64;
    if !(share > 0.0 && share < 1.0) {
        return Err(Error::ingestion(None, "treatment has no variation"));
    }
    let tr = TreatmentVector::from_indicators(data.treatment.clone(), share)?;
    let profile = ExposureProfile::compute(net, &tr)?;
    let summary = net.summarize();
    let y = &data.outcome;

    let mut failed = BTreeMap::new();
    let mut keep = |name: &str, r: Result<RegressionFit>| match r {
        Ok(fit) => Some(fit),
        Err(e) => {
            failed.insert(name.to_string(), e.to_string());
            None
        }
    };
    let t_fit = keep("t_reg", t_regression(&profile, y));
    let dbar_fit = keep("dbar_reg", dbar_regression(&profile, y));
    let dbar_star_fit = keep("dbar_star_reg", dbar_star_regression(&profile, y));
    let stratified = stratified_regression(&profile, y)?;

    // Plug-in gaps from the degree strata: θ̂(γ) and μ̂(γ) are the stratum
    // intercept and D slope, pooled over positive strata by stratum size.
    let (mut delta_theta00_hat, mut delta_mu_de_hat) = (None, None);
    if let Some(iso) = stratified.fits.get(&0) {
        let (mut w, mut th, mut mu) = (0.0, 0.0, 0.0);
        for (&g, fit) in stratified.fits.range(1..) {
            let size = profile.gamma.iter().filter(|&&x| x == g).count() as f64;
            w += size;
            th += size * fit.coef(INTERCEPT).expect("intercept");
            mu += size * fit.coef(D).expect("direct");
        }
        if w > 0.0 {
            delta_theta00_hat = Some(th / w - iso.coef(INTERCEPT).expect("intercept"));
            delta_mu_de_hat = Some(mu / w - iso.coef(D).expect("direct"));
        }
    }
    let implied_bias = match (delta_theta00_hat, delta_mu_de_hat, summary.mean_inverse_degree_positive) {
        (Some(dt), Some(dm), Some(mi)) => Some(dbar_star_bias(dt, dm, share, summary.p_gamma(), mi)),
        _ => None,
    };

    let warning = match (&dbar_fit, &dbar_star_fit) {
        (Some(b), Some(s)) if summary.isolated_fraction > 0.0 => {
            let (bb, bs) = (b.spillover().unwrap(), s.spillover().unwrap());
            let (sb, ss) = (b.se[2], s.se[2]);
            let combined = (sb * sb + ss * ss).sqrt();
            ((bb - bs).abs() > 2.0 * combined).then(|| {
                format!(
                    "{:.1}% of units are isolated and the zero-imputed spillover estimate ({bs:.4}) \
                     differs from the non-isolated subsample estimate ({bb:.4}) by more than two \
                     combined standard errors ({:.4}); the imputed regression is likely biased",
                    100.0 * summary.isolated_fraction,
                    2.0 * combined
                )
            })
        }
        _ => None,
    };

    Ok(AuditReport {
        cov_closed_form: cov_dbar_star_degree_closed_form(&summary, share),
        diagnostics: profile.diagnostics(),
        summary,
        treated_share: share,
        t_fit,
        dbar_fit,
        dbar_star_fit,
        failed_fits: failed,
        stratified,
        delta_theta00_hat,
        delta_mu_de_hat,
        implied_bias,
        warning,
    })
}
