//! Degree-indexed outcome designs.
//!
//! Outcomes follow the partially linear form
//! `Y = θ⁰⁰(γ) + μᵈᵉ(γ)·D + λˢᵉ(γ)·T + ε`, where the three degree functions
//! are the baseline, the direct effect and the per-neighbor spillover.

use std::collections::BTreeMap;
use std::io::Read;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exposure::{ExposureProfile, TreatmentVector};
use crate::graph::{DegreeHistogram, Network};
use crate::rng::rng_from_seed;

/// Degree functions tabulated over a set of degrees, plus the noise scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub theta00: BTreeMap<usize, f64>,
    pub mu_de: BTreeMap<usize, f64>,
    pub lambda_se: BTreeMap<usize, f64>,
    pub noise_sd: f64,
}

/// Values of the three degree functions at one degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegreeEffects {
    pub theta00: f64,
    pub mu_de: f64,
    pub lambda_se: f64,
}

impl DesignSpec {
    /// Tabulates the given functions on `degrees`.
    pub fn tabulate(
        degrees: impl IntoIterator<Item = usize>,
        theta00: impl Fn(usize) -> f64,
        mu_de: impl Fn(usize) -> f64,
        lambda_se: impl Fn(usize) -> f64,
        noise_sd: f64,
    ) -> Result<Self> {
        if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
            return Err(Error::Parameter(format!("noise_sd = {noise_sd} must be >= 0")));
        }
        let mut spec = DesignSpec {
            theta00: BTreeMap::new(),
            mu_de: BTreeMap::new(),
            lambda_se: BTreeMap::new(),
            noise_sd,
        };
        for g in degrees {
            spec.theta00.insert(g, theta00(g));
            spec.mu_de.insert(g, mu_de(g));
            spec.lambda_se.insert(g, lambda_se(g));
        }
        Ok(spec)
    }

    pub fn at(&self, degree: usize) -> Option<DegreeEffects> {
        Some(DegreeEffects {
            theta00: *self.theta00.get(&degree)?,
            mu_de: *self.mu_de.get(&degree)?,
            lambda_se: *self.lambda_se.get(&degree)?,
        })
    }

    fn require(&self, degree: usize) -> Result<DegreeEffects> {
        self.at(degree)
            .ok_or_else(|| Error::Config(format!("design does not define degree {degree}")))
    }

    /// Fails unless every degree in `hist` is tabulated.
    pub fn ensure_covers(&self, hist: &DegreeHistogram) -> Result<()> {
        for (g, _) in hist.iter() {
            self.require(g)?;
        }
        Ok(())
    }

    /// Reads a `degree,theta00,mu_de,lambda_se` CSV.
    pub fn read_csv<R: Read>(reader: R, noise_sd: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::ingestion(None, format!("design file lacks column `{name}`")))
        };
        let (cd, ct, cm, cl) = (col("degree")?, col("theta00")?, col("mu_de")?, col("lambda_se")?);
        let mut rows = BTreeMap::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let field = |c: usize| record.get(c).unwrap_or("");
            let degree: usize = field(cd)
                .parse()
                .map_err(|_| Error::ingestion(row, format!("bad degree `{}`", field(cd))))?;
            let num = |c: usize| -> Result<f64> {
                field(c)
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::ingestion(row, format!("bad number `{}`", field(c))))
            };
            let values = (num(ct)?, num(cm)?, num(cl)?);
            if rows.insert(degree, values).is_some() {
                return Err(Error::ingestion(row, format!("degree {degree} listed twice")));
            }
        }
        Self::tabulate(
            rows.keys().copied().collect::<Vec<_>>(),
            |g| rows[&g].0,
            |g| rows[&g].1,
            |g| rows[&g].2,
            noise_sd,
        )
    }

    /// Y minus noise, per unit.
    pub fn deterministic_outcomes(&self, profile: &ExposureProfile) -> Result<Vec<f64>> {
        (0..profile.n())
            .map(|i| {
                let e = self.require(profile.gamma[i])?;
                let d = if profile.d[i] { 1.0 } else { 0.0 };
                Ok(e.theta00 + e.mu_de * d + e.lambda_se * profile.t[i] as f64)
            })
            .collect()
    }

    /// Deterministic part plus iid Normal(0, noise_sd²) errors drawn from `seed`.
    pub fn outcomes_from_profile(&self, profile: &ExposureProfile, seed: u64) -> Result<Vec<f64>> {
        let mut y = self.deterministic_outcomes(profile)?;
        if self.noise_sd > 0.0 {
            let mut rng = rng_from_seed(seed);
            for yi in &mut y {
                let z: f64 = StandardNormal.sample(&mut rng);
                *yi += self.noise_sd * z;
            }
        }
        Ok(y)
    }
}

/// Simulates outcomes on `net` under treatment `tr`.
pub fn simulate_outcomes(
    net: &Network,
    tr: &TreatmentVector,
    spec: &DesignSpec,
    seed: u64,
) -> Result<Vec<f64>> {
    let profile = ExposureProfile::compute(net, tr)?;
    spec.outcomes_from_profile(&profile, seed)
}

/// The three benchmark designs, each with spillover `c / (1 + γ)`, unit
/// direct effect and standard normal noise:
///
/// 1. baseline `1 + γ`
/// 2. baseline `1 + 1{γ > 0}`
/// 3. baseline `1`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuiltinDesign {
    id: u8,
    pub c: f64,
}

impl BuiltinDesign {
    pub fn new(id: u8, c: f64) -> Result<Self> {
        if !(1..=3).contains(&id) {
            return Err(Error::Parameter(format!("unknown design id {id}; expected 1, 2 or 3")));
        }
        if !c.is_finite() {
            return Err(Error::Parameter(format!("spillover scale c = {c} must be finite")));
        }
        Ok(BuiltinDesign { id, c })
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn theta00(&self, degree: usize) -> f64 {
        match self.id {
            1 => 1.0 + degree as f64,
            2 => 1.0 + if degree > 0 { 1.0 } else { 0.0 },
            _ => 1.0,
        }
    }

    pub fn mu_de(&self, _degree: usize) -> f64 {
        1.0
    }

    pub fn lambda_se(&self, degree: usize) -> f64 {
        self.c / (1.0 + degree as f64)
    }

    pub fn noise_sd(&self) -> f64 {
        1.0
    }

    /// Tabulates the design on degrees `0..=max_degree`.
    pub fn expand(&self, max_degree: usize) -> DesignSpec {
        DesignSpec::tabulate(
            0..=max_degree,
            |g| self.theta00(g),
            |g| self.mu_de(g),
            |g| self.lambda_se(g),
            self.noise_sd(),
        )
        .expect("builtin noise scale is valid")
    }
}

/// Either a builtin design or a user-supplied table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    Builtin(BuiltinDesign),
    Custom(DesignSpec),
}

impl Design {
    /// A design table covering every degree in `hist`.
    pub fn spec_for(&self, hist: &DegreeHistogram) -> Result<DesignSpec> {
        match self {
            Design::Builtin(b) => Ok(b.expand(hist.max_degree())),
            Design::Custom(spec) => {
                spec.ensure_covers(hist)?;
                Ok(spec.clone())
            }
        }
    }
}

/// Baseline and direct-effect gaps between non-isolated and isolated units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectDeltas {
    /// E{θ⁰⁰(γ) | γ>0} − θ⁰⁰(0).
    pub delta_theta00: Option<f64>,
    /// E{μᵈᵉ(γ) | γ>0} − μᵈᵉ(0).
    pub delta_mu_de: Option<f64>,
}

/// Gaps evaluated on the empirical degree distribution. Both are `None`
/// unless `hist` has isolated and non-isolated mass.
pub fn true_effect_deltas(spec: &DesignSpec, hist: &DegreeHistogram) -> Result<EffectDeltas> {
    spec.ensure_covers(hist)?;
    if hist.count(0) == 0 || hist.positive_count() == 0 {
        return Ok(EffectDeltas {
            delta_theta00: None,
            delta_mu_de: None,
        });
    }
    let at0 = spec.require(0)?;
    let pos = hist.positive_part();
    let theta_pos = pos.mean_of(|g| spec.theta00[&g]).expect("non-empty");
    let mu_pos = pos.mean_of(|g| spec.mu_de[&g]).expect("non-empty");
    Ok(EffectDeltas {
        delta_theta00: Some(theta_pos - at0.theta00),
        delta_mu_de: Some(mu_pos - at0.mu_de),
    })
}
