//! Distributional checks on the generators and exposure mapping, and the
//! population values quoted for the calibrated simulation.

use spillover_core::dgp::BuiltinDesign;
use spillover_core::estimators::stratified_regression;
use spillover_core::exposure::{ExposureProfile, TreatmentVector};
use spillover_core::graph::{DegreeHistogram, ErdosRenyi, WattsStrogatz};
use spillover_core::oracle::{enumerate_exposure_moments, OracleReport};

#[test]
fn erdos_renyi_isolated_share_is_poisson() {
    let seeds = 200;
    let total: f64 = (0..seeds)
        .map(|s| {
            ErdosRenyi { n: 1000, mean_degree: 2.0 }
                .generate(s)
                .unwrap()
                .summarize()
                .isolated_fraction
        })
        .sum();
    let mean = total / seeds as f64;
    // Exact value (1 - 2/999)^999 is within 4e-4 of e^-2.
    assert!((mean - (-2.0f64).exp()).abs() < 0.01, "{mean}");
}

#[test]
fn treated_neighbor_count_has_mean_gamma_p() {
    let net = WattsStrogatz::calibrated(2000).generate(5).unwrap();
    let p = 0.3;
    let reps = 400;
    let mut sum_t = 0.0;
    let mut sum_gp = 0.0;
    for r in 0..reps {
        let tr = TreatmentVector::assign_bernoulli(net.n(), p, 100 + r).unwrap();
        let prof = ExposureProfile::compute(&net, &tr).unwrap();
        for i in 0..net.n() {
            sum_t += prof.t[i] as f64;
            sum_gp += prof.gamma[i] as f64 * p;
        }
    }
    let cells = (reps as usize * net.n()) as f64;
    assert!((sum_t / cells - sum_gp / cells).abs() < 0.01);
}

#[test]
fn enumeration_confirms_dbar_star_moments() {
    for (seed, n) in [(1u64, 6usize), (2, 8), (3, 10)] {
        let net = ErdosRenyi { n, mean_degree: 1.5 }.generate(seed).unwrap();
        let hist = net.degree_histogram();
        let spec = BuiltinDesign::new(3, 0.0).unwrap().expand(hist.max_degree());
        for p in [0.2, 0.5, 0.8] {
            let o = OracleReport::compute(&spec, &hist, p).unwrap();
            let e = enumerate_exposure_moments(&net, p).unwrap();
            assert!((o.e_dbar_star - e.e_dbar_star).abs() < 1e-12);
            assert!((o.var_dbar_star - e.var_dbar_star).abs() < 1e-12);
            assert!((o.cov_dbar_star_degree - e.cov_dbar_star_degree).abs() < 1e-12);
        }
    }
}

/// Degree histogram pooled over many calibrated graphs.
fn calibrated_histogram() -> DegreeHistogram {
    let mut degrees = Vec::new();
    for s in 0..50 {
        degrees.extend(WattsStrogatz::calibrated(1000).generate(s).unwrap().degrees());
    }
    DegreeHistogram::from_degrees(degrees)
}

#[test]
fn calibrated_generator_matches_reported_network() {
    let summary = calibrated_histogram().summary();
    assert!((summary.isolated_fraction - 0.10).abs() < 0.02, "{summary:?}");
    assert!((summary.mean_degree - 2.0).abs() < 0.1, "{summary:?}");
}

#[test]
fn calibrated_population_values() {
    let hist = calibrated_histogram();
    let oracle = |id, c| {
        let spec = BuiltinDesign::new(id, c).unwrap().expand(hist.max_degree());
        OracleReport::compute(&spec, &hist, 0.5).unwrap()
    };
    let d1 = oracle(1, 0.0);
    assert!((d1.eta_dbar_bias.unwrap() - 0.704).abs() < 0.03);
    assert_eq!(d1.eta_dbar_weighted, Some(0.0));
    assert!((oracle(2, 0.0).eta_dbar_bias.unwrap() - 0.314).abs() < 0.03);
    let d1n = oracle(1, -0.5);
    assert!((d1n.alpha_t.unwrap() + 0.146).abs() < 0.01);
    assert!((d1n.beta_dbar.unwrap() + 0.298).abs() < 0.01);
    assert!((d1n.eta_dbar_total.unwrap() - 0.401).abs() < 0.03);
    let d3 = oracle(3, -0.5);
    assert_eq!(d3.eta_dbar_bias, Some(0.0));
    assert!((d3.eta_dbar_total.unwrap() - d3.eta_dbar_weighted.unwrap()).abs() < 1e-15);
}

#[test]
fn stratified_estimates_center_on_truth() {
    let reps = 200;
    let mut sum = 0.0;
    let mut count = 0.0;
    let design = BuiltinDesign::new(1, -0.5).unwrap();
    for r in 0..reps {
        let net = WattsStrogatz::calibrated(1000).generate(r).unwrap();
        let tr = TreatmentVector::assign_bernoulli(1000, 0.5, 10_000 + r).unwrap();
        let prof = ExposureProfile::compute(&net, &tr).unwrap();
        let y = design.expand(net.summarize().max_degree).outcomes_from_profile(&prof, 20_000 + r).unwrap();
        if let Some(fit) = stratified_regression(&prof, &y).unwrap().fits.get(&2) {
            sum += fit.coef("t").unwrap();
            count += 1.0;
        }
    }
    // λ(2) = -0.5 / 3
    assert!((sum / count + 0.5 / 3.0).abs() < 0.02, "{}", sum / count);
}
