//! Plain-text and CSV renderings of command results.

use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;
use spillover_core::audit::AuditReport;
use spillover_core::dgp::Design;
use spillover_core::estimators::RegressionFit;
use spillover_core::exposure::ExposureDiagnostics;
use spillover_core::graph::DegreeSummary;
use spillover_core::montecarlo::AggregateReport;
use spillover_core::oracle::OracleReport;

const UNDEFINED: &str = "undefined";

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| format!("{x:.prec$}"))
}

fn design_name(d: &Design) -> String {
    match d {
        Design::Builtin(b) => format!("design {}, c = {}", b.id(), b.c),
        Design::Custom(_) => "custom design".into(),
    }
}

pub fn simulation_table(reports: &[AggregateReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let g = &r.graph_stats;
        let _ = writeln!(
            s,
            "{}  (reps {}, excluded {}, isolated {:.3}, mean degree {:.2})",
            design_name(&r.config.design),
            r.reps_used,
            r.n_excluded,
            g.mean_isolated_fraction,
            g.mean_degree
        );
        let _ = writeln!(
            s,
            "  {:<14} {:<10} {:>9} {:>9} {:>9} {:>20} {:>9}",
            "spec", "coef", "estimate", "true", "bias", "95% CI", "coverage"
        );
        for row in &r.rows {
            let _ = writeln!(
                s,
                "  {:<14} {:<10} {:>9.4} {:>9.4} {:>9.4} {:>20} {:>9.3}",
                row.spec.as_str(),
                row.coef.as_str(),
                row.mean_estimate,
                row.true_coef,
                row.bias,
                format!("({:.3}, {:.3})", row.ci95.0, row.ci95.1),
                row.coverage
            );
        }
    }
    s
}

fn summary_lines(s: &mut String, summary: &DegreeSummary) {
    let _ = writeln!(
        s,
        "nodes {}  isolated share {:.4}  mean degree {:.4}  max degree {}",
        summary.n, summary.isolated_fraction, summary.mean_degree, summary.max_degree
    );
    let _ = writeln!(
        s,
        "E(degree | degree>0) {}  E(1/degree | degree>0) {}",
        opt(summary.mean_degree_positive, 4),
        opt(summary.mean_inverse_degree_positive, 4)
    );
}

pub fn scatter_summary(summary: &DegreeSummary, diag: &ExposureDiagnostics) -> String {
    let mut s = String::new();
    summary_lines(&mut s, summary);
    let _ = writeln!(s, "r2(degree, dbar | degree>0)  {}", opt(diag.r2_dbar, 4));
    let _ = writeln!(s, "r2(degree, dbar_star)        {}", opt(diag.r2_dbar_star, 4));
    s
}

pub fn oracle_text(source: &str, summary: &DegreeSummary, rows: &[(Design, OracleReport)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "degree distribution from {source}");
    summary_lines(&mut s, summary);
    for (design, o) in rows {
        let _ = writeln!(s, "\n{}  (p = {})", design_name(design), o.p);
        let _ = writeln!(s, "  t_reg          d {:>10.6}   t         {:>10}", o.alpha_d, opt(o.alpha_t, 6));
        let _ = writeln!(
            s,
            "  dbar_reg       d {:>10}   dbar      {:>10}",
            opt(o.beta_d, 6),
            opt(o.beta_dbar, 6)
        );
        let _ = writeln!(
            s,
            "  dbar_star_reg  d {:>10.6}   dbar_star {:>10}",
            o.eta_d,
            opt(o.eta_dbar_total, 6)
        );
        let _ = writeln!(
            s,
            "  isolation bias {}  + weighted part {}  = {}",
            opt(o.eta_dbar_bias, 6),
            opt(o.eta_dbar_weighted, 6),
            opt(o.eta_dbar_total, 6)
        );
        let _ = writeln!(
            s,
            "  delta theta00 {}  delta mu_de {}  Cov(dbar_star, degree) {:.6}",
            opt(o.delta_theta00, 6),
            opt(o.delta_mu_de, 6),
            o.cov_dbar_star_degree
        );
    }
    s
}

pub fn write_oracle_csv<W: Write>(rows: &[(Design, OracleReport)], mut w: W) -> Result<()> {
    writeln!(w, "design,c,quantity,value")?;
    for (design, o) in rows {
        let (id, c) = match design {
            Design::Builtin(b) => (b.id().to_string(), b.c.to_string()),
            Design::Custom(_) => ("custom".to_string(), String::new()),
        };
        let values = [
            ("p", Some(o.p)),
            ("p_gamma", Some(o.p_gamma)),
            ("alpha_d", Some(o.alpha_d)),
            ("alpha_t", o.alpha_t),
            ("beta_d", o.beta_d),
            ("beta_dbar", o.beta_dbar),
            ("eta_d", Some(o.eta_d)),
            ("eta_dbar_bias", o.eta_dbar_bias),
            ("eta_dbar_weighted", o.eta_dbar_weighted),
            ("eta_dbar_total", o.eta_dbar_total),
            ("delta_theta00", o.delta_theta00),
            ("delta_mu_de", o.delta_mu_de),
            ("mean_degree", Some(o.mean_degree)),
            ("mean_inv_degree_positive", o.mean_inv_degree_positive),
            ("e_dbar_star", Some(o.e_dbar_star)),
            ("var_dbar_star", Some(o.var_dbar_star)),
            ("cov_dbar_star_degree", Some(o.cov_dbar_star_degree)),
        ];
        for (name, v) in values {
            writeln!(w, "{id},{c},{name},{}", v.map(|x| x.to_string()).unwrap_or_default())?;
        }
    }
    Ok(())
}

fn fit_line(s: &mut String, name: &str, fit: Option<&RegressionFit>, failure: Option<&String>) {
    match fit {
        Some(f) => {
            let _ = writeln!(
                s,
                "  {:<14} {:>9.4} ({:.4})  {:>9.4} ({:.4})  {:>6}  {:.4}",
                name,
                f.direct().unwrap_or(f64::NAN),
                f.se[1],
                f.spillover().unwrap_or(f64::NAN),
                f.se[2],
                f.n_used,
                f.r_squared
            );
        }
        None => {
            let _ = writeln!(s, "  {:<14} not fit: {}", name, failure.map_or("unknown", |f| f));
        }
    }
}

pub fn audit_text(r: &AuditReport) -> String {
    let mut s = String::new();
    summary_lines(&mut s, &r.summary);
    let _ = writeln!(s, "treated share {:.4}", r.treated_share);
    let _ = writeln!(
        s,
        "Cov(dbar_star, degree)  empirical {}  closed form {:.6}",
        opt(r.diagnostics.cov_dbar_star_degree, 6),
        r.cov_closed_form
    );
    let _ = writeln!(
        s,
        "r2(degree, dbar | degree>0) {}  r2(degree, dbar_star) {}",
        opt(r.diagnostics.r2_dbar, 4),
        opt(r.diagnostics.r2_dbar_star, 4)
    );
    let _ = writeln!(s, "\n  {:<14} {:>18}  {:>18}  {:>6}  r2", "spec", "direct (se)", "spillover (se)", "n");
    fit_line(&mut s, "t_reg", r.t_fit.as_ref(), r.failed_fits.get("t_reg"));
    fit_line(&mut s, "dbar_reg", r.dbar_fit.as_ref(), r.failed_fits.get("dbar_reg"));
    fit_line(&mut s, "dbar_star_reg", r.dbar_star_fit.as_ref(), r.failed_fits.get("dbar_star_reg"));

    let _ = writeln!(s, "\ndegree strata");
    for (g, fit) in &r.stratified.fits {
        let _ = writeln!(
            s,
            "  degree {:>3}  n {:>6}  theta00 {:>9.4}  mu_de {:>9.4}  lambda_se {:>9}",
            g,
            fit.n_used,
            fit.coef("intercept").unwrap_or(f64::NAN),
            fit.coef("d").unwrap_or(f64::NAN),
            opt(fit.coef("t"), 4)
        );
    }
    for (g, why) in &r.stratified.skipped {
        let _ = writeln!(s, "  degree {g:>3}  skipped: {why}");
    }
    let _ = writeln!(
        s,
        "\nplug-in delta theta00 {}  delta mu_de {}  implied isolation bias {}",
        opt(r.delta_theta00_hat, 4),
        opt(r.delta_mu_de_hat, 4),
        opt(r.implied_bias, 4)
    );
    if let Some(w) = &r.warning {
        let _ = writeln!(s, "\nWARNING: {w}");
    }
    s
}
