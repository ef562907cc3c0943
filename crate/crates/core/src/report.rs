//! Deterministic plain-text reports and CSV emission. Keys appear in a fixed
//! order and floats use a fixed scientific format, so identical runs produce
//! byte-identical files.

use crate::bounds::BoundCertificate;
use crate::inertial::BodyMargins;
use crate::simulator::Trajectory;
use crate::verify::SuiteOutcome;
use std::fmt::Write as _;

fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}

/// Trajectory CSV: `t, q_*, qd_*, qdd_*, T_kin, U_pot, nu, E_total`.
pub fn trajectory_csv(tr: &Trajectory, dof: usize) -> String {
    let mut out = String::new();
    out.push('t');
    for k in 1..=dof {
        write!(out, ",q_{k}").unwrap();
    }
    for k in 1..=dof {
        write!(out, ",qd_{k}").unwrap();
    }
    for k in 1..=dof {
        write!(out, ",qdd_{k}").unwrap();
    }
    out.push_str(",T_kin,U_pot,nu,E_total\n");
    for s in &tr.samples {
        out.push_str(&fmt(s.t));
        for v in s.q.iter().chain(&s.qd).chain(&s.qdd) {
            out.push(',');
            out.push_str(&fmt(*v));
        }
        let e = &s.energy;
        for v in [e.kinetic(), e.potential, s.nu, e.total()] {
            out.push(',');
            out.push_str(&fmt(v));
        }
        out.push('\n');
    }
    out
}

pub fn simulate_summary(tr: &Trajectory) -> String {
    let e0 = tr.samples[0].energy.total();
    let drift = tr.energy_drift();
    let rel = if e0.abs() > 0.0 {
        drift / e0.abs()
    } else {
        drift
    };
    let mut out = String::new();
    writeln!(out, "samples = {}", tr.samples.len()).unwrap();
    writeln!(out, "steps = {}", tr.samples.len() - 1).unwrap();
    writeln!(out, "t_start = {}", fmt(tr.samples[0].t)).unwrap();
    writeln!(out, "t_end = {}", fmt(tr.last().t)).unwrap();
    writeln!(out, "energy_initial = {}", fmt(e0)).unwrap();
    writeln!(out, "energy_final = {}", fmt(tr.last().energy.total())).unwrap();
    writeln!(out, "energy_drift_abs = {}", fmt(drift)).unwrap();
    writeln!(out, "energy_drift_rel = {}", fmt(rel)).unwrap();
    // not a model quantity; accumulated qd . (J^T Q Psid) for diagnostics
    writeln!(out, "flow_work_diagnostic = {}", fmt(tr.last().flow_work)).unwrap();
    out
}

pub fn consistency_report(
    times: &[f64],
    margins: &[BodyMargins],
    per_sample: &[Vec<(f64, f64)>],
    margin: f64,
    uniform_margin: f64,
) -> String {
    let mut out = String::new();
    writeln!(out, "bodies = {}", margins.len()).unwrap();
    writeln!(out, "samples = {}", times.len()).unwrap();
    writeln!(out, "margin = {}", fmt(margin)).unwrap();
    writeln!(out, "uniform_margin = {}", fmt(uniform_margin)).unwrap();
    writeln!(out, "certificate = sampled").unwrap();
    for (l, m) in margins.iter().enumerate() {
        writeln!(out, "[body_{l}]").unwrap();
        writeln!(out, "inf_lambda_min = {}", fmt(m.inf_lambda_min)).unwrap();
        writeln!(out, "sup_lambda_max = {}", fmt(m.sup_lambda_max)).unwrap();
        writeln!(out, "t_at_inf = {}", fmt(m.t_at_inf)).unwrap();
        writeln!(out, "t_at_sup = {}", fmt(m.t_at_sup)).unwrap();
        writeln!(out, "consistent_per_sample = {}", m.consistent_per_sample).unwrap();
        writeln!(out, "uniformly_consistent = {}", m.uniformly_consistent).unwrap();
        writeln!(out, "upper_bounded = {}", m.upper_bounded).unwrap();
        writeln!(out, "growth_trend = {}", m.growth_trend).unwrap();
        writeln!(out, "decay_trend = {}", m.decay_trend).unwrap();
        for (k, &t) in times.iter().enumerate() {
            let (lo, hi) = per_sample[l][k];
            writeln!(out, "sample_{k} = {} {} {}", fmt(t), fmt(lo), fmt(hi)).unwrap();
        }
    }
    out
}

pub fn certificate_report(cert: &BoundCertificate, grid_desc: &str, seed: u64) -> String {
    let mut out = String::new();
    writeln!(out, "certificate = sampled").unwrap();
    writeln!(out, "seed = {seed}").unwrap();
    writeln!(out, "grid = {grid_desc}").unwrap();
    writeln!(out, "checked_points = {}", cert.checked_points).unwrap();
    writeln!(out, "time_samples = {}", cert.time_samples).unwrap();
    writeln!(out, "alpha1 = {}", fmt(cert.lower.alpha1)).unwrap();
    writeln!(out, "alpha2 = {}", fmt(cert.upper.alpha2)).unwrap();
    writeln!(out, "jac_lambda_min_inf = {}", fmt(cert.lower.jac_inf)).unwrap();
    writeln!(out, "jac_sigma_max_sq_sup = {}", fmt(cert.upper.jac_sup)).unwrap();
    writeln!(
        out,
        "jac_argmin = {}",
        cert.jac_argmin
            .iter()
            .map(|v| fmt(*v))
            .collect::<Vec<_>>()
            .join(" ")
    )
    .unwrap();
    writeln!(
        out,
        "jac_argmax = {}",
        cert.jac_argmax
            .iter()
            .map(|v| fmt(*v))
            .collect::<Vec<_>>()
            .join(" ")
    )
    .unwrap();
    writeln!(out, "consistency_inf = {}", fmt(cert.lower.consistency_inf)).unwrap();
    writeln!(out, "consistency_sup = {}", fmt(cert.upper.consistency_sup)).unwrap();
    writeln!(out, "verdict_normal = {}", cert.lower.normal).unwrap();
    writeln!(
        out,
        "verdict_jacobian_upper_bounded = {}",
        cert.upper.jac_upper_bounded
    )
    .unwrap();
    writeln!(
        out,
        "verdict_uniformly_consistent = {}",
        cert.lower.uniformly_consistent
    )
    .unwrap();
    writeln!(
        out,
        "verdict_params_upper_bounded = {}",
        cert.upper.params_upper_bounded
    )
    .unwrap();
    writeln!(
        out,
        "per_sample_consistent = {}",
        cert.per_sample_consistent
    )
    .unwrap();
    writeln!(out, "growth_trend = {}", cert.growth_trend).unwrap();
    writeln!(
        out,
        "sampled_mass_lambda_min = {}",
        fmt(cert.lower.sampled_lambda_min)
    )
    .unwrap();
    writeln!(
        out,
        "sampled_mass_lambda_max = {}",
        fmt(cert.upper.sampled_lambda_max)
    )
    .unwrap();
    writeln!(out, "lower_bound_sound = {}", cert.lower.sound).unwrap();
    writeln!(out, "upper_bound_sound = {}", cert.upper.sound).unwrap();
    writeln!(out, "bounds_chain_holds = {}", cert.bounds_chain_holds()).unwrap();
    writeln!(out, "flow_projection_norm_sup = {}", fmt(cert.q_norm_sup)).unwrap();
    match &cert.rate {
        Some(r) => {
            writeln!(out, "rate_sigma_max_sup = {}", fmt(r.sup_sigma)).unwrap();
            writeln!(out, "rate_envelope = {}", fmt(r.envelope)).unwrap();
            writeln!(out, "rate_pointwise_sound = {}", r.pointwise_sound).unwrap();
        }
        None => {
            writeln!(out, "rate_sigma_max_sup = none").unwrap();
        }
    }
    writeln!(out, "params_constant = {}", cert.params_constant).unwrap();
    if cert.params_constant {
        writeln!(out, "beta1 = {}", fmt(cert.beta1)).unwrap();
        writeln!(out, "beta2 = {}", fmt(cert.beta2)).unwrap();
    }
    out
}

pub fn verify_report(outcome: &SuiteOutcome, seed: u64) -> String {
    let mut out = String::new();
    writeln!(out, "seed = {seed}").unwrap();
    for c in &outcome.checks {
        writeln!(
            out,
            "{} = {} (residual {} tolerance {}; {})",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            fmt(c.residual),
            fmt(c.tolerance),
            c.detail
        )
        .unwrap();
    }
    writeln!(
        out,
        "suite = {}",
        if outcome.all_pass() { "PASS" } else { "FAIL" }
    )
    .unwrap();
    out
}
