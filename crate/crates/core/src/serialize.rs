//! Deterministic emission of trajectories, events, and reports.
//!
//! Every float is printed with 17 significant digits (exact f64
//! round-trip), key order is fixed, and iteration orders are the stored
//! orders, so identical inputs produce byte-identical files.

use crate::classify::{BisectionStep, FirstZeroRow, Report, SeparatrixResult};
use crate::diagnostics::{DecayEstimate, DiagnosticsReport};
use crate::exact::ClosedForm;
use crate::ode::{Event, EventKind, Trajectory};

/// 17 significant digits, scientific; non-finite values map to text
/// markers (callers that need strict JSON use [`json_float`]).
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

/// JSON-safe float token: finite values as 17-digit scientific, otherwise
/// `null`.
pub fn json_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

/// Accepted steps as CSV with header `r,u,v`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(64 * traj.samples.len() + 16);
    out.push_str("r,u,v\n");
    for s in &traj.samples {
        out.push_str(&format_float(s.r));
        out.push(',');
        out.push_str(&format_float(s.u));
        out.push(',');
        out.push_str(&format_float(s.v));
        out.push('\n');
    }
    out
}

fn event_json(e: &Event) -> String {
    format!(
        "{{\"kind\":\"{}\",\"r\":{},\"value\":{},\"index\":{}}}",
        match e.kind {
            EventKind::Zero => "zero",
            EventKind::CriticalPoint => "critical-point",
        },
        json_float(e.r),
        json_float(e.value),
        e.index
    )
}

/// Sidecar event record: one JSON array of `{kind, r, value, index}`.
pub fn events_json(traj: &Trajectory) -> String {
    let mut out = String::from("[\n");
    for (i, e) in traj.events.iter().enumerate() {
        out.push_str("  ");
        out.push_str(&event_json(e));
        if i + 1 < traj.events.len() {
            out.push(',');
        }
        out.push('\n');
    }
    out.push_str("]\n");
    out
}

fn decay_json(d: &DecayEstimate) -> String {
    format!(
        "{{\"law\":\"{}\",\"fitted_rate\":{},\"fitted_constant\":{},\"window\":[{},{}],\"residual\":{}}}",
        d.law.as_str(),
        json_float(d.fitted_rate),
        json_float(d.fitted_constant),
        json_float(d.window.0),
        json_float(d.window.1),
        json_float(d.residual)
    )
}

/// Classification report as JSON with a frozen schema.
pub fn report_json(report: &Report) -> String {
    let mut out = String::from("{\n");
    out.push_str(&format!(
        "  \"params\": {{\"n\":{},\"p\":{},\"c\":{},\"alpha\":{}}},\n",
        report.params.n,
        json_float(report.params.p),
        json_float(report.params.c),
        json_float(report.params.alpha)
    ));
    out.push_str(&format!(
        "  \"regime\": {{\"tag\":\"{}\",\"critical_boundary\":{}}},\n",
        report.regime.tag.as_str(),
        report.regime.critical_boundary
    ));
    out.push_str(&format!(
        "  \"sign_class\": {{\"tag\":\"{}\",\"zero_count\":{}}},\n",
        report.sign_class.as_str(),
        report.sign_class.zero_count()
    ));
    match &report.decay {
        Some(d) => out.push_str(&format!("  \"decay\": {},\n", decay_json(d))),
        None => out.push_str("  \"decay\": null,\n"),
    }
    out.push_str(&format!(
        "  \"separatrix_side\": \"{}\",\n",
        report.separatrix_side.as_str()
    ));
    out.push_str("  \"zeros\": [");
    for (i, z) in report.zeros.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&event_json(z));
    }
    out.push_str("],\n");
    out.push_str(&format!(
        "  \"termination\": \"{}\",\n",
        report.termination.as_str()
    ));
    out.push_str(&format!(
        "  \"r_max_used\": {},\n  \"tol_used\": {}\n}}\n",
        json_float(report.r_max_used),
        json_float(report.tol_used)
    ));
    out
}

/// Diagnostics summary as JSON.
pub fn diagnostics_json(report: &DiagnosticsReport) -> String {
    let decay = match &report.decay {
        Some(d) => decay_json(d),
        None => "null".into(),
    };
    format!(
        "{{\"F_monotone\":{},\"Psi_sign\":\"{}\",\"Psi_identity_max_err\":{},\"decay\":{}}}\n",
        report.f_monotone,
        report.psi_sign.as_str(),
        json_float(report.psi_identity_max_err),
        decay
    )
}

/// Closed-form verification record.
pub fn exact_report_json(form: &ClosedForm, max_residual: f64) -> String {
    format!(
        "{{\"family\":\"{}\",\"n\":{},\"p\":{},\"constant_used\":{},\"printed_constant\":{},\"printed_constant_matches\":{},\"max_residual\":{}}}\n",
        form.family.as_str(),
        form.n,
        json_float(form.p),
        json_float(form.constant),
        json_float(form.printed_constant),
        form.printed_constant_matches,
        json_float(max_residual)
    )
}

/// First-zero table as CSV `alpha,r_alpha`; out-of-domain rows print an
/// empty second column.
pub fn first_zero_csv(rows: &[FirstZeroRow]) -> String {
    let mut out = String::from("alpha,r_alpha\n");
    for row in rows {
        out.push_str(&format_float(row.alpha));
        out.push(',');
        if let Some(r) = row.r_alpha {
            out.push_str(&format_float(r));
        }
        out.push('\n');
    }
    out
}

/// Sweep summary CSV: `alpha,zeros,decay_law,fitted_rate,fitted_constant`.
pub fn sweep_summary_csv(reports: &[Report]) -> String {
    let mut out = String::from("alpha,zeros,decay_law,fitted_rate,fitted_constant\n");
    for r in reports {
        let (law, rate, constant) = match &r.decay {
            Some(d) => (
                d.law.as_str(),
                format_float(d.fitted_rate),
                format_float(d.fitted_constant),
            ),
            None => ("none", String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(r.params.alpha),
            r.sign_class.zero_count(),
            law,
            rate,
            constant
        ));
    }
    out
}

/// Bisection trace CSV: `iter,lo,hi,decision`.
pub fn bisection_trace_csv(result: &SeparatrixResult) -> String {
    let mut out = String::from("iter,lo,hi,decision\n");
    for BisectionStep {
        iter,
        lo,
        hi,
        decision,
    } in &result.trace
    {
        out.push_str(&format!(
            "{},{},{},{}\n",
            iter,
            format_float(*lo),
            format_float(*hi),
            decision.as_str()
        ));
    }
    out
}
