//! CSV traces and their JSON companions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::problem::{ConvergenceTrace, Termination};

pub const CSV_HEADER: &str = "iter,residual_norm,monitor_w,restarted,elapsed_ms";

/// Context echoed into the JSON summary next to a trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceMeta {
    pub label: String,
    pub problem: String,
    pub tol: f64,
    pub config: serde_json::Value,
    pub record_timing: bool,
}

#[derive(Debug, Serialize)]
struct TraceSummary<'a> {
    #[serde(flatten)]
    meta: &'a TraceMeta,
    converged: bool,
    termination: String,
    iterations_to_tol: Option<usize>,
    records: usize,
    restarts: usize,
    initial_residual: f64,
    final_residual: f64,
    final_relative_residual: f64,
}

/// Full-precision float text: 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn termination_label(t: &Termination) -> String {
    match t {
        Termination::Converged => "converged".into(),
        Termination::MaxIters => "max_iters".into(),
        Termination::Breakdown { step, s_jj } => format!("breakdown(step={step}, s_jj={s_jj:e})"),
        Termination::DomainError { step, message } => {
            format!("domain_error(step={step}): {message}")
        }
        Termination::NonFinite { step } => format!("non_finite(step={step})"),
    }
}

pub fn trace_csv(trace: &ConvergenceTrace, record_timing: bool) -> String {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &trace.records {
        let w = r.monitor_w.map(format_f64).unwrap_or_default();
        let elapsed = if record_timing {
            format!("{:.3}", r.elapsed.as_secs_f64() * 1e3)
        } else {
            String::new()
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            r.iter,
            format_f64(r.residual_norm),
            w,
            u8::from(r.restarted),
            elapsed
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn trace_summary_json(trace: &ConvergenceTrace, meta: &TraceMeta) -> String {
    let r0 = trace.records.first().map_or(0.0, |r| r.residual_norm);
    let rn = trace.records.last().map_or(0.0, |r| r.residual_norm);
    let summary = TraceSummary {
        meta,
        converged: trace.converged,
        termination: termination_label(&trace.termination),
        iterations_to_tol: trace.iterations_to(meta.tol),
        records: trace.records.len(),
        restarts: trace.restart_count(),
        initial_residual: r0,
        final_residual: rn,
        final_relative_residual: if r0 > 0.0 { rn / r0 } else { 0.0 },
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary is serializable");
    text.push('\n');
    text
}

/// Writes the CSV to `path` and the JSON summary next to it; returns the JSON path.
pub fn emit_trace(trace: &ConvergenceTrace, path: &Path, meta: &TraceMeta) -> Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, trace_csv(trace, meta.record_timing))?;
    let json_path = path.with_extension("json");
    fs::write(&json_path, trace_summary_json(trace, meta))?;
    Ok(json_path)
}
