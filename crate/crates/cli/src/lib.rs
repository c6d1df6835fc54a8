//! Config-driven batch runs: eigen tables, emission maps, reflectivity maps,
//! matrix-element reports and convergence audits, written as CSV files with
//! a JSON run manifest.

pub mod audit;
pub mod config;
pub mod error;
pub mod run;

use std::path::Path;

use cqed_core::dressed::{DEGENERACY_TOL, MERGE_TOL};
use cqed_core::par::{with_threads, ExecMode};
use cqed_core::steady::SteadyStateOptions;
use serde_json::{json, Value};

pub use config::{Mode, RunConfig};
pub use error::{CliError, ErrorKind};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "CQED_THREADS";

/// Worker count: explicit value, else `CQED_THREADS`, else machine parallelism.
pub fn resolve_threads(flag: Option<usize>, env: Option<&str>) -> Result<usize, CliError> {
    if let Some(t) = flag {
        if t == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        return Ok(t);
    }
    if let Some(v) = env {
        return match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(t),
            _ => Err(CliError::config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        };
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn manifest(cfg: &RunConfig, command: &str, source: &str, threads: usize, body: Value) -> Value {
    let ss = SteadyStateOptions::default();
    let mut m = json!({
        "software": {
            "name": "cqed",
            "version": VERSION,
            "parallel_feature": cfg!(feature = "parallel"),
        },
        "command": command,
        "config_source": source,
        "config": cfg,
        "resolved": {
            "filter_b": run::resolved_filter(cfg),
            "hilbert_dim": 2 * cfg.system.n_fock,
            "n_fock": cfg.system.n_fock,
            "n_levels": cfg.system.n_levels,
            "liouvillian_dim": cfg.system.n_levels * cfg.system.n_levels,
            "floquet_order": cfg.drive.as_ref().map(|d| d.floquet_order),
            "threads": threads,
            "units": "omega_r = 1",
        },
        "tolerances": {
            "degeneracy_tol": DEGENERACY_TOL,
            "transition_merge_tol": MERGE_TOL,
            "omega_min": cfg.gme.omega_min,
            "filter_cutoff": cfg.gme.filter_cutoff,
            "steady_state_uniqueness_tol": ss.uniqueness_tol,
            "steady_state_residual_tol": ss.residual_tol,
            "log_floor": cfg.output.log_floor,
            "audit_spectrum_rel_tol": audit::SPECTRUM_TOL,
            "audit_energy_tol": audit::ENERGY_TOL,
            "audit_fock_increment": audit::FOCK_INCREMENT,
            "audit_floquet_increment": audit::ORDER_INCREMENT,
        },
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut m, body) {
        dst.extend(src);
    }
    m
}

fn write_json(out: &Path, name: &str, v: &Value) -> Result<(), CliError> {
    let path = out.join(name);
    let text = serde_json::to_string_pretty(v).expect("serializable") + "\n";
    std::fs::write(&path, text).map_err(|e| CliError::io(e, &path))
}

/// Outcome of a command: lines for stdout, or an error with its exit code.
pub struct Outcome {
    pub lines: Vec<String>,
    pub error: Option<CliError>,
}

/// Runs one command and writes its outputs plus `manifest.json` into `out`.
pub fn execute(cfg: &RunConfig, mode: Mode, out: &Path, threads: usize, source: &str) -> Result<Outcome, CliError> {
    let report = with_threads(Some(threads), || run::run(cfg, mode, out, ExecMode::default()))?;
    let status = if report.error.is_some() { "solver_failure" } else { "ok" };
    let mut outputs = report.outputs.clone();
    outputs.push("manifest.json".into());
    let body = json!({
        "status": status,
        "outputs": outputs,
        "warnings": report.warnings,
        "failures": report.failures,
    });
    write_json(out, "manifest.json", &manifest(cfg, mode.name(), source, threads, body))?;
    let mut lines: Vec<String> = report.outputs.iter().map(|o| format!("wrote {}", out.join(o).display())).collect();
    lines.extend(report.warnings.iter().map(|w| format!("warning: {w}")));
    Ok(Outcome { lines, error: report.error })
}

/// Runs the convergence audit for the config's mode and writes `audit.json`.
pub fn execute_audit(cfg: &RunConfig, out: &Path, threads: usize, source: &str) -> Result<Outcome, CliError> {
    let mode = cfg.mode.ok_or_else(|| CliError::config("audit needs `mode` in the config"))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(e, out))?;
    let checks = match with_threads(Some(threads), || audit::convergence_audit(cfg, mode)) {
        Ok(c) => c,
        Err(e) if e.kind == ErrorKind::SolverFailure => return Ok(Outcome { lines: vec![], error: Some(e) }),
        Err(e) => return Err(e),
    };
    let failed = checks.iter().filter(|c| !c.pass).count();
    let body = json!({
        "status": "ok",
        "audited_mode": mode.name(),
        "checks": checks,
        "failed_checks": failed,
        "outputs": ["audit.json", "manifest.json"],
    });
    write_json(out, "audit.json", &json!({ "checks": checks, "failed_checks": failed }))?;
    write_json(out, "manifest.json", &manifest(cfg, "audit", source, threads, body))?;
    let mut lines: Vec<String> = checks.iter().map(|c| c.line()).collect();
    lines.push(format!("audit: {failed} of {} checks above tolerance", checks.len()));
    Ok(Outcome { lines, error: None })
}
