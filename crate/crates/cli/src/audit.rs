//! Convergence audit: re-runs sampled grid points with a larger Fock cutoff
//! and, for reflectivity, a higher Floquet order.

use cqed_core::dressed::diagonalize_params;
use cqed_core::par::ExecMode;
use cqed_core::spectra::{Probe, ReflectivityModel};
use serde::Serialize;

use crate::config::{Mode, RunConfig, SweepParameter};
use crate::error::CliError;
use crate::run::{emission_point, labelled_bases, matrix_elements, reflectivity_grids, reflectivity_setup};

pub const FOCK_INCREMENT: usize = 10;
pub const ORDER_INCREMENT: usize = 2;
/// Relative tolerance on spectra, reflectivity and matrix elements.
pub const SPECTRUM_TOL: f64 = 1e-6;
/// Absolute tolerance on energies, in units of ω_r.
pub const ENERGY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub check: String,
    pub point: String,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditCheck {
    fn new(check: impl Into<String>, point: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self { check: check.into(), point: point.into(), deviation, tolerance, pass: deviation <= tolerance }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} at {}: deviation {:.3e} (tolerance {:.0e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.check,
            self.point,
            self.deviation,
            self.tolerance
        )
    }
}

/// First, middle and last index.
pub fn sample(n: usize) -> Vec<usize> {
    let mut v = vec![0, n / 2, n.saturating_sub(1)];
    v.dedup();
    v
}

fn rel_dev(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

fn with_cutoff(cfg: &RunConfig, n_fock: usize) -> RunConfig {
    let mut c = cfg.clone();
    c.system.n_fock = n_fock;
    c
}

pub fn convergence_audit(cfg: &RunConfig, mode: Mode) -> Result<Vec<AuditCheck>, CliError> {
    cfg.validate_for(mode)?;
    let hi = with_cutoff(cfg, cfg.system.n_fock + FOCK_INCREMENT);
    let fock_tag = format!("n_fock {} -> {}", cfg.system.n_fock, hi.system.n_fock);
    let (parameter, values) = match mode {
        Mode::Reflectivity => (SweepParameter::Epsilon, reflectivity_grids(cfg).1),
        _ => cfg.sweep_values(),
    };
    let solver = |e: cqed_core::Error, at: &str| CliError::solver(e, serde_json::json!({ "mode": "audit", "point": at }));
    let mut checks = Vec::new();

    for &k in &sample(values.len()) {
        let at = format!("{}={}", parameter.name(), values[k]);
        let lo = diagonalize_params(&cfg.params_at(parameter, values[k])).map_err(|e| solver(e, &at))?;
        let up = diagonalize_params(&hi.params_at(parameter, values[k])).map_err(|e| solver(e, &at))?;
        let n = cfg.system.n_levels;
        let dev = lo.energies()[..n].iter().zip(&up.energies()[..n]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        checks.push(AuditCheck::new(format!("energies ({fock_tag})"), at, dev, ENERGY_TOL));
    }

    match mode {
        Mode::Eigen => {}
        Mode::Emission => {
            let grid = cfg.emission.omega.values();
            for kind in cfg.emission_kinds() {
                for &k in &sample(values.len()) {
                    let at = format!("{}={}", parameter.name(), values[k]);
                    let a = emission_point(cfg, cfg.params_at(parameter, values[k]), kind, Some(&grid))
                        .map_err(|e| solver(e, &at))?;
                    let b = emission_point(&hi, hi.params_at(parameter, values[k]), kind, Some(&grid))
                        .map_err(|e| solver(e, &at))?;
                    let check = format!("emission {} ({fock_tag})", kind.name());
                    checks.push(AuditCheck::new(check, at, rel_dev(a.values(), b.values()), SPECTRUM_TOL));
                }
            }
        }
        Mode::Reflectivity => {
            let (drive, offsets) = reflectivity_grids(cfg);
            let drive_idx: Vec<usize> = if drive.len() <= 5 {
                (0..drive.len()).collect()
            } else {
                (0..5).map(|i| i * (drive.len() - 1) / 4).collect()
            };
            for name in &cfg.reflectivity.probes {
                let probe = Probe::from_name(name).unwrap();
                let setup = reflectivity_setup(cfg, probe)?;
                let setup_hi = reflectivity_setup(&hi, probe)?;
                for &e in &sample(offsets.len()) {
                    let at_eps = format!("epsilon={}", offsets[e]);
                    let m = ReflectivityModel::new(&setup, offsets[e]).map_err(|x| solver(x, &at_eps))?;
                    let m_hi = ReflectivityModel::new(&setup_hi, offsets[e]).map_err(|x| solver(x, &at_eps))?;
                    let (mut base, mut fock, mut order) = (Vec::new(), Vec::new(), Vec::new());
                    for &w in &drive_idx {
                        let at = format!("{at_eps}, omega_d={}", drive[w]);
                        base.push(m.s11(drive[w]).map_err(|x| solver(x, &at))?);
                        fock.push(m_hi.s11(drive[w]).map_err(|x| solver(x, &at))?);
                        order.push(
                            m.s11_with_order(drive[w], setup.floquet_order + ORDER_INCREMENT)
                                .map_err(|x| solver(x, &at))?,
                        );
                    }
                    let f = format!("reflectivity {name} ({fock_tag})");
                    checks.push(AuditCheck::new(f, at_eps.clone(), rel_dev(&base, &fock), SPECTRUM_TOL));
                    let o = format!(
                        "reflectivity {name} (floquet order {} -> {})",
                        setup.floquet_order,
                        setup.floquet_order + ORDER_INCREMENT
                    );
                    checks.push(AuditCheck::new(o, at_eps, rel_dev(&base, &order), SPECTRUM_TOL));
                }
            }
        }
        Mode::MatrixElements => {
            let (lo_b, _) = labelled_bases(cfg, parameter, &values, ExecMode::default(), mode)?;
            let (hi_b, _) = labelled_bases(&hi, parameter, &values, ExecMode::default(), mode)?;
            let lo = matrix_elements(cfg, parameter, &values, lo_b)?;
            let up = matrix_elements(&hi, parameter, &values, hi_b)?;
            let per_point = lo.rows.len() / values.len();
            for &k in &sample(values.len()) {
                let rows = k * per_point..(k + 1) * per_point;
                let a: Vec<f64> = lo.rows[rows.clone()].iter().map(|r| r.abs_sq).collect();
                let b: Vec<f64> = up.rows[rows].iter().map(|r| r.abs_sq).collect();
                let at = format!("{}={}", parameter.name(), values[k]);
                checks.push(AuditCheck::new(format!("matrix elements ({fock_tag})"), at, rel_dev(&a, &b), SPECTRUM_TOL));
            }
        }
    }
    Ok(checks)
}
