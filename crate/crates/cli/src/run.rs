//! Sweep orchestration and CSV output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use cqed_core::dressed::{diagonalize_params, label_states, DressedBasis};
use cqed_core::gme::{build_gme, full_liouvillian};
use cqed_core::par::{map_indexed, ExecMode};
use cqed_core::rabi::{OutputKind, SystemParams};
use cqed_core::spectra::{
    emission_spectrum, matrix_element_report, normalize_set, reflectivity_sweep, EmissionOptions, Probe,
    ReflectivitySetup, ReportOperator, SpectrumSeries, SweepPoint,
};
use cqed_core::steady::steady_state;
use cqed_core::system::OpenSystem;
use serde_json::{json, Value};

use crate::config::{BathKind, Mode, RunConfig, SweepParameter};
use crate::error::CliError;

/// What a run produced.
#[derive(Debug, Default)]
pub struct RunReport {
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    /// Grid points whose solve failed; a non-empty list makes the run fail.
    pub failures: Vec<Value>,
    /// First failure, reported on exit.
    pub error: Option<CliError>,
}

impl RunReport {
    fn write(&mut self, dir: &Path, name: &str, body: &[u8]) -> Result<(), CliError> {
        let path = dir.join(name);
        let mut f = BufWriter::new(File::create(&path).map_err(|e| CliError::io(e, &path))?);
        f.write_all(body).and_then(|_| f.flush()).map_err(|e| CliError::io(e, &path))?;
        self.outputs.push(name.to_string());
        Ok(())
    }
}

fn csv<F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>>(f: F) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn point(mode: Mode, parameter: SweepParameter, value: f64) -> Value {
    json!({ "mode": mode.name(), parameter.name(): value })
}

fn suffix(n_points: usize, k: usize) -> String {
    if n_points == 1 {
        String::new()
    } else {
        format!("_{k:04}")
    }
}

/// Largest transition frequency scale used to decide the filter width.
pub fn resolved_filter(cfg: &RunConfig) -> f64 {
    let params = cfg.params();
    let probe = Some(OutputKind::InductiveM);
    match cfg.channels(&params, probe) {
        Ok(ch) => cfg.gme_config().resolved_filter(&ch),
        Err(_) => 0.0,
    }
}

fn sweep_points_csv(parameter: SweepParameter, values: &[f64]) -> Vec<u8> {
    csv(|w| {
        writeln!(w, "index,parameter,value")?;
        for (k, v) in values.iter().enumerate() {
            writeln!(w, "{k},{},{v}", parameter.name())?;
        }
        Ok(())
    })
}

/// Diagonalizes every sweep point and continues labels along the sweep.
pub fn labelled_bases(
    cfg: &RunConfig,
    parameter: SweepParameter,
    values: &[f64],
    exec: ExecMode,
    mode: Mode,
) -> Result<(Vec<DressedBasis>, Vec<String>), CliError> {
    let bases: Vec<Result<DressedBasis, CliError>> = map_indexed(exec, values.len(), |k| {
        diagonalize_params(&cfg.params_at(parameter, values[k]))
            .map_err(|e| CliError::solver(e, point(mode, parameter, values[k])))
    });
    let mut bases = bases.into_iter().collect::<Result<Vec<_>, _>>()?;
    let flagged = label_states(&mut bases, cfg.label_scheme());
    let warnings = flagged
        .iter()
        .map(|a| {
            format!(
                "label {} continued with overlap {:.3} at {} = {}",
                a.label,
                a.overlap,
                parameter.name(),
                values[a.point]
            )
        })
        .collect();
    Ok((bases, warnings))
}

pub fn run(cfg: &RunConfig, mode: Mode, out: &Path, exec: ExecMode) -> Result<RunReport, CliError> {
    cfg.validate_for(mode)?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(e, out))?;
    let mut report = RunReport::default();
    let result = match mode {
        Mode::Eigen => run_eigen(cfg, out, exec, &mut report),
        Mode::Emission => run_emission(cfg, out, exec, &mut report),
        Mode::Reflectivity => run_reflectivity(cfg, out, exec, &mut report),
        Mode::MatrixElements => run_matrix_elements(cfg, out, exec, &mut report),
    };
    match result {
        Ok(()) => Ok(report),
        Err(e) if e.kind == crate::error::ErrorKind::SolverFailure => {
            report.failures.push(e.grid_point.clone().unwrap_or(Value::Null));
            report.error = Some(e);
            Ok(report)
        }
        Err(e) => Err(e),
    }
}

fn run_eigen(cfg: &RunConfig, out: &Path, exec: ExecMode, report: &mut RunReport) -> Result<(), CliError> {
    let (parameter, values) = cfg.sweep_values();
    let (bases, warnings) = labelled_bases(cfg, parameter, &values, exec, Mode::Eigen)?;
    report.warnings.extend(warnings);
    let n_levels = cfg.system.n_levels;
    let files: Vec<Result<(Vec<u8>, Option<Vec<u8>>), CliError>> = map_indexed(exec, values.len(), |k| {
        let fail = |e| CliError::solver(e, point(Mode::Eigen, parameter, values[k]));
        let params = cfg.params_at(parameter, values[k]);
        let sys = OpenSystem::with_basis(params, bases[k].clone(), n_levels).map_err(fail)?;
        let table = sys.transitions(cfg.gme.omega_min);
        let transitions = csv(|w| table.write_csv(sys.basis(), w));
        let populations = if cfg.baths.is_empty() {
            None
        } else {
            let ch = cfg.channels(&params, None)?;
            let gme = build_gme(&sys, &ch, &cfg.gme_config()).map_err(fail)?;
            let rho = steady_state(&full_liouvillian(&sys, &gme)).map_err(fail)?;
            Some(csv(|w| rho.write_populations_csv(sys.basis(), w)))
        };
        Ok((transitions, populations))
    });
    for (k, f) in files.into_iter().enumerate() {
        let (t, p) = f?;
        let s = suffix(values.len(), k);
        report.write(out, &format!("transitions{s}.csv"), &t)?;
        if let Some(p) = p {
            report.write(out, &format!("populations{s}.csv"), &p)?;
        }
    }
    if values.len() > 1 {
        report.write(out, "sweep_points.csv", &sweep_points_csv(parameter, &values))?;
    }
    Ok(())
}

/// Emission grid for one system: the configured grid plus the transition
/// frequencies inside its range.
pub fn emission_grid(cfg: &RunConfig, sys: &OpenSystem) -> Vec<f64> {
    let g = cfg.emission.omega;
    let mut grid = g.values();
    if cfg.emission.include_transitions {
        grid.extend(
            sys.transitions(cfg.gme.omega_min)
                .entries
                .iter()
                .map(|t| t.omega)
                .filter(|w| *w >= g.start && *w <= g.stop),
        );
        grid.sort_by(|a, b| a.total_cmp(b));
        grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    }
    grid
}

/// Raw emission spectrum of `kind` at one parameter point.
pub fn emission_point(
    cfg: &RunConfig,
    params: SystemParams,
    kind: OutputKind,
    grid: Option<&[f64]>,
) -> Result<SpectrumSeries, cqed_core::Error> {
    let sys = OpenSystem::new(params, cfg.system.n_levels)?;
    let ch = cfg.channels(&params, Some(kind)).map_err(|e| cqed_core::Error::InvalidParameter(e.message))?;
    let gme = build_gme(&sys, &ch, &cfg.gme_config())?;
    let l = full_liouvillian(&sys, &gme);
    let rho = steady_state(&l)?;
    let probe = if cfg.emission.derivative { sys.output_derivative(kind)? } else { sys.output_operator(kind)? };
    let own;
    let grid = match grid {
        Some(g) => g,
        None => {
            own = emission_grid(cfg, &sys);
            &own
        }
    };
    let opts = EmissionOptions { method: cfg.resolvent(), exec: ExecMode::Sequential };
    emission_spectrum(&l, &rho, &probe, grid, &opts)
}

fn run_emission(cfg: &RunConfig, out: &Path, exec: ExecMode, report: &mut RunReport) -> Result<(), CliError> {
    let (parameter, values) = cfg.sweep_values();
    for kind in cfg.emission_kinds() {
        let series: Vec<Result<SpectrumSeries, CliError>> = map_indexed(exec, values.len(), |k| {
            emission_point(cfg, cfg.params_at(parameter, values[k]), kind, None).map_err(|e| {
                let mut p = point(Mode::Emission, parameter, values[k]);
                p["probe"] = json!(kind.name());
                CliError::solver(e, p)
            })
        });
        let mut series = series.into_iter().collect::<Result<Vec<_>, _>>()?;
        for s in series.iter_mut() {
            s.set_log_floor(cfg.output.log_floor);
        }
        normalize_set(&mut series, cfg.normalization());
        for (k, s) in series.iter().enumerate() {
            let name = format!("emission_{}{}.csv", kind.name(), suffix(values.len(), k));
            report.write(out, &name, &csv(|w| s.write_csv(w)))?;
        }
    }
    if values.len() > 1 {
        report.write(out, "sweep_points.csv", &sweep_points_csv(parameter, &values))?;
    }
    Ok(())
}

/// Reflectivity setup for one probe; the probe bath is the port.
pub fn reflectivity_setup(cfg: &RunConfig, probe: Probe) -> Result<ReflectivitySetup, CliError> {
    let drive = cfg.drive.as_ref().ok_or_else(|| CliError::config("reflectivity requires a drive block"))?;
    let params = cfg.params();
    let port = cfg
        .baths
        .iter()
        .find(|b| b.kind == BathKind::Resonator && b.operator == "probe")
        .ok_or_else(|| CliError::config("no port bath"))?;
    let qubit = cfg.baths.iter().find(|b| b.kind == BathKind::Qubit);
    let extra_cfg = RunConfig {
        baths: cfg
            .baths
            .iter()
            .filter(|b| b.kind == BathKind::Resonator && b.operator != "probe")
            .cloned()
            .collect(),
        ..cfg.clone()
    };
    Ok(ReflectivitySetup {
        base: params,
        probe,
        gamma_port: port.gamma,
        port_temperature: port.temperature,
        gamma_qubit: qubit.map_or(0.0, |q| q.gamma),
        qubit_temperature: qubit.map_or(0.0, |q| q.temperature),
        extra_channels: extra_cfg.channels(&params, None)?,
        b_in: drive.b_in,
        phase: drive.phase,
        floquet_order: drive.floquet_order,
        n_levels: cfg.system.n_levels,
        gme: cfg.gme_config(),
        readout: cfg.readout(),
    })
}

/// `(drive grid, offset grid)` of a reflectivity run.
pub fn reflectivity_grids(cfg: &RunConfig) -> (Vec<f64>, Vec<f64>) {
    let drive = cfg.drive.as_ref().and_then(|d| d.omega_d);
    match &cfg.sweep {
        Some(s) if s.parameter == SweepParameter::OmegaD => (s.grid().values(), vec![cfg.system.epsilon]),
        Some(s) => (drive.map(|g| g.values()).unwrap_or_default(), s.grid().values()),
        None => (drive.map(|g| g.values()).unwrap_or_default(), vec![cfg.system.epsilon]),
    }
}

fn run_reflectivity(cfg: &RunConfig, out: &Path, exec: ExecMode, report: &mut RunReport) -> Result<(), CliError> {
    let (drive, offsets) = reflectivity_grids(cfg);
    for name in &cfg.reflectivity.probes {
        let probe = Probe::from_name(name).unwrap();
        let setup = reflectivity_setup(cfg, probe)?;
        let map = reflectivity_sweep(&setup, &drive, &offsets, exec).map_err(|e| CliError::config(e.to_string()))?;
        report.write(out, &format!("reflectivity_{name}.csv"), &csv(|w| map.write_csv(w)))?;
        for f in &map.failures {
            let p = json!({
                "mode": "reflectivity",
                "probe": name,
                "omega_d": f.omega_d,
                "epsilon": f.epsilon,
                "error": f.error.to_string(),
            });
            if report.error.is_none() {
                report.error = Some(CliError::solver(f.error.clone(), p.clone()));
            }
            report.failures.push(p);
        }
    }
    Ok(())
}

fn run_matrix_elements(cfg: &RunConfig, out: &Path, exec: ExecMode, report: &mut RunReport) -> Result<(), CliError> {
    let (parameter, values) = cfg.sweep_values();
    let (bases, warnings) = labelled_bases(cfg, parameter, &values, exec, Mode::MatrixElements)?;
    report.warnings.extend(warnings);
    let table = matrix_elements(cfg, parameter, &values, bases)?;
    report.write(out, "matrix_elements.csv", &csv(|w| table.write_csv(w)))?;
    Ok(())
}

pub fn matrix_elements(
    cfg: &RunConfig,
    parameter: SweepParameter,
    values: &[f64],
    bases: Vec<DressedBasis>,
) -> Result<cqed_core::spectra::MatrixElementTable, CliError> {
    let points: Vec<SweepPoint> = bases
        .into_iter()
        .zip(values)
        .map(|(basis, &value)| SweepPoint { value, params: cfg.params_at(parameter, value), basis })
        .collect();
    let ops: Vec<ReportOperator> =
        cfg.matrix_elements.operators.iter().map(|o| ReportOperator::from_name(o).unwrap()).collect();
    let transitions: Vec<(String, String)> =
        cfg.matrix_elements.transitions.iter().map(|[i, j]| (i.clone(), j.clone())).collect();
    matrix_element_report(&points, &ops, &transitions).map_err(|e| match e {
        cqed_core::Error::UnknownLabel(_) | cqed_core::Error::KindMismatch { .. } => CliError::config(e.to_string()),
        other => CliError::solver(other, json!({ "mode": Mode::MatrixElements.name() })),
    })
}
