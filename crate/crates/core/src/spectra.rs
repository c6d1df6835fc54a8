//! Emission spectra, reflectivity and matrix-element reports.

use std::io::{self, Write};

use nalgebra::{DVector, Schur};
use num_complex::Complex64;

use crate::dressed::{diagonalize_params, frequency_components, Component, DressedBasis};
use crate::error::{Error, Result};
use crate::floquet::{floquet_harmonics, FloquetHarmonics};
use crate::gme::{build_drive_superoperators, build_gme, full_liouvillian, BathChannel, CouplingSign, GmeConfig};
use crate::par::{map_indexed, ExecMode};
use crate::rabi::{build_output_operator, build_static_hamiltonian, heisenberg_derivative, CMatrix, OutputKind, SystemParams};
use crate::steady::DensityMatrix;
use crate::superop::{vec, Superoperator};
use crate::system::OpenSystem;

pub const DEFAULT_LOG_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Normalization {
    RawArbitrary,
    /// Divided by the largest value over a set of spectra.
    MaxOfSet,
    /// Divided by its own maximum.
    PerSpectrum,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::RawArbitrary => "raw",
            Normalization::MaxOfSet => "max_of_set",
            Normalization::PerSpectrum => "per_spectrum",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    grid: Vec<f64>,
    values: Vec<f64>,
    normalization: Normalization,
    scale: f64,
    log_floor: f64,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty frequency grid".into()));
    }
    if grid.iter().any(|w| !w.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("frequency grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

impl SpectrumSeries {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_grid(&grid)?;
        if grid.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self {
            grid,
            values,
            normalization: Normalization::RawArbitrary,
            scale: 1.0,
            log_floor: DEFAULT_LOG_FLOOR,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn log_floor(&self) -> f64 {
        self.log_floor
    }

    pub fn set_log_floor(&mut self, floor: f64) {
        self.log_floor = floor;
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Grid point of the global maximum.
    pub fn argmax(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        self.grid[i]
    }

    /// Applies `mode`; `set_max` is the maximum over the set for `MaxOfSet`.
    pub fn normalize(&mut self, mode: Normalization, set_max: Option<f64>) {
        self.normalization = mode;
        self.scale = match mode {
            Normalization::RawArbitrary => 1.0,
            Normalization::PerSpectrum => self.max_value(),
            Normalization::MaxOfSet => set_max.unwrap_or_else(|| self.max_value()),
        };
        if !(self.scale > 0.0) {
            self.scale = 1.0;
        }
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.values.iter().map(|v| v / self.scale).collect()
    }

    /// `log10` of the normalized values, clipped below at `log_floor` times
    /// the displayed maximum (1 once normalized).
    pub fn log10(&self) -> Vec<f64> {
        let reference = match self.normalization {
            Normalization::RawArbitrary => self.max_value().max(f64::MIN_POSITIVE),
            _ => 1.0,
        };
        let floor = self.log_floor * reference;
        self.normalized().iter().map(|v| v.max(floor).log10()).collect()
    }

    /// `−min(values)/max(values)` when negative, else 0.
    pub fn positivity_defect(&self) -> f64 {
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = self.max_value();
        if min >= 0.0 || max <= 0.0 {
            0.0
        } else {
            -min / max
        }
    }

    /// CSV with columns `omega_over_omega_r,S_raw,S_normalized,log10_S`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "omega_over_omega_r,S_raw,S_normalized,log10_S")?;
        let norm = self.normalized();
        let logs = self.log10();
        for i in 0..self.grid.len() {
            writeln!(out, "{},{:e},{:e},{}", self.grid[i], self.values[i], norm[i], logs[i])?;
        }
        Ok(())
    }
}

/// Normalizes every series in `set` with a common or individual scale.
pub fn normalize_set(set: &mut [SpectrumSeries], mode: Normalization) {
    let max = set.iter().map(|s| s.max_value()).fold(f64::NEG_INFINITY, f64::max);
    for s in set {
        s.normalize(mode, Some(max));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ResolventMethod {
    /// One complex Schur factorization, then a triangular solve per frequency.
    #[default]
    Schur,
    /// LU factorization of `iω − 𝓛` at every frequency.
    Lu,
}

/// `(iω − 𝓛)^{-1}` for many ω.
pub enum Resolvent {
    Schur { q: CMatrix, t_transposed: CMatrix, scale: f64 },
    Lu { l: CMatrix, scale: f64 },
}

impl Resolvent {
    pub fn new(l: &Superoperator, method: ResolventMethod) -> Self {
        let scale = l.norm_max().max(1.0);
        if method == ResolventMethod::Schur {
            if let Some(s) = Schur::try_new(l.matrix().clone(), f64::EPSILON, 0) {
                let (q, t) = s.unpack();
                return Resolvent::Schur { q, t_transposed: t.transpose(), scale };
            }
        }
        Resolvent::Lu { l: l.matrix().clone(), scale }
    }

    pub fn method(&self) -> ResolventMethod {
        match self {
            Resolvent::Schur { .. } => ResolventMethod::Schur,
            Resolvent::Lu { .. } => ResolventMethod::Lu,
        }
    }

    /// `Tr[A (iω − 𝓛)^{-1} B]` for every ω of `grid`.
    pub fn correlate(&self, a: &CMatrix, b: &CMatrix, grid: &[f64], exec: ExecMode) -> Result<Vec<Complex64>> {
        // Tr[A M] = Σ_{rc} A_cr M_rc = vec(Aᵀ) · vec(M)
        let left = vec(&a.transpose());
        let right = vec(b);
        let res: Vec<Result<Complex64>> = match self {
            Resolvent::Schur { q, t_transposed, scale } => {
                let u = q.adjoint() * &right;
                let r = (left.transpose() * q).transpose();
                let n = u.len();
                map_indexed(exec, grid.len(), |g| {
                    let w = grid[g];
                    let z = Complex64::new(0.0, w);
                    let mut x: DVector<Complex64> = DVector::zeros(n);
                    for i in (0..n).rev() {
                        let col = t_transposed.column(i);
                        let mut acc = u[i];
                        for j in (i + 1)..n {
                            acc += col[j] * x[j];
                        }
                        let d = z - col[i];
                        if d.norm() < 1e-13 * scale {
                            return Err(Error::ResolventSingular(w));
                        }
                        x[i] = acc / d;
                    }
                    Ok(r.dot(&x))
                })
            }
            Resolvent::Lu { l, scale } => map_indexed(exec, grid.len(), |g| {
                let w = grid[g];
                let mut m = -l.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += Complex64::new(0.0, w);
                }
                let lu = m.lu();
                let det_ok = (0..lu.u().nrows()).all(|i| lu.u()[(i, i)].norm() > 1e-13 * scale);
                if !det_ok {
                    return Err(Error::ResolventSingular(w));
                }
                let x = lu.solve(&right).ok_or(Error::ResolventSingular(w))?;
                Ok(left.dot(&x))
            }),
        };
        res.into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmissionOptions {
    pub method: ResolventMethod,
    pub exec: ExecMode,
}

/// `S(ω) = Re Tr[Ẋ⁻ (iω − 𝓛)^{-1} (Ẋ⁺ ρ)]` with `Ẋ^±` the lowering and
/// raising parts of `x_dot` in the working dressed basis.
pub fn emission_spectrum(
    l: &Superoperator,
    rho: &DensityMatrix,
    x_dot: &CMatrix,
    grid: &[f64],
    opts: &EmissionOptions,
) -> Result<SpectrumSeries> {
    check_grid(grid)?;
    let n = l.dim();
    if x_dot.nrows() != n || rho.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x_dot.nrows().max(rho.dim()) });
    }
    let plus = frequency_components(x_dot, Component::Plus);
    let minus = frequency_components(x_dot, Component::Minus);
    let res = Resolvent::new(l, opts.method);
    let vals = res.correlate(&minus, &(&plus * rho.matrix()), grid, opts.exec)?;
    SpectrumSeries::new(grid.to_vec(), vals.iter().map(|z| z.re).collect())
}

/// Operator through which the port both drives and reads out the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Probe {
    /// X_M, inductive coupling.
    Inductive,
    /// X_C, capacitive coupling.
    Capacitive,
    /// a + a†, treated as an inductive (flux-like) coupling.
    FieldQuadrature,
}

impl Probe {
    pub fn output_kind(self) -> OutputKind {
        match self {
            Probe::Inductive => OutputKind::InductiveM,
            Probe::Capacitive => OutputKind::CapacitiveC,
            Probe::FieldQuadrature => OutputKind::FieldQuadrature,
        }
    }

    pub fn coupling(self) -> CouplingSign {
        match self {
            Probe::Capacitive => CouplingSign::Capacitive,
            Probe::Inductive | Probe::FieldQuadrature => CouplingSign::Inductive,
        }
    }

    pub fn name(self) -> &'static str {
        self.output_kind().name()
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Probe::Inductive, Probe::Capacitive, Probe::FieldQuadrature]
            .into_iter()
            .find(|p| p.name() == s)
    }
}

/// `|1 + s (√(ω_d γ/ω_r)/|b_in|) e^{i(φ+π/2)} Tr[X⁺ ρ^{−1}]|`, with `s = +1`
/// capacitive and `−1` inductive. The phase factor cancels the `e^{−iφ}`
/// that the drive imprints on `ρ^{−1}`.
#[allow(clippy::too_many_arguments)]
pub fn reflectivity_point(
    harmonics: &FloquetHarmonics,
    x_probe: &CMatrix,
    gamma_port: f64,
    b_in: f64,
    phase: f64,
    omega_d: f64,
    omega_r: f64,
    coupling: CouplingSign,
) -> Result<f64> {
    if b_in == 0.0 {
        return Err(Error::ZeroDrive);
    }
    let rho_m1 = harmonics
        .component(-1)
        .ok_or_else(|| Error::InvalidParameter("harmonics lack k = -1".into()))?;
    let plus = frequency_components(x_probe, Component::Plus);
    let tr = (&plus * rho_m1).trace();
    let amp = coupling.value() * (omega_d * gamma_port / omega_r).sqrt() / b_in.abs();
    let rot = Complex64::from_polar(1.0, phase + std::f64::consts::FRAC_PI_2);
    Ok((Complex64::new(1.0, 0.0) + rot * tr * amp).norm())
}

/// Port readout operator entering `Tr[X⁺ ρ^{−1}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Readout {
    /// `X⁺` itself, i.e. `Ẋ⁺ ≈ −iω_d X⁺`.
    #[default]
    Approximate,
    /// `Ẋ⁺ / (−iω_d)` with the exact commutator.
    ExactDerivative,
}

impl Readout {
    pub fn name(self) -> &'static str {
        match self {
            Readout::Approximate => "approximate",
            Readout::ExactDerivative => "exact_derivative",
        }
    }
}

/// Everything fixed across a reflectivity map except ω_d and ε.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivitySetup {
    pub base: SystemParams,
    pub probe: Probe,
    pub gamma_port: f64,
    pub port_temperature: f64,
    pub gamma_qubit: f64,
    pub qubit_temperature: f64,
    /// Further channels, e.g. internal resonator loss.
    pub extra_channels: Vec<BathChannel>,
    pub b_in: f64,
    pub phase: f64,
    pub floquet_order: usize,
    pub n_levels: usize,
    pub gme: GmeConfig,
    pub readout: Readout,
}

impl ReflectivitySetup {
    pub fn channels(&self, params: &SystemParams) -> Vec<BathChannel> {
        let mut ch = vec![
            BathChannel::resonator(self.gamma_port, self.port_temperature, params.omega_r, self.probe.output_kind()),
            BathChannel::qubit(self.gamma_qubit, self.qubit_temperature, params.delta, params.model_kind),
        ];
        ch.extend(self.extra_channels.iter().cloned());
        ch
    }
}

/// Static part of a reflectivity calculation at one ε.
pub struct ReflectivityModel {
    setup: ReflectivitySetup,
    system: OpenSystem,
    liouvillian: Superoperator,
    x: CMatrix,
    x_dot: CMatrix,
}

impl ReflectivityModel {
    pub fn new(setup: &ReflectivitySetup, epsilon: f64) -> Result<Self> {
        let params = SystemParams { epsilon, ..setup.base };
        let system = OpenSystem::new(params, setup.n_levels)?;
        let gme = build_gme(&system, &setup.channels(&params), &setup.gme)?;
        let liouvillian = full_liouvillian(&system, &gme);
        let x = system.output_operator(setup.probe.output_kind())?;
        let x_dot = system.output_derivative(setup.probe.output_kind())?;
        Ok(Self { setup: setup.clone(), system, liouvillian, x, x_dot })
    }

    pub fn system(&self) -> &OpenSystem {
        &self.system
    }

    pub fn liouvillian(&self) -> &Superoperator {
        &self.liouvillian
    }

    pub fn harmonics(&self, omega_d: f64, order: usize) -> Result<FloquetHarmonics> {
        let s = &self.setup;
        let (p, m) = build_drive_superoperators(
            &self.x,
            s.gamma_port,
            s.b_in,
            s.phase,
            omega_d,
            self.system.params().omega_r,
            s.probe.coupling(),
        )?;
        floquet_harmonics(&self.liouvillian, &p, &m, omega_d, order)
    }

    pub fn s11_with_order(&self, omega_d: f64, order: usize) -> Result<f64> {
        let s = &self.setup;
        let h = self.harmonics(omega_d, order)?;
        let readout = match s.readout {
            Readout::Approximate => self.x.clone(),
            Readout::ExactDerivative => &self.x_dot * Complex64::new(0.0, 1.0 / omega_d),
        };
        reflectivity_point(&h, &readout, s.gamma_port, s.b_in, s.phase, omega_d, self.system.params().omega_r, s.probe.coupling())
    }

    pub fn s11(&self, omega_d: f64) -> Result<f64> {
        self.s11_with_order(omega_d, self.setup.floquet_order)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub omega_d: f64,
    pub epsilon: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivityMap {
    pub drive_grid: Vec<f64>,
    pub offset_grid: Vec<f64>,
    /// Row-major over `(ε, ω_d)`; NaN where the point failed.
    pub values: Vec<f64>,
    pub probe: Probe,
    pub coupling: CouplingSign,
    pub failures: Vec<PointFailure>,
}

impl ReflectivityMap {
    pub fn get(&self, i_eps: usize, i_omega: usize) -> f64 {
        self.values[i_eps * self.drive_grid.len() + i_omega]
    }

    /// CSV with columns `omega_d_over_omega_r,epsilon_over_omega_r,S11`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "omega_d_over_omega_r,epsilon_over_omega_r,S11")?;
        for (e, eps) in self.offset_grid.iter().enumerate() {
            for (w, wd) in self.drive_grid.iter().enumerate() {
                writeln!(out, "{},{},{}", wd, eps, self.get(e, w))?;
            }
        }
        Ok(())
    }
}

pub fn reflectivity_sweep(
    setup: &ReflectivitySetup,
    drive_grid: &[f64],
    offset_grid: &[f64],
    exec: ExecMode,
) -> Result<ReflectivityMap> {
    if drive_grid.is_empty() || offset_grid.is_empty() {
        return Err(Error::InvalidParameter("empty reflectivity grid".into()));
    }
    let models: Vec<Result<ReflectivityModel>> =
        map_indexed(exec, offset_grid.len(), |e| ReflectivityModel::new(setup, offset_grid[e]));
    let nw = drive_grid.len();
    let points: Vec<Result<f64>> = map_indexed(exec, offset_grid.len() * nw, |k| {
        let (e, w) = (k / nw, k % nw);
        match &models[e] {
            Ok(m) => m.s11(drive_grid[w]),
            Err(err) => Err(err.clone()),
        }
    });
    let mut values = Vec::with_capacity(points.len());
    let mut failures = Vec::new();
    for (k, p) in points.into_iter().enumerate() {
        match p {
            Ok(v) => values.push(v),
            Err(error) => {
                values.push(f64::NAN);
                failures.push(PointFailure { omega_d: drive_grid[k % nw], epsilon: offset_grid[k / nw], error });
            }
        }
    }
    Ok(ReflectivityMap {
        drive_grid: drive_grid.to_vec(),
        offset_grid: offset_grid.to_vec(),
        values,
        probe: setup.probe,
        coupling: setup.probe.coupling(),
        failures,
    })
}

/// Operator entering a matrix-element report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportOperator {
    Plain(OutputKind),
    Derivative(OutputKind),
}

impl ReportOperator {
    pub fn name(self) -> String {
        match self {
            ReportOperator::Plain(k) => k.name().to_string(),
            ReportOperator::Derivative(k) => match k {
                OutputKind::FieldQuadrature => "a_plus_adag_dot".to_string(),
                _ => k.name().replacen("x_", "xdot_", 1),
            },
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        let kinds = [OutputKind::InductiveM, OutputKind::CapacitiveC, OutputKind::CavityD, OutputKind::FieldQuadrature];
        kinds
            .iter()
            .flat_map(|&k| [ReportOperator::Plain(k), ReportOperator::Derivative(k)])
            .find(|op| op.name() == s)
    }

    /// The operator in the full dressed basis of `basis`.
    pub fn dressed(self, params: &SystemParams, basis: &DressedBasis) -> Result<CMatrix> {
        let op = match self {
            ReportOperator::Plain(k) => build_output_operator(k, params)?,
            ReportOperator::Derivative(k) => {
                heisenberg_derivative(&build_output_operator(k, params)?, &build_static_hamiltonian(params)?)?
            }
        };
        Ok(basis.to_dressed(&op))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixElementRow {
    pub sweep_value: f64,
    pub i_label: String,
    pub j_label: String,
    pub operator: String,
    /// `⟨i|O|j⟩` with eigenvector phases as given by the basis.
    pub amplitude: Complex64,
    pub abs_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatrixElementTable {
    pub rows: Vec<MatrixElementRow>,
}

impl MatrixElementTable {
    pub fn select(&self, i_label: &str, j_label: &str, operator: &str) -> Vec<&MatrixElementRow> {
        self.rows
            .iter()
            .filter(|r| r.i_label == i_label && r.j_label == j_label && r.operator == operator)
            .collect()
    }

    /// CSV with columns `sweep_value,i_label,j_label,operator,abs_sq`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "sweep_value,i_label,j_label,operator,abs_sq")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{},{:e}", r.sweep_value, r.i_label, r.j_label, r.operator, r.abs_sq)?;
        }
        Ok(())
    }
}

/// One sweep point of a matrix-element report.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub params: SystemParams,
    pub basis: DressedBasis,
}

impl SweepPoint {
    pub fn new(value: f64, params: SystemParams) -> Result<Self> {
        Ok(Self { value, params, basis: diagonalize_params(&params)? })
    }
}

/// `|⟨i|O|j⟩|²` for every point, labelled transition and operator.
pub fn matrix_element_report(
    points: &[SweepPoint],
    operators: &[ReportOperator],
    transitions: &[(String, String)],
) -> Result<MatrixElementTable> {
    let mut rows = Vec::new();
    for pt in points {
        let mats: Vec<CMatrix> = operators
            .iter()
            .map(|op| op.dressed(&pt.params, &pt.basis))
            .collect::<Result<_>>()?;
        for (il, jl) in transitions {
            let i = pt.basis.index_of(il)?;
            let j = pt.basis.index_of(jl)?;
            for (op, m) in operators.iter().zip(&mats) {
                let amplitude = m[(i, j)];
                rows.push(MatrixElementRow {
                    sweep_value: pt.value,
                    i_label: il.clone(),
                    j_label: jl.clone(),
                    operator: op.name(),
                    amplitude,
                    abs_sq: amplitude.norm_sqr(),
                });
            }
        }
    }
    Ok(MatrixElementTable { rows })
}
