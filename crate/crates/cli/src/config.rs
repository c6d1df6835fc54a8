//! Run configuration. All frequencies, rates and temperatures are in units of ω_r.

use std::path::Path;

use cqed_core::gme::{BathChannel, DephasingWeight, GmeConfig};
use cqed_core::rabi::{ModelKind, OutputKind, SystemParams};
use cqed_core::spectra::{Normalization, Probe, Readout, ReportOperator, ResolventMethod};
use cqed_core::dressed::LabelScheme;
use cqed_core::system::JumpKind;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FIG2: &str = include_str!("../configs/fig2.toml");
pub const FIG6: &str = include_str!("../configs/fig6.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Eigen,
    Emission,
    Reflectivity,
    MatrixElements,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Eigen => "eigen",
            Mode::Emission => "emission",
            Mode::Reflectivity => "reflectivity",
            Mode::MatrixElements => "matrix_elements",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Circuit,
    CavityQed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default = "default_model")]
    pub model: Model,
    #[serde(default = "default_n_fock")]
    pub n_fock: usize,
    #[serde(default = "default_n_levels")]
    pub n_levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BathKind {
    Resonator,
    Qubit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathBlock {
    pub kind: BathKind,
    pub gamma: f64,
    #[serde(default)]
    pub temperature: f64,
    /// Resonator coupling operator: `probe` (the probe being computed),
    /// `x_m`, `x_c`, `x_d` or `a_plus_adag`. Qubit baths always couple
    /// through `sigma_tilde_x` (circuit) or `sigma_x` (cavity QED).
    #[serde(default = "default_operator")]
    pub operator: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dephasing {
    AsPrinted,
    ZeroFrequencyLimit,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmeBlock {
    /// Filter width; absent means 10 times the largest bath rate.
    #[serde(default)]
    pub filter_b: Option<f64>,
    #[serde(default)]
    pub secular: bool,
    #[serde(default = "default_dephasing")]
    pub dephasing: Dephasing,
    #[serde(default = "default_omega_min")]
    pub omega_min: f64,
    #[serde(default = "default_filter_cutoff")]
    pub filter_cutoff: f64,
}

impl Default for GmeBlock {
    fn default() -> Self {
        Self {
            filter_b: None,
            secular: false,
            dephasing: default_dephasing(),
            omega_min: default_omega_min(),
            filter_cutoff: default_filter_cutoff(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|k| self.start + step * k as f64).collect()
    }

    fn validate(&self, what: &str) -> Result<(), CliError> {
        if self.points < 1 {
            return Err(CliError::config(format!("{what}: points must be at least 1")));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start > self.stop {
            return Err(CliError::config(format!("{what}: need finite start <= stop")));
        }
        if self.points > 1 && self.start == self.stop {
            return Err(CliError::config(format!("{what}: several points need start < stop")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    Approximate,
    ExactDerivative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveBlock {
    #[serde(default = "default_b_in")]
    pub b_in: f64,
    #[serde(default = "default_phase")]
    pub phase: f64,
    /// Drive frequency grid; required unless the sweep runs over `omega_d`.
    #[serde(default)]
    pub omega_d: Option<Grid>,
    #[serde(default = "default_floquet_order")]
    pub floquet_order: usize,
    #[serde(default = "default_readout")]
    pub readout: ReadoutMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Eta,
    Epsilon,
    OmegaD,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Eta => "eta",
            SweepParameter::Epsilon => "epsilon",
            SweepParameter::OmegaD => "omega_d",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    #[serde(default = "default_points")]
    pub points: usize,
}

impl SweepBlock {
    pub fn grid(&self) -> Grid {
        Grid { start: self.start, stop: self.stop, points: self.points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    RawArbitrary,
    MaxOfSet,
    PerSpectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Labels {
    JaynesCummings,
    Ordinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_normalization")]
    pub normalization: NormalizationMode,
    /// Relative to the maximum of each spectrum.
    #[serde(default = "default_log_floor")]
    pub log_floor: f64,
    #[serde(default = "default_labels")]
    pub labels: Labels,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            normalization: default_normalization(),
            log_floor: default_log_floor(),
            labels: default_labels(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolventChoice {
    Schur,
    Lu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionBlock {
    #[serde(default = "default_emission_probes")]
    pub probes: Vec<String>,
    #[serde(default = "default_omega_grid")]
    pub omega: Grid,
    /// Adds every transition frequency inside the grid range to the grid.
    #[serde(default = "default_true")]
    pub include_transitions: bool,
    /// Probe the time derivative of the output operator (false: the operator itself).
    #[serde(default = "default_true")]
    pub derivative: bool,
    #[serde(default = "default_resolvent")]
    pub resolvent: ResolventChoice,
}

impl Default for EmissionBlock {
    fn default() -> Self {
        Self {
            probes: default_emission_probes(),
            omega: default_omega_grid(),
            include_transitions: true,
            derivative: true,
            resolvent: default_resolvent(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectivityBlock {
    #[serde(default = "default_reflectivity_probes")]
    pub probes: Vec<String>,
}

impl Default for ReflectivityBlock {
    fn default() -> Self {
        Self { probes: default_reflectivity_probes() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixElementsBlock {
    #[serde(default = "default_report_operators")]
    pub operators: Vec<String>,
    #[serde(default = "default_transitions")]
    pub transitions: Vec<[String; 2]>,
}

impl Default for MatrixElementsBlock {
    fn default() -> Self {
        Self { operators: default_report_operators(), transitions: default_transitions() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    pub system: SystemBlock,
    #[serde(default)]
    pub baths: Vec<BathBlock>,
    #[serde(default)]
    pub gme: GmeBlock,
    #[serde(default)]
    pub drive: Option<DriveBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub emission: EmissionBlock,
    #[serde(default)]
    pub reflectivity: ReflectivityBlock,
    #[serde(default)]
    pub matrix_elements: MatrixElementsBlock,
}

fn default_model() -> Model {
    Model::Circuit
}
fn default_n_fock() -> usize {
    30
}
fn default_n_levels() -> usize {
    12
}
fn default_operator() -> String {
    "probe".into()
}
fn default_dephasing() -> Dephasing {
    Dephasing::AsPrinted
}
fn default_omega_min() -> f64 {
    1e-9
}
fn default_filter_cutoff() -> f64 {
    1e-12
}
fn default_b_in() -> f64 {
    0.03
}
fn default_phase() -> f64 {
    -std::f64::consts::FRAC_PI_2
}
fn default_floquet_order() -> usize {
    2
}
fn default_readout() -> ReadoutMode {
    ReadoutMode::Approximate
}
fn default_points() -> usize {
    1
}
fn default_directory() -> String {
    "out".into()
}
fn default_normalization() -> NormalizationMode {
    NormalizationMode::MaxOfSet
}
fn default_log_floor() -> f64 {
    cqed_core::spectra::DEFAULT_LOG_FLOOR
}
fn default_labels() -> Labels {
    Labels::JaynesCummings
}
fn default_emission_probes() -> Vec<String> {
    vec!["x_c".into(), "x_m".into()]
}
fn default_omega_grid() -> Grid {
    Grid { start: 0.005, stop: 2.5, points: 500 }
}
fn default_true() -> bool {
    true
}
fn default_resolvent() -> ResolventChoice {
    ResolventChoice::Schur
}
fn default_reflectivity_probes() -> Vec<String> {
    vec!["x_m".into(), "a_plus_adag".into(), "x_c".into()]
}
fn default_report_operators() -> Vec<String> {
    vec!["xdot_m".into(), "xdot_c".into()]
}
fn default_transitions() -> Vec<[String; 2]> {
    vec![["1-".into(), "0".into()], ["1+".into(), "0".into()]]
}

fn output_kind(name: &str) -> Option<OutputKind> {
    [OutputKind::InductiveM, OutputKind::CapacitiveC, OutputKind::CavityD, OutputKind::FieldQuadrature]
        .into_iter()
        .find(|k| k.name() == name)
}

impl RunConfig {
    /// Reads a TOML file, or one of the bundled configs `fig2` / `fig6`.
    pub fn load(path: &str) -> Result<Self, CliError> {
        let text = if Path::new(path).exists() {
            std::fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {path}: {e}")))?
        } else {
            match path {
                "fig2" => FIG2.to_string(),
                "fig6" => FIG6.to_string(),
                _ => return Err(CliError::config(format!("no config file {path:?} and no bundled config of that name"))),
            }
        };
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        let qubit_op = match cfg.system.model {
            Model::Circuit => "sigma_tilde_x",
            Model::CavityQed => "sigma_x",
        };
        for b in cfg.baths.iter_mut().filter(|b| b.kind == BathKind::Qubit) {
            b.operator = qubit_op.into();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.system;
        self.params().validate().map_err(|e| CliError::config(e.to_string()))?;
        if s.n_levels < 2 || s.n_levels > 2 * s.n_fock {
            return Err(CliError::config(format!("n_levels must lie in 2..={}", 2 * s.n_fock)));
        }
        for b in &self.baths {
            if !(b.gamma >= 0.0 && b.gamma.is_finite() && b.temperature >= 0.0 && b.temperature.is_finite()) {
                return Err(CliError::config("bath gamma and temperature must be finite and non-negative"));
            }
            if b.kind == BathKind::Resonator && b.operator != "probe" && output_kind(&b.operator).is_none() {
                return Err(CliError::config(format!("unknown bath operator {:?}", b.operator)));
            }
        }
        if let Some(b) = self.gme.filter_b {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(CliError::config("gme.filter_b must be finite and non-negative"));
            }
        }
        if let Some(sw) = &self.sweep {
            sw.grid().validate("sweep")?;
        }
        if let Some(d) = &self.drive {
            if d.floquet_order < 1 {
                return Err(CliError::config("drive.floquet_order must be at least 1"));
            }
            if d.b_in == 0.0 || !d.b_in.is_finite() {
                return Err(CliError::config("drive.b_in must be finite and nonzero"));
            }
            if let Some(g) = &d.omega_d {
                g.validate("drive.omega_d")?;
                if g.start <= 0.0 {
                    return Err(CliError::config("drive.omega_d must be positive"));
                }
            }
        }
        self.emission.omega.validate("emission.omega")?;
        if self.emission.omega.start <= 0.0 {
            return Err(CliError::config("emission.omega must be positive"));
        }
        if !(self.output.log_floor > 0.0) {
            return Err(CliError::config("output.log_floor must be positive"));
        }
        for p in &self.emission.probes {
            output_kind(p).ok_or_else(|| CliError::config(format!("unknown emission probe {p:?}")))?;
        }
        for p in &self.reflectivity.probes {
            Probe::from_name(p).ok_or_else(|| CliError::config(format!("unknown reflectivity probe {p:?}")))?;
        }
        for o in &self.matrix_elements.operators {
            ReportOperator::from_name(o).ok_or_else(|| CliError::config(format!("unknown operator {o:?}")))?;
        }
        Ok(())
    }

    /// Checks the mode-specific requirements.
    pub fn validate_for(&self, mode: Mode) -> Result<(), CliError> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(CliError::config(format!("config is for mode {}, not {}", m.name(), mode.name())));
            }
        }
        for b in self.baths.iter().filter(|b| b.kind == BathKind::Resonator && b.operator != "probe") {
            self.check_kind(&b.operator)?;
        }
        let param = self.sweep.as_ref().map(|s| s.parameter);
        match mode {
            Mode::Eigen | Mode::MatrixElements => {
                if param == Some(SweepParameter::OmegaD) {
                    return Err(CliError::config(format!("{} sweeps run over eta or epsilon", mode.name())));
                }
                if mode == Mode::Eigen && self.baths.iter().any(|b| b.kind == BathKind::Resonator && b.operator == "probe") {
                    return Err(CliError::config("eigen mode has no probe; name the resonator bath operator"));
                }
            }
            Mode::Emission => {
                if param == Some(SweepParameter::OmegaD) {
                    return Err(CliError::config("emission sweeps run over eta or epsilon"));
                }
                if self.baths.is_empty() {
                    return Err(CliError::config("emission needs at least one bath"));
                }
                if self.emission.probes.is_empty() {
                    return Err(CliError::config("emission.probes is empty"));
                }
                for p in &self.emission.probes {
                    self.check_kind(p)?;
                }
            }
            Mode::Reflectivity => {
                let drive = self.drive.as_ref().ok_or_else(|| CliError::config("reflectivity requires a drive block"))?;
                match param {
                    Some(SweepParameter::Eta) => {
                        return Err(CliError::config("reflectivity sweeps run over epsilon or omega_d"))
                    }
                    Some(SweepParameter::OmegaD) => {}
                    _ if drive.omega_d.is_none() => {
                        return Err(CliError::config("reflectivity needs drive.omega_d or an omega_d sweep"))
                    }
                    _ => {}
                }
                let ports = self.baths.iter().filter(|b| b.kind == BathKind::Resonator && b.operator == "probe").count();
                if ports != 1 {
                    return Err(CliError::config("reflectivity needs exactly one resonator bath with operator = \"probe\""));
                }
                if self.baths.iter().filter(|b| b.kind == BathKind::Qubit).count() > 1 {
                    return Err(CliError::config("reflectivity takes at most one qubit bath"));
                }
                if self.reflectivity.probes.is_empty() {
                    return Err(CliError::config("reflectivity.probes is empty"));
                }
                if self.system.model != Model::Circuit {
                    return Err(CliError::config("reflectivity probes are defined for the circuit model"));
                }
            }
        }
        Ok(())
    }

    /// X_M and X_C belong to the circuit model, X_D to cavity QED.
    fn check_kind(&self, name: &str) -> Result<(), CliError> {
        let ok = match output_kind(name) {
            Some(OutputKind::InductiveM | OutputKind::CapacitiveC) => self.system.model == Model::Circuit,
            Some(OutputKind::CavityD) => self.system.model == Model::CavityQed,
            Some(OutputKind::FieldQuadrature) => true,
            None => false,
        };
        if ok {
            Ok(())
        } else {
            Err(CliError::config(format!("operator {name:?} is not available for this model")))
        }
    }

    pub fn params(&self) -> SystemParams {
        let s = &self.system;
        let model = match s.model {
            Model::Circuit => ModelKind::Circuit,
            Model::CavityQed => ModelKind::CavityQed,
        };
        SystemParams::new(s.delta, s.epsilon, s.eta, s.n_fock).with_model(model)
    }

    pub fn gme_config(&self) -> GmeConfig {
        GmeConfig {
            filter_b: self.gme.filter_b,
            omega_min: self.gme.omega_min,
            secular_only: self.gme.secular,
            dephasing: match self.gme.dephasing {
                Dephasing::AsPrinted => DephasingWeight::AsPrinted,
                Dephasing::ZeroFrequencyLimit => DephasingWeight::ZeroFrequencyLimit,
                Dephasing::Off => DephasingWeight::Off,
            },
            filter_cutoff: self.gme.filter_cutoff,
        }
    }

    /// Bath channels with `probe` resolved to `probe`.
    pub fn channels(&self, params: &SystemParams, probe: Option<OutputKind>) -> Result<Vec<BathChannel>, CliError> {
        self.baths
            .iter()
            .map(|b| match b.kind {
                BathKind::Qubit => Ok(BathChannel::qubit(b.gamma, b.temperature, params.delta, params.model_kind)),
                BathKind::Resonator => {
                    let kind = if b.operator == "probe" {
                        probe.ok_or_else(|| CliError::config("bath operator \"probe\" used outside a probe context"))?
                    } else {
                        output_kind(&b.operator).unwrap()
                    };
                    let mut ch = BathChannel::resonator(b.gamma, b.temperature, params.omega_r, kind);
                    ch.jump = JumpKind::Output(kind);
                    Ok(ch)
                }
            })
            .collect()
    }

    pub fn normalization(&self) -> Normalization {
        match self.output.normalization {
            NormalizationMode::RawArbitrary => Normalization::RawArbitrary,
            NormalizationMode::MaxOfSet => Normalization::MaxOfSet,
            NormalizationMode::PerSpectrum => Normalization::PerSpectrum,
        }
    }

    pub fn label_scheme(&self) -> LabelScheme {
        match self.output.labels {
            Labels::JaynesCummings => LabelScheme::JaynesCummings,
            Labels::Ordinal => LabelScheme::Ordinal,
        }
    }

    pub fn resolvent(&self) -> ResolventMethod {
        match self.emission.resolvent {
            ResolventChoice::Schur => ResolventMethod::Schur,
            ResolventChoice::Lu => ResolventMethod::Lu,
        }
    }

    pub fn readout(&self) -> Readout {
        match self.drive.as_ref().map(|d| d.readout) {
            Some(ReadoutMode::ExactDerivative) => Readout::ExactDerivative,
            _ => Readout::Approximate,
        }
    }

    pub fn emission_kinds(&self) -> Vec<OutputKind> {
        self.emission.probes.iter().filter_map(|p| output_kind(p)).collect()
    }

    /// Sweep values, or the single configured value when no sweep is given.
    pub fn sweep_values(&self) -> (SweepParameter, Vec<f64>) {
        match &self.sweep {
            Some(s) => (s.parameter, s.grid().values()),
            None => (SweepParameter::Eta, vec![self.system.eta]),
        }
    }

    /// System parameters at one sweep value.
    pub fn params_at(&self, parameter: SweepParameter, value: f64) -> SystemParams {
        let mut p = self.params();
        match parameter {
            SweepParameter::Eta => p.eta = value,
            SweepParameter::Epsilon => p.epsilon = value,
            SweepParameter::OmegaD => {}
        }
        p
    }
}
