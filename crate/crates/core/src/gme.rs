//! Generalized master equation in the dressed basis.
//!
//! For every channel `i` with coupling operator `A_i` and every pair of
//! positive transition frequencies `(ω, ω')` the Liouvillian collects four
//! thermal term groups with rates `γ_i ω/ω_i n_th(ω, T_i)` and
//! `γ_i ω/ω_i (n_th(ω, T_i) + 1)`, cross terms weighted by the Gaussian
//! filter `F(ω, ω') = exp(−(ω − ω')²/(2b²))`. The zero-frequency part of
//! the qubit operator adds a pure-dephasing dissipator.

use num_complex::Complex64;

use crate::dressed::{frequency_components, per_transition_components, Component, MERGE_TOL};
use crate::error::{Error, Result};
use crate::rabi::{CMatrix, ModelKind, OutputKind};
use crate::superop::Superoperator;
use crate::system::{JumpKind, OpenSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Resonator,
    Qubit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathChannel {
    pub which: ChannelKind,
    pub gamma: f64,
    pub temperature: f64,
    /// ω_i in the rate `γ_i ω/ω_i`: ω_r for the resonator, Δ for the qubit.
    pub ref_frequency: f64,
    pub jump: JumpKind,
}

impl BathChannel {
    pub fn resonator(gamma: f64, temperature: f64, omega_r: f64, jump: OutputKind) -> Self {
        Self {
            which: ChannelKind::Resonator,
            gamma,
            temperature,
            ref_frequency: omega_r,
            jump: JumpKind::Output(jump),
        }
    }

    /// Qubit bath through σ̃_x (circuit) or σ_x (cavity QED).
    pub fn qubit(gamma: f64, temperature: f64, delta: f64, model: ModelKind) -> Self {
        Self {
            which: ChannelKind::Qubit,
            gamma,
            temperature,
            ref_frequency: delta,
            jump: match model {
                ModelKind::Circuit => JumpKind::SigmaTildeX,
                ModelKind::CavityQed => JumpKind::SigmaX,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma = {}", self.gamma)));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!("temperature = {}", self.temperature)));
        }
        if !(self.ref_frequency > 0.0 && self.ref_frequency.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reference frequency = {}",
                self.ref_frequency
            )));
        }
        Ok(())
    }
}

/// Weight of the zero-frequency dephasing dissipator, in units of γ_q/Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DephasingWeight {
    /// `T_q 𝒟 + (T_q + 1) 𝒟`, total `2T_q + 1`.
    AsPrinted,
    /// `lim_{ω→0} ω n_th` and `ω (n_th + 1)` both tend to `T_q`: total `2T_q`.
    ZeroFrequencyLimit,
    Off,
}

impl DephasingWeight {
    pub fn factor(self, temperature: f64) -> f64 {
        match self {
            DephasingWeight::AsPrinted => 2.0 * temperature + 1.0,
            DephasingWeight::ZeroFrequencyLimit => 2.0 * temperature,
            DephasingWeight::Off => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmeConfig {
    /// Gaussian filter width b; `None` selects `10 · max γ`.
    pub filter_b: Option<f64>,
    /// Transitions at or below this frequency are excluded from the rate terms.
    pub omega_min: f64,
    /// Equivalent to b → 0.
    pub secular_only: bool,
    pub dephasing: DephasingWeight,
    /// Frequency pairs with F below this are dropped.
    pub filter_cutoff: f64,
}

impl Default for GmeConfig {
    fn default() -> Self {
        Self {
            filter_b: None,
            omega_min: 1e-9,
            secular_only: false,
            dephasing: DephasingWeight::AsPrinted,
            filter_cutoff: 1e-12,
        }
    }
}

impl GmeConfig {
    pub fn secular() -> Self {
        Self {
            secular_only: true,
            ..Self::default()
        }
    }

    pub fn resolved_filter(&self, channels: &[BathChannel]) -> f64 {
        if self.secular_only {
            return 0.0;
        }
        self.filter_b.unwrap_or_else(|| {
            10.0 * channels.iter().fold(0.0f64, |m, c| m.max(c.gamma))
        })
    }
}

/// Bose–Einstein occupation `1/(e^{ω/T} − 1)`, zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::NonPositiveFrequency(omega));
    }
    if temperature <= 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// `ω · n_th(ω, T)`, finite for ω → 0 where it tends to T.
pub fn thermal_weight(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    if omega <= 0.0 {
        return temperature;
    }
    omega / (omega / temperature).exp_m1()
}

pub fn gaussian_filter(omega: f64, omega_prime: f64, b: f64) -> f64 {
    if omega == omega_prime {
        return 1.0;
    }
    if b <= 0.0 {
        return 0.0;
    }
    let d = omega - omega_prime;
    (-d * d / (2.0 * b * b)).exp()
}

fn check_channels(sys: &OpenSystem, channels: &[BathChannel]) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::EmptyChannels);
    }
    let model = sys.params().model_kind;
    for ch in channels {
        ch.validate()?;
        let ok = match (ch.jump, model) {
            (JumpKind::Output(OutputKind::CavityD), ModelKind::Circuit) => false,
            (JumpKind::Output(OutputKind::InductiveM | OutputKind::CapacitiveC), ModelKind::CavityQed) => {
                false
            }
            _ => true,
        };
        if !ok {
            return Err(Error::InconsistentBasis(format!(
                "jump operator {} on a {} model",
                ch.jump.name(),
                model.name()
            )));
        }
    }
    Ok(())
}

/// Dissipative part 𝓛_g of the generalized master equation.
pub fn build_gme(sys: &OpenSystem, channels: &[BathChannel], config: &GmeConfig) -> Result<Superoperator> {
    check_channels(sys, channels)?;
    let n = sys.n_levels();
    let b = config.resolved_filter(channels);
    let table = sys.transitions(config.omega_min);
    let mut out = Superoperator::zeros(n, format!("gme(b={b})"));
    for ch in channels {
        if ch.gamma == 0.0 {
            continue;
        }
        let a = sys.jump_operator(ch.jump)?;
        add_channel(&mut out, ch, &a, &table, b, config.filter_cutoff);
    }
    let deph = dephasing_superoperator(sys, channels, config)?;
    let matrix = out.matrix() + deph.matrix();
    *out.matrix_mut() = matrix;
    Ok(out)
}

fn add_channel(
    out: &mut Superoperator,
    ch: &BathChannel,
    a: &CMatrix,
    table: &crate::dressed::TransitionTable,
    b: f64,
    cutoff: f64,
) {
    let n = a.nrows();
    let comps = per_transition_components(a, table, MERGE_TOL);
    let plus: Vec<CMatrix> = comps.iter().map(|c| c.to_matrix(n)).collect();
    let rate = ch.gamma / ch.ref_frequency;
    let c1: Vec<f64> = comps
        .iter()
        .map(|c| rate * thermal_weight(c.omega, ch.temperature))
        .collect();
    let c2: Vec<f64> = comps
        .iter()
        .map(|c| rate * (thermal_weight(c.omega, ch.temperature) + c.omega))
        .collect();
    let half = Complex64::new(0.5, 0.0);
    let mut left = CMatrix::zeros(n, n);
    let mut right = CMatrix::zeros(n, n);
    for (p, cp) in comps.iter().enumerate() {
        let mut u = CMatrix::zeros(n, n);
        let mut v = CMatrix::zeros(n, n);
        let mut w = CMatrix::zeros(n, n);
        for (q, cq) in comps.iter().enumerate() {
            let f = if p == q { 1.0 } else { gaussian_filter(cp.omega, cq.omega, b) };
            if f < cutoff {
                continue;
            }
            for &(i, j, val) in &cq.entries {
                // A⁻_q has entry conj(val) at (j, i)
                let m = val.conj();
                u[(j, i)] += m * (f * c1[q]);
                v[(j, i)] += m * f;
                w[(j, i)] += m * (f * c2[q]);
            }
        }
        let ap = &plus[p];
        let x = &u + &v * Complex64::new(c1[p], 0.0);
        let y = &v * Complex64::new(c2[p], 0.0) + &w;
        out.add_sandwich(half, &x, ap);
        out.add_sandwich(half, ap, &y);
        left -= (ap * &u + &v * ap * Complex64::new(c2[p], 0.0)) * half;
        right -= (ap * &v * Complex64::new(c1[p], 0.0) + &w * ap) * half;
    }
    out.add_left(Complex64::new(1.0, 0.0), &left);
    out.add_right(Complex64::new(1.0, 0.0), &right);
}

/// Pure dephasing from the diagonal part of each qubit channel's operator,
/// weighted `(γ_q/Δ) · w(T_q)` with `w` chosen by `config.dephasing`.
pub fn dephasing_superoperator(
    sys: &OpenSystem,
    channels: &[BathChannel],
    config: &GmeConfig,
) -> Result<Superoperator> {
    let n = sys.n_levels();
    let mut out = Superoperator::zeros(n, "dephasing");
    for ch in channels.iter().filter(|c| c.which == ChannelKind::Qubit) {
        let weight = ch.gamma / ch.ref_frequency * config.dephasing.factor(ch.temperature);
        if weight == 0.0 {
            continue;
        }
        let a0 = frequency_components(&sys.jump_operator(ch.jump)?, Component::Zero);
        out.add_dissipator(weight, &a0);
    }
    Ok(out)
}

/// Full generator `−i[H₀, ·] + 𝓛_g` in the truncated dressed basis.
pub fn full_liouvillian(sys: &OpenSystem, gme: &Superoperator) -> Superoperator {
    let mut l = gme.clone();
    l.add_diagonal_hamiltonian(sys.energies());
    l.set_provenance(format!("-i[H0,.] + {}", gme.provenance()));
    l
}

/// Sign of the drive term: `+1` for capacitive coupling, `−1` for inductive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CouplingSign {
    Capacitive,
    Inductive,
}

impl CouplingSign {
    pub fn value(self) -> f64 {
        match self {
            CouplingSign::Capacitive => 1.0,
            CouplingSign::Inductive => -1.0,
        }
    }
}

/// Coherent-drive superoperators `(𝓛₊, 𝓛₋)` multiplying `e^{±iω_d t}`:
/// `𝓛_± ρ = s · i |b_in| e^{±iφ} √(γ ω_d/ω_r) [X, ρ]` with `s = ±1` by
/// coupling kind. They pair as `(𝓛₊ρ)† = 𝓛₋ρ†`, i.e. the drive Hamiltonian
/// `−2 s |b_in| √(γω_d/ω_r) cos(ω_d t + φ) X` is Hermitian.
pub fn build_drive_superoperators(
    x: &CMatrix,
    rate_gamma: f64,
    b_in: f64,
    phase: f64,
    omega_d: f64,
    omega_r: f64,
    coupling: CouplingSign,
) -> Result<(Superoperator, Superoperator)> {
    if !(omega_d > 0.0) {
        return Err(Error::NonPositiveFrequency(omega_d));
    }
    if rate_gamma < 0.0 {
        return Err(Error::InvalidParameter(format!("drive rate {rate_gamma} < 0")));
    }
    let n = x.nrows();
    let amp = coupling.value() * b_in.abs() * (rate_gamma * omega_d / omega_r).sqrt();
    let i = Complex64::new(0.0, 1.0);
    let mut plus = Superoperator::zeros(n, "drive+");
    let mut minus = Superoperator::zeros(n, "drive-");
    if amp != 0.0 {
        plus.add_commutator(i * amp * Complex64::from_polar(1.0, phase), x);
        minus.add_commutator(i * amp * Complex64::from_polar(1.0, -phase), x);
    }
    Ok((plus, minus))
}
