//! Truncated qubit ⊗ Fock model of a flux qubit galvanically coupled to an
//! LC resonator, together with the operators that couple it to the
//! outside world.
//!
//! Basis ordering is qubit ⊗ Fock: index `q * n_fock + n` with `q = 0` the
//! excited state (σ_z = +1) and `q = 1` the ground state (σ_z = −1).
//! All energies are in units of the resonator frequency ω_r unless a
//! different `omega_r` is supplied.

use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Galvanic flux-qubit/LC coupling, `ω_r η (a + a†) σ̃_x`.
    Circuit,
    /// Dipolar cavity QED; the phase rotation `a → i a` maps it onto `Circuit`.
    CavityQed,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Circuit => "circuit",
            ModelKind::CavityQed => "cavity_qed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub delta: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub omega_r: f64,
    pub n_fock: usize,
    pub model_kind: ModelKind,
}

impl SystemParams {
    pub fn new(delta: f64, epsilon: f64, eta: f64, n_fock: usize) -> Self {
        Self {
            delta,
            epsilon,
            eta,
            omega_r: 1.0,
            n_fock,
            model_kind: ModelKind::Circuit,
        }
    }

    pub fn with_model(mut self, model_kind: ModelKind) -> Self {
        self.model_kind = model_kind;
        self
    }

    pub fn with_cutoff(mut self, n_fock: usize) -> Self {
        self.n_fock = n_fock;
        self
    }

    pub fn dim(&self) -> usize {
        2 * self.n_fock
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.delta, self.epsilon, self.eta, self.omega_r]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("non-finite system parameter".into()));
        }
        if self.delta < 0.0 {
            return Err(Error::InvalidParameter(format!("delta = {} < 0", self.delta)));
        }
        if self.eta < 0.0 {
            return Err(Error::InvalidParameter(format!("eta = {} < 0", self.eta)));
        }
        if self.omega_r <= 0.0 {
            return Err(Error::InvalidParameter(format!("omega_r = {} <= 0", self.omega_r)));
        }
        if self.n_fock < 2 {
            return Err(Error::CutoffTooSmall(self.n_fock));
        }
        qubit_frequency(self.delta, self.epsilon)?;
        Ok(())
    }

    pub fn frame(&self) -> Result<QubitFrame> {
        QubitFrame::new(self.delta, self.epsilon)
    }

    /// True when ε = 0, where the parity Π = σ_z e^{iπ a†a} commutes with H₀.
    pub fn has_parity(&self) -> bool {
        self.epsilon == 0.0
    }
}

/// Qubit splitting ω₀ = √(Δ² + ε²).
pub fn qubit_frequency(delta: f64, epsilon: f64) -> Result<f64> {
    if delta == 0.0 && epsilon == 0.0 {
        return Err(Error::DegenerateQubit);
    }
    Ok(delta.hypot(epsilon))
}

/// Mixing angle between the persistent-current and energy bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitFrame {
    pub omega0: f64,
    pub theta: f64,
    pub cos_theta: f64,
    pub sin_theta: f64,
}

impl QubitFrame {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        let omega0 = qubit_frequency(delta, epsilon)?;
        Ok(Self {
            omega0,
            theta: delta.atan2(epsilon),
            cos_theta: epsilon / omega0,
            sin_theta: delta / omega0,
        })
    }
}

/// Dense operator on the truncated qubit ⊗ Fock space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    n_fock: usize,
    entries: CMatrix,
}

impl OperatorMatrix {
    pub fn from_matrix(n_fock: usize, entries: CMatrix) -> Result<Self> {
        let dim = 2 * n_fock;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(Self { n_fock, entries })
    }

    pub fn n_fock(&self) -> usize {
        self.n_fock
    }

    pub fn dim(&self) -> usize {
        2 * self.n_fock
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n_fock: self.n_fock,
            entries: &self.entries * Complex64::new(s, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n_fock: self.n_fock,
            entries: &self.entries + &other.entries,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            n_fock: self.n_fock,
            entries: &self.entries - &other.entries,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            n_fock: self.n_fock,
            entries: &self.entries * &other.entries,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_fock: self.n_fock,
            entries: self.entries.adjoint(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        hermiticity_defect(&self.entries) <= 1e-12 * max_abs(&self.entries).max(f64::MIN_POSITIVE)
    }
}

impl Deref for OperatorMatrix {
    type Target = CMatrix;

    fn deref(&self) -> &CMatrix {
        &self.entries
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// max |M − M†|.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn pauli(which: char) -> CMatrix {
    match which {
        'x' => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        'y' => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        'z' => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => CMatrix::identity(2, 2),
    }
}

fn annihilation_fock(n_fock: usize) -> CMatrix {
    let mut a = CMatrix::zeros(n_fock, n_fock);
    for n in 1..n_fock {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn on_qubit(n_fock: usize, q: &CMatrix) -> OperatorMatrix {
    OperatorMatrix {
        n_fock,
        entries: q.kronecker(&CMatrix::identity(n_fock, n_fock)),
    }
}

fn on_fock(n_fock: usize, f: &CMatrix) -> OperatorMatrix {
    OperatorMatrix {
        n_fock,
        entries: CMatrix::identity(2, 2).kronecker(f),
    }
}

pub fn identity(n_fock: usize) -> OperatorMatrix {
    OperatorMatrix {
        n_fock,
        entries: CMatrix::identity(2 * n_fock, 2 * n_fock),
    }
}

/// Resonator lowering operator `a`.
pub fn annihilation(n_fock: usize) -> OperatorMatrix {
    on_fock(n_fock, &annihilation_fock(n_fock))
}

pub fn number(n_fock: usize) -> OperatorMatrix {
    let a = annihilation_fock(n_fock);
    on_fock(n_fock, &(a.adjoint() * &a))
}

pub fn sigma_x(n_fock: usize) -> OperatorMatrix {
    on_qubit(n_fock, &pauli('x'))
}

pub fn sigma_y(n_fock: usize) -> OperatorMatrix {
    on_qubit(n_fock, &pauli('y'))
}

pub fn sigma_z(n_fock: usize) -> OperatorMatrix {
    on_qubit(n_fock, &pauli('z'))
}

/// `a + a†`.
pub fn field_quadrature(n_fock: usize) -> OperatorMatrix {
    let a = annihilation(n_fock);
    a.add(&a.adjoint())
}

/// `i (a† − a)`.
pub fn charge_quadrature(n_fock: usize) -> OperatorMatrix {
    let a = annihilation(n_fock);
    a.adjoint().sub(&a).scale_complex(I)
}

impl OperatorMatrix {
    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            n_fock: self.n_fock,
            entries: &self.entries * s,
        }
    }
}

/// σ̃_x = cos θ σ_z − sin θ σ_x.
pub fn sigma_tilde_x(frame: &QubitFrame, n_fock: usize) -> OperatorMatrix {
    sigma_z(n_fock)
        .scale(frame.cos_theta)
        .sub(&sigma_x(n_fock).scale(frame.sin_theta))
}

/// Parity Π = σ_z e^{iπ a†a}; diagonal in the bare basis.
pub fn parity(n_fock: usize) -> OperatorMatrix {
    let mut p = CMatrix::zeros(2 * n_fock, 2 * n_fock);
    for (idx, value) in parity_eigenvalues(n_fock).into_iter().enumerate() {
        p[(idx, idx)] = Complex64::new(value, 0.0);
    }
    OperatorMatrix { n_fock, entries: p }
}

/// Parity of each bare basis state, in basis order.
pub fn parity_eigenvalues(n_fock: usize) -> Vec<f64> {
    (0..2 * n_fock)
        .map(|idx| {
            let q_sign = if idx < n_fock { 1.0 } else { -1.0 };
            let n = idx % n_fock;
            if n % 2 == 0 {
                q_sign
            } else {
                -q_sign
            }
        })
        .collect()
}

/// The static Hamiltonian H₀.
///
/// For `Circuit`: `ω₀/2 σ_z + ω_r a†a + ω_r η (a† + a) σ̃_x`.
/// For `CavityQed`: `ω₀/2 σ_z + ω_r a†a + ω_r η i(a† − a) σ̃_x`, the unique
/// form that `a → i a`, `a† → −i a†` carries onto the circuit Hamiltonian.
pub fn build_static_hamiltonian(params: &SystemParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let n = params.n_fock;
    let frame = params.frame()?;
    let coupling_field = match params.model_kind {
        ModelKind::Circuit => field_quadrature(n),
        ModelKind::CavityQed => charge_quadrature(n),
    };
    let h = sigma_z(n)
        .scale(frame.omega0 / 2.0)
        .add(&number(n).scale(params.omega_r))
        .add(
            &coupling_field
                .mul(&sigma_tilde_x(&frame, n))
                .scale(params.omega_r * params.eta),
        );
    Ok(h)
}

/// System operator coupled to the input-output line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputKind {
    /// Inductive (mutual-inductance) coupling: `X_M = a + a† − 2η σ̃_x`.
    InductiveM,
    /// Capacitive coupling: `X_C = i(a† − a)`.
    CapacitiveC,
    /// Dipolar cavity-QED electric field: `X_D = i(a − a†) − 2η σ̃_x`.
    CavityD,
    /// Bare resonator coordinate `a + a†`.
    FieldQuadrature,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::InductiveM => "x_m",
            OutputKind::CapacitiveC => "x_c",
            OutputKind::CavityD => "x_d",
            OutputKind::FieldQuadrature => "a_plus_adag",
        }
    }
}

pub fn build_output_operator(kind: OutputKind, params: &SystemParams) -> Result<OperatorMatrix> {
    params.validate()?;
    let n = params.n_fock;
    let mismatch = || Error::KindMismatch {
        kind: kind.name().to_string(),
        model: params.model_kind.name().to_string(),
    };
    match (kind, params.model_kind) {
        (OutputKind::CavityD, ModelKind::Circuit) => return Err(mismatch()),
        (OutputKind::InductiveM | OutputKind::CapacitiveC, ModelKind::CavityQed) => {
            return Err(mismatch())
        }
        _ => {}
    }
    let frame = params.frame()?;
    let op = match kind {
        OutputKind::InductiveM => {
            field_quadrature(n).sub(&sigma_tilde_x(&frame, n).scale(2.0 * params.eta))
        }
        OutputKind::CapacitiveC => charge_quadrature(n),
        OutputKind::CavityD => charge_quadrature(n)
            .scale(-1.0)
            .sub(&sigma_tilde_x(&frame, n).scale(2.0 * params.eta)),
        OutputKind::FieldQuadrature => field_quadrature(n),
    };
    Ok(op)
}

/// Time derivative `i[H, X]` of an operator in the Heisenberg picture.
pub fn heisenberg_derivative(x: &OperatorMatrix, h: &OperatorMatrix) -> Result<OperatorMatrix> {
    if x.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: x.dim(),
        });
    }
    let comm = h.matrix() * x.matrix() - x.matrix() * h.matrix();
    Ok(OperatorMatrix {
        n_fock: x.n_fock,
        entries: comm * I,
    })
}

/// Applies the phase rotation `a → i a`, `a† → −i a†` as the unitary
/// `U = e^{iπ a†a / 2}`: returns `U† X U`.
pub fn phase_rotate(x: &OperatorMatrix) -> OperatorMatrix {
    let n_fock = x.n_fock;
    let dim = x.dim();
    let phase = |idx: usize| I.powu((idx % n_fock) as u32);
    let mut out = x.entries.clone();
    for r in 0..dim {
        for c in 0..dim {
            out[(r, c)] = phase(r).conj() * x.entries[(r, c)] * phase(c);
        }
    }
    OperatorMatrix { n_fock, entries: out }
}
