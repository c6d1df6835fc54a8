//! One parameter point of the open system: H₀, its dressed basis, and the
//! projection of system operators onto the lowest `n_levels` dressed states
//! where the master equation is solved.

use crate::dressed::{diagonalize_params, DressedBasis, TransitionTable};
use crate::error::{Error, Result};
use crate::rabi::{
    build_output_operator, build_static_hamiltonian, heisenberg_derivative, sigma_tilde_x,
    sigma_x, CMatrix, OperatorMatrix, OutputKind, SystemParams,
};

/// Operator through which a bath couples to the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JumpKind {
    Output(OutputKind),
    SigmaTildeX,
    SigmaX,
}

impl JumpKind {
    pub fn name(self) -> &'static str {
        match self {
            JumpKind::Output(k) => k.name(),
            JumpKind::SigmaTildeX => "sigma_tilde_x",
            JumpKind::SigmaX => "sigma_x",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OpenSystem {
    params: SystemParams,
    hamiltonian: OperatorMatrix,
    basis: DressedBasis,
    n_levels: usize,
}

impl OpenSystem {
    pub fn new(params: SystemParams, n_levels: usize) -> Result<Self> {
        let basis = diagonalize_params(&params)?;
        Self::with_basis(params, basis, n_levels)
    }

    /// Reuses a basis computed elsewhere, e.g. one labelled along a sweep.
    pub fn with_basis(params: SystemParams, basis: DressedBasis, n_levels: usize) -> Result<Self> {
        let hamiltonian = build_static_hamiltonian(&params)?;
        if basis.dim() != hamiltonian.dim() {
            return Err(Error::DimensionMismatch {
                expected: hamiltonian.dim(),
                got: basis.dim(),
            });
        }
        if n_levels < 2 {
            return Err(Error::InvalidParameter(format!("n_levels = {n_levels} < 2")));
        }
        let n_levels = n_levels.min(basis.dim());
        Ok(Self {
            params,
            hamiltonian,
            basis,
            n_levels,
        })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.hamiltonian
    }

    pub fn basis(&self) -> &DressedBasis {
        &self.basis
    }

    /// Number of dressed states kept in the open-system dynamics.
    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn energies(&self) -> &[f64] {
        &self.basis.energies()[..self.n_levels]
    }

    pub fn project(&self, op: &OperatorMatrix) -> CMatrix {
        self.basis.project(op.matrix(), self.n_levels)
    }

    pub fn output_operator(&self, kind: OutputKind) -> Result<CMatrix> {
        Ok(self.project(&build_output_operator(kind, &self.params)?))
    }

    /// `i[H₀, X]` evaluated in the full space, then projected.
    pub fn output_derivative(&self, kind: OutputKind) -> Result<CMatrix> {
        let x = build_output_operator(kind, &self.params)?;
        Ok(self.project(&heisenberg_derivative(&x, &self.hamiltonian)?))
    }

    pub fn jump_operator(&self, jump: JumpKind) -> Result<CMatrix> {
        let n = self.params.n_fock;
        match jump {
            JumpKind::Output(kind) => self.output_operator(kind),
            JumpKind::SigmaTildeX => Ok(self.project(&sigma_tilde_x(&self.params.frame()?, n))),
            JumpKind::SigmaX => Ok(self.project(&sigma_x(n))),
        }
    }

    pub fn transitions(&self, omega_min: f64) -> TransitionTable {
        self.basis.transitions(self.n_levels, omega_min)
    }
}
