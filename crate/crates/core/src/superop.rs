//! Linear maps on density matrices, acting on column-stacked vectors:
//! `vec(ρ)[r + c·n] = ρ[r, c]`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::rabi::{max_abs, CMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: CMatrix,
    provenance: String,
}

#[inline]
fn idx(n: usize, r: usize, c: usize) -> usize {
    r + c * n
}

fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v.re != 0.0 || v.im != 0.0 {
                out.push((r, c, v));
            }
        }
    }
    out
}

impl Superoperator {
    pub fn zeros(dim: usize, provenance: impl Into<String>) -> Self {
        Self {
            dim,
            matrix: CMatrix::zeros(dim * dim, dim * dim),
            provenance: provenance.into(),
        }
    }

    pub fn from_matrix(dim: usize, matrix: CMatrix, provenance: impl Into<String>) -> Self {
        assert_eq!(matrix.nrows(), dim * dim);
        assert_eq!(matrix.ncols(), dim * dim);
        Self {
            dim,
            matrix,
            provenance: provenance.into(),
        }
    }

    /// Hilbert-space dimension d; the matrix is d² × d².
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn set_provenance(&mut self, p: impl Into<String>) {
        self.provenance = p.into();
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unvec(&(&self.matrix * vec(rho)), self.dim)
    }

    /// Adds `coeff · X ρ`.
    pub fn add_left(&mut self, coeff: Complex64, x: &CMatrix) {
        let n = self.dim;
        for (a, c, v) in nonzeros(x) {
            let v = coeff * v;
            for b in 0..n {
                self.matrix[(idx(n, a, b), idx(n, c, b))] += v;
            }
        }
    }

    /// Adds `coeff · ρ Y`.
    pub fn add_right(&mut self, coeff: Complex64, y: &CMatrix) {
        let n = self.dim;
        for (d, b, v) in nonzeros(y) {
            let v = coeff * v;
            for a in 0..n {
                self.matrix[(idx(n, a, b), idx(n, a, d))] += v;
            }
        }
    }

    /// Adds `coeff · X ρ Y`.
    pub fn add_sandwich(&mut self, coeff: Complex64, x: &CMatrix, y: &CMatrix) {
        let n = self.dim;
        let xs = nonzeros(x);
        let ys = nonzeros(y);
        for &(d, b, yv) in &ys {
            let w = coeff * yv;
            for &(a, c, xv) in &xs {
                self.matrix[(idx(n, a, b), idx(n, c, d))] += w * xv;
            }
        }
    }

    /// Adds `coeff · 𝒟[A]ρ = coeff (A ρ A† − ½{A†A, ρ})`.
    pub fn add_dissipator(&mut self, coeff: f64, a: &CMatrix) {
        let c = Complex64::new(coeff, 0.0);
        let ad = a.adjoint();
        let ada = &ad * a;
        self.add_sandwich(c, a, &ad);
        self.add_left(-c * 0.5, &ada);
        self.add_right(-c * 0.5, &ada);
    }

    /// Adds `−i[H, ρ]` for a Hamiltonian diagonal in the working basis.
    pub fn add_diagonal_hamiltonian(&mut self, energies: &[f64]) {
        let n = self.dim;
        assert_eq!(energies.len(), n);
        for c in 0..n {
            for r in 0..n {
                let k = idx(n, r, c);
                self.matrix[(k, k)] += Complex64::new(0.0, -(energies[r] - energies[c]));
            }
        }
    }

    /// Adds `coeff · [X, ρ]`.
    pub fn add_commutator(&mut self, coeff: Complex64, x: &CMatrix) {
        self.add_left(coeff, x);
        self.add_right(-coeff, x);
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            matrix: &self.matrix * s,
            provenance: self.provenance.clone(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            matrix: &self.matrix + &other.matrix,
            provenance: format!("{} + {}", self.provenance, other.provenance),
        }
    }

    pub fn norm_max(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// max_k |Tr 𝓛(E_k)| over the matrix-unit basis; zero for a trace-preserving map.
    pub fn trace_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for col in 0..n * n {
            let mut tr = Complex64::new(0.0, 0.0);
            for k in 0..n {
                tr += self.matrix[(idx(n, k, k), col)];
            }
            worst = worst.max(tr.norm());
        }
        worst
    }

    /// Row vector `t` with `t · vec(ρ) = Tr ρ`.
    pub fn trace_row(n: usize) -> DVector<Complex64> {
        let mut t = DVector::zeros(n * n);
        for k in 0..n {
            t[idx(n, k, k)] = Complex64::new(1.0, 0.0);
        }
        t
    }
}

pub fn vec(m: &CMatrix) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<Complex64>, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}
