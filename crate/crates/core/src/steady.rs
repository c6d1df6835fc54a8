//! Stationary states of a Liouvillian.

use std::io::{self, Write};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::dressed::DressedBasis;
use crate::error::{Error, Result};
use crate::rabi::{hermiticity_defect, max_abs, CMatrix};
use crate::superop::{unvec, vec, Superoperator};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix without checks; see [`DensityMatrix::validate`].
    pub fn from_matrix(entries: CMatrix) -> Self {
        assert_eq!(entries.nrows(), entries.ncols());
        Self { entries }
    }

    pub fn pure(dim: usize, state: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(state, state)] = Complex64::new(1.0, 0.0);
        Self { entries: m }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Hermitian and unit trace to `tol`, eigenvalues above `−neg_tol`.
    pub fn validate(&self, tol: f64, neg_tol: f64) -> Result<()> {
        let h = hermiticity_defect(&self.entries);
        if h > tol {
            return Err(Error::NotHermitian(h));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr}")));
        }
        let m = self.min_eigenvalue();
        if m < -neg_tol {
            return Err(Error::InvalidParameter(format!("density matrix eigenvalue {m:e}")));
        }
        Ok(())
    }

    /// CSV with columns `index,label,energy,population`.
    pub fn write_populations_csv<W: Write>(&self, basis: &DressedBasis, mut out: W) -> io::Result<()> {
        writeln!(out, "index,label,energy,population")?;
        for (i, p) in self.populations().iter().enumerate() {
            writeln!(out, "{},{},{},{}", i, basis.label(i), basis.energies()[i], p)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateOptions {
    /// Minimum accepted second-smallest singular value of 𝓛.
    pub uniqueness_tol: f64,
    pub check_uniqueness: bool,
    /// Accepted ‖𝓛ρ‖ (max-abs).
    pub residual_tol: f64,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self {
            uniqueness_tol: 1e-10,
            check_uniqueness: true,
            residual_tol: 1e-10,
        }
    }
}

pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    steady_state_with(l, &SteadyStateOptions::default())
}

pub fn steady_state_with(l: &Superoperator, opts: &SteadyStateOptions) -> Result<DensityMatrix> {
    if opts.check_uniqueness {
        let dim = null_space_dimension(l.matrix(), opts.uniqueness_tol);
        if dim > 1 {
            return Err(Error::DegenerateSteadyState { dimension: dim });
        }
    }
    let n = l.dim();
    let v = match solve_with_trace_row(l.matrix(), n) {
        Some(v) if residual(l.matrix(), &v) < opts.residual_tol => v,
        _ => {
            let v = smallest_singular_vector(l.matrix(), n)
                .ok_or_else(|| Error::NoConvergence("steady state: no trace-carrying null vector".into()))?;
            let r = residual(l.matrix(), &v);
            if r >= opts.residual_tol {
                return Err(Error::NoConvergence(format!("steady state residual {r:e}")));
            }
            v
        }
    };
    Ok(finish(unvec(&v, n)))
}

/// Number of singular values of `m` below `tol`.
pub fn null_space_dimension(m: &CMatrix, tol: f64) -> usize {
    m.clone().singular_values().iter().filter(|&&s| s < tol).count()
}

fn residual(m: &CMatrix, v: &DVector<Complex64>) -> f64 {
    (m * v).iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Solves `M v = 0` with the last row replaced by `Tr ρ = 1`.
pub(crate) fn solve_with_trace_row(m: &CMatrix, n: usize) -> Option<DVector<Complex64>> {
    let d2 = n * n;
    let mut a = m.clone();
    let t = Superoperator::trace_row(n);
    for c in 0..d2 {
        a[(d2 - 1, c)] = t[c];
    }
    let mut rhs = DVector::zeros(d2);
    rhs[d2 - 1] = Complex64::new(1.0, 0.0);
    let v = a.lu().solve(&rhs)?;
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(v)
}

fn trace_of(v: &DVector<Complex64>, n: usize) -> Complex64 {
    (0..n).map(|k| v[k + k * n]).sum()
}

fn smallest_singular_vector(m: &CMatrix, n: usize) -> Option<DVector<Complex64>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    let v: DVector<Complex64> = v_t.row(k).adjoint();
    let tr = trace_of(&v, n);
    (tr.norm() > 1e-12).then(|| v / tr)
}

fn finish(rho: CMatrix) -> DensityMatrix {
    let h = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = h.trace();
    DensityMatrix::from_matrix(h / tr)
}

/// Steady states of a Liouvillian with a degenerate null space, one per
/// parity sector: for each sign `s` in `parities`, the null vector supported
/// on states of parity `s` only.
pub fn sector_steady_states(
    l: &Superoperator,
    parities: &[f64],
    tol: f64,
) -> Result<Vec<(f64, DensityMatrix)>> {
    let n = l.dim();
    if parities.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: parities.len() });
    }
    let svd = l.matrix().clone().svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::NoConvergence("svd".into()))?;
    let null: Vec<DVector<Complex64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < tol)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect();
    if null.is_empty() {
        return Err(Error::NoConvergence("no null vector".into()));
    }
    let basis = CMatrix::from_columns(&null);
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        let inside = |r: usize, c: usize| parities[r] == sign && parities[c] == sign;
        let mut outside = basis.clone();
        for c in 0..n {
            for r in 0..n {
                if inside(r, c) {
                    outside.row_mut(r + c * n).fill(Complex64::new(0.0, 0.0));
                }
            }
        }
        let small = outside.svd(false, true);
        let Some(w_t) = small.v_t else { continue };
        let (k, s) = small
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        if *s > tol.sqrt() {
            continue;
        }
        let coeffs: DVector<Complex64> = w_t.row(k).adjoint();
        let v = &basis * coeffs;
        let tr = trace_of(&v, n);
        if tr.norm() < 1e-8 {
            continue;
        }
        out.push((sign, finish(unvec(&(v / tr), n))));
    }
    Ok(out)
}

/// ‖𝓛ρ‖ in max-abs norm.
pub fn stationarity_residual(l: &Superoperator, rho: &DensityMatrix) -> f64 {
    max_abs(&unvec(&(l.matrix() * vec(rho.matrix())), l.dim()))
}
