//! Periodic steady state under a monochromatic drive.
//!
//! With `ρ(t) = Σ_k ρ^k e^{ikω_d t}` and generator `𝓛 + 𝓛₊e^{iω_d t} + 𝓛₋e^{−iω_d t}`
//! the harmonics obey `(𝓛 − ikω_d)ρ^k + 𝓛₊ρ^{k−1} + 𝓛₋ρ^{k+1} = 0`. The chain is
//! truncated at `|k| = K` and solved by matrix continued fractions:
//! `ρ^k = S_k ρ^{k−1}` for `k > 0` and `ρ^k = T_k ρ^{k+1}` for `k < 0`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rabi::{max_abs, CMatrix};
use crate::steady::{solve_with_trace_row, DensityMatrix};
use crate::superop::{unvec, vec, Superoperator};

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetHarmonics {
    order: usize,
    omega_d: f64,
    components: BTreeMap<i32, CMatrix>,
}

impl FloquetHarmonics {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn omega_d(&self) -> f64 {
        self.omega_d
    }

    /// ρ^k, zero outside the truncation window.
    pub fn component(&self, k: i32) -> Option<&CMatrix> {
        self.components.get(&k)
    }

    pub fn components(&self) -> impl Iterator<Item = (i32, &CMatrix)> {
        self.components.iter().map(|(k, m)| (*k, m))
    }

    pub fn stationary(&self) -> DensityMatrix {
        DensityMatrix::from_matrix(self.components[&0].clone())
    }

    /// max_k ‖ρ^{−k} − (ρ^k)†‖.
    pub fn pairing_defect(&self) -> f64 {
        (1..=self.order as i32)
            .map(|k| max_abs(&(&self.components[&-k] - self.components[&k].adjoint())))
            .fold(0.0, f64::max)
    }

    /// Largest residual of the truncated recursion rows.
    pub fn recursion_residual(&self, l: &Superoperator, plus: &Superoperator, minus: &Superoperator) -> f64 {
        let n = l.dim();
        let k_max = self.order as i32;
        let zero = DVector::zeros(n * n);
        let v = |k: i32| self.components.get(&k).map(vec).unwrap_or_else(|| zero.clone());
        let mut worst: f64 = 0.0;
        for k in -k_max..=k_max {
            let rk = v(k);
            let shift = Complex64::new(0.0, k as f64 * self.omega_d);
            let r = l.matrix() * &rk - &rk * shift + plus.matrix() * v(k - 1) + minus.matrix() * v(k + 1);
            worst = worst.max(max_abs(&unvec(&r, n)));
        }
        worst
    }
}

fn shifted(l: &CMatrix, k: i32, omega_d: f64) -> CMatrix {
    let mut m = l.clone();
    let s = Complex64::new(0.0, k as f64 * omega_d);
    for i in 0..m.nrows() {
        m[(i, i)] -= s;
    }
    m
}

fn block(l: &CMatrix, k: i32, omega_d: f64, coupling: Option<CMatrix>, source: &CMatrix) -> Result<CMatrix> {
    let mut m = shifted(l, k, omega_d);
    if let Some(c) = coupling {
        m += c;
    }
    let lu = m.lu();
    let mut x = lu.solve(source).ok_or(Error::SingularHarmonicSolve { k })?;
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::SingularHarmonicSolve { k });
    }
    x.neg_mut();
    Ok(x)
}

/// Harmonics `ρ^k`, `|k| ≤ order`, of the periodic steady state. `l` is the
/// full static generator including the Hamiltonian commutator.
pub fn floquet_harmonics(
    l: &Superoperator,
    plus: &Superoperator,
    minus: &Superoperator,
    omega_d: f64,
    order: usize,
) -> Result<FloquetHarmonics> {
    if order < 1 {
        return Err(Error::InvalidParameter("Floquet order must be at least 1".into()));
    }
    if !(omega_d > 0.0) {
        return Err(Error::NonPositiveFrequency(omega_d));
    }
    let n = l.dim();
    if plus.dim() != n || minus.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: plus.dim().min(minus.dim()) });
    }
    let k_max = order as i32;
    let (lm, lp, lmi) = (l.matrix(), plus.matrix(), minus.matrix());
    let driven = plus.norm_max() > 0.0 || minus.norm_max() > 0.0;

    let mut up: BTreeMap<i32, CMatrix> = BTreeMap::new();
    let mut down: BTreeMap<i32, CMatrix> = BTreeMap::new();
    if driven {
        let mut next: Option<CMatrix> = None;
        for k in (1..=k_max).rev() {
            let s = block(lm, k, omega_d, next.map(|s| lmi * s), lp)?;
            next = Some(s.clone());
            up.insert(k, s);
        }
        let mut next: Option<CMatrix> = None;
        for k in (1..=k_max).rev() {
            let t = block(lm, -k, omega_d, next.map(|t| lp * t), lmi)?;
            next = Some(t.clone());
            down.insert(-k, t);
        }
    }

    let mut l0 = lm.clone();
    if driven {
        l0 += lp * &down[&-1] + lmi * &up[&1];
    }
    let v0 = solve_with_trace_row(&l0, n).ok_or(Error::SingularHarmonicSolve { k: 0 })?;
    let mut rho0 = unvec(&v0, n);
    rho0 = (&rho0 + rho0.adjoint()) * Complex64::new(0.5, 0.0);

    let mut components = BTreeMap::new();
    let zero = CMatrix::zeros(n, n);
    let mut prev_up = vec(&rho0);
    let mut prev_down = prev_up.clone();
    for k in 1..=k_max {
        if driven {
            prev_up = &up[&k] * &prev_up;
            prev_down = &down[&-k] * &prev_down;
            components.insert(k, unvec(&prev_up, n));
            components.insert(-k, unvec(&prev_down, n));
        } else {
            components.insert(k, zero.clone());
            components.insert(-k, zero.clone());
        }
    }
    components.insert(0, rho0);
    Ok(FloquetHarmonics { order, omega_d, components })
}

/// Solves at `order` and `order + 2`; fails when `ρ^{−1}` moves by more
/// than `tol` (max-abs). Returns the higher-order result and the deviation.
pub fn floquet_converged(
    l: &Superoperator,
    plus: &Superoperator,
    minus: &Superoperator,
    omega_d: f64,
    order: usize,
    tol: f64,
) -> Result<(FloquetHarmonics, f64)> {
    let low = floquet_harmonics(l, plus, minus, omega_d, order)?;
    let high = floquet_harmonics(l, plus, minus, omega_d, order + 2)?;
    let dev = max_abs(&(low.component(-1).unwrap() - high.component(-1).unwrap()));
    if dev > tol {
        return Err(Error::NoConvergence(format!(
            "Floquet order {order} -> {}: rho^-1 changed by {dev:e}",
            order + 2
        )));
    }
    Ok((high, dev))
}
