//! Independent reference implementations used by the integration suites.
#![allow(dead_code)]

use cqed_core::rabi::CMatrix;
use cqed_core::superop::Superoperator;
use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::FftPlanner;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Prints one line per acceptance criterion.
pub fn report(id: u32, pass: bool, detail: &str) {
    println!("criterion {id:>2}: {} | {detail}", if pass { "PASS" } else { "FAIL" });
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    CMatrix::from_fn(ar * br, ac * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

/// `𝒟[L]` on column-stacked vectors: `vec(AXB) = (Bᵀ ⊗ A) vec(X)`.
pub fn dissipator_kron(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let id = CMatrix::identity(n, n);
    let ldl = l.adjoint() * l;
    kron(&l.conjugate(), l) - kron(&id, &ldl) * Complex64::new(0.5, 0.0) - kron(&ldl.transpose(), &id) * Complex64::new(0.5, 0.0)
}

/// Dressed (secular) Lindblad generator for a bath coupled through `a`
/// (dressed basis, energies `e`): `Σ_{k<j} Γ_kj [(n+1) 𝒟[|k⟩⟨j|] + n 𝒟[|j⟩⟨k|]]`
/// with `Γ_kj = γ ω_jk/ω_ref |A_kj|²`.
pub fn secular_lindblad(a: &CMatrix, e: &[f64], gamma: f64, temperature: f64, omega_ref: f64) -> CMatrix {
    let n = e.len();
    let mut out = CMatrix::zeros(n * n, n * n);
    for j in 0..n {
        for k in 0..j {
            let w = e[j] - e[k];
            if w <= 1e-9 {
                continue;
            }
            let rate = gamma * w / omega_ref * a[(k, j)].norm_sqr();
            let nth = if temperature > 0.0 { 1.0 / ((w / temperature).exp() - 1.0) } else { 0.0 };
            let mut down = CMatrix::zeros(n, n);
            down[(k, j)] = ONE;
            let up = down.transpose();
            out += dissipator_kron(&down) * Complex64::new(rate * (nth + 1.0), 0.0);
            out += dissipator_kron(&up) * Complex64::new(rate * nth, 0.0);
        }
    }
    out
}

/// `exp(M)` by Taylor series with scaling and squaring.
pub fn expm(m: &CMatrix) -> CMatrix {
    let norm: f64 = m.iter().map(|z| z.norm()).fold(0.0, f64::max) * m.nrows() as f64;
    let mut s = 0u32;
    while norm / 2f64.powi(s as i32) > 0.25 {
        s += 1;
    }
    let a = m / Complex64::new(2f64.powi(s as i32), 0.0);
    let n = m.nrows();
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = &term * &a / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// `Re ∫_0^∞ e^{−iωτ} Tr[A e^{𝓛τ} B] dτ` on the FFT grid `ω_m = 2πm/(N dt)`
/// from trapezoid sums over `[0, total]`, Richardson-extrapolated from
/// steps `dt` and `dt/2`.
pub fn correlation_spectrum_fft(l: &Superoperator, a: &CMatrix, b: &CMatrix, total: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let coarse = trapezoid_fft(l, a, b, total, dt);
    let fine = trapezoid_fft(l, a, b, total, dt / 2.0);
    let n = coarse.len();
    let grid: Vec<f64> = (0..n).map(|m| 2.0 * std::f64::consts::PI * m as f64 / (n as f64 * dt)).collect();
    let vals = (0..n).map(|m| ((fine[m] * 4.0 - coarse[m]) / 3.0).re).collect();
    (grid, vals)
}

fn trapezoid_fft(l: &Superoperator, a: &CMatrix, b: &CMatrix, total: f64, dt: f64) -> Vec<Complex64> {
    let steps = (total / dt).round() as usize;
    let prop = expm(&(l.matrix() * Complex64::new(dt, 0.0)));
    let left: DVector<Complex64> = DVector::from_column_slice(a.transpose().as_slice());
    let mut state: DVector<Complex64> = DVector::from_column_slice(b.as_slice());
    let mut samples = Vec::with_capacity(steps);
    for _ in 0..steps {
        samples.push(left.dot(&state) * dt);
        state = &prop * state;
    }
    samples[0] *= 0.5;
    FftPlanner::new().plan_fft_forward(steps).process(&mut samples);
    samples
}

/// First-order response to `𝓛₋`: `ρ^{−1} = −(𝓛 + iω_d)^{-1} 𝓛₋ ρ⁰`.
pub fn linear_response(l: &Superoperator, minus: &Superoperator, rho0: &CMatrix, omega_d: f64) -> CMatrix {
    let n = l.dim();
    let mut m = l.matrix().clone();
    for i in 0..n * n {
        m[(i, i)] += Complex64::new(0.0, omega_d);
    }
    let src: DVector<Complex64> = minus.matrix() * DVector::from_column_slice(rho0.as_slice());
    let x = m.lu().solve(&(-src)).unwrap();
    CMatrix::from_column_slice(n, n, x.as_slice())
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
