//! Randomized invariants of the open-system pipeline.

mod common;

use common::max_abs;
use cqed_core::dressed::diagonalize_params;
use cqed_core::floquet::floquet_harmonics;
use cqed_core::gme::{build_drive_superoperators, build_gme, full_liouvillian, BathChannel, CouplingSign, GmeConfig};
use cqed_core::rabi::{build_static_hamiltonian, hermiticity_defect, ModelKind, OutputKind, SystemParams};
use cqed_core::spectra::{emission_spectrum, EmissionOptions, ResolventMethod};
use cqed_core::steady::{stationarity_residual, steady_state};
use cqed_core::system::OpenSystem;
use num_complex::Complex64;
use proptest::prelude::*;

fn output_kind() -> impl Strategy<Value = OutputKind> {
    prop_oneof![
        Just(OutputKind::InductiveM),
        Just(OutputKind::CapacitiveC),
        Just(OutputKind::FieldQuadrature)
    ]
}

fn small_system(delta: f64, eps: f64, eta: f64) -> OpenSystem {
    OpenSystem::new(SystemParams::new(delta, eps, eta, 5), 8).unwrap()
}

fn channels(kind: OutputKind, gr: f64, gq: f64, t: f64, delta: f64) -> [BathChannel; 2] {
    [BathChannel::resonator(gr, t, 1.0, kind), BathChannel::qubit(gq, t, delta, ModelKind::Circuit)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_is_hermitian_and_spectrum_sorted(
        delta in 0.2f64..2.0, eps in -1.0f64..1.0, eta in 0.0f64..1.5,
    ) {
        let p = SystemParams::new(delta, eps, eta, 12);
        let h = build_static_hamiltonian(&p).unwrap();
        prop_assert!(hermiticity_defect(h.matrix()) < 1e-12);
        let b = diagonalize_params(&p).unwrap();
        prop_assert!(b.energies().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(b.residual(h.matrix()) < 1e-9);
        prop_assert!(b.unitarity_defect() < 1e-10);
    }

    #[test]
    fn generator_preserves_trace_and_hermiticity(
        delta in 0.3f64..1.7, eps in -0.8f64..0.8, eta in 0.0f64..1.2,
        gr in 1e-4f64..0.05, gq in 1e-4f64..0.05, t in 0.0f64..0.8,
        kind in output_kind(), filter in prop::option::of(0.0f64..0.2),
    ) {
        let sys = small_system(delta, eps, eta);
        let cfg = GmeConfig { filter_b: filter, ..GmeConfig::default() };
        let l = full_liouvillian(&sys, &build_gme(&sys, &channels(kind, gr, gq, t, delta), &cfg).unwrap());
        prop_assert!(l.trace_defect() < 1e-12);
        let n = l.dim();
        // 𝓛(ρ†) = 𝓛(ρ)† on a random-ish non-Hermitian input
        let x = cqed_core::rabi::CMatrix::from_fn(n, n, |r, c| Complex64::new((r as f64 + 0.3 * c as f64).sin(), (c as f64 - r as f64).cos()));
        let lhs = l.apply(&x.adjoint());
        let rhs = l.apply(&x).adjoint();
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn generator_is_linear_in_rates(
        eta in 0.0f64..1.0, gr in 1e-4f64..0.05, gq in 1e-4f64..0.05, t in 0.0f64..0.5, s in 0.1f64..10.0,
    ) {
        let sys = small_system(1.1, 0.2, eta);
        let cfg = GmeConfig { filter_b: Some(0.05), ..GmeConfig::default() };
        let l1 = build_gme(&sys, &channels(OutputKind::InductiveM, gr, gq, t, 1.1), &cfg).unwrap();
        let l2 = build_gme(&sys, &channels(OutputKind::InductiveM, s * gr, s * gq, t, 1.1), &cfg).unwrap();
        let diff = max_abs(&(l2.matrix() - l1.matrix() * Complex64::new(s, 0.0)));
        prop_assert!(diff <= 1e-12 * (1.0 + l2.norm_max()));
    }

    #[test]
    fn steady_state_is_a_density_matrix(
        delta in 0.4f64..1.6, eps in -0.6f64..0.6, eta in 0.0f64..1.0,
        gr in 1e-3f64..0.05, gq in 1e-3f64..0.05, t in 0.0f64..0.6, kind in output_kind(),
    ) {
        let sys = small_system(delta, eps, eta);
        let l = full_liouvillian(&sys, &build_gme(&sys, &channels(kind, gr, gq, t, delta), &GmeConfig::default()).unwrap());
        let rho = steady_state(&l).unwrap();
        prop_assert!((rho.trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(hermiticity_defect(rho.matrix()) < 1e-12);
        prop_assert!(rho.min_eigenvalue() > -1e-8);
        prop_assert!(stationarity_residual(&l, &rho) < 1e-10);
    }

    #[test]
    fn schur_and_lu_resolvents_agree(
        eta in 0.0f64..1.0, eps in -0.5f64..0.5, t in 0.0f64..0.5, kind in output_kind(),
    ) {
        let sys = small_system(0.9, eps, eta);
        let l = full_liouvillian(&sys, &build_gme(&sys, &channels(kind, 0.02, 0.03, t, 0.9), &GmeConfig::default()).unwrap());
        let rho = steady_state(&l).unwrap();
        let xd = sys.output_derivative(kind).unwrap();
        let grid: Vec<f64> = (1..60).map(|k| 0.05 * k as f64).collect();
        let a = emission_spectrum(&l, &rho, &xd, &grid, &EmissionOptions { method: ResolventMethod::Schur, ..Default::default() }).unwrap();
        let b = emission_spectrum(&l, &rho, &xd, &grid, &EmissionOptions { method: ResolventMethod::Lu, ..Default::default() }).unwrap();
        let scale = a.max_value().abs().max(1e-300);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn emission_spectra_are_non_negative(
        delta in 0.5f64..1.5, eps in -0.5f64..0.5, eta in 0.0f64..1.2, t in 0.0f64..0.6, kind in output_kind(),
    ) {
        let sys = small_system(delta, eps, eta);
        let l = full_liouvillian(&sys, &build_gme(&sys, &channels(kind, 1e-3, 1e-2, t, delta), &GmeConfig::default()).unwrap());
        let rho = steady_state(&l).unwrap();
        let grid: Vec<f64> = (1..400).map(|k| 0.006 * k as f64).collect();
        let s = emission_spectrum(&l, &rho, &sys.output_derivative(kind).unwrap(), &grid, &EmissionOptions::default()).unwrap();
        prop_assert!(s.positivity_defect() <= 1e-10, "defect {}", s.positivity_defect());
    }

    #[test]
    fn flipping_the_coupling_sign_flips_the_drive(
        b_in in 1e-4f64..0.1, phase in -3.0f64..3.0, w in 0.3f64..2.0, kind in output_kind(),
    ) {
        let sys = small_system(1.0, 0.1, 0.4);
        let x = sys.output_operator(kind).unwrap();
        let (pc, mc) = build_drive_superoperators(&x, 1e-3, b_in, phase, w, 1.0, CouplingSign::Capacitive).unwrap();
        let (pi, mi) = build_drive_superoperators(&x, 1e-3, b_in, phase, w, 1.0, CouplingSign::Inductive).unwrap();
        prop_assert!(max_abs(&(pc.matrix() + pi.matrix())) < 1e-15);
        prop_assert!(max_abs(&(mc.matrix() + mi.matrix())) < 1e-15);
        // 𝓛₋ρ = (𝓛₊ρ)† for Hermitian ρ
        let rho = cqed_core::steady::DensityMatrix::pure(sys.n_levels(), 1);
        let d = max_abs(&(mc.apply(rho.matrix()) - pc.apply(rho.matrix()).adjoint()));
        prop_assert!(d < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn floquet_harmonics_pair_and_keep_trace(
        eta in 0.0f64..0.8, b_in in 1e-3f64..0.05, w in 0.5f64..1.5, kind in output_kind(),
    ) {
        let sys = small_system(1.0, 0.2, eta);
        let l = full_liouvillian(&sys, &build_gme(&sys, &channels(kind, 0.02, 0.03, 0.2, 1.0), &GmeConfig::default()).unwrap());
        let x = sys.output_operator(kind).unwrap();
        let (p, m) = build_drive_superoperators(&x, 0.02, b_in, 0.4, w, 1.0, CouplingSign::Inductive).unwrap();
        let h = floquet_harmonics(&l, &p, &m, w, 3).unwrap();
        prop_assert!(h.pairing_defect() < 1e-10);
        prop_assert!(h.recursion_residual(&l, &p, &m) < 1e-9);
        prop_assert!((h.component(0).unwrap().trace() - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        prop_assert!(h.stationary().min_eigenvalue() > -1e-8);
    }
}
