//! Checks against closed forms and brute-force references.

mod common;

use common::{linear_response, max_abs};
use cqed_core::dressed::{frequency_components, Component};
use cqed_core::floquet::floquet_harmonics;
use cqed_core::gme::{build_drive_superoperators, build_gme, full_liouvillian, thermal_occupation, BathChannel, CouplingSign, GmeConfig};
use cqed_core::rabi::{ModelKind, OutputKind, SystemParams};
use cqed_core::spectra::{emission_spectrum, EmissionOptions, Probe, ReflectivityModel, ReflectivitySetup, Readout};
use cqed_core::steady::steady_state;
use cqed_core::system::OpenSystem;

fn toy() -> OpenSystem {
    OpenSystem::new(SystemParams::new(0.9, 0.25, 0.3, 4), 8).unwrap()
}

#[test]
fn weak_drive_matches_linear_response() {
    let sys = toy();
    let ch = [
        BathChannel::resonator(0.02, 0.1, 1.0, OutputKind::CapacitiveC),
        BathChannel::qubit(0.03, 0.2, 0.9, ModelKind::Circuit),
    ];
    let l = full_liouvillian(&sys, &build_gme(&sys, &ch, &GmeConfig::default()).unwrap());
    let rho = steady_state(&l).unwrap();
    let x = sys.output_operator(OutputKind::CapacitiveC).unwrap();
    let e = sys.energies();
    for w in [0.5, e[1] - e[0], e[2] - e[0], 1.3] {
        let (p, m) = build_drive_superoperators(&x, 0.02, 1e-5, 0.3, w, 1.0, CouplingSign::Capacitive).unwrap();
        let h = floquet_harmonics(&l, &p, &m, w, 2).unwrap();
        let lin = linear_response(&l, &m, rho.matrix(), w);
        let num = h.component(-1).unwrap();
        let rel = max_abs(&(num - &lin)) / max_abs(&lin);
        assert!(rel < 1e-6, "w = {w}: relative deviation {rel:e}");
    }
}

#[test]
fn zero_temperature_relaxes_to_ground_state() {
    let sys = toy();
    let ch = [
        BathChannel::resonator(0.02, 0.0, 1.0, OutputKind::InductiveM),
        BathChannel::qubit(0.03, 0.0, 0.9, ModelKind::Circuit),
    ];
    let l = full_liouvillian(&sys, &build_gme(&sys, &ch, &GmeConfig::secular()).unwrap());
    let rho = steady_state(&l).unwrap();
    assert!((rho.populations()[0] - 1.0).abs() < 1e-10);
}

#[test]
fn emission_lines_sit_at_transition_frequencies() {
    let sys = OpenSystem::new(SystemParams::new(1.0, 0.0, 0.2, 20), 8).unwrap();
    let gq = 2e-3;
    let ch = [
        BathChannel::resonator(1e-3, 0.0, 1.0, OutputKind::CapacitiveC),
        BathChannel::qubit(gq, 0.1, 1.0, ModelKind::Circuit),
    ];
    let l = full_liouvillian(&sys, &build_gme(&sys, &ch, &GmeConfig::default()).unwrap());
    let rho = steady_state(&l).unwrap();
    let xd = sys.output_derivative(OutputKind::CapacitiveC).unwrap();
    let e = sys.energies();
    for (j, i) in [(1, 0), (2, 0)] {
        let w0 = e[j] - e[i];
        let grid: Vec<f64> = (-200..=200).map(|k| w0 + 5e-5 * k as f64).collect();
        let s = emission_spectrum(&l, &rho, &xd, &grid, &EmissionOptions::default()).unwrap();
        assert!((s.argmax() - w0).abs() < 2.0 * gq, "line ({j},{i}) peaks at {} not {w0}", s.argmax());
    }
}

#[test]
fn thermal_oscillator_has_bose_population() {
    // decoupled resonator with its own bath only (the qubit sector is pinned by
    // a zero-temperature qubit bath)
    let sys = OpenSystem::new(SystemParams::new(2.7, 0.0, 0.0, 12), 24).unwrap();
    let t = 0.4;
    let ch = [
        BathChannel::resonator(0.01, t, 1.0, OutputKind::FieldQuadrature),
        BathChannel::qubit(0.01, 0.0, 2.7, ModelKind::Circuit),
    ];
    let l = full_liouvillian(&sys, &build_gme(&sys, &ch, &GmeConfig::secular()).unwrap());
    let rho = steady_state(&l).unwrap();
    let n = sys.project(&cqed_core::rabi::number(12));
    let mean = (&n * rho.matrix()).trace().re;
    let expected = thermal_occupation(1.0, t).unwrap();
    assert!((mean - expected).abs() < 1e-4, "{mean} vs {expected}");
}

#[test]
fn reflectivity_is_bounded_by_one_without_gain() {
    let setup = ReflectivitySetup {
        base: SystemParams::new(0.69, 0.0, 1.01, 20),
        probe: Probe::Capacitive,
        gamma_port: 1e-3,
        port_temperature: 0.0,
        gamma_qubit: 5e-3,
        qubit_temperature: 0.0,
        extra_channels: vec![],
        b_in: 0.01,
        phase: 0.0,
        floquet_order: 2,
        n_levels: 10,
        gme: GmeConfig::default(),
        readout: Readout::Approximate,
    };
    let model = ReflectivityModel::new(&setup, 0.4).unwrap();
    let e = model.system().energies();
    for w in [0.3, e[1] - e[0], e[2] - e[0], 1.2] {
        let s = model.s11(w).unwrap();
        assert!(s <= 1.0 + 1e-6, "S11({w}) = {s}");
    }
    let x = model.system().output_operator(OutputKind::CapacitiveC).unwrap();
    assert!(max_abs(&(frequency_components(&x, Component::Plus).adjoint() - frequency_components(&x, Component::Minus))) < 1e-14);
}
