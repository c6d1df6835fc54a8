//! Driven-dissipative light–matter simulations of a flux qubit coupled to an
//! LC resonator: Hamiltonian, dressed basis, generalized master equation,
//! steady and Floquet states, emission and reflectivity spectra.

pub mod dressed;
pub mod error;
pub mod floquet;
pub mod gme;
pub mod par;
pub mod rabi;
pub mod spectra;
pub mod steady;
pub mod superop;
pub mod system;

pub use error::{Error, Result};
