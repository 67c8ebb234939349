//! Simulation of two-stage polarization entanglement purification with
//! cross-Kerr QND detectors.
//!
//! The crate is layered bottom-up:
//!
//! * [`phase`] and [`fock`]: exact probe phases and sparse Fock states.
//! * [`optics`]: beam splitters, couplers, local Pauli operations, and the
//!   diagonal-basis measurement.
//! * [`qnd`]: the four Kerr-based QND gadgets and the homodyne readout.
//! * [`sources`]: down-conversion emissions, ideal pair mixtures, and noise.
//! * [`protocol`]: the stage-1 and stage-2 pipelines, the PBS baseline, the
//!   exact outcome enumerator and the Monte Carlo sampler.
//! * [`equations`]: the catalogue of displayed branch transformations that
//!   the gadgets must reproduce term by term.

pub mod equations;
pub mod error;
pub mod fock;
pub mod optics;
pub mod phase;
pub mod protocol;
pub mod qnd;
pub mod sources;
pub mod testkit;

pub use error::{Result, SimError};
pub use fock::{EnsembleState, ModeLabel, Party, Polarization, Port, PureState, Spatial};
pub use phase::PhaseTag;
