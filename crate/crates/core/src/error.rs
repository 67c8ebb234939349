use thiserror::Error;

use crate::fock::{ModeLabel, Port};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("state has zero norm")]
    ZeroNorm,

    #[error("coupler cannot merge: branch holds {polarization:?} photons in both spatial modes of {party:?} (bin {bin})")]
    AmbiguousRouting {
        party: crate::fock::Party,
        polarization: crate::fock::Polarization,
        bin: u8,
    },

    #[error("expected exactly one photon at {port:?}, found {found}")]
    OccupancyViolation { port: Port, found: u32 },

    #[error("invalid beam-splitter ports: {0}")]
    InvalidPorts(String),

    #[error("mode {0:?} is not a spatial input mode")]
    NotAnInputMode(ModeLabel),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
