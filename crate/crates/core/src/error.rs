use thiserror::Error;

use crate::grid::Representation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected} samples, got {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("representation mismatch: expected {expected:?}, got {found:?}")]
    RepresentationMismatch {
        expected: Representation,
        found: Representation,
    },

    #[error("invalid barrier specification: {0}")]
    InvalidBarrier(String),

    #[error("invalid initial packet: {0}")]
    InvalidPacket(String),

    #[error("invalid physical constants: {0}")]
    InvalidConstants(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("non-real eigenvalue {index} (Im = {imag:e}) has no conjugate partner")]
    UnmatchedEigenvalue { index: usize, imag: f64 },

    #[error("degenerate biorthogonal basis at eigenpair {index}: |<l|r>| = {overlap:e}")]
    DegenerateBasis { index: usize, overlap: f64 },

    #[error("light cone at x = {cone:.6} lies beyond the grid (x_max = {x_max:.6}); grid too small for this time")]
    ConeOutsideGrid { cone: f64, x_max: f64 },

    #[error("energy {energy} is below the rest energy {rest}: no propagating outside mode")]
    BelowRestEnergy { energy: f64, rest: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
