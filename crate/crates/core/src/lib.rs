//! Klein-Gordon wavepacket dynamics through trains of supercritical
//! barriers, in the canonical and the Foldy-Wouthuysen representations.

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod exec;
pub mod fw;
pub mod grid;
pub mod potentials;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
