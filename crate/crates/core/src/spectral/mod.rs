//! Discretized kernels, their biorthogonal eigensystem and its validation.

mod decompose;
mod kernel;
mod validate;

pub use decompose::{
    eigendecompose, pair_conjugates, SpectralDecomposition, DEGENERACY_THRESHOLD,
    PAIRING_RELATIVE_TOL, REFINE_THRESHOLD,
};
pub use kernel::{
    assemble_canonical_kernel, assemble_canonical_kernel_with, assemble_fw_kernel,
    assemble_fw_kernel_with, assemble_kernel, KernelMatrix,
};
pub use validate::{
    validate_spectrum, ValidationReport, BIORTHONORMALITY_TOL, COMPLETENESS_TOL,
    PSEUDO_HERMITICITY_TOL, SIGMA3_RELATION_TOL,
};
