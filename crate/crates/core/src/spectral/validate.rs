use ndarray::{Array2, Axis};
use num_complex::Complex64;
use serde::Serialize;

use super::decompose::{SpectralDecomposition, PAIRING_RELATIVE_TOL};
use super::kernel::KernelMatrix;

pub const BIORTHONORMALITY_TOL: f64 = 1e-8;
pub const COMPLETENESS_TOL: f64 = 1e-7;
pub const SIGMA3_RELATION_TOL: f64 = 1e-6;
pub const PSEUDO_HERMITICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// max_mn |⟨l_m|r_n⟩dp − δ_mn|
    pub biorthonormality: f64,
    /// max over pairs |ε_partner − conj(ε_n)|
    pub pairing_mismatch: f64,
    /// max_n ‖(K dp)†σ₃r_n − ε_n σ₃r_n‖ / ‖σ₃r_n‖
    pub sigma3_relation: f64,
    /// max |Σ_n r_n l_n† dp − I|
    pub completeness: f64,
    /// max |σ₃Kσ₃ − K†|
    pub pseudo_hermiticity: f64,
    pub complex_pairs: usize,
    pub max_imag: f64,
    pub max_abs_eigenvalue: f64,
    pub flags: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.flags.is_empty()
    }
}

fn identity_deviation(m: &Array2<Complex64>) -> f64 {
    m.indexed_iter()
        .map(|((i, j), z)| {
            if i == j {
                (z - Complex64::new(1.0, 0.0)).norm()
            } else {
                z.norm()
            }
        })
        .fold(0.0, f64::max)
}

/// Residuals of the pseudo-Hermitian eigenstructure; never fails, only flags.
pub fn validate_spectrum(decomp: &SpectralDecomposition, kernel: &KernelMatrix) -> ValidationReport {
    let dim = decomp.dim();
    let half = dim / 2;

    let biorthonormality = identity_deviation(&decomp.biorthogonality_matrix());
    let completeness = identity_deviation(&decomp.completeness_matrix());

    let pairing_mismatch = (0..dim)
        .map(|n| (decomp.eigenvalues[decomp.pairing[n]] - decomp.eigenvalues[n].conj()).norm())
        .fold(0.0, f64::max);

    // σ₃ r_n should satisfy (K dp)† s = ε_n s
    let mut s3r = decomp.right.clone();
    s3r.slice_mut(ndarray::s![half.., ..]).mapv_inplace(|z| -z);
    let adjoint = kernel.weighted().t().mapv(|z| z.conj());
    let applied = adjoint.dot(&s3r);
    let sigma3_relation = applied
        .axis_iter(Axis(1))
        .zip(s3r.axis_iter(Axis(1)))
        .zip(decomp.eigenvalues.iter())
        .map(|((a, s), &eps)| {
            let num: f64 = a
                .iter()
                .zip(s.iter())
                .map(|(x, y)| (x - eps * y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let den: f64 = s.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
            num / den
        })
        .fold(0.0, f64::max);

    let pseudo_hermiticity = kernel.pseudo_hermiticity_residual();
    let max_abs_eigenvalue = decomp.max_abs_eigenvalue();

    let mut flags = Vec::new();
    if biorthonormality > BIORTHONORMALITY_TOL {
        flags.push(format!(
            "biorthonormality residual {biorthonormality:e} exceeds {BIORTHONORMALITY_TOL:e}"
        ));
    }
    let pair_tol = PAIRING_RELATIVE_TOL * max_abs_eigenvalue;
    if pairing_mismatch > pair_tol {
        flags.push(format!("conjugate pairing mismatch {pairing_mismatch:e} exceeds {pair_tol:e}"));
    }
    if sigma3_relation > SIGMA3_RELATION_TOL {
        flags.push(format!(
            "sigma3 left/right relation residual {sigma3_relation:e} exceeds {SIGMA3_RELATION_TOL:e}"
        ));
    }
    if completeness > COMPLETENESS_TOL {
        flags.push(format!("completeness residual {completeness:e} exceeds {COMPLETENESS_TOL:e}"));
    }
    if pseudo_hermiticity > PSEUDO_HERMITICITY_TOL {
        flags.push(format!(
            "pseudo-Hermiticity residual {pseudo_hermiticity:e} exceeds {PSEUDO_HERMITICITY_TOL:e}"
        ));
    }

    ValidationReport {
        biorthonormality,
        pairing_mismatch,
        sigma3_relation,
        completeness,
        pseudo_hermiticity,
        complex_pairs: decomp.complex_pairs().len(),
        max_imag: decomp.max_imag(),
        max_abs_eigenvalue,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grids, PhysicalConstants};
    use crate::potentials::{BarrierSpec, FourierTable};
    use crate::spectral::decompose::eigendecompose;
    use crate::spectral::kernel::{assemble_canonical_kernel, assemble_fw_kernel};

    #[test]
    fn free_kernel_is_exact() {
        let g = make_grids(-20.0, 20.0, 64, 1.0).unwrap();
        let k = PhysicalConstants::default();
        for kern in [
            assemble_fw_kernel(&g, &FourierTable::free(&g), &k).unwrap(),
            assemble_canonical_kernel(&g, &FourierTable::free(&g), &k).unwrap(),
        ] {
            let d = eigendecompose(&kern).unwrap();
            let r = validate_spectrum(&d, &kern);
            assert!(r.biorthonormality < 1e-12, "{r:?}");
            assert!(r.completeness < 1e-12, "{r:?}");
            assert!(r.sigma3_relation < 1e-12, "{r:?}");
            assert!(r.pairing_mismatch < 1e-12, "{r:?}");
            assert!(r.passed());
            assert_eq!(r.complex_pairs, 0);
        }
    }

    #[test]
    fn corrupted_eigenvector_is_flagged() {
        let g = make_grids(-30.0, 30.0, 64, 1.0).unwrap();
        let k = PhysicalConstants::default();
        let b = BarrierSpec::evenly_spaced(5.0, 2.0, 20.0, 3, 0.0, 4.0);
        let kern = assemble_fw_kernel(&g, &FourierTable::new(&b, &g), &k).unwrap();
        let mut d = eigendecompose(&kern).unwrap();
        assert!(validate_spectrum(&d, &kern).passed());

        d.right[[5, 17]] += Complex64::new(0.05, -0.02);
        let r = validate_spectrum(&d, &kern);
        assert!(r.biorthonormality > BIORTHONORMALITY_TOL);
        assert!(!r.passed());
        assert!(r.flags.iter().any(|f| f.contains("biorthonormality")));
    }
}
