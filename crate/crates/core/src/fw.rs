//! Free Foldy-Wouthuysen transformation.
//!
//! `U(p) = (4mc²E_p)^{-1/2} [(mc² + E_p) − (mc² − E_p)σ₁]` and its inverse,
//! which flips the sign of the σ₁ term. The potential in the FW picture is
//! dressed by `W(p, p') = U(p)U⁻¹(p') = [[w⁺, w⁻], [w⁻, w⁺]]` with
//! `w^± = (E_p ± E_p') / (2√(E_p E_p'))`.

use crate::grid::PhysicalConstants;

/// A real 2×2 matrix, row-major.
pub type Mat2 = [[f64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// E_p = √(p²c² + m²c⁴)
pub fn energy(p: f64, k: &PhysicalConstants) -> f64 {
    let mc2 = k.rest_energy();
    (p * p * k.c * k.c + mc2 * mc2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FwMatrixSample {
    pub p: f64,
    pub u: Mat2,
    pub u_inv: Mat2,
}

pub fn fw_matrix(p: f64, k: &PhysicalConstants) -> FwMatrixSample {
    let mc2 = k.rest_energy();
    let e = energy(p, k);
    let norm = (4.0 * mc2 * e).sqrt();
    let diag = (mc2 + e) / norm;
    let off = (mc2 - e) / norm;
    FwMatrixSample {
        p,
        u: [[diag, -off], [-off, diag]],
        u_inv: [[diag, off], [off, diag]],
    }
}

/// (w⁺, w⁻) for the pair (p, p').
pub fn fw_kernel_w(p: f64, p_prime: f64, k: &PhysicalConstants) -> (f64, f64) {
    dressing_weights(energy(p, k), energy(p_prime, k))
}

/// Same as [`fw_kernel_w`] from precomputed energies.
#[inline]
pub fn dressing_weights(e: f64, e_prime: f64) -> (f64, f64) {
    let d = 2.0 * (e * e_prime).sqrt();
    ((e + e_prime) / d, (e - e_prime) / d)
}
