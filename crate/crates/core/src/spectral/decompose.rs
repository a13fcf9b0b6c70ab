use std::cmp::Ordering;
use std::io::Write;

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::{Eig, Inverse};
use num_complex::Complex64;

use super::kernel::KernelMatrix;
use crate::error::{Error, Result};
use crate::grid::{Grids, Representation};

/// Biorthonormality residual above which the left basis is refined.
pub const REFINE_THRESHOLD: f64 = 1e-8;
/// Relative tolerance (times max|ε|) for conjugate-pair matching.
pub const PAIRING_RELATIVE_TOL: f64 = 1e-8;
/// Smallest acceptable |⟨l_n|r_n⟩| between unit-norm left and right vectors.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Eigenvalues with biorthonormal right/left eigenvectors.
///
/// Columns of `right` are `r_n`, columns of `left` are `l_n`, with
/// `Σ_i conj(l_m,i) r_n,i · dp = δ_mn`. `pairing[n]` is the index of the
/// conjugate partner of `ε_n` (itself for real eigenvalues).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub representation: Representation,
    pub grids: Grids,
    pub eigenvalues: Array1<Complex64>,
    pub right: Array2<Complex64>,
    pub left: Array2<Complex64>,
    pub pairing: Vec<usize>,
    /// Absolute imaginary-part tolerance used to separate real eigenvalues.
    pub pairing_tolerance: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dp(&self) -> f64 {
        self.grids.dp()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Indices n with Im ε_n > tolerance, one per conjugate pair.
    pub fn complex_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.dim())
            .filter(|&n| self.eigenvalues[n].im > self.pairing_tolerance)
            .map(|n| (n, self.pairing[n]))
            .collect()
    }

    /// Gram matrix `⟨l_m|r_n⟩·dp`.
    pub fn biorthogonality_matrix(&self) -> Array2<Complex64> {
        let lh = self.left.t().mapv(|z| z.conj());
        lh.dot(&self.right) * Complex64::new(self.dp(), 0.0)
    }

    /// `Σ_n r_n l_n† · dp`.
    pub fn completeness_matrix(&self) -> Array2<Complex64> {
        let lh = self.left.t().mapv(|z| z.conj());
        self.right.dot(&lh) * Complex64::new(self.dp(), 0.0)
    }

    /// `re,im,paired_index`, one row per eigenvalue.
    pub fn write_eigenvalues_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re,im,paired_index")?;
        for (n, z) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{:.14e},{:.14e},{}", z.re, z.im, self.pairing[n])?;
        }
        Ok(())
    }
}

fn max_identity_deviation(m: &Array2<Complex64>) -> f64 {
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

/// Sorts eigenpairs by (Re ε, Im ε) and rotates each eigenvector so its
/// largest-magnitude entry is real and positive.
fn canonicalize(values: Array1<Complex64>, vectors: Array2<Complex64>) -> (Array1<Complex64>, Array2<Complex64>) {
    let dim = values.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (values[a], values[b]);
        match x.re.total_cmp(&y.re) {
            Ordering::Equal => x.im.total_cmp(&y.im),
            o => o,
        }
    });

    let sorted_values = Array1::from_iter(order.iter().map(|&n| values[n]));
    let mut sorted_vectors = vectors.select(Axis(1), &order);
    for mut col in sorted_vectors.axis_iter_mut(Axis(1)) {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (i, z) in col.iter().enumerate() {
            let m = z.norm_sqr();
            if m > best_norm {
                best_norm = m;
                best = i;
            }
        }
        let pivot = col[best];
        let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if pivot.norm() > 0.0 && norm > 0.0 {
            let rot = pivot.conj() / (pivot.norm() * norm);
            col.mapv_inplace(|z| z * rot);
            col[best] = Complex64::new(col[best].norm(), 0.0);
        }
    }
    (sorted_values, sorted_vectors)
}

/// One Newton–Schulz step `Y ← Y(2I − RY)` towards `R⁻¹`.
fn refine_inverse(right: &Array2<Complex64>, inv: &Array2<Complex64>) -> Array2<Complex64> {
    let ry = right.dot(inv);
    let mut correction = ry.mapv(|z| -z);
    for i in 0..correction.nrows() {
        correction[[i, i]] += Complex64::new(2.0, 0.0);
    }
    inv.dot(&correction)
}

/// Matches each non-real eigenvalue with its conjugate partner.
///
/// Nearest neighbour on (Re ε, |Im ε|); near-ties are broken by the overlap
/// |⟨σ₃ r_n | r_m⟩|, which is large only for the partner since σ₃ r_n is
/// parallel to the left vector of ε_n*.
pub fn pair_conjugates(
    eigenvalues: &Array1<Complex64>,
    right: &Array2<Complex64>,
    tolerance: f64,
) -> Result<Vec<usize>> {
    let dim = eigenvalues.len();
    let half = dim / 2;
    let mut pairing: Vec<Option<usize>> = vec![None; dim];

    let sigma3_overlap = |n: usize, m: usize| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            let s = if i < half { 1.0 } else { -1.0 };
            acc += right[[i, n]].conj() * s * right[[i, m]];
        }
        acc.norm()
    };

    let mut upper: Vec<usize> = (0..dim).filter(|&n| eigenvalues[n].im > tolerance).collect();
    // most clearly complex first so marginal cases cannot steal a partner
    upper.sort_by(|&a, &b| eigenvalues[b].im.total_cmp(&eigenvalues[a].im));

    for &n in &upper {
        let target = eigenvalues[n].conj();
        let candidates: Vec<(usize, f64)> = (0..dim)
            .filter(|&m| m != n && pairing[m].is_none() && eigenvalues[m].im < 0.0)
            .map(|m| (m, (eigenvalues[m] - target).norm()))
            .collect();
        let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        if best > tolerance {
            return Err(Error::UnmatchedEigenvalue {
                index: n,
                imag: eigenvalues[n].im,
            });
        }
        let tied: Vec<usize> = candidates
            .iter()
            .filter(|c| c.1 <= best + tolerance * 1e-3)
            .map(|c| c.0)
            .collect();
        let partner = if tied.len() == 1 {
            tied[0]
        } else {
            *tied
                .iter()
                .max_by(|&&a, &&b| sigma3_overlap(n, a).total_cmp(&sigma3_overlap(n, b)))
                .expect("non-empty")
        };
        pairing[n] = Some(partner);
        pairing[partner] = Some(n);
    }

    for n in 0..dim {
        if pairing[n].is_none() {
            if eigenvalues[n].im < -tolerance {
                return Err(Error::UnmatchedEigenvalue {
                    index: n,
                    imag: eigenvalues[n].im,
                });
            }
            pairing[n] = Some(n);
        }
    }
    Ok(pairing.into_iter().map(|p| p.expect("assigned")).collect())
}

/// Full right/left eigensystem of the dp-weighted kernel.
///
/// Right vectors come from LAPACK (unit 2-norm, canonical phase). The left
/// vectors are the rows of `R⁻¹` divided by dp, which makes the pair
/// biorthonormal by construction: `L†R·dp = R⁻¹R = I`. Each row `y_n` of
/// `R⁻¹` is also a left eigenvector of `K·dp`, and `1/‖y_n‖` is the overlap of
/// the unit left and right vectors; a vanishing overlap marks a
/// (near-)defective eigenvalue.
pub fn eigendecompose(kernel: &KernelMatrix) -> Result<SpectralDecomposition> {
    let weighted = kernel.weighted();
    let (values, vectors) = weighted
        .eig()
        .map_err(|e| Error::Eigensolver(e.to_string()))?;
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    let (eigenvalues, right) = canonicalize(values, vectors);

    let mut inv = right
        .inv()
        .map_err(|e| Error::Eigensolver(format!("right eigenvector matrix is singular: {e}")))?;

    for (n, row) in inv.axis_iter(Axis(0)).enumerate() {
        let norm: f64 = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let overlap = 1.0 / norm;
        if !overlap.is_finite() || overlap < DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateBasis { index: n, overlap });
        }
    }

    // the cluster-wise re-biorthogonalization reduces to refining R⁻¹
    for _ in 0..2 {
        let residual = max_identity_deviation(&inv.dot(&right));
        if residual <= REFINE_THRESHOLD {
            break;
        }
        log::warn!("biorthonormality residual {residual:e} above {REFINE_THRESHOLD:e}; refining left basis");
        inv = refine_inverse(&right, &inv);
    }

    let dp = kernel.dp();
    let left = inv.t().mapv(|z| z.conj() / dp);

    let max_abs = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tolerance = PAIRING_RELATIVE_TOL * max_abs.max(f64::MIN_POSITIVE);
    let pairing = pair_conjugates(&eigenvalues, &right, tolerance)?;

    Ok(SpectralDecomposition {
        representation: kernel.representation(),
        grids: *kernel.grids(),
        eigenvalues,
        right,
        left,
        pairing,
        pairing_tolerance: tolerance,
    })
}
