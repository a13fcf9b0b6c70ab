use std::f64::consts::PI;

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{for_each_row, Execution};
use crate::fw::{dressing_weights, energy};
use crate::grid::{Grids, PhysicalConstants, Representation};
use crate::potentials::{BarrierSpec, FourierTable};

/// Discretized 2N×2N Hamiltonian kernel, blocks ordered (φ, χ).
///
/// `entries` holds K itself. The eigenproblem solved downstream is the
/// Nyström form `Σ_j K_ij r_j dp = ε r_i`, i.e. the ordinary eigenproblem of
/// [`KernelMatrix::weighted`].
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    representation: Representation,
    entries: Array2<Complex64>,
    grids: Grids,
}

impl KernelMatrix {
    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn grids(&self) -> &Grids {
        &self.grids
    }

    pub fn n(&self) -> usize {
        self.grids.n()
    }

    pub fn dp(&self) -> f64 {
        self.grids.dp()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    /// Block (a, b) with a, b ∈ {1, 2}.
    pub fn block(&self, a: usize, b: usize) -> ArrayView2<'_, Complex64> {
        assert!((1..=2).contains(&a) && (1..=2).contains(&b));
        let n = self.n();
        let (r0, c0) = ((a - 1) * n, (b - 1) * n);
        self.entries.slice(s![r0..r0 + n, c0..c0 + n])
    }

    /// K·dp, the matrix whose eigenvalues are the energies.
    pub fn weighted(&self) -> Array2<Complex64> {
        let dp = self.dp();
        self.entries.mapv(|z| z * dp)
    }

    /// max |(σ₃Kσ₃)_ij − (K†)_ij|
    pub fn pseudo_hermiticity_residual(&self) -> f64 {
        let n = self.n();
        let sign = |i: usize| if i < n { 1.0 } else { -1.0 };
        let k = &self.entries;
        let mut worst = 0.0f64;
        for i in 0..2 * n {
            for j in 0..2 * n {
                let lhs = k[[i, j]] * (sign(i) * sign(j));
                let rhs = k[[j, i]].conj();
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }

    /// max |K^(1,2)_ij − K^(2,1)_ij|
    pub fn block_symmetry_residual(&self) -> f64 {
        self.block(1, 2)
            .iter()
            .zip(self.block(2, 1).iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_table(grids: &Grids, table: &FourierTable) -> Result<()> {
    if table.n() != grids.n() {
        return Err(Error::GridMismatch {
            expected: grids.n(),
            found: table.n(),
        });
    }
    if (table.dp() - grids.dp()).abs() > 1e-14 * grids.dp() {
        return Err(Error::InvalidGrid(format!(
            "potential table built for dp = {}, grid has dp = {}",
            table.dp(),
            grids.dp()
        )));
    }
    Ok(())
}

pub fn assemble_fw_kernel(
    grids: &Grids,
    table: &FourierTable,
    constants: &PhysicalConstants,
) -> Result<KernelMatrix> {
    assemble_fw_kernel_with(grids, table, constants, Execution::default())
}

pub fn assemble_fw_kernel_with(
    grids: &Grids,
    table: &FourierTable,
    constants: &PhysicalConstants,
    exec: Execution,
) -> Result<KernelMatrix> {
    check_table(grids, table)?;
    let n = grids.n();
    let dp = grids.dp();
    let norm = 1.0 / (2.0 * PI * grids.hbar).sqrt();
    let energies: Vec<f64> = grids
        .momentum
        .momenta()
        .iter()
        .map(|&p| energy(p, constants))
        .collect();

    let mut data = vec![Complex64::new(0.0, 0.0); 4 * n * n];
    for_each_row(exec, &mut data, 2 * n, |row, out| {
        let upper = row < n;
        let i = if upper { row } else { row - n };
        let ei = energies[i];
        for j in 0..n {
            let v = table.at(i, j) * norm;
            let (w_plus, w_minus) = dressing_weights(ei, energies[j]);
            let (diag_block, off_block) = if upper { (j, n + j) } else { (n + j, j) };
            out[diag_block] = v * w_plus;
            out[off_block] = v * w_minus;
        }
        let kinetic = if upper { ei / dp } else { -ei / dp };
        out[row] += kinetic;
    });

    Ok(KernelMatrix {
        representation: Representation::Fw,
        entries: Array2::from_shape_vec((2 * n, 2 * n), data).expect("square buffer"),
        grids: *grids,
    })
}

pub fn assemble_canonical_kernel(
    grids: &Grids,
    table: &FourierTable,
    constants: &PhysicalConstants,
) -> Result<KernelMatrix> {
    assemble_canonical_kernel_with(grids, table, constants, Execution::default())
}

pub fn assemble_canonical_kernel_with(
    grids: &Grids,
    table: &FourierTable,
    constants: &PhysicalConstants,
    exec: Execution,
) -> Result<KernelMatrix> {
    check_table(grids, table)?;
    let n = grids.n();
    let dp = grids.dp();
    let norm = 1.0 / (2.0 * PI * grids.hbar).sqrt();
    let mc2 = constants.rest_energy();
    let m = constants.m;

    let mut data = vec![Complex64::new(0.0, 0.0); 4 * n * n];
    for_each_row(exec, &mut data, 2 * n, |row, out| {
        let upper = row < n;
        let i = if upper { row } else { row - n };
        let p = grids.momentum.p(i);
        let a = p * p / (2.0 * m);
        let offset = if upper { 0 } else { n };
        for j in 0..n {
            out[offset + j] = table.at(i, j) * norm;
        }
        // mc²σ₃ + p²/2m (σ₃ + iσ₂) on the diagonal of each mode
        if upper {
            out[i] += (mc2 + a) / dp;
            out[n + i] += a / dp;
        } else {
            out[i] += -a / dp;
            out[n + i] += -(mc2 + a) / dp;
        }
    });

    Ok(KernelMatrix {
        representation: Representation::Canonical,
        entries: Array2::from_shape_vec((2 * n, 2 * n), data).expect("square buffer"),
        grids: *grids,
    })
}

/// Builds the Fourier table and the kernel for `representation` in one go.
pub fn assemble_kernel(
    representation: Representation,
    grids: &Grids,
    barrier: &BarrierSpec,
    constants: &PhysicalConstants,
) -> Result<KernelMatrix> {
    let table = FourierTable::new(barrier, grids);
    match representation {
        Representation::Fw => assemble_fw_kernel(grids, &table, constants),
        Representation::Canonical => assemble_canonical_kernel(grids, &table, constants),
    }
}
