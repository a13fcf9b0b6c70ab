//! Trains of identical tanh-smoothed barriers and their Fourier transform.
//!
//! Each barrier is `V₀/2 [tanh(ε(x − xᵢ + L/2)) − tanh(ε(x − xᵢ − L/2))]`.
//! Its transform, `Ṽ(k) = (2πħ)^{-1/2} ∫ V(x) e^{-ikx/ħ} dx`, has the closed
//! form
//!
//! ```text
//! Ṽᵢ(k) = (2πħ)^{-1/2} · V₀ L · sinc(qL/2) / sinhc(πq/2ε) · e^{-iqxᵢ},   q = k/ħ
//! ```
//!
//! with `sinc(a) = sin a / a` and `sinhc(b) = sinh b / b`. The `q → 0` limit is
//! `V₀L`, the area under the tanh pair for any steepness.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::grid::{Grids, PhysicalConstants};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub v0: f64,
    pub length: f64,
    pub steepness: f64,
    pub centers: Vec<f64>,
}

impl BarrierSpec {
    /// `count` barriers at `first, first + spacing, ...`.
    pub fn evenly_spaced(v0: f64, length: f64, steepness: f64, count: usize, first: f64, spacing: f64) -> Self {
        Self {
            v0,
            length,
            steepness,
            centers: (0..count).map(|i| first + i as f64 * spacing).collect(),
        }
    }

    /// The seven-barrier train used by the presets: V₀ = 5, L = 2, ε = 20,
    /// centers 0, 4, ..., 24.
    pub fn reference_train() -> Self {
        Self::evenly_spaced(5.0, 2.0, 20.0, 7, 0.0, 4.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v0.is_finite() && self.v0 > 0.0) {
            return Err(Error::InvalidBarrier(format!("v0 must be > 0, got {}", self.v0)));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::InvalidBarrier(format!("length must be > 0, got {}", self.length)));
        }
        if !(self.steepness.is_finite() && self.steepness > 0.0) {
            return Err(Error::InvalidBarrier(format!(
                "steepness must be > 0, got {}",
                self.steepness
            )));
        }
        if self.centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidBarrier("centers must be finite".into()));
        }
        for w in self.centers.windows(2) {
            if w[1] - w[0] <= self.length {
                return Err(Error::InvalidBarrier(format!(
                    "barriers at {} and {} overlap or are out of order (need spacing > L = {})",
                    w[0], w[1], self.length
                )));
            }
        }
        Ok(())
    }

    /// V₀ > 2mc². Reported, not enforced.
    pub fn is_supercritical(&self, constants: &PhysicalConstants) -> bool {
        self.v0 > 2.0 * constants.rest_energy()
    }

    /// Nominal extent `[xᵢ − L/2, xᵢ + L/2]` of each barrier.
    pub fn extents(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.centers
            .iter()
            .map(move |&c| (c - 0.5 * self.length, c + 0.5 * self.length))
    }

    pub fn value(&self, x: f64) -> f64 {
        potential_value(self, x)
    }
}

pub fn potential_value(spec: &BarrierSpec, x: f64) -> f64 {
    let half = 0.5 * spec.length;
    let eps = spec.steepness;
    spec.centers
        .iter()
        .map(|&c| {
            let u = x - c;
            0.5 * spec.v0 * ((eps * (u + half)).tanh() - (eps * (u - half)).tanh())
        })
        .sum()
}

fn sinc(a: f64) -> f64 {
    if a.abs() < 1e-4 {
        1.0 - a * a / 6.0
    } else {
        a.sin() / a
    }
}

/// b / sinh(b), evaluated without overflow.
fn inv_sinhc(b: f64) -> f64 {
    let b = b.abs();
    if b < 1e-4 {
        1.0 - b * b / 6.0
    } else if b < 20.0 {
        b / b.sinh()
    } else {
        2.0 * b * (-b).exp() / (1.0 - (-2.0 * b).exp())
    }
}

/// Transform of one barrier centered at the origin (real, even in k).
fn single_barrier_fourier(spec: &BarrierSpec, k: f64, hbar: f64) -> f64 {
    let q = k / hbar;
    let profile = spec.v0 * spec.length * sinc(0.5 * q * spec.length) * inv_sinhc(PI * q / (2.0 * spec.steepness));
    profile / (2.0 * PI * hbar).sqrt()
}

pub fn potential_fourier(spec: &BarrierSpec, k: f64, hbar: f64) -> Complex64 {
    let amp = single_barrier_fourier(spec, k, hbar);
    let q = k / hbar;
    spec.centers
        .iter()
        .map(|&c| Complex64::from_polar(amp, -q * c))
        .sum()
}

/// Transform of the sharp rectangular train, the ε → ∞ limit.
pub fn rectangle_fourier(spec: &BarrierSpec, k: f64, hbar: f64) -> Complex64 {
    let q = k / hbar;
    let amp = spec.v0 * spec.length * sinc(0.5 * q * spec.length) / (2.0 * PI * hbar).sqrt();
    spec.centers
        .iter()
        .map(|&c| Complex64::from_polar(amp, -q * c))
        .sum()
}

/// Ṽ on the `2N − 1` momentum differences `m·dp`, `m = −(N−1)..=(N−1)`.
#[derive(Debug, Clone)]
pub struct FourierTable {
    n: usize,
    dp: f64,
    values: Vec<Complex64>,
}

impl FourierTable {
    pub fn new(spec: &BarrierSpec, grids: &Grids) -> Self {
        Self::with_execution(spec, grids, Execution::default())
    }

    pub fn with_execution(spec: &BarrierSpec, grids: &Grids, exec: Execution) -> Self {
        let n = grids.n();
        let dp = grids.dp();
        let hbar = grids.hbar;
        let values = map_indexed(exec, 2 * n - 1, |idx| {
            let m = idx as f64 - (n - 1) as f64;
            potential_fourier(spec, m * dp, hbar)
        });
        Self { n, dp, values }
    }

    /// All-zero table: the field-free kernel.
    pub fn free(grids: &Grids) -> Self {
        let n = grids.n();
        Self {
            n,
            dp: grids.dp(),
            values: vec![Complex64::new(0.0, 0.0); 2 * n - 1],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    /// Ṽ(p_i − p_j)
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i + self.n - 1 - j]
    }

    /// Ṽ(m·dp)
    pub fn at_offset(&self, m: isize) -> Complex64 {
        self.values[(m + self.n as isize - 1) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}
