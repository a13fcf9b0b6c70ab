//! Physical constants, the dual position/momentum grid and two-component
//! states.
//!
//! The momentum grid is fixed by the position box: `dp = 2πħ/(x_max − x_min)`
//! and `p_k = (k − N/2)·dp`. Positions sit at cell left edges,
//! `x_j = x_min + j·dx`. The transforms are the Riemann-sum analogues of
//!
//! ```text
//! Ψ(x) = (2πħ)^{-1/2} ∫ Ψ(p) e^{ipx/ħ} dp,    Ψ(p) = (2πħ)^{-1/2} ∫ Ψ(x) e^{-ipx/ħ} dx
//! ```
//!
//! and are exact inverses of each other because `dp·dx·N = 2πħ`.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array1;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub m: f64,
    pub q: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            c: 1.0,
            m: 1.0,
            q: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("c", self.c), ("m", self.m), ("q", self.q)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConstants(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// ħ/(mc)
    pub fn compton_wavelength(&self) -> f64 {
        self.hbar / (self.m * self.c)
    }

    /// mc²
    pub fn rest_energy(&self) -> f64 {
        self.m * self.c * self.c
    }
}

/// Which Hamiltonian the two components refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Canonical,
    Fw,
}

impl Representation {
    pub fn label(self) -> &'static str {
        match self {
            Representation::Canonical => "canonical",
            Representation::Fw => "fw",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl SpatialGrid {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    pub dp: f64,
    pub n_points: usize,
}

impl MomentumGrid {
    pub fn p(&self, k: usize) -> f64 {
        (k as f64 - (self.n_points / 2) as f64) * self.dp
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.p(k)).collect()
    }

    /// Index of `p = 0`.
    pub fn zero_index(&self) -> usize {
        self.n_points / 2
    }
}

/// The dual pair of grids plus the ħ they were built with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grids {
    pub spatial: SpatialGrid,
    pub momentum: MomentumGrid,
    pub hbar: f64,
}

impl Grids {
    pub fn new(x_min: f64, x_max: f64, n_points: usize, hbar: f64) -> Result<Self> {
        make_grids(x_min, x_max, n_points, hbar)
    }

    pub fn n(&self) -> usize {
        self.spatial.n_points
    }

    pub fn dx(&self) -> f64 {
        self.spatial.dx()
    }

    pub fn dp(&self) -> f64 {
        self.momentum.dp
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::GridMismatch {
                expected: self.n(),
                found: len,
            });
        }
        Ok(())
    }
}

pub fn make_grids(x_min: f64, x_max: f64, n_points: usize, hbar: f64) -> Result<Grids> {
    if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
        return Err(Error::InvalidGrid(format!(
            "need x_max > x_min, got [{x_min}, {x_max}]"
        )));
    }
    if n_points < 8 || n_points % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "n_points must be even and >= 8, got {n_points}"
        )));
    }
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(Error::InvalidGrid(format!("hbar must be > 0, got {hbar}")));
    }
    let spatial = SpatialGrid {
        x_min,
        x_max,
        n_points,
    };
    let momentum = MomentumGrid {
        dp: 2.0 * PI * hbar / (x_max - x_min),
        n_points,
    };
    Ok(Grids {
        spatial,
        momentum,
        hbar,
    })
}

/// (φ, χ) sampled on the momentum grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoComponentState {
    pub representation: Representation,
    pub phi: Array1<Complex64>,
    pub chi: Array1<Complex64>,
    pub time: f64,
}

impl TwoComponentState {
    pub fn new(
        representation: Representation,
        phi: Array1<Complex64>,
        chi: Array1<Complex64>,
        time: f64,
    ) -> Result<Self> {
        if phi.len() != chi.len() {
            return Err(Error::GridMismatch {
                expected: phi.len(),
                found: chi.len(),
            });
        }
        Ok(Self {
            representation,
            phi,
            chi,
            time,
        })
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    /// Σ (|φ|² − |χ|²)·dp
    pub fn pseudo_norm(&self, dp: f64) -> f64 {
        let s: f64 = self
            .phi
            .iter()
            .zip(self.chi.iter())
            .map(|(a, b)| a.norm_sqr() - b.norm_sqr())
            .sum();
        s * dp
    }

    /// Stacks (φ, χ) into one 2N vector, the layout used by the kernels.
    pub fn to_vector(&self) -> Array1<Complex64> {
        let n = self.len();
        let mut v = Array1::zeros(2 * n);
        v.slice_mut(ndarray::s![..n]).assign(&self.phi);
        v.slice_mut(ndarray::s![n..]).assign(&self.chi);
        v
    }

    pub fn from_vector(
        representation: Representation,
        v: &Array1<Complex64>,
        time: f64,
    ) -> Result<Self> {
        if v.len() % 2 != 0 {
            return Err(Error::GridMismatch {
                expected: v.len() + 1,
                found: v.len(),
            });
        }
        let n = v.len() / 2;
        Self::new(
            representation,
            v.slice(ndarray::s![..n]).to_owned(),
            v.slice(ndarray::s![n..]).to_owned(),
            time,
        )
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            representation: self.representation,
            phi: self.phi.mapv(|z| z * factor),
            chi: self.chi.mapv(|z| z * factor),
            time: self.time,
        }
    }
}

/// (φ, χ) sampled on the position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionState {
    pub representation: Representation,
    pub phi: Array1<Complex64>,
    pub chi: Array1<Complex64>,
    pub time: f64,
}

impl PositionState {
    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }
}

fn inverse_dft(grids: &Grids, input: &Array1<Complex64>) -> Vec<Complex64> {
    let n = grids.n();
    let hbar = grids.hbar;
    let x_min = grids.spatial.x_min;
    let mut buf: Vec<Complex64> = input
        .iter()
        .enumerate()
        .map(|(k, &z)| z * Complex64::from_polar(1.0, grids.momentum.p(k) * x_min / hbar))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let w = grids.dp() / (2.0 * PI * hbar).sqrt();
    for (j, z) in buf.iter_mut().enumerate() {
        let sign = if j % 2 == 0 { w } else { -w };
        *z *= sign;
    }
    buf
}

fn forward_dft(grids: &Grids, input: &Array1<Complex64>) -> Vec<Complex64> {
    let n = grids.n();
    let hbar = grids.hbar;
    let x_min = grids.spatial.x_min;
    let mut buf: Vec<Complex64> = input
        .iter()
        .enumerate()
        .map(|(j, &z)| if j % 2 == 0 { z } else { -z })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let w = grids.dx() / (2.0 * PI * hbar).sqrt();
    for (k, z) in buf.iter_mut().enumerate() {
        *z *= Complex64::from_polar(w, -grids.momentum.p(k) * x_min / hbar);
    }
    buf
}

pub fn to_position(state: &TwoComponentState, grids: &Grids) -> Result<PositionState> {
    grids.check_len(state.len())?;
    Ok(PositionState {
        representation: state.representation,
        phi: Array1::from(inverse_dft(grids, &state.phi)),
        chi: Array1::from(inverse_dft(grids, &state.chi)),
        time: state.time,
    })
}

pub fn to_momentum(state: &PositionState, grids: &Grids) -> Result<TwoComponentState> {
    grids.check_len(state.len())?;
    Ok(TwoComponentState {
        representation: state.representation,
        phi: Array1::from(forward_dft(grids, &state.phi)),
        chi: Array1::from(forward_dft(grids, &state.chi)),
        time: state.time,
    })
}

/// Charge per unit length on the position grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub grid: SpatialGrid,
    pub rho: Vec<f64>,
    pub time: f64,
}

impl DensityProfile {
    pub fn dx(&self) -> f64 {
        self.grid.dx()
    }

    pub fn max(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `x,rho,t` rows, 15 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,rho,t")?;
        for (j, rho) in self.rho.iter().enumerate() {
            writeln!(w, "{:.14e},{:.14e},{:.14e}", self.grid.x(j), rho, self.time)?;
        }
        Ok(())
    }
}

/// ρ_j = q(|φ_j|² − |χ_j|²)
pub fn charge_density(state: &PositionState, grids: &Grids, q: f64) -> Result<DensityProfile> {
    grids.check_len(state.len())?;
    let rho = state
        .phi
        .iter()
        .zip(state.chi.iter())
        .map(|(a, b)| q * (a.norm_sqr() - b.norm_sqr()))
        .collect();
    Ok(DensityProfile {
        grid: grids.spatial,
        rho,
        time: state.time,
    })
}

/// Momentum state straight to its position-space density.
pub fn density_of(state: &TwoComponentState, grids: &Grids, q: f64) -> Result<DensityProfile> {
    charge_density(&to_position(state, grids)?, grids, q)
}
