//! Charge bookkeeping, light-cone geometry and the analytic transmission of
//! a sharp rectangular barrier.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::InitialPacketSpec;
use crate::grid::{DensityProfile, PhysicalConstants};
use crate::potentials::BarrierSpec;

/// Cone emitted from `edge` at `t0`: `x_lc(t) = edge + c(t − t0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LightConeSpec {
    pub edge: f64,
    pub t0: f64,
    pub c: f64,
}

impl LightConeSpec {
    /// Cone from the right edge of the packet's initial support.
    pub fn from_packet(packet: &InitialPacketSpec, t0: f64, c: f64) -> Self {
        Self {
            edge: packet.support().1,
            t0,
            c,
        }
    }

    pub fn position(&self, t: f64) -> f64 {
        self.edge + self.c * (t - self.t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub q_total: f64,
    pub olc_fraction: f64,
    pub barrier_index: Option<usize>,
}

/// `t,q_total,olc_fraction,barrier_index`; the index column is empty when unset.
pub fn write_diagnostics_csv<W: Write>(records: &[DiagnosticsRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,q_total,olc_fraction,barrier_index")?;
    for r in records {
        let idx = r.barrier_index.map(|i| i.to_string()).unwrap_or_default();
        writeln!(w, "{:.14e},{:.14e},{:.14e},{}", r.t, r.q_total, r.olc_fraction, idx)?;
    }
    Ok(())
}

/// Σ ρ_j dx
pub fn total_charge(density: &DensityProfile) -> f64 {
    density.rho.iter().sum::<f64>() * density.dx()
}

/// Signed charge at positions `x > x`, with the cell that contains `x`
/// split linearly. Cells are `[x_j, x_j + dx)`.
pub fn charge_beyond(density: &DensityProfile, x: f64) -> f64 {
    let g = &density.grid;
    let dx = g.dx();
    let u = (x - g.x_min) / dx;
    if u <= 0.0 {
        return total_charge(density);
    }
    let cell = u.floor() as usize;
    if cell >= density.rho.len() {
        return 0.0;
    }
    let frac = u - cell as f64;
    let tail: f64 = density.rho[cell + 1..].iter().sum();
    (tail + (1.0 - frac) * density.rho[cell]) * dx
}

/// Fraction of the total charge lying beyond the light cone at the profile's time.
pub fn olc_fraction(density: &DensityProfile, cone: &LightConeSpec) -> Result<f64> {
    let x = cone.position(density.time);
    if x > density.grid.x_max {
        return Err(Error::ConeOutsideGrid {
            cone: x,
            x_max: density.grid.x_max,
        });
    }
    Ok(charge_beyond(density, x) / total_charge(density))
}

/// Times at which the cone passes the right edge of each barrier, with that edge.
pub fn barrier_exit_times(barrier: &BarrierSpec, cone: &LightConeSpec) -> Vec<(f64, f64)> {
    barrier
        .extents()
        .map(|(_, right)| (cone.t0 + (right - cone.edge) / cone.c, right))
        .collect()
}

/// Energy region of an incident particle relative to the barrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TransmissionZone {
    /// mc² < E < V₀ − mc²: propagating antiparticle-like mode inside.
    Klein,
    /// |E − V₀| < mc²: evanescent inside.
    Tunneling,
    /// E > V₀ + mc²: ordinary propagation above the barrier.
    AboveBarrier,
}

/// Plane-wave amplitudes `(A, B)` of `A e^{ikx} + B e^{-ikx}`, matched across an
/// interface where ψ and ψ' are continuous.
///
/// Maps local amplitudes on the `from` side to the `to` side. Satisfies
/// `det = k_from / k_to`, and for real wavenumbers the flux identity
/// `M† diag(k_to, −k_to) M = diag(k_from, −k_from)`.
pub fn interface_matrix(k_from: Complex64, k_to: Complex64) -> [[Complex64; 2]; 2] {
    let s = 0.5 / k_to;
    let sum = (k_to + k_from) * s;
    let diff = (k_to - k_from) * s;
    [[sum, diff], [diff, sum]]
}

fn mul2(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KleinTransmission {
    pub energy: f64,
    pub zone: TransmissionZone,
    /// Outside wavenumber k.
    pub k_outside: f64,
    /// Inside wavenumber k', on the branch whose group velocity points
    /// forward (negative in the Klein zone) or decaying when evanescent.
    pub k_inside: Complex64,
    /// Single traversal: entry, propagation across L, exit.
    pub first_pass: Complex64,
    /// Steady state, all internal reflections summed.
    pub stationary: Complex64,
    /// Steady-state reflection amplitude.
    pub reflection: Complex64,
}

impl KleinTransmission {
    /// The transmission amplitude of one passage through the barrier.
    pub fn amplitude(&self) -> Complex64 {
        self.first_pass
    }

    /// Entry and exit interface amplitudes (t_in, t_out) and the internal
    /// reflection amplitude r'.
    pub fn interface_amplitudes(&self) -> (Complex64, Complex64, Complex64) {
        let k = Complex64::new(self.k_outside, 0.0);
        let kp = self.k_inside;
        (2.0 * k / (k + kp), 2.0 * kp / (k + kp), (kp - k) / (kp + k))
    }
}

/// Transmission of a KG particle of energy `energy` through a sharp
/// rectangular barrier of height `v0` and width `length`.
pub fn klein_transmission(
    energy: f64,
    v0: f64,
    length: f64,
    constants: &PhysicalConstants,
) -> Result<KleinTransmission> {
    let mc2 = constants.rest_energy();
    let hc = constants.hbar * constants.c;
    if !(energy > mc2) {
        return Err(Error::BelowRestEnergy { energy, rest: mc2 });
    }
    let k = (energy * energy - mc2 * mc2).sqrt() / hc;
    let inside = energy - v0;
    let disc = inside * inside - mc2 * mc2;
    let (zone, k_inside) = if disc > 0.0 {
        let kp = disc.sqrt() / hc;
        if inside < 0.0 {
            (TransmissionZone::Klein, Complex64::new(-kp, 0.0))
        } else {
            (TransmissionZone::AboveBarrier, Complex64::new(kp, 0.0))
        }
    } else {
        (TransmissionZone::Tunneling, Complex64::new(0.0, (-disc).sqrt() / hc))
    };
    if zone != TransmissionZone::Klein {
        log::debug!("energy {energy} is outside the Klein zone ({zone:?})");
    }

    let kc = Complex64::new(k, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let t_in = 2.0 * kc / (kc + k_inside);
    let t_out = 2.0 * k_inside / (kc + k_inside);
    let first_pass = t_in * t_out * (i * (k_inside - kc) * length).exp();

    let enter = interface_matrix(kc, k_inside);
    let leave = interface_matrix(k_inside, kc);
    let phase = [
        [(i * k_inside * length).exp(), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), (-i * k_inside * length).exp()],
    ];
    let total = mul2(&leave, &mul2(&phase, &enter));
    let reflection = -total[1][0] / total[1][1];
    let stationary = (-i * kc * length).exp() / total[1][1];

    Ok(KleinTransmission {
        energy,
        zone,
        k_outside: k,
        k_inside,
        first_pass,
        stationary,
        reflection,
    })
}
