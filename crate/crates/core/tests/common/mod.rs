//! Helpers shared by the integration tests.
#![allow(dead_code)]

use num_complex::Complex64;

// 15-point Kronrod nodes on [0, 1] (mirrored), weights, and the embedded
// 7-point Gauss weights at the odd Kronrod nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod estimate, |K − G|, and the integral of |f| (the roundoff scale).
fn kronrod<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let center = f(mid);
    let mut k = center * WGK[7];
    let mut g = center * WG[3];
    let mut abs = center.norm() * WGK[7];
    for i in 0..7 {
        let dx = half * XGK[i];
        let (lo, hi) = (f(mid - dx), f(mid + dx));
        k += (lo + hi) * WGK[i];
        abs += (lo.norm() + hi.norm()) * WGK[i];
        if i % 2 == 1 {
            g += (lo + hi) * WG[i / 2];
        }
    }
    (k * half, ((k - g) * half).norm(), abs * half.abs())
}

/// Composite Gauss–Kronrod with panels no wider than `h` between consecutive
/// `breaks`: (integral, summed |K − G| estimate, integral of |f|).
pub fn integrate_panels<F: Fn(f64) -> Complex64>(f: F, breaks: &[f64], h: f64) -> (Complex64, f64, f64) {
    // compensated sum: thousands of panels otherwise lose ~1e-12
    let mut total = Complex64::new(0.0, 0.0);
    let mut carry = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut abs = 0.0;
    for w in breaks.windows(2) {
        let m = ((w[1] - w[0]) / h).ceil().max(1.0) as usize;
        let step = (w[1] - w[0]) / m as f64;
        for i in 0..m {
            // shared endpoints, so the panels tile the interval exactly
            let a = w[0] + i as f64 * step;
            let b = if i + 1 == m { w[1] } else { w[0] + (i + 1) as f64 * step };
            let (k, e, a) = kronrod(&f, a, b);
            let t = total + k;
            carry.re += if total.re.abs() >= k.re.abs() { (total.re - t.re) + k.re } else { (k.re - t.re) + total.re };
            carry.im += if total.im.abs() >= k.im.abs() { (total.im - t.im) + k.im } else { (k.im - t.im) + total.im };
            total = t;
            err += e;
            abs += a;
        }
    }
    (total + carry, err, abs)
}

/// Least-squares fit of `y` against `x`: (slope, intercept, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let xb = x.iter().sum::<f64>() / n;
    let yb = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xb) * (b - yb)).sum();
    let sxx: f64 = x.iter().map(|a| (a - xb).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - yb).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, yb - slope * xb, sxy * sxy / (sxx * syy))
}

/// Worst relative error of the closed-form transform against quadrature of
/// `(2πħ)^{-1/2} ∫ V(x) e^{-ikx/ħ} dx` over the whole difference grid.
///
/// Errors are taken relative to `max(|Ṽ(k)|, floor)` with
/// `floor = 1e-6 · max|Ṽ|`: the sinc factor has exact zeros on the grid,
/// where a pure relative error is undefined.
pub fn fourier_oracle_error(spec: &kgfw::potentials::BarrierSpec, grids: &kgfw::grid::Grids) -> (f64, f64) {
    use kgfw::potentials::{potential_fourier, potential_value};
    let hbar = grids.hbar;
    let n = grids.n() as isize;
    let dp = grids.dp();
    // tanh tails fall as e^{-2ε·d} a distance d beyond an edge; stop at e^{-80}
    let margin = 0.5 * spec.length + 40.0 / spec.steepness;
    let mut breaks: Vec<f64> = spec
        .centers
        .iter()
        .flat_map(|&c| [c - margin, c - 0.5 * spec.length, c + 0.5 * spec.length, c + margin])
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let ks: Vec<f64> = (-(n - 1)..n).map(|m| m as f64 * dp).collect();
    let closed: Vec<Complex64> = ks.iter().map(|&k| potential_fourier(spec, k, hbar)).collect();
    let peak = closed.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = 1e-6 * peak;
    let norm = (2.0 * std::f64::consts::PI * hbar).sqrt();
    let tol = 1e-9 * floor * norm;
    let mut worst = (0.0, 0.0);
    for (&k, &want) in ks.iter().zip(&closed) {
        let q = k / hbar;
        // panels resolve both the tanh edges and the oscillation; halve until
        // the Kronrod estimate is below tolerance
        let mut h = (0.25 / spec.steepness).min(std::f64::consts::PI / q.abs().max(1.0));
        let got = loop {
            let (mut v, mut err, mut abs) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
            // local coordinates per window keep the large phase q·x out of
            // every node: it is applied once, exactly at the window start
            for w in breaks.windows(2) {
                let (i, e, a) = integrate_panels(
                    |u| Complex64::from_polar(potential_value(spec, w[0] + u), -q * u),
                    &[0.0, w[1] - w[0]],
                    h,
                );
                v += i * Complex64::from_polar(1.0, -q * w[0]);
                err += e;
                abs += a;
            }
            if err <= tol.max(100.0 * f64::EPSILON * abs) || h < 1e-5 {
                break v / norm;
            }
            h *= 0.5;
        };
        let rel = (got - want).norm() / want.norm().max(floor);
        if rel > worst.0 {
            worst = (rel, k);
        }
    }
    worst
}
