//! Green's function, its `z`-derivative and the Bergman kernel on a slice.
//!
//! On the unit disc `g(z,w) = (1/2π) ln|(1 - z w̄)/(z - w)|`; on a conformal
//! slice `D = φ(disc)` it is transplanted, `g_D(z,w) = g(φ⁻¹z, φ⁻¹w)`.
//! With this sign convention `g > 0` in the interior and
//! `g(·,w) = -(1/2π) ln|· - w| + h_w` with `h_w` harmonic.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::SliceDomain;
use crate::error::{DbarError, Result};

/// Step of the nested central differences for second mixed derivatives.
pub const MIXED_FD_STEP: f64 = 1e-3;
/// Step for first-derivative finite differences.
pub const FIRST_FD_STEP: f64 = 1e-6;
/// Minimum separation of the point pairs fed to [`kernel_green_identity`].
pub const MIN_PAIR_SEPARATION: f64 = 0.05;

/// Green's function with its derivative and harmonic correction at one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEval {
    pub value: f64,
    pub dz: Complex64,
    pub correction: f64,
}

struct Preimages {
    zeta: Complex64,
    omega: Complex64,
}

fn preimages(slice: &SliceDomain, z: Complex64, w: Complex64) -> Result<Preimages> {
    Ok(Preimages {
        zeta: slice.pullback(z)?,
        omega: slice.pullback(w)?,
    })
}

fn disc_green(zeta: Complex64, omega: Complex64) -> f64 {
    let num = (Complex64::new(1.0, 0.0) - zeta * omega.conj()).norm();
    let den = (zeta - omega).norm();
    (num / den).ln() / (2.0 * PI)
}

fn disc_green_dz(zeta: Complex64, omega: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    (one / (omega - zeta) - omega.conj() / (one - zeta * omega.conj())) / (4.0 * PI)
}

/// `g(z, w)`; `z ≠ w`, both interior.
pub fn green(slice: &SliceDomain, z: Complex64, w: Complex64) -> Result<f64> {
    Ok(green_eval(slice, z, w)?.value)
}

/// `∂_z g(z, w)`.
pub fn green_dz(slice: &SliceDomain, z: Complex64, w: Complex64) -> Result<Complex64> {
    Ok(green_eval(slice, z, w)?.dz)
}

pub fn green_eval(slice: &SliceDomain, z: Complex64, w: Complex64) -> Result<GreenEval> {
    if z == w {
        return Err(DbarError::Pole(z));
    }
    let pre = preimages(slice, z, w)?;
    if pre.zeta == pre.omega {
        return Err(DbarError::Pole(z));
    }
    let value = disc_green(pre.zeta, pre.omega);
    let dz = disc_green_dz(pre.zeta, pre.omega) / slice.forward_derivative(pre.zeta);
    let correction = correction_from_preimages(slice, &pre);
    Ok(GreenEval { value, dz, correction })
}

/// Harmonic correction `h_w(z) = g(z,w) + (1/2π) ln|z - w|`, extended
/// continuously to `z = w`.
pub fn green_correction(slice: &SliceDomain, z: Complex64, w: Complex64) -> Result<f64> {
    let pre = preimages(slice, z, w)?;
    Ok(correction_from_preimages(slice, &pre))
}

fn correction_from_preimages(slice: &SliceDomain, pre: &Preimages) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let mut h = (one - pre.zeta * pre.omega.conj()).norm().ln();
    if let Some(map) = slice.map() {
        // ln|z - w| - ln|ζ - ω| = ln|divided difference of φ|
        h += map.divided_difference(pre.zeta, pre.omega).norm().ln();
    }
    h / (2.0 * PI)
}

/// Bergman kernel `k(z, w)`; the diagonal `z = w` is allowed.
pub fn bergman_kernel(slice: &SliceDomain, z: Complex64, w: Complex64) -> Result<Complex64> {
    let pre = preimages(slice, z, w)?;
    let one = Complex64::new(1.0, 0.0);
    let d = one - pre.zeta * pre.omega.conj();
    let k_disc = one / (PI * d * d);
    Ok(k_disc / (slice.forward_derivative(pre.zeta) * slice.forward_derivative(pre.omega).conj()))
}

/// `∂_z ∂_{w̄} F(z, w)` by nested central differences with step `h`.
pub fn mixed_dz_dwbar(f: impl Fn(Complex64, Complex64) -> Result<f64>, z: Complex64, w: Complex64, h: f64) -> Result<Complex64> {
    let ex = Complex64::new(h, 0.0);
    let ey = Complex64::new(0.0, h);
    let d2 = |dz: Complex64, dw: Complex64| -> Result<f64> {
        Ok((f(z + dz, w + dw)? - f(z + dz, w - dw)? - f(z - dz, w + dw)? + f(z - dz, w - dw)?) / (4.0 * h * h))
    };
    let xu = d2(ex, ex)?;
    let yv = d2(ey, ey)?;
    let xv = d2(ex, ey)?;
    let yu = d2(ey, ex)?;
    Ok(Complex64::new(xu + yv, xv - yu) / 4.0)
}

/// Max over pairs of `|k(z,w) + 4 ∂_z∂_{w̄} g(z,w)| / |k(z,w)|`.
///
/// The log part `-(1/2π) ln|z-w|` has vanishing mixed derivative off the
/// diagonal, so the differences act on the smooth correction `h_w(z)`.
pub fn kernel_green_identity(slice: &SliceDomain, pairs: &[(Complex64, Complex64)]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(z, w) in pairs {
        let sep = (z - w).norm();
        if !(sep >= MIN_PAIR_SEPARATION) {
            return Err(DbarError::Precondition {
                message: format!("pair ({z}, {w}) is closer than {MIN_PAIR_SEPARATION}"),
                residual: sep,
            });
        }
        let k = bergman_kernel(slice, z, w)?;
        let mixed = mixed_dz_dwbar(|a, b| green_correction(slice, a, b), z, w, MIXED_FD_STEP)?;
        worst = worst.max((k + 4.0 * mixed).norm() / k.norm());
    }
    Ok(worst)
}

/// Seeded interior point pairs: disc preimages uniform in `|ζ| ≤ radius`,
/// images at least `min_sep` apart.
pub fn sample_pairs(slice: &SliceDomain, count: usize, radius: f64, min_sep: f64, seed: u64) -> Vec<(Complex64, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| loop {
        let x: f64 = rng.random_range(-1.0..1.0);
        let y: f64 = rng.random_range(-1.0..1.0);
        if x * x + y * y <= 1.0 {
            return slice.forward(Complex64::new(x, y) * radius);
        }
    };
    let mut pairs = Vec::with_capacity(count);
    while pairs.len() < count {
        let z = point(&mut rng);
        let w = point(&mut rng);
        if (z - w).norm() >= min_sep {
            pairs.push((z, w));
        }
    }
    pairs
}
