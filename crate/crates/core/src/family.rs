//! Seeded random test data: sparse densities with dyadic coefficients in
//! the closed unit disc, and `∂̄`-closed forms built as `f = ∂̄u`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::ExactDensity;
use crate::error::Result;
use crate::form::Form01;
use crate::scalar::{gauss, ExactComplex};

pub const DEFAULT_SEED: u64 = 42;
/// Monomials per random density.
pub const DEFAULT_TERMS: usize = 6;
/// Common denominator of the random coefficients.
const DYADIC: i64 = 1024;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dyadic rational drawn uniformly from the lattice points of the closed
/// unit disc, excluding zero.
pub fn disc_coefficient(rng: &mut ChaCha8Rng) -> ExactComplex {
    loop {
        let a: i64 = rng.random_range(-DYADIC..=DYADIC);
        let b: i64 = rng.random_range(-DYADIC..=DYADIC);
        if (a, b) != (0, 0) && a * a + b * b <= DYADIC * DYADIC {
            return gauss(a, b, DYADIC);
        }
    }
}

fn random_exps(rng: &mut ChaCha8Rng, nvars: usize, degree: u32, holomorphic: bool) -> Vec<(u32, u32)> {
    (0..nvars)
        .map(|_| {
            let m = rng.random_range(0..=degree);
            let n = if holomorphic { 0 } else { rng.random_range(0..=degree) };
            (m, n)
        })
        .collect()
}

fn build(rng: &mut ChaCha8Rng, nvars: usize, degree: u32, terms: usize, first: Vec<(u32, u32)>, holomorphic: bool) -> Result<ExactDensity> {
    let mut d = ExactDensity::zero(nvars, degree);
    let c = disc_coefficient(rng);
    d.insert(&first, c)?;
    for _ in 1..terms {
        let exps = random_exps(rng, nvars, degree, holomorphic);
        let c = disc_coefficient(rng);
        d.insert(&exps, c)?;
    }
    Ok(d)
}

/// Sparse density whose first term has exponent `degree` in `z̄_0`, so the
/// declared degree is attained and `∂̄_0` of it does not vanish.
pub fn random_density(rng: &mut ChaCha8Rng, nvars: usize, degree: u32, terms: usize) -> Result<ExactDensity> {
    let mut first = random_exps(rng, nvars, degree, false);
    first[0].1 = degree;
    build(rng, nvars, degree, terms, first, false)
}

/// Sparse holomorphic polynomial reaching `z_0^degree`.
pub fn random_holomorphic(rng: &mut ChaCha8Rng, nvars: usize, degree: u32, terms: usize) -> Result<ExactDensity> {
    let mut first = random_exps(rng, nvars, degree, true);
    first[0].0 = degree;
    build(rng, nvars, degree, terms, first, true)
}

/// A `∂̄`-closed form `f = ∂̄u` with its potential `u`.
pub fn random_closed_form(rng: &mut ChaCha8Rng, nvars: usize, degree: u32, terms: usize) -> Result<(ExactDensity, Form01<ExactDensity>)> {
    let u = random_density(rng, nvars, degree, terms)?;
    let f = Form01::dbar_of(&u)?;
    Ok((u, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_bounded() {
        let a = random_density(&mut rng(42), 2, 8, DEFAULT_TERMS).unwrap();
        let b = random_density(&mut rng(42), 2, 8, DEFAULT_TERMS).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.actual_degree(), 8);
        assert!(a.max_abs_coeff().unwrap() <= 1.0);
        let h = random_holomorphic(&mut rng(1), 1, 5, 4).unwrap();
        assert!(h.dzbar(0).is_zero());
    }
}
