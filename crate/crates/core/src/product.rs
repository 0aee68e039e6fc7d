//! Operators on a product of slices, assembled from slice operators that
//! act on one variable at a time:
//!
//! ```text
//! P  = P_1 P_2 ⋯ P_n
//! Tf = T_1 f_1 + T_2 P_1 f_2 + ⋯ + T_n P_1 ⋯ P_{n-1} f_n
//! ```

use std::collections::BTreeMap;

use crate::domain::SliceDomain;
use crate::error::{DbarError, Result};
use crate::form::Form01;
use crate::slice_ops::{bergman_P, canonical_T, Operand};

/// Closedness tolerance for inexact data.
pub const CLOSEDNESS_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ProductSolution<F> {
    pub u: F,
    /// `terms[j] = T_{σ_j} P_{σ_0} ⋯ P_{σ_{j-1}} f_{σ_j}` for the slice order `σ`.
    pub terms: Vec<F>,
    pub order: Vec<usize>,
    /// `closedness` of the datum and `dbar` residual of `u`.
    pub residuals: BTreeMap<String, f64>,
}

fn check_slices<F: Operand>(f: &Form01<F>, slices: &[SliceDomain]) -> Result<()> {
    if slices.len() != f.len() {
        return Err(DbarError::Shape(format!("{} slices for a form on {} variables", slices.len(), f.len())));
    }
    Ok(())
}

/// `max_{i<j} sup |∂_{z̄_i} f_j - ∂_{z̄_j} f_i|`.
pub fn check_dbar_closed<F: Operand>(f: &Form01<F>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..f.len() {
        for j in i + 1..f.len() {
            let gap = f.component(j).dzbar(i)?.minus(&f.component(i).dzbar(j)?)?;
            worst = worst.max(gap.sup()?);
        }
    }
    Ok(worst)
}

/// Canonical solution in the natural slice order.
pub fn canonical_solution_product<F: Operand>(f: &Form01<F>, slices: &[SliceDomain]) -> Result<ProductSolution<F>> {
    let order: Vec<usize> = (0..f.len()).collect();
    canonical_solution_ordered(f, slices, &order)
}

/// Canonical solution with the slices taken in the order `order`. For
/// closed data every order gives the same `u`.
pub fn canonical_solution_ordered<F: Operand>(f: &Form01<F>, slices: &[SliceDomain], order: &[usize]) -> Result<ProductSolution<F>> {
    check_slices(f, slices)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != (0..f.len()).collect::<Vec<_>>() {
        return Err(DbarError::Index(format!("{order:?} is not an ordering of the slices")));
    }
    let closedness = check_dbar_closed(f)?;
    let tol = if f.component(0).is_exact() { 0.0 } else { CLOSEDNESS_TOL };
    if closedness > tol {
        return Err(DbarError::Precondition {
            message: "the (0,1)-form is not dbar-closed".into(),
            residual: closedness,
        });
    }
    let terms = order
        .iter()
        .enumerate()
        .map(|(pos, &j)| {
            let mut g = f.component(j).clone();
            for &prev in &order[..pos] {
                g = bergman_P(&g, &slices[prev], prev)?;
            }
            canonical_T(&g, &slices[j], j)
        })
        .collect::<Result<Vec<F>>>()?;
    let mut u = terms[0].clone();
    for t in &terms[1..] {
        u = u.plus(t)?;
    }
    let mut residuals = BTreeMap::new();
    residuals.insert("closedness".to_string(), closedness);
    residuals.insert("dbar".to_string(), dbar_residual(&u, f)?);
    Ok(ProductSolution {
        u,
        terms,
        order: order.to_vec(),
        residuals,
    })
}

/// `P_1 ⋯ P_n f`.
pub fn bergman_projection_product<F: Operand>(f: &F, slices: &[SliceDomain]) -> Result<F> {
    if slices.len() != f.nvars() {
        return Err(DbarError::Shape(format!("{} slices for {} variables", slices.len(), f.nvars())));
    }
    let mut g = f.clone();
    for (j, s) in slices.iter().enumerate() {
        g = bergman_P(&g, s, j)?;
    }
    Ok(g)
}

/// `max_j sup |∂_{z̄_j} u - f_j|`.
pub fn dbar_residual<F: Operand>(u: &F, f: &Form01<F>) -> Result<f64> {
    if u.nvars() != f.len() {
        return Err(DbarError::Shape("solution and form live on different products".into()));
    }
    let mut worst: f64 = 0.0;
    for j in 0..f.len() {
        worst = worst.max(u.dzbar(j)?.minus(f.component(j))?.sup()?);
    }
    Ok(worst)
}

/// `max_a |⟨u, z^a⟩| / ‖z^a‖` over multi-indices with every `a_j ≤ maxdeg`.
pub fn orthogonality_residual<F: Operand>(u: &F, maxdeg: u32) -> Result<f64> {
    let n = u.nvars();
    let count = (maxdeg as usize + 1).pow(n as u32);
    let mut worst: f64 = 0.0;
    for flat in 0..count {
        let mut rest = flat;
        let a: Vec<u32> = (0..n)
            .map(|_| {
                let k = (rest % (maxdeg as usize + 1)) as u32;
                rest /= maxdeg as usize + 1;
                k
            })
            .collect();
        worst = worst.max(u.holomorphic_pairing(&a)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ExactDensity;
    use crate::scalar::{gauss, ExactComplex};
    use num_traits::One;

    fn mono(exps: &[(u32, u32)]) -> ExactDensity {
        ExactDensity::monomial(exps, ExactComplex::one())
    }

    fn bidisc() -> Vec<SliceDomain> {
        vec![SliceDomain::disc(), SliceDomain::disc()]
    }

    #[test]
    fn closedness_examples() {
        let f = Form01::new(vec![mono(&[(0, 0), (0, 1)]), mono(&[(0, 1), (0, 0)])]).unwrap();
        assert_eq!(check_dbar_closed(&f).unwrap(), 0.0);
        let g = Form01::new(vec![mono(&[(0, 0), (0, 1)]), ExactDensity::zero(2, 0)]).unwrap();
        assert_eq!(check_dbar_closed(&g).unwrap(), 1.0);
        let err = canonical_solution_product(&g, &bidisc()).unwrap_err();
        assert!(matches!(err, DbarError::Precondition { residual, .. } if residual == 1.0));
    }

    #[test]
    fn bidisc_examples() {
        let s = bidisc();
        let f = Form01::new(vec![mono(&[(0, 0), (0, 1)]), mono(&[(0, 1), (0, 0)])]).unwrap();
        let sol = canonical_solution_product(&f, &s).unwrap();
        assert_eq!(sol.u, mono(&[(0, 1), (0, 1)]));
        assert!(sol.terms[1].is_zero());
        assert_eq!(orthogonality_residual(&sol.u, 6).unwrap(), 0.0);

        let f = Form01::new(vec![mono(&[(0, 0), (0, 0)]), ExactDensity::zero(2, 0)]).unwrap();
        assert_eq!(canonical_solution_product(&f, &s).unwrap().u, mono(&[(0, 1), (0, 0)]));

        let f = Form01::new(vec![ExactDensity::zero(2, 0), mono(&[(0, 0), (1, 0)])]).unwrap();
        let u = canonical_solution_product(&f, &s).unwrap().u;
        let expected = mono(&[(0, 0), (1, 1)]).sub(&mono(&[(0, 0), (0, 0)]).scale(&gauss(1, 0, 2))).unwrap();
        assert_eq!(u, expected);
    }

    #[test]
    fn projection_examples() {
        let s = bidisc();
        let p = bergman_projection_product(&mono(&[(1, 1), (1, 1)]), &s).unwrap();
        assert_eq!(p, mono(&[(0, 0), (0, 0)]).scale(&gauss(1, 0, 4)));
        let h = mono(&[(3, 0), (2, 0)]);
        assert_eq!(bergman_projection_product(&h, &s).unwrap(), h);
        assert!(bergman_projection_product(&mono(&[(0, 1), (0, 0)]), &s).unwrap().is_zero());
    }

    #[test]
    fn residual_examples() {
        let f = Form01::new(vec![mono(&[(0, 0), (0, 0)]), ExactDensity::zero(2, 0)]).unwrap();
        assert_eq!(dbar_residual(&ExactDensity::zero(2, 0), &f).unwrap(), 1.0);
        let one = mono(&[(0, 0), (0, 0)]);
        let r = orthogonality_residual(&one, 2).unwrap();
        assert!((r - std::f64::consts::PI).abs() < 1e-14);
    }
}
