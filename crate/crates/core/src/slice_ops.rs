//! The one-variable operators `G`, `T = ∂G`, `T̃` and `P` on a slice.
//!
//! Densities take the exact path: closed-form images of `z^m z̄^n` on the
//! unit disc, applied coefficient by coefficient. Grid functions take the
//! numeric path through [`PolarGrid`] mode operators, transplanted to
//! conformal slices by the change of variables `z = φ(ζ)`:
//!
//! ```text
//! G_D f = G[f |φ'|²]        T_D f = T[f |φ'|²] / φ'
//! P_D f = P[f φ'] / φ'      ∂̄_z = ∂̄_ζ / conj φ'     ∂_z = ∂_ζ / φ'
//! T̃_D f(φ(ζ)) = T̃[f |φ'|² / Q(·, ζ)](ζ),  Q(ω, ζ) = (φ(ω) - φ(ζ))/(ω - ζ)
//! ```
//!
//! Every operator acts on one variable of a multi-variable operand with the
//! others frozen, which is how the product operators are assembled.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::domain::SliceDomain;
use crate::error::{DbarError, Result};
use crate::green;
use crate::grid::{GridFunction, SliceGrid};
use crate::scalar::Scalar;
use crate::spectral::{ModeOperator, PolarGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SliceOperator {
    G,
    T,
    Ttilde,
    P,
}

impl SliceOperator {
    pub fn tag(self) -> &'static str {
        match self {
            SliceOperator::G => "G",
            SliceOperator::T => "T",
            SliceOperator::Ttilde => "T̃",
            SliceOperator::P => "P",
        }
    }
}

/// Route used for the numeric Bergman projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionPath {
    /// `∫ k(z,w) f(w) dν_w`
    #[default]
    Kernel,
    /// `f - ∂G∂̄f`
    Spencer,
}

// ---- exact monomial images on the unit disc --------------------------------

/// `G(z^m z̄^n)` as a list of `(m', n', coefficient)`.
pub fn g_monomial<C: Scalar>(m: u32, n: u32) -> Vec<(u32, u32, C)> {
    let den = (m as i64 + 1) * (n as i64 + 1);
    let lower = if m >= n { (m - n, 0) } else { (0, n - m) };
    vec![(m + 1, n + 1, C::ratio(1, den)), (lower.0, lower.1, C::ratio(-1, den))]
}

pub fn t_monomial<C: Scalar>(m: u32, n: u32) -> Vec<(u32, u32, C)> {
    let mut out = vec![(m, n + 1, C::ratio(1, n as i64 + 1))];
    if m > n {
        let den = (m as i64 + 1) * (n as i64 + 1);
        out.push((m - n - 1, 0, C::ratio(-((m - n) as i64), den)));
    }
    out
}

pub fn ttilde_monomial<C: Scalar>(m: u32, n: u32) -> Vec<(u32, u32, C)> {
    let mut out = vec![(m, n + 1, C::ratio(1, n as i64 + 1))];
    if m > n {
        out.push((m - n - 1, 0, C::ratio(-1, n as i64 + 1)));
    }
    out
}

pub fn p_monomial<C: Scalar>(m: u32, n: u32) -> Vec<(u32, u32, C)> {
    if m >= n {
        vec![(m - n, 0, C::ratio((m - n) as i64 + 1, m as i64 + 1))]
    } else {
        Vec::new()
    }
}

fn exact_image<C: Scalar>(op: SliceOperator, m: u32, n: u32) -> Vec<(u32, u32, C)> {
    match op {
        SliceOperator::G => g_monomial(m, n),
        SliceOperator::T => t_monomial(m, n),
        SliceOperator::Ttilde => ttilde_monomial(m, n),
        SliceOperator::P => p_monomial(m, n),
    }
}

// ---- numeric fiber operators ----------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FiberOp {
    Slice(SliceOperator, ProjectionPath),
    Dz,
    Dzbar,
}

fn fiber_apply(sg: &SliceGrid, op: FiberOp, f: &[Complex64]) -> Vec<Complex64> {
    let polar = sg.polar();
    let d = sg.dphi();
    let Some(map) = sg.domain().map() else {
        return match op {
            FiberOp::Slice(SliceOperator::G, _) => polar.apply(ModeOperator::Dirichlet, f),
            FiberOp::Slice(SliceOperator::T, _) => polar.apply(ModeOperator::Canonical, f),
            FiberOp::Slice(SliceOperator::Ttilde, _) => polar.apply(ModeOperator::Cauchy, f),
            FiberOp::Slice(SliceOperator::P, ProjectionPath::Kernel) => polar.apply(ModeOperator::Bergman, f),
            FiberOp::Slice(SliceOperator::P, ProjectionPath::Spencer) => spencer_fiber(sg, f),
            FiberOp::Dz => polar.apply(ModeOperator::Dz, f),
            FiberOp::Dzbar => polar.apply(ModeOperator::Dzbar, f),
        };
    };
    let times = |g: &dyn Fn(usize) -> Complex64| -> Vec<Complex64> { f.iter().enumerate().map(|(i, v)| v * g(i)).collect() };
    let over = |v: Vec<Complex64>, g: &dyn Fn(usize) -> Complex64| -> Vec<Complex64> {
        v.into_iter().enumerate().map(|(i, x)| x / g(i)).collect()
    };
    let jac = |i: usize| Complex64::new(d[i].norm_sqr(), 0.0);
    match op {
        FiberOp::Slice(SliceOperator::G, _) => polar.apply(ModeOperator::Dirichlet, &times(&jac)),
        FiberOp::Slice(SliceOperator::T, _) => over(polar.apply(ModeOperator::Canonical, &times(&jac)), &|i| d[i]),
        FiberOp::Slice(SliceOperator::P, ProjectionPath::Kernel) => {
            over(polar.apply(ModeOperator::Bergman, &times(&|i| d[i])), &|i| d[i])
        }
        FiberOp::Slice(SliceOperator::P, ProjectionPath::Spencer) => spencer_fiber(sg, f),
        FiberOp::Dz => over(polar.apply(ModeOperator::Dz, f), &|i| d[i]),
        FiberOp::Dzbar => over(polar.apply(ModeOperator::Dzbar, f), &|i| d[i].conj()),
        FiberOp::Slice(SliceOperator::Ttilde, _) => {
            let weighted = times(&jac);
            (0..polar.len())
                .into_par_iter()
                .map(|t| {
                    let zt = polar.node(t);
                    let h: Vec<Complex64> = (0..polar.len())
                        .map(|i| weighted[i] / map.divided_difference(polar.node(i), zt))
                        .collect();
                    polar.cauchy_at_node(&h, t)
                })
                .collect()
        }
    }
}

fn spencer_fiber(sg: &SliceGrid, f: &[Complex64]) -> Vec<Complex64> {
    let dbar = fiber_apply(sg, FiberOp::Dzbar, f);
    let g = fiber_apply(sg, FiberOp::Slice(SliceOperator::G, ProjectionPath::Kernel), &dbar);
    let dg = fiber_apply(sg, FiberOp::Dz, &g);
    f.iter().zip(dg).map(|(a, b)| a - b).collect()
}

// ---- operands ---------------------------------------------------------------

/// Something the slice operators can act on: an exact or float density, or
/// samples on a product grid.
pub trait Operand: Sized + Clone + Send + Sync {
    fn nvars(&self) -> usize;
    /// True when arithmetic on this operand is exact.
    fn is_exact(&self) -> bool;
    /// True for grid samples, whose derivatives are limited by resolution.
    fn is_sampled(&self) -> bool {
        false
    }
    /// Applies a slice operator to variable `axis`, which lives on `slice`.
    fn slice_apply(&self, op: SliceOperator, path: ProjectionPath, slice: &SliceDomain, axis: usize) -> Result<Self>;
    fn dz(&self, axis: usize) -> Result<Self>;
    fn dzbar(&self, axis: usize) -> Result<Self>;
    fn plus(&self, other: &Self) -> Result<Self>;
    fn minus(&self, other: &Self) -> Result<Self>;
    /// Sup norm: largest coefficient modulus for densities, largest sample
    /// modulus for grid functions.
    fn sup(&self) -> Result<f64>;
    /// `|⟨u, z^a⟩| / ‖z^a‖` for a holomorphic monomial `z^a`.
    fn holomorphic_pairing(&self, a: &[u32]) -> Result<f64>;
    /// Max modulus at `samples` equispaced points of the boundary of slice
    /// `axis`, for one-variable operands.
    fn boundary_trace(&self, axis: usize, samples: usize) -> Result<f64>;
}

fn check_axis(axis: usize, nvars: usize) -> Result<()> {
    if axis >= nvars {
        return Err(DbarError::Index(format!("variable {axis} out of range for {nvars} variables")));
    }
    Ok(())
}

fn single_variable(nvars: usize) -> Result<()> {
    if nvars != 1 {
        return Err(DbarError::Shape(format!("boundary trace needs one variable, got {nvars}")));
    }
    Ok(())
}

impl<C: Scalar> Operand for Density<C> {
    fn nvars(&self) -> usize {
        Density::nvars(self)
    }

    fn is_exact(&self) -> bool {
        C::EXACT
    }

    fn slice_apply(&self, op: SliceOperator, _path: ProjectionPath, slice: &SliceDomain, axis: usize) -> Result<Self> {
        if !slice.is_disc() {
            return Err(DbarError::Representation(
                "monomial calculus is only available on disc slices; sample the density onto a grid".into(),
            ));
        }
        check_axis(axis, Density::nvars(self))?;
        Ok(self.map_slice(axis, |m, n| exact_image(op, m, n)))
    }

    fn dz(&self, axis: usize) -> Result<Self> {
        check_axis(axis, Density::nvars(self))?;
        Ok(Density::dz(self, axis))
    }

    fn dzbar(&self, axis: usize) -> Result<Self> {
        check_axis(axis, Density::nvars(self))?;
        Ok(Density::dzbar(self, axis))
    }

    fn plus(&self, other: &Self) -> Result<Self> {
        self.add(other)
    }

    fn minus(&self, other: &Self) -> Result<Self> {
        self.sub(other)
    }

    fn sup(&self) -> Result<f64> {
        self.max_abs_coeff()
    }

    fn holomorphic_pairing(&self, a: &[u32]) -> Result<f64> {
        let exps: Vec<(u32, u32)> = a.iter().map(|&k| (k, 0)).collect();
        let za = Density::monomial(&exps, C::one());
        let pairing = self.inner(&za)?;
        if pairing.is_zero() {
            return Ok(0.0);
        }
        let norm_sq: f64 = PI.powi(a.len() as i32) * a.iter().map(|&k| 1.0 / (k as f64 + 1.0)).product::<f64>();
        Ok(pairing.to_c64()?.norm() / norm_sq.sqrt())
    }

    fn boundary_trace(&self, axis: usize, samples: usize) -> Result<f64> {
        single_variable(Density::nvars(self))?;
        check_axis(axis, 1)?;
        let mut worst: f64 = 0.0;
        for j in 0..samples {
            let b = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / samples as f64);
            worst = worst.max(self.eval(&[b])?.norm());
        }
        Ok(worst)
    }
}

impl GridFunction {
    fn fiber_op(&self, op: FiberOp, axis: usize) -> Result<Self> {
        check_axis(axis, self.grid().nslices())?;
        let sg = self.grid().slice(axis).clone();
        Ok(self.map_fibers(axis, |fiber| fiber_apply(&sg, op, fiber)))
    }
}

impl Operand for GridFunction {
    fn nvars(&self) -> usize {
        self.grid().nslices()
    }

    fn is_exact(&self) -> bool {
        false
    }

    fn is_sampled(&self) -> bool {
        true
    }

    fn slice_apply(&self, op: SliceOperator, path: ProjectionPath, slice: &SliceDomain, axis: usize) -> Result<Self> {
        check_axis(axis, self.grid().nslices())?;
        if self.grid().slice(axis).domain().spec() != slice.spec() {
            return Err(DbarError::Shape(format!("grid slice {axis} is not the requested slice")));
        }
        self.fiber_op(FiberOp::Slice(op, path), axis)
    }

    fn dz(&self, axis: usize) -> Result<Self> {
        self.fiber_op(FiberOp::Dz, axis)
    }

    fn dzbar(&self, axis: usize) -> Result<Self> {
        self.fiber_op(FiberOp::Dzbar, axis)
    }

    fn plus(&self, other: &Self) -> Result<Self> {
        self.add(other)
    }

    fn minus(&self, other: &Self) -> Result<Self> {
        self.sub(other)
    }

    fn sup(&self) -> Result<f64> {
        Ok(self.max_abs())
    }

    fn holomorphic_pairing(&self, a: &[u32]) -> Result<f64> {
        if a.len() != self.grid().nslices() {
            return Err(DbarError::Shape("multi-index length does not match the grid".into()));
        }
        // Both the pairing and the norm of z^a factor over the slices.
        let grid = self.grid();
        let mut norm_sq = 1.0;
        let mut factors = Vec::with_capacity(a.len());
        for (j, &k) in a.iter().enumerate() {
            let sg = grid.slice(j);
            let v: Vec<Complex64> = sg.points().iter().zip(sg.weights()).map(|(z, w)| z.conj().powu(k) * w).collect();
            norm_sq *= sg.points().iter().zip(sg.weights()).map(|(z, w)| z.norm().powi(2 * k as i32) * w).sum::<f64>();
            factors.push(v);
        }
        let mut vals = self.values().to_vec();
        for v in factors.iter().rev() {
            let n = v.len();
            vals = vals.chunks(n).map(|c| c.iter().zip(v).map(|(x, y)| x * y).sum()).collect();
        }
        Ok(vals[0].norm() / norm_sq.sqrt())
    }

    fn boundary_trace(&self, axis: usize, samples: usize) -> Result<f64> {
        single_variable(self.grid().nslices())?;
        check_axis(axis, 1)?;
        let mut worst: f64 = 0.0;
        for j in 0..samples {
            let b = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / samples as f64);
            worst = worst.max(self.interpolate(&[b])?.norm());
        }
        Ok(worst)
    }
}

// ---- public operators -------------------------------------------------------

/// `Gf = -4∫ g(·,w) f(w) dν_w`, the solution of `Δu = 4f` vanishing on the
/// boundary.
#[allow(non_snake_case)]
pub fn dirichlet_G<F: Operand>(f: &F, slice: &SliceDomain, axis: usize) -> Result<F> {
    f.slice_apply(SliceOperator::G, ProjectionPath::Kernel, slice, axis)
}

/// `Tf = ∂Gf`, the canonical solution of `∂̄u = f` on the slice.
#[allow(non_snake_case)]
pub fn canonical_T<F: Operand>(f: &F, slice: &SliceDomain, axis: usize) -> Result<F> {
    f.slice_apply(SliceOperator::T, ProjectionPath::Kernel, slice, axis)
}

/// Solid Cauchy transform `T̃f = -(1/π)∫ f(w)/(w - ·) dν_w`.
#[allow(non_snake_case)]
pub fn cauchy_Ttilde<F: Operand>(f: &F, slice: &SliceDomain, axis: usize) -> Result<F> {
    f.slice_apply(SliceOperator::Ttilde, ProjectionPath::Kernel, slice, axis)
}

/// Bergman projection by the reproducing kernel.
#[allow(non_snake_case)]
pub fn bergman_P<F: Operand>(f: &F, slice: &SliceDomain, axis: usize) -> Result<F> {
    f.slice_apply(SliceOperator::P, ProjectionPath::Kernel, slice, axis)
}

/// Bergman projection through `Pf = f - ∂G∂̄f`.
#[allow(non_snake_case)]
pub fn bergman_P_spencer<F: Operand>(f: &F, slice: &SliceDomain, axis: usize) -> Result<F> {
    f.slice_apply(SliceOperator::P, ProjectionPath::Spencer, slice, axis)
}

/// `sup |Pf + ∂G∂̄f - f|`, with `P` taken by the kernel route.
pub fn spencer_residual<F: Operand>(f: &F, slice: &SliceDomain, axis: usize) -> Result<f64> {
    let pf = bergman_P(f, slice, axis)?;
    let dgd = dirichlet_G(&f.dzbar(axis)?, slice, axis)?.dz(axis)?;
    pf.plus(&dgd)?.minus(f)?.sup()
}

/// Residual diagnostics for one operator application.
#[derive(Debug, Clone)]
pub struct SliceOperatorReport<F> {
    pub operator: SliceOperator,
    pub input: F,
    pub output: F,
    pub residuals: BTreeMap<String, f64>,
}

/// Boundary samples used for the Dirichlet trace check.
pub const BOUNDARY_SAMPLES: usize = 256;

/// Applies `op` to a one-variable operand and collects the defining
/// residuals of the result:
///
/// - `G`: `laplacian` (`sup |4∂∂̄Gf - 4f|`) and `boundary` (trace of `Gf`)
/// - `T`: `dbar` and `orthogonality` (pairings with `z^k`, `k ≤ 2·maxdeg`)
/// - `T̃`: `dbar` and `canonical_gap` (`sup |(I - P)T̃f - Tf|`)
/// - `P`: `holomorphic` (`sup |∂̄Pf|`), `idempotence` and `spencer_gap`
pub fn slice_report<F: Operand>(op: SliceOperator, f: &F, slice: &SliceDomain, maxdeg: u32) -> Result<SliceOperatorReport<F>> {
    single_variable(f.nvars())?;
    let out = f.slice_apply(op, ProjectionPath::Kernel, slice, 0)?;
    let mut residuals = BTreeMap::new();
    match op {
        SliceOperator::G => {
            let lap = out.dzbar(0)?.dz(0)?;
            let four = |u: &F| u.plus(u).and_then(|v| v.plus(&v));
            residuals.insert("laplacian".into(), four(&lap)?.minus(&four(f)?)?.sup()?);
            residuals.insert("boundary".into(), out.boundary_trace(0, BOUNDARY_SAMPLES)?);
        }
        SliceOperator::T => {
            residuals.insert("dbar".into(), out.dzbar(0)?.minus(f)?.sup()?);
            let mut worst: f64 = 0.0;
            for k in 0..=2 * maxdeg {
                worst = worst.max(out.holomorphic_pairing(&[k])?);
            }
            residuals.insert("orthogonality".into(), worst);
        }
        SliceOperator::Ttilde => {
            residuals.insert("dbar".into(), out.dzbar(0)?.minus(f)?.sup()?);
            let reduced = out.minus(&bergman_P(&out, slice, 0)?)?;
            residuals.insert("canonical_gap".into(), reduced.minus(&canonical_T(f, slice, 0)?)?.sup()?);
        }
        SliceOperator::P => {
            residuals.insert("holomorphic".into(), out.dzbar(0)?.sup()?);
            residuals.insert("idempotence".into(), bergman_P(&out, slice, 0)?.minus(&out)?.sup()?);
            residuals.insert("spencer_gap".into(), bergman_P_spencer(f, slice, 0)?.minus(&out)?.sup()?);
        }
    }
    Ok(SliceOperatorReport {
        operator: op,
        input: f.clone(),
        output: out,
        residuals,
    })
}

// ---- pointwise singularity-subtracted quadrature ------------------------------

/// Direct evaluation of an operator at grid node `target` of a unit-disc
/// polar grid, with the singular part subtracted:
///
/// ```text
/// Gf(z)  = -4∫ g(z,w)(f(w) - f(z)) dν + f(z)(|z|² - 1)
/// T̃f(z) = -(1/π)∫ (f(w) - f(z))/(w - z) dν + f(z) z̄
/// Tf(z)  = (1/π)∫ w̄ f(w)/(1 - z w̄) dν + T̃f(z)
/// Pf(z)  = ∫ k(z,w) f(w) dν
/// ```
///
/// The subtracted integrands are bounded but not smooth at `w = z`, so this
/// converges only algebraically. It serves as an independent check on the
/// mode-space operators.
pub fn subtracted_quadrature(op: SliceOperator, polar: &PolarGrid, values: &[Complex64], target: usize) -> Result<Complex64> {
    if values.len() != polar.len() {
        return Err(DbarError::Shape(format!("{} values for {} nodes", values.len(), polar.len())));
    }
    let z = polar.node(target);
    let fz = values[target];
    let one = Complex64::new(1.0, 0.0);
    let disc = SliceDomain::disc();
    let mut acc = Complex64::new(0.0, 0.0);
    let cauchy = |acc: &mut Complex64| {
        for (i, f) in values.iter().enumerate() {
            if i != target {
                let w = polar.node(i);
                *acc -= (f - fz) / (w - z) * (polar.weight(i) / PI);
            }
        }
        *acc += fz * z.conj();
    };
    match op {
        SliceOperator::G => {
            for (i, f) in values.iter().enumerate() {
                if i != target {
                    let g = green::green(&disc, z, polar.node(i))?;
                    acc -= (f - fz) * (4.0 * g * polar.weight(i));
                }
            }
            acc += fz * (z.norm_sqr() - 1.0);
        }
        SliceOperator::Ttilde => cauchy(&mut acc),
        SliceOperator::T => {
            for (i, f) in values.iter().enumerate() {
                let w = polar.node(i);
                acc += w.conj() * f / (one - z * w.conj()) * (polar.weight(i) / PI);
            }
            cauchy(&mut acc);
        }
        SliceOperator::P => {
            for (i, f) in values.iter().enumerate() {
                acc += green::bergman_kernel(&disc, z, polar.node(i))? * f * polar.weight(i);
            }
        }
    }
    Ok(acc)
}
