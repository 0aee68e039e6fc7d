//! `W^{k,p}` norms and norm-ratio sweeps.
//!
//! Convention: `‖u‖_{k,p} = (Σ_{|γ|≤k} ‖D^γ u‖_p^p)^{1/p}` where `γ` runs
//! over the distinct multi-indices of Wirtinger derivatives `∂_{z_j}`,
//! `∂_{z̄_j}` of total order at most `k`. Wirtinger derivatives commute, so
//! each multi-index is counted once.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::domain::{GridSpec, SliceDomain, SobolevIndex};
use crate::error::{DbarError, Result};
use crate::family;
use crate::form::Form01;
use crate::grid::{sample_to_grid, GridFunction, ProductGrid};
use crate::product::canonical_solution_product;
use crate::scalar::Scalar;
use crate::slice_ops::{bergman_P, canonical_T, dirichlet_G, Operand};

/// Highest derivative order taken on grid samples.
pub const MAX_NUMERIC_ORDER: usize = 4;

/// Grid used by exact mode when `|D^γ u|^p` has no closed form (odd or
/// fractional `p` on a density with several terms).
pub const FALLBACK_GRID: GridSpec = GridSpec { nr: 32, ntheta: 64 };

/// Multi-index `γ = (α, β)` of the derivative `∂^α ∂̄^β`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Wirtinger {
    pub dz: Vec<u32>,
    pub dzbar: Vec<u32>,
}

impl Wirtinger {
    pub fn identity(nvars: usize) -> Self {
        Self {
            dz: vec![0; nvars],
            dzbar: vec![0; nvars],
        }
    }

    pub fn order(&self) -> usize {
        self.dz.iter().chain(&self.dzbar).map(|&a| a as usize).sum()
    }

    pub fn nvars(&self) -> usize {
        self.dz.len()
    }

    /// `"id"`, or factors such as `dz1^2·dzb2` (variables numbered from 1).
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        for (name, counts) in [("dz", &self.dz), ("dzb", &self.dzbar)] {
            for (j, &c) in counts.iter().enumerate() {
                match c {
                    0 => {}
                    1 => parts.push(format!("{name}{}", j + 1)),
                    _ => parts.push(format!("{name}{}^{c}", j + 1)),
                }
            }
        }
        if parts.is_empty() {
            "id".into()
        } else {
            parts.join("·")
        }
    }

    /// Every multi-index of total order at most `k`, by order and then
    /// lexicographically.
    pub fn all_up_to(nvars: usize, k: usize) -> Vec<Self> {
        let slots = 2 * nvars;
        let mut out = Vec::new();
        let mut counts = vec![0u32; slots];
        fn rec(pos: usize, left: usize, counts: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if pos == counts.len() {
                out.push(counts.clone());
                return;
            }
            for c in 0..=left {
                counts[pos] = c as u32;
                rec(pos + 1, left - c, counts, out);
            }
            counts[pos] = 0;
        }
        let mut raw = Vec::new();
        rec(0, k, &mut counts, &mut raw);
        for c in raw {
            out.push(Self {
                dz: c[..nvars].to_vec(),
                dzbar: c[nvars..].to_vec(),
            });
        }
        out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.cmp(b)));
        out
    }
}

/// `D^γ u`. Sampled operands are limited to order [`MAX_NUMERIC_ORDER`].
pub fn weak_derivative<F: Operand>(u: &F, gamma: &Wirtinger) -> Result<F> {
    if gamma.nvars() != u.nvars() {
        return Err(DbarError::Shape(format!(
            "multi-index in {} variables for an operand in {}",
            gamma.nvars(),
            u.nvars()
        )));
    }
    if u.is_sampled() && gamma.order() > MAX_NUMERIC_ORDER {
        return Err(DbarError::Resolution {
            order: gamma.order(),
            max: MAX_NUMERIC_ORDER,
        });
    }
    let mut v = u.clone();
    for j in 0..gamma.nvars() {
        for _ in 0..gamma.dz[j] {
            v = v.dz(j)?;
        }
        for _ in 0..gamma.dzbar[j] {
            v = v.dzbar(j)?;
        }
    }
    Ok(v)
}

/// Operands with an `L^p` integral.
pub trait Normed: Operand {
    /// `∫ |u|^p dν`.
    fn lp_pow(&self, p: f64) -> Result<f64>;
    fn mode(&self) -> String;
    fn resolution(&self) -> Option<Vec<GridSpec>>;
}

fn even_integer(p: f64) -> Option<u32> {
    (p.fract() == 0.0 && p >= 2.0 && p % 2.0 == 0.0 && p <= 64.0).then_some(p as u32)
}

impl<C: Scalar> Normed for Density<C> {
    fn lp_pow(&self, p: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        if self.len() == 1 {
            // |c z^m z̄^n|^p = |c|^p r^{(m+n)p} per variable.
            let (mono, c) = self.terms().next().expect("one term");
            let mut v = c.norm_f64()?.powf(p);
            for &(m, n) in mono.exps() {
                v *= 2.0 * PI / (f64::from(m + n) * p + 2.0);
            }
            return Ok(v);
        }
        if let Some(e) = even_integer(p) {
            // |u|^p = |u^{p/2}|².
            let mut w = self.clone();
            for _ in 1..e / 2 {
                w = w.mul(self)?;
            }
            return Ok(w.inner(&w)?.to_c64()?.re);
        }
        let grid = ProductGrid::discs(self.nvars(), FALLBACK_GRID)?;
        Ok(sample_to_grid(self, &grid)?.integrate_abs_pow(p))
    }

    fn mode(&self) -> String {
        C::mode_name().into()
    }

    fn resolution(&self) -> Option<Vec<GridSpec>> {
        None
    }
}

impl Normed for GridFunction {
    fn lp_pow(&self, p: f64) -> Result<f64> {
        Ok(self.integrate_abs_pow(p))
    }

    fn mode(&self) -> String {
        "numeric".into()
    }

    fn resolution(&self) -> Option<Vec<GridSpec>> {
        Some((0..self.grid().nslices()).map(|j| self.grid().slice(j).spec()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormContribution {
    pub derivative: Wirtinger,
    pub label: String,
    /// `‖D^γ u‖_p`.
    pub lp_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub index: SobolevIndex,
    pub contributions: Vec<NormContribution>,
    pub total: f64,
    pub mode: String,
    pub resolution: Option<Vec<GridSpec>>,
}

impl NormReport {
    /// `|total^p - Σ contribution^p| / total^p`.
    pub fn consistency(&self) -> f64 {
        let p = self.index.p();
        let sum: f64 = self.contributions.iter().map(|c| c.lp_norm.powf(p)).sum();
        let tp = self.total.powf(p);
        if tp == 0.0 {
            sum
        } else {
            (tp - sum).abs() / tp
        }
    }
}

pub fn sobolev_norm<F: Normed>(u: &F, idx: SobolevIndex) -> Result<NormReport> {
    let p = idx.p();
    let gammas = Wirtinger::all_up_to(u.nvars(), idx.k());
    let contributions = gammas
        .into_par_iter()
        .map(|gamma| {
            let v = weak_derivative(u, &gamma)?;
            let lp = v.lp_pow(p)?.powf(1.0 / p);
            Ok(NormContribution {
                label: gamma.label(),
                derivative: gamma,
                lp_norm: lp,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let sum: f64 = contributions.iter().map(|c| c.lp_norm.powf(p)).sum();
    Ok(NormReport {
        index: idx,
        contributions,
        total: sum.powf(1.0 / p),
        mode: u.mode(),
        resolution: u.resolution(),
    })
}

/// Norm of a form: `(Σ_j ‖f_j‖_{k,p}^p)^{1/p}`.
pub fn form_sobolev_norm<F: Normed>(f: &Form01<F>, idx: SobolevIndex) -> Result<f64> {
    let p = idx.p();
    let mut sum = 0.0;
    for c in f.components() {
        sum += sobolev_norm(c, idx)?.total.powf(p);
    }
    Ok(sum.powf(1.0 / p))
}

// ---- norm-ratio sweeps ------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOperator {
    /// `‖Tf‖_{k+1,p} / ‖f‖_{k,p}` on the unit disc.
    SliceT,
    /// `‖Tf‖_{k,p} / ‖f‖_{k,p}` for closed forms on the bidisc.
    ProductT,
    /// `‖Gf‖_{k+2,p} / ‖f‖_{k,p}` on the unit disc.
    SliceG,
    /// `‖Pf‖_{k,p} / ‖f‖_{k,p}` on the unit disc.
    SliceP,
}

impl SweepOperator {
    pub const ALL: [SweepOperator; 4] = [
        SweepOperator::SliceT,
        SweepOperator::ProductT,
        SweepOperator::SliceG,
        SweepOperator::SliceP,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepOperator::SliceT => "slice-t",
            SweepOperator::ProductT => "product-t",
            SweepOperator::SliceG => "slice-g",
            SweepOperator::SliceP => "slice-p",
        }
    }

    /// Orders of smoothness the operator is expected to gain.
    pub fn gain(self) -> usize {
        match self {
            SweepOperator::SliceT => 1,
            SweepOperator::ProductT | SweepOperator::SliceP => 0,
            SweepOperator::SliceG => 2,
        }
    }
}

/// Seeded family of random data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub seed: u64,
    pub degrees: Vec<u32>,
    pub members: usize,
    pub terms: usize,
    /// Holomorphic slice data (only meaningful for slice operators).
    pub holomorphic: bool,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            seed: family::DEFAULT_SEED,
            degrees: (1..=8).collect(),
            members: 8,
            terms: family::DEFAULT_TERMS,
            holomorphic: false,
        }
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub degree: u32,
    pub k: usize,
    pub p: f64,
    pub ratio_max: f64,
    pub ratio_mean: f64,
    pub seed: u64,
}

fn degree_rng(seed: u64, degree: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(degree));
    rng
}

fn member_ratio(op: SweepOperator, family: &FamilySpec, rng: &mut ChaCha8Rng, degree: u32, indices: &[SobolevIndex]) -> Result<Vec<f64>> {
    let disc = SliceDomain::disc();
    let target_index = |idx: &SobolevIndex| SobolevIndex::new(idx.k() + op.gain(), idx.p());
    match op {
        SweepOperator::ProductT => {
            let slices = [SliceDomain::disc(), SliceDomain::disc()];
            let (_, f) = family::random_closed_form(rng, 2, degree, family.terms)?;
            let u = canonical_solution_product(&f, &slices)?.u;
            indices
                .iter()
                .map(|idx| Ok(sobolev_norm(&u, target_index(idx)?)?.total / form_sobolev_norm(&f, *idx)?))
                .collect()
        }
        _ => {
            let f = if family.holomorphic {
                family::random_holomorphic(rng, 1, degree, family.terms)?
            } else {
                family::random_density(rng, 1, degree, family.terms)?
            };
            let out = match op {
                SweepOperator::SliceT => canonical_T(&f, &disc, 0)?,
                SweepOperator::SliceG => dirichlet_G(&f, &disc, 0)?,
                _ => bergman_P(&f, &disc, 0)?,
            };
            indices
                .iter()
                .map(|idx| Ok(sobolev_norm(&out, target_index(idx)?)?.total / sobolev_norm(&f, *idx)?.total))
                .collect()
        }
    }
}

/// Ratios of output to input norms over the seeded family, aggregated per
/// degree and index. Members of each degree are drawn from their own seeded
/// stream, so rows do not depend on which other degrees are swept.
pub fn norm_ratio_sweep(op: SweepOperator, family: &FamilySpec, indices: &[SobolevIndex]) -> Result<Vec<SweepRow>> {
    let per_degree = family
        .degrees
        .par_iter()
        .map(|&degree| {
            let mut rng = degree_rng(family.seed, degree);
            let mut ratios = vec![Vec::with_capacity(family.members); indices.len()];
            for _ in 0..family.members {
                let r = member_ratio(op, family, &mut rng, degree, indices)?;
                for (slot, v) in ratios.iter_mut().zip(r) {
                    slot.push(v);
                }
            }
            Ok(indices
                .iter()
                .zip(ratios)
                .map(|(idx, rs)| SweepRow {
                    degree,
                    k: idx.k(),
                    p: idx.p(),
                    ratio_max: rs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    ratio_mean: rs.iter().sum::<f64>() / rs.len() as f64,
                    seed: family.seed,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_degree.into_iter().flatten().collect())
}

/// `max ratio at degree 8 / max ratio at degree 4` per index, the growth
/// figure the boundedness probes look at.
pub fn growth_factor(rows: &[SweepRow], k: usize, p: f64, from: u32, to: u32) -> Option<f64> {
    let pick = |d: u32| rows.iter().find(|r| r.degree == d && r.k == k && r.p == p).map(|r| r.ratio_max);
    Some(pick(to)? / pick(from)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ExactDensity;
    use crate::scalar::ExactComplex;
    use approx::assert_relative_eq;
    use num_traits::One;

    fn idx(k: usize, p: f64) -> SobolevIndex {
        SobolevIndex::new(k, p).unwrap()
    }

    #[test]
    fn multi_indices() {
        assert_eq!(Wirtinger::all_up_to(1, 1).len(), 3);
        assert_eq!(Wirtinger::all_up_to(2, 2).len(), 15);
        assert_eq!(Wirtinger::all_up_to(2, 0)[0].label(), "id");
        let g = Wirtinger {
            dz: vec![2, 0],
            dzbar: vec![0, 1],
        };
        assert_eq!(g.label(), "dz1^2·dzb2");
    }

    #[test]
    fn examples() {
        let one = ExactDensity::constant(2, ExactComplex::one());
        for p in [1.5, 2.0, 3.0] {
            assert_relative_eq!(sobolev_norm(&one, idx(0, p)).unwrap().total, PI.powf(2.0 / p), max_relative = 1e-14);
        }
        let z = ExactDensity::monomial(&[(1, 0)], ExactComplex::one());
        assert_relative_eq!(sobolev_norm(&z, idx(0, 2.0)).unwrap().total, (PI / 2.0).sqrt(), max_relative = 1e-14);
        let r = sobolev_norm(&z, idx(1, 2.0)).unwrap();
        assert_relative_eq!(r.total, (PI / 2.0 + PI).sqrt(), max_relative = 1e-14);
        assert!(r.consistency() < 1e-12);
    }

    #[test]
    fn derivative_examples_and_resolution_limit() {
        let u = ExactDensity::monomial(&[(0, 1), (0, 1)], ExactComplex::one());
        let d = weak_derivative(&u, &Wirtinger { dz: vec![0, 0], dzbar: vec![1, 0] }).unwrap();
        assert_eq!(d, ExactDensity::monomial(&[(0, 0), (0, 1)], ExactComplex::one()));
        let grid = ProductGrid::discs(1, GridSpec { nr: 8, ntheta: 16 }).unwrap();
        let g = GridFunction::from_fn(grid, |z| z[0]);
        let deep = Wirtinger { dz: vec![5], dzbar: vec![0] };
        assert!(matches!(weak_derivative(&g, &deep), Err(DbarError::Resolution { order: 5, max: 4 })));
    }

    #[test]
    fn holomorphic_projection_ratio_is_one() {
        let fam = FamilySpec {
            degrees: vec![3],
            members: 3,
            holomorphic: true,
            ..FamilySpec::default()
        };
        let rows = norm_ratio_sweep(SweepOperator::SliceP, &fam, &[idx(0, 2.0), idx(0, 3.0)]).unwrap();
        for r in rows {
            assert_eq!(r.ratio_max, 1.0);
        }
    }
}
