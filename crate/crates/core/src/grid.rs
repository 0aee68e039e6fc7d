//! Tensor grids over product domains and functions sampled on them.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{Density, FloatDensity};
use crate::domain::{GridSpec, SliceDomain, SliceSpec};
use crate::error::{DbarError, Result};
use crate::scalar::Scalar;
use crate::spectral::PolarGrid;

/// Polar grid carried onto one slice through its parametrization.
#[derive(Debug)]
pub struct SliceGrid {
    domain: SliceDomain,
    polar: Arc<PolarGrid>,
    points: Vec<Complex64>,
    dphi: Vec<Complex64>,
    weights: Vec<f64>,
}

impl SliceGrid {
    pub fn new(domain: SliceDomain, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let polar = PolarGrid::shared(spec.nr, spec.ntheta);
        let n = polar.len();
        let mut points = Vec::with_capacity(n);
        let mut dphi = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for idx in 0..n {
            let zeta = polar.node(idx);
            let d = domain.forward_derivative(zeta);
            points.push(domain.forward(zeta));
            dphi.push(d);
            weights.push(polar.weight(idx) * d.norm_sqr());
        }
        Ok(Self {
            domain,
            polar,
            points,
            dphi,
            weights,
        })
    }

    pub fn domain(&self) -> &SliceDomain {
        &self.domain
    }

    pub fn polar(&self) -> &PolarGrid {
        &self.polar
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            nr: self.polar.nr(),
            ntheta: self.polar.ntheta(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Node positions in the slice.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// `φ'` at the disc preimage of each node (identically 1 on the disc).
    pub fn dphi(&self) -> &[Complex64] {
        &self.dphi
    }

    /// Area weights, including the `|φ'|²` Jacobian.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Tensor product of slice grids; flat layout is row-major with slice 0
/// slowest and `ir·ntheta + itheta` inside each slice.
#[derive(Debug)]
pub struct ProductGrid {
    slices: Vec<Arc<SliceGrid>>,
    shape: Vec<usize>,
}

impl ProductGrid {
    pub fn new(slices: Vec<Arc<SliceGrid>>) -> Result<Arc<Self>> {
        if slices.is_empty() {
            return Err(DbarError::Shape("product grid needs at least one slice".into()));
        }
        let shape = slices.iter().map(|s| s.len()).collect();
        Ok(Arc::new(Self { slices, shape }))
    }

    pub fn build(domains: &[SliceDomain], spec: GridSpec) -> Result<Arc<Self>> {
        let slices = domains
            .iter()
            .map(|d| SliceGrid::new(d.clone(), spec).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Self::new(slices)
    }

    /// Unit disc on every slice.
    pub fn discs(n: usize, spec: GridSpec) -> Result<Arc<Self>> {
        Self::build(&vec![SliceDomain::disc(); n], spec)
    }

    pub fn nslices(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, j: usize) -> &Arc<SliceGrid> {
        &self.slices[j]
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.shape.len()];
        for (j, &n) in self.shape.iter().enumerate().rev() {
            idx[j] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<Complex64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.slices)
            .map(|(&i, s)| s.points[i])
            .collect()
    }

    /// Product quadrature weights for every node.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![1.0];
        for s in &self.slices {
            w = w
                .iter()
                .flat_map(|a| s.weights.iter().map(move |b| a * b))
                .collect();
        }
        w
    }

    fn same_as(&self, other: &ProductGrid) -> bool {
        self.shape == other.shape
            && self
                .slices
                .iter()
                .zip(&other.slices)
                .all(|(a, b)| Arc::ptr_eq(a, b) || (a.spec() == b.spec() && a.domain.spec() == b.domain.spec()))
    }
}

/// Samples on a product grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<ProductGrid>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Arc<ProductGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DbarError::Shape(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<ProductGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn from_fn(grid: Arc<ProductGrid>, f: impl Fn(&[Complex64]) -> Complex64 + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<ProductGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(DbarError::Shape("grid functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `⟨u, v⟩ = ∫ u v̄ dν` by the tensor quadrature.
    pub fn inner(&self, other: &GridFunction) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let w = self.grid.weights();
        Ok(ordered_sum(
            self.values
                .iter()
                .zip(&other.values)
                .zip(&w)
                .map(|((a, b), w)| a * b.conj() * w),
        ))
    }

    /// `∫ |u|^p dν` by the tensor quadrature.
    pub fn integrate_abs_pow(&self, p: f64) -> f64 {
        let w = self.grid.weights();
        self.values.iter().zip(&w).map(|(v, w)| v.norm().powf(p) * w).sum()
    }

    /// Applies `f` to every fiber along slice `axis` (other slices frozen).
    pub fn map_fibers(&self, axis: usize, f: impl Fn(&[Complex64]) -> Vec<Complex64> + Sync) -> Self {
        let values = map_axis(&self.values, self.grid.shape(), axis, self.grid.shape()[axis], f);
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Value at an arbitrary point given in disc coordinates of every slice,
    /// through spectral interpolation slice by slice.
    pub fn interpolate(&self, zetas: &[Complex64]) -> Result<Complex64> {
        if zetas.len() != self.grid.nslices() {
            return Err(DbarError::Shape("point dimension does not match the grid".into()));
        }
        let mut vals = self.values.clone();
        let mut shape = self.grid.shape().to_vec();
        // Contract the last slice first so the remaining layout stays row-major.
        for j in (0..zetas.len()).rev() {
            let polar = self.grid.slice(j).polar();
            let n = shape[j];
            vals = vals
                .chunks(n)
                .map(|fiber| polar.interpolate(&polar.to_modes(fiber), zetas[j]))
                .collect();
            shape.pop();
        }
        Ok(vals[0])
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let file = GridFunctionFile {
            header: GridHeader {
                slices: (0..self.grid.nslices()).map(|j| self.grid.slice(j).domain().spec()).collect(),
                grids: (0..self.grid.nslices()).map(|j| self.grid.slice(j).spec()).collect(),
                layout: LAYOUT.to_string(),
            },
            values: self.values.iter().map(|v| [v.re, v.im]).collect(),
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let file: GridFunctionFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if file.header.slices.len() != file.header.grids.len() {
            return Err(DbarError::Shape("header lists different numbers of slices and grids".into()));
        }
        let slices = file
            .header
            .slices
            .iter()
            .zip(&file.header.grids)
            .map(|(s, g)| SliceGrid::new(s.build()?, *g).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let grid = ProductGrid::new(slices)?;
        Self::new(grid, file.values.iter().map(|v| Complex64::new(v[0], v[1])).collect())
    }
}

const LAYOUT: &str = "row-major, slice 0 slowest; within a slice index = ir*ntheta + itheta";

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    slices: Vec<SliceSpec>,
    grids: Vec<GridSpec>,
    layout: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridFunctionFile {
    header: GridHeader,
    values: Vec<[f64; 2]>,
}

/// Sum in a fixed order independent of thread scheduling.
fn ordered_sum(it: impl Iterator<Item = Complex64>) -> Complex64 {
    it.fold(Complex64::new(0.0, 0.0), |a, b| a + b)
}

/// Maps every fiber along `axis` of a row-major array to a fiber of length
/// `out_len`, returning the reshaped array.
pub(crate) fn map_axis(
    values: &[Complex64],
    shape: &[usize],
    axis: usize,
    out_len: usize,
    f: impl Fn(&[Complex64]) -> Vec<Complex64> + Sync,
) -> Vec<Complex64> {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fibers = outer * stride;
    let results: Vec<Vec<Complex64>> = (0..fibers)
        .into_par_iter()
        .map(|fib| {
            let (o, inner) = (fib / stride, fib % stride);
            let base = o * n * stride + inner;
            let fiber: Vec<Complex64> = (0..n).map(|t| values[base + t * stride]).collect();
            let out = f(&fiber);
            debug_assert_eq!(out.len(), out_len);
            out
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * out_len * stride];
    for (fib, res) in results.into_iter().enumerate() {
        let (o, inner) = (fib / stride, fib % stride);
        let base = o * out_len * stride + inner;
        for (t, v) in res.into_iter().enumerate() {
            out[base + t * stride] = v;
        }
    }
    out
}

/// Samples a density at every node; conformal slices are evaluated at the
/// image points `φ(ζ)`.
pub fn sample_to_grid<C: Scalar>(d: &Density<C>, grid: &Arc<ProductGrid>) -> Result<GridFunction> {
    if d.nvars() != grid.nslices() {
        return Err(DbarError::Shape(format!(
            "density in {} variables sampled on a {}-slice grid",
            d.nvars(),
            grid.nslices()
        )));
    }
    let terms: Vec<(Vec<(u32, u32)>, Complex64)> = d
        .terms()
        .map(|(m, c)| Ok((m.exps().to_vec(), c.to_c64()?)))
        .collect::<Result<_>>()?;
    let values = sample_terms(&terms, &grid.slices);
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(DbarError::ArithmeticOverflow("sampled density is not finite".into()));
    }
    GridFunction::new(grid.clone(), values)
}

fn sample_terms(terms: &[(Vec<(u32, u32)>, Complex64)], slices: &[Arc<SliceGrid>]) -> Vec<Complex64> {
    let first = &slices[0];
    let rest_len: usize = slices[1..].iter().map(|s| s.len()).product();
    let mut groups: BTreeMap<(u32, u32), Vec<(Vec<(u32, u32)>, Complex64)>> = BTreeMap::new();
    for (exps, c) in terms {
        groups
            .entry(exps[0])
            .or_default()
            .push((exps[1..].to_vec(), *c));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); first.len() * rest_len];
    for ((m, n), group) in groups {
        let sub: Vec<Complex64> = if slices.len() == 1 {
            vec![group.iter().map(|(_, c)| c).sum()]
        } else {
            sample_terms(&group, &slices[1..])
        };
        out.par_chunks_mut(rest_len)
            .zip(first.points.par_iter())
            .for_each(|(chunk, z)| {
                let factor = z.powu(m) * z.conj().powu(n);
                for (o, s) in chunk.iter_mut().zip(&sub) {
                    *o += factor * s;
                }
            });
    }
    out
}

/// Weighted least-squares fit of a degree-`max_degree` density to grid
/// data on unit-disc slices (projection onto Zernike radial polynomials per
/// angular mode, then conversion to monomials).
pub fn refit_density(f: &GridFunction, max_degree: u32) -> Result<FloatDensity> {
    let grid = f.grid();
    for j in 0..grid.nslices() {
        if !grid.slice(j).domain().is_disc() {
            return Err(DbarError::Representation(
                "least-squares refit is only defined on unit-disc slices".into(),
            ));
        }
    }
    let m1 = (max_degree + 1) as usize;
    let mut shape = grid.shape().to_vec();
    let mut vals = f.values().to_vec();
    for j in 0..grid.nslices() {
        let polar = grid.slice(j).polar();
        vals = map_axis(&vals, &shape, j, m1 * m1, |fiber| refit_fiber(polar, fiber, max_degree));
        shape[j] = m1 * m1;
    }
    let nvars = grid.nslices();
    let mut d = FloatDensity::zero(nvars, max_degree);
    for (flat, c) in vals.iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut rem = flat;
        let mut exps = vec![(0u32, 0u32); nvars];
        for j in (0..nvars).rev() {
            let e = rem % (m1 * m1);
            rem /= m1 * m1;
            exps[j] = ((e / m1) as u32, (e % m1) as u32);
        }
        d.insert(&exps, *c)?;
    }
    Ok(d)
}

fn refit_fiber(polar: &PolarGrid, fiber: &[Complex64], max_degree: u32) -> Vec<Complex64> {
    let m1 = (max_degree + 1) as usize;
    let mut out = vec![Complex64::new(0.0, 0.0); m1 * m1];
    let modes = polar.to_modes(fiber);
    let (nr, nt) = (polar.nr(), polar.ntheta());
    let radii = polar.radii();
    let rw = polar.radial_weights();
    let md = max_degree as i64;
    for k in -md..=md {
        let slot = k.rem_euclid(nt as i64) as usize;
        if polar.wavenumber(slot) != k {
            continue;
        }
        let ak = k.unsigned_abs() as usize;
        let lmax = (md - k.abs()) as usize;
        // Zernike coefficients b_l for radial orders |k| + 2l.
        let b: Vec<Complex64> = (0..=lmax)
            .map(|l| {
                let order = ak + 2 * l;
                let s: Complex64 = (0..nr)
                    .map(|i| modes[i * nt + slot] * (rw[i] * radii[i] * zernike_radial(order, ak, radii[i])))
                    .sum();
                s * (2.0 * (order as f64 + 1.0))
            })
            .collect();
        // Monomial coefficient of r^{|k| + 2l'}.
        for lp in 0..=lmax {
            let mut c = Complex64::new(0.0, 0.0);
            for (l, bl) in b.iter().enumerate().skip(lp) {
                c += bl * zernike_coeff(ak + 2 * l, ak, l - lp);
            }
            let (m, n) = if k >= 0 { (ak + lp, lp) } else { (lp, ak + lp) };
            out[m * m1 + n] = c;
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Coefficient of `r^{n-2s}` in the Zernike radial polynomial `R_n^m`.
fn zernike_coeff(n: usize, m: usize, s: usize) -> f64 {
    let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
    sign * factorial(n - s) / (factorial(s) * factorial((n + m) / 2 - s) * factorial((n - m) / 2 - s))
}

fn zernike_radial(n: usize, m: usize, r: f64) -> f64 {
    (0..=(n - m) / 2).map(|s| zernike_coeff(n, m, s) * r.powi((n - 2 * s) as i32)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ExactDensity;
    use crate::scalar::{gauss, ExactComplex};
    use num_traits::One;
    use std::f64::consts::PI;

    fn disc_grid(nr: usize, nt: usize) -> Arc<ProductGrid> {
        ProductGrid::discs(1, GridSpec { nr, ntheta: nt }).unwrap()
    }

    #[test]
    fn sampling_matches_direct_evaluation() {
        let g = disc_grid(8, 16);
        let one = ExactDensity::constant(1, ExactComplex::one());
        assert!(sample_to_grid(&one, &g).unwrap().values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let z = ExactDensity::monomial(&[(1, 0)], ExactComplex::one());
        let s = sample_to_grid(&z, &g).unwrap();
        for (i, v) in s.values().iter().enumerate() {
            assert!((v - g.point(i)[0]).norm() < 1e-15);
        }
        let zz = ExactDensity::monomial(&[(1, 1)], ExactComplex::one());
        let s = sample_to_grid(&zz, &g).unwrap();
        for (i, v) in s.values().iter().enumerate() {
            let r = g.point(i)[0].norm();
            assert!((v.re - r * r).abs() < 1e-15 && v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn bidisc_weights_and_shape() {
        let g = ProductGrid::discs(2, GridSpec { nr: 6, ntheta: 8 }).unwrap();
        assert_eq!(g.len(), 48 * 48);
        let total: f64 = g.weights().iter().sum();
        assert!((total - PI * PI).abs() < 1e-12 * PI * PI);
    }

    #[test]
    fn quadrature_inner_product_of_z_with_itself() {
        let g = disc_grid(64, 256);
        let z = sample_to_grid(&ExactDensity::monomial(&[(1, 0)], ExactComplex::one()), &g).unwrap();
        assert!((z.inner(&z).unwrap() - Complex64::new(PI / 2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn mismatched_grids_are_a_shape_error() {
        let a = GridFunction::zeros(disc_grid(8, 16));
        let b = GridFunction::zeros(disc_grid(8, 32));
        assert!(matches!(a.inner(&b), Err(DbarError::Shape(_))));
        assert!(GridFunction::new(disc_grid(8, 16), vec![Complex64::new(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn refit_recovers_coefficients() {
        let g = ProductGrid::discs(2, GridSpec { nr: 8, ntheta: 12 }).unwrap();
        let d = ExactDensity::from_terms(
            2,
            3,
            vec![
                (vec![(3, 1), (0, 2)], gauss(1, 2, 3)),
                (vec![(0, 0), (1, 1)], gauss(-5, 0, 7)),
                (vec![(2, 3), (3, 0)], gauss(0, 1, 1)),
            ],
        )
        .unwrap();
        let fit = refit_density(&sample_to_grid(&d, &g).unwrap(), 3).unwrap();
        let diff = fit.sub(&d.to_float().unwrap()).unwrap();
        assert!(diff.max_abs_coeff().unwrap() < 1e-10);
    }

    #[test]
    fn file_roundtrip() {
        let g = disc_grid(4, 8);
        let f = GridFunction::from_fn(g, |z| z[0] * 2.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.json");
        f.to_file(&path).unwrap();
        let back = GridFunction::from_file(&path).unwrap();
        assert_eq!(back.values(), f.values());
    }
}
