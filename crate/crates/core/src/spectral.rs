//! Polar tensor grids on the unit disc and the one-variable operators in
//! angular Fourier-mode space.
//!
//! A function sampled at `(r_i, θ_j)` is split into angular modes
//! `a_k(r_i) e^{ikθ}` by FFT. Rotation equivariance reduces each disc
//! operator to a one-dimensional radial integral operator per mode. Its
//! kernel is bounded but has a kink at `s = r`, so the radial integrals are
//! done by product integration: the mode profile is replaced by its
//! interpolant through the Gauss–Legendre nodes and the kernel times each
//! Lagrange basis polynomial is integrated on `[0, r]` and `[r, 1]`
//! separately. The result is exact for polynomial densities.
//!
//! Radial kernels, with `m = |k|`, target mode in parentheses:
//!
//! ```text
//! G, k = 0  (0):    4 ln(max(r,s)) s
//! G, m ≥ 1  (k):   -(2/m) [ (min/max)^m - (r s)^m ] s
//! T, k ≥ 1  (k-1):  2 (r s)^{k-1} s² - 2·[s>r] (r/s)^{k-1}
//! T, k ≤ 0  (k-1):  2·[s<r] (s/r)^{1-k}
//! T̃, k ≥ 1 (k-1): -2·[s>r] (r/s)^{k-1}
//! T̃, k ≤ 0 (k-1):  same as T
//! P, k ≥ 0  (k):    2(k+1) r^k s^{k+1}     (separable, no split needed)
//! ```

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::quadrature::{Barycentric, GaussLegendre};

/// Gauss–Legendre radii on `(0, 1)` crossed with equispaced angles.
pub struct PolarGrid {
    nr: usize,
    ntheta: usize,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    bary: Barycentric,
    diff: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
    kernels: OnceLock<Kernels>,
}

impl std::fmt::Debug for PolarGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PolarGrid")
            .field("nr", &self.nr)
            .field("ntheta", &self.ntheta)
            .finish()
    }
}

/// Radial matrices, each row-major `nr × nr`, indexed by FFT mode slot.
struct Kernels {
    g: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    ttilde: Vec<Vec<f64>>,
}

static GRID_CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<PolarGrid>>>> = OnceLock::new();

/// One-variable disc operator acting on polar grid data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeOperator {
    Dirichlet,
    Canonical,
    Cauchy,
    Bergman,
    Dz,
    Dzbar,
}

impl PolarGrid {
    /// Shared grid for the given resolution; kernels are built once per grid.
    pub fn shared(nr: usize, ntheta: usize) -> Arc<PolarGrid> {
        let cache = GRID_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("grid cache poisoned");
        guard
            .entry((nr, ntheta))
            .or_insert_with(|| Arc::new(PolarGrid::new(nr, ntheta)))
            .clone()
    }

    fn new(nr: usize, ntheta: usize) -> Self {
        let reference = GaussLegendre::new(nr);
        let gl = reference.mapped(0.0, 1.0);
        let bary = Barycentric::for_gauss_legendre(&reference, &gl.nodes);
        let diff = bary.differentiation_matrix();
        let mut planner = FftPlanner::new();
        Self {
            nr,
            ntheta,
            radii: gl.nodes,
            radial_weights: gl.weights,
            bary,
            diff,
            fft_forward: planner.plan_fft_forward(ntheta),
            fft_inverse: planner.plan_fft_inverse(ntheta),
            kernels: OnceLock::new(),
        }
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn ntheta(&self) -> usize {
        self.ntheta
    }

    pub fn len(&self) -> usize {
        self.nr * self.ntheta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.ntheta as f64
    }

    /// Disc node `r_i e^{iθ_j}` for flat index `i·ntheta + j`.
    pub fn node(&self, idx: usize) -> Complex64 {
        let (i, j) = (idx / self.ntheta, idx % self.ntheta);
        Complex64::from_polar(self.radii[i], self.angle(j))
    }

    /// Area weight of a node: radial weight × r × 2π/nθ.
    pub fn weight(&self, idx: usize) -> f64 {
        let i = idx / self.ntheta;
        self.radial_weights[i] * self.radii[i] * 2.0 * PI / self.ntheta as f64
    }

    /// Angular wavenumber held in FFT slot `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.ntheta as i64;
        let idx = idx as i64;
        if idx < n / 2 || (n % 2 == 1 && idx == n / 2) {
            idx
        } else {
            idx - n
        }
    }

    fn slot(&self, k: i64) -> Option<usize> {
        let n = self.ntheta as i64;
        let lo = -(n / 2);
        let hi = (n - 1) / 2;
        if k < lo || k > hi {
            None
        } else {
            Some(k.rem_euclid(n) as usize)
        }
    }

    /// Mode profiles `a_k(r_i)`, layout `[i][slot]`.
    pub fn to_modes(&self, values: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.len());
        let mut out = values.to_vec();
        let scale = 1.0 / self.ntheta as f64;
        for ring in out.chunks_mut(self.ntheta) {
            self.fft_forward.process(ring);
            for v in ring.iter_mut() {
                *v *= scale;
            }
        }
        out
    }

    pub fn from_modes(&self, modes: &[Complex64]) -> Vec<Complex64> {
        let mut out = modes.to_vec();
        for ring in out.chunks_mut(self.ntheta) {
            self.fft_inverse.process(ring);
        }
        out
    }

    /// Evaluates grid data at an arbitrary disc point (`|ζ| ≤ 1`) through
    /// the Fourier series in angle and the radial interpolant.
    pub fn interpolate(&self, modes: &[Complex64], zeta: Complex64) -> Complex64 {
        let (r, theta) = (zeta.norm(), zeta.arg());
        let basis = self.bary.basis_at(r);
        let mut acc = Complex64::new(0.0, 0.0);
        for slot in 0..self.ntheta {
            let k = self.wavenumber(slot);
            let mut a = Complex64::new(0.0, 0.0);
            for (i, b) in basis.iter().enumerate() {
                a += modes[i * self.ntheta + slot] * b;
            }
            acc += a * Complex64::from_polar(1.0, k as f64 * theta);
        }
        acc
    }

    fn kernels(&self) -> &Kernels {
        self.kernels.get_or_init(|| self.build_kernels())
    }

    fn build_kernels(&self) -> Kernels {
        let nr = self.nr;
        let nq = 2 * nr + 8;
        let reference = GaussLegendre::new(nq);
        let slots: Vec<i64> = (0..self.ntheta).map(|s| self.wavenumber(s)).collect();

        // rows[i] = (g rows per slot, t rows per slot, ttilde rows per slot)
        let rows: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> = (0..nr)
            .into_par_iter()
            .map(|i| {
                let r = self.radii[i];
                let lower = reference.mapped(0.0, r);
                // Kernels on [r, 1] carry ln s and (r/s)^e, which vary on the
                // scale r; a geometric subdivision keeps them resolved.
                let mut upper = GaussLegendre { nodes: Vec::new(), weights: Vec::new() };
                let mut a = r;
                while a < 1.0 {
                    let b = (3.0 * a).min(1.0);
                    let piece = reference.mapped(a, b);
                    upper.nodes.extend(piece.nodes);
                    upper.weights.extend(piece.weights);
                    a = b;
                }
                let lower_basis: Vec<Vec<f64>> = lower.nodes.iter().map(|&s| self.bary.basis_at(s)).collect();
                let upper_basis: Vec<Vec<f64>> = upper.nodes.iter().map(|&s| self.bary.basis_at(s)).collect();

                let row = |kernel: &dyn Fn(f64, bool) -> f64| -> Vec<f64> {
                    let mut out = vec![0.0; nr];
                    for (q, (&s, &w)) in lower.nodes.iter().zip(&lower.weights).enumerate() {
                        let kv = w * kernel(s, false);
                        if kv != 0.0 {
                            for (o, b) in out.iter_mut().zip(&lower_basis[q]) {
                                *o += kv * b;
                            }
                        }
                    }
                    for (q, (&s, &w)) in upper.nodes.iter().zip(&upper.weights).enumerate() {
                        let kv = w * kernel(s, true);
                        if kv != 0.0 {
                            for (o, b) in out.iter_mut().zip(&upper_basis[q]) {
                                *o += kv * b;
                            }
                        }
                    }
                    out
                };

                let mut g_rows = Vec::with_capacity(slots.len());
                let mut t_rows = Vec::with_capacity(slots.len());
                let mut tt_rows = Vec::with_capacity(slots.len());
                for &k in &slots {
                    let m = k.unsigned_abs() as i32;
                    g_rows.push(if k == 0 {
                        row(&|s, above| 4.0 * if above { s.ln() } else { r.ln() } * s)
                    } else {
                        let mf = m as f64;
                        row(&|s, above| {
                            let ratio = if above { r / s } else { s / r };
                            -(2.0 / mf) * (ratio.powi(m) - (r * s).powi(m)) * s
                        })
                    });
                    if k >= 1 {
                        let e = (k - 1) as i32;
                        t_rows.push(row(&|s, above| {
                            let smooth = 2.0 * (r * s).powi(e) * s * s;
                            if above {
                                smooth - 2.0 * (r / s).powi(e)
                            } else {
                                smooth
                            }
                        }));
                        tt_rows.push(row(&|s, above| if above { -2.0 * (r / s).powi(e) } else { 0.0 }));
                    } else {
                        let e = (1 - k) as i32;
                        let below = row(&|s, above| if above { 0.0 } else { 2.0 * (s / r).powi(e) });
                        t_rows.push(below.clone());
                        tt_rows.push(below);
                    }
                }
                (g_rows, t_rows, tt_rows)
            })
            .collect();

        let assemble = |pick: &dyn Fn(&(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)) -> &Vec<Vec<f64>>| {
            (0..self.ntheta)
                .map(|slot| {
                    let mut mat = vec![0.0; nr * nr];
                    for (i, r) in rows.iter().enumerate() {
                        mat[i * nr..(i + 1) * nr].copy_from_slice(&pick(r)[slot]);
                    }
                    mat
                })
                .collect::<Vec<_>>()
        };
        Kernels {
            g: assemble(&|r| &r.0),
            t: assemble(&|r| &r.1),
            ttilde: assemble(&|r| &r.2),
        }
    }

    /// Applies a disc operator to grid samples (disc coordinates).
    pub fn apply(&self, op: ModeOperator, values: &[Complex64]) -> Vec<Complex64> {
        let modes = self.to_modes(values);
        let out = self.apply_modes(op, &modes);
        self.from_modes(&out)
    }

    pub fn apply_modes(&self, op: ModeOperator, modes: &[Complex64]) -> Vec<Complex64> {
        let (nr, nt) = (self.nr, self.ntheta);
        let mut out = vec![Complex64::new(0.0, 0.0); nr * nt];
        let profile = |slot: usize| -> Vec<Complex64> { (0..nr).map(|i| modes[i * nt + slot]).collect() };
        for slot in 0..nt {
            let k = self.wavenumber(slot);
            let a = profile(slot);
            if a.iter().all(|v| *v == Complex64::new(0.0, 0.0)) {
                continue;
            }
            let (target, column): (i64, Vec<Complex64>) = match op {
                ModeOperator::Dirichlet => (k, matvec(&self.kernels().g[slot], &a)),
                ModeOperator::Canonical => (k - 1, matvec(&self.kernels().t[slot], &a)),
                ModeOperator::Cauchy => (k - 1, matvec(&self.kernels().ttilde[slot], &a)),
                ModeOperator::Bergman => {
                    if k < 0 {
                        continue;
                    }
                    let e = (k + 1) as i32;
                    let c: Complex64 = (0..nr)
                        .map(|j| a[j] * (self.radial_weights[j] * self.radii[j].powi(e)))
                        .sum();
                    let scale = 2.0 * (k + 1) as f64;
                    (k, self.radii.iter().map(|r| c * scale * r.powi(k as i32)).collect())
                }
                ModeOperator::Dz | ModeOperator::Dzbar => {
                    let da = matvec(&self.diff, &a);
                    let kf = k as f64;
                    let sign = if op == ModeOperator::Dz { 1.0 } else { -1.0 };
                    let col = (0..nr)
                        .map(|i| 0.5 * (da[i] + sign * kf * a[i] / self.radii[i]))
                        .collect();
                    (if op == ModeOperator::Dz { k - 1 } else { k + 1 }, col)
                }
            };
            if let Some(ts) = self.slot(target) {
                for i in 0..nr {
                    out[i * nt + ts] += column[i];
                }
            }
        }
        out
    }

    /// Value at the single disc node `target` of `T̃` applied to `values`,
    /// used where the integrand changes with the evaluation point.
    pub fn cauchy_at_node(&self, values: &[Complex64], target: usize) -> Complex64 {
        let modes = self.to_modes(values);
        let (nr, nt) = (self.nr, self.ntheta);
        let (ti, tj) = (target / nt, target % nt);
        let theta = self.angle(tj);
        let kernels = self.kernels();
        let mut acc = Complex64::new(0.0, 0.0);
        for slot in 0..nt {
            let k = self.wavenumber(slot);
            if self.slot(k - 1).is_none() {
                continue;
            }
            let row = &kernels.ttilde[slot][ti * nr..(ti + 1) * nr];
            let v: Complex64 = (0..nr).map(|j| modes[j * nt + slot] * row[j]).sum();
            acc += v * Complex64::from_polar(1.0, (k - 1) as f64 * theta);
        }
        acc
    }
}

fn matvec(mat: &[f64], v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let row = &mat[i * n..(i + 1) * n];
            row.iter().zip(v).map(|(m, x)| x * m).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: &PolarGrid, f: impl Fn(Complex64) -> Complex64) -> Vec<Complex64> {
        (0..grid.len()).map(|i| f(grid.node(i))).collect()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn weights_sum_to_pi() {
        let grid = PolarGrid::shared(16, 32);
        let s: f64 = (0..grid.len()).map(|i| grid.weight(i)).sum();
        assert!((s - PI).abs() < 1e-13 * PI);
    }

    #[test]
    fn closed_forms_on_low_monomials() {
        let grid = PolarGrid::shared(16, 32);
        let one = sample(&grid, |_| Complex64::new(1.0, 0.0));
        let g1 = grid.apply(ModeOperator::Dirichlet, &one);
        assert!(max_diff(&g1, &sample(&grid, |z| Complex64::new(z.norm_sqr() - 1.0, 0.0))) < 1e-13);
        let t1 = grid.apply(ModeOperator::Canonical, &one);
        assert!(max_diff(&t1, &sample(&grid, |z| z.conj())) < 1e-13);
        let tz = grid.apply(ModeOperator::Canonical, &sample(&grid, |z| z));
        assert!(max_diff(&tz, &sample(&grid, |z| Complex64::new(z.norm_sqr() - 0.5, 0.0))) < 1e-13);
        let ct = grid.apply(ModeOperator::Cauchy, &sample(&grid, |z| z));
        assert!(max_diff(&ct, &sample(&grid, |z| Complex64::new(z.norm_sqr() - 1.0, 0.0))) < 1e-13);
        let pz = grid.apply(ModeOperator::Bergman, &sample(&grid, |z| z * z.conj()));
        assert!(max_diff(&pz, &sample(&grid, |_| Complex64::new(0.5, 0.0))) < 1e-13);
    }

    #[test]
    fn spectral_derivatives_of_polynomials() {
        let grid = PolarGrid::shared(20, 32);
        let f = sample(&grid, |z| z.powu(3) * z.conj().powu(2));
        let dz = grid.apply(ModeOperator::Dz, &f);
        let dzb = grid.apply(ModeOperator::Dzbar, &f);
        assert!(max_diff(&dz, &sample(&grid, |z| 3.0 * z.powu(2) * z.conj().powu(2))) < 1e-11);
        assert!(max_diff(&dzb, &sample(&grid, |z| 2.0 * z.powu(3) * z.conj())) < 1e-11);
    }

    #[test]
    fn interpolation_reaches_the_boundary() {
        let grid = PolarGrid::shared(16, 32);
        let f = sample(&grid, |z| z.powu(2) * z.conj() + 1.0);
        let modes = grid.to_modes(&f);
        let p = Complex64::from_polar(1.0, 0.7);
        let exact = p.powu(2) * p.conj() + 1.0;
        assert!((grid.interpolate(&modes, p) - exact).norm() < 1e-12);
    }
}
