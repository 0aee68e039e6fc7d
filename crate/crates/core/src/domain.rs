//! Slices, product domains, Sobolev indices and the JSON domain schema.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DbarError, Result};

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;
const DERIVATIVE_SAMPLES_RADIAL: usize = 100;
const DERIVATIVE_SAMPLES_ANGULAR: usize = 128;
const BOUNDARY_SAMPLES: usize = 4096;
const POLYGON_SAMPLES: usize = 1024;
const COLLISION_TOL: f64 = 1e-9;

/// Injective holomorphic polynomial `φ(ζ) = Σ c_j ζ^j` on the closed unit disc.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    coeffs: Vec<Complex64>,
    dcoeffs: Vec<Complex64>,
    seeds: Vec<(Complex64, Complex64)>,
    boundary: Vec<Complex64>,
}

impl ConformalMap {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(DbarError::InvalidSlice("conformal map must be non-constant".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(DbarError::InvalidSlice("non-finite map coefficient".into()));
        }
        let dcoeffs = coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c * j as f64)
            .collect();
        let mut map = Self {
            coeffs,
            dcoeffs,
            seeds: Vec::new(),
            boundary: Vec::new(),
        };
        map.check_derivative()?;
        map.check_boundary_injective()?;

        let mut seeds = vec![(Complex64::new(0.0, 0.0), map.eval(Complex64::new(0.0, 0.0)))];
        for i in 1..=32 {
            let r = i as f64 / 32.0 * 0.999;
            for j in 0..64 {
                let zeta = Complex64::from_polar(r, 2.0 * PI * j as f64 / 64.0);
                seeds.push((zeta, map.eval(zeta)));
            }
        }
        map.seeds = seeds;
        map.boundary = (0..POLYGON_SAMPLES)
            .map(|j| map.eval(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / POLYGON_SAMPLES as f64)))
            .collect();
        Ok(map)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        horner(&self.coeffs, zeta)
    }

    pub fn derivative(&self, zeta: Complex64) -> Complex64 {
        horner(&self.dcoeffs, zeta)
    }

    /// Divided difference `(φ(ω) - φ(ζ)) / (ω - ζ)`, equal to `φ'(ζ)` on the diagonal.
    pub fn divided_difference(&self, omega: Complex64, zeta: Complex64) -> Complex64 {
        // Σ_j c_j Σ_{l<j} ω^l ζ^{j-1-l}, accumulated by a Horner-like recursion:
        // h_j = ω h_{j-1} + ζ^{j-1} with h_j = (ω^j - ζ^j)/(ω - ζ).
        let mut h = Complex64::new(0.0, 0.0);
        let mut zeta_pow = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().skip(1) {
            h = omega * h + zeta_pow;
            zeta_pow *= zeta;
            acc += c * h;
        }
        acc
    }

    fn check_derivative(&self) -> Result<()> {
        let mut max_abs: f64 = 0.0;
        let mut min_abs = f64::INFINITY;
        for i in 0..=DERIVATIVE_SAMPLES_RADIAL {
            let r = i as f64 / DERIVATIVE_SAMPLES_RADIAL as f64;
            for j in 0..DERIVATIVE_SAMPLES_ANGULAR {
                let zeta = Complex64::from_polar(r, 2.0 * PI * j as f64 / DERIVATIVE_SAMPLES_ANGULAR as f64);
                let d = self.derivative(zeta).norm();
                max_abs = max_abs.max(d);
                min_abs = min_abs.min(d);
            }
        }
        if min_abs <= 1e-8 * max_abs.max(1.0) {
            return Err(DbarError::InvalidSlice(format!(
                "derivative of the map vanishes on the closed disc (min |φ'| = {min_abs:e})"
            )));
        }
        Ok(())
    }

    fn check_boundary_injective(&self) -> Result<()> {
        let n = BOUNDARY_SAMPLES;
        let pts: Vec<Complex64> = (0..n)
            .map(|j| self.eval(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)))
            .collect();
        for a in 0..n {
            for b in (a + 3)..n {
                if n - (b - a) < 3 {
                    continue;
                }
                if (pts[a] - pts[b]).norm() < COLLISION_TOL {
                    return Err(DbarError::InvalidSlice(format!(
                        "map is not injective on the boundary (samples {a} and {b} collide)"
                    )));
                }
            }
        }
        // A closed polygon through a coarser sample must also be simple.
        let step = n / POLYGON_SAMPLES;
        let poly: Vec<Complex64> = pts.iter().step_by(step).copied().collect();
        let m = poly.len();
        for a in 0..m {
            let (p1, p2) = (poly[a], poly[(a + 1) % m]);
            for b in (a + 2)..m {
                if (b + 1) % m == a {
                    continue;
                }
                let (q1, q2) = (poly[b], poly[(b + 1) % m]);
                if segments_cross(p1, p2, q1, q2) {
                    return Err(DbarError::InvalidSlice(format!(
                        "boundary image self-intersects near samples {} and {}",
                        a * step,
                        b * step
                    )));
                }
            }
        }
        Ok(())
    }

    fn winding_number(&self, z: Complex64) -> f64 {
        let m = self.boundary.len();
        let mut total = 0.0;
        for a in 0..m {
            let u = self.boundary[a] - z;
            let v = self.boundary[(a + 1) % m] - z;
            total += (v / u).arg();
        }
        total / (2.0 * PI)
    }

    /// `φ⁻¹(z)` by Newton iteration seeded from the nearest tabulated image.
    pub fn inverse(&self, z: Complex64) -> Result<Complex64> {
        if self.winding_number(z).abs() < 0.5 {
            return Err(DbarError::Domain(z));
        }
        let mut zeta = self
            .seeds
            .iter()
            .min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm()))
            .map(|s| s.0)
            .unwrap_or_default();
        for _ in 0..NEWTON_MAX_ITER {
            let step = (self.eval(zeta) - z) / self.derivative(zeta);
            zeta -= step;
            if !zeta.re.is_finite() || !zeta.im.is_finite() {
                return Err(DbarError::Inversion(z));
            }
            if step.norm() <= NEWTON_TOL * (1.0 + zeta.norm()) {
                if zeta.norm() >= 1.0 {
                    return Err(DbarError::Domain(z));
                }
                return Ok(zeta);
            }
        }
        Err(DbarError::Inversion(z))
    }
}

fn horner(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = cross(q2 - q1, p1 - q1);
    let d2 = cross(q2 - q1, p2 - q1);
    let d3 = cross(p2 - p1, q1 - p1);
    let d4 = cross(p2 - p1, q2 - p1);
    (d1 * d2 < 0.0) && (d3 * d4 < 0.0)
}

/// A planar factor of a product domain: the unit disc or a conformal
/// polynomial image of it.
#[derive(Debug, Clone)]
pub enum SliceDomain {
    UnitDisc,
    Conformal(Arc<ConformalMap>),
}

impl SliceDomain {
    pub fn disc() -> Self {
        SliceDomain::UnitDisc
    }

    pub fn conformal(coeffs: Vec<Complex64>) -> Result<Self> {
        Ok(SliceDomain::Conformal(Arc::new(ConformalMap::new(coeffs)?)))
    }

    pub fn is_disc(&self) -> bool {
        matches!(self, SliceDomain::UnitDisc)
    }

    pub fn map(&self) -> Option<&ConformalMap> {
        match self {
            SliceDomain::UnitDisc => None,
            SliceDomain::Conformal(m) => Some(m),
        }
    }

    /// Image of a disc point under the slice's parametrization.
    pub fn forward(&self, zeta: Complex64) -> Complex64 {
        match self {
            SliceDomain::UnitDisc => zeta,
            SliceDomain::Conformal(m) => m.eval(zeta),
        }
    }

    pub fn forward_derivative(&self, zeta: Complex64) -> Complex64 {
        match self {
            SliceDomain::UnitDisc => Complex64::new(1.0, 0.0),
            SliceDomain::Conformal(m) => m.derivative(zeta),
        }
    }

    /// Disc preimage of an interior point of the slice.
    pub fn pullback(&self, z: Complex64) -> Result<Complex64> {
        match self {
            SliceDomain::UnitDisc => {
                if z.norm() < 1.0 && z.re.is_finite() && z.im.is_finite() {
                    Ok(z)
                } else {
                    Err(DbarError::Domain(z))
                }
            }
            SliceDomain::Conformal(m) => m.inverse(z),
        }
    }

    pub fn spec(&self) -> SliceSpec {
        match self {
            SliceDomain::UnitDisc => SliceSpec::Disc,
            SliceDomain::Conformal(m) => SliceSpec::Conformal {
                coeffs: m.coeffs().iter().map(|c| [c.re, c.im]).collect(),
            },
        }
    }
}

/// Sobolev index `(k, p)` with `k ≥ 0` and `1 < p < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSobolevIndex")]
pub struct SobolevIndex {
    k: usize,
    p: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSobolevIndex {
    k: usize,
    p: f64,
}

impl TryFrom<RawSobolevIndex> for SobolevIndex {
    type Error = DbarError;

    fn try_from(raw: RawSobolevIndex) -> Result<Self> {
        Self::new(raw.k, raw.p)
    }
}

impl SobolevIndex {
    pub fn new(k: usize, p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(DbarError::Index(format!("exponent p = {p} must satisfy 1 < p < ∞")));
        }
        Ok(Self { k, p })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// JSON description of one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SliceSpec {
    Disc,
    Conformal { coeffs: Vec<[f64; 2]> },
}

impl SliceSpec {
    pub fn build(&self) -> Result<SliceDomain> {
        match self {
            SliceSpec::Disc => Ok(SliceDomain::disc()),
            SliceSpec::Conformal { coeffs } => {
                SliceDomain::conformal(coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nr: usize,
    pub ntheta: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nr: 64, ntheta: 256 }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nr < 2 || self.ntheta < 4 {
            return Err(DbarError::Config(format!(
                "grid needs nr >= 2 and ntheta >= 4, got nr = {}, ntheta = {}",
                self.nr, self.ntheta
            )));
        }
        Ok(())
    }
}

/// Domain/config schema:
/// `{"slices":[{"kind":"disc"}|{"kind":"conformal","coeffs":[[re,im],...]}],
///   "grid":{"nr":64,"ntheta":256}, "degree":8}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub slices: Vec<SliceSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_degree")]
    pub degree: u32,
}

fn default_degree() -> u32 {
    8
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self {
            slices: vec![SliceSpec::Disc, SliceSpec::Disc],
            grid: GridSpec::default(),
            degree: default_degree(),
        }
    }
}

impl DomainConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slices.is_empty() {
            return Err(DbarError::Config("at least one slice is required".into()));
        }
        self.grid.validate()
    }

    pub fn build_slices(&self) -> Result<Vec<SliceDomain>> {
        self.slices.iter().map(SliceSpec::build).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobolev_index_rejects_p_at_most_one_and_infinity() {
        assert!(SobolevIndex::new(1, 1.0).is_err());
        assert!(SobolevIndex::new(1, 0.5).is_err());
        assert!(SobolevIndex::new(0, f64::INFINITY).is_err());
        assert!(SobolevIndex::new(0, f64::NAN).is_err());
        assert!(SobolevIndex::new(2, 1.0001).is_ok());
    }

    #[test]
    fn config_schema_parses() {
        let text = r#"{"slices":[{"kind":"disc"},{"kind":"conformal","coeffs":[[0,0],[1,0],[0.2,0]]}],
                       "grid":{"nr":32,"ntheta":64},"degree":6}"#;
        let cfg = DomainConfig::from_json(text).unwrap();
        assert_eq!(cfg.slices.len(), 2);
        assert_eq!(cfg.grid, GridSpec { nr: 32, ntheta: 64 });
        let slices = cfg.build_slices().unwrap();
        assert!(slices[0].is_disc());
        assert!(!slices[1].is_disc());
        assert!(DomainConfig::from_json(r#"{"slices":[{"kind":"annulus"}]}"#).is_err());
        assert!(DomainConfig::from_json(r#"{"slices":[]}"#).is_err());
    }

    #[test]
    fn critical_point_inside_disc_is_rejected() {
        // φ' = 1 + ζ vanishes at ζ = -1 on the boundary.
        let err = SliceDomain::conformal(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.5, 0.0),
        ]);
        assert!(matches!(err, Err(DbarError::InvalidSlice(_))));
    }

    #[test]
    fn inverse_recovers_preimage_and_rejects_outside_points() {
        let s = SliceDomain::conformal(vec![
            Complex64::new(0.1, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.2, 0.1),
        ])
        .unwrap();
        for zeta in [Complex64::new(0.3, -0.2), Complex64::new(-0.7, 0.5), Complex64::new(0.0, 0.95)] {
            let z = s.forward(zeta);
            let back = s.pullback(z).unwrap();
            assert!((back - zeta).norm() < 1e-11);
        }
        assert!(matches!(s.pullback(Complex64::new(3.0, 0.0)), Err(DbarError::Domain(_))));
        assert!(matches!(SliceDomain::disc().pullback(Complex64::new(1.0, 0.0)), Err(DbarError::Domain(_))));
    }

    #[test]
    fn divided_difference_matches_definition() {
        let m = ConformalMap::new(vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.0, 0.05),
        ])
        .unwrap();
        let (w, z) = (Complex64::new(0.3, 0.4), Complex64::new(-0.5, 0.1));
        let direct = (m.eval(w) - m.eval(z)) / (w - z);
        assert!((m.divided_difference(w, z) - direct).norm() < 1e-14);
        assert!((m.divided_difference(z, z) - m.derivative(z)).norm() < 1e-14);
    }
}
