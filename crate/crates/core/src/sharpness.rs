//! The bidisc datum `f = (z₂-1)^{k-2/p} dz̄₁` (or `(z₂-1)^{k-1} log(z₂-1) dz̄₁`
//! when `p = 2`): it lies in `W^{k,q}` for every `q < p`, while the circle
//! averages `v(r,z₂) = ∮_{|z₁|=r} u dz₁` of any solution have
//! `∂₂^k v ∝ r² (z₂-1)^{-2/p}`, which is not in `L^p`.
//!
//! Integrals over `{|z₂ - 1| > ε} ∩ △` use polar coordinates about `1`,
//! `z₂ = 1 + t e^{iψ}`, where the disc is `t < -2 cos ψ`, `ψ ∈ (π/2, 3π/2)`,
//! and `t = e^s`. The `ψ` range is graded geometrically toward its ends,
//! where the `t` range shrinks to nothing.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DbarError, Result};
use crate::quadrature::GaussLegendre;

/// Branch of `arg(z₂ - 1)`; only one is implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchConvention {
    /// `arg(z₂ - 1) ∈ (0, 2π)`, cut along `z₂ ∈ [1, ∞)`; on the disc this
    /// is the range `(π/2, 3π/2)`.
    #[default]
    CutAlongPositiveReals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SharpnessConfig {
    pub k: u32,
    pub p: f64,
    pub q_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    /// Gauss–Legendre nodes in `r ∈ (0,1)`.
    #[serde(default = "default_r_nodes")]
    pub r_nodes: usize,
    /// Nodes per graded `ψ` panel.
    #[serde(default = "default_psi_nodes")]
    pub psi_nodes: usize,
    /// Nodes in `s = ln t`.
    #[serde(default = "default_s_nodes")]
    pub s_nodes: usize,
    #[serde(default)]
    pub branch: BranchConvention,
}

fn default_r_nodes() -> usize {
    32
}
fn default_psi_nodes() -> usize {
    24
}
fn default_s_nodes() -> usize {
    48
}

/// Grading levels of the `ψ` panels at each end of the range.
const PSI_LEVELS: u32 = 14;

impl Default for SharpnessConfig {
    fn default() -> Self {
        Self {
            k: 1,
            p: 4.0,
            q_list: vec![2.0, 3.0],
            eps_list: vec![1e-2, 1e-3, 1e-4, 1e-5],
            r_nodes: default_r_nodes(),
            psi_nodes: default_psi_nodes(),
            s_nodes: default_s_nodes(),
            branch: BranchConvention::default(),
        }
    }
}

impl SharpnessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(DbarError::Config(format!("p = {} must satisfy 1 < p < ∞", self.p)));
        }
        if let Some(q) = self.q_list.iter().find(|&&q| !(q > 1.0 && q < self.p)) {
            return Err(DbarError::Config(format!("q = {q} must satisfy 1 < q < p = {}", self.p)));
        }
        if let Some(e) = self.eps_list.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
            return Err(DbarError::Config(format!("ε = {e} must lie in (0, 1)")));
        }
        if self.eps_list.len() < 2 {
            return Err(DbarError::Config("at least two truncation distances are needed".into()));
        }
        if self.r_nodes == 0 || self.psi_nodes == 0 || self.s_nodes == 0 {
            return Err(DbarError::Config("quadrature node counts must be positive".into()));
        }
        Ok(())
    }

    /// `k - 2/p`, the exponent of the datum.
    pub fn exponent(&self) -> f64 {
        self.k as f64 - 2.0 / self.p
    }

    pub fn is_log_case(&self) -> bool {
        self.p == 2.0
    }

    /// Truncation distances sorted from largest to smallest.
    fn eps_sorted(&self) -> Vec<f64> {
        let mut e = self.eps_list.clone();
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }
}

/// `(ln|z₂-1|, arg(z₂-1))` on the configured branch.
fn branch_log(z2: Complex64) -> Result<(f64, f64)> {
    let w = z2 - 1.0;
    if w == Complex64::new(0.0, 0.0) {
        return Err(DbarError::BranchPoint(z2));
    }
    Ok((w.norm().ln(), w.im.atan2(w.re).rem_euclid(2.0 * PI)))
}

/// `A_j, B_j` with `∂^j [(z-1)^b L] = (z-1)^{b-j} (A_j L + B_j)` where
/// `L = log(z-1)`; without the log factor only `A_j` is used.
fn derivative_coeffs(b: f64, j: u32) -> (f64, f64) {
    let (mut a, mut bb) = (1.0, 0.0);
    for i in 0..j {
        let f = b - i as f64;
        bb = f * bb + a;
        a *= f;
    }
    (a, bb)
}

/// `∂₂^j f₁` in polar coordinates about `1`.
fn datum_derivative_polar(cfg: &SharpnessConfig, j: u32, ln_t: f64, psi: f64) -> Complex64 {
    let (b, log_case) = if cfg.is_log_case() {
        (cfg.k as f64 - 1.0, true)
    } else {
        (cfg.exponent(), false)
    };
    let (a, bb) = derivative_coeffs(b, j);
    let e = b - j as f64;
    let power = Complex64::from_polar((e * ln_t).exp(), e * psi);
    if log_case {
        power * (Complex64::new(ln_t, psi) * a + bb)
    } else {
        power * a
    }
}

/// `f₁(z₂)`; errors at the branch point.
pub fn datum(cfg: &SharpnessConfig, z2: Complex64) -> Result<Complex64> {
    datum_derivative(cfg, 0, z2)
}

/// `∂₂^j f₁(z₂)`.
pub fn datum_derivative(cfg: &SharpnessConfig, j: u32, z2: Complex64) -> Result<Complex64> {
    let (ln_t, psi) = branch_log(z2)?;
    Ok(datum_derivative_polar(cfg, j, ln_t, psi))
}

/// `∫_{△ ∩ {|z₂-1|>ε}} F(t, ψ) dA` for an integrand given in `(ln t, ψ)`.
fn truncated_integral(cfg: &SharpnessConfig, eps: f64, f: &(dyn Fn(f64, f64) -> f64 + Sync)) -> f64 {
    // The disc requires t < -2cos ψ; with t > ε this leaves (ψ0, 2π - ψ0).
    let psi0 = (-eps / 2.0).acos();
    let half = PI - psi0;
    let mut breaks = vec![0.0];
    for level in (0..PSI_LEVELS).rev() {
        breaks.push(half * 4f64.powi(-(level as i32)));
    }
    breaks.dedup();
    let gl_psi = GaussLegendre::new(cfg.psi_nodes);
    let gl_s = GaussLegendre::new(cfg.s_nodes);
    let panels: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
    let ln_eps = eps.ln();
    let column = |psi: f64| -> f64 {
        let ln_top = (-2.0 * psi.cos()).ln();
        if ln_top <= ln_eps {
            return 0.0;
        }
        let q = gl_s.mapped(ln_eps, ln_top);
        // dA = t dt dψ = e^{2s} ds dψ
        q.nodes.iter().zip(&q.weights).map(|(&s, &w)| w * f(s, psi) * (2.0 * s).exp()).sum()
    };
    // Panels are offsets from each end of the range, mirrored about π.
    let parts: Vec<f64> = panels
        .par_iter()
        .map(|&(a, b)| {
            let q = gl_psi.mapped(a, b);
            q.nodes
                .iter()
                .zip(&q.weights)
                .map(|(&off, &w)| w * (column(psi0 + off) + column(2.0 * PI - psi0 - off)))
                .sum::<f64>()
        })
        .collect();
    parts.iter().sum()
}

/// One row of the datum norm table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatumNormRow {
    pub q: f64,
    pub eps: f64,
    /// `‖f‖^q_{W^{k,q}(△² ∩ {|z₂-1|>ε})}`.
    pub norm_q: f64,
    /// The `q = p` row, which is expected to diverge.
    pub diagnostic: bool,
}

/// `‖f‖^q_{W^{k,q}}` on the truncated bidisc for every `q` (and the
/// diagnostic `q = p`) and `ε`. Only `∂₂^j f₁`, `j ≤ k`, are non-zero and
/// the `z₁` integral contributes the factor `π`.
pub fn datum_sobolev_norms(cfg: &SharpnessConfig) -> Result<Vec<DatumNormRow>> {
    cfg.validate()?;
    let mut qs: Vec<(f64, bool)> = cfg.q_list.iter().map(|&q| (q, false)).collect();
    qs.push((cfg.p, true));
    let mut rows = Vec::new();
    for (q, diagnostic) in qs {
        for &eps in &cfg.eps_sorted() {
            let integrand = |ln_t: f64, psi: f64| -> f64 {
                (0..=cfg.k).map(|j| datum_derivative_polar(cfg, j, ln_t, psi).norm().powf(q)).sum()
            };
            rows.push(DatumNormRow {
                q,
                eps,
                norm_q: PI * truncated_integral(cfg, eps, &integrand),
                diagnostic,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstructionRow {
    pub eps: f64,
    /// `‖r² (z₂-1)^{-2/p}‖^p_{L^p(U ∩ {|z₂-1|>ε})}`, `U = (0,1) × △`.
    pub norm_p: f64,
}

pub fn circle_average_obstruction(cfg: &SharpnessConfig) -> Result<Vec<ObstructionRow>> {
    cfg.validate()?;
    let p = cfg.p;
    let gl = GaussLegendre::new(cfg.r_nodes).mapped(0.0, 1.0);
    let radial: f64 = gl.nodes.iter().zip(&gl.weights).map(|(r, w)| w * r.powf(2.0 * p)).sum();
    // |(z₂-1)^{-2/p}|^p = t^{-2}
    let integrand = |ln_t: f64, _psi: f64| (-2.0 * ln_t).exp();
    Ok(cfg
        .eps_sorted()
        .into_iter()
        .map(|eps| ObstructionRow {
            eps,
            norm_p: radial * truncated_integral(cfg, eps, &integrand),
        })
        .collect())
}

/// Least-squares fit `y ≈ a + b x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogFit {
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

pub fn fit_log_growth(rows: &[ObstructionRow]) -> Result<LogFit> {
    if rows.len() < 2 {
        return Err(DbarError::Config("a fit needs at least two points".into()));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.eps).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.norm_p).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 0.0 } else { 1.0 - ss_res / syy };
    Ok(LogFit { a, b, r_squared })
}

/// Trapezoid points used for the circle integral.
pub const CAUCHY_POINTS: usize = 4096;

/// Max over sample `(r, z₂)` of `|∮_{|z₁|=r} (z₂-1)^{k-2/p} z̄₁ dz₁ - 2πi r² (z₂-1)^{k-2/p}|`,
/// the circle integral taken by the trapezoid rule.
pub fn cauchy_step_error(cfg: &SharpnessConfig) -> Result<f64> {
    let samples = [
        (0.25, Complex64::new(0.0, 0.0)),
        (0.5, Complex64::new(-0.3, 0.4)),
        (0.9, Complex64::new(0.6, -0.5)),
        (0.7, Complex64::new(0.95, 0.01)),
    ];
    let mut worst: f64 = 0.0;
    for (r, z2) in samples {
        let fz2 = datum(cfg, z2)?;
        let h = 2.0 * PI / CAUCHY_POINTS as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..CAUCHY_POINTS {
            let z1 = Complex64::from_polar(r, j as f64 * h);
            let u = fz2 * z1.conj();
            acc += u * Complex64::i() * z1 * h;
        }
        let expected = Complex64::new(0.0, 2.0 * PI * r * r) * fz2;
        worst = worst.max((acc - expected).norm());
    }
    Ok(worst)
}

/// Largest jump of `f₁` between neighbours among `n` equispaced samples of
/// the arc `|z₂ - 1| = ρ` inside the disc.
pub fn branch_jump(cfg: &SharpnessConfig, rho: f64, n: usize) -> Result<f64> {
    let psi0 = (-rho / 2.0).acos();
    let mut prev: Option<Complex64> = None;
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let psi = psi0 + (2.0 * PI - 2.0 * psi0) * (j as f64 + 0.5) / n as f64;
        let v = datum(cfg, Complex64::new(1.0, 0.0) + Complex64::from_polar(rho, psi))?;
        if let Some(p) = prev {
            worst = worst.max((v - p).norm());
        }
        prev = Some(v);
    }
    Ok(worst)
}

/// `max |∂_{z̄₂} f₁|` by central differences at interior sample points
/// (`f₂ = 0` and `f₁` does not depend on `z₁`, so this is the only
/// non-trivial closedness condition).
pub fn closedness_fd(cfg: &SharpnessConfig) -> Result<f64> {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for z2 in [
        Complex64::new(0.0, 0.0),
        Complex64::new(-0.5, 0.5),
        Complex64::new(0.3, -0.6),
        Complex64::new(0.8, 0.3),
        Complex64::new(0.9, -0.1),
    ] {
        let fx = (datum(cfg, z2 + h)? - datum(cfg, z2 - h)?) / (2.0 * h);
        let fy = (datum(cfg, z2 + Complex64::new(0.0, h))? - datum(cfg, z2 - Complex64::new(0.0, h))?) / (2.0 * h);
        worst = worst.max(((fx + Complex64::i() * fy) / 2.0).norm());
    }
    Ok(worst)
}

/// Largest relative tail change allowed for the convergent norms.
pub const TAIL_TOL: f64 = 0.01;
pub const MIN_R_SQUARED: f64 = 0.99;
pub const CAUCHY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub k: u32,
    pub p: f64,
    pub norms: Vec<DatumNormRow>,
    /// `(q, relative change between the two smallest ε)`.
    pub tail_changes: Vec<(f64, f64)>,
    pub obstruction: Vec<ObstructionRow>,
    pub fit: LogFit,
    pub obstruction_increasing: bool,
    pub cauchy_error: f64,
    pub pass: bool,
    pub failures: Vec<String>,
}

/// PASS iff the `q < p` norms converge (tail change at most 1%), the
/// obstruction grows like `a + b ln(1/ε)` with `b > 0` and `R² ≥ 0.99`, and
/// the circle-integral step is reproduced.
pub fn sharpness_verdict(cfg: &SharpnessConfig) -> Result<SharpnessReport> {
    let norms = datum_sobolev_norms(cfg)?;
    let obstruction = circle_average_obstruction(cfg)?;
    let fit = fit_log_growth(&obstruction)?;
    let cauchy_error = cauchy_step_error(cfg)?;
    let mut failures = Vec::new();
    let mut tail_changes = Vec::new();
    for &q in &cfg.q_list {
        let col: Vec<f64> = norms.iter().filter(|r| r.q == q && !r.diagnostic).map(|r| r.norm_q).collect();
        let (last, before) = (col[col.len() - 1], col[col.len() - 2]);
        if !last.is_finite() || !before.is_finite() {
            return Err(DbarError::Precondition {
                message: format!("non-finite norm in the q = {q} column"),
                residual: f64::NAN,
            });
        }
        let change = (last - before).abs() / last.abs();
        if change > TAIL_TOL {
            failures.push(format!("q = {q}: tail change {change:.3e} exceeds {TAIL_TOL}"));
        }
        tail_changes.push((q, change));
    }
    if !(fit.b > 0.0) {
        failures.push(format!("log slope b = {:.6e} is not positive", fit.b));
    }
    if !(fit.r_squared >= MIN_R_SQUARED) {
        failures.push(format!("R² = {:.6} below {MIN_R_SQUARED}", fit.r_squared));
    }
    let obstruction_increasing = obstruction.windows(2).all(|w| w[1].norm_p > w[0].norm_p);
    if !obstruction_increasing {
        failures.push("obstruction norm is not increasing as ε decreases".into());
    }
    if !(cauchy_error <= CAUCHY_TOL) {
        failures.push(format!("circle integral error {cauchy_error:.3e} exceeds {CAUCHY_TOL}"));
    }
    Ok(SharpnessReport {
        k: cfg.k,
        p: cfg.p,
        norms,
        tail_changes,
        obstruction,
        fit,
        obstruction_increasing,
        cauchy_error,
        pass: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg(k: u32, p: f64) -> SharpnessConfig {
        SharpnessConfig {
            k,
            p,
            ..SharpnessConfig::default()
        }
    }

    #[test]
    fn datum_on_the_branch() {
        let c = cfg(1, 4.0);
        let v = datum(&c, Complex64::new(0.0, 0.0)).unwrap();
        assert!((v - Complex64::i()).norm() < 1e-15);
        let t = 2f64.powi(-26);
        assert_relative_eq!(datum(&c, Complex64::new(1.0 - t, 0.0)).unwrap().norm(), t.sqrt(), max_relative = 1e-14);
        let log = datum(&cfg(1, 2.0), Complex64::new(0.0, 0.0)).unwrap();
        assert!((log - Complex64::new(0.0, PI)).norm() < 1e-15);
        assert!(matches!(datum(&c, Complex64::new(1.0, 0.0)), Err(DbarError::BranchPoint(_))));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for c in [cfg(2, 4.0), cfg(2, 2.0)] {
            let z = Complex64::new(-0.2, 0.3);
            let h = 1e-5;
            for j in 0..2 {
                let fd = (datum_derivative(&c, j, z + h).unwrap() - datum_derivative(&c, j, z - h).unwrap()) / (2.0 * h);
                assert!((fd - datum_derivative(&c, j + 1, z).unwrap()).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn truncated_area_and_power_integrals() {
        let c = cfg(1, 4.0);
        // Area of the disc minus the ε-ball about the boundary point 1.
        let eps = 1e-3;
        let area = truncated_integral(&c, eps, &|_, _| 1.0);
        let lens = {
            // |D ∩ B(1, ε)| for two unit-scale circles, exact.
            let (r, d) = (eps, 1.0);
            let a1 = r * r * ((d * d + r * r - 1.0) / (2.0 * d * r)).acos();
            let a2 = ((d * d + 1.0 - r * r) / (2.0 * d)).acos();
            let a3 = 0.5 * ((-d + r + 1.0) * (d + r - 1.0) * (d - r + 1.0) * (d + r + 1.0)).sqrt();
            a1 + a2 - a3
        };
        assert_relative_eq!(area, PI - lens, max_relative = 1e-12);
        // ∫ t^{-2} dA = π ln(1/ε) + O(ε)
        let v = truncated_integral(&c, 1e-5, &|s, _| (-2.0 * s).exp());
        assert!((v - PI * 1e5f64.ln()).abs() < 1e-3);
    }

    /// `∫_{△∩{|z₂-1|>ε}} |z₂-1|^{-2} dA = ∫_ε^2 2 acos(t/2) dt/t
    ///  = π ln(1/ε) + 2∫_0^{ε/2} asin(x)/x dx`, the last term by its series.
    fn log_area_oracle(eps: f64) -> f64 {
        let y = eps / 2.0;
        let series = y + y.powi(3) / 18.0 + 3.0 * y.powi(5) / 200.0;
        PI * (1.0 / eps).ln() + 2.0 * series
    }

    #[test]
    fn obstruction_matches_closed_form_and_grows_by_ln_ten() {
        let c = cfg(1, 4.0);
        let rows = circle_average_obstruction(&c).unwrap();
        let radial = 1.0 / (2.0 * c.p + 1.0);
        for r in &rows {
            assert_relative_eq!(r.norm_p, radial * log_area_oracle(r.eps), max_relative = 1e-10);
        }
        let slope = PI * radial;
        for w in rows.windows(2) {
            let step = w[1].norm_p - w[0].norm_p;
            assert!((step - slope * 10f64.ln()).abs() < 0.1 * slope * 10f64.ln());
        }
        let fit = fit_log_growth(&rows).unwrap();
        assert_relative_eq!(fit.b, slope, max_relative = 1e-2);
        assert!(fit.r_squared >= 0.99);
    }

    #[test]
    fn convergent_norms_match_radial_closed_form() {
        // k = 0: |f|^q = t^{-2q/p}, and ∫ t^{β} dA = ∫_ε^2 2acos(t/2) t^{β+1} dt.
        let c = cfg(0, 4.0);
        let rows = datum_sobolev_norms(&c).unwrap();
        let gl = GaussLegendre::new(200);
        for row in rows.iter().filter(|r| !r.diagnostic) {
            let beta = -2.0 * row.q / c.p;
            // Substitute t = ε + (2-ε) x² to absorb the endpoint behaviour.
            let q = gl.mapped(0.0, 1.0);
            let oracle: f64 = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(&x, &w)| {
                    let t = row.eps + (2.0 - row.eps) * x * x;
                    w * 2.0 * (t / 2.0).acos() * t.powf(beta + 1.0) * 2.0 * (2.0 - row.eps) * x
                })
                .sum();
            assert_relative_eq!(row.norm_q, PI * oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn verdicts() {
        let r = sharpness_verdict(&cfg(1, 4.0)).unwrap();
        assert!(r.pass, "{:?}", r.failures);
        let r0 = sharpness_verdict(&cfg(0, 4.0)).unwrap();
        assert!(r0.pass, "{:?}", r0.failures);
        let bad = SharpnessConfig {
            q_list: vec![2.0, 4.0],
            ..cfg(1, 4.0)
        };
        assert!(matches!(sharpness_verdict(&bad), Err(DbarError::Config(_))));
    }

    #[test]
    fn branch_is_continuous_and_form_is_closed() {
        let c = cfg(1, 4.0);
        let coarse = branch_jump(&c, 0.5, 64).unwrap();
        let fine = branch_jump(&c, 0.5, 1024).unwrap();
        assert!(fine < coarse / 8.0);
        assert!(closedness_fd(&c).unwrap() <= 1e-6);
        assert!(cauchy_step_error(&c).unwrap() <= 1e-10);
    }
}
