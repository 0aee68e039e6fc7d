//! Suite orchestration behind the `dbar` command line tool: configuration,
//! the seven check suites, report emission and golden-file regression.
//!
//! Every suite is a pure function of its [`RunConfig`]. Reports are written
//! by [`emit_report`] only, with floats printed to 17 significant digits,
//! so two runs with the same configuration produce identical bytes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_traits::One;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::ExactDensity;
use crate::domain::{DomainConfig, GridSpec, SliceDomain, SliceSpec, SobolevIndex};
use crate::error::{DbarError, Result};
use crate::family;
use crate::form::Form01;
use crate::green::{kernel_green_identity, sample_pairs, MIN_PAIR_SEPARATION};
use crate::grid::{sample_to_grid, GridFunction, ProductGrid, SliceGrid};
use crate::product::{
    bergman_projection_product, canonical_solution_ordered, canonical_solution_product, dbar_residual, orthogonality_residual,
};
use crate::scalar::{ExactComplex, Scalar};
use crate::sharpness::{sharpness_verdict, SharpnessConfig};
use crate::slice_ops::{
    bergman_P, bergman_P_spencer, canonical_T, cauchy_Ttilde, dirichlet_G, spencer_residual, Operand, BOUNDARY_SAMPLES,
};
use crate::sobolev::{growth_factor, norm_ratio_sweep, sobolev_norm, FamilySpec, SweepOperator};

/// Per-slice resolution cap for disc slices of product grids.
pub const PRODUCT_GRID_CAP: GridSpec = GridSpec { nr: 20, ntheta: 32 };
/// Cap for conformal slices of product grids; `1/φ'` is not a polynomial
/// and needs more angular modes.
pub const CONFORMAL_PRODUCT_CAP: GridSpec = GridSpec { nr: 32, ntheta: 64 };
/// Resolution cap for the per-target Cauchy transform on conformal slices.
pub const CONFORMAL_CAUCHY_CAP: GridSpec = GridSpec { nr: 32, ntheta: 64 };
/// Random closed forms in the product suites.
pub const DEFAULT_MEMBERS: usize = 50;
/// Largest holomorphic degree paired against in orthogonality checks.
pub const ORTHOGONALITY_MAXDEG: u32 = 6;
/// Relative tolerance of golden comparisons.
pub const GOLDEN_RTOL: f64 = 1e-9;
const GOLDEN_ATOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    KernelCheck,
    SpencerCheck,
    SliceIdentities,
    ProductSolve,
    Orthogonality,
    NormSweep,
    Sharpness,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::KernelCheck,
        Suite::SpencerCheck,
        Suite::SliceIdentities,
        Suite::ProductSolve,
        Suite::Orthogonality,
        Suite::NormSweep,
        Suite::Sharpness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::KernelCheck => "kernel-check",
            Suite::SpencerCheck => "spencer-check",
            Suite::SliceIdentities => "slice-identities",
            Suite::ProductSolve => "product-solve",
            Suite::Orthogonality => "orthogonality",
            Suite::NormSweep => "norm-sweep",
            Suite::Sharpness => "sharpness",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = DbarError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| DbarError::Config(format!("unknown suite '{s}'")))
    }
}

/// Contents of a `--config` file: the domain schema plus optional run
/// settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub slices: Vec<SliceSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub members: Option<usize>,
    #[serde(default)]
    pub sharpness: Option<SharpnessConfig>,
}

fn default_degree() -> u32 {
    8
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub suite: Suite,
    /// Overrides the primary tolerance of the suite.
    pub tol: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
    pub members: usize,
    pub sharpness: SharpnessConfig,
    /// Record wall-clock runtime in the summary (breaks byte stability).
    pub timing: bool,
}

impl RunConfig {
    pub fn new(suite: Suite, out: impl Into<PathBuf>) -> Self {
        Self {
            domain: DomainConfig::default(),
            suite,
            tol: None,
            seed: family::DEFAULT_SEED,
            out: out.into(),
            members: DEFAULT_MEMBERS,
            sharpness: SharpnessConfig::default(),
            timing: false,
        }
    }

    /// Applies the settings found in a config file.
    pub fn with_file(mut self, file: ConfigFile) -> Self {
        self.domain = DomainConfig {
            slices: file.slices,
            grid: file.grid,
            degree: file.degree,
        };
        if let Some(s) = file.seed {
            self.seed = s;
        }
        if file.tol.is_some() {
            self.tol = file.tol;
        }
        if let Some(m) = file.members {
            self.members = m;
        }
        if let Some(s) = file.sharpness {
            self.sharpness = s;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if let Some(t) = self.tol {
            if !(t > 0.0) || !t.is_finite() {
                return Err(DbarError::Config(format!("tolerance {t} must be positive")));
            }
        }
        if self.members == 0 {
            return Err(DbarError::Config("the random family needs at least one member".into()));
        }
        if self.suite == Suite::Sharpness {
            self.sharpness.validate()?;
        }
        Ok(())
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    /// The part of the configuration that determines suite output.
    pub fn fingerprint(&self) -> serde_json::Value {
        serde_json::json!({
            "suite": self.suite,
            "domain": self.domain,
            "tol": self.tol,
            "seed": self.seed,
            "members": self.members,
            "sharpness": if self.suite == Suite::Sharpness { Some(&self.sharpness) } else { None },
        })
    }
}

// ---- results ----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name inside the output directory.
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self {
            file: file.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| DbarError::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| DbarError::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// How a check value is judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "bound")]
pub enum Bound {
    /// Exactly zero (exact arithmetic).
    Zero,
    AtMost(f64),
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
        }
    }

    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::Zero => self.value == 0.0,
            Bound::AtMost(t) => self.value <= t,
            Bound::AtLeast(t) => self.value >= t,
        }
    }

    /// Residual-type checks feed `max_residual` in the summary.
    fn is_residual(&self) -> bool {
        !matches!(self.bound, Bound::AtLeast(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Extra JSON artifacts, `(file name, value)`.
    pub json: Vec<(String, serde_json::Value)>,
    pub runtime_ms: Option<u64>,
}

impl SuiteResult {
    fn new(suite: Suite, seed: u64) -> Self {
        Self {
            suite,
            seed,
            checks: Vec::new(),
            tables: Vec::new(),
            json: Vec::new(),
            runtime_ms: None,
        }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().filter(|c| c.is_residual()).map(|c| c.value).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass()).collect()
    }

    fn check(&mut self, name: impl Into<String>, value: f64, bound: Bound) {
        self.checks.push(Check::new(name, value, bound));
    }

    fn checks_table(&self) -> Table {
        let mut t = Table::new("checks.csv", &["check", "value", "bound", "limit", "pass"]);
        for c in &self.checks {
            let (kind, limit) = match c.bound {
                Bound::Zero => ("zero", 0.0),
                Bound::AtMost(v) => ("at-most", v),
                Bound::AtLeast(v) => ("at-least", v),
            };
            t.push(vec![
                c.name.clone().into(),
                c.value.into(),
                kind.into(),
                limit.into(),
                (if c.pass() { "true" } else { "false" }).into(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub suite: String,
    pub pass: bool,
    pub max_residual: f64,
    pub runtime_ms: Option<u64>,
    pub seed: u64,
}

impl Summary {
    pub fn of(result: &SuiteResult) -> Self {
        Self {
            suite: result.suite.name().into(),
            pass: result.pass(),
            max_residual: result.max_residual(),
            runtime_ms: result.runtime_ms,
            seed: result.seed,
        }
    }
}

fn summary_json(result: &SuiteResult) -> String {
    let s = Summary::of(result);
    // Written by hand so the residual carries the same 17 digits as the CSVs.
    let runtime = s.runtime_ms.map_or("null".to_string(), |v| v.to_string());
    let residual = if s.max_residual.is_finite() {
        format_float(s.max_residual)
    } else {
        "null".into()
    };
    format!(
        "{{\n  \"suite\": \"{}\",\n  \"pass\": {},\n  \"max_residual\": {},\n  \"runtime_ms\": {},\n  \"seed\": {}\n}}\n",
        s.suite, s.pass, residual, runtime, s.seed
    )
}

/// Writes every table, `checks.csv`, the JSON artifacts and `summary.json`
/// into `dir`.
pub fn emit_report(result: &SuiteResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for t in result.tables.iter().chain(std::iter::once(&result.checks_table())) {
        fs::write(dir.join(&t.file), t.to_csv()?)?;
    }
    for (name, value) in &result.json {
        fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    }
    fs::write(dir.join("summary.json"), summary_json(result))?;
    Ok(())
}

// ---- golden files -------------------------------------------------------------

const GOLDEN_CONFIG: &str = "config.json";

/// Stores the suite's tables as the regression baseline under
/// `root/<suite>/`, together with the configuration that produced them.
pub fn bless(result: &SuiteResult, cfg: &RunConfig, root: &Path) -> Result<()> {
    let dir = root.join(result.suite.name());
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    for t in &result.tables {
        fs::write(dir.join(&t.file), t.to_csv()?)?;
    }
    fs::write(dir.join(GOLDEN_CONFIG), serde_json::to_string_pretty(&cfg.fingerprint())? + "\n")?;
    Ok(())
}

/// Outcome of a golden comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum GoldenStatus {
    /// No baseline for this suite and configuration.
    Missing,
    Matched { files: usize },
    Mismatched { messages: Vec<String> },
}

fn cells_match(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= GOLDEN_RTOL * x.abs().max(y.abs()) + GOLDEN_ATOL,
        _ => false,
    }
}

/// Compares the suite's tables with the baseline under `root/<suite>/`,
/// numerically at relative tolerance [`GOLDEN_RTOL`]. Baselines recorded
/// for a different configuration count as missing.
pub fn compare_goldens(result: &SuiteResult, cfg: &RunConfig, root: &Path) -> Result<GoldenStatus> {
    let dir = root.join(result.suite.name());
    let cfg_path = dir.join(GOLDEN_CONFIG);
    if !cfg_path.exists() {
        return Ok(GoldenStatus::Missing);
    }
    let stored: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cfg_path)?)?;
    if stored != cfg.fingerprint() {
        return Ok(GoldenStatus::Missing);
    }
    let mut messages = Vec::new();
    let mut files = 0;
    for t in &result.tables {
        let path = dir.join(&t.file);
        if !path.exists() {
            messages.push(format!("{}: no baseline file", t.file));
            continue;
        }
        files += 1;
        let golden = fs::read_to_string(&path)?;
        let current = t.to_csv()?;
        let (g_lines, c_lines): (Vec<&str>, Vec<&str>) = (golden.lines().collect(), current.lines().collect());
        if g_lines.len() != c_lines.len() {
            messages.push(format!("{}: {} rows, baseline has {}", t.file, c_lines.len(), g_lines.len()));
            continue;
        }
        for (i, (g, c)) in g_lines.iter().zip(&c_lines).enumerate() {
            let (gs, cs): (Vec<&str>, Vec<&str>) = (g.split(',').collect(), c.split(',').collect());
            if gs.len() != cs.len() || gs.iter().zip(&cs).any(|(a, b)| !cells_match(a, b)) {
                messages.push(format!("{} line {}: '{c}' differs from baseline '{g}'", t.file, i + 1));
            }
        }
    }
    Ok(if messages.is_empty() {
        GoldenStatus::Matched { files }
    } else {
        GoldenStatus::Mismatched { messages }
    })
}

// ---- orchestration ------------------------------------------------------------

/// Caps the global rayon pool from `DBAR_THREADS`; call once, before any
/// parallel work.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("DBAR_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| DbarError::Config(format!("DBAR_THREADS = '{v}' is not a thread count")))?;
        if n == 0 {
            return Err(DbarError::Config("DBAR_THREADS must be at least 1".into()));
        }
        // A pool that already exists (e.g. in tests) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one suite. Nothing is written to disk.
pub fn run_suite(cfg: &RunConfig) -> Result<SuiteResult> {
    cfg.validate()?;
    let start = Instant::now();
    let mut result = match cfg.suite {
        Suite::KernelCheck => kernel_check(cfg),
        Suite::SpencerCheck => spencer_check(cfg),
        Suite::SliceIdentities => slice_identities(cfg),
        Suite::ProductSolve => product_solve(cfg),
        Suite::Orthogonality => orthogonality(cfg),
        Suite::NormSweep => norm_sweep(cfg),
        Suite::Sharpness => sharpness(cfg),
    }?;
    if cfg.timing {
        result.runtime_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(result)
}

/// Exit status for a finished run: 0 on success, 1 on failed checks.
pub fn exit_code(result: &SuiteResult) -> i32 {
    if result.pass() {
        0
    } else {
        1
    }
}

/// Exit status for an error: 2 for configuration problems, 3 for I/O,
/// 1 for everything else (failed preconditions and numerical errors).
pub fn error_exit_code(err: &DbarError) -> i32 {
    match err {
        DbarError::Config(_) | DbarError::Json(_) | DbarError::Index(_) | DbarError::InvalidSlice(_) => 2,
        DbarError::Io(_) => 3,
        _ => 1,
    }
}

fn slice_label(spec: &SliceSpec) -> String {
    match spec {
        SliceSpec::Disc => "disc".into(),
        SliceSpec::Conformal { coeffs } => {
            let parts: Vec<String> = coeffs.iter().map(|c| format!("{}{:+}i", c[0], c[1])).collect();
            format!("conformal[{}]", parts.join(" "))
        }
    }
}

/// Distinct slices of the configuration, in order of first appearance.
fn distinct_slices(cfg: &RunConfig) -> Result<Vec<(String, SliceDomain)>> {
    let mut seen: Vec<&SliceSpec> = Vec::new();
    let mut out = Vec::new();
    for spec in &cfg.domain.slices {
        if !seen.contains(&spec) {
            seen.push(spec);
            out.push((slice_label(spec), spec.build()?));
        }
    }
    Ok(out)
}

fn cap(spec: GridSpec, limit: GridSpec) -> GridSpec {
    GridSpec {
        nr: spec.nr.min(limit.nr),
        ntheta: spec.ntheta.min(limit.ntheta),
    }
}

fn mono(m: u32, n: u32) -> ExactDensity {
    ExactDensity::monomial(&[(m, n)], ExactComplex::one())
}

fn monomial_family(degree: u32) -> Vec<(u32, u32)> {
    (0..=degree).flat_map(|m| (0..=degree).map(move |n| (m, n))).collect()
}

fn kernel_check(cfg: &RunConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::KernelCheck, cfg.seed);
    let tol = cfg.tol_or(1e-4);
    let mut table = Table::new("kernel_check.csv", &["slice", "pairs", "min_separation", "max_residual"]);
    for (j, (label, slice)) in distinct_slices(cfg)?.into_iter().enumerate() {
        let pairs = sample_pairs(&slice, 100, 0.9, MIN_PAIR_SEPARATION, cfg.seed.wrapping_add(j as u64));
        let r = kernel_green_identity(&slice, &pairs)?;
        table.push(vec![label.clone().into(), pairs.len().into(), MIN_PAIR_SEPARATION.into(), r.into()]);
        res.check(format!("kernel-green identity on {label}"), r, Bound::AtMost(tol));
    }
    res.tables.push(table);
    Ok(res)
}

fn spencer_check(cfg: &RunConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::SpencerCheck, cfg.seed);
    let tol = cfg.tol_or(1e-6);
    let degree = cfg.domain.degree;
    let disc = SliceDomain::disc();
    let mut exact = Table::new("spencer_exact.csv", &["m", "n", "residual"]);
    let mut worst: f64 = 0.0;
    for (m, n) in monomial_family(degree) {
        let r = spencer_residual(&mono(m, n), &disc, 0)?;
        worst = worst.max(r);
        exact.push(vec![m.into(), n.into(), r.into()]);
    }
    res.check("exact spencer residual", worst, Bound::Zero);
    res.tables.push(exact);

    let mut numeric = Table::new("spencer_numeric.csv", &["slice", "m", "n", "residual"]);
    for (label, slice) in distinct_slices(cfg)? {
        let grid = ProductGrid::build(std::slice::from_ref(&slice), cfg.domain.grid)?;
        let rows: Vec<(u32, u32, f64)> = monomial_family(degree)
            .into_par_iter()
            .map(|(m, n)| {
                let f = sample_to_grid(&mono(m, n), &grid)?;
                Ok((m, n, spencer_residual(&f, &slice, 0)?))
            })
            .collect::<Result<_>>()?;
        let w = rows.iter().map(|r| r.2).fold(0.0, f64::max);
        for (m, n, r) in rows {
            numeric.push(vec![label.clone().into(), m.into(), n.into(), r.into()]);
        }
        res.check(format!("numeric spencer residual on {label}"), w, Bound::AtMost(tol));
    }
    res.tables.push(numeric);
    Ok(res)
}

/// Exact idempotence and self-adjointness defects of `P` on the monomial
/// basis of degree `≤ degree` in `nvars` variables. Only pairs with equal
/// `m - n` in every variable can pair non-trivially, so only those are
/// compared.
pub fn projection_algebra_defects(nvars: usize, degree: u32) -> Result<(usize, f64, f64)> {
    let slices = vec![SliceDomain::disc(); nvars];
    let one_var = monomial_family(degree);
    let mut basis: Vec<Vec<(u32, u32)>> = vec![Vec::new()];
    for _ in 0..nvars {
        basis = basis
            .into_iter()
            .flat_map(|b| {
                one_var.iter().map(move |&e| {
                    let mut v = b.clone();
                    v.push(e);
                    v
                })
            })
            .collect();
    }
    let images: Vec<(ExactDensity, ExactDensity)> = basis
        .par_iter()
        .map(|exps| {
            let e = ExactDensity::monomial(exps, ExactComplex::one());
            let pe = bergman_projection_product(&e, &slices)?;
            Ok((e, pe))
        })
        .collect::<Result<_>>()?;
    let idempotence = images
        .par_iter()
        .map(|(_, pe)| bergman_projection_product(pe, &slices)?.sub(pe)?.max_abs_coeff())
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let key = |exps: &[(u32, u32)]| -> Vec<i64> { exps.iter().map(|&(m, n)| i64::from(m) - i64::from(n)).collect() };
    let mut groups: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, exps) in basis.iter().enumerate() {
        groups.entry(key(exps)).or_default().push(i);
    }
    let adjoint = groups
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|members| {
            let mut worst: f64 = 0.0;
            for &a in members.iter() {
                for &b in members.iter() {
                    let (ea, pa) = &images[a];
                    let (eb, pb) = &images[b];
                    let lhs = pa.inner(eb)?.coeff;
                    let rhs = ea.inner(pb)?.coeff;
                    worst = worst.max((lhs - rhs).norm_f64()?);
                }
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((basis.len(), idempotence, adjoint))
}

fn slice_identities(cfg: &RunConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::SliceIdentities, cfg.seed);
    let tol = cfg.tol_or(1e-8);
    let degree = cfg.domain.degree;
    let mut table = Table::new("slice_identities.csv", &["check", "slice", "value"]);
    let mut record = |res: &mut SuiteResult, name: &str, label: &str, value: f64, bound: Bound| {
        table.push(vec![name.into(), label.into(), value.into()]);
        res.check(format!("{name} on {label}"), value, bound);
    };

    // Exact monomial calculus on the disc.
    let disc = SliceDomain::disc();
    let (mut t_gap, mut dbar_t, mut lap, mut boundary): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (m, n) in monomial_family(degree) {
        let f = mono(m, n);
        let t = canonical_T(&f, &disc, 0)?;
        let tt = cauchy_Ttilde(&f, &disc, 0)?;
        t_gap = t_gap.max(tt.sub(&bergman_P(&tt, &disc, 0)?)?.sub(&t)?.max_abs_coeff()?);
        dbar_t = dbar_t.max(t.dzbar(0).sub(&f)?.max_abs_coeff()?);
        let g = dirichlet_G(&f, &disc, 0)?;
        let four = ExactDensity::constant(1, ExactComplex::ratio(4, 1));
        lap = lap.max(g.dzbar(0).dz(0).scale(&ExactComplex::ratio(4, 1)).sub(&f.mul(&four)?)?.max_abs_coeff()?);
        boundary = boundary.max(g.boundary_trace(0, BOUNDARY_SAMPLES)?);
    }
    record(&mut res, "exact T vs (I-P)T~", "disc", t_gap, Bound::Zero);
    record(&mut res, "exact dbar T f - f", "disc", dbar_t, Bound::Zero);
    record(&mut res, "exact laplacian G f - 4f", "disc", lap, Bound::Zero);
    record(&mut res, "boundary trace of exact G f", "disc", boundary, Bound::AtMost(1e-10));
    let (_, idem, adj) = projection_algebra_defects(1, degree)?;
    record(&mut res, "exact P idempotence", "disc", idem, Bound::Zero);
    record(&mut res, "exact P self-adjointness", "disc", adj, Bound::Zero);

    // Numeric paths on every configured slice.
    for (label, slice) in distinct_slices(cfg)? {
        let grid = ProductGrid::build(std::slice::from_ref(&slice), cfg.domain.grid)?;
        let cauchy_grid = if slice.is_disc() {
            grid.clone()
        } else {
            ProductGrid::build(std::slice::from_ref(&slice), cap(cfg.domain.grid, CONFORMAL_CAUCHY_CAP))?
        };
        let cauchy_degree = if slice.is_disc() { degree } else { degree.min(4) };
        let rows: Vec<[f64; 5]> = monomial_family(degree)
            .into_par_iter()
            .map(|(m, n)| {
                let f = sample_to_grid(&mono(m, n), &grid)?;
                let pk = bergman_P(&f, &slice, 0)?;
                let ps = bergman_P_spencer(&f, &slice, 0)?;
                let t = canonical_T(&f, &slice, 0)?;
                let dbar = t.dzbar(0)?.sub(&f)?.max_abs();
                let orth = (0..=2 * degree).map(|k| t.holomorphic_pairing(&[k])).try_fold(0.0_f64, |a, v| Ok::<_, DbarError>(a.max(v?)))?;
                let bnd = dirichlet_G(&f, &slice, 0)?.boundary_trace(0, BOUNDARY_SAMPLES)?;
                let tt_gap = if m.max(n) <= cauchy_degree {
                    let fc = sample_to_grid(&mono(m, n), &cauchy_grid)?;
                    let tt = cauchy_Ttilde(&fc, &slice, 0)?;
                    tt.sub(&bergman_P(&tt, &slice, 0)?)?.sub(&canonical_T(&fc, &slice, 0)?)?.max_abs()
                } else {
                    0.0
                };
                Ok([pk.sub(&ps)?.max_abs(), tt_gap, dbar, orth, bnd])
            })
            .collect::<Result<_>>()?;
        let col = |i: usize| rows.iter().map(|r| r[i]).fold(0.0, f64::max);
        record(&mut res, "kernel P vs Spencer P", &label, col(0), Bound::AtMost(tol));
        record(&mut res, "T vs (I-P)T~", &label, col(1), Bound::AtMost(tol));
        record(&mut res, "numeric dbar T f - f", &label, col(2), Bound::AtMost(tol));
        record(&mut res, "numeric T f orthogonality", &label, col(3), Bound::AtMost(tol));
        record(&mut res, "boundary trace of numeric G f", &label, col(4), Bound::AtMost(1e-10));
    }

    // Exact and numeric Sobolev norms of seeded random densities on the disc.
    let grid = ProductGrid::discs(1, cfg.domain.grid)?;
    let indices = criterion_indices();
    let mut rng = family::rng(cfg.seed);
    let mut worst: f64 = 0.0;
    for d in 1..=degree.max(1) {
        let f = family::random_density(&mut rng, 1, d, family::DEFAULT_TERMS)?;
        let fg = sample_to_grid(&f, &grid)?;
        for idx in &indices {
            let e = sobolev_norm(&f, *idx)?.total;
            let n = sobolev_norm(&fg, *idx)?.total;
            worst = worst.max((e - n).abs() / e);
        }
    }
    record(&mut res, "exact vs numeric Sobolev norm (relative)", "disc", worst, Bound::AtMost(1e-6));
    res.tables.push(table);
    Ok(res)
}

fn criterion_indices() -> Vec<SobolevIndex> {
    [(1, 2.0), (1, 4.0), (2, 2.0)]
        .into_iter()
        .map(|(k, p)| SobolevIndex::new(k, p).expect("valid index"))
        .collect()
}

/// The seeded closed forms used by the product suites; member `i` has
/// degree `1 + i mod degree`.
fn closed_family(cfg: &RunConfig, nvars: usize) -> Result<Vec<(u32, Form01<ExactDensity>)>> {
    let mut rng = family::rng(cfg.seed);
    let degree = cfg.domain.degree.max(1);
    (0..cfg.members)
        .map(|i| {
            let d = 1 + (i as u32 % degree);
            let (_, f) = family::random_closed_form(&mut rng, nvars, d, family::DEFAULT_TERMS)?;
            Ok((d, f))
        })
        .collect()
}

fn all_discs(slices: &[SliceDomain]) -> bool {
    slices.iter().all(SliceDomain::is_disc)
}

fn product_solve(cfg: &RunConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::ProductSolve, cfg.seed);
    let tol = cfg.tol_or(1e-8);
    let slices = cfg.domain.build_slices()?;
    let n = slices.len();
    let grid = capped_product_grid(&slices, cfg.domain.grid)?;
    let exact_ok = all_discs(&slices);
    let reversed: Vec<usize> = (0..n).rev().collect();
    let members = closed_family(cfg, n)?;
    let mut table = Table::new(
        "product_solve.csv",
        &[
            "member",
            "degree",
            "closedness",
            "dbar_exact",
            "orth_exact",
            "order_gap_exact",
            "dbar_numeric",
            "orth_numeric",
            "gap_to_exact",
        ],
    );
    let mut worst = [0.0_f64; 7];
    for (i, (d, f)) in members.iter().enumerate() {
        let mut row = [f64::NAN; 7];
        row[0] = crate::product::check_dbar_closed(f)?;
        let exact_u = if exact_ok {
            let sol = canonical_solution_product(f, &slices)?;
            row[1] = dbar_residual(&sol.u, f)?;
            row[2] = orthogonality_residual(&sol.u, ORTHOGONALITY_MAXDEG)?;
            let alt = canonical_solution_ordered(f, &slices, &reversed)?;
            row[3] = alt.u.sub(&sol.u)?.max_abs_coeff()?;
            Some(sol.u)
        } else {
            None
        };
        let fg = Form01::new(f.components().iter().map(|c| sample_to_grid(c, &grid)).collect::<Result<Vec<_>>>()?)?;
        let sol = canonical_solution_product(&fg, &slices)?;
        row[4] = dbar_residual(&sol.u, &fg)?;
        row[5] = orthogonality_residual(&sol.u, ORTHOGONALITY_MAXDEG)?;
        if let Some(u) = exact_u {
            row[6] = sol.u.sub(&sample_to_grid(&u, &grid)?)?.max_abs();
        }
        for (w, v) in worst.iter_mut().zip(row) {
            if v.is_finite() {
                *w = w.max(v);
            }
        }
        let mut cells: Vec<Cell> = vec![i.into(), (*d).into()];
        cells.extend(row.iter().map(|&v| Cell::Float(v)));
        table.push(cells);
    }
    res.check("closedness of the data", worst[0], Bound::Zero);
    if exact_ok {
        res.check("exact dbar residual", worst[1], Bound::Zero);
        res.check("exact orthogonality residual", worst[2], Bound::Zero);
        res.check("exact slice-order consistency", worst[3], Bound::Zero);
        res.check("numeric vs exact solution", worst[6], Bound::AtMost(tol));
    }
    res.check("numeric dbar residual", worst[4], Bound::AtMost(tol));
    res.check("numeric orthogonality residual", worst[5], Bound::AtMost(tol));
    res.tables.push(table);
    Ok(res)
}

fn orthogonality(cfg: &RunConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::Orthogonality, cfg.seed);
    let tol = cfg.tol_or(1e-8);
    let slices = cfg.domain.build_slices()?;
    let n = slices.len();
    let exact_ok = all_discs(&slices);
    let grid = capped_product_grid(&slices, cfg.domain.grid)?;
    let mut table = Table::new("orthogonality.csv", &["member", "degree", "orth_exact", "orth_numeric", "projection_numeric"]);
    let (mut we, mut wn, mut wp): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (i, (d, f)) in closed_family(cfg, n)?.iter().enumerate() {
        let oe = if exact_ok {
            let u = canonical_solution_product(f, &slices)?.u;
            orthogonality_residual(&u, ORTHOGONALITY_MAXDEG)?
        } else {
            f64::NAN
        };
        let fg = Form01::new(f.components().iter().map(|c| sample_to_grid(c, &grid)).collect::<Result<Vec<_>>>()?)?;
        let u = canonical_solution_product(&fg, &slices)?.u;
        let on = orthogonality_residual(&u, ORTHOGONALITY_MAXDEG)?;
        // P of the canonical solution vanishes.
        let pn = bergman_projection_product(&u, &slices)?.max_abs();
        if oe.is_finite() {
            we = we.max(oe);
        }
        wn = wn.max(on);
        wp = wp.max(pn);
        table.push(vec![i.into(), (*d).into(), oe.into(), on.into(), pn.into()]);
    }
    if exact_ok {
        res.check("exact orthogonality residual", we, Bound::Zero);
    }
    res.check("numeric orthogonality residual", wn, Bound::AtMost(tol));
    res.check("numeric projection of the canonical solution", wp, Bound::AtMost(tol));
    res.tables.push(table);

    let mut algebra = Table::new("projection_algebra.csv", &["domain", "basis_size", "idempotence_defect", "adjoint_defect"]);
    for (label, nv) in [("slice", 1), ("product", n)] {
        let (size, idem, adj) = projection_algebra_defects(nv, cfg.domain.degree)?;
        algebra.push(vec![label.into(), size.into(), idem.into(), adj.into()]);
        res.check(format!("exact {label} P idempotence"), idem, Bound::Zero);
        res.check(format!("exact {label} P self-adjointness"), adj, Bound::Zero);
    }
    res.tables.push(algebra);
    Ok(res)
}

/// Largest allowed growth of the max ratio from degree 4 to degree 8.
pub const GROWTH_LIMIT: f64 = 2.0;

fn norm_sweep(cfg: &RunConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::NormSweep, cfg.seed);
    let limit = cfg.tol_or(GROWTH_LIMIT);
    let family = FamilySpec {
        seed: cfg.seed,
        degrees: (1..=cfg.domain.degree.max(1)).collect(),
        ..FamilySpec::default()
    };
    let indices = criterion_indices();
    let top = cfg.domain.degree.min(8);
    for op in SweepOperator::ALL {
        let rows = norm_ratio_sweep(op, &family, &indices)?;
        let mut table = Table::new(
            &format!("norm_sweep_{}.csv", op.name()),
            &["degree", "k", "p", "ratio_max", "ratio_mean", "seed"],
        );
        for r in &rows {
            table.push(vec![r.degree.into(), r.k.into(), r.p.into(), r.ratio_max.into(), r.ratio_mean.into(), r.seed.into()]);
        }
        if top > 4 {
            for idx in &indices {
                if let Some(g) = growth_factor(&rows, idx.k(), idx.p(), 4, top) {
                    res.check(
                        format!("{} growth degree 4 to {top} at (k,p)=({},{})", op.name(), idx.k(), idx.p()),
                        g,
                        Bound::AtMost(limit),
                    );
                }
            }
        }
        res.tables.push(table);
    }
    Ok(res)
}

fn sharpness(cfg: &RunConfig) -> Result<SuiteResult> {
    let mut res = SuiteResult::new(Suite::Sharpness, cfg.seed);
    let s = &cfg.sharpness;
    let report = sharpness_verdict(s)?;
    let mut norms = Table::new("sharpness_norms.csv", &["q", "eps", "norm_q", "diagnostic"]);
    for r in &report.norms {
        norms.push(vec![r.q.into(), r.eps.into(), r.norm_q.into(), (if r.diagnostic { "true" } else { "false" }).into()]);
    }
    let mut obstruction = Table::new("sharpness_obstruction.csv", &["eps", "obstruction_norm_p", "a", "b", "r_squared"]);
    for r in &report.obstruction {
        obstruction.push(vec![
            r.eps.into(),
            r.norm_p.into(),
            report.fit.a.into(),
            report.fit.b.into(),
            report.fit.r_squared.into(),
        ]);
    }
    let tail_tol = cfg.tol_or(crate::sharpness::TAIL_TOL);
    for (q, change) in &report.tail_changes {
        res.check(format!("W^{{{},{q}}} tail change", s.k), *change, Bound::AtMost(tail_tol));
    }
    res.check("log slope b", report.fit.b, Bound::AtLeast(f64::MIN_POSITIVE));
    res.check("log fit R^2", report.fit.r_squared, Bound::AtLeast(crate::sharpness::MIN_R_SQUARED));
    res.check(
        "obstruction increasing",
        if report.obstruction_increasing { 1.0 } else { 0.0 },
        Bound::AtLeast(1.0),
    );
    res.check("circle integral step", report.cauchy_error, Bound::AtMost(crate::sharpness::CAUCHY_TOL));
    res.tables.push(norms);
    res.tables.push(obstruction);
    res.json.push((
        "verdict.json".into(),
        serde_json::json!({
            "k": report.k,
            "p": report.p,
            "verdict": if report.pass { "PASS" } else { "FAIL" },
            "failures": report.failures,
        }),
    ));
    Ok(res)
}

/// Runs a suite and writes its report; the coordinator entry point used by
/// the command line tool.
pub fn run_and_emit(cfg: &RunConfig) -> Result<SuiteResult> {
    let result = run_suite(cfg)?;
    emit_report(&result, &cfg.out)?;
    Ok(result)
}

/// Numeric grid used by the product suites for a configuration.
pub fn product_grid(cfg: &RunConfig) -> Result<Arc<ProductGrid>> {
    capped_product_grid(&cfg.domain.build_slices()?, cfg.domain.grid)
}

fn capped_product_grid(slices: &[SliceDomain], spec: GridSpec) -> Result<Arc<ProductGrid>> {
    let grids = slices
        .iter()
        .map(|d| {
            let limit = if d.is_disc() { PRODUCT_GRID_CAP } else { CONFORMAL_PRODUCT_CAP };
            SliceGrid::new(d.clone(), cap(spec, limit)).map(Arc::new)
        })
        .collect::<Result<Vec<_>>>()?;
    ProductGrid::new(grids)
}

#[doc(hidden)]
pub fn sample_form(f: &Form01<ExactDensity>, grid: &Arc<ProductGrid>) -> Result<Form01<GridFunction>> {
    Form01::new(f.components().iter().map(|c| sample_to_grid(c, grid)).collect::<Result<Vec<_>>>()?)
}
