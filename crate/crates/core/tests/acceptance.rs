//! Acceptance criteria 1-8. Runs as a plain binary so the verdict lines are
//! always printed; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use dbar_core::family;
use dbar_core::green::{bergman_kernel, green, sample_pairs, MIN_PAIR_SEPARATION};
use dbar_core::harness::{self, Bound, GoldenStatus, RunConfig, Suite, SuiteResult};
use dbar_core::product::{bergman_projection_product, canonical_solution_product};
use dbar_core::sharpness::SharpnessConfig;
use dbar_core::{Complex64, SliceDomain};

struct Run {
    result: SuiteResult,
    elapsed: Duration,
    dir: PathBuf,
}

fn run(suite: Suite, dir: &Path) -> Run {
    let cfg = RunConfig::new(suite, dir);
    let start = Instant::now();
    let result = harness::run_and_emit(&cfg).unwrap_or_else(|e| panic!("{suite}: {e}"));
    Run {
        result,
        elapsed: start.elapsed(),
        dir: dir.to_path_buf(),
    }
}

fn value(r: &SuiteResult, name: &str) -> f64 {
    r.checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("{}: no check named '{name}'", r.suite))
        .value
}

struct Verdict {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn at_most(&mut self, what: &str, v: f64, bound: f64) {
        self.notes.push(format!("{what} = {v:.3e}"));
        if !(v <= bound) {
            self.failures.push(format!("{what} = {v:e} > {bound:e}"));
        }
    }

    fn zero(&mut self, what: &str, v: f64) {
        self.notes.push(format!("{what} = {v}"));
        if v != 0.0 {
            self.failures.push(format!("{what} = {v:e}, expected exactly 0"));
        }
    }

    fn holds(&mut self, what: &str, ok: bool) {
        if !ok {
            self.failures.push(what.to_string());
        }
    }

    fn runtime(&mut self, elapsed: Duration, limit_s: f64) {
        let s = elapsed.as_secs_f64();
        self.notes.push(format!("runtime {s:.2}s"));
        if s >= limit_s {
            self.failures.push(format!("runtime {s:.2}s >= {limit_s}s"));
        }
    }
}

/// `-4 ∂_z ∂_w̄ g` by central differences of the full Green function.
fn mixed_by_central_differences(slice: &SliceDomain, z: Complex64, w: Complex64) -> Complex64 {
    let h = 1e-4;
    let g = |dz: Complex64, dw: Complex64| green(slice, z + dz, w + dw).unwrap();
    let e = [Complex64::new(h, 0.0), Complex64::new(0.0, h)];
    let mut d = [[0.0; 2]; 2];
    for (a, ea) in e.iter().enumerate() {
        for (b, eb) in e.iter().enumerate() {
            d[a][b] = (g(*ea, *eb) - g(*ea, -*eb) - g(-*ea, *eb) + g(-*ea, -*eb)) / (4.0 * h * h);
        }
    }
    // ∂_z = (∂_x - i∂_y)/2 on z, ∂_w̄ = (∂_u + i∂_v)/2 on w.
    let mixed = Complex64::new(d[0][0] + d[1][1], d[0][1] - d[1][0]) / 4.0;
    -4.0 * mixed
}

fn criterion_1(r: &Run, v: &mut Verdict) {
    v.at_most("suite residual", value(&r.result, "kernel-green identity on disc"), 1e-4);
    let disc = SliceDomain::disc();
    let pairs = sample_pairs(&disc, 100, 0.9, MIN_PAIR_SEPARATION, family::DEFAULT_SEED);
    v.holds("100 pairs", pairs.len() == 100);
    v.holds("separation >= 0.05", pairs.iter().all(|(z, w)| (z - w).norm() >= 0.05));
    let worst = pairs
        .iter()
        .map(|&(z, w)| {
            let k = bergman_kernel(&disc, z, w).unwrap();
            (mixed_by_central_differences(&disc, z, w) - k).norm() / k.norm()
        })
        .fold(0.0, f64::max);
    v.at_most("oracle residual", worst, 1e-4);
    v.runtime(r.elapsed, 1.0);
}

fn criterion_2(r: &Run, v: &mut Verdict) {
    v.zero("exact residual", value(&r.result, "exact spencer residual"));
    let table = fs::read_to_string(r.dir.join("spencer_exact.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    v.holds("81 exact monomials", rows.len() == 81);
    v.holds("every exact row is zero", rows.iter().all(|l| l.ends_with(",0.0000000000000000e0")));
    v.at_most("numeric residual", value(&r.result, "numeric spencer residual on disc"), 1e-6);
    v.runtime(r.elapsed, 10.0);
}

fn criterion_3(r: &Run, v: &mut Verdict) {
    let res = &r.result;
    v.zero("exact dbar", value(res, "exact dbar residual"));
    v.zero("exact orthogonality", value(res, "exact orthogonality residual"));
    v.at_most("numeric dbar", value(res, "numeric dbar residual"), 1e-8);
    v.at_most("numeric orthogonality", value(res, "numeric orthogonality residual"), 1e-8);
    let table = fs::read_to_string(r.dir.join("product_solve.csv")).unwrap();
    v.holds("50 forms", table.lines().count() == 51);
    // Oracle: for f = ∂̄u the canonical solution is u - Pu.
    let slices = vec![SliceDomain::disc(); 2];
    let mut rng = family::rng(family::DEFAULT_SEED);
    let mut worst: f64 = 0.0;
    for i in 0..50u32 {
        let (u, f) = family::random_closed_form(&mut rng, 2, 1 + i % 8, family::DEFAULT_TERMS).unwrap();
        let expect = u.sub(&bergman_projection_product(&u, &slices).unwrap()).unwrap();
        let got = canonical_solution_product(&f, &slices).unwrap().u;
        worst = worst.max(got.sub(&expect).unwrap().max_abs_coeff().unwrap());
    }
    v.zero("u - Pu oracle", worst);
    v.runtime(r.elapsed, 60.0);
}

fn criterion_4(r: &Run, v: &mut Verdict) {
    let res = &r.result;
    v.at_most("kernel P vs Spencer P", value(res, "kernel P vs Spencer P on disc"), 1e-8);
    v.at_most("T vs (I-P)T~", value(res, "T vs (I-P)T~ on disc"), 1e-8);
    v.zero("exact T vs (I-P)T~", value(res, "exact T vs (I-P)T~ on disc"));
    v.at_most("Sobolev exact vs numeric", value(res, "exact vs numeric Sobolev norm (relative) on disc"), 1e-6);
}

fn criterion_5(r: &Run, v: &mut Verdict) {
    for name in [
        "exact slice P idempotence",
        "exact slice P self-adjointness",
        "exact product P idempotence",
        "exact product P self-adjointness",
    ] {
        v.zero(name, value(&r.result, name));
    }
    let table = fs::read_to_string(r.dir.join("projection_algebra.csv")).unwrap();
    let sizes: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    v.holds("degree-8 bases of size 81 and 6561", sizes == ["81", "6561"]);
}

fn criterion_6(r: &Run, v: &mut Verdict, golden: &Path) {
    let growth: Vec<_> = r.result.checks.iter().filter(|c| c.name.contains("growth")).collect();
    v.holds("12 growth factors", growth.len() == 12);
    let worst = growth.iter().map(|c| c.value).fold(0.0, f64::max);
    v.at_most("largest growth 4 to 8", worst, 2.0);
    for c in &growth {
        v.holds(&format!("{} bounded by 2", c.name), matches!(c.bound, Bound::AtMost(b) if b == 2.0) && c.value <= 2.0);
    }
    let cfg = RunConfig::new(Suite::NormSweep, &r.dir);
    match harness::compare_goldens(&r.result, &cfg, golden).unwrap() {
        GoldenStatus::Matched { files } => v.holds("four golden baselines", files == 4),
        other => v.holds(&format!("golden baselines: {other:?}"), false),
    }
    let header = fs::read_to_string(r.dir.join("norm_sweep_slice-t.csv")).unwrap();
    v.holds("sweep columns", header.lines().next() == Some("degree,k,p,ratio_max,ratio_mean,seed"));
}

fn criterion_7(r: &Run, v: &mut Verdict) {
    let res = &r.result;
    let cfg = SharpnessConfig::default();
    v.holds("(k,p) = (1,4), q in {2,3}", cfg.k == 1 && cfg.p == 4.0 && cfg.q_list == [2.0, 3.0]);
    v.holds("eps in 1e-2..1e-5", cfg.eps_list == [1e-2, 1e-3, 1e-4, 1e-5]);
    for q in ["2", "3"] {
        v.at_most(&format!("W^{{1,{q}}} tail"), value(res, &format!("W^{{1,{q}}} tail change")), 0.01);
    }
    v.at_most("Cauchy step", value(res, "circle integral step"), 1e-10);

    // Oracle: ‖∂₂v‖^p over {|z₂-1| > ε} = (π ln(1/ε) + 2∫_0^{ε/2} asin(x)/x dx)/(2p+1).
    let table = fs::read_to_string(r.dir.join("sharpness_obstruction.csv")).unwrap();
    let rows: Vec<(f64, f64)> = table
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            (c[0], c[1])
        })
        .collect();
    let mut worst: f64 = 0.0;
    for &(eps, norm) in &rows {
        let y = eps / 2.0;
        let exact = (PI * (1.0 / eps).ln() + 2.0 * (y + y.powi(3) / 18.0 + 3.0 * y.powi(5) / 200.0)) / 9.0;
        worst = worst.max((norm - exact).abs() / exact);
    }
    v.at_most("obstruction vs closed form", worst, 1e-8);
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| (1.0 / r.0).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    v.notes.push(format!("b = {b:.4}, R^2 = {r2:.8}"));
    v.holds("b > 0", b > 0.0);
    v.holds("R^2 >= 0.99", r2 >= 0.99);
    v.at_most("suite slope vs oracle fit", (value(res, "log slope b") - b).abs() / b, 1e-9);
    let verdict = fs::read_to_string(r.dir.join("verdict.json")).unwrap();
    v.holds("verdict.json says PASS", verdict.contains("\"verdict\": \"PASS\""));
    v.runtime(r.elapsed, 120.0);
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn main() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../golden");
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let runs: Vec<(Suite, Run)> = Suite::ALL.into_iter().map(|s| (s, run(s, &first.path().join(s.name())))).collect();
    let get = |s: Suite| &runs.iter().find(|(t, _)| *t == s).unwrap().1;

    let mut verdicts: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut add = |id, title, f: &dyn Fn(&mut Verdict)| {
        let mut v = Verdict::new();
        f(&mut v);
        verdicts.push((id, title, v));
    };
    add(1, "kernel-Green identity", &|v| criterion_1(get(Suite::KernelCheck), v));
    add(2, "Spencer identity", &|v| criterion_2(get(Suite::SpencerCheck), v));
    add(3, "canonical contract on the bidisc", &|v| criterion_3(get(Suite::ProductSolve), v));
    add(4, "two-path agreements", &|v| criterion_4(get(Suite::SliceIdentities), v));
    add(5, "projection algebra", &|v| criterion_5(get(Suite::Orthogonality), v));
    add(6, "boundedness probes", &|v| criterion_6(get(Suite::NormSweep), v, &golden));
    add(7, "sharpness example", &|v| criterion_7(get(Suite::Sharpness), v));
    add(8, "determinism", &|v| {
        for (s, r) in &runs {
            let again = run(*s, &second.path().join(s.name()));
            v.holds(&format!("{s} files byte-identical"), dir_bytes(&r.dir) == dir_bytes(&again.dir));
        }
        v.notes.push("7 suites run twice".into());
    });

    let mut all = true;
    for (id, title, v) in &verdicts {
        let pass = v.failures.is_empty();
        all &= pass;
        println!("criterion {id} [{}] {title}: {}", if pass { "PASS" } else { "FAIL" }, v.notes.join("; "));
        for f in &v.failures {
            println!("    {f}");
        }
    }
    if !all {
        std::process::exit(1);
    }
}
