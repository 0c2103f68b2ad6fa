//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails. Pass criterion numbers as arguments to run a subset.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode, Stdio};
use std::time::{Duration, Instant};

use common::oracles::{dantzig_oracle, kkt_residual, random_cone};
use common::{gaussian_matrix, gaussian_vector, median, random_dataset, random_pd};
use conetest::harness::{self, HarnessConfig};
use conetest_core::chibar::{self, ChiBarDist, McConfig};
use conetest_core::cones::{self, builtin_cone, BuiltinCone, Region};
use conetest_core::dantzig::{self, DantzigConfig};
use conetest_core::lasso::{self, LassoConfig};
use conetest_core::model::ParamPartition;
use conetest_core::power;
use conetest_core::rng;
use conetest_core::scenario::{mean_rate, Scenario, ScenarioKind};
use conetest_core::special::{norm_cdf, norm_quantile};
use conetest_core::testing::{self, Hypothesis, TestConfig};
use conetest_core::{linalg, Matrix};

/// Master seed for the simulation criteria, fixed before any run.
const SEED: u64 = 42;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_secs: u64, detail: String) -> Outcome {
    let detail = format!("{detail}; {:.1}s (limit {limit_secs}s)", elapsed.as_secs_f64());
    check(elapsed.as_secs() < limit_secs, detail)
}

fn exact_binomial(d: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..d {
        let mut next = vec![1.0; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
    }
    let scale = 0.5f64.powi(d as i32);
    row.iter().map(|c| c * scale).collect()
}

fn c1_binomial_weights() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut exact_ok = true;
    for d in 1..=8 {
        let oracle = exact_binomial(d);
        let closed = chibar::weights_orthant(&Matrix::identity(d, d), &McConfig::default()).map_err(|e| e.to_string())?;
        exact_ok &= closed.weights() == oracle.as_slice();
        let general = chibar::weights_orthant_general(&Matrix::identity(d, d), &McConfig::new(100_000, SEED + d as u64))
            .map_err(|e| e.to_string())?;
        for (g, o) in general.weights().iter().zip(&oracle) {
            worst = worst.max((g - o).abs());
        }
    }
    let detail = format!("closed form exact: {exact_ok}; general path max error {worst:.2e} (tol 5e-3)");
    if !(exact_ok && worst <= 0.005) {
        return Err(detail);
    }
    within(start.elapsed(), 30, detail)
}

fn c2_weight_oracle() -> Outcome {
    let start = Instant::now();
    let (orthant, _) = builtin_cone(BuiltinCone::Nonnegative, 3).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for case in 0..5u64 {
        let mut r = rng::stream_at(SEED, case);
        let v = random_pd(&mut r, 3, 0.2);
        let dist = chibar::weights_orthant(&v, &McConfig::new(100_000, rng::derive_seed(SEED, 100 + case)))
            .map_err(|e| e.to_string())?;
        let sample = chibar::chibar_sample(&v, &Region::Cone(orthant.clone()), 200_000, rng::derive_seed(SEED, 200 + case))
            .map_err(|e| e.to_string())?;
        worst = worst.max(chibar::ks_distance(&sample, &dist));
    }
    let detail = format!("max KS distance {worst:.4} over 5 matrices (tol 0.01)");
    if worst > 0.01 {
        return Err(detail);
    }
    within(start.elapsed(), 120, detail)
}

fn c3_critical_value() -> Outcome {
    let start = Instant::now();
    let dist = ChiBarDist::new(vec![0.5, 0.5], "d = 1").map_err(|e| e.to_string())?;
    let c = chibar::critical_value(&dist, 0.05).map_err(|e| e.to_string())?;
    let oracle = norm_quantile(0.95).powi(2);
    let round = chibar::chibar_tail(&dist, c);
    let detail = format!("c = {c:.6} (oracle {oracle:.6}), tail(c) − 0.05 = {:.1e}", round - 0.05);
    if !((c - oracle).abs() <= 1e-4 && (c - 2.70554).abs() <= 1e-4 && (round - 0.05).abs() <= 1e-9) {
        return Err(detail);
    }
    within(start.elapsed(), 1, detail)
}

fn c4_scalar_identity() -> Outcome {
    let start = Instant::now();
    let hyp = Hypothesis::one_sided(builtin_cone(BuiltinCone::Nonnegative, 1).map_err(|e| e.to_string())?.0);
    let mut worst = 0.0f64;
    for case in 0..100u64 {
        let mut r = rng::stream_at(SEED, 1000 + case);
        let (n, p) = (40 + (case as usize % 5) * 20, 5 + (case as usize % 7) * 5);
        let data = random_dataset(&mut r, n, p, 1.0);
        let part = ParamPartition::new(vec![case as usize % p], p).map_err(|e| e.to_string())?;
        let rep = testing::run_test(&data, &part, &hyp, 0.05, &TestConfig::default()).map_err(|e| e.to_string())?;
        let h = rep.diagnostics.h_partial[(0, 0)];
        let a = rep.diagnostics.alpha_tilde[0];
        let oracle = 1.0 - norm_cdf((n as f64 * h).sqrt() * a.max(0.0));
        worst = worst.max((rep.p_values[0] - oracle).abs());
    }
    let detail = format!("max |p − (1 − Φ(√(nĤ)·max(α̃, 0)))| = {worst:.1e} over 100 instances (tol 1e-8)");
    if worst > 1e-8 {
        return Err(detail);
    }
    within(start.elapsed(), 10, detail)
}

fn c5_type1() -> Outcome {
    let start = Instant::now();
    let cfg = HarnessConfig::new(500, 0.05, SEED);
    let mut cells = Vec::new();
    let mut ok = true;
    for rho in [0.2, 0.8] {
        let s = Scenario::new(ScenarioKind::Monotonic, 200, 100, rho, 0.0).map_err(|e| e.to_string())?;
        let res = harness::run_type1(&s, &cfg).map_err(|e| e.to_string())?;
        let rates = res.rates();
        ok &= res.failures == 0 && rates.iter().all(|r| (0.025..=0.085).contains(r));
        cells.push(format!(
            "rho={rho}: wald {:.3} lr {:.3} score {:.3} (failures {})",
            rates[0], rates[1], rates[2], res.failures
        ));
    }
    let detail = format!("{} (band [0.025, 0.085])", cells.join(", "));
    if !ok {
        return Err(detail);
    }
    within(start.elapsed(), 15 * 60, detail)
}

fn c6_power() -> Outcome {
    let start = Instant::now();
    let margins = [0.0, 0.2, 0.5, 1.0];
    let ours = [0.045, 0.211, 0.597, 0.988];
    let standard = [0.047, 0.138, 0.488, 0.978];
    let s = Scenario::new(ScenarioKind::Monotonic, 200, 100, 0.8, 0.0).map_err(|e| e.to_string())?;
    let results = harness::run_power(&s, &margins, &HarnessConfig::new(500, 0.05, SEED)).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut cells = Vec::new();
    for (i, res) in results.iter().enumerate() {
        let c = mean_rate(&res.rates());
        let st = mean_rate(&res.standard_rates().ok_or("standard method missing")?);
        ok &= res.failures == 0 && (c - ours[i]).abs() <= 0.06 && (st - standard[i]).abs() <= 0.06;
        if margins[i] > 0.0 {
            ok &= c >= st - 2.0 * res.std_error(st);
        }
        cells.push(format!("m={}: {c:.3}/{st:.3} (ref {}/{})", margins[i], ours[i], standard[i]));
    }
    let detail = format!("constrained/standard {} (tol 0.06)", cells.join(", "));
    if !ok {
        return Err(detail);
    }
    within(start.elapsed(), 30 * 60, detail)
}

fn c7_equivalence() -> Outcome {
    let start = Instant::now();
    let s = Scenario::new(ScenarioKind::Monotonic, 2000, 10, 0.5, 0.0).map_err(|e| e.to_string())?;
    let res = harness::run_type1(&s, &HarnessConfig::new(200, 0.05, SEED)).map_err(|e| e.to_string())?;
    let dl = median(res.statistics.iter().map(|t| (t[1] - t[0]).abs()).collect());
    let ds = median(res.statistics.iter().map(|t| (t[2] - t[0]).abs()).collect());
    let detail = format!(
        "median |T_L − T_w| = {dl:.2e}, median |T_s − T_w| = {ds:.2e} (tol 0.05; {}s)",
        start.elapsed().as_secs()
    );
    check(res.failures == 0 && dl <= 0.05 && ds <= 0.05, detail)
}

fn c8_analytic_power() -> Outcome {
    let start = Instant::now();
    let mut min_gap = f64::INFINITY;
    let mut null_exact = true;
    for gamma in [0.01, 0.05, 0.1] {
        for i in 1..=500 {
            let a = 5.0 * i as f64 / 500.0;
            min_gap = min_gap.min(power::gap(a, gamma).map_err(|e| e.to_string())?);
        }
        null_exact &= power::power_scalar(0.0, gamma).map_err(|e| e.to_string())?.constrained == gamma;
    }
    let alphas = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0];
    let mc = power::power_vector_mc(1, &alphas, 0.05, 100_000, SEED).map_err(|e| e.to_string())?;
    let exact = power::power_curve_scalar(&alphas, 0.05).map_err(|e| e.to_string())?;
    let mut worst_z = 0.0f64;
    for i in 0..alphas.len() {
        for (m, e) in [
            (mc.power_constrained[i], exact.power_constrained[i]),
            (mc.power_standard[i], exact.power_standard[i]),
        ] {
            let se = mc.std_error(e);
            if se > 0.0 {
                worst_z = worst_z.max((m - e).abs() / se);
            }
        }
    }
    let detail = format!("min f = {min_gap:.2e}, size exact: {null_exact}, max MC deviation {worst_z:.2} SE (tol 3)");
    if !(min_gap > 0.0 && null_exact && worst_z <= 3.0) {
        return Err(detail);
    }
    within(start.elapsed(), 60, detail)
}

fn c9_solvers() -> Outcome {
    let start = Instant::now();
    let mut lasso_worst = 0.0f64;
    for case in 0..100u64 {
        let mut r = rng::stream_at(SEED, 2000 + case);
        let (n, p) = (10 + (case as usize * 7) % 60, 3 + (case as usize * 13) % 80);
        let data = random_dataset(&mut r, n, p, 1.0);
        let lambda = lasso::default_lambda(n, p, 0.5 + (case % 4) as f64 * 0.5);
        let fit = lasso::lasso_solve(&data, &LassoConfig::new(lambda).map_err(|e| e.to_string())?, None)
            .map_err(|e| e.to_string())?;
        lasso_worst = lasso_worst.max(fit.kkt_residual);
    }

    let mut dz_worst = 0.0f64;
    for case in 0..50u64 {
        let mut r = rng::stream_at(SEED, 3000 + case);
        let q = 1 + (case as usize % 4);
        let a = gaussian_matrix(&mut r, q + 3, q);
        let htt = linalg::symmetrize(&(a.transpose() * &a / (q + 3) as f64 + Matrix::identity(q, q) * 0.05));
        let v = gaussian_vector(&mut r, q);
        let lambda = 0.05 + 0.1 * (case % 3) as f64;
        let w = dantzig::dantzig_solve(&htt, &v, &DantzigConfig::new(lambda).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let infeasible = (dantzig::constraint_residual(&htt, &v, &w) - lambda).max(0.0);
        dz_worst = dz_worst.max(infeasible).max((w.lp_norm(1) - dantzig_oracle(&htt, &v, lambda)).abs());
    }

    let (mut kkt_worst, mut pyth_worst) = (0.0f64, 0.0f64);
    for case in 0..200u64 {
        let mut r = rng::stream_at(SEED, 4000 + case);
        let d = 1 + (case as usize % 5);
        let k = (1 + (case as usize / 5) % 3).min(d);
        let v = random_pd(&mut r, d, 0.2);
        let cone = random_cone(&mut r, d, k, case % 2 == 0);
        let y = gaussian_vector(&mut r, d) * 2.0;
        let p = cones::project_cone(&y, &v, &cone).map_err(|e| e.to_string())?;
        kkt_worst = kkt_worst.max(kkt_residual(&y, &v, &cone, &p));
        // Pythagoras about a vertex c of the cone (R c = r).
        let rm = cone.r_mat();
        let c = rm.transpose() * (rm * rm.transpose()).lu().solve(cone.offset()).ok_or("singular R Rᵀ")?;
        let vinv = linalg::spd_inverse(&v, "V").map_err(|e| e.to_string())?;
        let total = linalg::quad_form(&(&y - &c), &vinv);
        let split = linalg::quad_form(&(&p.point - &c), &vinv) + linalg::quad_form(&(&y - &p.point), &vinv);
        pyth_worst = pyth_worst.max((total - split).abs());
    }
    let detail = format!(
        "lasso KKT {lasso_worst:.1e} (tol 1e-6), dantzig {dz_worst:.1e} (tol 1e-6), \
         projection KKT {kkt_worst:.1e} (tol 1e-10), Pythagoras {pyth_worst:.1e} (tol 1e-8)"
    );
    if !(lasso_worst <= 1e-6 && dz_worst <= 1e-6 && kkt_worst <= 1e-10 && pyth_worst <= 1e-8) {
        return Err(detail);
    }
    within(start.elapsed(), 120, detail)
}

fn c10_determinism() -> Outcome {
    let run = |dir: &std::path::Path| -> Result<(Vec<u8>, Vec<u8>), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_conetest"))
            .args(["--seed", "2024", "--out-dir"])
            .arg(dir)
            .args(["simulate", "--scenario", "sum", "--p", "40", "--n", "100", "--rho", "0.5"])
            .args(["--replicates", "40", "--margins", "0,0.3"])
            .stdout(Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("simulate exited with {status}"));
        }
        let read = |name: &str| std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"));
        Ok((read("simulate.csv")?, read("simulate_power.csv")?))
    };
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (ra, rb) = (run(a.path())?, run(b.path())?);
    check(
        ra == rb && !ra.0.is_empty(),
        format!("two runs, {} + {} CSV bytes, identical: {}", ra.0.len(), ra.1.len(), ra == rb),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("binomial weights", c1_binomial_weights),
        ("weight/oracle agreement", c2_weight_oracle),
        ("critical value", c3_critical_value),
        ("scalar-test identity", c4_scalar_identity),
        ("type-I error", c5_type1),
        ("power", c6_power),
        ("statistic equivalence", c7_equivalence),
        ("analytic power", c8_analytic_power),
        ("solver properties", c9_solvers),
        ("determinism", c10_determinism),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("acceptance {id} {name}: PASS: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("acceptance {id} {name}: FAIL: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
