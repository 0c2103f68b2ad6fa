//! Tables, reports and run manifests.

use std::fmt::Write as _;

use conetest_core::scenario::{mean_rate, SimulationResult};
use conetest_core::testing::{TestReport, STATISTICS};
use conetest_core::power::PowerCurve;

use crate::io::{csv_bytes, full, sig6};

/// Ordered `key = value` record of everything needed to repeat a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.set("program", env!("CARGO_PKG_NAME"));
        m.set("version", env!("CARGO_PKG_VERSION"));
        m.set("command", command);
        m
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Same syntax as `--config` files, so a manifest can be replayed.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| full(*x)).collect::<Vec<_>>().join(",")
}

/// Single-row weight vector.
pub fn weights_csv(weights: &[f64]) -> Vec<u8> {
    format!("{}\n", join(weights)).into_bytes()
}

/// Machine-readable `key,value` listing of a test report.
pub fn test_report_csv(r: &TestReport) -> Vec<u8> {
    let d = &r.diagnostics;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut kv = |k: &str, v: String| rows.push(vec![k.to_string(), v]);
    kv("alternative", if r.one_sided { "one-sided" } else { "two-sided" }.into());
    for (i, name) in STATISTICS.iter().enumerate() {
        kv(&format!("t_{name}"), full(r.statistics()[i]));
        kv(&format!("p_{name}"), full(r.p_values[i]));
        kv(&format!("reject_{name}"), r.reject[i].to_string());
    }
    kv("gamma", full(r.gamma));
    kv("critical", full(r.critical));
    kv("weights", join(r.dist.weights()));
    kv("alpha_hat", join(d.alpha_hat.as_slice()));
    kv("alpha_tilde", join(d.alpha_tilde.as_slice()));
    kv("b_star", join(d.b_star.as_slice()));
    kv("b_m", join(d.b_m.as_slice()));
    kv("b_c", join(d.b_c.as_slice()));
    kv("h_partial", join(d.h_partial.as_slice()));
    kv("lambda", full(d.lambda));
    kv("lambda_prime", full(d.lambda_prime));
    kv("lasso_sweeps", d.lasso_sweeps.to_string());
    if let Some(mc) = d.mc {
        kv("mc_samples", mc.samples.to_string());
        kv("mc_seed", mc.seed.to_string());
    }
    csv_bytes(&["key", "value"], &rows)
}

/// Human-readable test report, six significant digits.
pub fn test_report_text(r: &TestReport) -> String {
    let d = &r.diagnostics;
    let v = |x: &[f64]| x.iter().map(|a| sig6(*a)).collect::<Vec<_>>().join(", ");
    let mut s = String::new();
    let side = if r.one_sided { "one-sided (constrained)" } else { "two-sided (unconstrained)" };
    let _ = writeln!(s, "alternative: {side}");
    let _ = writeln!(s, "alpha_hat:   ({})", v(d.alpha_hat.as_slice()));
    let _ = writeln!(s, "alpha_tilde: ({})", v(d.alpha_tilde.as_slice()));
    let _ = writeln!(s, "null weights: ({})", v(r.dist.weights()));
    let _ = writeln!(s, "critical value at gamma={}: {}", sig6(r.gamma), sig6(r.critical));
    let _ = writeln!(s, "{:<8} {:>12} {:>12}  reject", "test", "statistic", "p-value");
    for (i, name) in STATISTICS.iter().enumerate() {
        let _ = writeln!(
            s,
            "{:<8} {:>12} {:>12}  {}",
            name,
            sig6(r.statistics()[i]),
            sig6(r.p_values[i]),
            if r.reject[i] { "yes" } else { "no" }
        );
    }
    let _ = writeln!(s, "lambda={} lambda'={}", sig6(d.lambda), sig6(d.lambda_prime));
    s
}

const SIM_HEADER: [&str; 12] = [
    "scenario", "p", "n", "rho", "margin", "method", "statistic", "rejections", "replicates", "failures",
    "rate", "std_error",
];

fn sim_rows(res: &SimulationResult, method: &str, counts: [usize; 3], rates: [f64; 3], rows: &mut Vec<Vec<String>>) {
    let sc = &res.scenario;
    let base = |stat: &str| {
        vec![
            sc.kind.name().to_string(),
            sc.p.to_string(),
            sc.n.to_string(),
            full(sc.rho),
            full(sc.margin),
            method.to_string(),
            stat.to_string(),
        ]
    };
    for (i, name) in STATISTICS.iter().enumerate() {
        let mut r = base(name);
        r.extend([
            counts[i].to_string(),
            res.successes().to_string(),
            res.failures.to_string(),
            full(rates[i]),
            full(res.std_error(rates[i])),
        ]);
        rows.push(r);
    }
    let m = mean_rate(&rates);
    let mut r = base("mean");
    r.extend([
        String::new(),
        res.successes().to_string(),
        res.failures.to_string(),
        full(m),
        full(res.std_error(m)),
    ]);
    rows.push(r);
}

/// Long-format rejection table: one row per (margin, method, statistic).
pub fn simulation_csv(results: &[SimulationResult]) -> Vec<u8> {
    let mut rows = Vec::new();
    for res in results {
        sim_rows(res, "constrained", res.constrained.as_array(), res.rates(), &mut rows);
        if let (Some(c), Some(rates)) = (res.standard, res.standard_rates()) {
            sim_rows(res, "standard", c.as_array(), rates, &mut rows);
        }
    }
    csv_bytes(&SIM_HEADER, &rows)
}

/// Wide power table: one row per method, one column per margin (mean of the
/// three statistics).
pub fn power_table_csv(results: &[SimulationResult]) -> Vec<u8> {
    let mut header = vec!["method".to_string()];
    header.extend(results.iter().map(|r| full(r.scenario.margin)));
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let constrained: Vec<String> = std::iter::once("constrained".to_string())
        .chain(results.iter().map(|r| full(mean_rate(&r.rates()))))
        .collect();
    let standard: Vec<String> = std::iter::once("standard".to_string())
        .chain(
            results
                .iter()
                .map(|r| r.standard_rates().map_or(String::new(), |s| full(mean_rate(&s)))),
        )
        .collect();
    csv_bytes(&h, &[constrained, standard])
}

pub fn simulation_text(results: &[SimulationResult]) -> String {
    let mut s = String::new();
    for res in results {
        let sc = &res.scenario;
        let _ = writeln!(
            s,
            "{} p={} n={} rho={} margin={} replicates={} failures={}",
            sc.kind,
            sc.p,
            sc.n,
            sig6(sc.rho),
            sig6(sc.margin),
            res.replicates,
            res.failures
        );
        let line = |rates: [f64; 3]| {
            format!(
                "wald={} lr={} score={} mean={}",
                sig6(rates[0]),
                sig6(rates[1]),
                sig6(rates[2]),
                sig6(mean_rate(&rates))
            )
        };
        let _ = writeln!(s, "  constrained: {}", line(res.rates()));
        if let Some(r) = res.standard_rates() {
            let _ = writeln!(s, "  standard:    {}", line(r));
        }
    }
    s
}

pub fn power_curve_csv(pc: &PowerCurve) -> Vec<u8> {
    let rows: Vec<Vec<String>> = (0..pc.alphas.len())
        .map(|i| {
            vec![
                full(pc.alphas[i]),
                full(pc.power_constrained[i]),
                full(pc.power_standard[i]),
                full(pc.power_constrained[i] - pc.power_standard[i]),
            ]
        })
        .collect();
    csv_bytes(&["alpha", "constrained", "standard", "gap"], &rows)
}
