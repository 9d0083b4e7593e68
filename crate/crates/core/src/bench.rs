//! Backend comparison over generated suites: per-run records, per-qubit
//! aggregates and their CSV form.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benders::{solve_hybrid, DriverError, HybridRun, SamplerChoice, SolverConfig, Termination};
use crate::model::{brute_force_solve, generate_instances, GeneratorConfig, MilpSolution, ModelError, OriginalProblem, SolveStatus};
use crate::qubo::{qubit_count, BoundSet};
use crate::cuts::CutPool;

/// Environment variable capping the bench thread count.
pub const THREADS_ENV: &str = "BENDERS_ATOMS_THREADS";

/// Column order of `records.csv`.
pub const RECORD_COLUMNS: [&str; 12] = [
    "instance",
    "backend",
    "qubits",
    "peak_qubits",
    "status",
    "objective",
    "optimal_objective",
    "gap",
    "iterations",
    "termination",
    "seed",
    "error",
];

/// Column order of `aggregates.csv`.
pub const AGGREGATE_COLUMNS: [&str; 9] = [
    "backend",
    "qubits",
    "instances",
    "feasible_pct",
    "gap_runs",
    "mean_gap",
    "gap_ci95",
    "mean_iterations",
    "iterations_ci95",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub instance: usize,
    pub backend: SamplerChoice,
    /// `t` of the first master QUBO.
    pub qubits: usize,
    pub peak_qubits: usize,
    /// `None` when the run failed with an error.
    pub status: Option<SolveStatus>,
    pub objective: Option<f64>,
    pub optimal_objective: Option<f64>,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub termination: Option<Termination>,
    pub seed: u64,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl BenchRecord {
    pub fn feasible(&self) -> bool {
        matches!(self.status, Some(SolveStatus::Optimal | SolveStatus::Feasible))
    }
}

/// `(obj − opt)/opt`, or `None` when either side is missing or `opt = 0`.
pub fn gap(objective: Option<f64>, optimal: Option<f64>) -> Option<f64> {
    match (objective, optimal) {
        (Some(a), Some(o)) if o != 0.0 => Some((a - o) / o),
        _ => None,
    }
}

fn finite(s: &MilpSolution) -> Option<f64> {
    s.has_solution().then_some(s.objective)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub backend: SamplerChoice,
    pub qubits: usize,
    pub instances: usize,
    pub feasible_pct: f64,
    /// Runs where both the backend and the oracle found a solution.
    pub gap_runs: usize,
    pub mean_gap: Option<f64>,
    pub gap_ci95: Option<f64>,
    pub mean_iterations: f64,
    pub iterations_ci95: f64,
}

/// Mean and 95% normal-approximation half-width (zero for a single value).
pub fn mean_ci95(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, 1.96 * (var / n).sqrt()))
}

fn summarize(backend: SamplerChoice, qubits: usize, group: &[&BenchRecord]) -> Aggregate {
    let feasible = group.iter().filter(|r| r.feasible()).count();
    let gaps: Vec<f64> = group.iter().filter_map(|r| r.gap).collect();
    let iters: Vec<f64> = group.iter().map(|r| r.iterations as f64).collect();
    let gap_stats = mean_ci95(&gaps);
    let (mean_iterations, iterations_ci95) = mean_ci95(&iters).unwrap_or((0.0, 0.0));
    Aggregate {
        backend,
        qubits,
        instances: group.len(),
        feasible_pct: 100.0 * feasible as f64 / group.len().max(1) as f64,
        gap_runs: gaps.len(),
        mean_gap: gap_stats.map(|s| s.0),
        gap_ci95: gap_stats.map(|s| s.1),
        mean_iterations,
        iterations_ci95,
    }
}

/// Per backend, per initial qubit count, in backend then qubit order.
pub fn aggregate(records: &[BenchRecord]) -> Vec<Aggregate> {
    let mut keys: Vec<(SamplerChoice, usize)> = records.iter().map(|r| (r.backend, r.qubits)).collect();
    keys.sort_by_key(|&(b, q)| (b as u8, q));
    keys.dedup();
    keys.into_iter()
        .map(|(b, q)| {
            let group: Vec<&BenchRecord> = records.iter().filter(|r| r.backend == b && r.qubits == q).collect();
            summarize(b, q, &group)
        })
        .collect()
}

/// One row per backend over every record of that backend.
pub fn aggregate_by_backend(records: &[BenchRecord]) -> Vec<Aggregate> {
    let mut backends: Vec<SamplerChoice> = records.iter().map(|r| r.backend).collect();
    backends.sort_by_key(|&b| b as u8);
    backends.dedup();
    backends
        .into_iter()
        .map(|b| {
            let group: Vec<&BenchRecord> = records.iter().filter(|r| r.backend == b).collect();
            let max_q = group.iter().map(|r| r.qubits).max().unwrap_or(0);
            summarize(b, max_q, &group)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub generator: GeneratorConfig,
    pub backends: Vec<SamplerChoice>,
    /// Template for every run; its seed is the master seed.
    pub solver: SolverConfig,
    /// Skip instances whose first QUBO has more qubits than this.
    pub max_initial_qubits: Option<usize>,
    pub threads: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            backends: vec![SamplerChoice::Exact, SamplerChoice::Anneal],
            solver: SolverConfig::default(),
            max_initial_qubits: None,
            threads: None,
        }
    }
}

/// Seed for one run, independent of scheduling order.
pub fn run_seed(master: u64, instance: usize, backend: SamplerChoice) -> u64 {
    let mut z = master ^ ((instance as u64) << 8) ^ (backend as u64 + 1).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `t` of the first master QUBO, or `None` when it cannot be built.
pub fn initial_qubits(op: &OriginalProblem, cfg: &SolverConfig) -> Option<usize> {
    let bounds = BoundSet::from_problem(op).ok()?;
    qubit_count(op, &CutPool::new(), &cfg.weights, &bounds, cfg.epsilon).ok()
}

/// Runs one instance on one backend. Budget exits keep the best point found.
pub fn run_one(id: usize, op: &OriginalProblem, oracle: Option<&MilpSolution>, backend: SamplerChoice, template: &SolverConfig) -> BenchRecord {
    let seed = run_seed(template.seed, id, backend);
    let cfg = SolverConfig { sampler: backend, seed, ..*template };
    let started = Instant::now();
    let outcome = solve_hybrid(op, &cfg);
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let optimal_objective = oracle.and_then(finite);
    let mut rec = BenchRecord {
        instance: id,
        backend,
        qubits: initial_qubits(op, &cfg).unwrap_or(0),
        peak_qubits: 0,
        status: None,
        objective: None,
        optimal_objective,
        gap: None,
        iterations: 0,
        termination: None,
        seed,
        wall_ms,
        error: None,
    };
    let run: Result<HybridRun, DriverError> = match outcome {
        Err(DriverError::BudgetExceeded { partial, t, max }) => {
            rec.error = Some(format!("qubit budget exceeded ({t} > {max})"));
            Ok(*partial)
        }
        other => other,
    };
    match run {
        Ok(run) => {
            rec.peak_qubits = run.peak_qubits;
            rec.status = Some(run.solution.status);
            rec.objective = finite(&run.solution);
            rec.gap = gap(rec.objective, optimal_objective);
            rec.iterations = run.iterations();
            rec.termination = Some(run.termination);
        }
        Err(DriverError::Unbounded) => rec.status = Some(SolveStatus::Unbounded),
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}

/// Every instance × backend, records in instance then backend order.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>, ModelError> {
    let instances = generate_instances(&cfg.generator)?;
    let threads = cfg.threads.or_else(threads_from_env).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ModelError::Config(format!("thread pool: {e}")))?;
    let selected: Vec<(usize, &OriginalProblem)> = instances
        .iter()
        .enumerate()
        .filter(|(_, op)| cfg.max_initial_qubits.map_or(true, |m| initial_qubits(op, &cfg.solver).is_some_and(|t| t <= m)))
        .collect();
    let nested: Vec<Result<Vec<BenchRecord>, ModelError>> = pool.install(|| {
        selected
            .par_iter()
            .map(|&(id, op)| {
                let oracle = brute_force_solve(op)?;
                Ok(cfg.backends.iter().map(|&b| run_one(id, op, Some(&oracle), b, &cfg.solver)).collect())
            })
            .collect()
    });
    let mut out = Vec::new();
    for group in nested {
        out.extend(group?);
    }
    Ok(out)
}

/// Reads the thread cap; unset, empty or zero means no cap.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

/// Nine significant digits, shortest form (like C's `%.9g`).
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

fn termination_name(t: Option<Termination>) -> String {
    t.map(|t| format!("{t:?}")).unwrap_or_default()
}

/// `records.csv` content. Wall times are left out so equal seeds give equal bytes.
pub fn records_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RECORD_COLUMNS).expect("in-memory write");
    for r in records {
        w.write_record([
            r.instance.to_string(),
            r.backend.to_string(),
            r.qubits.to_string(),
            r.peak_qubits.to_string(),
            r.status.map(|s| s.to_string()).unwrap_or_else(|| "Error".into()),
            opt(r.objective),
            opt(r.optimal_objective),
            opt(r.gap),
            r.iterations.to_string(),
            termination_name(r.termination),
            r.seed.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

pub fn aggregates_csv(aggregates: &[Aggregate]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AGGREGATE_COLUMNS).expect("in-memory write");
    for a in aggregates {
        w.write_record([
            a.backend.to_string(),
            a.qubits.to_string(),
            a.instances.to_string(),
            fmt_sig(a.feasible_pct),
            a.gap_runs.to_string(),
            opt(a.mean_gap),
            opt(a.gap_ci95),
            fmt_sig(a.mean_iterations),
            fmt_sig(a.iterations_ci95),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// `timings.csv` content: instance, backend, wall_ms.
pub fn timings_csv(records: &[BenchRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "backend", "wall_ms"]).expect("in-memory write");
    for r in records {
        w.write_record([r.instance.to_string(), r.backend.to_string(), fmt_sig(r.wall_ms)]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}
