use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use benders_atoms::bench::{
    aggregate, aggregates_csv, fmt_sig, gap, records_csv, run_bench, timings_csv, BenchConfig,
};
use benders_atoms::benders::{solve_hybrid, traces_from_jsonl, traces_to_jsonl, DriverError, HybridRun, SamplerChoice, SolverConfig};
use benders_atoms::emulator::{embed, Device, PulseParams};
use benders_atoms::model::{brute_force_solve, generate_instances, load_instance, save_instance, GeneratorConfig, SolveStatus};
use benders_atoms::cuts::CutPool;
use benders_atoms::qubo::{build_qubo, BoundSet, PenaltyWeights, Qubo};
use benders_atoms::samplers::AnnealSchedule;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "benders-atoms", version, about = "Hybrid Benders decomposition with QUBO master problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance file and write its iteration trace.
    ///
    /// Exit status: 0 Optimal or Feasible, 2 Infeasible, 3 Unbounded, 1 error.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Also write the first master QUBO (input format of `embed`).
        #[arg(long)]
        dump_qubo: bool,
    },
    /// Write a random instance suite as JSON files.
    Generate {
        #[command(flatten)]
        suite: SuiteArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run every backend on a generated suite and write CSV results.
    ///
    /// records.csv columns: instance, backend, qubits (t of the first master QUBO),
    /// peak_qubits, status (Optimal, Feasible, Infeasible, Unbounded or Error),
    /// objective, optimal_objective (brute force), gap ((objective - optimal)/optimal,
    /// empty when undefined), iterations, termination, seed, error.
    ///
    /// aggregates.csv columns: backend, qubits, instances, feasible_pct, gap_runs,
    /// mean_gap, gap_ci95, mean_iterations, iterations_ci95. Confidence half-widths
    /// use the normal approximation.
    ///
    /// timings.csv columns: instance, backend, wall_ms. It is the only file that
    /// changes between repeated runs with the same seed.
    ///
    /// Numbers are printed with 9 significant digits. BENDERS_ATOMS_THREADS caps
    /// the number of worker threads.
    Bench {
        #[command(flatten)]
        suite: SuiteArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated backends.
        #[arg(long, value_delimiter = ',', default_value = "exact,anneal")]
        backends: Vec<SamplerChoice>,
        /// Only run instances whose first master QUBO fits in this many qubits.
        #[arg(long)]
        max_initial_qubits: Option<usize>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Place atoms for a QUBO file and report the embedding deviation.
    Embed {
        qubo: PathBuf,
        #[arg(long, default_value_t = Device::default().max_atoms)]
        max_atoms: usize,
        #[arg(long, default_value_t = Device::default().c6)]
        c6: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Print a trace file as a table, or sample a pulse as CSV.
    TraceDump {
        /// JSON-lines trace written by `solve`.
        trace: Option<PathBuf>,
        /// Pulse as `omega_max,delta_init,delta_final,duration`; prints time,omega,delta.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "trace")]
        pulse: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 60)]
    count: usize,
    /// Use the full 450-instance suite.
    #[arg(long)]
    full: bool,
    #[arg(long = "suite-seed", default_value_t = 0)]
    suite_seed: u64,
}

impl SuiteArgs {
    fn config(&self) -> GeneratorConfig {
        GeneratorConfig { seed: self.suite_seed, count: if self.full { 450 } else { self.count }, ..Default::default() }
    }
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "exact")]
    sampler: SamplerChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    shots: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 100.0)]
    pi1: f64,
    #[arg(long, default_value_t = 100.0)]
    pi2: f64,
    #[arg(long, default_value_t = 100.0)]
    pi3: f64,
    #[arg(long, default_value_t = 1.0)]
    pi_obj: f64,
    /// Qubit budget; defaults to the device atom limit for the emulator, 64 otherwise.
    #[arg(long)]
    max_qubits: Option<usize>,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Annealing sweeps per bit.
    #[arg(long, default_value_t = AnnealSchedule::default().sweeps_per_bit)]
    sweeps: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let base = SolverConfig::default();
        let max_qubits = self.max_qubits.unwrap_or(match self.sampler {
            SamplerChoice::Emulator => base.emulator.device.max_atoms,
            _ => base.max_qubits,
        });
        SolverConfig {
            sampler: self.sampler,
            weights: PenaltyWeights { pi_obj: self.pi_obj, pi1: self.pi1, pi2: self.pi2, pi3: self.pi3 },
            epsilon: self.epsilon,
            shots: self.shots,
            max_iterations: self.max_iters,
            max_qubits,
            seed: self.seed,
            anneal: AnnealSchedule { sweeps_per_bit: self.sweeps, ..base.anneal },
            ..base
        }
    }
}

type CmdResult = Result<ExitCode, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve { instance, solver, out_dir, dump_qubo } => cmd_solve(&instance, &solver.config(), &out_dir, dump_qubo),
        Command::Generate { suite, out_dir } => cmd_generate(&suite.config(), &out_dir),
        Command::Bench { suite, solver, backends, max_initial_qubits, out_dir } => {
            let cfg = BenchConfig {
                generator: suite.config(),
                backends,
                solver: solver.config(),
                max_initial_qubits,
                threads: None,
            };
            cmd_bench(&cfg, &out_dir)
        }
        Command::Embed { qubo, max_atoms, c6, seed, out_dir } => {
            let device = Device { max_atoms, c6, ..Device::default() };
            cmd_embed(&qubo, &device, seed, &out_dir)
        }
        Command::TraceDump { trace, pulse, steps } => cmd_trace_dump(trace.as_deref(), pulse.as_deref(), steps),
    };
    result.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        ExitCode::from(1)
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))
}

fn instance_id(path: &Path) -> String {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(".milp.json").or_else(|| name.strip_suffix(".json")).unwrap_or(&name).to_string()
}

fn cmd_solve(path: &Path, cfg: &SolverConfig, out_dir: &Path, dump_qubo: bool) -> CmdResult {
    let op = load_instance(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let id = instance_id(path);
    if dump_qubo {
        let bounds = BoundSet::from_problem(&op).map_err(|e| e.to_string())?;
        let model = build_qubo(&op, &CutPool::new(), &cfg.weights, &bounds, cfg.epsilon, usize::MAX).map_err(|e| e.to_string())?;
        write(out_dir, &format!("{id}.qubo.json"), &model.qubo.to_json())?;
    }
    let started = Instant::now();
    let outcome = solve_hybrid(&op, cfg);
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    let run: HybridRun = match outcome {
        Ok(run) => run,
        Err(DriverError::Unbounded) => {
            println!("status=Unbounded objective=inf iterations=0");
            return Ok(ExitCode::from(3));
        }
        Err(DriverError::BudgetExceeded { t, max, partial }) => {
            write(out_dir, &format!("{id}.trace.jsonl"), &traces_to_jsonl(&partial.traces))?;
            return Err(format!("BudgetExceeded: master QUBO needs {t} qubits, budget is {max}"));
        }
        Err(e) => return Err(e.to_string()),
    };
    let s = &run.solution;
    let oracle = brute_force_solve(&op).ok().filter(|o| o.has_solution()).map(|o| o.objective);
    let objective = s.has_solution().then_some(s.objective);
    let summary = format!(
        "instance,status,objective,gap,iterations,qubits,peak_qubits,wall_ms\n{id},{},{},{},{},{},{},{}\n",
        s.status,
        objective.map(fmt_sig).unwrap_or_default(),
        gap(objective, oracle).map(fmt_sig).unwrap_or_default(),
        run.iterations(),
        run.initial_qubits,
        run.peak_qubits,
        fmt_sig(wall_ms)
    );
    write(out_dir, &format!("{id}.trace.jsonl"), &traces_to_jsonl(&run.traces))?;
    write(out_dir, &format!("{id}.summary.csv"), &summary)?;
    println!("status={} objective={:?} iterations={}", s.status, s.objective, run.iterations());
    Ok(match s.status {
        SolveStatus::Optimal | SolveStatus::Feasible => ExitCode::SUCCESS,
        SolveStatus::Infeasible => ExitCode::from(2),
        SolveStatus::Unbounded => ExitCode::from(3),
    })
}

fn cmd_generate(cfg: &GeneratorConfig, out_dir: &Path) -> CmdResult {
    let instances = generate_instances(cfg).map_err(|e| e.to_string())?;
    fs::create_dir_all(out_dir).map_err(|e| format!("{}: {e}", out_dir.display()))?;
    for (i, op) in instances.iter().enumerate() {
        let path = out_dir.join(format!("instance_{i:03}.milp.json"));
        save_instance(op, &path).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    println!("wrote {} instances to {}", instances.len(), out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(cfg: &BenchConfig, out_dir: &Path) -> CmdResult {
    let records = run_bench(cfg).map_err(|e| e.to_string())?;
    let aggregates = aggregate(&records);
    write(out_dir, "records.csv", &records_csv(&records))?;
    write(out_dir, "aggregates.csv", &aggregates_csv(&aggregates))?;
    write(out_dir, "timings.csv", &timings_csv(&records))?;
    for a in &aggregates {
        println!(
            "backend={} qubits={} instances={} feasible_pct={} mean_gap={} mean_iterations={}",
            a.backend,
            a.qubits,
            a.instances,
            fmt_sig(a.feasible_pct),
            a.mean_gap.map(fmt_sig).unwrap_or_default(),
            fmt_sig(a.mean_iterations)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_embed(path: &Path, device: &Device, seed: u64, out_dir: &Path) -> CmdResult {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let qubo = Qubo::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let emb = embed(&qubo, device, seed).map_err(|e| e.to_string())?;
    write(out_dir, "register.json", &emb.register.to_json())?;
    println!("atoms={} deviation={} locally_optimal={}", emb.register.len(), fmt_sig(emb.deviation), emb.locally_optimal);
    Ok(ExitCode::SUCCESS)
}

fn cmd_trace_dump(trace: Option<&Path>, pulse: Option<&[f64]>, steps: usize) -> CmdResult {
    if let Some(p) = pulse {
        if p.len() != 4 {
            return Err(format!("--pulse takes 4 values, got {}", p.len()));
        }
        if steps == 0 {
            return Err("--steps must be positive".into());
        }
        let params = PulseParams { omega_max: p[0], delta_init: p[1], delta_final: p[2], duration: p[3] };
        params.validate(&Device::default()).map_err(|e| e.to_string())?;
        print!("{}", params.trace_csv(steps));
        return Ok(ExitCode::SUCCESS);
    }
    let path = trace.ok_or("give a trace file or --pulse")?;
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let traces = traces_from_jsonl(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    println!("iter  qubits  x           phi         obj         sp_status   sp_obj      cut");
    for t in &traces {
        let x: String = t.master.x.iter().map(|b| char::from(b'0' + b)).collect();
        println!(
            "{:<5} {:<7} {:<11} {:<11} {:<11} {:<11} {:<11} {:?}{}",
            t.index,
            t.qubits,
            x,
            fmt_sig(t.master.phi),
            fmt_sig(t.master.obj),
            t.subproblem.status,
            t.subproblem.objective.map(fmt_sig).unwrap_or_else(|| "-".into()),
            t.cut_added,
            if t.master.fallback { " (fallback)" } else { "" }
        );
    }
    Ok(ExitCode::SUCCESS)
}
