use benders_atoms::bench::{aggregate_by_backend, run_bench, BenchConfig};
use benders_atoms::benders::{solve_hybrid, traces_from_jsonl, traces_to_jsonl, CutAdded, SamplerChoice, SolverConfig, Termination};
use benders_atoms::model::{generate_instances, load_instance, save_instance, GeneratorConfig, OriginalProblem, SolveStatus};
use benders_atoms::subproblem::{solve_subproblem, SubproblemOutcome};

fn suite(count: usize, seed: u64) -> Vec<OriginalProblem> {
    generate_instances(&GeneratorConfig { count, seed, ..Default::default() }).unwrap()
}

#[test]
fn poc_trace_two_iterations() {
    let op = OriginalProblem::poc();
    let run = solve_hybrid(&op, &SolverConfig::default()).unwrap();
    let [first, second] = &run.traces[..] else { panic!("{} iterations", run.traces.len()) };
    assert_eq!(first.master.x, vec![0, 1]);
    assert_eq!(first.subproblem.objective, Some(11.0));
    assert_eq!(first.cut_added, CutAdded::Optimality);
    assert_eq!(run.cuts.optimality[0].constant, 11.0);
    assert_eq!(second.master.x, vec![1, 0]);
    assert_eq!(second.master.phi, 17.0);
    assert_eq!(second.subproblem.objective, Some(17.0));
    assert_eq!(second.cut_added, CutAdded::None);
    assert_eq!(run.termination, Termination::Converged);
}

#[test]
fn exact_runs_keep_driver_invariants() {
    let cfg = SolverConfig::default();
    let eps = cfg.effective_eps_conv().unwrap();
    for (i, op) in suite(30, 7).iter().enumerate() {
        let run = solve_hybrid(op, &cfg).unwrap();
        for t in &run.traces {
            let obj = op.linear_x(&t.master.x) + t.master.phi;
            assert!((t.master.obj - obj).abs() < 1e-9, "#{i}");
        }
        // φ at the master optimum never rises across optimality cuts.
        let phis: Vec<f64> = run.traces.iter().map(|t| t.master.phi_effective).collect();
        for w in phis.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "#{i}: {phis:?}");
        }
        if run.solution.status == SolveStatus::Optimal {
            let last = run.traces.last().unwrap();
            let SubproblemOutcome::Feasible { mu, .. } = solve_subproblem(op, &last.master.x).unwrap() else { panic!("#{i}") };
            let rhs = op.residual_rhs(&last.master.x);
            let value: f64 = rhs.iter().zip(&mu).map(|(r, m)| r * m).sum();
            assert!(value >= last.master.phi_effective - eps - 1e-9, "#{i}: {value} vs {}", last.master.phi_effective);
        }
    }
}

#[test]
fn anneal_replay_and_trace_file() {
    let op = suite(1, 11).remove(0);
    let cfg = SolverConfig { sampler: SamplerChoice::Anneal, shots: 40, seed: 9, ..Default::default() };
    let a = solve_hybrid(&op, &cfg).unwrap();
    let b = solve_hybrid(&op, &cfg).unwrap();
    let strip = |r: &benders_atoms::benders::HybridRun| r.traces.iter().map(|t| t.without_times()).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.trace.jsonl");
    std::fs::write(&path, traces_to_jsonl(&a.traces)).unwrap();
    let back = traces_from_jsonl(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, a.traces);
}

#[test]
fn instance_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    for (i, op) in suite(5, 3).iter().enumerate() {
        let path = dir.path().join(format!("{i}.milp.json"));
        save_instance(op, &path).unwrap();
        assert_eq!(&load_instance(&path).unwrap(), op);
    }
}

#[test]
fn bench_exact_dominates_anneal() {
    let mut cfg = BenchConfig {
        generator: GeneratorConfig { count: 20, seed: 1, ..Default::default() },
        backends: vec![SamplerChoice::Exact, SamplerChoice::Anneal],
        ..Default::default()
    };
    cfg.solver.shots = 50;
    let records = run_bench(&cfg).unwrap();
    assert_eq!(records.len(), 40);
    let by = aggregate_by_backend(&records);
    let exact = by.iter().find(|a| a.backend == SamplerChoice::Exact).unwrap();
    let anneal = by.iter().find(|a| a.backend == SamplerChoice::Anneal).unwrap();
    assert_eq!(exact.feasible_pct, 100.0);
    assert!(anneal.feasible_pct <= 100.0);
    for r in records.iter().filter(|r| r.backend == SamplerChoice::Exact) {
        let (obj, opt) = (r.objective.unwrap(), r.optimal_objective.unwrap());
        assert!((obj - opt).abs() <= 0.5, "instance {}: {obj} vs {opt}", r.instance);
    }
}
