use benders_atoms::bench::fmt_sig;
use benders_atoms::cuts::{make_optimality_cut, CutPool};
use benders_atoms::emulator::{evolve, Device, PulseParams, Register};
use benders_atoms::lp::{solve, LinearProgram, LpResult, RowSense, Sense};
use benders_atoms::model::{generate_instances, GeneratorConfig, OriginalProblem};
use benders_atoms::qubo::{build_qubo, BinaryEncoding, BoundSet, PenaltyWeights, Qubo};
use benders_atoms::samplers::{anneal, exact_minimize, AnnealSchedule, SampleSet, SamplerConfig};
use benders_atoms::subproblem::{solve_subproblem, SubproblemOutcome};
use proptest::prelude::*;

fn instance(seed: u64) -> OriginalProblem {
    generate_instances(&GeneratorConfig { seed, count: 1, ..Default::default() }).unwrap().remove(0)
}

fn bits(len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_roundtrip(lb in -40.0f64..0.0, ub in 0.0f64..40.0, frac in 0usize..4, pick in 0.0f64..1.0) {
        let enc = BinaryEncoding::sized(lb, ub, frac, 0);
        let step = enc.resolution();
        // Bit counts follow floor(log2 bound) + 1, so coverage is exact to one
        // step above and to one unit below (negative bits are integral).
        prop_assert!(enc.min_value() <= lb + 1.0);
        prop_assert!(enc.max_value() >= ub - step);
        let v = enc.min_value() + ((pick * (enc.max_value() - enc.min_value())) / step).floor() * step;
        let z = enc.encode(v).expect("grid value encodes");
        prop_assert_eq!(z.len(), enc.bits());
        prop_assert!((enc.value(&z) - v).abs() < 1e-9);
    }

    #[test]
    fn qubo_matrix_matches_hamiltonian(seed in 0u64..500, raw in bits(64)) {
        let op = instance(seed);
        let bounds = BoundSet::from_problem(&op).unwrap();
        let mut cuts = CutPool::new();
        let x: Vec<u8> = (0..op.n).map(|j| raw[j]).collect();
        if let SubproblemOutcome::Feasible { mu, .. } = solve_subproblem(&op, &x).unwrap() {
            cuts.add(make_optimality_cut(&mu, &op)).unwrap();
        }
        let model = build_qubo(&op, &cuts, &PenaltyWeights::default(), &bounds, 0.5, 128).unwrap();
        let z: Vec<u8> = raw.iter().cycle().take(model.t()).copied().collect();
        let by_matrix = model.qubo.cost(&z);
        let by_terms = model.hamiltonian(&z).unwrap();
        prop_assert!((by_matrix - by_terms).abs() <= 1e-7 * (1.0 + by_terms.abs()), "{} vs {}", by_matrix, by_terms);
        prop_assert!(model.qubo.is_symmetric(0.0));
    }

    #[test]
    fn flip_delta_is_cost_difference(entries in prop::collection::vec((0usize..8, 0usize..8, -5.0f64..5.0), 1..20), z in bits(8), i in 0usize..8) {
        let upper: Vec<(usize, usize, f64)> = entries.into_iter().map(|(a, b, v)| (a.min(b), a.max(b), v)).collect();
        let q = Qubo::from_upper(8, 1.5, &upper);
        let mut flipped = z.clone();
        flipped[i] ^= 1;
        prop_assert!((q.flip_delta(&z, i) - (q.cost(&flipped) - q.cost(&z))).abs() < 1e-9);
    }

    #[test]
    fn exact_minimum_beats_every_state(entries in prop::collection::vec((0usize..7, 0usize..7, -5.0f64..5.0), 1..20), z in bits(7)) {
        let upper: Vec<(usize, usize, f64)> = entries.into_iter().map(|(a, b, v)| (a.min(b), a.max(b), v)).collect();
        let q = Qubo::from_upper(7, 0.0, &upper);
        let (best, cost) = exact_minimize(&q).unwrap();
        prop_assert!((q.cost(&best) - cost).abs() < 1e-9);
        prop_assert!(cost <= q.cost(&z) + 1e-9);
    }

    #[test]
    fn anneal_costs_are_consistent(entries in prop::collection::vec((0usize..6, 0usize..6, -5.0f64..5.0), 1..12), seed in 0u64..1000) {
        let upper: Vec<(usize, usize, f64)> = entries.into_iter().map(|(a, b, v)| (a.min(b), a.max(b), v)).collect();
        let q = Qubo::from_upper(6, 0.0, &upper);
        let cfg = SamplerConfig { shots: 16, seed, anneal: AnnealSchedule { sweeps_per_bit: 20, ..AnnealSchedule::default() } };
        let set: SampleSet = anneal(&q, &cfg).unwrap();
        prop_assert_eq!(set.entries.iter().map(|e| e.count).sum::<usize>(), 16);
        for w in set.entries.windows(2) {
            prop_assert!(w[0].cost <= w[1].cost);
        }
        for e in &set.entries {
            prop_assert!((q.cost(&e.bits) - e.cost).abs() < 1e-9);
        }
        prop_assert_eq!(anneal(&q, &cfg).unwrap(), set);
    }

    #[test]
    fn lp_optimum_satisfies_duality(
        cols in 1usize..6,
        rows in prop::collection::vec((prop::collection::vec(-4i32..=4, 6), 0i32..10), 1..6),
        obj in prop::collection::vec(-4i32..=4, 6),
    ) {
        let mut lp = LinearProgram::new(Sense::Max, obj[..cols].iter().map(|&v| v as f64).collect());
        for (coeffs, rhs) in &rows {
            lp.add_row(coeffs[..cols].iter().map(|&v| v as f64).collect(), RowSense::Le, *rhs as f64);
        }
        for j in 0..cols {
            lp.set_bounds(j, 0.0, 3.0);
        }
        // Boxed with x = 0 feasible, so always optimal.
        match solve(&lp).unwrap() {
            LpResult::Optimal(sol) => {
                prop_assert!(lp.primal_residual(&sol.primal) < 1e-7);
                prop_assert!((sol.objective - sol.dual_objective(&lp)).abs() < 1e-6 * (1.0 + sol.objective.abs()));
            }
            other => prop_assert!(false, "unexpected {}", other.status_name()),
        }
    }

    #[test]
    fn subproblem_duals_certify(seed in 0u64..300, mask in 0u32..32) {
        let op = instance(seed);
        let x: Vec<u8> = (0..op.n).map(|j| (mask >> j & 1) as u8).collect();
        if let SubproblemOutcome::Feasible { objective, mu, y } = solve_subproblem(&op, &x).unwrap() {
            prop_assert!(mu.iter().all(|&m| m >= -1e-9));
            let cut = make_optimality_cut(&mu, &op);
            prop_assert!((cut.value(&x) - objective).abs() < 1e-6 * (1.0 + objective.abs()));
            prop_assert!(op.is_feasible(&x, &y) || !op.master_feasible(&x));
        }
    }

    #[test]
    fn sig_format_roundtrips(v in -1e12f64..1e12) {
        let s = fmt_sig(v);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - v).abs() <= 1e-8 * v.abs().max(1e-300), "{} -> {}", v, s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolution_keeps_norm(
        xs in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 1..5),
        omega in 1.0f64..12.0,
        di in -20.0f64..0.0,
        df in 0.0f64..20.0,
        duration in 0.5f64..3.0,
    ) {
        // Spread points onto a coarse grid so they respect the minimum distance.
        let positions: Vec<[f64; 2]> = xs.iter().enumerate().map(|(k, &(a, b))| [a.round() + 50.0 * k as f64 / 10.0, b.round()]).collect();
        let dev = Device { max_radius: 100.0, ..Device::default() };
        prop_assume!(Register::new(positions.clone(), &dev).is_ok());
        let reg = Register::new(positions, &dev).unwrap();
        let pulse = PulseParams { omega_max: omega, delta_init: di, delta_final: df, duration };
        let res = evolve(&reg, &pulse, duration / 500.0).unwrap();
        let total: f64 = res.probabilities().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(res.norm_drift <= 1e-6);
    }
}
