//! The hybrid Benders loop: build the master QUBO, sample it, pick a
//! candidate, solve the subproblem, add a cut or stop.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cuts::{make_feasibility_cut, make_optimality_cut, CutKind, CutPool};
use crate::emulator::EmulatorSampler;
use crate::lp::LpError;
use crate::model::{MilpSolution, ModelError, OriginalProblem, SolveStatus, CONSTRAINT_TOL};
use crate::qubo::{build_qubo, phi_fraction_bits, BinaryEncoding, BoundSet, DecodedMaster, PenaltyWeights, QuboError, QuboModel};
use crate::samplers::{AnnealSampler, AnnealSchedule, ExactSampler, SampleSet, Sampler, SamplerConfig, SamplerError};
use crate::subproblem::{solve_subproblem, RelaxationError, SubproblemOutcome};

/// Ties in master objective closer than this fall through to QUBO cost.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    Exact,
    Anneal,
    Emulator,
}

impl fmt::Display for SamplerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerChoice::Exact => "exact",
            SamplerChoice::Anneal => "anneal",
            SamplerChoice::Emulator => "emulator",
        })
    }
}

impl FromStr for SamplerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SamplerChoice::Exact),
            "anneal" => Ok(SamplerChoice::Anneal),
            "emulator" => Ok(SamplerChoice::Emulator),
            other => Err(format!("unknown sampler `{other}` (expected exact, anneal or emulator)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub sampler: SamplerChoice,
    pub weights: PenaltyWeights,
    pub epsilon: f64,
    pub shots: usize,
    pub max_iterations: usize,
    pub eps_conv: f64,
    pub max_qubits: usize,
    pub seed: u64,
    pub anneal: AnnealSchedule,
    pub emulator: EmulatorSampler,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerChoice::Exact,
            weights: PenaltyWeights::default(),
            epsilon: 0.5,
            shots: 500,
            max_iterations: 50,
            eps_conv: 1e-6,
            max_qubits: 64,
            seed: 0,
            anneal: AnnealSchedule::default(),
            emulator: EmulatorSampler::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        if self.max_iterations == 0 {
            return Err(DriverError::Config("max_iterations must be at least 1".into()));
        }
        if !(self.eps_conv > 0.0) {
            return Err(DriverError::Config("convergence tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Convergence tolerance actually used: never finer than half a step of `φ`.
    pub fn effective_eps_conv(&self) -> Result<f64, QuboError> {
        let d = phi_fraction_bits(self.epsilon)?;
        Ok(self.eps_conv.max(0.5 * 2f64.powi(-(d as i32))))
    }

    fn sampler(&self) -> Box<dyn Sampler> {
        match self.sampler {
            SamplerChoice::Exact => Box::new(ExactSampler),
            SamplerChoice::Anneal => Box::new(AnnealSampler),
            SamplerChoice::Emulator => Box::new(self.emulator),
        }
    }

    fn sampler_config(&self, iteration: usize) -> SamplerConfig {
        // Distinct, reproducible stream per iteration.
        let seed = self.seed ^ (iteration as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        SamplerConfig { shots: self.shots, seed, anneal: self.anneal }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutAdded {
    Optimality,
    Feasibility,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The subproblem asked for a cut already in the pool.
    Stalled,
    /// The candidate violates the master rows and yields no new cut.
    NoMasterFeasibleCandidate,
    /// The LP relaxation is infeasible, hence so is the MILP.
    RelaxationInfeasible,
    BudgetExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboSummary {
    pub t: usize,
    pub constant: f64,
    pub nonzeros: usize,
    pub phi_encoding: BinaryEncoding,
    pub optimality_cuts: usize,
    pub feasibility_cuts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterTrace {
    pub x: Vec<u8>,
    pub phi: f64,
    /// `φ` capped by the stored optimality cuts at `x`.
    pub phi_effective: f64,
    pub master_slacks: Vec<f64>,
    pub cut_slacks: Vec<f64>,
    pub penalty_residuals: Vec<f64>,
    pub qubo_cost: f64,
    /// `cᵀx + φ`.
    pub obj: f64,
    pub master_feasible: bool,
    /// No sample passed the master rows and feasibility cuts; the lowest-cost one was used.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemTrace {
    pub status: String,
    pub objective: Option<f64>,
    pub y: Vec<f64>,
    /// `μ` when feasible, `r` when infeasible.
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub build_ms: f64,
    pub sample_ms: f64,
    pub subproblem_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub index: usize,
    pub qubits: usize,
    pub qubo: QuboSummary,
    pub master: MasterTrace,
    pub subproblem: SubproblemTrace,
    pub cut_added: CutAdded,
    pub times: PhaseTimes,
}

impl IterationTrace {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    /// Copy with wall times zeroed, for replay comparisons.
    pub fn without_times(&self) -> Self {
        Self { times: PhaseTimes::default(), ..self.clone() }
    }
}

pub fn traces_to_jsonl(traces: &[IterationTrace]) -> String {
    traces.iter().map(|t| t.to_json_line() + "\n").collect()
}

pub fn traces_from_jsonl(text: &str) -> Result<Vec<IterationTrace>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

#[derive(Debug, Clone)]
pub struct HybridRun {
    pub solution: MilpSolution,
    pub traces: Vec<IterationTrace>,
    pub termination: Termination,
    pub initial_qubits: usize,
    pub peak_qubits: usize,
    pub cuts: CutPool,
}

impl HybridRun {
    pub fn iterations(&self) -> usize {
        self.traces.len()
    }
}

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("qubit budget exceeded: model needs {t} qubits, limit is {max}")]
    BudgetExceeded { t: usize, max: usize, partial: Box<HybridRun> },
    #[error("problem is unbounded")]
    Unbounded,
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Qubo(QuboError),
    #[error(transparent)]
    Sampler(SamplerError),
}

/// A decoded sample chosen as `x̂`.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub decoded: DecodedMaster,
    pub phi_effective: f64,
    pub fallback: bool,
}

/// Among samples with `Bx ≤ b′` that satisfy every stored feasibility cut,
/// the one with the largest `cᵀx + φ`, where `φ` is capped by the stored
/// optimality cuts at `x`. Ties go to lower QUBO cost, then smaller bits.
/// Without such a sample, the lowest-cost sample is returned flagged.
pub fn select_candidate(samples: &SampleSet, model: &QuboModel, op: &OriginalProblem, cuts: &CutPool) -> Candidate {
    let mut best: Option<(f64, Candidate)> = None;
    // Entries are sorted by cost then bits, so the first among equals wins.
    for s in &samples.entries {
        let dec = model.decode(&s.bits).expect("sample length matches model");
        if !op.master_feasible(&dec.x) || !cuts.feasibility_ok(&dec.x, CONSTRAINT_TOL) {
            continue;
        }
        let phi_eff = cuts.phi_cap(&dec.x).map_or(dec.phi, |cap| dec.phi.min(cap));
        let score = op.linear_x(&dec.x) + phi_eff;
        if best.as_ref().map_or(true, |(b, _)| score > b + RANK_TOL) {
            best = Some((score, Candidate { decoded: dec, phi_effective: phi_eff, fallback: false }));
        }
    }
    best.map(|(_, c)| c).unwrap_or_else(|| {
        let first = samples.best().expect("sample set is nonempty");
        let dec = model.decode(&first.bits).expect("sample length matches model");
        let phi_eff = cuts.phi_cap(&dec.x).map_or(dec.phi, |cap| dec.phi.min(cap));
        Candidate { decoded: dec, phi_effective: phi_eff, fallback: true }
    })
}

fn summary(model: &QuboModel, cuts: &CutPool) -> QuboSummary {
    QuboSummary {
        t: model.t(),
        constant: model.qubo.constant,
        nonzeros: model.qubo.upper_entries().len(),
        phi_encoding: model.phi_encoding(),
        optimality_cuts: cuts.optimality.len(),
        feasibility_cuts: cuts.feasibility.len(),
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn better(a: &MilpSolution, b: Option<&MilpSolution>) -> bool {
    b.map_or(true, |b| a.objective > b.objective + RANK_TOL)
}

fn finish(incumbent: Option<MilpSolution>, status_if_found: SolveStatus) -> MilpSolution {
    match incumbent {
        Some(mut s) => {
            s.status = status_if_found;
            s
        }
        None => MilpSolution::infeasible(),
    }
}

/// Runs the hybrid loop.
///
/// On convergence the better of `x̂` and the best feasible point seen so far
/// is returned as Optimal. Max-iteration, stall and no-candidate exits return
/// that best point as Feasible, or Infeasible when there is none.
pub fn solve_hybrid(op: &OriginalProblem, cfg: &SolverConfig) -> Result<HybridRun, DriverError> {
    op.validate()?;
    cfg.validate()?;
    cfg.weights.validate().map_err(DriverError::Qubo)?;
    let eps_conv = cfg.effective_eps_conv().map_err(DriverError::Qubo)?;
    let bounds = match BoundSet::from_problem(op) {
        Ok(b) => b,
        Err(RelaxationError::Infeasible) => {
            return Ok(HybridRun {
                solution: MilpSolution::infeasible(),
                traces: Vec::new(),
                termination: Termination::RelaxationInfeasible,
                initial_qubits: 0,
                peak_qubits: 0,
                cuts: CutPool::new(),
            })
        }
        Err(RelaxationError::Unbounded) => return Err(DriverError::Unbounded),
        Err(RelaxationError::Lp(e)) => return Err(e.into()),
    };
    let sampler = cfg.sampler();
    let mut cuts = CutPool::new();
    let mut traces: Vec<IterationTrace> = Vec::new();
    let mut incumbent: Option<MilpSolution> = None;
    let (mut initial_qubits, mut peak_qubits) = (0, 0);

    macro_rules! run {
        ($solution:expr, $termination:expr) => {
            HybridRun {
                solution: $solution,
                traces,
                termination: $termination,
                initial_qubits,
                peak_qubits,
                cuts,
            }
        };
    }

    for index in 1..=cfg.max_iterations {
        let started = Instant::now();
        let model = match build_qubo(op, &cuts, &cfg.weights, &bounds, cfg.epsilon, cfg.max_qubits) {
            Ok(m) => m,
            Err(QuboError::Size { t, max }) => {
                if index == 1 {
                    initial_qubits = t;
                }
                let partial = run!(finish(incumbent, SolveStatus::Feasible), Termination::BudgetExceeded);
                return Err(DriverError::BudgetExceeded { t, max, partial: Box::new(partial) });
            }
            Err(e) => return Err(DriverError::Qubo(e)),
        };
        if index == 1 {
            initial_qubits = model.t();
        }
        peak_qubits = peak_qubits.max(model.t());
        let build_ms = ms(started);

        let started = Instant::now();
        let samples = match sampler.sample(&model, &cfg.sampler_config(index)) {
            Ok(s) => s,
            Err(SamplerError::Size { t, max }) => {
                let partial = run!(finish(incumbent, SolveStatus::Feasible), Termination::BudgetExceeded);
                return Err(DriverError::BudgetExceeded { t, max, partial: Box::new(partial) });
            }
            Err(e) => return Err(DriverError::Sampler(e)),
        };
        let sample_ms = ms(started);

        let cand = select_candidate(&samples, &model, op, &cuts);
        let x = cand.decoded.x.clone();
        let master_feasible = op.master_feasible(&x);
        let started = Instant::now();
        let outcome = solve_subproblem(op, &x)?;
        let subproblem_ms = ms(started);

        let master = MasterTrace {
            x: x.clone(),
            phi: cand.decoded.phi,
            phi_effective: cand.phi_effective,
            master_slacks: cand.decoded.master_slacks.clone(),
            cut_slacks: cand.decoded.cut_slacks.clone(),
            penalty_residuals: cand.decoded.penalty_residuals.clone(),
            qubo_cost: cand.decoded.qubo_cost,
            obj: cand.decoded.objective(&op.c),
            master_feasible,
            fallback: cand.fallback,
        };
        let mut trace = IterationTrace {
            index,
            qubits: model.t(),
            qubo: summary(&model, &cuts),
            master,
            subproblem: SubproblemTrace { status: String::new(), objective: None, y: Vec::new(), multipliers: Vec::new() },
            cut_added: CutAdded::None,
            times: PhaseTimes { build_ms, sample_ms, subproblem_ms },
        };

        let (cut, converged_solution) = match outcome {
            SubproblemOutcome::Unbounded { .. } => return Err(DriverError::Unbounded),
            SubproblemOutcome::Infeasible { ray } => {
                trace.subproblem = SubproblemTrace { status: "Infeasible".into(), objective: None, y: Vec::new(), multipliers: ray.clone() };
                (Some(make_feasibility_cut(&ray, op)), None)
            }
            SubproblemOutcome::Feasible { y, objective, mu } => {
                trace.subproblem = SubproblemTrace {
                    status: "Feasible".into(),
                    objective: Some(objective),
                    y: y.clone(),
                    multipliers: mu.clone(),
                };
                let point = MilpSolution { objective: op.objective(&x, &y), x: x.clone(), y, status: SolveStatus::Optimal };
                if master_feasible && better(&point, incumbent.as_ref()) {
                    incumbent = Some(point.clone());
                }
                if objective < cand.phi_effective - eps_conv {
                    (Some(make_optimality_cut(&mu, op)), None)
                } else {
                    (None, Some(point))
                }
            }
        };

        if let Some(point) = converged_solution {
            traces.push(trace);
            if !master_feasible {
                return Ok(run!(finish(incumbent, SolveStatus::Feasible), Termination::NoMasterFeasibleCandidate));
            }
            let solution = match incumbent {
                Some(inc) if better(&inc, Some(&point)) => MilpSolution { status: SolveStatus::Optimal, ..inc },
                _ => point,
            };
            return Ok(run!(solution, Termination::Converged));
        }

        let cut = cut.expect("cut when not converged");
        let kind = cut.kind;
        let added = cuts.add(cut);
        trace.cut_added = match (&added, kind) {
            (Err(_), _) => CutAdded::None,
            (Ok(()), CutKind::Optimality) => CutAdded::Optimality,
            (Ok(()), CutKind::Feasibility) => CutAdded::Feasibility,
        };
        traces.push(trace);
        if added.is_err() {
            return Ok(run!(finish(incumbent, SolveStatus::Feasible), Termination::Stalled));
        }
    }
    Ok(run!(finish(incumbent, SolveStatus::Feasible), Termination::MaxIterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::brute_force_solve;
    use crate::samplers::Sample;

    #[test]
    fn poc_two_iterations() {
        let op = OriginalProblem::poc();
        let run = solve_hybrid(&op, &SolverConfig::default()).unwrap();
        assert_eq!(run.termination, Termination::Converged);
        assert_eq!(run.iterations(), 2);
        assert_eq!(run.solution.status, SolveStatus::Optimal);
        assert_eq!(run.solution.x, vec![1, 0]);
        assert!((run.solution.objective - 2.0).abs() < 1e-9);
        let last = run.traces.last().unwrap();
        assert_eq!(last.master.phi, 17.0);
        assert_eq!(run.traces[0].master.x, vec![0, 1]);
        assert_eq!(run.traces[0].master.phi, 31.5);
        assert_eq!(run.traces[0].qubits, 9);
        assert_eq!(run.traces[0].cut_added, CutAdded::Optimality);
        assert_eq!(run.traces[0].subproblem.objective, Some(11.0));
        for t in &run.traces {
            let obj = op.linear_x(&t.master.x) + t.master.phi;
            assert!((t.master.obj - obj).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_everywhere() {
        // Linking row 0·x + y ≤ −1 cannot hold for y ≥ 0; relaxation is infeasible.
        let op = OriginalProblem {
            n: 2,
            p: 1,
            m1: 1,
            m2: 1,
            a: vec![vec![0.0, 0.0]],
            g: vec![vec![1.0]],
            b: vec![-1.0],
            b_mat: vec![vec![1.0, 1.0]],
            b_prime: vec![1.0],
            c: vec![1.0, 1.0],
            h: vec![1.0],
        };
        assert_eq!(brute_force_solve(&op).unwrap().status, SolveStatus::Infeasible);
        let run = solve_hybrid(&op, &SolverConfig::default()).unwrap();
        assert_eq!(run.solution.status, SolveStatus::Infeasible);
    }

    #[test]
    fn binary_infeasibility_found_by_cuts() {
        // The relaxation is feasible at x = ½ but every binary x breaks a linking row:
        // x₁ ≥ 0.5 and x₁ ≤ 0.5 expressed through y.
        let op = OriginalProblem {
            n: 1,
            p: 1,
            m1: 2,
            m2: 0,
            a: vec![vec![-2.0], vec![2.0]],
            g: vec![vec![1.0], vec![1.0]],
            b: vec![-1.0, 1.0],
            b_mat: vec![],
            b_prime: vec![],
            c: vec![1.0],
            h: vec![0.0],
        };
        assert_eq!(brute_force_solve(&op).unwrap().status, SolveStatus::Infeasible);
        let run = solve_hybrid(&op, &SolverConfig::default()).unwrap();
        assert_eq!(run.solution.status, SolveStatus::Infeasible);
        assert!(run.iterations() <= 1 << (op.n + 1));
    }

    #[test]
    fn no_linking_rows() {
        let mut op = OriginalProblem {
            n: 1,
            p: 1,
            m1: 0,
            m2: 0,
            a: vec![],
            g: vec![],
            b: vec![],
            b_mat: vec![],
            b_prime: vec![],
            c: vec![1.0],
            h: vec![1.0],
        };
        assert!(matches!(solve_hybrid(&op, &SolverConfig::default()), Err(DriverError::Unbounded)));
        op.h = vec![0.0];
        let run = solve_hybrid(&op, &SolverConfig::default()).unwrap();
        assert_eq!(run.iterations(), 1);
        assert_eq!(run.traces[0].master.phi, 0.0);
        assert_eq!(run.solution.objective, 1.0);
    }

    #[test]
    fn budget_exceeded_carries_state() {
        let op = OriginalProblem::poc();
        let cfg = SolverConfig { max_qubits: 9, ..Default::default() };
        match solve_hybrid(&op, &cfg) {
            Err(DriverError::BudgetExceeded { t, max: 9, partial }) => {
                assert!(t > 9);
                assert_eq!(partial.traces.len(), 1);
                // x̂ = (0,1) is feasible with objective −10 + 11.
                assert_eq!(partial.solution.status, SolveStatus::Feasible);
                assert!((partial.solution.objective - 1.0).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn candidate_prefers_master_objective() {
        let op = OriginalProblem::poc();
        let bounds = BoundSet::from_problem(&op).unwrap();
        let model = build_qubo(&op, &CutPool::new(), &PenaltyWeights::default(), &bounds, 0.5, 64).unwrap();
        let enc = |x: [u8; 2], phi: f64, s: u8| {
            let mut z = x.to_vec();
            z.extend(model.phi_encoding().encode(phi).unwrap());
            z.push(s);
            z
        };
        let shots = vec![enc([0, 0], 0.0, 0), enc([1, 0], 10.0, 1), enc([0, 1], 31.5, 1), enc([0, 1], 31.5, 1)];
        let set = SampleSet::from_shots(&model.qubo, shots);
        let cand = select_candidate(&set, &model, &op, &CutPool::new());
        assert!(!cand.fallback);
        assert_eq!(cand.decoded.x, vec![0, 1]);
        assert_eq!(cand.decoded.phi, 31.5);
    }

    #[test]
    fn candidate_fallback_is_lowest_cost() {
        let op = OriginalProblem::poc();
        let bounds = BoundSet::from_problem(&op).unwrap();
        let model = build_qubo(&op, &CutPool::new(), &PenaltyWeights::default(), &bounds, 0.5, 64).unwrap();
        let mut a = vec![0u8; 9];
        a[7] = 1;
        let mut b = vec![0u8; 9];
        b[6] = 1;
        let set = SampleSet::from_shots(&model.qubo, vec![a.clone(), b.clone()]);
        let cand = select_candidate(&set, &model, &op, &CutPool::new());
        assert!(cand.fallback);
        assert_eq!(cand.decoded.bits, set.entries[0].bits);
    }

    #[test]
    fn candidate_ties_use_cost_then_bits() {
        let op = OriginalProblem {
            n: 1,
            p: 1,
            m1: 0,
            m2: 0,
            a: vec![],
            g: vec![],
            b: vec![],
            b_mat: vec![],
            b_prime: vec![],
            c: vec![0.0],
            h: vec![0.0],
        };
        let bounds = BoundSet::from_problem(&op).unwrap();
        let model = build_qubo(&op, &CutPool::new(), &PenaltyWeights::default(), &bounds, 1.0, 64).unwrap();
        assert_eq!(model.t(), 1);
        let set = SampleSet {
            entries: vec![Sample { bits: vec![0], count: 1, cost: 0.0 }, Sample { bits: vec![1], count: 1, cost: 0.0 }],
            total_shots: 2,
        };
        assert_eq!(select_candidate(&set, &model, &op, &CutPool::new()).decoded.bits, vec![0]);
    }

    #[test]
    fn replay_is_identical() {
        let op = OriginalProblem::poc();
        let cfg = SolverConfig { sampler: SamplerChoice::Anneal, shots: 30, seed: 4, ..Default::default() };
        let a = solve_hybrid(&op, &cfg).unwrap();
        let b = solve_hybrid(&op, &cfg).unwrap();
        let strip = |r: &HybridRun| r.traces.iter().map(IterationTrace::without_times).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.solution, b.solution);
    }

    #[test]
    fn trace_jsonl_roundtrip() {
        let run = solve_hybrid(&OriginalProblem::poc(), &SolverConfig::default()).unwrap();
        let text = traces_to_jsonl(&run.traces);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(traces_from_jsonl(&text).unwrap(), run.traces);
    }

    #[test]
    fn sampler_names_parse() {
        for s in ["exact", "anneal", "emulator"] {
            assert_eq!(s.parse::<SamplerChoice>().unwrap().to_string(), s);
        }
        assert!("dwave".parse::<SamplerChoice>().is_err());
    }
}
