//! Neutral-atom analog backend: greedy register embedding, Rydberg dynamics
//! on the full state vector, measurement, and pulse shaping.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qubo::{Qubo, QuboModel};
use crate::samplers::{shot_rng, SampleSet, Sampler, SamplerConfig, SamplerError};

/// Largest tolerated deviation of `‖ψ‖²` from 1.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum EmulatorError {
    #[error("{atoms} atoms requested, device limit is {max}")]
    TooManyAtoms { atoms: usize, max: usize },
    #[error("only {positions} candidate positions for {atoms} atoms")]
    Capacity { atoms: usize, positions: usize },
    #[error("norm drifted by {0:e}; reduce the step size")]
    NormDrift(f64),
    #[error("invalid pulse: {0}")]
    Pulse(String),
    #[error("invalid register: {0}")]
    Register(String),
}

/// Hardware constants. Frequencies in rad/μs, lengths in μm, times in μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub c6: f64,
    pub min_distance: f64,
    pub max_radius: f64,
    pub omega_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub max_atoms: usize,
}

impl Default for Device {
    fn default() -> Self {
        Self { c6: 5.42e6, min_distance: 4.0, max_radius: 35.0, omega_max: 12.57, t_min: 0.016, t_max: 4.0, max_atoms: 12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Register {
    pub positions: Vec<[f64; 2]>,
    pub c6: f64,
    pub min_distance: f64,
    pub max_radius: f64,
}

#[derive(Serialize, Deserialize)]
struct RegisterFile {
    positions: Vec<[f64; 2]>,
    #[serde(rename = "C6")]
    c6: f64,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl Register {
    pub fn new(positions: Vec<[f64; 2]>, device: &Device) -> Result<Self, EmulatorError> {
        let reg = Self { positions, c6: device.c6, min_distance: device.min_distance, max_radius: device.max_radius };
        reg.validate()?;
        Ok(reg)
    }

    pub fn validate(&self) -> Result<(), EmulatorError> {
        for (i, &p) in self.positions.iter().enumerate() {
            if distance(p, [0.0, 0.0]) > self.max_radius + 1e-9 {
                return Err(EmulatorError::Register(format!("atom {i} lies outside the {} μm radius", self.max_radius)));
            }
            for (j, &q) in self.positions.iter().enumerate().skip(i + 1) {
                if distance(p, q) < self.min_distance - 1e-9 {
                    return Err(EmulatorError::Register(format!("atoms {i} and {j} are closer than {} μm", self.min_distance)));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// `U_ij = C6 / r_ij⁶` (0 on the diagonal).
    pub fn interaction(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.c6 / distance(self.positions[i], self.positions[j]).powi(6)
        }
    }

    pub fn interaction_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| (0..self.len()).map(|j| self.interaction(i, j)).collect()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RegisterFile { positions: self.positions.clone(), c6: self.c6 }).expect("register serializes")
    }
}

/// `Σ_{i≠j} |q_ij − U_ij|`, with `q_ij` the coefficient of `z_i z_j` in the QUBO.
pub fn embedding_deviation(register: &Register, qubo: &Qubo) -> f64 {
    let m = register.len();
    let mut total = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            total += 2.0 * (qubo.coupling(i, j) - register.interaction(i, j)).abs();
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementStep {
    pub atom: usize,
    pub candidate: usize,
    pub step_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub register: Register,
    pub deviation: f64,
    pub candidates: Vec<[f64; 2]>,
    pub steps: Vec<PlacementStep>,
    /// No single atom move to a free candidate and no swap lowers the deviation.
    pub locally_optimal: bool,
}

/// Triangular lattice of spacing `r0` around the origin, trimmed to `radius`,
/// sorted by distance to the centre and then coordinates.
pub fn triangular_lattice(r0: f64, radius: f64) -> Vec<[f64; 2]> {
    let h = 3f64.sqrt() / 2.0;
    let k = (radius / (r0 * h)).ceil() as i64 + 1;
    let mut pts = Vec::new();
    for j in -k..=k {
        for i in -2 * k..=2 * k {
            let p = [r0 * (i as f64 + 0.5 * j as f64), r0 * h * j as f64];
            if distance(p, [0.0, 0.0]) <= radius + 1e-9 {
                pts.push(p);
            }
        }
    }
    pts.sort_by(|a, b| {
        distance(*a, [0.0; 2])
            .total_cmp(&distance(*b, [0.0; 2]))
            .then(a[0].total_cmp(&b[0]))
            .then(a[1].total_cmp(&b[1]))
    });
    pts
}

/// Lattice spacing from the median positive coupling, clamped to the device.
pub fn lattice_spacing(qubo: &Qubo, device: &Device) -> f64 {
    let mut positive: Vec<f64> = (0..qubo.t)
        .flat_map(|i| (i + 1..qubo.t).map(move |j| (i, j)))
        .map(|(i, j)| qubo.coupling(i, j))
        .filter(|&q| q > 0.0)
        .collect();
    let hi = device.max_radius / 2.0;
    if positive.is_empty() {
        return hi.max(device.min_distance);
    }
    positive.sort_by(f64::total_cmp);
    let mid = positive.len() / 2;
    let median = if positive.len() % 2 == 1 { positive[mid] } else { 0.5 * (positive[mid - 1] + positive[mid]) };
    (device.c6 / median).powf(1.0 / 6.0).clamp(device.min_distance, hi.max(device.min_distance))
}

/// Greedy placement: a seeded-random first atom at the centre, then every
/// other atom in index order at the free candidate with the lowest
/// `Σ_{v placed} |q_uv − U(p, pos(v))|`.
pub fn embed(qubo: &Qubo, device: &Device, seed: u64) -> Result<Embedding, EmulatorError> {
    let m = qubo.t;
    if m > device.max_atoms {
        return Err(EmulatorError::TooManyAtoms { atoms: m, max: device.max_atoms });
    }
    let candidates = triangular_lattice(lattice_spacing(qubo, device), device.max_radius);
    if candidates.len() < m {
        return Err(EmulatorError::Capacity { atoms: m, positions: candidates.len() });
    }
    let u = |p: [f64; 2], q: [f64; 2]| device.c6 / distance(p, q).powi(6);
    let mut pos: Vec<Option<usize>> = vec![None; m];
    let mut used = vec![false; candidates.len()];
    let mut steps = Vec::with_capacity(m);
    if m > 0 {
        let first = ChaCha8Rng::seed_from_u64(seed).gen_range(0..m);
        // Candidates are sorted by distance to the centre, so index 0 is the centre.
        pos[first] = Some(0);
        used[0] = true;
        steps.push(PlacementStep { atom: first, candidate: 0, step_deviation: 0.0 });
        for atom in (0..m).filter(|&a| a != first) {
            let mut best: Option<(usize, f64)> = None;
            for (c, &p) in candidates.iter().enumerate().filter(|(c, _)| !used[*c]) {
                let dev: f64 = (0..m)
                    .filter_map(|v| pos[v].map(|pv| (qubo.coupling(atom, v) - u(p, candidates[pv])).abs()))
                    .sum();
                if best.map_or(true, |(_, b)| dev < b - 1e-12 * (1.0 + b.abs())) {
                    best = Some((c, dev));
                }
            }
            let (c, dev) = best.expect("enough candidates");
            pos[atom] = Some(c);
            used[c] = true;
            steps.push(PlacementStep { atom, candidate: c, step_deviation: dev });
        }
    }
    let positions: Vec<[f64; 2]> = pos.iter().map(|p| candidates[p.expect("placed")]).collect();
    let register = Register::new(positions, device)?;
    let deviation = embedding_deviation(&register, qubo);
    let locally_optimal = no_improving_move(&register, qubo, &candidates, deviation);
    Ok(Embedding { register, deviation, candidates, steps, locally_optimal })
}

fn no_improving_move(register: &Register, qubo: &Qubo, candidates: &[[f64; 2]], deviation: f64) -> bool {
    let tol = 1e-9 * (1.0 + deviation);
    let m = register.len();
    let mut trial = register.clone();
    for a in 0..m {
        for b in a + 1..m {
            trial.positions.swap(a, b);
            let better = embedding_deviation(&trial, qubo) < deviation - tol;
            trial.positions.swap(a, b);
            if better {
                return false;
            }
        }
        let original = trial.positions[a];
        for &c in candidates {
            if register.positions.iter().any(|&p| distance(p, c) < register.min_distance - 1e-9) {
                continue;
            }
            trial.positions[a] = c;
            let better = embedding_deviation(&trial, qubo) < deviation - tol;
            trial.positions[a] = original;
            if better {
                return false;
            }
        }
    }
    true
}

/// Pulse parameters: peak Rabi frequency, detuning sweep endpoints, duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub omega_max: f64,
    pub delta_init: f64,
    pub delta_final: f64,
    pub duration: f64,
}

impl PulseParams {
    pub fn validate(&self, device: &Device) -> Result<(), EmulatorError> {
        if !(self.omega_max >= 0.0 && self.omega_max <= device.omega_max + 1e-12) {
            return Err(EmulatorError::Pulse(format!("Ω_max = {} outside [0, {}]", self.omega_max, device.omega_max)));
        }
        if !(self.duration >= device.t_min - 1e-12 && self.duration <= device.t_max + 1e-12) {
            return Err(EmulatorError::Pulse(format!("T = {} outside [{}, {}]", self.duration, device.t_min, device.t_max)));
        }
        if !(self.delta_init <= self.delta_final) || !self.delta_init.is_finite() || !self.delta_final.is_finite() {
            return Err(EmulatorError::Pulse(format!("detuning must sweep upward: {} → {}", self.delta_init, self.delta_final)));
        }
        Ok(())
    }

    /// Trapezoidal `Ω(t)`: linear rise over `T/4`, plateau, linear fall over `T/4`.
    pub fn omega(&self, t: f64) -> f64 {
        let ramp = self.duration / 4.0;
        let s = if t < ramp {
            t / ramp
        } else if t > self.duration - ramp {
            (self.duration - t) / ramp
        } else {
            1.0
        };
        self.omega_max * s.clamp(0.0, 1.0)
    }

    /// Linear `Δ(t)` from `delta_init` to `delta_final`.
    pub fn delta(&self, t: f64) -> f64 {
        self.delta_init + (self.delta_final - self.delta_init) * (t / self.duration)
    }

    fn to_array(self) -> [f64; 4] {
        [self.omega_max, self.delta_init, self.delta_final, self.duration]
    }

    fn from_array(a: [f64; 4]) -> Self {
        Self { omega_max: a[0], delta_init: a[1], delta_final: a[2], duration: a[3] }
    }

    /// `time,omega,delta` rows sampled at `steps + 1` points.
    pub fn trace_csv(&self, steps: usize) -> String {
        let mut out = String::from("time,omega,delta\n");
        for k in 0..=steps {
            let t = self.duration * k as f64 / steps as f64;
            let _ = writeln!(out, "{t:.9},{:.9},{:.9}", self.omega(t), self.delta(t));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    /// Strang splitting into the diagonal part and exact single-atom X rotations.
    SplitOperator,
    /// Classical RK4 with the Hamiltonian frozen at each step's midpoint.
    Rk4,
}

#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub state: Vec<Complex64>,
    pub norm_drift: f64,
}

impl EvolutionResult {
    pub fn probabilities(&self) -> Vec<f64> {
        self.state.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Diagonal energies `Σ_{u<v} U_uv n_u n_v` and excitation counts per basis state.
fn diagonal_tables(register: &Register) -> (Vec<f64>, Vec<u32>) {
    let m = register.len();
    let u = register.interaction_matrix();
    let dim = 1usize << m;
    let mut inter = vec![0.0; dim];
    let mut count = vec![0u32; dim];
    for b in 0..dim {
        count[b] = b.count_ones();
        let mut e = 0.0;
        for i in 0..m {
            if b >> i & 1 == 1 {
                for j in i + 1..m {
                    if b >> j & 1 == 1 {
                        e += u[i][j];
                    }
                }
            }
        }
        inter[b] = e;
    }
    (inter, count)
}

/// `exp(−iθσˣ)` on atom `q`.
fn rotate_x(state: &mut [Complex64], q: usize, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let mis = Complex64::new(0.0, -s);
    let bit = 1usize << q;
    for i in 0..state.len() {
        if i & bit == 0 {
            let (a, b) = (state[i], state[i | bit]);
            state[i] = a * c + b * mis;
            state[i | bit] = a * mis + b * c;
        }
    }
}

fn apply_h(out: &mut [Complex64], psi: &[Complex64], omega: f64, delta: f64, inter: &[f64], count: &[u32], m: usize) {
    for (b, o) in out.iter_mut().enumerate() {
        let mut v = psi[b] * (inter[b] - delta * f64::from(count[b]));
        for q in 0..m {
            v += psi[b ^ (1 << q)] * (omega / 2.0);
        }
        *o = v;
    }
}

/// Integrates `i dψ/dt = H(t)ψ` from `|0…0⟩` with
/// `H = (Ω(t)/2) Σσˣ − Δ(t) Σn̂ + Σ_{u<v} U_uv n̂_u n̂_v`.
pub fn evolve_with(
    register: &Register,
    omega: impl Fn(f64) -> f64,
    delta: impl Fn(f64) -> f64,
    duration: f64,
    dt: f64,
    integrator: Integrator,
) -> Result<EvolutionResult, EmulatorError> {
    let m = register.len();
    if !(dt > 0.0 && duration >= 0.0) {
        return Err(EmulatorError::Pulse(format!("need dt > 0 and T ≥ 0, got dt = {dt}, T = {duration}")));
    }
    let dim = 1usize << m;
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    psi[0] = Complex64::new(1.0, 0.0);
    let steps = (duration / dt - 1e-9).ceil().max(0.0) as usize;
    if steps == 0 {
        return Ok(EvolutionResult { state: psi, norm_drift: 0.0 });
    }
    let h = duration / steps as f64;
    let (inter, count) = diagonal_tables(register);
    match integrator {
        Integrator::SplitOperator => {
            let inter_half: Vec<Complex64> = inter.iter().map(|&e| Complex64::from_polar(1.0, -e * h / 2.0)).collect();
            for k in 0..steps {
                let tm = (k as f64 + 0.5) * h;
                let (om, de) = (omega(tm), delta(tm));
                let det: Vec<Complex64> = (0..=m).map(|n| Complex64::from_polar(1.0, de * n as f64 * h / 2.0)).collect();
                for b in 0..dim {
                    psi[b] *= inter_half[b] * det[count[b] as usize];
                }
                if om != 0.0 {
                    for q in 0..m {
                        rotate_x(&mut psi, q, om * h / 2.0);
                    }
                }
                for b in 0..dim {
                    psi[b] *= inter_half[b] * det[count[b] as usize];
                }
            }
        }
        Integrator::Rk4 => {
            let mi = Complex64::new(0.0, -1.0);
            let mut k1 = vec![Complex64::default(); dim];
            let mut k2 = k1.clone();
            let mut k3 = k1.clone();
            let mut k4 = k1.clone();
            let mut tmp = k1.clone();
            for k in 0..steps {
                let tm = (k as f64 + 0.5) * h;
                let (om, de) = (omega(tm), delta(tm));
                apply_h(&mut k1, &psi, om, de, &inter, &count, m);
                k1.iter_mut().for_each(|v| *v *= mi);
                tmp.iter_mut().zip(&psi).zip(&k1).for_each(|((t, p), k)| *t = p + k * (h / 2.0));
                apply_h(&mut k2, &tmp, om, de, &inter, &count, m);
                k2.iter_mut().for_each(|v| *v *= mi);
                tmp.iter_mut().zip(&psi).zip(&k2).for_each(|((t, p), k)| *t = p + k * (h / 2.0));
                apply_h(&mut k3, &tmp, om, de, &inter, &count, m);
                k3.iter_mut().for_each(|v| *v *= mi);
                tmp.iter_mut().zip(&psi).zip(&k3).for_each(|((t, p), k)| *t = p + k * h);
                apply_h(&mut k4, &tmp, om, de, &inter, &count, m);
                k4.iter_mut().for_each(|v| *v *= mi);
                for b in 0..dim {
                    psi[b] += (k1[b] + k2[b] * 2.0 + k3[b] * 2.0 + k4[b]) * (h / 6.0);
                }
            }
        }
    }
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    let norm_drift = (norm - 1.0).abs();
    if !(norm_drift <= NORM_TOL) {
        return Err(EmulatorError::NormDrift(norm_drift));
    }
    Ok(EvolutionResult { state: psi, norm_drift })
}

/// Evolution under the trapezoid/linear-sweep pulse.
pub fn evolve(register: &Register, pulse: &PulseParams, dt: f64) -> Result<EvolutionResult, EmulatorError> {
    if dt > pulse.duration / 100.0 + 1e-15 {
        return Err(EmulatorError::Pulse(format!("dt = {dt} exceeds T/100 = {}", pulse.duration / 100.0)));
    }
    evolve_with(register, |t| pulse.omega(t), |t| pulse.delta(t), pulse.duration, dt, Integrator::SplitOperator)
}

/// `shots` draws from `|aᵢ|²`; atom `u` reads out as bit `u`.
pub fn measure(result: &EvolutionResult, qubo: &Qubo, shots: usize, seed: u64) -> SampleSet {
    let probs = result.probabilities();
    let m = probs.len().trailing_zeros() as usize;
    let dist = WeightedIndex::new(&probs).expect("state has nonzero norm");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = (0..shots).map(|_| {
        let b = dist.sample(&mut rng);
        (0..m).map(|u| ((b >> u) & 1) as u8).collect::<Vec<u8>>()
    });
    SampleSet::from_shots(qubo, draws.collect::<Vec<_>>())
}

/// Axis-aligned box over `(Ω_max, δ_init, δ_final, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseBox {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl PulseBox {
    pub fn for_device(device: &Device) -> Self {
        Self { lo: [1.0, -25.0, 0.0, 0.5_f64.max(device.t_min)], hi: [device.omega_max, 0.0, 25.0, device.t_max] }
    }

    pub fn midpoint(&self) -> PulseParams {
        PulseParams::from_array(std::array::from_fn(|k| 0.5 * (self.lo[k] + self.hi[k])))
    }

    fn clamp(&self, a: [f64; 4]) -> [f64; 4] {
        std::array::from_fn(|k| a[k].clamp(self.lo[k], self.hi[k]))
    }

    pub fn uniform(&self, rng: &mut impl Rng) -> PulseParams {
        PulseParams::from_array(std::array::from_fn(|k| self.lo[k] + (self.hi[k] - self.lo[k]) * rng.gen::<f64>()))
    }
}

/// Black-box optimizer over a `PulseBox`.
pub trait PulseOptimizer {
    /// Next parameters to evaluate, given every `(params, ⟨C⟩)` so far.
    fn propose(&mut self, history: &[(PulseParams, f64)]) -> PulseParams;
}

/// Uniform random proposals.
pub struct RandomSearch {
    bounds: PulseBox,
    rng: ChaCha8Rng,
}

impl RandomSearch {
    pub fn new(bounds: PulseBox, seed: u64) -> Self {
        Self { bounds, rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl PulseOptimizer for RandomSearch {
    fn propose(&mut self, _history: &[(PulseParams, f64)]) -> PulseParams {
        self.bounds.uniform(&mut self.rng)
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone)]
struct Section {
    coord: usize,
    a: f64,
    b: f64,
    x1: f64,
    x2: f64,
    f1: Option<f64>,
    f2: Option<f64>,
    /// Which interior point the last proposal evaluated.
    pending: u8,
    left: usize,
}

/// Latin-hypercube exploration for the first half of the budget, then
/// coordinate-wise golden-section refinement around the incumbent.
pub struct LhsGoldenSection {
    bounds: PulseBox,
    design: Vec<[f64; 4]>,
    next_design: usize,
    widths: [f64; 4],
    section: Option<Section>,
    next_coord: usize,
    evals_per_coord: usize,
}

impl LhsGoldenSection {
    /// `budget` counts every evaluation including the initial midpoint.
    pub fn new(bounds: PulseBox, budget: usize, seed: u64) -> Self {
        let samples = budget.div_ceil(2).saturating_sub(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut design = vec![[0.0; 4]; samples];
        for k in 0..4 {
            let mut strata: Vec<usize> = (0..samples).collect();
            for i in (1..samples).rev() {
                strata.swap(i, rng.gen_range(0..=i));
            }
            for (row, &s) in design.iter_mut().zip(&strata) {
                let u = (s as f64 + rng.gen::<f64>()) / samples as f64;
                row[k] = bounds.lo[k] + u * (bounds.hi[k] - bounds.lo[k]);
            }
        }
        let widths = std::array::from_fn(|k| 0.25 * (bounds.hi[k] - bounds.lo[k]));
        Self { bounds, design, next_design: 0, widths, section: None, next_coord: 0, evals_per_coord: 4 }
    }

    fn incumbent(history: &[(PulseParams, f64)]) -> [f64; 4] {
        let mut best = &history[0];
        for h in history {
            if h.1 < best.1 {
                best = h;
            }
        }
        best.0.to_array()
    }

    fn point(base: [f64; 4], coord: usize, v: f64) -> PulseParams {
        let mut a = base;
        a[coord] = v;
        PulseParams::from_array(a)
    }
}

impl PulseOptimizer for LhsGoldenSection {
    fn propose(&mut self, history: &[(PulseParams, f64)]) -> PulseParams {
        if self.next_design < self.design.len() {
            self.next_design += 1;
            return PulseParams::from_array(self.bounds.clamp(self.design[self.next_design - 1]));
        }
        let base = if history.is_empty() { self.bounds.midpoint().to_array() } else { Self::incumbent(history) };
        // Record the value of the previous proposal.
        if let (Some(sec), Some(last)) = (self.section.as_mut(), history.last()) {
            match sec.pending {
                1 => sec.f1 = Some(last.1),
                2 => sec.f2 = Some(last.1),
                _ => {}
            }
        }
        let exhausted = self.section.as_ref().map_or(true, |s| s.left == 0);
        if exhausted {
            if let Some(s) = &self.section {
                self.widths[s.coord] *= 0.5;
            }
            let coord = self.next_coord;
            self.next_coord = (self.next_coord + 1) % 4;
            let a = (base[coord] - self.widths[coord]).max(self.bounds.lo[coord]);
            let b = (base[coord] + self.widths[coord]).min(self.bounds.hi[coord]);
            let sec = Section {
                coord,
                a,
                b,
                x1: b - GOLDEN * (b - a),
                x2: a + GOLDEN * (b - a),
                f1: None,
                f2: None,
                pending: 1,
                left: self.evals_per_coord - 1,
            };
            let p = Self::point(base, coord, sec.x1);
            self.section = Some(sec);
            return p;
        }
        let sec = self.section.as_mut().expect("active section");
        sec.left -= 1;
        match (sec.f1, sec.f2) {
            (Some(_), None) => {
                sec.pending = 2;
                Self::point(base, sec.coord, sec.x2)
            }
            (Some(f1), Some(f2)) => {
                if f1 < f2 {
                    sec.b = sec.x2;
                    sec.x2 = sec.x1;
                    sec.f2 = Some(f1);
                    sec.x1 = sec.b - GOLDEN * (sec.b - sec.a);
                    sec.f1 = None;
                    sec.pending = 1;
                    Self::point(base, sec.coord, sec.x1)
                } else {
                    sec.a = sec.x1;
                    sec.x1 = sec.x2;
                    sec.f1 = Some(f2);
                    sec.x2 = sec.a + GOLDEN * (sec.b - sec.a);
                    sec.f2 = None;
                    sec.pending = 2;
                    Self::point(base, sec.coord, sec.x2)
                }
            }
            (None, _) => {
                sec.pending = 1;
                Self::point(base, sec.coord, sec.x1)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShapedPulse {
    pub params: PulseParams,
    pub samples: SampleSet,
    pub mean_cost: f64,
    /// Every evaluated `(params, ⟨C⟩)` in evaluation order.
    pub history: Vec<(PulseParams, f64)>,
}

/// Evaluates `p` pulses (the box midpoint first, then the optimizer's
/// proposals) and keeps the one with the lowest average sampled cost.
#[allow(clippy::too_many_arguments)]
pub fn shape_pulse(
    register: &Register,
    qubo: &Qubo,
    bounds: &PulseBox,
    p: usize,
    shots: usize,
    seed: u64,
    steps_per_pulse: usize,
    optimizer: &mut dyn PulseOptimizer,
) -> Result<ShapedPulse, EmulatorError> {
    if p == 0 {
        return Err(EmulatorError::Pulse("pulse shaping needs at least one iteration".into()));
    }
    let mut history = Vec::with_capacity(p);
    let mut best: Option<(PulseParams, SampleSet, f64)> = None;
    for it in 0..p {
        let params = if it == 0 { bounds.midpoint() } else { optimizer.propose(&history) };
        let dt = params.duration / steps_per_pulse.max(100) as f64;
        let result = evolve(register, &params, dt)?;
        let mut rng = shot_rng(seed, it);
        let samples = measure(&result, qubo, shots, rng.gen());
        let mean = samples.mean_cost();
        history.push((params, mean));
        if best.as_ref().map_or(true, |b| mean < b.2) {
            best = Some((params, samples, mean));
        }
    }
    let (params, samples, mean_cost) = best.expect("p ≥ 1");
    Ok(ShapedPulse { params, samples, mean_cost, history })
}

/// Emulated analog backend: embed, shape the pulse, return its samples.
#[derive(Debug, Clone, Copy)]
pub struct EmulatorSampler {
    pub device: Device,
    pub bounds: PulseBox,
    pub iterations: usize,
    pub steps_per_pulse: usize,
}

impl Default for EmulatorSampler {
    fn default() -> Self {
        let device = Device::default();
        Self { device, bounds: PulseBox::for_device(&device), iterations: 20, steps_per_pulse: 1000 }
    }
}

impl Sampler for EmulatorSampler {
    fn name(&self) -> &'static str {
        "emulator"
    }

    fn sample(&self, model: &QuboModel, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError> {
        cfg.validate()?;
        let t = model.t();
        if t > self.device.max_atoms {
            return Err(SamplerError::Size { t, max: self.device.max_atoms });
        }
        let embedding = embed(&model.qubo, &self.device, cfg.seed)?;
        let mut optimizer = LhsGoldenSection::new(self.bounds, self.iterations, cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        let shaped = shape_pulse(
            &embedding.register,
            &model.qubo,
            &self.bounds,
            self.iterations,
            cfg.shots,
            cfg.seed,
            self.steps_per_pulse,
            &mut optimizer,
        )?;
        Ok(shaped.samples)
    }
}
