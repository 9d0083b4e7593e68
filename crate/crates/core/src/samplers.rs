//! Sampling contract over QUBO models plus the exact and simulated-annealing
//! backends.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emulator::EmulatorError;
use crate::qubo::{BinaryEncoding, Qubo, QuboModel};

/// Largest model the exhaustive minimizers will enumerate.
pub const EXACT_MAX_BITS: usize = 24;
/// Relative tolerance under which two costs count as a tie.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("model has {t} bits, backend limit is {max}")]
    Size { t: usize, max: usize },
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Emulator(#[from] EmulatorError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bits: Vec<u8>,
    pub count: usize,
    pub cost: f64,
}

/// Distinct bitstrings with multiplicities, sorted by cost then bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub entries: Vec<Sample>,
    pub total_shots: usize,
}

impl SampleSet {
    pub fn from_shots(qubo: &Qubo, shots: impl IntoIterator<Item = Vec<u8>>) -> Self {
        let mut counts: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
        for bits in shots {
            *counts.entry(bits).or_default() += 1;
        }
        let total_shots = counts.values().sum();
        let mut entries: Vec<Sample> =
            counts.into_iter().map(|(bits, count)| Sample { cost: qubo.cost(&bits), bits, count }).collect();
        entries.sort_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| a.bits.cmp(&b.bits)));
        Self { entries, total_shots }
    }

    pub fn single(bits: Vec<u8>, cost: f64, shots: usize) -> Self {
        Self { entries: vec![Sample { bits, count: shots, cost }], total_shots: shots }
    }

    pub fn best(&self) -> Option<&Sample> {
        self.entries.first()
    }

    /// `⟨C⟩ = (1/N) Σ wᵢ C(bᵢ)`.
    pub fn mean_cost(&self) -> f64 {
        if self.total_shots == 0 {
            return f64::NAN;
        }
        self.entries.iter().map(|s| s.count as f64 * s.cost).sum::<f64>() / self.total_shots as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    /// `T₀ = t0_factor · max|Q_ij| · t`.
    pub t0_factor: f64,
    pub alpha: f64,
    /// Sweeps per chain are `sweeps_per_bit · t`.
    pub sweeps_per_bit: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { t0_factor: 1.0, alpha: 0.95, sweeps_per_bit: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub shots: usize,
    pub seed: u64,
    pub anneal: AnnealSchedule,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { shots: 500, seed: 0, anneal: AnnealSchedule::default() }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.shots == 0 {
            return Err(SamplerError::Config("shots must be at least 1".into()));
        }
        let a = &self.anneal;
        if !(a.alpha > 0.0 && a.alpha < 1.0) || !(a.t0_factor > 0.0) {
            return Err(SamplerError::Config(format!("annealing schedule out of range: {a:?}")));
        }
        Ok(())
    }
}

pub trait Sampler: Sync {
    fn name(&self) -> &'static str;
    fn sample(&self, model: &QuboModel, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError>;
}

/// Lexicographic order on bit masks where bit `i` of the mask is `z_i`.
fn mask_lex_less(a: u32, b: u32) -> bool {
    let diff = a ^ b;
    diff != 0 && (a >> diff.trailing_zeros()) & 1 == 0
}

fn mask_bits(mask: u32, t: usize) -> Vec<u8> {
    (0..t).map(|i| ((mask >> i) & 1) as u8).collect()
}

/// Global minimum of `zᵀQz + constant` by Gray-code enumeration.
pub fn exact_minimize(qubo: &Qubo) -> Result<(Vec<u8>, f64), SamplerError> {
    let t = qubo.t;
    if t > EXACT_MAX_BITS {
        return Err(SamplerError::Size { t, max: EXACT_MAX_BITS });
    }
    let mut z = vec![0u8; t];
    let mut field = vec![0.0; t];
    let mut cost = qubo.constant;
    let mut mask = 0u32;
    let (mut best_mask, mut best_cost) = (0u32, cost);
    for k in 1u64..(1u64 << t) {
        let i = k.trailing_zeros() as usize;
        let gain = qubo.get(i, i) + 2.0 * field[i];
        let sign = if z[i] == 0 { 1.0 } else { -1.0 };
        cost += sign * gain;
        z[i] ^= 1;
        mask ^= 1 << i;
        for (j, f) in field.iter_mut().enumerate() {
            if j != i {
                *f += sign * qubo.get(j, i);
            }
        }
        if k & 0xffff == 0 {
            cost = qubo.cost(&z);
        }
        let tol = TIE_TOL * (1.0 + best_cost.abs());
        if cost < best_cost - tol || (cost <= best_cost + tol && mask_lex_less(mask, best_mask)) {
            best_cost = cost;
            best_mask = mask;
        }
    }
    let bits = mask_bits(best_mask, t);
    let cost = qubo.cost(&bits);
    Ok((bits, cost))
}

/// Bits of the slack value in `enc` closest to `target`, ties to the
/// lexicographically smaller pattern.
fn nearest_slack(enc: &BinaryEncoding, target: f64) -> Vec<u8> {
    let step = enc.resolution();
    let max_ticks = (1u64 << (enc.p + enc.d)) - 1;
    let raw = (target / step).floor().max(0.0).min(max_ticks as f64) as u64;
    let candidates = [raw, (raw + 1).min(max_ticks)];
    let to_bits = |ticks: u64| enc.encode(ticks as f64 * step).expect("tick on grid");
    let mut best = to_bits(candidates[0]);
    let mut best_err = (candidates[0] as f64 * step - target).abs();
    for &c in &candidates[1..] {
        let err = (c as f64 * step - target).abs();
        let bits = to_bits(c);
        if err < best_err || (err == best_err && bits < best) {
            best = bits;
            best_err = err;
        }
    }
    best
}

/// Global minimum of a master QUBO, enumerating only the `x` and `φ` bits.
///
/// Every slack appears in exactly one squared penalty, so once `x` and `φ`
/// are fixed each slack's best value is the grid point nearest its target.
pub fn exact_master_minimize(model: &QuboModel) -> Result<(Vec<u8>, f64), SamplerError> {
    let head = model.head_bits();
    if head > EXACT_MAX_BITS {
        return Err(SamplerError::Size { t: head, max: EXACT_MAX_BITS });
    }
    let phi_enc = model.phi_encoding();
    let slacks: Vec<BinaryEncoding> =
        model.penalties.iter().map(|row| model.encoding(row.slack).expect("slack in layout")).collect();
    let mut prefix = vec![0u8; head];
    let mut best: Option<(f64, Vec<u8>)> = None;
    for m in 0u64..(1u64 << head) {
        // Counting with z₀ as the most significant bit walks prefixes in lexicographic order.
        for (i, b) in prefix.iter_mut().enumerate() {
            *b = ((m >> (head - 1 - i)) & 1) as u8;
        }
        let x = &prefix[..model.n];
        let phi = phi_enc.value(&prefix);
        let lin: f64 = model.c.iter().zip(x).map(|(c, &xj)| c * f64::from(xj)).sum::<f64>() + phi;
        let mut cost = -model.pi_obj * lin;
        for (row, enc) in model.penalties.iter().zip(&slacks) {
            let v = row.residual(x, phi, 0.0);
            let bits = nearest_slack(enc, -v);
            let s: f64 = bits.iter().enumerate().filter(|(_, &b)| b != 0).map(|(k, _)| enc.weight(k)).sum();
            cost += row.weight * (v + s) * (v + s);
        }
        let better = match &best {
            None => true,
            Some((c, _)) => cost < c - TIE_TOL * (1.0 + c.abs()),
        };
        if better {
            best = Some((cost, prefix.clone()));
        }
    }
    let (_, prefix) = best.expect("at least one prefix");
    let mut z = vec![0u8; model.t()];
    z[..head].copy_from_slice(&prefix);
    let x = &prefix[..model.n];
    let phi = phi_enc.value(&prefix);
    for (row, enc) in model.penalties.iter().zip(&slacks) {
        let v = row.residual(x, phi, 0.0);
        z[enc.range()].copy_from_slice(&nearest_slack(enc, -v));
    }
    let cost = model.qubo.cost(&z);
    Ok((z, cost))
}

/// Exact backend: the global minimizer with multiplicity `shots`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactSampler;

impl Sampler for ExactSampler {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn sample(&self, model: &QuboModel, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError> {
        cfg.validate()?;
        let (bits, cost) = exact_master_minimize(model)?;
        Ok(SampleSet::single(bits, cost, cfg.shots))
    }
}

/// RNG for shot `shot`: one ChaCha stream per shot, so results do not depend
/// on how shots are scheduled across threads.
pub fn shot_rng(seed: u64, shot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot as u64);
    rng
}

fn anneal_chain(qubo: &Qubo, schedule: &AnnealSchedule, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let t = qubo.t;
    let mut z: Vec<u8> = (0..t).map(|_| rng.gen_range(0..=1u8)).collect();
    let sweeps = schedule.sweeps_per_bit * t;
    if sweeps == 0 {
        return z;
    }
    let mut field: Vec<f64> =
        (0..t).map(|i| (0..t).filter(|&j| j != i && z[j] != 0).map(|j| qubo.get(i, j)).sum()).collect();
    let mut temp = schedule.t0_factor * qubo.max_abs() * t as f64;
    for _ in 0..sweeps {
        for i in 0..t {
            let gain = qubo.get(i, i) + 2.0 * field[i];
            let delta = if z[i] == 0 { gain } else { -gain };
            let accept = delta <= 0.0 || (temp > 0.0 && rng.gen::<f64>() < (-delta / temp).exp());
            if accept {
                let sign = if z[i] == 0 { 1.0 } else { -1.0 };
                z[i] ^= 1;
                for (j, f) in field.iter_mut().enumerate() {
                    if j != i {
                        *f += sign * qubo.get(j, i);
                    }
                }
            }
        }
        temp *= schedule.alpha;
    }
    z
}

/// Independent single-flip Metropolis chains, one per shot.
pub fn anneal(qubo: &Qubo, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError> {
    cfg.validate()?;
    if qubo.t == 0 {
        return Err(SamplerError::Config("annealing needs at least one bit".into()));
    }
    let shots: Vec<Vec<u8>> =
        (0..cfg.shots).into_par_iter().map(|s| anneal_chain(qubo, &cfg.anneal, &mut shot_rng(cfg.seed, s))).collect();
    Ok(SampleSet::from_shots(qubo, shots))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnnealSampler;

impl Sampler for AnnealSampler {
    fn name(&self) -> &'static str {
        "anneal"
    }

    fn sample(&self, model: &QuboModel, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError> {
        anneal(&model.qubo, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::{make_optimality_cut, CutPool};
    use crate::model::OriginalProblem;
    use crate::qubo::{build_qubo, BoundSet, PenaltyWeights};

    fn brute(qubo: &Qubo) -> (Vec<u8>, f64) {
        let t = qubo.t;
        let mut best: Option<(Vec<u8>, f64)> = None;
        // Lexicographic enumeration with z₀ most significant.
        for m in 0u64..1 << t {
            let z: Vec<u8> = (0..t).map(|i| ((m >> (t - 1 - i)) & 1) as u8).collect();
            let c = qubo.cost(&z);
            if best.as_ref().map_or(true, |(_, b)| c < b - 1e-9 * (1.0 + b.abs())) {
                best = Some((z, c));
            }
        }
        best.unwrap()
    }

    fn poc_model(cuts: &CutPool) -> QuboModel {
        let op = OriginalProblem::poc();
        let bounds = BoundSet::from_problem(&op).unwrap();
        build_qubo(&op, cuts, &PenaltyWeights::default(), &bounds, 0.5, usize::MAX).unwrap()
    }

    #[test]
    fn flat_landscape_is_all_zeros() {
        let mut q = Qubo::zeros(4);
        q.constant = 2.5;
        assert_eq!(exact_minimize(&q).unwrap(), (vec![0; 4], 2.5));
    }

    #[test]
    fn positive_diagonal_is_all_zeros() {
        let q = Qubo::from_upper(3, 0.0, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]);
        assert_eq!(exact_minimize(&q).unwrap().0, vec![0, 0, 0]);
    }

    #[test]
    fn single_bit() {
        let q = Qubo::from_upper(1, 0.5, &[(0, 0, -1.0)]);
        assert_eq!(exact_minimize(&q).unwrap(), (vec![1], -0.5));
    }

    #[test]
    fn ties_go_to_lexicographically_smaller() {
        // z₀ + z₁ = 1 minimal: 01 and 10 tie; 01 < 10.
        let q = Qubo::from_upper(2, 1.0, &[(0, 0, -1.0), (1, 1, -1.0), (0, 1, 2.0)]);
        assert_eq!(exact_minimize(&q).unwrap().0, vec![0, 1]);
    }

    #[test]
    fn oversize_rejected() {
        assert!(matches!(exact_minimize(&Qubo::zeros(25)), Err(SamplerError::Size { .. })));
    }

    #[test]
    fn poc_iteration_one_minimum() {
        let model = poc_model(&CutPool::new());
        let (z, cost) = exact_minimize(&model.qubo).unwrap();
        let (zs, cs) = exact_master_minimize(&model).unwrap();
        assert_eq!(z, zs);
        assert!((cost - cs).abs() < 1e-9);
        let dec = model.decode(&z).unwrap();
        assert_eq!(dec.x, vec![0, 1]);
        assert_eq!(dec.phi, 31.5);
        assert!(dec.penalty_residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn poc_iteration_two_minimum() {
        let op = OriginalProblem::poc();
        let mut cuts = CutPool::new();
        // φ ≤ 11 + 6x₁
        cuts.add(make_optimality_cut(&[0.0, 0.0, 5.0, 6.0, 6.0, 0.0, 0.0, 0.0], &op)).unwrap();
        let model = poc_model(&cuts);
        let (z, _) = exact_master_minimize(&model).unwrap();
        let dec = model.decode(&z).unwrap();
        assert_eq!(dec.x, vec![1, 0]);
        assert_eq!(dec.phi, 17.0);
        if model.t() <= EXACT_MAX_BITS {
            assert_eq!(exact_minimize(&model.qubo).unwrap().0, z);
        }
    }

    #[test]
    fn gray_code_matches_lexicographic_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let t = rng.gen_range(1..=7);
            let mut entries = Vec::new();
            for i in 0..t {
                for j in i..t {
                    // Small integers make exact ties common.
                    entries.push((i, j, rng.gen_range(-2..=2) as f64));
                }
            }
            let q = Qubo::from_upper(t, 0.0, &entries);
            assert_eq!(exact_minimize(&q).unwrap().0, brute(&q).0);
        }
    }

    #[test]
    fn anneal_is_deterministic() {
        let model = poc_model(&CutPool::new());
        let cfg = SamplerConfig { shots: 20, seed: 5, ..Default::default() };
        assert_eq!(anneal(&model.qubo, &cfg).unwrap(), anneal(&model.qubo, &cfg).unwrap());
    }

    #[test]
    fn zero_schedule_returns_initial_states() {
        let q = Qubo::from_upper(3, 0.0, &[(0, 0, -5.0)]);
        let cfg = SamplerConfig { shots: 50, seed: 2, anneal: AnnealSchedule { sweeps_per_bit: 0, ..Default::default() } };
        let set = anneal(&q, &cfg).unwrap();
        let expected: Vec<Vec<u8>> =
            (0..50).map(|s| { let mut r = shot_rng(2, s); (0..3).map(|_| r.gen_range(0..=1u8)).collect() }).collect();
        assert_eq!(set, SampleSet::from_shots(&q, expected));
    }

    #[test]
    fn dominant_bit_found() {
        let q = Qubo::from_upper(4, 0.0, &[(0, 0, 1.0), (1, 1, -10.0), (2, 2, 0.5), (3, 3, 0.5), (0, 1, 0.3)]);
        let set = anneal(&q, &SamplerConfig { shots: 100, seed: 9, ..Default::default() }).unwrap();
        let hits: usize = set.entries.iter().filter(|s| s.bits[1] == 1).map(|s| s.count).sum();
        assert!(hits >= 90, "{hits}");
    }

    #[test]
    fn sample_set_costs_and_order() {
        let model = poc_model(&CutPool::new());
        let set = anneal(&model.qubo, &SamplerConfig { shots: 40, seed: 1, ..Default::default() }).unwrap();
        assert_eq!(set.entries.iter().map(|s| s.count).sum::<usize>(), 40);
        for w in set.entries.windows(2) {
            assert!(w[0].cost < w[1].cost || (w[0].cost == w[1].cost && w[0].bits < w[1].bits));
        }
        for s in &set.entries {
            assert!((s.cost - model.hamiltonian(&s.bits).unwrap()).abs() < 1e-9 * (1.0 + s.cost.abs()));
        }
        let (_, min) = exact_minimize(&model.qubo).unwrap();
        assert!(set.best().unwrap().cost >= min - 1e-9);
    }

    #[test]
    fn exact_sampler_multiplicity() {
        let model = poc_model(&CutPool::new());
        let set = ExactSampler.sample(&model, &SamplerConfig { shots: 7, ..Default::default() }).unwrap();
        assert_eq!(set.entries.len(), 1);
        assert_eq!(set.entries[0].count, 7);
        assert_eq!(set.total_shots, 7);
    }

    #[test]
    fn zero_shots_rejected() {
        let model = poc_model(&CutPool::new());
        assert!(ExactSampler.sample(&model, &SamplerConfig { shots: 0, ..Default::default() }).is_err());
    }
}
