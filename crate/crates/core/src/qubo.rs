//! Compiles the master problem (objective, master rows, Benders cuts) into a
//! QUBO and decodes bitstrings back into master variables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cuts::{Cut, CutKind, CutPool};
use crate::model::OriginalProblem;
use crate::subproblem::{phi_max_bound, phi_min_bound, slack_max_bound, RelaxationError};

/// Bounds at or below this are treated as exactly zero.
const ZERO_BOUND: f64 = 1e-9;
/// Hard cap on fractional bits for a slack.
const MAX_FRACTION_BITS: usize = 30;

#[derive(Debug, Error)]
pub enum QuboError {
    #[error("invalid bound: {0}")]
    Bound(String),
    #[error("model needs {t} qubits, budget is {max}")]
    Size { t: usize, max: usize },
    #[error("bitstring has {got} bits, model has {expected}")]
    Length { expected: usize, got: usize },
    #[error("precision must lie in (0, 1], got {0}")]
    Precision(f64),
    #[error("malformed QUBO file: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Dense symmetric `Q` with a constant offset: `cost(z) = zᵀQz + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Qubo {
    pub t: usize,
    q: Vec<f64>,
    pub constant: f64,
}

#[derive(Serialize, Deserialize)]
struct QuboFile {
    t: usize,
    constant: f64,
    entries: Vec<(usize, usize, f64)>,
}

impl Qubo {
    pub fn zeros(t: usize) -> Self {
        Self { t, q: vec![0.0; t * t], constant: 0.0 }
    }

    /// Builds from an upper-triangular coefficient list of `Σ_{i≤j} q_ij z_i z_j`.
    pub fn from_upper(t: usize, constant: f64, entries: &[(usize, usize, f64)]) -> Self {
        let mut qubo = Self::zeros(t);
        qubo.constant = constant;
        for &(i, j, v) in entries {
            if i == j {
                qubo.add_diag(i, v);
            } else {
                qubo.add_pair(i, j, v);
            }
        }
        qubo
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.t + j]
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        self.q[i * self.t + i] += v;
    }

    /// Adds `v·z_i·z_j` (i ≠ j) split evenly over `Q_ij` and `Q_ji`.
    pub fn add_pair(&mut self, i: usize, j: usize, v: f64) {
        self.q[i * self.t + j] += 0.5 * v;
        self.q[j * self.t + i] += 0.5 * v;
    }

    /// Coefficient of `z_i z_j` in the polynomial (`Q_ij + Q_ji` off the diagonal).
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.get(i, i)
        } else {
            self.get(i, j) + self.get(j, i)
        }
    }

    pub fn cost(&self, z: &[u8]) -> f64 {
        let mut total = self.constant;
        for i in (0..self.t).filter(|&i| z[i] != 0) {
            let row = &self.q[i * self.t..(i + 1) * self.t];
            total += row.iter().zip(z).filter(|(_, &zj)| zj != 0).map(|(q, _)| q).sum::<f64>();
        }
        total
    }

    /// Change in cost from flipping bit `i` of `z`.
    pub fn flip_delta(&self, z: &[u8], i: usize) -> f64 {
        let row = &self.q[i * self.t..(i + 1) * self.t];
        let field: f64 = row.iter().zip(z).enumerate().filter(|&(j, (_, &zj))| j != i && zj != 0).map(|(_, (q, _))| q).sum();
        let gain = row[i] + 2.0 * field;
        if z[i] == 0 {
            gain
        } else {
            -gain
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.q.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.t).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Nonzero upper-triangular coefficients `(i, j, q_ij)`, `i ≤ j`.
    pub fn upper_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.t {
            for j in i..self.t {
                let v = self.coupling(i, j);
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let file = QuboFile { t: self.t, constant: self.constant, entries: self.upper_entries() };
        serde_json::to_string(&file).expect("QUBO serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, QuboError> {
        let file: QuboFile = serde_json::from_str(text)?;
        if let Some(&(i, j, _)) = file.entries.iter().find(|&&(i, j, _)| i > j || j >= file.t) {
            return Err(QuboError::Bound(format!("entry ({i}, {j}) is outside the upper triangle of a {0}×{0} matrix", file.t)));
        }
        Ok(Self::from_upper(file.t, file.constant, &file.entries))
    }
}

/// Positional binary encoding of one real variable: `P` integer bits
/// (weights `2^i`), `D` fractional bits (`2^−j`), `N` negative bits (`−2^{k−1}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryEncoding {
    pub p: usize,
    pub d: usize,
    pub n: usize,
    pub offset: usize,
}

impl BinaryEncoding {
    /// Encoding covering `[lb, ub]` with `frac` fractional bits. A variable
    /// fixed at zero (`ub ≈ 0`, `lb ≥ 0`) gets no bits at all.
    pub fn sized(lb: f64, ub: f64, frac: usize, offset: usize) -> Self {
        let p = integer_bits(ub);
        let n = if lb <= -1.0 {
            integer_bits(-lb)
        } else if lb < -ZERO_BOUND {
            1
        } else {
            0
        };
        let d = if ub <= ZERO_BOUND && n == 0 { 0 } else { frac };
        Self { p, d, n, offset }
    }

    pub fn bits(&self) -> usize {
        self.p + self.d + self.n
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.bits()
    }

    /// Weight of the `k`-th bit of this encoding.
    pub fn weight(&self, k: usize) -> f64 {
        if k < self.p {
            2f64.powi(k as i32)
        } else if k < self.p + self.d {
            2f64.powi(-((k - self.p + 1) as i32))
        } else {
            -(2f64.powi((k - self.p - self.d) as i32))
        }
    }

    pub fn value(&self, z: &[u8]) -> f64 {
        self.range().enumerate().filter(|&(_, i)| z[i] != 0).map(|(k, _)| self.weight(k)).sum()
    }

    pub fn max_value(&self) -> f64 {
        (2f64.powi(self.p as i32) - 1.0) + (1.0 - 2f64.powi(-(self.d as i32)))
    }

    pub fn min_value(&self) -> f64 {
        -(2f64.powi(self.n as i32) - 1.0)
    }

    pub fn resolution(&self) -> f64 {
        2f64.powi(-(self.d as i32))
    }

    /// Bits representing `value` exactly, or `None` when it is off the grid
    /// or out of range. Negative values use the negative bits for the
    /// integer part and the positive bits for the remainder.
    pub fn encode(&self, value: f64) -> Option<Vec<u8>> {
        let scale = 2f64.powi(self.d as i32);
        let ticks = value * scale;
        if (ticks - ticks.round()).abs() > 1e-9 || value > self.max_value() + 1e-12 || value < self.min_value() - 1e-12 {
            return None;
        }
        let neg = if value < 0.0 { (-value).ceil() as u64 } else { 0 };
        let pos_ticks = ((value + neg as f64) * scale).round() as u64;
        let mut bits = vec![0u8; self.bits()];
        for j in 0..self.d {
            // Fractional bit j+1 is weight 2^{−(j+1)}, i.e. tick 2^{d−1−j}.
            bits[self.p + j] = ((pos_ticks >> (self.d - 1 - j)) & 1) as u8;
        }
        let int_part = pos_ticks >> self.d;
        for i in 0..self.p {
            bits[i] = ((int_part >> i) & 1) as u8;
        }
        if int_part >> self.p != 0 {
            return None;
        }
        for k in 0..self.n {
            bits[self.p + self.d + k] = ((neg >> k) & 1) as u8;
        }
        if neg >> self.n != 0 {
            return None;
        }
        Some(bits)
    }
}

/// `⌊log₂ ub⌋ + 1` for `ub ≥ 1`, else 0.
fn integer_bits(ub: f64) -> usize {
    if ub >= 1.0 {
        ub.log2().floor() as usize + 1
    } else {
        0
    }
}

/// Fractional bits for `φ` at precision `ε`: the smallest `D` with `2^−D ≤ ε`.
pub fn phi_fraction_bits(epsilon: f64) -> Result<usize, QuboError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(QuboError::Precision(epsilon));
    }
    Ok((-epsilon.log2() - 1e-12).ceil().max(0.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub pi_obj: f64,
    pub pi1: f64,
    pub pi2: f64,
    pub pi3: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self { pi_obj: 1.0, pi1: 100.0, pi2: 100.0, pi3: 100.0 }
    }
}

impl PenaltyWeights {
    pub fn validate(&self) -> Result<(), QuboError> {
        let ok = self.pi_obj >= 0.0 && self.pi1 > 0.0 && self.pi2 > 0.0 && self.pi3 > 0.0;
        let finite = [self.pi_obj, self.pi1, self.pi2, self.pi3].iter().all(|v| v.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(QuboError::Bound(format!("penalty weights must be positive (pi_obj ≥ 0): {self:?}")))
        }
    }
}

/// Upper/lower bounds used to size the encodings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub phi_max: f64,
    pub phi_min: f64,
    /// One upper bound per master row.
    pub master_slack: Vec<f64>,
}

impl BoundSet {
    /// Bounds from the LP relaxation. When `min hᵀy` is unbounded below the
    /// lower bound of `φ` falls back to 0.
    pub fn from_problem(op: &OriginalProblem) -> Result<Self, RelaxationError> {
        let phi_max = phi_max_bound(op)?;
        let phi_min = match phi_min_bound(op) {
            Ok(v) => v.min(0.0),
            Err(RelaxationError::Unbounded) => 0.0,
            Err(e) => return Err(e),
        };
        let master_slack = (0..op.m2).map(|k| slack_max_bound(op, k)).collect::<Result<_, _>>()?;
        Ok(Self { phi_max, phi_min, master_slack })
    }

    /// Upper bound on a cut's slack over `x ∈ [0,1]ⁿ` (and `φ ≥ phi_min`).
    pub fn cut_slack(&self, cut: &Cut) -> f64 {
        let bound = match cut.kind {
            CutKind::Optimality => cut.max_over_box() - self.phi_min,
            CutKind::Feasibility => cut.max_over_box(),
        };
        bound.max(0.0)
    }

    fn validate(&self, op: &OriginalProblem) -> Result<(), QuboError> {
        if !self.phi_max.is_finite() || !self.phi_min.is_finite() || self.phi_min > self.phi_max + ZERO_BOUND {
            return Err(QuboError::Bound(format!("φ range [{}, {}] is not a finite interval", self.phi_min, self.phi_max)));
        }
        if self.master_slack.len() != op.m2 {
            return Err(QuboError::Bound(format!("{} master slack bounds for {} master rows", self.master_slack.len(), op.m2)));
        }
        if let Some((k, v)) = self.master_slack.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < -ZERO_BOUND) {
            return Err(QuboError::Bound(format!("master slack bound {k} is {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    X(usize),
    Phi,
    MasterSlack(usize),
    OptimalitySlack(usize),
    FeasibilitySlack(usize),
}

/// One squared penalty `weight·(x_coeffsᵀx + phi_coeff·φ + s + constant)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRow {
    pub slack: Role,
    pub weight: f64,
    pub x_coeffs: Vec<f64>,
    pub phi_coeff: f64,
    pub constant: f64,
}

impl PenaltyRow {
    pub fn residual(&self, x: &[u8], phi: f64, slack: f64) -> f64 {
        let lin: f64 = self.x_coeffs.iter().zip(x).map(|(a, &xj)| a * f64::from(xj)).sum();
        lin + self.phi_coeff * phi + slack + self.constant
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    pub qubo: Qubo,
    pub n: usize,
    pub layout: Vec<(Role, BinaryEncoding)>,
    pub penalties: Vec<PenaltyRow>,
    pub pi_obj: f64,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodedMaster {
    pub bits: Vec<u8>,
    pub x: Vec<u8>,
    pub phi: f64,
    pub master_slacks: Vec<f64>,
    /// Optimality-cut slacks followed by feasibility-cut slacks.
    pub cut_slacks: Vec<f64>,
    /// One residual per penalty row, in `QuboModel::penalties` order.
    pub penalty_residuals: Vec<f64>,
    pub qubo_cost: f64,
}

impl DecodedMaster {
    /// Master objective `cᵀx + φ`.
    pub fn objective(&self, c: &[f64]) -> f64 {
        c.iter().zip(&self.x).map(|(c, &x)| c * f64::from(x)).sum::<f64>() + self.phi
    }
}

impl QuboModel {
    pub fn t(&self) -> usize {
        self.qubo.t
    }

    pub fn phi_encoding(&self) -> BinaryEncoding {
        self.encoding(Role::Phi).expect("layout has φ")
    }

    pub fn encoding(&self, role: Role) -> Option<BinaryEncoding> {
        self.layout.iter().find(|(r, _)| *r == role).map(|(_, e)| *e)
    }

    /// Number of leading bits (x and φ) that determine every slack's optimum.
    pub fn head_bits(&self) -> usize {
        let phi = self.phi_encoding();
        phi.offset + phi.bits()
    }

    pub fn decode(&self, z: &[u8]) -> Result<DecodedMaster, QuboError> {
        if z.len() != self.t() {
            return Err(QuboError::Length { expected: self.t(), got: z.len() });
        }
        let x = z[..self.n].to_vec();
        let mut phi = 0.0;
        let mut master_slacks = Vec::new();
        let mut cut_slacks = Vec::new();
        let mut feas = Vec::new();
        for (role, enc) in &self.layout {
            match role {
                Role::X(_) => {}
                Role::Phi => phi = enc.value(z),
                Role::MasterSlack(_) => master_slacks.push(enc.value(z)),
                Role::OptimalitySlack(_) => cut_slacks.push(enc.value(z)),
                Role::FeasibilitySlack(_) => feas.push(enc.value(z)),
            }
        }
        cut_slacks.extend(feas);
        let penalty_residuals = self
            .penalties
            .iter()
            .map(|row| {
                let s = self.encoding(row.slack).expect("penalty slack in layout").value(z);
                row.residual(&x, phi, s)
            })
            .collect();
        Ok(DecodedMaster { bits: z.to_vec(), x, phi, master_slacks, cut_slacks, penalty_residuals, qubo_cost: self.qubo.cost(z) })
    }

    /// `H_P` evaluated term by term from decoded values, independent of `Q`.
    pub fn hamiltonian(&self, z: &[u8]) -> Result<f64, QuboError> {
        let dec = self.decode(z)?;
        let obj = -self.pi_obj * dec.objective(&self.c);
        let pen: f64 = self.penalties.iter().zip(&dec.penalty_residuals).map(|(row, r)| row.weight * r * r).sum();
        Ok(obj + pen)
    }
}

/// Smallest `r ≥ min_bits` with every value a multiple of `2^−r`, if `r ≤ max_exact`.
fn grid_bits(values: &[f64], min_bits: usize, max_exact: usize) -> Option<usize> {
    (min_bits..=max_exact).find(|&r| {
        let scale = 2f64.powi(r as i32);
        values.iter().all(|v| {
            let s = v * scale;
            (s - s.round()).abs() <= 1e-9 * s.abs().max(1.0)
        })
    })
}

/// Fractional bits for a slack whose row data is `values`.
///
/// Data on the `2^−D` grid is represented exactly. Otherwise the slack grid
/// is refined until the worst rounding penalty `π·(2^{−R−1})²` is below
/// `pi_obj·2^{−D}/256`, so rounding cannot compete with one step of `φ`.
fn slack_fraction_bits(values: &[f64], min_bits: usize, d: usize, weight: f64, pi_obj: f64) -> usize {
    if let Some(r) = grid_bits(values, min_bits, d.max(min_bits)) {
        return r;
    }
    let scale = if pi_obj > 0.0 { pi_obj } else { 1.0 };
    let target = scale * 2f64.powi(-(d as i32)) / 256.0;
    let r = (((weight / target).log2() - 2.0) / 2.0).ceil().max(0.0) as usize;
    r.max(d).max(min_bits).min(MAX_FRACTION_BITS)
}

struct Planned {
    layout: Vec<(Role, BinaryEncoding)>,
    penalties: Vec<PenaltyRow>,
    t: usize,
}

fn plan(op: &OriginalProblem, cuts: &CutPool, weights: &PenaltyWeights, bounds: &BoundSet, epsilon: f64) -> Result<Planned, QuboError> {
    weights.validate()?;
    bounds.validate(op)?;
    let d = phi_fraction_bits(epsilon)?;
    let mut layout = Vec::new();
    let mut offset = 0;
    for j in 0..op.n {
        layout.push((Role::X(j), BinaryEncoding { p: 1, d: 0, n: 0, offset }));
        offset += 1;
    }
    let phi = BinaryEncoding::sized(bounds.phi_min, bounds.phi_max, d, offset);
    layout.push((Role::Phi, phi));
    offset += phi.bits();

    let mut penalties = Vec::new();
    let mut push = |role: Role, ub: f64, frac: usize, row: PenaltyRow, layout: &mut Vec<(Role, BinaryEncoding)>| {
        let enc = BinaryEncoding::sized(0.0, ub, frac, offset);
        offset += enc.bits();
        layout.push((role, enc));
        penalties.push(row);
    };

    for k in 0..op.m2 {
        let mut data = op.b_mat[k].clone();
        data.push(op.b_prime[k]);
        let frac = slack_fraction_bits(&data, 0, d, weights.pi1, weights.pi_obj);
        let row = PenaltyRow {
            slack: Role::MasterSlack(k),
            weight: weights.pi1,
            x_coeffs: op.b_mat[k].clone(),
            phi_coeff: 0.0,
            constant: -op.b_prime[k],
        };
        push(Role::MasterSlack(k), bounds.master_slack[k].max(0.0), frac, row, &mut layout);
    }
    for (k, cut) in cuts.optimality.iter().enumerate() {
        // The slack absorbs φ's fractional part too, so it needs at least D bits.
        let mut data = cut.x_coeffs.clone();
        data.push(cut.constant);
        let frac = slack_fraction_bits(&data, phi.d, d, weights.pi2, weights.pi_obj);
        let row = PenaltyRow {
            slack: Role::OptimalitySlack(k),
            weight: weights.pi2,
            x_coeffs: cut.x_coeffs.clone(),
            phi_coeff: 1.0,
            constant: -cut.constant,
        };
        push(Role::OptimalitySlack(k), bounds.cut_slack(cut), frac, row, &mut layout);
    }
    for (k, cut) in cuts.feasibility.iter().enumerate() {
        let mut data = cut.x_coeffs.clone();
        data.push(cut.constant);
        let frac = slack_fraction_bits(&data, 0, d, weights.pi3, weights.pi_obj);
        let row = PenaltyRow {
            slack: Role::FeasibilitySlack(k),
            weight: weights.pi3,
            x_coeffs: cut.x_coeffs.clone(),
            phi_coeff: 0.0,
            constant: -cut.constant,
        };
        push(Role::FeasibilitySlack(k), bounds.cut_slack(cut), frac, row, &mut layout);
    }
    Ok(Planned { layout, penalties, t: offset })
}

/// Total bit count of the model `build_qubo` would produce.
pub fn qubit_count(op: &OriginalProblem, cuts: &CutPool, weights: &PenaltyWeights, bounds: &BoundSet, epsilon: f64) -> Result<usize, QuboError> {
    Ok(plan(op, cuts, weights, bounds, epsilon)?.t)
}

/// Adds `weight·(Σ aᵢzᵢ + k)²` to `qubo`, expanding with `zᵢ² = zᵢ`.
fn add_squared(qubo: &mut Qubo, terms: &[(usize, f64)], k: f64, weight: f64) {
    for (idx, &(i, a)) in terms.iter().enumerate() {
        qubo.add_diag(i, weight * (a * a + 2.0 * k * a));
        for &(j, b) in &terms[idx + 1..] {
            qubo.add_pair(i, j, 2.0 * weight * a * b);
        }
    }
    qubo.constant += weight * k * k;
}

fn bit_terms(enc: &BinaryEncoding, coeff: f64, out: &mut Vec<(usize, f64)>) {
    if coeff == 0.0 {
        return;
    }
    for (k, i) in enc.range().enumerate() {
        out.push((i, coeff * enc.weight(k)));
    }
}

pub fn build_qubo(
    op: &OriginalProblem,
    cuts: &CutPool,
    weights: &PenaltyWeights,
    bounds: &BoundSet,
    epsilon: f64,
    max_qubits: usize,
) -> Result<QuboModel, QuboError> {
    let Planned { layout, penalties, t } = plan(op, cuts, weights, bounds, epsilon)?;
    if t > max_qubits {
        return Err(QuboError::Size { t, max: max_qubits });
    }
    let mut qubo = Qubo::zeros(t);
    let phi = layout[op.n].1;

    // Objective: the master maximizes cᵀx + φ, the QUBO minimizes.
    for j in 0..op.n {
        qubo.add_diag(j, -weights.pi_obj * op.c[j]);
    }
    for (k, i) in phi.range().enumerate() {
        qubo.add_diag(i, -weights.pi_obj * phi.weight(k));
    }

    for row in &penalties {
        let mut terms = Vec::new();
        for (j, &a) in row.x_coeffs.iter().enumerate() {
            if a != 0.0 {
                terms.push((j, a));
            }
        }
        bit_terms(&phi, row.phi_coeff, &mut terms);
        let slack = layout.iter().find(|(r, _)| *r == row.slack).expect("slack in layout").1;
        bit_terms(&slack, 1.0, &mut terms);
        add_squared(&mut qubo, &terms, row.constant, row.weight);
    }

    Ok(QuboModel { qubo, n: op.n, layout, penalties, pi_obj: weights.pi_obj, c: op.c.clone() })
}
