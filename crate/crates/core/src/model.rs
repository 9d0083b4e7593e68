//! The binary MILP `max cᵀx + hᵀy` s.t. `Ax + Gy ≤ b`, `Bx ≤ b′`,
//! `x ∈ {0,1}ⁿ`, `y ≥ 0`, plus instance I/O, the random suite generator and an
//! enumeration oracle.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::LpError;
use crate::subproblem::{solve_subproblem, SubproblemOutcome};

/// Feasibility tolerance for `Ax + Gy ≤ b` and `Bx ≤ b′`.
pub const CONSTRAINT_TOL: f64 = 1e-7;
/// Largest `n` the enumeration oracle accepts.
pub const BRUTE_FORCE_MAX_N: usize = 20;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read instance: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed instance: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("instance has n = {n} binary variables; enumeration is limited to {max}")]
    Size { n: usize, max: usize },
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginalProblem {
    pub n: usize,
    pub p: usize,
    pub m1: usize,
    pub m2: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(rename = "B")]
    pub b_mat: Vec<Vec<f64>>,
    pub b_prime: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

fn check_matrix(name: &str, m: &[Vec<f64>], rows: usize, cols: usize) -> Result<(), ModelError> {
    if m.len() != rows {
        return Err(ModelError::Dimension(format!("{name} has {} rows, expected {rows}", m.len())));
    }
    if let Some((i, r)) = m.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(ModelError::Dimension(format!("{name} row {i} has {} entries, expected {cols}", r.len())));
    }
    Ok(())
}

fn check_vector(name: &str, v: &[f64], len: usize) -> Result<(), ModelError> {
    if v.len() != len {
        return Err(ModelError::Dimension(format!("{name} has {} entries, expected {len}", v.len())));
    }
    Ok(())
}

impl OriginalProblem {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_matrix("A", &self.a, self.m1, self.n)?;
        check_matrix("G", &self.g, self.m1, self.p)?;
        check_vector("b", &self.b, self.m1)?;
        check_matrix("B", &self.b_mat, self.m2, self.n)?;
        check_vector("b_prime", &self.b_prime, self.m2)?;
        check_vector("c", &self.c, self.n)?;
        check_vector("h", &self.h, self.p)?;
        let finite = self
            .a
            .iter()
            .chain(&self.g)
            .chain(&self.b_mat)
            .flatten()
            .chain(&self.b)
            .chain(&self.b_prime)
            .chain(&self.c)
            .chain(&self.h)
            .all(|v| v.is_finite());
        if !finite {
            return Err(ModelError::Dimension("all coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let op: Self = serde_json::from_str(text)?;
        op.validate()?;
        Ok(op)
    }

    pub fn to_json(&self) -> String {
        // serde_json writes the shortest representation that round-trips exactly.
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    /// The PoC instance with two binary and four continuous variables.
    pub fn poc() -> Self {
        let z = [0.0, 0.0];
        Self {
            n: 2,
            p: 4,
            m1: 8,
            m2: 1,
            a: vec![z.to_vec(), z.to_vec(), z.to_vec(), z.to_vec(), vec![-1.0, 0.0], vec![-1.0, 0.0], vec![0.0, -1.0], vec![0.0, -1.0]],
            g: vec![
                vec![1.0, 0.0, 1.0, 0.0],
                vec![1.0, 0.0, 0.0, 1.0],
                vec![0.0, 1.0, 1.0, 0.0],
                vec![0.0, 1.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
            b: vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            b_mat: vec![vec![-1.0, -1.0]],
            b_prime: vec![-1.0],
            c: vec![-15.0, -10.0],
            h: vec![8.0, 9.0, 5.0, 6.0],
        }
    }

    /// `b − A x`, the right-hand side of the subproblem at `x`.
    pub fn residual_rhs(&self, x: &[u8]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, &bi)| bi - row.iter().zip(x).map(|(&aij, &xj)| aij * f64::from(xj)).sum::<f64>())
            .collect()
    }

    pub fn master_feasible(&self, x: &[u8]) -> bool {
        self.b_mat.iter().zip(&self.b_prime).all(|(row, &bp)| {
            let lhs: f64 = row.iter().zip(x).map(|(&v, &xj)| v * f64::from(xj)).sum();
            lhs <= bp + CONSTRAINT_TOL
        })
    }

    pub fn linear_x(&self, x: &[u8]) -> f64 {
        self.c.iter().zip(x).map(|(&c, &xj)| c * f64::from(xj)).sum()
    }

    pub fn objective(&self, x: &[u8], y: &[f64]) -> f64 {
        self.linear_x(x) + self.h.iter().zip(y).map(|(h, y)| h * y).sum::<f64>()
    }

    /// Whether `(x, y)` satisfies every constraint of the MILP.
    pub fn is_feasible(&self, x: &[u8], y: &[f64]) -> bool {
        if x.len() != self.n || y.len() != self.p || x.iter().any(|&v| v > 1) || y.iter().any(|&v| v < -CONSTRAINT_TOL) {
            return false;
        }
        let rhs = self.residual_rhs(x);
        let linking_ok = self
            .g
            .iter()
            .zip(&rhs)
            .all(|(row, &r)| row.iter().zip(y).map(|(g, y)| g * y).sum::<f64>() <= r + CONSTRAINT_TOL);
        linking_ok && self.master_feasible(x)
    }
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<OriginalProblem, ModelError> {
    let text = fs::read_to_string(path)?;
    OriginalProblem::from_json(&text)
}

pub fn save_instance(op: &OriginalProblem, path: impl AsRef<Path>) -> Result<(), ModelError> {
    fs::write(path, op.to_json())?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::Feasible => "Feasible",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::Unbounded => "Unbounded",
        };
        f.write_str(s)
    }
}

/// A MILP answer. `x`/`y` are empty and `objective` is `−∞` (infeasible) or
/// `+∞` (unbounded) when no finite solution exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MilpSolution {
    pub x: Vec<u8>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
}

impl MilpSolution {
    pub fn infeasible() -> Self {
        Self { x: Vec::new(), y: Vec::new(), objective: f64::NEG_INFINITY, status: SolveStatus::Infeasible }
    }

    pub fn unbounded() -> Self {
        Self { x: Vec::new(), y: Vec::new(), objective: f64::INFINITY, status: SolveStatus::Unbounded }
    }

    pub fn has_solution(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}

/// Enumerates every `x` with `Bx ≤ b′`, solving the LP in `y` for each.
///
/// Ties are resolved in favour of the first `x` in counting order
/// (`x₀` is the least significant bit).
pub fn brute_force_solve(op: &OriginalProblem) -> Result<MilpSolution, ModelError> {
    if op.n > BRUTE_FORCE_MAX_N {
        return Err(ModelError::Size { n: op.n, max: BRUTE_FORCE_MAX_N });
    }
    let mut best: Option<MilpSolution> = None;
    for mask in 0u32..(1u32 << op.n) {
        let x: Vec<u8> = (0..op.n).map(|j| ((mask >> j) & 1) as u8).collect();
        if !op.master_feasible(&x) {
            continue;
        }
        match solve_subproblem(op, &x)? {
            SubproblemOutcome::Unbounded { .. } => return Ok(MilpSolution::unbounded()),
            SubproblemOutcome::Infeasible { .. } => {}
            SubproblemOutcome::Feasible { y, .. } => {
                let objective = op.objective(&x, &y);
                if best.as_ref().map_or(true, |b| objective > b.objective + 1e-9) {
                    best = Some(MilpSolution { x, y, objective, status: SolveStatus::Optimal });
                }
            }
        }
    }
    Ok(best.unwrap_or_else(MilpSolution::infeasible))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_range: (usize, usize),
    pub p_range: (usize, usize),
    pub m1_range: (usize, usize),
    pub seed: u64,
    pub count: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self { n_range: (2, 5), p_range: (2, 10), m1_range: (5, 14), seed: 0, count: 60 }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, (lo, hi)) in [("n", self.n_range), ("p", self.p_range), ("m1", self.m1_range)] {
            if lo > hi {
                return Err(ModelError::Config(format!("{name} range [{lo}, {hi}] is empty")));
            }
        }
        if self.n_range.0 < 2 {
            return Err(ModelError::Config("n must be at least 2 so that 0 < b′ < n".into()));
        }
        if self.n_range.1 > BRUTE_FORCE_MAX_N {
            return Err(ModelError::Config(format!("n above {BRUTE_FORCE_MAX_N} is not supported")));
        }
        Ok(())
    }
}

/// One decimal place, with `-0.0` folded into `0.0`.
fn round1(v: f64) -> f64 {
    let r = (v * 10.0).round() / 10.0;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Random suite: `A ≤ 0`, `G ≥ 0`, `b ≥ 1`, `B = 1ᵀ`, `b′ ∈ {1, …, n−1}`,
/// `c ≥ 0`, `h ≥ 1`, all rounded to one decimal.
pub fn generate_instances(cfg: &GeneratorConfig) -> Result<Vec<OriginalProblem>, ModelError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let n = rng.gen_range(cfg.n_range.0..=cfg.n_range.1);
        let p = rng.gen_range(cfg.p_range.0..=cfg.p_range.1);
        let m1 = rng.gen_range(cfg.m1_range.0..=cfg.m1_range.1);
        let mut uniform = |lo: f64, hi: f64| round1(rng.gen_range(lo..=hi));
        let a = (0..m1).map(|_| (0..n).map(|_| -uniform(0.0, 5.0)).map(round1).collect()).collect();
        let g = (0..m1).map(|_| (0..p).map(|_| uniform(0.0, 5.0)).collect()).collect();
        let b = (0..m1).map(|_| uniform(1.0, 10.0)).collect();
        let c = (0..n).map(|_| uniform(0.0, 10.0)).collect();
        let h = (0..p).map(|_| uniform(1.0, 10.0)).collect();
        let b_prime = vec![rng.gen_range(1..n) as f64];
        let op = OriginalProblem { n, p, m1, m2: 1, a, g, b, b_mat: vec![vec![1.0; n]], b_prime, c, h };
        debug_assert!(op.validate().is_ok());
        out.push(op);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poc_loads_from_json() {
        let text = OriginalProblem::poc().to_json();
        let op = OriginalProblem::from_json(&text).unwrap();
        assert_eq!(op.c, vec![-15.0, -10.0]);
        assert_eq!(op.h, vec![8.0, 9.0, 5.0, 6.0]);
        assert_eq!((op.n, op.p, op.m1, op.m2), (2, 4, 8, 1));
    }

    #[test]
    fn unconstrained_shape_is_valid() {
        let text = r#"{"n":1,"p":1,"m1":0,"m2":0,"A":[],"G":[],"b":[],"B":[],"b_prime":[],"c":[1],"h":[0]}"#;
        let op = OriginalProblem::from_json(text).unwrap();
        assert_eq!(op.m1, 0);
    }

    #[test]
    fn short_a_is_dimension_error() {
        let mut op = OriginalProblem::poc();
        op.a.pop();
        let err = OriginalProblem::from_json(&serde_json::to_string(&op).unwrap()).unwrap_err();
        assert!(matches!(err, ModelError::Dimension(_)), "{err}");
    }

    #[test]
    fn garbage_is_parse_error() {
        assert!(matches!(OriginalProblem::from_json("{\"n\": 2"), Err(ModelError::Parse(_))));
        assert!(matches!(OriginalProblem::from_json("{\"n\": 2}"), Err(ModelError::Parse(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_instance("/nonexistent/x.milp.json"), Err(ModelError::Io(_))));
    }

    #[test]
    fn poc_oracle() {
        let sol = brute_force_solve(&OriginalProblem::poc()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.x, vec![1, 0]);
        assert!((sol.objective - 2.0).abs() < 1e-9);
        assert!(OriginalProblem::poc().is_feasible(&sol.x, &sol.y));
    }

    #[test]
    fn vacuous_constraints_are_optimal() {
        let op = OriginalProblem {
            n: 1,
            p: 1,
            m1: 1,
            m2: 1,
            a: vec![vec![0.0]],
            g: vec![vec![0.0]],
            b: vec![0.0],
            b_mat: vec![vec![0.0]],
            b_prime: vec![0.0],
            c: vec![1.0],
            h: vec![0.0],
        };
        let sol = brute_force_solve(&op).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.x, vec![1]);
        assert_eq!(sol.objective, 1.0);
    }

    #[test]
    fn unbounded_subproblem() {
        let op = OriginalProblem {
            n: 1,
            p: 1,
            m1: 1,
            m2: 0,
            a: vec![vec![0.0]],
            g: vec![vec![0.0]],
            b: vec![1.0],
            b_mat: vec![],
            b_prime: vec![],
            c: vec![0.0],
            h: vec![1.0],
        };
        assert_eq!(brute_force_solve(&op).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn oversize_is_rejected() {
        let mut op = OriginalProblem::poc();
        op.n = 21;
        assert!(matches!(brute_force_solve(&op), Err(ModelError::Size { .. })));
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = GeneratorConfig { seed: 1, count: 2, ..Default::default() };
        let a = generate_instances(&cfg).unwrap();
        let b = generate_instances(&cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn generator_sign_pattern() {
        let cfg = GeneratorConfig { seed: 7, count: 40, ..Default::default() };
        for op in generate_instances(&cfg).unwrap() {
            op.validate().unwrap();
            assert!(op.a.iter().flatten().all(|&v| v <= 0.0));
            assert!(op.g.iter().flatten().all(|&v| v >= 0.0));
            assert!(op.b.iter().all(|&v| v >= 0.0));
            assert!(op.c.iter().all(|&v| v >= 0.0) && op.h.iter().all(|&v| v >= 0.0));
            assert_eq!(op.b_mat, vec![vec![1.0; op.n]]);
            assert!(op.b_prime[0] > 0.0 && op.b_prime[0] < op.n as f64);
            assert!((2..=5).contains(&op.n) && (2..=10).contains(&op.p) && (5..=14).contains(&op.m1));
        }
    }

    #[test]
    fn collapsed_ranges() {
        let cfg = GeneratorConfig { n_range: (2, 2), p_range: (2, 2), seed: 3, count: 5, ..Default::default() };
        for op in generate_instances(&cfg).unwrap() {
            assert_eq!((op.n, op.p), (2, 2));
        }
    }

    #[test]
    fn empty_range_rejected() {
        let cfg = GeneratorConfig { p_range: (4, 3), ..Default::default() };
        assert!(matches!(generate_instances(&cfg), Err(ModelError::Config(_))));
    }
}
