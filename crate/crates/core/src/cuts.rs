//! Benders cuts and the pool that accumulates them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::dot;
use crate::model::OriginalProblem;

/// Two cuts whose multipliers differ by at most this much are the same cut.
pub const DUPLICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutKind {
    Optimality,
    Feasibility,
}

/// `(b − Ax)ᵀv` written as `constant − x_coeffsᵀx`, with `constant = bᵀv` and
/// `x_coeffs = Aᵀv`. Optimality cuts read `φ ≤ value(x)`, feasibility cuts
/// `value(x) ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub kind: CutKind,
    pub multipliers: Vec<f64>,
    pub constant: f64,
    pub x_coeffs: Vec<f64>,
}

impl Cut {
    fn new(kind: CutKind, v: &[f64], op: &OriginalProblem) -> Self {
        let multipliers: Vec<f64> = v.iter().map(|&e| if e.abs() < DUPLICATE_TOL { 0.0 } else { e }).collect();
        let x_coeffs = (0..op.n).map(|j| op.a.iter().zip(&multipliers).map(|(row, m)| row[j] * m).sum()).collect();
        Self { kind, constant: dot(&multipliers, &op.b), multipliers, x_coeffs }
    }

    pub fn value(&self, x: &[u8]) -> f64 {
        self.constant - self.x_coeffs.iter().zip(x).map(|(a, &xj)| a * f64::from(xj)).sum::<f64>()
    }

    /// Smallest value over `x ∈ [0,1]ⁿ`.
    pub fn min_over_box(&self) -> f64 {
        self.constant - self.x_coeffs.iter().map(|&a| a.max(0.0)).sum::<f64>()
    }

    /// Largest value over `x ∈ [0,1]ⁿ`.
    pub fn max_over_box(&self) -> f64 {
        self.constant - self.x_coeffs.iter().map(|&a| a.min(0.0)).sum::<f64>()
    }

    fn same_as(&self, other: &Cut) -> bool {
        self.kind == other.kind
            && self.multipliers.len() == other.multipliers.len()
            && self.multipliers.iter().zip(&other.multipliers).all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL)
    }
}

pub fn make_optimality_cut(mu: &[f64], op: &OriginalProblem) -> Cut {
    Cut::new(CutKind::Optimality, mu, op)
}

pub fn make_feasibility_cut(r: &[f64], op: &OriginalProblem) -> Cut {
    Cut::new(CutKind::Feasibility, r, op)
}

#[derive(Debug, Error, PartialEq)]
#[error("{kind:?} cut is already in the pool")]
pub struct DuplicateCut {
    pub kind: CutKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutPool {
    pub optimality: Vec<Cut>,
    pub feasibility: Vec<Cut>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.optimality.len() + self.feasibility.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn add(&mut self, cut: Cut) -> Result<(), DuplicateCut> {
        let list = match cut.kind {
            CutKind::Optimality => &mut self.optimality,
            CutKind::Feasibility => &mut self.feasibility,
        };
        if list.iter().any(|c| c.same_as(&cut)) {
            return Err(DuplicateCut { kind: cut.kind });
        }
        list.push(cut);
        Ok(())
    }

    /// Tightest optimality-cut bound on `φ` at `x`, or `None` without cuts.
    pub fn phi_cap(&self, x: &[u8]) -> Option<f64> {
        self.optimality.iter().map(|c| c.value(x)).reduce(f64::min)
    }

    /// Whether `x` satisfies every stored feasibility cut.
    pub fn feasibility_ok(&self, x: &[u8], tol: f64) -> bool {
        self.feasibility.iter().all(|c| c.value(x) >= -tol)
    }
}
