//! The LP subproblem at a fixed `x̂` and the LP relaxations used to bound the
//! encoded master variables.

use thiserror::Error;

use crate::lp::{self, dot, LinearProgram, LpError, LpResult, RowSense, Sense};
use crate::model::OriginalProblem;

/// Slack allowed on `(b − Ax̂)ᵀμ ≤ f(x̂)` when re-selecting among optimal duals.
const DUAL_SELECT_TOL: f64 = 1e-7;
/// Entries this close to zero are flushed in cut vectors.
const CUT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RelaxationError {
    #[error("LP relaxation is infeasible")]
    Infeasible,
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubproblemOutcome {
    /// `objective = hᵀy = (b − Ax̂)ᵀμ`, `μ ≥ 0` with `Gᵀμ ≥ h`.
    Feasible { y: Vec<f64>, objective: f64, mu: Vec<f64> },
    /// `r ≥ 0`, `Gᵀr ≥ 0`, scaled so that `rᵀ(b − Ax̂) = −1`.
    Infeasible { ray: Vec<f64> },
    Unbounded { direction: Vec<f64> },
}

/// `max hᵀy` s.t. `Gy ≤ rhs`, `y ≥ 0`.
pub fn subproblem_lp(op: &OriginalProblem, rhs: &[f64]) -> LinearProgram {
    let mut lp = LinearProgram::new(Sense::Max, op.h.clone());
    for (row, &r) in op.g.iter().zip(rhs) {
        lp.add_row(row.clone(), RowSense::Le, r);
    }
    lp
}

fn flush(v: &mut [f64]) {
    for e in v.iter_mut() {
        if e.abs() < CUT_ZERO_TOL {
            *e = 0.0;
        }
    }
}

pub fn solve_subproblem(op: &OriginalProblem, x_hat: &[u8]) -> Result<SubproblemOutcome, LpError> {
    if x_hat.len() != op.n {
        return Err(LpError::Dimension(format!("x̂ has {} entries, expected {}", x_hat.len(), op.n)));
    }
    let rhs = op.residual_rhs(x_hat);
    let lp = subproblem_lp(op, &rhs);
    match lp::solve(&lp)? {
        LpResult::Optimal(sol) => {
            let mu = select_dual(op, &rhs, sol.objective).unwrap_or_else(|| {
                let mut mu: Vec<f64> = sol.duals.iter().map(|&d| d.max(0.0)).collect();
                flush(&mut mu);
                mu
            });
            Ok(SubproblemOutcome::Feasible { y: sol.primal, objective: sol.objective, mu })
        }
        LpResult::Infeasible { farkas } => {
            let mut ray: Vec<f64> = farkas.iter().map(|&r| r.max(0.0)).collect();
            let value = dot(&ray, &rhs);
            if value < 0.0 {
                ray.iter_mut().for_each(|r| *r /= -value);
            }
            flush(&mut ray);
            Ok(SubproblemOutcome::Infeasible { ray })
        }
        LpResult::Unbounded { direction } => Ok(SubproblemOutcome::Unbounded { direction }),
    }
}

/// Among the optimal duals at `x̂`, pick one minimizing the cut value at the
/// centre of the box `x = ½·1`. Degenerate subproblems have many optimal
/// duals; this choice keeps the cut informative away from `x̂`.
fn select_dual(op: &OriginalProblem, rhs: &[f64], value: f64) -> Option<Vec<f64>> {
    if op.m1 == 0 {
        return Some(Vec::new());
    }
    let half = vec![0.5; op.n];
    let core: Vec<f64> = op
        .a
        .iter()
        .zip(&op.b)
        .map(|(row, &bi)| bi - row.iter().zip(&half).map(|(a, x)| a * x).sum::<f64>())
        .collect();
    let mut lp = LinearProgram::new(Sense::Min, core);
    for j in 0..op.p {
        lp.add_row(op.g.iter().map(|row| row[j]).collect(), RowSense::Ge, op.h[j]);
    }
    lp.add_row(rhs.to_vec(), RowSense::Le, value + DUAL_SELECT_TOL * (1.0 + value.abs()));
    let sol = match lp::solve(&lp) {
        Ok(LpResult::Optimal(sol)) => sol,
        _ => return None,
    };
    let mut mu: Vec<f64> = sol.primal.iter().map(|&m| m.max(0.0)).collect();
    flush(&mut mu);
    // Keep the choice only if it is still an optimal dual to working precision.
    let dual_ok = (0..op.p).all(|j| op.g.iter().zip(&mu).map(|(row, m)| row[j] * m).sum::<f64>() >= op.h[j] - 1e-7);
    (dual_ok && (dot(&mu, rhs) - value).abs() <= 1e-6 * (1.0 + value.abs())).then_some(mu)
}

/// Which constraint blocks of the relaxation to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelaxationRows {
    pub linking: bool,
    pub master: bool,
}

impl RelaxationRows {
    pub const ALL: Self = Self { linking: true, master: true };
}

/// Relaxation over `(x, y)` with `x ∈ [0,1]ⁿ`, `y ≥ 0` and the selected rows.
fn relaxation_lp(op: &OriginalProblem, sense: Sense, cx: Vec<f64>, cy: Vec<f64>, rows: RelaxationRows) -> LinearProgram {
    let n = op.n;
    let mut objective = cx;
    objective.extend(cy);
    let mut lp = LinearProgram::new(sense, objective);
    for j in 0..n {
        lp.set_bounds(j, 0.0, 1.0);
    }
    if rows.linking {
        for ((a, g), &b) in op.a.iter().zip(&op.g).zip(&op.b) {
            let mut coeffs = a.clone();
            coeffs.extend_from_slice(g);
            lp.add_row(coeffs, RowSense::Le, b);
        }
    }
    if rows.master {
        for (bk, &bp) in op.b_mat.iter().zip(&op.b_prime) {
            let mut coeffs = bk.clone();
            coeffs.resize(n + op.p, 0.0);
            lp.add_row(coeffs, RowSense::Le, bp);
        }
    }
    lp
}

fn relaxation_value(lp: &LinearProgram) -> Result<f64, RelaxationError> {
    match lp::solve(lp)? {
        LpResult::Optimal(sol) => Ok(sol.objective),
        LpResult::Infeasible { .. } => Err(RelaxationError::Infeasible),
        LpResult::Unbounded { .. } => Err(RelaxationError::Unbounded),
    }
}

/// `max hᵀy` over the relaxation restricted to `rows`.
pub fn phi_max_with(op: &OriginalProblem, rows: RelaxationRows) -> Result<f64, RelaxationError> {
    relaxation_value(&relaxation_lp(op, Sense::Max, vec![0.0; op.n], op.h.clone(), rows))
}

/// Upper bound on `φ` from the full relaxation.
pub fn phi_max_bound(op: &OriginalProblem) -> Result<f64, RelaxationError> {
    phi_max_with(op, RelaxationRows::ALL)
}

/// Lower bound on `φ`: `min hᵀy` over the full relaxation.
pub fn phi_min_bound(op: &OriginalProblem) -> Result<f64, RelaxationError> {
    relaxation_value(&relaxation_lp(op, Sense::Min, vec![0.0; op.n], op.h.clone(), RelaxationRows::ALL))
}

/// `max b′_k − B_k x` over the relaxation restricted to `rows` (`k` is 0-based).
pub fn slack_max_with(op: &OriginalProblem, k: usize, rows: RelaxationRows) -> Result<f64, RelaxationError> {
    let bk = op
        .b_mat
        .get(k)
        .ok_or_else(|| LpError::Dimension(format!("master row {k} out of range (m2 = {})", op.m2)))?;
    let cx = bk.iter().map(|v| -v).collect();
    let lp = relaxation_lp(op, Sense::Max, cx, vec![0.0; op.p], rows);
    Ok(op.b_prime[k] + relaxation_value(&lp)?)
}

/// Upper bound on the slack of master row `k` (0-based) from the full relaxation.
pub fn slack_max_bound(op: &OriginalProblem, k: usize) -> Result<f64, RelaxationError> {
    slack_max_with(op, k, RelaxationRows::ALL)
}
