//! Dense two-phase primal simplex.
//!
//! Handles maximization or minimization over `≤`, `≥` and `=` rows with
//! arbitrary (possibly infinite) variable bounds. Besides the optimal primal
//! point, the solver reports row duals as shadow prices (`∂z*/∂rhs`), a Farkas
//! certificate when the rows are infeasible, and a recession direction when the
//! objective is unbounded.

use thiserror::Error;

/// Feasibility tolerance on primal and dual residuals.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced-cost threshold for declaring optimality.
pub const OPT_TOL: f64 = 1e-9;
/// Entries smaller than this are never used as pivots.
pub const PIVOT_TOL: f64 = 1e-10;
/// Phase-1 objective above this means the rows are infeasible.
const PHASE1_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sense {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {0} has lower bound above upper bound")]
    Bounds(usize),
    #[error("simplex failed to terminate after {0} pivots")]
    Numerical(usize),
}

/// A linear program `opt cᵀx` s.t. `rows · x (sense) rhs`, `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub row_senses: Vec<RowSense>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// New program with no rows and every variable in `[0, +∞)`.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            sense,
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            row_senses: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> &mut Self {
        self.rows.push(coeffs);
        self.row_senses.push(sense);
        self.rhs.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[col] = lower;
        self.upper[col] = upper;
        self
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_cols();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension("bound vectors must match objective length".into()));
        }
        if self.rhs.len() != self.rows.len() || self.row_senses.len() != self.rows.len() {
            return Err(LpError::Dimension("rhs/row senses must match row count".into()));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != n) {
            return Err(LpError::Dimension(format!("row {i} has wrong length")));
        }
        for j in 0..n {
            if self.lower[j] > self.upper[j] || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::Bounds(j));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of rows and bounds at `x` (0 when feasible).
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for ((row, &sense), &rhs) in self.rows.iter().zip(&self.row_senses).zip(&self.rhs) {
            let lhs = dot(row, x);
            let v = match sense {
                RowSense::Le => lhs - rhs,
                RowSense::Ge => rhs - lhs,
                RowSense::Eq => (lhs - rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }
}

/// Optimal primal/dual pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub primal: Vec<f64>,
    /// One shadow price per row: the rate of change of the optimum with the row's rhs.
    pub duals: Vec<f64>,
    /// `c − Aᵀ·duals`.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    /// Objective of the dual program built from `duals` and `reduced_costs`.
    ///
    /// Returns `±∞` when a reduced cost pushes against an infinite bound.
    pub fn dual_objective(&self, lp: &LinearProgram) -> f64 {
        let mut value = dot(&self.duals, &lp.rhs);
        for (j, &d) in self.reduced_costs.iter().enumerate() {
            if d.abs() <= OPT_TOL {
                continue;
            }
            // Max: positive reduced cost is held by the upper bound, negative by the lower.
            let bound = match (lp.sense, d > 0.0) {
                (Sense::Max, true) | (Sense::Min, false) => lp.upper[j],
                (Sense::Max, false) | (Sense::Min, true) => lp.lower[j],
            };
            value += d * bound;
        }
        value
    }

    /// Largest violation of the dual sign conditions.
    pub fn dual_residual(&self, lp: &LinearProgram) -> f64 {
        // Shadow prices: Max/Le and Min/Ge rows are ≥ 0, the mirrored cases ≤ 0.
        let mut worst = 0.0f64;
        for (&y, &sense) in self.duals.iter().zip(&lp.row_senses) {
            let v = match (lp.sense, sense) {
                (Sense::Max, RowSense::Le) | (Sense::Min, RowSense::Ge) => -y,
                (Sense::Max, RowSense::Ge) | (Sense::Min, RowSense::Le) => y,
                (_, RowSense::Eq) => 0.0,
            };
            worst = worst.max(v);
        }
        for (j, &d) in self.reduced_costs.iter().enumerate() {
            let pushes_up = match lp.sense {
                Sense::Max => d,
                Sense::Min => -d,
            };
            if pushes_up > 0.0 && lp.upper[j].is_infinite() {
                worst = worst.max(pushes_up);
            }
            if pushes_up < 0.0 && lp.lower[j].is_infinite() {
                worst = worst.max(-pushes_up);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal(LpSolution),
    /// Row multipliers `r` (≥ 0 on `≤` rows, ≤ 0 on `≥` rows) such that
    /// `min_{lower ≤ x ≤ upper} (rᵀA)x > rᵀrhs`.
    Infeasible { farkas: Vec<f64> },
    /// Direction `d` with `A d` respecting every row sense against a zero rhs,
    /// staying inside the bounds and strictly improving the objective.
    Unbounded { direction: Vec<f64> },
}

impl LpResult {
    pub fn optimal(&self) -> Option<&LpSolution> {
        match self {
            LpResult::Optimal(sol) => Some(sol),
            _ => None,
        }
    }

    pub fn status_name(&self) -> &'static str {
        match self {
            LpResult::Optimal(_) => "Optimal",
            LpResult::Infeasible { .. } => "Infeasible",
            LpResult::Unbounded { .. } => "Unbounded",
        }
    }
}

/// Amount by which a Farkas vector proves infeasibility (`< 0` means proof).
///
/// Computes `rᵀrhs − min_{box} (rᵀA)x`, returning `+∞` when the row signs are
/// wrong or the box minimum is unbounded.
pub fn farkas_gap(lp: &LinearProgram, farkas: &[f64]) -> f64 {
    for (&r, &sense) in farkas.iter().zip(&lp.row_senses) {
        let bad = match sense {
            RowSense::Le => r < -FEAS_TOL,
            RowSense::Ge => r > FEAS_TOL,
            RowSense::Eq => false,
        };
        if bad {
            return f64::INFINITY;
        }
    }
    let mut box_min = 0.0;
    for j in 0..lp.num_cols() {
        let g: f64 = lp.rows.iter().zip(farkas).map(|(row, &r)| r * row[j]).sum();
        if g.abs() <= 1e-12 {
            continue;
        }
        let bound = if g > 0.0 { lp.lower[j] } else { lp.upper[j] };
        if bound.is_infinite() {
            return f64::INFINITY;
        }
        box_min += g * bound;
    }
    dot(farkas, &lp.rhs) - box_min
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How an original column maps onto nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// `x = lower + z`.
    Shift { lower: f64, col: usize },
    /// `x = upper − z`.
    Mirror { upper: f64, col: usize },
    /// `x = z⁺ − z⁻`.
    Free { pos: usize, neg: usize },
}

struct Tableau {
    /// `m × (ncols + 1)`, last column is the rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Index of the column whose initial coefficients form `e_i` for each row.
    unit_col: Vec<usize>,
    first_artificial: usize,
    ncols: usize,
    pivots: usize,
    degenerate: usize,
    bland: bool,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.ncols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, &pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, &tij) in d.iter_mut().zip(&self.t[i][..self.ncols]) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    /// `c_Bᵀ B⁻¹`, read from the unit columns.
    fn row_prices(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.t.len();
        (0..m)
            .map(|i| {
                let uc = self.unit_col[i];
                self.basis.iter().enumerate().map(|(k, &b)| cost[b] * self.t[k][uc]).sum()
            })
            .collect()
    }

    fn entering(&self, d: &[f64], allow_artificial: bool) -> Option<usize> {
        let limit = if allow_artificial { self.ncols } else { self.first_artificial };
        let mut best: Option<(usize, f64)> = None;
        for (j, &dj) in d.iter().enumerate().take(limit) {
            if dj < -OPT_TOL {
                if self.bland {
                    return Some(j);
                }
                if best.map_or(true, |(_, v)| dj < v) {
                    best = Some((j, dj));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.t.iter().enumerate() {
            let a = row[col];
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs simplex iterations for `cost`. Returns `Err(col)` when column `col`
    /// is an improving direction with no blocking row.
    fn optimize(&mut self, cost: &[f64], allow_artificial: bool, max_pivots: usize) -> Result<Result<(), usize>, LpError> {
        let m = self.t.len();
        let degenerate_limit = 5 * (m + self.ncols);
        loop {
            let d = self.reduced_costs(cost);
            let Some(col) = self.entering(&d, allow_artificial) else {
                return Ok(Ok(()));
            };
            let Some(row) = self.leaving(col) else {
                return Ok(Err(col));
            };
            if self.rhs(row).abs() <= 1e-12 {
                self.degenerate += 1;
                if self.degenerate > degenerate_limit {
                    self.bland = true;
                }
            }
            self.pivot(row, col);
            if self.pivots > max_pivots {
                return Err(LpError::Numerical(self.pivots));
            }
        }
    }
}

/// Solves `lp`. Deterministic: identical inputs give identical pivot sequences.
pub fn solve(lp: &LinearProgram) -> Result<LpResult, LpError> {
    lp.validate()?;
    let n = lp.num_cols();
    let m0 = lp.num_rows();

    // Column substitution into z ≥ 0.
    let mut maps = Vec::with_capacity(n);
    let mut nz = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        if l.is_finite() {
            maps.push(ColMap::Shift { lower: l, col: nz });
            if u.is_finite() {
                bound_rows.push((nz, u - l));
            }
            nz += 1;
        } else if u.is_finite() {
            maps.push(ColMap::Mirror { upper: u, col: nz });
            nz += 1;
        } else {
            maps.push(ColMap::Free { pos: nz, neg: nz + 1 });
            nz += 2;
        }
    }

    // Rows in z-space: (coeffs, sense, rhs).
    let mut zrows: Vec<(Vec<f64>, RowSense, f64)> = Vec::with_capacity(m0 + bound_rows.len());
    for i in 0..m0 {
        let mut coeffs = vec![0.0; nz];
        let mut rhs = lp.rhs[i];
        for (j, map) in maps.iter().enumerate() {
            let a = lp.rows[i][j];
            if a == 0.0 {
                continue;
            }
            match *map {
                ColMap::Shift { lower, col } => {
                    coeffs[col] += a;
                    rhs -= a * lower;
                }
                ColMap::Mirror { upper, col } => {
                    coeffs[col] -= a;
                    rhs -= a * upper;
                }
                ColMap::Free { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        zrows.push((coeffs, lp.row_senses[i], rhs));
    }
    for &(col, width) in &bound_rows {
        let mut coeffs = vec![0.0; nz];
        coeffs[col] = 1.0;
        zrows.push((coeffs, RowSense::Le, width));
    }
    let m = zrows.len();

    // Slack columns, sign flips, artificials.
    let nslack = zrows.iter().filter(|r| r.1 != RowSense::Eq).count();
    let mut sigma = vec![1.0; m];
    let mut slack_of_row = vec![None; m];
    let mut s = nz;
    for (i, row) in zrows.iter().enumerate() {
        if row.1 != RowSense::Eq {
            slack_of_row[i] = Some(s);
            s += 1;
        }
        if row.2 < 0.0 {
            sigma[i] = -1.0;
        }
    }
    let needs_artificial: Vec<bool> = (0..m)
        .map(|i| {
            let slack_sign = match zrows[i].1 {
                RowSense::Le => 1.0,
                RowSense::Ge => -1.0,
                RowSense::Eq => 0.0,
            };
            slack_sign * sigma[i] <= 0.0
        })
        .collect();
    let nart = needs_artificial.iter().filter(|&&b| b).count();
    let first_artificial = nz + nslack;
    let ncols = first_artificial + nart;

    let mut t = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0; m];
    let mut unit_col = vec![0; m];
    let mut a = first_artificial;
    for (i, (coeffs, sense, rhs)) in zrows.iter().enumerate() {
        let sg = sigma[i];
        for (j, &c) in coeffs.iter().enumerate() {
            t[i][j] = sg * c;
        }
        if let Some(sc) = slack_of_row[i] {
            t[i][sc] = sg * if *sense == RowSense::Le { 1.0 } else { -1.0 };
        }
        t[i][ncols] = sg * rhs;
        if needs_artificial[i] {
            t[i][a] = 1.0;
            basis[i] = a;
            unit_col[i] = a;
            a += 1;
        } else {
            let sc = slack_of_row[i].expect("unit slack");
            basis[i] = sc;
            unit_col[i] = sc;
        }
    }

    let mut tab = Tableau { t, basis, unit_col, first_artificial, ncols, pivots: 0, degenerate: 0, bland: false };
    let max_pivots = 50 * (m + ncols) + 1000;

    // Phase 1.
    let mut cost1 = vec![0.0; ncols];
    for c in cost1.iter_mut().skip(first_artificial) {
        *c = 1.0;
    }
    if nart > 0 {
        // Phase 1 is bounded below by 0, so it never reports an improving ray.
        let _ = tab.optimize(&cost1, true, max_pivots)?;
        let infeas: f64 = tab.basis.iter().enumerate().map(|(i, &b)| cost1[b] * tab.rhs(i)).sum();
        if infeas > PHASE1_TOL {
            let w = tab.row_prices(&cost1);
            let farkas = (0..m0).map(|i| clean(-sigma[i] * w[i])).collect();
            return Ok(LpResult::Infeasible { farkas });
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if tab.basis[i] >= first_artificial {
                if let Some(j) = (0..first_artificial).find(|&j| tab.t[i][j].abs() > PIVOT_TOL) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    // Phase 2, always minimizing internally.
    let sign = match lp.sense {
        Sense::Max => -1.0,
        Sense::Min => 1.0,
    };
    let mut cost2 = vec![0.0; ncols];
    for (j, map) in maps.iter().enumerate() {
        let c = sign * lp.objective[j];
        match *map {
            ColMap::Shift { col, .. } => cost2[col] = c,
            ColMap::Mirror { col, .. } => cost2[col] = -c,
            ColMap::Free { pos, neg } => {
                cost2[pos] = c;
                cost2[neg] = -c;
            }
        }
    }
    tab.degenerate = 0;
    tab.bland = false;
    if let Err(col) = tab.optimize(&cost2, false, max_pivots)? {
        let mut dz = vec![0.0; ncols];
        dz[col] = 1.0;
        for (i, &b) in tab.basis.iter().enumerate() {
            dz[b] -= tab.t[i][col];
        }
        let direction = maps
            .iter()
            .map(|map| match *map {
                ColMap::Shift { col, .. } => clean(dz[col]),
                ColMap::Mirror { col, .. } => clean(-dz[col]),
                ColMap::Free { pos, neg } => clean(dz[pos] - dz[neg]),
            })
            .collect();
        return Ok(LpResult::Unbounded { direction });
    }

    let mut z = vec![0.0; ncols];
    for (i, &b) in tab.basis.iter().enumerate() {
        z[b] = tab.rhs(i);
    }
    let primal: Vec<f64> = maps
        .iter()
        .map(|map| match *map {
            ColMap::Shift { lower, col } => lower + z[col],
            ColMap::Mirror { upper, col } => upper - z[col],
            ColMap::Free { pos, neg } => z[pos] - z[neg],
        })
        .collect();
    let prices = tab.row_prices(&cost2);
    let duals: Vec<f64> = (0..m0).map(|i| clean(sign * sigma[i] * prices[i])).collect();
    let reduced_costs = (0..n)
        .map(|j| {
            let col_dot: f64 = lp.rows.iter().zip(&duals).map(|(row, &y)| row[j] * y).sum();
            clean(lp.objective[j] - col_dot)
        })
        .collect();
    let objective = lp.objective_value(&primal);
    Ok(LpResult::Optimal(LpSolution { primal, duals, reduced_costs, objective }))
}

/// Flushes round-off noise to exact zero.
fn clean(v: f64) -> f64 {
    if v.abs() < 1e-12 {
        0.0
    } else {
        v
    }
}
