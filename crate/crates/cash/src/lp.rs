//! Dense linear programming for small problems.
//!
//! The optimizer's relaxations have at most a few dozen variables and a few
//! hundred rows, so a plain two-phase primal simplex over a dense tableau is
//! the robust choice: deterministic pivoting (Dantzig rule with a Bland
//! fallback for anti-cycling), explicit artificial variables for phase 1,
//! and variable bounds folded in as rows. All arithmetic is `f64`.

use std::collections::BTreeMap;

use thiserror::Error;

/// Constraint feasibility tolerance honored by optimal solutions.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-8;
/// Entries smaller than this never serve as pivots.
const PIVOT_TOLERANCE: f64 = 1e-10;
/// Reduced costs above this threshold count as optimal.
const REDUCED_COST_TOLERANCE: f64 = 1e-9;

/// Direction of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// One linear row `Σ coefficients[j]·x_j  relation  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: BTreeMap<usize, f64>,
    pub relation: Relation,
    pub rhs: f64,
    pub label: String,
}

impl LinearConstraint {
    pub fn new(
        coefficients: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
        label: impl Into<String>,
    ) -> Self {
        Self {
            coefficients: coefficients.into_iter().collect(),
            relation,
            rhs,
            label: label.into(),
        }
    }

    /// Evaluates the left-hand side at a point.
    pub fn lhs_at(&self, point: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .map(|(&j, &a)| a * point.get(j).copied().unwrap_or(0.0))
            .sum()
    }

    /// How far `point` violates this row (0 when satisfied).
    pub fn violation_at(&self, point: &[f64]) -> f64 {
        let lhs = self.lhs_at(point);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A minimization problem over `num_vars` variables with per-variable
/// bounds. `upper` entries may be `f64::INFINITY`; every lower bound must be
/// finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub num_vars: usize,
    /// Minimization objective, one coefficient per variable.
    pub objective: Vec<f64>,
    pub constraints: Vec<LinearConstraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver outcome. `values` and `objective` are meaningful only when
/// `status == Optimal`; otherwise `values` is empty and `objective` is NaN.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("problem dimensions are inconsistent: {0}")]
    Shape(String),
    #[error("constraint {index} ({label:?}) has no nonzero coefficient")]
    EmptyConstraint { index: usize, label: String },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("variable {0} has no finite lower bound")]
    UnboundedBelow(usize),
    #[error("simplex did not terminate within {0} pivots")]
    IterationLimit(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Solves the problem. Infeasibility and unboundedness are reported via
/// [`LpStatus`]; `Err` is reserved for malformed input and numerical
/// breakdown.
pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    validate(problem)?;
    Tableau::assemble(problem).run(problem)
}

fn validate(problem: &LpProblem) -> Result<(), LpError> {
    let n = problem.num_vars;
    if problem.objective.len() != n || problem.lower.len() != n || problem.upper.len() != n {
        return Err(LpError::Shape(format!(
            "num_vars={n} but objective/lower/upper have lengths {}/{}/{}",
            problem.objective.len(),
            problem.lower.len(),
            problem.upper.len()
        )));
    }
    if problem.objective.iter().any(|c| !c.is_finite()) {
        return Err(LpError::NonFinite("objective".into()));
    }
    for (j, (&lo, &hi)) in problem.lower.iter().zip(&problem.upper).enumerate() {
        if !lo.is_finite() {
            return Err(LpError::UnboundedBelow(j));
        }
        if hi.is_nan() || hi == f64::NEG_INFINITY {
            return Err(LpError::NonFinite(format!("upper bound of variable {j}")));
        }
    }
    for (index, c) in problem.constraints.iter().enumerate() {
        if !c.rhs.is_finite() {
            return Err(LpError::NonFinite(format!("rhs of constraint {index}")));
        }
        let mut any_nonzero = false;
        for (&j, &a) in &c.coefficients {
            if j >= n {
                return Err(LpError::Shape(format!(
                    "constraint {index} references variable {j} (num_vars={n})"
                )));
            }
            if !a.is_finite() {
                return Err(LpError::NonFinite(format!("constraint {index}")));
            }
            if a != 0.0 {
                any_nonzero = true;
            }
        }
        if !any_nonzero {
            return Err(LpError::EmptyConstraint {
                index,
                label: c.label.clone(),
            });
        }
    }
    Ok(())
}

/// Dense simplex tableau in standard form: shifted variables `y = x - lower`
/// plus slack/surplus and artificial columns, right-hand sides nonnegative.
struct Tableau {
    rows: usize,
    cols: usize,
    structural: usize,
    art_start: usize,
    data: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn assemble(problem: &LpProblem) -> Self {
        let n = problem.num_vars;
        // Raw rows over the shifted variables, bounds included as rows.
        let mut raw: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
        for c in &problem.constraints {
            let mut coef = vec![0.0; n];
            for (&j, &a) in &c.coefficients {
                coef[j] += a;
            }
            let shift: f64 = coef.iter().zip(&problem.lower).map(|(a, lo)| a * lo).sum();
            raw.push((coef, c.relation, c.rhs - shift));
        }
        for j in 0..n {
            let range = problem.upper[j] - problem.lower[j];
            if range.is_finite() {
                let mut coef = vec![0.0; n];
                coef[j] = 1.0;
                raw.push((coef, Relation::Le, range));
            }
        }
        for (coef, relation, rhs) in &mut raw {
            if *rhs < 0.0 {
                for a in coef.iter_mut() {
                    *a = -*a;
                }
                *rhs = -*rhs;
                *relation = match *relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }

        let rows = raw.len();
        let slacks = raw
            .iter()
            .filter(|(_, r, _)| matches!(r, Relation::Le | Relation::Ge))
            .count();
        let artificials = raw
            .iter()
            .filter(|(_, r, _)| matches!(r, Relation::Ge | Relation::Eq))
            .count();
        let art_start = n + slacks;
        let cols = art_start + artificials;

        let mut data = vec![0.0; rows * cols];
        let mut rhs = vec![0.0; rows];
        let mut basis = vec![0usize; rows];
        let mut next_slack = n;
        let mut next_art = art_start;
        for (r, (coef, relation, b)) in raw.into_iter().enumerate() {
            data[r * cols..r * cols + n].copy_from_slice(&coef);
            rhs[r] = b;
            match relation {
                Relation::Le => {
                    data[r * cols + next_slack] = 1.0;
                    basis[r] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    data[r * cols + next_slack] = -1.0;
                    next_slack += 1;
                    data[r * cols + next_art] = 1.0;
                    basis[r] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    data[r * cols + next_art] = 1.0;
                    basis[r] = next_art;
                    next_art += 1;
                }
            }
        }
        Self {
            rows,
            cols,
            structural: n,
            art_start,
            data,
            rhs,
            basis,
        }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn pivot(&mut self, pivot_row: usize, pivot_col: usize, reduced: &mut [f64]) {
        let cols = self.cols;
        let inv = 1.0 / self.data[pivot_row * cols + pivot_col];
        for j in 0..cols {
            self.data[pivot_row * cols + j] *= inv;
        }
        self.rhs[pivot_row] *= inv;
        // Exact unit column for the pivot position.
        self.data[pivot_row * cols + pivot_col] = 1.0;

        let pivot_copy: Vec<f64> = self.row(pivot_row).to_vec();
        let pivot_rhs = self.rhs[pivot_row];
        for r in 0..self.rows {
            if r == pivot_row {
                continue;
            }
            let factor = self.data[r * cols + pivot_col];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * cols..(r + 1) * cols];
            for (dst, &pv) in row.iter_mut().zip(&pivot_copy) {
                *dst -= factor * pv;
            }
            self.data[r * cols + pivot_col] = 0.0;
            self.rhs[r] -= factor * pivot_rhs;
        }
        let factor = reduced[pivot_col];
        if factor != 0.0 {
            for j in 0..cols {
                reduced[j] -= factor * pivot_copy[j];
            }
            reduced[pivot_col] = 0.0;
        }
        self.basis[pivot_row] = pivot_col;
    }

    /// Reduced costs `c_j − c_B·B⁻¹·A_j` for the cost function `cost`.
    fn reduced_costs(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let mut reduced: Vec<f64> = (0..self.cols).map(cost).collect();
        for r in 0..self.rows {
            let cb = cost(self.basis[r]);
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for j in 0..self.cols {
                reduced[j] -= cb * row[j];
            }
        }
        reduced
    }

    /// Runs simplex iterations until the reduced costs are nonnegative.
    /// Returns `Ok(true)` at optimum, `Ok(false)` when an improving column
    /// has no blocking row (unbounded direction).
    fn iterate(
        &mut self,
        reduced: &mut [f64],
        banned_from: usize,
        pivots: &mut usize,
    ) -> Result<bool, LpError> {
        let stall_limit = 200 + 2 * (self.rows + self.cols);
        let hard_limit = 1000 + 50 * (self.rows + self.cols);
        loop {
            let bland = *pivots > stall_limit;
            let mut entering: Option<usize> = None;
            let mut best = -REDUCED_COST_TOLERANCE;
            for (j, &rc) in reduced.iter().enumerate().take(banned_from) {
                if rc < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = rc;
                }
            }
            let Some(enter) = entering else {
                return Ok(true);
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.data[r * self.cols + enter];
                if a > PIVOT_TOLERANCE {
                    let ratio = self.rhs[r] / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(false);
            };
            self.pivot(row, enter, reduced);
            *pivots += 1;
            if *pivots > hard_limit {
                return Err(LpError::IterationLimit(*pivots));
            }
        }
    }

    fn run(mut self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        let mut pivots = 0usize;

        if self.art_start < self.cols {
            // Phase 1: minimize the sum of artificials.
            let art_start = self.art_start;
            let cost = move |j: usize| if j >= art_start { 1.0 } else { 0.0 };
            let mut reduced = self.reduced_costs(&cost);
            if !self.iterate(&mut reduced, self.cols, &mut pivots)? {
                return Err(LpError::Numerical(
                    "phase-1 objective unbounded below".into(),
                ));
            }
            let residual: f64 = (0..self.rows)
                .filter(|&r| self.basis[r] >= self.art_start)
                .map(|r| self.rhs[r])
                .sum();
            if residual > FEASIBILITY_TOLERANCE {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    values: Vec::new(),
                    objective: f64::NAN,
                });
            }
            // Drive leftover artificials out of the basis where possible;
            // rows that cannot pivot are redundant and stay at zero.
            for r in 0..self.rows {
                if self.basis[r] < self.art_start {
                    continue;
                }
                let pivot_col = (0..self.art_start)
                    .find(|&j| self.data[r * self.cols + j].abs() > PIVOT_TOLERANCE);
                if let Some(col) = pivot_col {
                    let mut dummy = vec![0.0; self.cols];
                    self.pivot(r, col, &mut dummy);
                }
            }
        }

        // Phase 2: original objective, artificial columns banned.
        let objective = problem.objective.clone();
        let structural = self.structural;
        let cost = move |j: usize| {
            if j < structural {
                objective[j]
            } else {
                0.0
            }
        };
        let mut reduced = self.reduced_costs(&cost);
        if !self.iterate(&mut reduced, self.art_start, &mut pivots)? {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                values: Vec::new(),
                objective: f64::NAN,
            });
        }

        let mut values = problem.lower.clone();
        for r in 0..self.rows {
            if self.basis[r] < self.structural {
                values[self.basis[r]] += self.rhs[r];
            }
        }
        let objective = problem
            .objective
            .iter()
            .zip(&values)
            .map(|(c, x)| c * x)
            .sum();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            values,
            objective,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(
        num_vars: usize,
        objective: Vec<f64>,
        constraints: Vec<LinearConstraint>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> LpProblem {
        LpProblem {
            num_vars,
            objective,
            constraints,
            lower,
            upper,
        }
    }

    #[test]
    fn interval_minimum() {
        let p = problem(
            1,
            vec![1.0],
            vec![
                LinearConstraint::new([(0, 1.0)], Relation::Ge, 0.25, "floor"),
                LinearConstraint::new([(0, 1.0)], Relation::Le, 1.0, "cap"),
            ],
            vec![0.0],
            vec![f64::INFINITY],
        );
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 0.25).abs() < 1e-9);
        assert!((s.objective - 0.25).abs() < 1e-9);
    }

    #[test]
    fn bounds_only_problem() {
        let p = problem(1, vec![1.0], vec![], vec![0.25], vec![1.0]);
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 0.25).abs() < 1e-9);
    }

    /// Shape of the optimizer's initial relaxation: the objective variable is
    /// decoupled from the weights, so it rests at its lower bound.
    #[test]
    fn decoupled_objective_rests_at_zero() {
        let p = problem(
            3,
            vec![0.0, 0.0, 1.0],
            vec![
                LinearConstraint::new([(0, 1.0), (1, 1.0)], Relation::Eq, 1.0, "simplex"),
                LinearConstraint::new([(0, -1.0), (1, 1.0)], Relation::Le, 0.0, "mono"),
                LinearConstraint::new([(0, 0.5), (1, 1.0)], Relation::Le, 1.0, "cost"),
            ],
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0],
        );
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.objective.abs() < 1e-9);
        let w1 = s.values[0];
        let w2 = s.values[1];
        assert!((w1 + w2 - 1.0).abs() < 1e-8);
        assert!(w2 <= w1 + 1e-8);
        assert!(0.5 * w1 + 1.0 * w2 <= 1.0 + 1e-8);
    }

    #[test]
    fn overpriced_cost_row_is_infeasible() {
        // 1.2·(w1 + 2·w2) ≤ 1 cannot hold with w1 + w2 = 1, w_i ≥ 0.
        let p = problem(
            2,
            vec![0.0, 0.0],
            vec![
                LinearConstraint::new([(0, 1.0), (1, 1.0)], Relation::Eq, 1.0, "simplex"),
                LinearConstraint::new([(0, 1.2), (1, 2.4)], Relation::Le, 1.0, "cost"),
            ],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
        );
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn textbook_two_variable_optimum() {
        // max x+y s.t. x+2y ≤ 4, 3x+y ≤ 6 → (1.6, 1.2).
        let p = problem(
            2,
            vec![-1.0, -1.0],
            vec![
                LinearConstraint::new([(0, 1.0), (1, 2.0)], Relation::Le, 4.0, "a"),
                LinearConstraint::new([(0, 3.0), (1, 1.0)], Relation::Le, 6.0, "b"),
            ],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[0] - 1.6).abs() < 1e-8);
        assert!((s.values[1] - 1.2).abs() < 1e-8);
        assert!((s.objective + 2.8).abs() < 1e-8);
    }

    #[test]
    fn unbounded_direction_detected() {
        let p = problem(
            1,
            vec![-1.0],
            vec![LinearConstraint::new([(0, 1.0)], Relation::Ge, 1.0, "floor")],
            vec![0.0],
            vec![f64::INFINITY],
        );
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_lower_bounds_shift_correctly() {
        // min x+y with x ≥ -2, y ≥ -3, x+y ≥ -4 → optimum -4.
        let p = problem(
            2,
            vec![1.0, 1.0],
            vec![LinearConstraint::new(
                [(0, 1.0), (1, 1.0)],
                Relation::Ge,
                -4.0,
                "cap",
            )],
            vec![-2.0, -3.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        let s = lp_solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 4.0).abs() < 1e-8);
    }

    #[test]
    fn adding_rows_never_improves_minimum() {
        let mut p = problem(
            2,
            vec![1.0, 2.0],
            vec![LinearConstraint::new(
                [(0, 1.0), (1, 1.0)],
                Relation::Ge,
                1.0,
                "base",
            )],
            vec![0.0, 0.0],
            vec![f64::INFINITY, f64::INFINITY],
        );
        let before = lp_solve(&p).unwrap().objective;
        p.constraints.push(LinearConstraint::new(
            [(1, 1.0)],
            Relation::Ge,
            0.5,
            "extra",
        ));
        let after = lp_solve(&p).unwrap().objective;
        assert!(after >= before - 1e-9);
    }

    #[test]
    fn malformed_problems_are_rejected() {
        let p = problem(
            1,
            vec![1.0],
            vec![LinearConstraint::new([(0, 0.0)], Relation::Le, 1.0, "zero")],
            vec![0.0],
            vec![1.0],
        );
        assert!(matches!(
            lp_solve(&p),
            Err(LpError::EmptyConstraint { index: 0, .. })
        ));

        let p = problem(1, vec![1.0], vec![], vec![f64::NEG_INFINITY], vec![1.0]);
        assert!(matches!(lp_solve(&p), Err(LpError::UnboundedBelow(0))));

        let p = problem(
            1,
            vec![1.0],
            vec![LinearConstraint::new([(3, 1.0)], Relation::Le, 1.0, "oob")],
            vec![0.0],
            vec![1.0],
        );
        assert!(matches!(lp_solve(&p), Err(LpError::Shape(_))));
    }

    #[test]
    fn identical_input_identical_output() {
        let p = problem(
            3,
            vec![1.0, -2.0, 0.5],
            vec![
                LinearConstraint::new([(0, 1.0), (1, 1.0), (2, 1.0)], Relation::Le, 2.0, "a"),
                LinearConstraint::new([(0, 1.0), (1, -1.0)], Relation::Ge, -1.0, "b"),
            ],
            vec![0.0, 0.0, 0.0],
            vec![2.0, 2.0, 2.0],
        );
        let a = lp_solve(&p).unwrap();
        let b = lp_solve(&p).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    }
}
