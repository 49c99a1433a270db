//! Cutting-plane search for the defender's runtime distribution.
//!
//! For a fixed attacker budget `B` and hash cost `k`, the defender's problem
//! is a linear program over the runtime weights: minimize the adversary's
//! success `P` subject to the simplex/monotonicity/cost rows and one
//! coverage row per feasible guess allocation. The coverage family is
//! exponential, so rows are generated lazily: solve the relaxation, ask a
//! separation oracle for the most violated coverage row at the current
//! point, add it, repeat until the violation drops below `epsilon`. A sweep
//! over a grid of hash costs and a set of budgets then yields the final
//! defense, seeded with the uniform distribution as a safe fallback.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::adversary::{
    cash_best_response, tuple_schedule, uniform_cash_hash_cost, CashDistribution, CashError,
};
use crate::distribution::PasswordDistribution;
use crate::lp::{lp_solve, LinearConstraint, LpError, LpProblem, LpStatus, Relation};

/// Tolerance used by the separation oracle's feasibility checks.
const CHECK_TOLERANCE: f64 = 1e-9;

/// Hash evaluations an attacker spends on each popularity class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GuessAllocation {
    pub counts: Vec<u64>,
}

/// Knobs of the cutting-plane sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Residual-violation tolerance at which a candidate is accepted.
    pub epsilon: f64,
    /// Hash costs to sweep.
    pub k_set: Vec<f64>,
    /// Attacker budgets to optimize against.
    pub threshold_set: Vec<u64>,
    /// Number of runtime values.
    pub m: u32,
    /// Cap on LP-solve/oracle rounds per hash cost.
    pub max_cut_rounds: u32,
}

/// Budget multiples (of `c_max`) behind the default threshold set.
pub const DEFAULT_THRESHOLD_MULTIPLES: [f64; 11] = [
    5e4, 1e6, 1e7, 1.5e7, 2e7, 2.5e7, 2.65e7, 2.8e7, 3e7, 5e7, 1e8,
];

impl OptimizerConfig {
    /// Defaults: `epsilon` 0.02, 20 hash costs evenly spaced up to the
    /// largest feasible one (`c_max / ((1−alpha)·m + alpha)`, attained by
    /// the degenerate distribution), budgets from
    /// [`DEFAULT_THRESHOLD_MULTIPLES`], 200 cut rounds.
    pub fn recommended(c_max: f64, alpha: f64, m: u32) -> Self {
        let k_max = c_max / ((1.0 - alpha) * m as f64 + alpha);
        let k_set = (1..=20).map(|j| k_max * j as f64 / 20.0).collect();
        let threshold_set = DEFAULT_THRESHOLD_MULTIPLES
            .iter()
            .map(|&x| (x * c_max).round() as u64)
            .collect();
        Self {
            epsilon: 0.02,
            k_set,
            threshold_set,
            m,
            max_cut_rounds: 200,
        }
    }
}

/// Outcome of one cutting-plane run: the best distribution across the
/// hash-cost sweep at a fixed attacker budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSolution {
    pub cash: CashDistribution,
    pub k: f64,
    /// The relaxation's adversary-success value at termination.
    pub p_adv: f64,
    /// LP-solve/oracle rounds consumed by the winning hash cost.
    pub cut_rounds: u32,
    /// Violation reported by the final oracle audit (0 when it said "ok").
    pub residual_slack: f64,
}

/// How a defense was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefenseSource {
    Uniform,
    Threshold(u64),
}

impl std::fmt::Display for DefenseSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DefenseSource::Uniform => write!(f, "uniform"),
            DefenseSource::Threshold(b) => write!(f, "{b}"),
        }
    }
}

/// Final defense: distribution, hash cost, and its predicted cracked
/// fraction against the believed attacker value.
#[derive(Debug, Clone, PartialEq)]
pub struct DefenseSolution {
    pub cash: CashDistribution,
    pub k: f64,
    pub predicted_cracked: f64,
    pub source_threshold: DefenseSource,
}

/// A budget whose optimization failed (the sweep continues without it).
#[derive(Debug)]
pub struct ThresholdFailure {
    pub threshold: u64,
    pub error: OptimizeError,
}

/// Defense plus any per-budget failures encountered along the way.
#[derive(Debug)]
pub struct DefenseOutcome {
    pub solution: DefenseSolution,
    pub failures: Vec<ThresholdFailure>,
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("hash-cost set is empty")]
    EmptyKSet,
    #[error("threshold set is empty")]
    EmptyThresholdSet,
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("max_cut_rounds must be at least 1")]
    BadCutBudget,
    #[error("failed-login cost floor (1-alpha)*m*k = {floor} exceeds c_max = {c_max}")]
    InfeasibleCostFloor { floor: f64, c_max: f64 },
    #[error("allocation covers {got} classes, distribution has {want}")]
    AllocationShape { got: usize, want: usize },
    #[error("allocation spends {spent} evaluations on class {class}, above its cap {cap}")]
    AllocationExceedsClass { class: usize, spent: u64, cap: u64 },
    #[error("no hash cost in the sweep admits a feasible defense")]
    NoFeasibleHashCost,
    #[error(
        "cut budget exhausted: best candidate still violates a coverage row by {residual_slack}"
    )]
    CutBudgetExhausted {
        best: Box<ThresholdSolution>,
        residual_slack: f64,
    },
    #[error("linear program solver failed: {0}")]
    Lp(#[from] LpError),
    #[error("unexpected LP status {0:?} in the cutting-plane loop")]
    UnexpectedLpStatus(LpStatus),
    #[error("runtime weights collapsed to sum {sum} during normalization")]
    DegenerateWeights { sum: f64 },
    #[error("invalid runtime weights: {0}")]
    BadWeights(#[from] CashError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Amortized per-session hashing cost of a defense:
/// `(1−alpha)·k·m + alpha·k·Σ t·w_t`. Failed sessions probe all `m`
/// runtimes; correct logins stop at the sampled one.
pub fn server_cost(cash: &CashDistribution, k: f64, m: u32, alpha: f64) -> f64 {
    assert_eq!(cash.m(), m, "weight count does not match m");
    (1.0 - alpha) * k * m as f64 + alpha * k * cash.expected_runtime()
}

/// Rows of the initial relaxation: simplex equality, per-weight box rows,
/// the monotonicity chain, and (when `alpha > 0`) the budget row. Variables
/// `0..m` are the weights; variable `m` is the adversary-success `P`, whose
/// `[0,1]` box is folded into its bounds.
pub fn initial_constraints(
    m: u32,
    k: f64,
    c_max: f64,
    alpha: f64,
) -> Result<Vec<LinearConstraint>, OptimizeError> {
    let floor = (1.0 - alpha) * m as f64 * k;
    if floor > c_max {
        return Err(OptimizeError::InfeasibleCostFloor { floor, c_max });
    }
    let m = m as usize;
    let mut rows = Vec::with_capacity(3 * m + 2);
    rows.push(LinearConstraint::new(
        (0..m).map(|j| (j, 1.0)),
        Relation::Eq,
        1.0,
        "simplex",
    ));
    for j in 0..m {
        rows.push(LinearConstraint::new(
            [(j, 1.0)],
            Relation::Le,
            1.0,
            format!("ub[{}]", j + 1),
        ));
        rows.push(LinearConstraint::new(
            [(j, 1.0)],
            Relation::Ge,
            0.0,
            format!("lb[{}]", j + 1),
        ));
    }
    for j in 0..m.saturating_sub(1) {
        rows.push(LinearConstraint::new(
            [(j, 1.0), (j + 1, -1.0)],
            Relation::Ge,
            0.0,
            format!("mono[{}]", j + 1),
        ));
    }
    if alpha > 0.0 {
        rows.push(LinearConstraint::new(
            (0..m).map(|j| (j, alpha * k * (j + 1) as f64)),
            Relation::Le,
            c_max - floor,
            "cost",
        ));
    }
    Ok(rows)
}

/// Success probability of spreading `b.counts[i]` evaluations evenly over
/// class `i`: the first `n_i` evaluations of a class cover runtime 1 for
/// every password in it, the next `n_i` cover runtime 2, and so on.
pub fn allocation_success(
    dist: &PasswordDistribution,
    cash: &CashDistribution,
    b: &GuessAllocation,
) -> Result<f64, OptimizeError> {
    if b.counts.len() != dist.num_classes() {
        return Err(OptimizeError::AllocationShape {
            got: b.counts.len(),
            want: dist.num_classes(),
        });
    }
    let weights = cash.weights();
    let m = weights.len() as u64;
    let mut prefix = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    prefix.push(0.0);
    for w in weights {
        acc += w;
        prefix.push(acc);
    }
    let mut value = 0.0;
    for (class_pos, (class, &spent)) in dist.classes().iter().zip(&b.counts).enumerate() {
        let cap = m * class.count;
        if spent > cap {
            return Err(OptimizeError::AllocationExceedsClass {
                class: class_pos + 1,
                spent,
                cap,
            });
        }
        let full_levels = (spent / class.count) as usize;
        let partial = spent % class.count;
        let mut covered = class.count as f64 * prefix[full_levels];
        if partial > 0 {
            covered += partial as f64 * weights[full_levels];
        }
        value += class.probability * covered;
    }
    Ok(value)
}

/// A violated row reported by [`separation_oracle`].
#[derive(Debug, Clone)]
pub struct SeparationViolation {
    pub constraint: LinearConstraint,
    /// By how much the candidate violates the row.
    pub amount: f64,
    /// The frozen allocation, for coverage rows.
    pub allocation: Option<GuessAllocation>,
}

/// Oracle verdict on a candidate `(weights, P)` point.
#[derive(Debug, Clone)]
pub enum Separation {
    Ok,
    Violated(SeparationViolation),
}

/// Checks a candidate against every constraint family and returns the first
/// violated row: simplex sum, budget row, nonnegativity/monotonicity per
/// weight, the `P` box, and finally the coverage family, for which the
/// best-response allocation under the candidate is found greedily (take
/// whole tuple groups in schedule order, at most `n_i` per group, until `B`
/// picks) and frozen into a linear row. Runs in `O(m·n'·log(m·n'))`.
pub fn separation_oracle(
    dist: &PasswordDistribution,
    cash_candidate: &[f64],
    p_candidate: f64,
    budget: u64,
    k: f64,
    c_max: f64,
    alpha: f64,
) -> Result<Separation, OptimizeError> {
    let m = cash_candidate.len();
    let violated = |constraint: LinearConstraint, amount: f64| {
        Ok(Separation::Violated(SeparationViolation {
            constraint,
            amount,
            allocation: None,
        }))
    };

    let sum: f64 = cash_candidate.iter().sum();
    if (sum - 1.0).abs() > CHECK_TOLERANCE {
        return violated(
            LinearConstraint::new((0..m).map(|j| (j, 1.0)), Relation::Eq, 1.0, "simplex"),
            (sum - 1.0).abs(),
        );
    }
    if alpha > 0.0 {
        let floor = (1.0 - alpha) * m as f64 * k;
        let cost: f64 = floor
            + cash_candidate
                .iter()
                .enumerate()
                .map(|(j, w)| alpha * k * (j + 1) as f64 * w)
                .sum::<f64>();
        if cost > c_max + CHECK_TOLERANCE {
            return violated(
                LinearConstraint::new(
                    (0..m).map(|j| (j, alpha * k * (j + 1) as f64)),
                    Relation::Le,
                    c_max - floor,
                    "cost",
                ),
                cost - c_max,
            );
        }
    }
    for j in 0..m {
        if cash_candidate[j] < -CHECK_TOLERANCE {
            return violated(
                LinearConstraint::new([(j, 1.0)], Relation::Ge, 0.0, format!("lb[{}]", j + 1)),
                -cash_candidate[j],
            );
        }
        if j + 1 < m && cash_candidate[j + 1] > cash_candidate[j] + CHECK_TOLERANCE {
            return violated(
                LinearConstraint::new(
                    [(j, 1.0), (j + 1, -1.0)],
                    Relation::Ge,
                    0.0,
                    format!("mono[{}]", j + 1),
                ),
                cash_candidate[j + 1] - cash_candidate[j],
            );
        }
    }
    if p_candidate > 1.0 + CHECK_TOLERANCE {
        return violated(
            LinearConstraint::new([(m, 1.0)], Relation::Le, 1.0, "p_ub"),
            p_candidate - 1.0,
        );
    }
    if p_candidate < -CHECK_TOLERANCE {
        return violated(
            LinearConstraint::new([(m, 1.0)], Relation::Ge, 0.0, "p_lb"),
            -p_candidate,
        );
    }

    // Coverage family: greedy best response under the candidate weights.
    let cash = CashDistribution::new(cash_candidate.to_vec())?;
    let schedule = tuple_schedule(dist, &cash);
    let mut allocation = GuessAllocation {
        counts: vec![0u64; dist.num_classes()],
    };
    let mut remaining = budget;
    for group in schedule.entries() {
        if remaining == 0 {
            break;
        }
        let take = group.count.min(remaining);
        allocation.counts[group.class_index - 1] += take;
        remaining -= take;
    }
    let success = allocation_success(dist, &cash, &allocation)?;
    if p_candidate < success {
        let mut coefficients: Vec<(usize, f64)> = Vec::new();
        let mut coef = vec![0.0; m];
        for (class, &spent) in dist.classes().iter().zip(&allocation.counts) {
            let full_levels = (spent / class.count) as usize;
            let partial = spent % class.count;
            for item in coef.iter_mut().take(full_levels) {
                *item += class.probability * class.count as f64;
            }
            if partial > 0 {
                coef[full_levels] += class.probability * partial as f64;
            }
        }
        for (j, &a) in coef.iter().enumerate() {
            if a != 0.0 {
                coefficients.push((j, a));
            }
        }
        coefficients.push((m, -1.0));
        return Ok(Separation::Violated(SeparationViolation {
            constraint: LinearConstraint::new(
                coefficients,
                Relation::Le,
                0.0,
                format!("cover[B={budget}]"),
            ),
            amount: success - p_candidate,
            allocation: Some(allocation),
        }));
    }
    Ok(Separation::Ok)
}

fn validate_config(config: &OptimizerConfig) -> Result<(), OptimizeError> {
    if config.k_set.is_empty() {
        return Err(OptimizeError::EmptyKSet);
    }
    if config.epsilon.is_nan() || config.epsilon <= 0.0 {
        return Err(OptimizeError::BadEpsilon(config.epsilon));
    }
    if config.max_cut_rounds == 0 {
        return Err(OptimizeError::BadCutBudget);
    }
    Ok(())
}

/// Full validation for a defense search, including the threshold set.
pub(crate) fn validate_search_config(config: &OptimizerConfig) -> Result<(), OptimizeError> {
    if config.threshold_set.is_empty() {
        return Err(OptimizeError::EmptyThresholdSet);
    }
    validate_config(config)
}

fn relaxation_problem(m: usize, constraints: &[LinearConstraint]) -> LpProblem {
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut upper = vec![f64::INFINITY; m + 1];
    upper[m] = 1.0;
    LpProblem {
        num_vars: m + 1,
        objective,
        constraints: constraints.to_vec(),
        lower: vec![0.0; m + 1],
        upper,
    }
}

/// Cleans LP round-off out of a weight vector: clamp negatives, enforce
/// monotonicity exactly, renormalize the sum to 1. Each step moves weights
/// by at most the LP feasibility tolerance.
fn normalized_cash(values: &[f64]) -> Result<CashDistribution, OptimizeError> {
    let mut w = values.to_vec();
    for x in &mut w {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    for j in 1..w.len() {
        if w[j] > w[j - 1] {
            w[j] = w[j - 1];
        }
    }
    let sum: f64 = w.iter().sum();
    if sum.is_nan() || sum <= 0.5 {
        return Err(OptimizeError::DegenerateWeights { sum });
    }
    for x in &mut w {
        *x /= sum;
    }
    Ok(CashDistribution::new(w)?)
}

enum KSweepOutcome {
    Completed(ThresholdSolution),
    Exhausted(ThresholdSolution),
    InfeasibleK,
}

fn optimize_single_k(
    dist: &PasswordDistribution,
    budget: u64,
    k: f64,
    c_max: f64,
    alpha: f64,
    config: &OptimizerConfig,
) -> Result<KSweepOutcome, OptimizeError> {
    let m = config.m as usize;
    let mut constraints = initial_constraints(config.m, k, c_max, alpha)?;
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut rounds = 0u32;
    loop {
        rounds += 1;
        let solution = lp_solve(&relaxation_problem(m, &constraints))?;
        match solution.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Ok(KSweepOutcome::InfeasibleK),
            status => return Err(OptimizeError::UnexpectedLpStatus(status)),
        }
        let cash = normalized_cash(&solution.values[..m])?;
        let p_adv = solution.values[m];
        let candidate = |residual: f64| ThresholdSolution {
            cash: cash.clone(),
            k,
            p_adv,
            cut_rounds: rounds,
            residual_slack: residual,
        };
        match separation_oracle(dist, cash.weights(), p_adv, budget, k, c_max, alpha)? {
            Separation::Ok => return Ok(KSweepOutcome::Completed(candidate(0.0))),
            Separation::Violated(violation) => {
                if violation.amount <= config.epsilon {
                    return Ok(KSweepOutcome::Completed(candidate(violation.amount)));
                }
                if rounds >= config.max_cut_rounds {
                    return Ok(KSweepOutcome::Exhausted(candidate(violation.amount)));
                }
                if let Some(allocation) = &violation.allocation {
                    if !seen.insert(allocation.counts.clone()) {
                        // The LP already satisfies this exact row to solver
                        // tolerance; a repeat means the loop can no longer
                        // make progress, so treat it like an exhausted
                        // budget rather than dithering.
                        return Ok(KSweepOutcome::Exhausted(candidate(violation.amount)));
                    }
                }
                constraints.push(violation.constraint);
            }
        }
    }
}

/// Minimizes the adversary's success at attacker budget `budget` by sweeping
/// the hash costs in `config.k_set` (ascending) and running the
/// cutting-plane loop for each. The smallest adversary success wins; ties
/// keep the smaller hash cost. Hash costs whose relaxations are infeasible
/// are skipped; if every hash cost fails, the error carries the best
/// unconverged candidate when there is one.
pub fn optimize_for_threshold(
    dist: &PasswordDistribution,
    budget: u64,
    c_max: f64,
    alpha: f64,
    config: &OptimizerConfig,
) -> Result<ThresholdSolution, OptimizeError> {
    validate_config(config)?;
    let mut k_set = config.k_set.clone();
    k_set.sort_by(f64::total_cmp);
    k_set.dedup();

    let mut best: Option<ThresholdSolution> = None;
    let mut best_exhausted: Option<ThresholdSolution> = None;
    for &k in &k_set {
        match optimize_single_k(dist, budget, k, c_max, alpha, config)? {
            KSweepOutcome::Completed(candidate) => {
                if best.as_ref().is_none_or(|b| candidate.p_adv < b.p_adv) {
                    best = Some(candidate);
                }
            }
            KSweepOutcome::Exhausted(candidate) => {
                if best_exhausted
                    .as_ref()
                    .is_none_or(|b| candidate.p_adv < b.p_adv)
                {
                    best_exhausted = Some(candidate);
                }
            }
            KSweepOutcome::InfeasibleK => {}
        }
    }
    match (best, best_exhausted) {
        (Some(solution), _) => Ok(solution),
        (None, Some(candidate)) => {
            let residual_slack = candidate.residual_slack;
            Err(OptimizeError::CutBudgetExhausted {
                best: Box::new(candidate),
                residual_slack,
            })
        }
        (None, None) => Err(OptimizeError::NoFeasibleHashCost),
    }
}

/// Searches for the best defense against believed attacker value `v_hat`:
/// start from uniform randomization tuned to the budget, optimize each
/// attacker budget in `config.threshold_set` (in parallel), score every
/// candidate by the attacker's actual best response at `v_hat`, and keep the
/// lowest cracked fraction (ties keep the later candidate). Per-budget
/// failures are reported alongside, never instead of, the best defense.
pub fn find_cash_distribution(
    dist: &PasswordDistribution,
    v_hat: f64,
    c_max: f64,
    alpha: f64,
    config: &OptimizerConfig,
) -> Result<DefenseOutcome, OptimizeError> {
    validate_search_config(config)?;

    let k_uniform = uniform_cash_hash_cost(c_max, config.m, alpha);
    let uniform = CashDistribution::uniform(config.m);
    let uniform_cracked = cash_best_response(dist, &uniform, v_hat, k_uniform).cracked;
    let mut solution = DefenseSolution {
        cash: uniform,
        k: k_uniform,
        predicted_cracked: uniform_cracked,
        source_threshold: DefenseSource::Uniform,
    };

    let attempts: Vec<(u64, Result<ThresholdSolution, OptimizeError>)> = config
        .threshold_set
        .par_iter()
        .map(|&budget| {
            (
                budget,
                optimize_for_threshold(dist, budget, c_max, alpha, config),
            )
        })
        .collect();

    let mut failures = Vec::new();
    for (budget, attempt) in attempts {
        match attempt {
            Ok(candidate) => {
                let cracked = cash_best_response(dist, &candidate.cash, v_hat, candidate.k).cracked;
                if cracked <= solution.predicted_cracked {
                    solution = DefenseSolution {
                        cash: candidate.cash,
                        k: candidate.k,
                        predicted_cracked: cracked,
                        source_threshold: DefenseSource::Threshold(budget),
                    };
                }
            }
            Err(error) => failures.push(ThresholdFailure {
                threshold: budget,
                error,
            }),
        }
    }
    assert!(
        solution.predicted_cracked <= uniform_cracked,
        "defense search regressed below its uniform starting point"
    );
    Ok(DefenseOutcome { solution, failures })
}

/// Metadata carried in a defense file's header.
#[derive(Debug, Clone, PartialEq)]
pub struct DefenseFileHeader {
    pub k: f64,
    pub m: u32,
    pub alpha: f64,
    pub c_max: f64,
    pub epsilon: f64,
    pub source: DefenseSource,
}

/// Writes a defense as `t weight` lines with header comments recording the
/// parameters it was optimized under.
pub fn write_defense_file(
    mut writer: impl Write,
    solution: &DefenseSolution,
    alpha: f64,
    c_max: f64,
    epsilon: f64,
) -> std::io::Result<()> {
    writeln!(writer, "# cash runtime distribution")?;
    writeln!(writer, "# k {:.16e}", solution.k)?;
    writeln!(writer, "# m {}", solution.cash.m())?;
    writeln!(writer, "# alpha {:.16e}", alpha)?;
    writeln!(writer, "# c_max {:.16e}", c_max)?;
    writeln!(writer, "# epsilon {:.16e}", epsilon)?;
    writeln!(writer, "# source {}", solution.source_threshold)?;
    for (j, w) in solution.cash.weights().iter().enumerate() {
        writeln!(writer, "{} {:.16e}", j + 1, w)?;
    }
    Ok(())
}

/// Reads a defense file written by [`write_defense_file`].
pub fn read_defense_file(
    reader: impl BufRead,
) -> Result<(CashDistribution, DefenseFileHeader), OptimizeError> {
    let mut weights: Vec<(u32, f64)> = Vec::new();
    let mut k = None;
    let mut alpha = None;
    let mut c_max = None;
    let mut epsilon = None;
    let mut source = DefenseSource::Uniform;
    for (line_index, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = line_index + 1;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut fields = comment.split_whitespace();
            match (fields.next(), fields.next()) {
                (Some("k"), Some(v)) => k = v.parse().ok(),
                (Some("alpha"), Some(v)) => alpha = v.parse().ok(),
                (Some("c_max"), Some(v)) => c_max = v.parse().ok(),
                (Some("epsilon"), Some(v)) => epsilon = v.parse().ok(),
                (Some("source"), Some(v)) => {
                    source = match v.parse::<u64>() {
                        Ok(b) => DefenseSource::Threshold(b),
                        Err(_) => DefenseSource::Uniform,
                    }
                }
                _ => {}
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let parse_err = |message: String| OptimizeError::Parse {
            line: line_no,
            message,
        };
        let t: u32 = fields
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err("expected a runtime index".into()))?;
        let w: f64 = fields
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err("expected a weight".into()))?;
        weights.push((t, w));
    }
    for (pos, &(t, _)) in weights.iter().enumerate() {
        if t as usize != pos + 1 {
            return Err(OptimizeError::Parse {
                line: 0,
                message: format!("runtime indices must be 1..m in order; saw {t} at position {}", pos + 1),
            });
        }
    }
    let cash = CashDistribution::new(weights.into_iter().map(|(_, w)| w).collect())?;
    let missing = |field: &str| OptimizeError::Parse {
        line: 0,
        message: format!("missing `# {field}` header"),
    };
    let header = DefenseFileHeader {
        k: k.ok_or_else(|| missing("k"))?,
        m: cash.m(),
        alpha: alpha.ok_or_else(|| missing("alpha"))?,
        c_max: c_max.ok_or_else(|| missing("c_max"))?,
        epsilon: epsilon.unwrap_or(0.02),
        source,
    };
    Ok((cash, header))
}
