//! Rational offline guessing adversaries.
//!
//! An attacker holding stolen hash records assigns a value `v` to each
//! cracked account and pays `k` (the unit hash cost) per hash evaluation.
//! Against deterministic stretching it guesses passwords in popularity
//! order; against randomized stretching it guesses `(password, runtime)`
//! pairs in order of decreasing joint probability. In both cases the
//! rational strategy is a *threshold*: spend at most `B` evaluations, then
//! stop. This module computes those thresholds and the resulting cracked
//! fractions.

use thiserror::Error;

use crate::distribution::PasswordDistribution;

/// Tolerance on the runtime-weight invariants (monotonicity and total sum).
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Relative tolerance under which two thresholds' utilities count as tied.
///
/// Ties that are exact in real arithmetic land within float rounding of one
/// another, so the documented larger-threshold tie rule is applied to any
/// pair of utilities within `1e-9 * max(1, |best|)`.
pub const UTILITY_TIE_TOLERANCE: f64 = 1e-9;

/// Defender's distribution over the hidden runtime parameter `t ∈ {1..m}`.
///
/// Weights are stored most-likely-first: `1 ≥ w_1 ≥ w_2 ≥ … ≥ w_m ≥ 0`
/// (within [`WEIGHT_TOLERANCE`]) and sum to 1 (same tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct CashDistribution {
    weights: Vec<f64>,
}

/// Why a weight vector is not a valid runtime distribution.
#[derive(Debug, Error)]
pub enum CashError {
    #[error("runtime distribution has no weights")]
    Empty,
    #[error("weight {index} is not finite")]
    NonFinite { index: usize },
    #[error("weight {index} is negative ({weight})")]
    Negative { index: usize, weight: f64 },
    #[error("weights are not sorted nonincreasing at index {index}")]
    NotMonotone { index: usize },
    #[error("weights sum to {sum}, not 1")]
    BadSum { sum: f64 },
}

impl CashDistribution {
    /// Validates and stores a weight vector. Negative values within
    /// [`WEIGHT_TOLERANCE`] of zero are clamped to exactly zero.
    pub fn new(weights: Vec<f64>) -> Result<Self, CashError> {
        if weights.is_empty() {
            return Err(CashError::Empty);
        }
        let mut clamped = weights;
        for (index, w) in clamped.iter_mut().enumerate() {
            if !w.is_finite() {
                return Err(CashError::NonFinite { index });
            }
            if *w < 0.0 {
                if *w < -WEIGHT_TOLERANCE {
                    return Err(CashError::Negative { index, weight: *w });
                }
                *w = 0.0;
            }
        }
        for index in 1..clamped.len() {
            if clamped[index] > clamped[index - 1] + WEIGHT_TOLERANCE {
                return Err(CashError::NotMonotone { index });
            }
        }
        let sum: f64 = clamped.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(CashError::BadSum { sum });
        }
        Ok(Self { weights: clamped })
    }

    /// The uniform distribution over `m` runtimes (classic secret-salt).
    pub fn uniform(m: u32) -> Self {
        Self {
            weights: vec![1.0 / m as f64; m as usize],
        }
    }

    /// Number of runtime values.
    pub fn m(&self) -> u32 {
        self.weights.len() as u32
    }

    /// Weights, most likely first (`weights()[j]` is the probability of
    /// runtime `j+1`).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Expected runtime `Σ t·w_t`, in units of one `k`-cost hash.
    pub fn expected_runtime(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, w)| (j + 1) as f64 * w)
            .sum()
    }
}

/// Server-side cost model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerParams {
    /// Hash cost per evaluation, in units of the base hash.
    pub k: f64,
    /// Fraction of authentication sessions that use a correct password.
    pub alpha: f64,
    /// Amortized per-session cost budget.
    pub c_max: f64,
    /// Number of runtime values.
    pub m: u32,
}

/// Invalid server parameters.
#[derive(Debug, Error)]
pub enum ParamError {
    #[error("hash cost k must be positive and finite, got {0}")]
    BadHashCost(f64),
    #[error("alpha must lie in [0,1], got {0}")]
    BadAlpha(f64),
    #[error("cost budget must be positive and finite, got {0}")]
    BadBudget(f64),
    #[error("m must be at least 1")]
    BadRuntimeCount,
    #[error("hash cost k={k} exceeds the budget c_max={c_max}")]
    CostAboveBudget { k: f64, c_max: f64 },
    #[error("failed-login floor (1-alpha)*m*k = {floor} exceeds c_max = {c_max}; no feasible defense")]
    InfeasibleFloor { floor: f64, c_max: f64 },
    #[error("adversary value must be nonnegative and finite, got {0}")]
    BadValue(f64),
}

impl ServerParams {
    pub fn new(k: f64, alpha: f64, c_max: f64, m: u32) -> Result<Self, ParamError> {
        if !k.is_finite() || k <= 0.0 {
            return Err(ParamError::BadHashCost(k));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(ParamError::BadAlpha(alpha));
        }
        if !c_max.is_finite() || c_max <= 0.0 {
            return Err(ParamError::BadBudget(c_max));
        }
        if m == 0 {
            return Err(ParamError::BadRuntimeCount);
        }
        if k > c_max {
            return Err(ParamError::CostAboveBudget { k, c_max });
        }
        let floor = (1.0 - alpha) * m as f64 * k;
        if floor > c_max {
            return Err(ParamError::InfeasibleFloor { floor, c_max });
        }
        Ok(Self { k, alpha, c_max, m })
    }
}

/// Untargeted attacker: one value per cracked account, plus the defender's
/// estimate of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryModel {
    pub value: f64,
    pub believed_value: f64,
}

impl AdversaryModel {
    pub fn new(value: f64, believed_value: f64) -> Result<Self, ParamError> {
        for v in [value, believed_value] {
            if !v.is_finite() || v < 0.0 {
                return Err(ParamError::BadValue(v));
            }
        }
        Ok(Self { value, believed_value })
    }
}

/// One group of `(password, runtime)` pairs sharing the same joint
/// probability `pi`: the `count` passwords of one popularity class crossed
/// with one runtime value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TupleGroup {
    /// 1-based popularity class index.
    pub class_index: usize,
    /// 1-based runtime value.
    pub runtime: u32,
    /// Joint probability of each pair in the group.
    pub pi: f64,
    /// Number of pairs in the group (the class's password count).
    pub count: u64,
}

/// All `(password, runtime)` pairs, grouped and sorted in the order a
/// rational attacker evaluates them: decreasing `pi`, ties by smaller class
/// index, then smaller runtime.
#[derive(Debug, Clone, PartialEq)]
pub struct TupleSchedule {
    entries: Vec<TupleGroup>,
}

impl TupleSchedule {
    pub fn entries(&self) -> &[TupleGroup] {
        &self.entries
    }

    /// Total number of `(password, runtime)` pairs across all groups.
    pub fn total_tuples(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }
}

/// A rational attacker's chosen stopping point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestResponse {
    /// Number of evaluations spent (passwords for deterministic stretching,
    /// `(password, runtime)` pairs otherwise).
    pub threshold: u64,
    /// Probability mass cracked at the threshold.
    pub cracked: f64,
    /// The attacker's optimal expected utility (never negative: spending
    /// nothing is always available).
    pub utility: f64,
}

/// Builds the attacker's evaluation order for a randomized defense: each
/// popularity class crossed with each runtime, sorted by joint probability.
pub fn tuple_schedule(dist: &PasswordDistribution, cash: &CashDistribution) -> TupleSchedule {
    let mut entries = Vec::with_capacity(dist.num_classes() * cash.m() as usize);
    for (class_pos, class) in dist.classes().iter().enumerate() {
        for (runtime_pos, weight) in cash.weights().iter().enumerate() {
            entries.push(TupleGroup {
                class_index: class_pos + 1,
                runtime: runtime_pos as u32 + 1,
                pi: class.probability * weight,
                count: class.count,
            });
        }
    }
    entries.sort_by(|a, b| {
        b.pi
            .partial_cmp(&a.pi)
            .expect("joint probabilities are finite")
            .then(a.class_index.cmp(&b.class_index))
            .then(a.runtime.cmp(&b.runtime))
    });
    TupleSchedule { entries }
}

fn tie_tolerance(scale: f64) -> f64 {
    UTILITY_TIE_TOLERANCE * scale.abs().max(1.0)
}

/// Selects the utility-maximizing prefix from boundary evaluations.
///
/// `observe` is called once per group boundary with the cumulative
/// evaluation count, cracked mass, and utility there. The reported response
/// carries the maximum utility seen and the *largest* boundary whose utility
/// ties it (within [`UTILITY_TIE_TOLERANCE`], relative).
struct PrefixTracker {
    max_utility: f64,
    best: BestResponse,
}

impl PrefixTracker {
    fn new() -> Self {
        Self {
            max_utility: 0.0,
            best: BestResponse { threshold: 0, cracked: 0.0, utility: 0.0 },
        }
    }

    fn observe(&mut self, threshold: u64, cracked: f64, utility: f64) {
        if utility > self.max_utility {
            self.max_utility = utility;
            self.best = BestResponse { threshold, cracked, utility };
        } else if utility >= self.max_utility - tie_tolerance(self.max_utility) {
            self.best = BestResponse {
                threshold,
                cracked,
                utility: self.max_utility,
            };
        }
    }

    fn finish(self) -> BestResponse {
        self.best
    }
}

/// Best response against deterministic stretching with per-guess cost `k`:
/// guess passwords in popularity order, stop at the utility-maximizing
/// count. Each guess against an uncracked account costs one evaluation, so
/// an attacker stopping at `B` pays `k·(Σ_{i≤B} i·p_i + B·Σ_{i>B} p_i)` and
/// earns `v·Σ_{i≤B} p_i`.
///
/// Within a class the utility is convex in the number of guesses taken, so
/// class boundaries attain the maximum; every boundary is evaluated and ties
/// resolve to the larger threshold.
pub fn deterministic_best_response(
    dist: &PasswordDistribution,
    v: f64,
    k: f64,
) -> BestResponse {
    let mut tracker = PrefixTracker::new();
    let mut guesses = 0u64;
    let mut mass = 0.0f64; // Σ_{i≤B} p_i
    let mut weighted = 0.0f64; // Σ_{i≤B} i·p_i
    for class in dist.classes() {
        let c = class.count as f64;
        let start = guesses as f64;
        // Positions of this class's guesses are start+1 ..= start+c.
        weighted += class.probability * (c * start + c * (c + 1.0) / 2.0);
        mass += class.probability * c;
        guesses += class.count;
        let utility = v * mass - k * (weighted + guesses as f64 * (1.0 - mass));
        tracker.observe(guesses, mass, utility);
    }
    tracker.finish()
}

/// Best response against a randomized defense: walk the tuple schedule in
/// order, accumulating cracked mass and the incremental utility of taking a
/// whole group, and stop at the best boundary (ties to the larger one).
///
/// Taking a group of `count` pairs with joint probability `pi` after
/// cumulative mass has reached `success` changes the attacker's cost by
/// `k·(count·(1−success) + (pi·count² + pi·count)/2)` — the cumulative mass
/// is updated *before* the cost increment, which is what makes the
/// telescoped sum reproduce `k·(Σ_{i≤B} i·π_i + B·(1−S_B))` exactly.
pub fn cash_best_response(
    dist: &PasswordDistribution,
    cash: &CashDistribution,
    v: f64,
    k: f64,
) -> BestResponse {
    let schedule = tuple_schedule(dist, cash);
    best_schedule_prefix(&schedule, v, k)
}

/// The schedule walk behind [`cash_best_response`], reusable when the
/// schedule is already built.
pub fn best_schedule_prefix(schedule: &TupleSchedule, v: f64, k: f64) -> BestResponse {
    let mut tracker = PrefixTracker::new();
    let mut taken = 0u64;
    let mut success = 0.0f64;
    let mut utility = 0.0f64;
    for group in schedule.entries() {
        let c = group.count as f64;
        taken += group.count;
        success += group.pi * c;
        let benefit = v * group.pi * c;
        let cost = k * (c * (1.0 - success) + (group.pi * c * c + group.pi * c) / 2.0);
        utility += benefit - cost;
        tracker.observe(taken, success, utility);
    }
    tracker.finish()
}

/// Hash cost that exhausts the budget under the *uniform* runtime
/// distribution: `k = c_max / ((1−alpha)·m + alpha·(m+1)/2)`.
pub fn uniform_cash_hash_cost(c_max: f64, m: u32, alpha: f64) -> f64 {
    c_max / ((1.0 - alpha) * m as f64 + alpha * (m as f64 + 1.0) / 2.0)
}

/// Cracked fraction against uniform randomization tuned to the budget.
pub fn uniform_success_rate(
    dist: &PasswordDistribution,
    v: f64,
    c_max: f64,
    m: u32,
    alpha: f64,
) -> BestResponse {
    let k = uniform_cash_hash_cost(c_max, m, alpha);
    cash_best_response(dist, &CashDistribution::uniform(m), v, k)
}
