//! Shared oracles and instance generators for the integration suites.
//!
//! Everything here recomputes results along deliberately different routes
//! than the library: exhaustive enumeration instead of incremental walks,
//! loop accumulation instead of closed forms, and brute-force grids instead
//! of cutting planes. Agreement between the two routes is the evidence the
//! suites are after.

#![allow(dead_code)]

use cash::adversary::{BestResponse, CashDistribution};
use cash::distribution::{ClassEntry, PasswordDistribution};
use cash::optimizer::{allocation_success, server_cost, GuessAllocation};
use rand::Rng;

/// Relative tie tolerance mirrored from the documented best-response rule.
pub const TIE_EPS: f64 = 1e-9;

/// One expanded guessing step: a single (password, runtime) pair.
#[derive(Debug, Clone, Copy)]
pub struct ExpandedTuple {
    pub class_index: usize,
    pub runtime: u32,
    pub pi: f64,
}

/// Expands the per-(class, runtime) groups into individual tuples, ordered
/// the way a rational attacker tries them: by success chance descending,
/// then class, then runtime.
pub fn expand_tuples(dist: &PasswordDistribution, cash: &CashDistribution) -> Vec<ExpandedTuple> {
    let mut tuples = Vec::new();
    for (class_index, class) in dist.classes().iter().enumerate() {
        for (t, w) in cash.weights().iter().enumerate() {
            for _ in 0..class.count {
                tuples.push(ExpandedTuple {
                    class_index,
                    runtime: t as u32 + 1,
                    pi: class.probability * w,
                });
            }
        }
    }
    tuples.sort_by(|a, b| {
        b.pi.total_cmp(&a.pi)
            .then(a.class_index.cmp(&b.class_index))
            .then(a.runtime.cmp(&b.runtime))
    });
    tuples
}

/// Exhaustive best response: evaluates every prefix length from scratch
/// (plain sums, no incremental state, no boundary shortcuts) and applies
/// the documented tie rule — ties within a relative `1e-9` of the maximum
/// utility resolve to the larger threshold, which reports the maximum.
pub fn exhaustive_best_response(
    dist: &PasswordDistribution,
    cash: &CashDistribution,
    value: f64,
    k: f64,
) -> BestResponse {
    let tuples = expand_tuples(dist, cash);
    let mut best = BestResponse {
        threshold: 0,
        cracked: 0.0,
        utility: 0.0,
    };
    for b in 1..=tuples.len() {
        let mut success = 0.0;
        let mut weighted_guesses = 0.0;
        for (i, tuple) in tuples[..b].iter().enumerate() {
            success += tuple.pi;
            weighted_guesses += (i + 1) as f64 * tuple.pi;
        }
        let expected_guesses = weighted_guesses + b as f64 * (1.0 - success);
        let utility = value * success - k * expected_guesses;
        let tolerance = TIE_EPS * best.utility.abs().max(1.0);
        if utility > best.utility {
            best = BestResponse {
                threshold: b as u64,
                cracked: success,
                utility,
            };
        } else if utility >= best.utility - tolerance {
            best.threshold = b as u64;
            best.cracked = success;
        }
    }
    best
}

/// Success of an allocation computed by walking runtime levels and taking
/// passwords one level at a time — no division, remainder, or prefix sums.
pub fn allocation_success_by_accumulation(
    dist: &PasswordDistribution,
    cash: &CashDistribution,
    counts: &[u64],
) -> f64 {
    let mut value = 0.0;
    for (class, &budgeted) in dist.classes().iter().zip(counts) {
        let mut remaining = budgeted;
        for w in cash.weights() {
            if remaining == 0 {
                break;
            }
            let take = remaining.min(class.count);
            value += class.probability * take as f64 * w;
            remaining -= take;
        }
    }
    value
}

/// Enumerates every feasible allocation: `Σ b_i ≤ budget`, `b_i ≤ m·n_i`.
pub fn enumerate_allocations(dist: &PasswordDistribution, m: u32, budget: u64) -> Vec<Vec<u64>> {
    let caps: Vec<u64> = dist
        .classes()
        .iter()
        .map(|class| u64::from(m) * class.count)
        .collect();
    let mut out = Vec::new();
    let mut current = vec![0u64; caps.len()];
    fn recurse(
        caps: &[u64],
        class: usize,
        remaining: u64,
        current: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if class == caps.len() {
            out.push(current.clone());
            return;
        }
        for spend in 0..=caps[class].min(remaining) {
            current[class] = spend;
            recurse(caps, class + 1, remaining - spend, current, out);
        }
        current[class] = 0;
    }
    recurse(&caps, 0, budget, &mut current, &mut out);
    out
}

/// Brute-force maximum of `allocation_success` over the enumerated
/// feasible set. Returns the best value and one maximizing allocation.
pub fn best_allocation_by_enumeration(
    dist: &PasswordDistribution,
    cash: &CashDistribution,
    budget: u64,
) -> (f64, Vec<u64>) {
    let mut best_value = 0.0;
    let mut best_counts = vec![0u64; dist.num_classes()];
    for counts in enumerate_allocations(dist, cash.m(), budget) {
        let value = allocation_success(
            dist,
            cash,
            &GuessAllocation {
                counts: counts.clone(),
            },
        )
        .expect("enumerated allocations are feasible");
        if value > best_value {
            best_value = value;
            best_counts = counts;
        }
    }
    (best_value, best_counts)
}

/// Greedy attacker value against fixed weights: take whole tuple groups in
/// order of success chance until the budget runs out. Optimal because the
/// per-class coverage gain of each successive evaluation is nonincreasing
/// (the companion enumeration suite verifies this directly).
pub fn greedy_coverage(dist: &PasswordDistribution, cash: &CashDistribution, budget: u64) -> f64 {
    let mut groups: Vec<(f64, usize, u64)> = Vec::new();
    for (class_index, class) in dist.classes().iter().enumerate() {
        for w in cash.weights() {
            groups.push((class.probability * w, class_index, class.count));
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0).reverse());
    let mut counts = vec![0u64; dist.num_classes()];
    let mut remaining = budget;
    for (_, class_index, size) in groups {
        if remaining == 0 {
            break;
        }
        let take = size.min(remaining);
        counts[class_index] += take;
        remaining -= take;
    }
    allocation_success_by_accumulation(dist, cash, &counts)
}

/// All monotone (nonincreasing) weight vectors on the `1/steps` grid.
pub fn monotone_grid_distributions(m: u32, steps: u32) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; m as usize];
    fn recurse(
        position: usize,
        m: usize,
        max_allowed: u32,
        remaining: u32,
        current: &mut Vec<u32>,
        out: &mut Vec<Vec<f64>>,
        steps: u32,
    ) {
        if position == m {
            debug_assert_eq!(remaining, 0);
            out.push(current.iter().map(|&a| f64::from(a) / f64::from(steps)).collect());
            return;
        }
        // Monotonicity caps later positions at this one's value, so the
        // remaining mass must fit under a flat extension.
        let slots_left = (m - position) as u32;
        let min_here = remaining.div_ceil(slots_left);
        for a in min_here..=max_allowed.min(remaining) {
            current[position] = a;
            recurse(position + 1, m, a, remaining - a, current, out, steps);
        }
        current[position] = 0;
    }
    recurse(0, m as usize, steps, steps, &mut current, &mut out, steps);
    out
}

/// Brute-force defender optimum on the weight grid: the smallest greedy
/// attacker value over every cost-feasible grid distribution and hash cost.
/// `None` when no grid point is feasible for any swept cost.
pub fn grid_defense_optimum(
    dist: &PasswordDistribution,
    m: u32,
    budget: u64,
    c_max: f64,
    alpha: f64,
    k_set: &[f64],
    steps: u32,
) -> Option<f64> {
    let mut best: Option<f64> = None;
    for weights in monotone_grid_distributions(m, steps) {
        let Ok(cash) = CashDistribution::new(weights) else {
            continue;
        };
        for &k in k_set {
            if server_cost(&cash, k, m, alpha) > c_max + 1e-12 {
                continue;
            }
            let value = greedy_coverage(dist, &cash, budget);
            if best.is_none_or(|b| value < b) {
                best = Some(value);
            }
        }
    }
    best
}

/// Builds a valid password distribution from arbitrary positive raw
/// `(probability, count)` pairs: normalizes total mass to 1, sorts
/// descending, and merges classes whose probabilities collide.
pub fn distribution_from_raw(raw: &[(f64, u64)]) -> PasswordDistribution {
    let total_mass: f64 = raw.iter().map(|(p, n)| p * *n as f64).sum();
    let mut normalized: Vec<(f64, u64)> = raw
        .iter()
        .map(|&(p, n)| (p / total_mass, n))
        .collect();
    normalized.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut merged: Vec<(f64, u64)> = Vec::new();
    for (p, n) in normalized {
        match merged.last_mut() {
            Some(last) if last.0 == p => last.1 += n,
            _ => merged.push((p, n)),
        }
    }
    let classes: Vec<ClassEntry> = merged
        .into_iter()
        .map(|(probability, count)| ClassEntry { probability, count })
        .collect();
    let users = classes
        .iter()
        .map(|c| c.count)
        .sum::<u64>()
        .max(1)
        .saturating_mul(10);
    PasswordDistribution::from_classes(classes, users).expect("normalized raw classes are valid")
}

/// Builds a valid runtime distribution from arbitrary positive raw weights.
pub fn cash_from_raw(raw: &[f64]) -> CashDistribution {
    let mut weights = raw.to_vec();
    weights.sort_by(|a, b| b.total_cmp(a));
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    CashDistribution::new(weights).expect("sorted positive weights are valid")
}

/// Random password distribution: up to `max_classes` classes of up to
/// `max_count` passwords each, probabilities normalized to unit total mass.
pub fn random_distribution(
    rng: &mut impl Rng,
    max_classes: usize,
    max_count: u64,
) -> PasswordDistribution {
    let num_classes = rng.gen_range(1..=max_classes);
    let raw: Vec<(f64, u64)> = (0..num_classes)
        .map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(1..=max_count)))
        .collect();
    distribution_from_raw(&raw)
}

/// Random monotone runtime distribution with strictly positive weights.
pub fn random_cash(rng: &mut impl Rng, m: u32) -> CashDistribution {
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    cash_from_raw(&raw)
}
