//! Cracked-fraction curves over a grid of attacker values.
//!
//! For each attacker value `v`, three defenses are compared by the fraction
//! of accounts a rational attacker cracks against them: deterministic
//! hashing at the full budget, uniform runtime randomization, and the
//! optimized defense. The optimized defense is either re-derived per point
//! (the defender's belief tracks the sweep) or derived once for a fixed
//! believed value and then stress-tested across the whole grid.

use std::io::Write;

use rayon::prelude::*;

use crate::adversary::{cash_best_response, deterministic_best_response, uniform_success_rate};
use crate::distribution::PasswordDistribution;
use crate::optimizer::{
    find_cash_distribution, validate_search_config, DefenseSolution, DefenseSource,
    OptimizeError, OptimizerConfig,
};

/// Attacker-value multiples (of `c_max`) behind the default sweep grid.
pub const DEFAULT_VALUE_MULTIPLES: [f64; 22] = [
    1e2, 5e2, 1e3, 5e3, 1e4, 5e4, 1e5, 5e5, 1e6, 5e6, 1e7, 1.5e7, 2e7, 2.5e7, 2.65e7, 2.7e7,
    2.75e7, 2.8e7, 2.9e7, 3e7, 7e7, 1e8,
];

/// What the defender believes the attacker's value is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BelievedValuePolicy {
    /// Re-derive the defense at every grid point, believing the true value.
    Match,
    /// Derive one defense for this believed value and hold it fixed.
    Fixed(f64),
}

/// One grid point of the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub v_over_cmax: f64,
    /// Cracked fraction against the optimized defense (NaN when the point's
    /// optimization failed; see `note`).
    pub p_cash: f64,
    /// Cracked fraction against uniform runtime randomization.
    pub p_unif: f64,
    /// Cracked fraction against deterministic hashing at full budget.
    pub p_det: f64,
    /// Flags: per-budget failures, defense changes, per-point errors.
    pub note: String,
}

struct PointDefense {
    solution: DefenseSolution,
    failed_budgets: usize,
}

/// Sweeps the attacker values in `v_grid` (absolute units, same as `c_max`)
/// and reports the cracked fraction under each defense. Per-point optimizer
/// failures do not abort the sweep: the row is emitted with `p_cash = NaN`
/// and the error recorded in `note`.
pub fn generate_curves(
    dist: &PasswordDistribution,
    alpha: f64,
    c_max: f64,
    v_grid: &[f64],
    policy: BelievedValuePolicy,
    config: &OptimizerConfig,
) -> Result<Vec<CurveRow>, OptimizeError> {
    validate_search_config(config)?;

    let defenses: Vec<Result<PointDefense, OptimizeError>> = match policy {
        BelievedValuePolicy::Fixed(v_hat) => {
            let outcome = find_cash_distribution(dist, v_hat, c_max, alpha, config)?;
            let failed_budgets = outcome.failures.len();
            v_grid
                .iter()
                .map(|_| {
                    Ok(PointDefense {
                        solution: outcome.solution.clone(),
                        failed_budgets,
                    })
                })
                .collect()
        }
        BelievedValuePolicy::Match => v_grid
            .par_iter()
            .map(|&v| {
                find_cash_distribution(dist, v, c_max, alpha, config).map(|outcome| PointDefense {
                    solution: outcome.solution,
                    failed_budgets: outcome.failures.len(),
                })
            })
            .collect(),
    };

    let mut rows = Vec::with_capacity(v_grid.len());
    let mut previous: Option<(DefenseSource, f64)> = None;
    for (&v, defense) in v_grid.iter().zip(&defenses) {
        let p_det = deterministic_best_response(dist, v, c_max).cracked;
        let p_unif = uniform_success_rate(dist, v, c_max, config.m, alpha).cracked;
        let mut flags: Vec<String> = Vec::new();
        let p_cash = match defense {
            Ok(point) => {
                let solution = &point.solution;
                if point.failed_budgets > 0 {
                    flags.push(format!("budgets_failed={}", point.failed_budgets));
                }
                let identity = (solution.source_threshold, solution.k);
                if previous.is_some_and(|prev| prev != identity) {
                    flags.push(format!(
                        "defense_changed source={} k={:.6e}",
                        solution.source_threshold, solution.k
                    ));
                }
                previous = Some(identity);
                cash_best_response(dist, &solution.cash, v, solution.k).cracked
            }
            Err(error) => {
                flags.push(format!("error: {error}"));
                f64::NAN
            }
        };
        rows.push(CurveRow {
            v_over_cmax: v / c_max,
            p_cash,
            p_unif,
            p_det,
            note: flags.join("; "),
        });
    }
    Ok(rows)
}

/// Writes rows as CSV with nine significant digits. Commas inside notes are
/// replaced so every row keeps exactly five fields.
pub fn write_curves_csv(mut writer: impl Write, rows: &[CurveRow]) -> std::io::Result<()> {
    writeln!(writer, "v_over_cmax,p_cash,p_unif,p_det,note")?;
    for row in rows {
        writeln!(
            writer,
            "{:.8e},{:.8e},{:.8e},{:.8e},{}",
            row.v_over_cmax,
            row.p_cash,
            row.p_unif,
            row.p_det,
            row.note.replace(',', ";")
        )?;
    }
    Ok(())
}
