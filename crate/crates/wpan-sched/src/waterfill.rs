//! Water-filling slot allocation and the throughput upper bound it yields.
//!
//! Given per-channel efficiency weights g_i and a continuous slot budget B,
//! the allocation maximizing sum(log(1 + g_i a_i)) subject to sum(a_i) = B,
//! a_i >= 0 is a_i = max(0, mu - 1/g_i) with the water level mu chosen to
//! spend the budget exactly.

use crate::error::{Error, Result};
use crate::scheduler::ScheduleMap;
use crate::topology::RadioContext;

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillSolution {
    /// Allocation per channel, in input order. Sums to the budget.
    pub allocations: Vec<f64>,
    /// Water level mu (0 when no channel is active).
    pub water_level: f64,
}

/// Closed-form water-filling: sort inverse gains ascending and grow the
/// active set while the implied water level still exceeds the largest
/// included inverse gain.
pub fn solve_waterfill(budget: f64, gains: &[f64]) -> Result<WaterfillSolution> {
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::Domain(format!(
            "waterfill budget must be non-negative, got {budget}"
        )));
    }
    for (i, &g) in gains.iter().enumerate() {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::Domain(format!(
                "waterfill gain {i} must be positive, got {g}"
            )));
        }
    }
    let mut inv: Vec<f64> = gains.iter().map(|g| 1.0 / g).collect();
    inv.sort_by(f64::total_cmp);
    let mut level = 0.0;
    let mut cum = 0.0;
    for (k, &v) in inv.iter().enumerate() {
        cum += v;
        let mu = (budget + cum) / (k + 1) as f64;
        if mu > v {
            level = mu;
        } else {
            break;
        }
    }
    let allocations = gains
        .iter()
        .map(|g| (level - 1.0 / g).max(0.0))
        .collect();
    Ok(WaterfillSolution {
        allocations,
        water_level: level,
    })
}

/// Largest KKT residual of a candidate solution: budget slack, negativity,
/// stationarity on active channels, dual feasibility on inactive ones.
pub fn kkt_residual(budget: f64, gains: &[f64], solution: &WaterfillSolution) -> f64 {
    let mu = solution.water_level;
    let mut worst = (solution.allocations.iter().sum::<f64>() - budget).abs();
    for (&g, &a) in gains.iter().zip(&solution.allocations) {
        let inv = 1.0 / g;
        worst = worst.max(-a);
        if a > 0.0 {
            worst = worst.max((mu - inv - a).abs());
        } else {
            worst = worst.max(mu - inv);
        }
    }
    worst.max(0.0)
}

/// Concurrency gain of each placement: total member slots of its group
/// divided by the group span. Back-to-back conflict chains keep this >= 1.
/// Returned in schedule placement order (groups ascending, then placement
/// order within the group).
pub fn placement_gains(schedule: &ScheduleMap) -> Vec<f64> {
    let mut gains = Vec::new();
    for g in &schedule.groups {
        let work: u64 = g.placements.iter().map(|p| u64::from(p.slots)).sum();
        let gain = work as f64 / f64::from(g.size_slots);
        gains.extend(std::iter::repeat_n(gain, g.placements.len()));
    }
    gains
}

/// Ideal bits one superframe could carry if its slot budget were split by
/// water-filling across the links of `schedule`, each scaled by its
/// group's concurrency gain. No integer slot rounding is applied, so this
/// dominates what the packing heuristics deliver.
pub fn bound_superframe_bits(ctx: &RadioContext, schedule: &ScheduleMap) -> Result<f64> {
    let gains = placement_gains(schedule);
    if gains.is_empty() {
        return Ok(0.0);
    }
    let solution = solve_waterfill(f64::from(schedule.maxslots), &gains)?;
    let mut bits = 0.0;
    let mut k = 0;
    for g in &schedule.groups {
        for p in &g.placements {
            let rate = ctx.rate_bps(p.tx, p.rx);
            bits += solution.allocations[k] * gains[k] * ctx.params.slot_duration_s * rate;
            k += 1;
        }
    }
    Ok(bits)
}
