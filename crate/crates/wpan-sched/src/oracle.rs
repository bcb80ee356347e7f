//! Exhaustive minimum-makespan search for small hop sets.
//!
//! Used as an independent yardstick for the packing heuristics: any group
//! schedule is also a plain slot schedule, so its consumed total can never
//! beat the optimum found here.

use crate::error::{Error, Result};
use crate::scheduler::Hop;
use std::collections::BTreeMap;

/// Search is exponential in the hop count; refuse anything larger.
pub const MAX_ORACLE_HOPS: usize = 6;

/// Minimum total span (slots) any schedule needs for `hops`, given the
/// pairwise `conflict` relation and per-flow hop order. Ignores superframe
/// budgets: the caller compares consumed totals under ample budget.
///
/// Explores placements hop by hop; by a left-shift argument it suffices to
/// start each hop at 0, at its predecessor's end, or at the end of an
/// already placed hop.
pub fn brute_force_min_span(
    hops: &[Hop],
    conflict: impl Fn(usize, usize) -> bool + Copy,
) -> Result<u32> {
    let n = hops.len();
    if n == 0 {
        return Ok(0);
    }
    if n > MAX_ORACLE_HOPS {
        return Err(Error::Domain(format!(
            "exhaustive search handles at most {MAX_ORACLE_HOPS} hops, got {n}"
        )));
    }
    let mut by_key: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, h) in hops.iter().enumerate() {
        if by_key.insert((h.flow, h.hop_index), i).is_some() {
            return Err(Error::Invariant(format!(
                "duplicate hop ({}, {})",
                h.flow, h.hop_index
            )));
        }
    }
    let mut pred = vec![None; n];
    for (i, h) in hops.iter().enumerate() {
        if h.hop_index > 0 {
            pred[i] = Some(*by_key.get(&(h.flow, h.hop_index - 1)).ok_or_else(|| {
                Error::Invariant(format!(
                    "flow {} hop {} lacks its predecessor hop",
                    h.flow, h.hop_index
                ))
            })?);
        }
    }

    // Serial order is always feasible.
    let serial: u32 = hops.iter().map(|h| h.slots).sum();
    let mut best = serial;
    let mut starts: Vec<Option<u32>> = vec![None; n];
    search(hops, &pred, &conflict, &mut starts, 0, 0, &mut best);
    Ok(best)
}

fn search(
    hops: &[Hop],
    pred: &[Option<usize>],
    conflict: &impl Fn(usize, usize) -> bool,
    starts: &mut Vec<Option<u32>>,
    placed: usize,
    makespan: u32,
    best: &mut u32,
) {
    if makespan >= *best {
        return;
    }
    if placed == hops.len() {
        *best = makespan;
        return;
    }
    for h in 0..hops.len() {
        if starts[h].is_some() {
            continue;
        }
        let floor = match pred[h] {
            Some(p) => match starts[p] {
                Some(s) => s + hops[p].slots,
                None => continue,
            },
            None => 0,
        };
        // Candidate starts: the floor itself plus every placed end at or
        // above it.
        let mut candidates: Vec<u32> = vec![floor];
        for (i, s) in starts.iter().enumerate() {
            if let Some(s) = s {
                let end = s + hops[i].slots;
                if end >= floor {
                    candidates.push(end);
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        for &start in &candidates {
            let end = start + hops[h].slots;
            if end >= *best {
                continue;
            }
            let clash = starts.iter().enumerate().any(|(i, s)| match s {
                Some(s) => {
                    conflict(h, i) && start < s + hops[i].slots && *s < end
                }
                None => false,
            });
            if clash {
                continue;
            }
            starts[h] = Some(start);
            search(
                hops,
                pred,
                conflict,
                starts,
                placed + 1,
                makespan.max(end),
                best,
            );
            starts[h] = None;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hop(flow: usize, hop_index: usize, slots: u32) -> Hop {
        Hop {
            flow,
            hop_index,
            tx: 2 * flow + hop_index,
            rx: 2 * flow + hop_index + 1,
            slots,
        }
    }

    #[test]
    fn parallel_hops_share_the_span() {
        let hops = vec![hop(0, 0, 10), hop(1, 0, 7)];
        assert_eq!(brute_force_min_span(&hops, |_, _| false).unwrap(), 10);
    }

    #[test]
    fn conflicting_hops_serialize() {
        let hops = vec![hop(0, 0, 10), hop(1, 0, 7)];
        assert_eq!(brute_force_min_span(&hops, |_, _| true).unwrap(), 17);
    }

    #[test]
    fn chain_order_is_respected() {
        let hops = vec![hop(0, 0, 5), hop(0, 1, 5), hop(1, 0, 6)];
        // Flow 0's two hops serialize (10); flow 1 runs alongside.
        let conflict = |i: usize, j: usize| {
            let (a, b) = (hops_flow(i), hops_flow(j));
            a == b
        };
        fn hops_flow(i: usize) -> usize {
            [0usize, 0, 1][i]
        }
        assert_eq!(brute_force_min_span(&hops, conflict).unwrap(), 10);
    }

    #[test]
    fn interleaving_beats_greedy_stacking() {
        // A chain a-b where a conflicts x (10) and b conflicts y (10),
        // with x parallel to b and y parallel to a: the optimum runs a
        // against y and b against x for a span of 20; a bad order needs 30.
        let hops = vec![hop(0, 0, 10), hop(0, 1, 10), hop(1, 0, 10), hop(2, 0, 10)];
        let conflict = move |i: usize, j: usize| {
            let pair = (i.min(j), i.max(j));
            matches!(pair, (0, 1) | (0, 2) | (1, 3))
        };
        assert_eq!(brute_force_min_span(&hops, conflict).unwrap(), 20);
    }

    #[test]
    fn refuses_oversized_instances() {
        let hops: Vec<Hop> = (0..7).map(|f| hop(f, 0, 1)).collect();
        assert!(brute_force_min_span(&hops, |_, _| false).is_err());
    }

    #[test]
    fn empty_input_needs_no_slots() {
        assert_eq!(brute_force_min_span(&[], |_, _| false).unwrap(), 0);
    }
}
