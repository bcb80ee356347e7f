//! Randomized invariants: packing validity, enhancement compactness, the
//! exhaustive yardstick, priority order and the water-filling solver.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::Rng;
use wpan_sched::config::SimConfig;
use wpan_sched::oracle::brute_force_min_span;
use wpan_sched::radio::Beamwidth;
use wpan_sched::rng::stream_rng;
use wpan_sched::scheduler::{
    conflict_matrix, convert_flows, schedule_hops, sort_hops, validate_schedule, Hop, Placement,
    Policy, PriorityState, AGING_BOOST_PER_MISS, STARVED_MISS_COUNT,
};
use wpan_sched::sim::{replay_to_superframe, Scenario};
use wpan_sched::waterfill::{kkt_residual, solve_waterfill};

/// Chained flows with random demands. Endpoints are synthetic; the
/// conflict relation is supplied separately.
fn hops_strategy(max_flows: usize, max_chain: usize) -> impl Strategy<Value = Vec<Hop>> {
    prop::collection::vec(prop::collection::vec(1u32..=60, 1..=max_chain), 1..=max_flows)
        .prop_map(|chains| {
            let mut hops = Vec::new();
            for (flow, chain) in chains.into_iter().enumerate() {
                for (hop_index, slots) in chain.into_iter().enumerate() {
                    hops.push(Hop {
                        flow,
                        hop_index,
                        tx: 10 * flow + hop_index,
                        rx: 10 * flow + hop_index + 1,
                        slots,
                    });
                }
            }
            hops
        })
}

/// A ready-to-schedule problem: hops in priority order, a symmetric
/// conflict matrix over that order (same-flow pairs always conflict, as
/// route hops share a relay node) and a budget that may bind.
fn problem_strategy(
    max_flows: usize,
    max_chain: usize,
) -> impl Strategy<Value = (Vec<Hop>, Vec<Vec<bool>>, u32)> {
    hops_strategy(max_flows, max_chain)
        .prop_flat_map(|hops| {
            let n = hops.len();
            let total: u32 = hops.iter().map(|h| h.slots).sum();
            (Just(hops), prop::collection::vec(prop::bool::ANY, n * n), 1..=total + 20)
        })
        .prop_map(|(hops, bits, budget)| {
            let sorted = sort_hops(&hops, &PriorityState::default());
            let n = sorted.len();
            let mut matrix = vec![vec![false; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let c = sorted[i].flow == sorted[j].flow || bits[i * n + j];
                    matrix[i][j] = c;
                    matrix[j][i] = c;
                }
            }
            (sorted, matrix, budget)
        })
}

/// Lifts an index-based conflict matrix to placements via (flow, hop).
fn placement_conflict<'a>(
    sorted: &'a [Hop],
    matrix: &'a [Vec<bool>],
) -> impl Fn(&Placement, &Placement) -> bool + 'a {
    let index: BTreeMap<(usize, usize), usize> = sorted
        .iter()
        .enumerate()
        .map(|(i, h)| ((h.flow, h.hop_index), i))
        .collect();
    move |a, b| matrix[index[&(a.flow, a.hop)]][index[&(b.flow, b.hop)]]
}

proptest! {
    #[test]
    fn schedules_validate_under_any_conflicts_and_budget(
        (sorted, matrix, budget) in problem_strategy(5, 3),
    ) {
        for policy in Policy::ALL {
            let map = schedule_hops(policy, &sorted, budget, |i, j| matrix[i][j]).unwrap();
            let check = validate_schedule(
                &map,
                placement_conflict(&sorted, &matrix),
                (policy == Policy::Mhct).then_some(Policy::Mhct),
            );
            prop_assert!(check.is_ok(), "{policy}: {:?}", check.err());
        }
    }

    #[test]
    fn enhancements_never_consume_more_or_place_fewer(
        (sorted, matrix, budget) in problem_strategy(5, 3),
    ) {
        let run = |policy| {
            let map = schedule_hops(policy, &sorted, budget, |i, j| matrix[i][j]).unwrap();
            (map.consumed_slots, map.placements().count())
        };
        let (base_slots, base_placed) = run(Policy::Mhct);
        let total: u32 = sorted.iter().map(|h| h.slots).sum();
        prop_assert!(base_slots <= total.min(budget));
        for policy in [Policy::EmhctF, Policy::EmhctE] {
            let (slots, placed) = run(policy);
            prop_assert!(slots <= base_slots, "{policy} consumed {slots} > baseline {base_slots}");
            prop_assert!(placed >= base_placed, "{policy} placed {placed} < baseline {base_placed}");
        }
    }

    #[test]
    fn exhaustive_optimum_is_never_beaten(
        (sorted, matrix, _) in problem_strategy(3, 2),
    ) {
        // Ample budget so every policy places every hop.
        let total: u32 = sorted.iter().map(|h| h.slots).sum();
        let optimal = brute_force_min_span(&sorted, |i, j| matrix[i][j]).unwrap();
        for policy in Policy::ALL {
            let map = schedule_hops(policy, &sorted, total, |i, j| matrix[i][j]).unwrap();
            prop_assert_eq!(map.placements().count(), sorted.len());
            prop_assert!(
                map.consumed_slots >= optimal,
                "{policy} consumed {} below the optimum {optimal}",
                map.consumed_slots
            );
        }
    }

    #[test]
    fn scheduling_is_deterministic(
        (sorted, matrix, budget) in problem_strategy(5, 3),
    ) {
        for policy in Policy::ALL {
            let a = schedule_hops(policy, &sorted, budget, |i, j| matrix[i][j]).unwrap();
            let b = schedule_hops(policy, &sorted, budget, |i, j| matrix[i][j]).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn sort_ranks_starved_flows_then_boosted_demand(
        hops in hops_strategy(5, 3),
        misses in prop::collection::vec(0u32..=6, 5),
    ) {
        let mut state = PriorityState::default();
        for (flow, &m) in misses.iter().enumerate() {
            for _ in 0..m {
                state.record(flow, false);
            }
        }
        let sorted = sort_hops(&hops, &state);

        let multiset = |hs: &[Hop]| {
            let mut v: Vec<_> = hs.iter().map(|h| (h.flow, h.hop_index, h.slots)).collect();
            v.sort();
            v
        };
        prop_assert_eq!(multiset(&hops), multiset(&sorted));

        let boosted = |h: &Hop| {
            f64::from(h.slots)
                * (1.0 + AGING_BOOST_PER_MISS * f64::from(state.miss_count(h.flow)))
        };
        for w in sorted.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let (ma, mb) = (state.miss_count(a.flow), state.miss_count(b.flow));
            let (sa, sb) = (ma >= STARVED_MISS_COUNT, mb >= STARVED_MISS_COUNT);
            prop_assert!(sa || !sb, "starved hop ranked below an unstarved one");
            if sa && sb {
                prop_assert!(ma > mb || (ma == mb && boosted(a) >= boosted(b)));
            }
            if !sa && !sb {
                prop_assert!(boosted(a) >= boosted(b));
            }
        }
    }

    #[test]
    fn waterfill_satisfies_kkt_and_matches_bisection(
        budget in 0.0f64..300.0,
        gains in prop::collection::vec(0.01f64..100.0, 1..=12),
    ) {
        let sol = solve_waterfill(budget, &gains).unwrap();
        let residual = kkt_residual(budget, &gains, &sol);
        prop_assert!(residual <= 1e-9, "KKT residual {residual:.2e}");
        let spent: f64 = sol.allocations.iter().sum();
        prop_assert!((spent - budget).abs() <= 1e-9 * (1.0 + budget));
        for (a, b) in sol.allocations.iter().zip(bisect_allocations(budget, &gains)) {
            prop_assert!((a - b).abs() <= 1e-9, "allocation {a} vs bisection {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Real room geometry: relayed demand never exceeds direct demand and
    /// the enhanced policies never consume above the baseline.
    #[test]
    fn room_instances_preserve_the_compactness_chain(
        seed in 1u64..=5000,
        flow_count in 1usize..=30,
        degrees in prop::sample::select(vec![20u32, 45, 90, 180]),
    ) {
        let cfg = SimConfig::default();
        let scenario = Scenario {
            seed,
            flow_count,
            beamwidth: Beamwidth::from_degrees(degrees).unwrap(),
        };
        let (ctx, pending, state) =
            replay_to_superframe(&cfg, scenario, Policy::Mhct, 0).unwrap();
        let routes = convert_flows(&ctx, &pending).unwrap();
        let direct: u64 = routes.iter().map(|r| u64::from(r.direct_slots)).sum();
        let route: u64 = routes
            .iter()
            .map(|r| r.hops.iter().map(|h| u64::from(h.slots)).sum::<u64>())
            .sum();
        prop_assert!(route <= direct);

        let hops: Vec<Hop> = routes.iter().flat_map(|r| r.hops.iter().copied()).collect();
        let sorted = sort_hops(&hops, &state);
        let matrix = conflict_matrix(&ctx, &sorted);
        let consumed = |policy| {
            schedule_hops(policy, &sorted, cfg.maxslots, |i, j| matrix[i][j])
                .unwrap()
                .consumed_slots
        };
        let baseline = consumed(Policy::Mhct);
        prop_assert!(u64::from(baseline) <= route.min(u64::from(cfg.maxslots)));
        prop_assert!(consumed(Policy::EmhctF) <= baseline);
        prop_assert!(consumed(Policy::EmhctE) <= baseline);
    }
}

/// Independent water level search on the monotone spend curve.
fn bisect_allocations(budget: f64, gains: &[f64]) -> Vec<f64> {
    let spend = |mu: f64| gains.iter().map(|g| (mu - 1.0 / g).max(0.0)).sum::<f64>();
    let mut lo = gains.iter().map(|g| 1.0 / g).fold(f64::INFINITY, f64::min);
    let mut hi = lo + budget;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if spend(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    gains.iter().map(|g| (mu - 1.0 / g).max(0.0)).collect()
}

/// The span-overlap passes are not vacuous: across random problems some
/// schedules must get strictly shorter.
#[test]
fn overlap_strictly_improves_some_problems() {
    let mut rng = stream_rng(5, 103, 0);
    let mut strict = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(6..=12usize);
        let mut hops: Vec<Hop> = Vec::with_capacity(n);
        let mut flow = 0usize;
        while hops.len() < n {
            let len = rng.gen_range(1..=(n - hops.len()).min(2));
            for k in 0..len {
                hops.push(Hop {
                    flow,
                    hop_index: k,
                    tx: 10 * flow + k,
                    rx: 10 * flow + k + 1,
                    slots: rng.gen_range(1..=40),
                });
            }
            flow += 1;
        }
        let sorted = sort_hops(&hops, &PriorityState::default());
        let mut matrix = vec![vec![false; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = sorted[i].flow == sorted[j].flow || rng.gen_bool(0.4);
                matrix[i][j] = c;
                matrix[j][i] = c;
            }
        }
        let budget: u32 = sorted.iter().map(|h| h.slots).sum();
        let consumed = |policy| {
            schedule_hops(policy, &sorted, budget, |i, j| matrix[i][j])
                .expect("schedule")
                .consumed_slots
        };
        let m = consumed(Policy::Mhct);
        if consumed(Policy::EmhctF) < m || consumed(Policy::EmhctE) < m {
            strict += 1;
        }
    }
    assert!(strict > 0, "no strict improvement across 100 random problems");
}
