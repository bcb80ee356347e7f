//! TDMA group scheduling of multihop transmissions.
//!
//! A superframe holds `maxslots` slots. Hops are packed into concurrency
//! groups: members of one group transmit in the same span of slots, so two
//! conflicting hops must never overlap in time. Three policies share one
//! engine:
//!
//! * `Mhct`: sort hops by (aged) slot demand, first-fit each into an
//!   existing group, else open a new group; hops that exceed the remaining
//!   budget miss the superframe.
//! * `EmhctF`: the same grouping, then a span-overlap pass that relocates
//!   hops into idle tails of earlier groups without growing any group.
//! * `EmhctE`: span overlap that may also grow the receiving group: a
//!   placement must strictly shrink consumption or fund its growth from
//!   savings banked earlier in the pass, so the enhanced map never
//!   consumes more slots than the baseline map.

use crate::error::{Error, Result};
use crate::radio::RadioParams;
use crate::topology::{relay_weight, Link, RadioContext};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub type FlowId = usize;

/// Misses after which a flow jumps ahead of every non-starved hop.
pub const STARVED_MISS_COUNT: u32 = 4;
/// Priority boost per recorded miss: demand is scaled by (1 + 0.25 m).
pub const AGING_BOOST_PER_MISS: f64 = 0.25;

/// One transmission to place: `slots` contiguous slots on `tx -> rx`,
/// the `hop_index`-th hop of `flow`'s route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub flow: FlowId,
    pub hop_index: usize,
    pub tx: usize,
    pub rx: usize,
    pub slots: u32,
}

impl Hop {
    pub fn link(&self) -> Link {
        Link {
            tx: self.tx,
            rx: self.rx,
        }
    }
}

/// Scheduling policy selector.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    Mhct,
    EmhctF,
    EmhctE,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Mhct, Policy::EmhctF, Policy::EmhctE];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Mhct => "mhct",
            Policy::EmhctF => "emhct-f",
            Policy::EmhctE => "emhct-e",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mhct" => Ok(Policy::Mhct),
            "emhct-f" => Ok(Policy::EmhctF),
            "emhct-e" => Ok(Policy::EmhctE),
            other => Err(Error::Domain(format!(
                "unknown policy `{other}` (expected mhct, emhct-f or emhct-e)"
            ))),
        }
    }
}

/// A placed hop inside a group, `offset` slots after the group start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub flow: FlowId,
    pub hop: usize,
    pub tx: usize,
    pub rx: usize,
    pub offset: u32,
    pub slots: u32,
}

impl Placement {
    pub fn end_offset(&self) -> u32 {
        self.offset + self.slots
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleGroup {
    pub index: usize,
    pub start_slot: u32,
    pub size_slots: u32,
    pub placements: Vec<Placement>,
}

/// A finalized superframe schedule: groups tile `[0, consumed_slots)` in
/// index order and every group's size equals its largest placement end.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleMap {
    pub maxslots: u32,
    pub consumed_slots: u32,
    pub groups: Vec<ScheduleGroup>,
}

impl ScheduleMap {
    pub fn placements(&self) -> impl Iterator<Item = (&ScheduleGroup, &Placement)> {
        self.groups
            .iter()
            .flat_map(|g| g.placements.iter().map(move |p| (g, p)))
    }

    /// Absolute slot interval of a placement within this schedule.
    pub fn interval(group: &ScheduleGroup, p: &Placement) -> (u32, u32) {
        (group.start_slot + p.offset, group.start_slot + p.end_offset())
    }
}

/// Per-flow miss counters feeding the aging boost.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorityState {
    miss_counts: BTreeMap<FlowId, u32>,
}

impl PriorityState {
    pub fn miss_count(&self, flow: FlowId) -> u32 {
        self.miss_counts.get(&flow).copied().unwrap_or(0)
    }

    /// Records one superframe outcome for `flow`: a fully scheduled flow
    /// resets to zero misses, anything else gains one.
    pub fn record(&mut self, flow: FlowId, fully_scheduled: bool) {
        if fully_scheduled {
            self.miss_counts.remove(&flow);
        } else {
            *self.miss_counts.entry(flow).or_insert(0) += 1;
        }
    }
}

fn boosted_demand(slots: u32, misses: u32) -> f64 {
    f64::from(slots) * (1.0 + AGING_BOOST_PER_MISS * f64::from(misses))
}

/// Priority order for placement. Starved flows (>= `STARVED_MISS_COUNT`
/// misses) outrank everything, ordered by miss count then boosted demand;
/// the rest order by boosted demand alone. Ties fall back to (flow, hop).
pub fn sort_hops(hops: &[Hop], state: &PriorityState) -> Vec<Hop> {
    let mut sorted = hops.to_vec();
    sorted.sort_by(|a, b| {
        let (ma, mb) = (state.miss_count(a.flow), state.miss_count(b.flow));
        let (sa, sb) = (ma >= STARVED_MISS_COUNT, mb >= STARVED_MISS_COUNT);
        sb.cmp(&sa)
            .then_with(|| if sa && sb { mb.cmp(&ma) } else { std::cmp::Ordering::Equal })
            .then_with(|| boosted_demand(b.slots, mb).total_cmp(&boosted_demand(a.slots, ma)))
            .then_with(|| (a.flow, a.hop_index).cmp(&(b.flow, b.hop_index)))
    });
    sorted
}

/// Updates miss counters from one superframe's per-flow outcomes.
pub fn age_priorities(state: &mut PriorityState, progress: &BTreeMap<FlowId, FlowProgress>) {
    for (&flow, p) in progress {
        state.record(flow, p.delivered);
    }
}

struct Member {
    hop: usize,
    offset: u32,
}

struct EngineGroup {
    /// Slots charged against the superframe budget. During the grouping
    /// pass this is the opened capacity and may exceed the largest member;
    /// from the shrink onward it always equals the span.
    capacity: u32,
    members: Vec<Member>,
}

struct Engine<'a, C> {
    hops: &'a [Hop],
    conflict: C,
    maxslots: u32,
    pred: Vec<Option<usize>>,
    succ: Vec<Option<usize>>,
    groups: Vec<EngineGroup>,
    assigned: Vec<Option<(usize, u32)>>,
    consumed: u32,
}

impl<'a, C: Fn(usize, usize) -> bool> Engine<'a, C> {
    fn new(hops: &'a [Hop], maxslots: u32, conflict: C) -> Result<Self> {
        let mut by_key: BTreeMap<(FlowId, usize), usize> = BTreeMap::new();
        for (i, h) in hops.iter().enumerate() {
            if h.slots == 0 {
                return Err(Error::Invariant(format!(
                    "flow {} hop {} has zero slots",
                    h.flow, h.hop_index
                )));
            }
            if by_key.insert((h.flow, h.hop_index), i).is_some() {
                return Err(Error::Invariant(format!(
                    "duplicate hop ({}, {})",
                    h.flow, h.hop_index
                )));
            }
        }
        let mut pred = vec![None; hops.len()];
        let mut succ = vec![None; hops.len()];
        for (i, h) in hops.iter().enumerate() {
            if h.hop_index > 0 {
                let p = by_key.get(&(h.flow, h.hop_index - 1)).copied().ok_or_else(|| {
                    Error::Invariant(format!(
                        "flow {} hop {} lacks its predecessor hop",
                        h.flow, h.hop_index
                    ))
                })?;
                pred[i] = Some(p);
                succ[p] = Some(i);
            }
        }
        Ok(Engine {
            hops,
            conflict,
            maxslots,
            pred,
            succ,
            groups: Vec::new(),
            assigned: vec![None; hops.len()],
            consumed: 0,
        })
    }

    fn span_of(&self, g: usize) -> u32 {
        self.groups[g]
            .members
            .iter()
            .map(|m| m.offset + self.hops[m.hop].slots)
            .max()
            .unwrap_or(0)
    }

    fn eligible(&self, i: usize, attempted: &[bool], dead: &[bool]) -> bool {
        !attempted[i]
            && !dead[i]
            && self.assigned[i].is_none()
            && self.pred[i].is_none_or(|p| self.assigned[p].is_some())
    }

    /// First-fit into an existing group: room, no conflict with a member,
    /// and strictly after the predecessor's group.
    fn try_first_fit(&mut self, h: usize) -> bool {
        let min_group = self.pred[h].map_or(0, |p| self.assigned[p].unwrap().0 + 1);
        for g in min_group..self.groups.len() {
            if self.hops[h].slots > self.groups[g].capacity {
                continue;
            }
            if self.groups[g]
                .members
                .iter()
                .any(|m| (self.conflict)(h, m.hop))
            {
                continue;
            }
            self.groups[g].members.push(Member { hop: h, offset: 0 });
            self.assigned[h] = Some((g, 0));
            return true;
        }
        false
    }

    /// Grouping pass shared by every policy. Always resolves the highest
    /// priority hop whose predecessor is already placed. A hop that cannot
    /// open a group within budget is dropped for good under MHCT
    /// (`keep_unplaced = false`) or kept as a span-overlap candidate.
    fn grouping_pass(&mut self, keep_unplaced: bool) {
        let n = self.hops.len();
        let mut attempted = vec![false; n];
        let mut dead = vec![false; n];
        while let Some(h) = (0..n).find(|&i| self.eligible(i, &attempted, &dead)) {
            attempted[h] = true;
            if self.try_first_fit(h) {
                continue;
            }
            // New group sized by the largest demand that could still be
            // placed right now (the current hop or any eligible one).
            let cap = (0..n)
                .filter(|&i| i == h || self.eligible(i, &attempted, &dead))
                .map(|i| self.hops[i].slots)
                .max()
                .unwrap_or(self.hops[h].slots);
            if self.consumed + cap <= self.maxslots {
                let g = self.groups.len();
                self.groups.push(EngineGroup {
                    capacity: cap,
                    members: vec![Member { hop: h, offset: 0 }],
                });
                self.assigned[h] = Some((g, 0));
                self.consumed += cap;
            } else if !keep_unplaced {
                // The whole tail of the flow can never place this
                // superframe; stop it from inflating later capacities.
                let mut cur = Some(h);
                while let Some(i) = cur {
                    dead[i] = true;
                    cur = self.succ[i];
                }
            }
        }
        // Opened capacity collapses to the actual span before any overlap.
        self.consumed = 0;
        for g in 0..self.groups.len() {
            let span = self.span_of(g);
            self.groups[g].capacity = span;
            self.consumed += span;
        }
    }

    fn group_start(&self, g: usize) -> u32 {
        self.groups[..g].iter().map(|gr| gr.capacity).sum()
    }

    fn abs_end(&self, hop: usize) -> u32 {
        let (g, off) = self.assigned[hop].expect("hop must be placed");
        self.group_start(g) + off + self.hops[hop].slots
    }

    /// Span-overlap pass. Scans receivers in index order and candidates in
    /// priority order; a candidate is any hop still unplaced or placed in a
    /// later group. `grow` enables capacity growth (EMHCT-E): a placement
    /// must strictly shrink consumption or fund its growth from savings
    /// already banked this pass, so consumption never exceeds the grouping
    /// baseline.
    fn overlap_pass(&mut self, grow: bool) {
        let baseline = self.consumed;
        for receiver in 0..self.groups.len() {
            if self.groups[receiver].members.is_empty() {
                continue;
            }
            for cand in 0..self.hops.len() {
                match self.assigned[cand] {
                    Some((g, _)) if g <= receiver => continue,
                    _ => {}
                }
                if let Some(p) = self.pred[cand] {
                    if self.assigned[p].is_none() {
                        continue;
                    }
                }
                self.try_overlap(cand, receiver, grow, baseline);
            }
        }
    }

    fn try_overlap(&mut self, cand: usize, receiver: usize, grow: bool, baseline: u32) {
        let slots = self.hops[cand].slots;
        let span = self.groups[receiver].capacity;
        // Earliest offset after every conflicting member of the receiver.
        let nc = self.groups[receiver]
            .members
            .iter()
            .filter(|m| (self.conflict)(cand, m.hop))
            .map(|m| m.offset + self.hops[m.hop].slots)
            .max()
            .unwrap_or(0);
        let growth = (nc + slots).saturating_sub(span);
        if !grow && growth > 0 {
            return;
        }
        // Donor shrink if the candidate is moving out of a later group.
        let release = match self.assigned[cand] {
            Some((donor, _)) => {
                let old = self.groups[donor].capacity;
                let without = self.groups[donor]
                    .members
                    .iter()
                    .filter(|m| m.hop != cand)
                    .map(|m| m.offset + self.hops[m.hop].slots)
                    .max()
                    .unwrap_or(0);
                old - without
            }
            None => 0,
        };
        // A placement either strictly shrinks consumption (the donor
        // releases more than the receiver grows) or draws its growth from
        // savings banked earlier in the pass. Either way consumption never
        // exceeds the grouping baseline, so the enhanced map is at most as
        // long as the baseline map.
        let banked = baseline - self.consumed;
        if growth >= release && growth > banked {
            return;
        }
        // Hop order: the predecessor must finish before the new start.
        let new_start_abs = self.group_start(receiver) + nc;
        if let Some(p) = self.pred[cand] {
            if self.abs_end(p) > new_start_abs {
                return;
            }
        }
        // Hop order toward the successor, evaluated on the post-move tiling.
        if let Some(s) = self.succ[cand] {
            if let Some((sg, soff)) = self.assigned[s] {
                let donor = self.assigned[cand].map(|(g, _)| g);
                let start_after = |target: usize| -> u32 {
                    self.groups[..target]
                        .iter()
                        .enumerate()
                        .map(|(g, gr)| {
                            let mut c = gr.capacity;
                            if g == receiver {
                                c += growth;
                            }
                            if Some(g) == donor {
                                c -= release;
                            }
                            c
                        })
                        .sum()
                };
                if new_start_abs + slots > start_after(sg) + soff {
                    return;
                }
            }
        }
        // Accepted: leave the donor, enter the receiver at `nc`.
        if let Some((donor, _)) = self.assigned[cand] {
            self.groups[donor].members.retain(|m| m.hop != cand);
            self.groups[donor].capacity -= release;
            self.consumed -= release;
        }
        self.groups[receiver].members.push(Member {
            hop: cand,
            offset: nc,
        });
        self.groups[receiver].capacity += growth;
        self.consumed += growth;
        self.assigned[cand] = Some((receiver, nc));
    }

    fn finalize(self) -> Result<ScheduleMap> {
        let mut groups = Vec::new();
        let mut start = 0u32;
        for g in &self.groups {
            if g.members.is_empty() {
                continue;
            }
            let size = g
                .members
                .iter()
                .map(|m| m.offset + self.hops[m.hop].slots)
                .max()
                .unwrap_or(0);
            debug_assert_eq!(size, g.capacity, "capacity tracks span after shrink");
            let mut placements: Vec<Placement> = g
                .members
                .iter()
                .map(|m| {
                    let h = &self.hops[m.hop];
                    Placement {
                        flow: h.flow,
                        hop: h.hop_index,
                        tx: h.tx,
                        rx: h.rx,
                        offset: m.offset,
                        slots: h.slots,
                    }
                })
                .collect();
            placements.sort_by_key(|p| (p.offset, p.flow, p.hop));
            groups.push(ScheduleGroup {
                index: groups.len(),
                start_slot: start,
                size_slots: size,
                placements,
            });
            start += size;
        }
        if start > self.maxslots {
            return Err(Error::Invariant(format!(
                "consumed {start} slots exceeds superframe budget {}",
                self.maxslots
            )));
        }
        Ok(ScheduleMap {
            maxslots: self.maxslots,
            consumed_slots: start,
            groups,
        })
    }
}

fn run_policy(
    policy: Policy,
    sorted_hops: &[Hop],
    maxslots: u32,
    conflict: impl Fn(usize, usize) -> bool,
) -> Result<ScheduleMap> {
    let mut engine = Engine::new(sorted_hops, maxslots, conflict)?;
    match policy {
        Policy::Mhct => engine.grouping_pass(false),
        Policy::EmhctF => {
            engine.grouping_pass(true);
            engine.overlap_pass(false);
        }
        Policy::EmhctE => {
            engine.grouping_pass(true);
            engine.overlap_pass(true);
        }
    }
    engine.finalize()
}

/// Baseline scheduler: grouping pass only. `sorted_hops` must already be
/// in priority order (see [`sort_hops`]); `conflict(i, j)` answers for
/// positions in that slice.
pub fn mhct_schedule(
    sorted_hops: &[Hop],
    maxslots: u32,
    conflict: impl Fn(usize, usize) -> bool,
) -> Result<ScheduleMap> {
    run_policy(Policy::Mhct, sorted_hops, maxslots, conflict)
}

/// Grouping plus hole-filling span overlap; group sizes never grow.
pub fn emhct_f_schedule(
    sorted_hops: &[Hop],
    maxslots: u32,
    conflict: impl Fn(usize, usize) -> bool,
) -> Result<ScheduleMap> {
    run_policy(Policy::EmhctF, sorted_hops, maxslots, conflict)
}

/// Grouping plus span overlap whose placements may grow the receiving
/// group, shrinking consumption or spending banked savings but never
/// exceeding the grouping-pass consumption.
pub fn emhct_e_schedule(
    sorted_hops: &[Hop],
    maxslots: u32,
    conflict: impl Fn(usize, usize) -> bool,
) -> Result<ScheduleMap> {
    run_policy(Policy::EmhctE, sorted_hops, maxslots, conflict)
}

/// Dispatches on `policy`.
pub fn schedule_hops(
    policy: Policy,
    sorted_hops: &[Hop],
    maxslots: u32,
    conflict: impl Fn(usize, usize) -> bool,
) -> Result<ScheduleMap> {
    run_policy(policy, sorted_hops, maxslots, conflict)
}

/// Pairwise conflict matrix for a hop list under `ctx`'s geometry.
pub fn conflict_matrix(ctx: &RadioContext, hops: &[Hop]) -> Vec<Vec<bool>> {
    let n = hops.len();
    let mut m = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let c = ctx.conflicts(hops[i].link(), hops[j].link());
            m[i][j] = c;
            m[j][i] = c;
        }
    }
    m
}

/// Structural validation of a finalized schedule.
///
/// Checks group tiling, size accounting, the budget, time-disjointness of
/// conflicting placements, and per-flow hop order (placed hops must form a
/// route prefix with non-overlapping, ordered intervals). With
/// `policy = Some(Mhct)` additionally requires all offsets to be zero.
pub fn validate_schedule(
    map: &ScheduleMap,
    conflict: impl Fn(&Placement, &Placement) -> bool,
    policy: Option<Policy>,
) -> Result<()> {
    let fail = |msg: String| Err(Error::Invariant(msg));
    let mut expected_start = 0u32;
    for (k, g) in map.groups.iter().enumerate() {
        if g.index != k {
            return fail(format!("group {k} carries index {}", g.index));
        }
        if g.start_slot != expected_start {
            return fail(format!(
                "group {k} starts at {} instead of {expected_start}",
                g.start_slot
            ));
        }
        if g.placements.is_empty() {
            return fail(format!("group {k} is empty"));
        }
        let span = g.placements.iter().map(Placement::end_offset).max().unwrap();
        if span != g.size_slots {
            return fail(format!(
                "group {k} sized {} but largest placement ends at {span}",
                g.size_slots
            ));
        }
        for p in &g.placements {
            if p.slots == 0 {
                return fail(format!("flow {} hop {} placed with zero slots", p.flow, p.hop));
            }
            if p.end_offset() > g.size_slots {
                return fail(format!(
                    "flow {} hop {} overruns group {k}",
                    p.flow, p.hop
                ));
            }
            if policy == Some(Policy::Mhct) && p.offset != 0 {
                return fail(format!(
                    "baseline schedule has offset {} for flow {} hop {}",
                    p.offset, p.flow, p.hop
                ));
            }
        }
        // Conflicting members of one group must be time-disjoint.
        for (i, a) in g.placements.iter().enumerate() {
            for b in &g.placements[i + 1..] {
                if conflict(a, b)
                    && a.offset < b.end_offset()
                    && b.offset < a.end_offset()
                {
                    return fail(format!(
                        "conflicting placements overlap in group {k}: \
                         flow {} hop {} and flow {} hop {}",
                        a.flow, a.hop, b.flow, b.hop
                    ));
                }
            }
        }
        expected_start += g.size_slots;
    }
    if expected_start != map.consumed_slots {
        return fail(format!(
            "consumed_slots {} but groups tile {expected_start}",
            map.consumed_slots
        ));
    }
    if map.consumed_slots > map.maxslots {
        return fail(format!(
            "consumed {} exceeds budget {}",
            map.consumed_slots, map.maxslots
        ));
    }
    // Per-flow hop order across the whole superframe.
    let mut flows: BTreeMap<FlowId, Vec<(usize, u32, u32)>> = BTreeMap::new();
    for (g, p) in map.placements() {
        let (s, e) = ScheduleMap::interval(g, p);
        flows.entry(p.flow).or_default().push((p.hop, s, e));
    }
    for (flow, mut hops) in flows {
        hops.sort_by_key(|&(h, _, _)| h);
        for (k, &(h, start, _)) in hops.iter().enumerate() {
            if h != k {
                return fail(format!(
                    "flow {flow}: placed hops are not a route prefix (hop {h} at position {k})"
                ));
            }
            if k > 0 && hops[k - 1].2 > start {
                return fail(format!(
                    "flow {flow}: hop {h} starts at {start} before hop {} ends at {}",
                    k - 1,
                    hops[k - 1].2
                ));
            }
        }
    }
    Ok(())
}

/// One flow awaiting service: `payload_bits` currently held at `origin`,
/// bound for `dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingFlow {
    pub id: FlowId,
    pub origin: usize,
    pub dst: usize,
    pub payload_bits: u64,
}

/// Outcome of one superframe for one flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowProgress {
    pub origin_at_start: usize,
    /// Node the payload sits at after this superframe.
    pub reached: usize,
    pub delivered: bool,
    /// Slot demand of the direct link this superframe.
    pub direct_slots: u32,
    /// Slot demand of the chosen route (equals `direct_slots` when direct).
    pub route_slots: u32,
    /// Direct-link-equivalent slots for the distance actually covered.
    pub progress_slots: u32,
    pub delivered_bits: u64,
}

/// A flow's chosen route for one superframe.
#[derive(Debug, Clone)]
pub struct FlowRoute {
    pub flow: FlowId,
    pub direct_slots: u32,
    pub hops: Vec<Hop>,
}

/// Converts pending flows into hop demands for one superframe.
///
/// Each flow routes over the cheapest relay path (squared normalized
/// distance plus normalized receiver workload) and keeps the relayed route
/// only when its total slot demand beats the direct link strictly;
/// workloads update after every flow, so earlier conversions steer later
/// ones away from busy receivers.
pub fn convert_flows(ctx: &RadioContext, pending: &[PendingFlow]) -> Result<Vec<FlowRoute>> {
    let topo = &ctx.topology;
    let diag = topo.diagonal_m();
    let mut load = vec![0u64; topo.len()];
    let mut routes = Vec::with_capacity(pending.len());
    for flow in pending {
        if flow.origin == flow.dst {
            return Err(Error::Invariant(format!(
                "flow {} is already at its destination",
                flow.id
            )));
        }
        if flow.origin >= topo.len() || flow.dst >= topo.len() {
            return Err(Error::Domain(format!(
                "flow {} references a node outside the topology",
                flow.id
            )));
        }
        let direct_slots = ctx.slots_for(flow.payload_bits, flow.origin, flow.dst);
        let scale = load.iter().copied().max().unwrap_or(0).max(1);
        let path = topo.shortest_path(flow.origin, flow.dst, |u, v| {
            relay_weight(topo.distance(u, v), diag, load[v], scale)
        });
        let relay_slots: Vec<u32> = path
            .windows(2)
            .map(|e| ctx.slots_for(flow.payload_bits, e[0], e[1]))
            .collect();
        let relay_total: u32 = relay_slots.iter().sum();
        let hops: Vec<Hop> = if path.len() > 2 && relay_total < direct_slots {
            path.windows(2)
                .zip(relay_slots.iter())
                .enumerate()
                .map(|(k, (e, &slots))| Hop {
                    flow: flow.id,
                    hop_index: k,
                    tx: e[0],
                    rx: e[1],
                    slots,
                })
                .collect()
        } else {
            vec![Hop {
                flow: flow.id,
                hop_index: 0,
                tx: flow.origin,
                rx: flow.dst,
                slots: direct_slots,
            }]
        };
        for h in &hops {
            load[h.tx] += u64::from(h.slots);
            load[h.rx] += u64::from(h.slots);
        }
        routes.push(FlowRoute {
            flow: flow.id,
            direct_slots,
            hops,
        });
    }
    Ok(routes)
}

/// Everything a superframe produced: the schedule and per-flow progress.
#[derive(Debug, Clone)]
pub struct SuperframeOutcome {
    pub schedule: ScheduleMap,
    pub progress: BTreeMap<FlowId, FlowProgress>,
}

/// Runs one full superframe: route conversion, priority sort, scheduling
/// under `policy`, validation, and per-flow progress accounting.
pub fn schedule_superframe(
    ctx: &RadioContext,
    pending: &[PendingFlow],
    state: &PriorityState,
    policy: Policy,
    maxslots: u32,
) -> Result<SuperframeOutcome> {
    let routes = convert_flows(ctx, pending)?;
    let hops: Vec<Hop> = routes.iter().flat_map(|r| r.hops.iter().copied()).collect();
    let sorted = sort_hops(&hops, state);
    let matrix = conflict_matrix(ctx, &sorted);
    let schedule = schedule_hops(policy, &sorted, maxslots, |i, j| matrix[i][j])?;
    validate_schedule(
        &schedule,
        |a, b| ctx.conflicts(Link { tx: a.tx, rx: a.rx }, Link { tx: b.tx, rx: b.rx }),
        (policy == Policy::Mhct).then_some(Policy::Mhct),
    )?;

    let mut placed: BTreeMap<FlowId, Vec<usize>> = BTreeMap::new();
    for (_, p) in schedule.placements() {
        placed.entry(p.flow).or_default().push(p.hop);
    }
    let mut progress = BTreeMap::new();
    for (flow, route) in pending.iter().zip(routes.iter()) {
        debug_assert_eq!(flow.id, route.flow);
        let placed_hops = placed.remove(&flow.id).unwrap_or_default();
        let prefix = placed_hops.len();
        debug_assert!(
            placed_hops.iter().copied().max().is_none_or(|m| m + 1 == prefix),
            "placed hops form a prefix"
        );
        let reached = if prefix == 0 {
            flow.origin
        } else {
            route.hops[prefix - 1].rx
        };
        let delivered = reached == flow.dst;
        let progress_slots = if prefix == 0 {
            0
        } else {
            ctx.slots_for(flow.payload_bits, flow.origin, reached)
        };
        progress.insert(
            flow.id,
            FlowProgress {
                origin_at_start: flow.origin,
                reached,
                delivered,
                direct_slots: route.direct_slots,
                route_slots: route.hops.iter().map(|h| h.slots).sum(),
                progress_slots,
                delivered_bits: if delivered { flow.payload_bits } else { 0 },
            },
        );
    }
    Ok(SuperframeOutcome { schedule, progress })
}

/// Fixed-width text chart: one row per group with a scaled slot bar.
pub fn render_gantt(map: &ScheduleMap) -> String {
    const WIDTH: usize = 64;
    let scale = f64::from(map.maxslots.max(1)) / WIDTH as f64;
    let mut out = format!(
        "consumed {} of {} slots in {} groups\n",
        map.consumed_slots,
        map.maxslots,
        map.groups.len()
    );
    for g in &map.groups {
        let lo = (f64::from(g.start_slot) / scale).round() as usize;
        let hi = ((f64::from(g.start_slot + g.size_slots)) / scale).round() as usize;
        let mut bar = vec![b'.'; WIDTH];
        for c in bar.iter_mut().take(hi.min(WIDTH)).skip(lo.min(WIDTH)) {
            *c = b'#';
        }
        let members = g
            .placements
            .iter()
            .map(|p| format!("f{}.h{} {}->{}@{}+{}", p.flow, p.hop, p.tx, p.rx, p.offset, p.slots))
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!(
            "G{:>3} |{}| [{:>5}..{:>5}) {}\n",
            g.index,
            String::from_utf8(bar).expect("ascii bar"),
            g.start_slot,
            g.start_slot + g.size_slots,
            members
        ));
    }
    out
}

/// Radio parameter set used by unit tests across modules.
#[doc(hidden)]
pub fn test_radio_params() -> RadioParams {
    RadioParams {
        bandwidth_hz: 7e9,
        tx_power_w: 1e-4,
        tx_gain: 15.848931924611133,
        rx_gain: 15.848931924611133,
        sidelobe_gain: 0.0,
        noise_w_per_hz: 3.9810717055349854e-23,
        path_loss_exponent: 3.0,
        carrier_hz: 60e9,
        slot_duration_s: 65.536e-6,
    }
}
