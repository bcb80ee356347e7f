//! Scenario generation, run execution, sweeps and result serialization.
//!
//! A scenario is (seed, flow count, beamwidth). The topology and the flow
//! set are drawn from separate seed-derived streams, so the same seed gives
//! the same room regardless of how many flows are requested.

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::metrics;
use crate::radio::Beamwidth;
use crate::rng::{stream_rng, DOMAIN_FLOWS, DOMAIN_TOPOLOGY};
use crate::scheduler::{
    age_priorities, schedule_superframe, FlowId, FlowProgress, PendingFlow, Policy, PriorityState,
};
use crate::topology::{RadioContext, Topology};
use crate::waterfill::bound_superframe_bits;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One simulation cell: a seeded topology and flow set under a beamwidth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Scenario {
    pub seed: u64,
    pub flow_count: usize,
    pub beamwidth: Beamwidth,
}

/// A sampled traffic demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlowSpec {
    pub id: FlowId,
    pub src: usize,
    pub dst: usize,
    pub payload_bits: u64,
}

/// Samples `flow_count` flows with distinct ordered (src, dst) pairs and
/// uniform payloads. The stream depends on (seed, flow_count) only.
pub fn sample_flows(cfg: &SimConfig, seed: u64, flow_count: usize) -> Result<Vec<FlowSpec>> {
    let pair_limit = cfg.nodes * (cfg.nodes - 1);
    if flow_count == 0 || flow_count > pair_limit {
        return Err(Error::Domain(format!(
            "flow count {flow_count} outside 1..={pair_limit} for {} nodes",
            cfg.nodes
        )));
    }
    let mut rng = stream_rng(seed, DOMAIN_FLOWS, flow_count as u64);
    let mut used = BTreeSet::new();
    let mut flows = Vec::with_capacity(flow_count);
    while flows.len() < flow_count {
        let src = rng.gen_range(0..cfg.nodes);
        let dst = rng.gen_range(0..cfg.nodes);
        if src == dst || !used.insert((src, dst)) {
            continue;
        }
        flows.push(FlowSpec {
            id: flows.len(),
            src,
            dst,
            payload_bits: rng.gen_range(cfg.payload_min_bits..=cfg.payload_max_bits),
        });
    }
    Ok(flows)
}

/// Seeded room placement bound to the configured radio and `beamwidth`.
pub fn build_context(cfg: &SimConfig, seed: u64, beamwidth: Beamwidth) -> RadioContext {
    let mut rng = stream_rng(seed, DOMAIN_TOPOLOGY, 0);
    let topology = Topology::random(cfg.nodes, cfg.room_width_m, cfg.room_height_m, &mut rng);
    RadioContext::new(cfg.radio, beamwidth, topology)
}

/// Aggregated outcome of one scenario under one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub policy: Policy,
    pub beamwidth_deg: u32,
    pub flow_count: usize,
    /// Delivered bits per second of occupied slot time.
    pub throughput_bps: f64,
    /// Slots consumed across all active superframes.
    pub consumed_slots: u64,
    /// Direct-equivalent progress slots per consumed slot.
    pub concurrency_gain: f64,
    /// Jain fairness over per-flow delivered bits; absent until anything
    /// is delivered.
    pub jain_index: Option<f64>,
    /// Water-filling upper bound on deliverable bits per second, tracked
    /// for the hole-filling policy only.
    pub bound_bps: Option<f64>,
    pub superframes_active: u32,
}

fn advance_pending(
    pending: Vec<PendingFlow>,
    progress: &BTreeMap<FlowId, FlowProgress>,
) -> Vec<PendingFlow> {
    pending
        .into_iter()
        .filter_map(|mut f| {
            let p = &progress[&f.id];
            if p.delivered {
                None
            } else {
                f.origin = p.reached;
                Some(f)
            }
        })
        .collect()
}

fn initial_pending(flows: &[FlowSpec]) -> Vec<PendingFlow> {
    flows
        .iter()
        .map(|f| PendingFlow {
            id: f.id,
            origin: f.src,
            dst: f.dst,
            payload_bits: f.payload_bits,
        })
        .collect()
}

/// Simulates one scenario under `policy` for up to the configured number
/// of superframes, stopping early once every flow is delivered.
pub fn run_scenario(cfg: &SimConfig, scenario: Scenario, policy: Policy) -> Result<RunRecord> {
    let ctx = build_context(cfg, scenario.seed, scenario.beamwidth);
    let flows = sample_flows(cfg, scenario.seed, scenario.flow_count)?;
    let mut pending = initial_pending(&flows);
    let mut delivered: BTreeMap<FlowId, u64> = flows.iter().map(|f| (f.id, 0)).collect();
    let mut state = PriorityState::default();
    let mut consumed: u64 = 0;
    let mut credit: u64 = 0;
    let mut active: u32 = 0;
    let mut bound_bits = 0.0f64;

    for _ in 0..cfg.superframes_per_run {
        if pending.is_empty() {
            break;
        }
        active += 1;
        let out = schedule_superframe(&ctx, &pending, &state, policy, cfg.maxslots)?;
        consumed += u64::from(out.schedule.consumed_slots);
        if policy == Policy::EmhctF {
            bound_bits += bound_superframe_bits(&ctx, &out.schedule)?;
        }
        for (&id, p) in &out.progress {
            credit += u64::from(p.progress_slots);
            if p.delivered {
                delivered.insert(id, p.delivered_bits);
            }
        }
        age_priorities(&mut state, &out.progress);
        pending = advance_pending(pending, &out.progress);
    }

    let total_bits: u64 = delivered.values().sum();
    let per_flow: Vec<f64> = delivered.values().map(|&b| b as f64).collect();
    // The bound shares the throughput denominator so the two are comparable.
    let occupied_time = consumed.max(1) as f64 * cfg.radio.slot_duration_s;
    Ok(RunRecord {
        seed: scenario.seed,
        policy,
        beamwidth_deg: scenario.beamwidth.degrees(),
        flow_count: scenario.flow_count,
        throughput_bps: metrics::run_throughput_bps(
            total_bits,
            consumed,
            cfg.radio.slot_duration_s,
        ),
        consumed_slots: consumed,
        concurrency_gain: metrics::concurrency_gain(credit, consumed),
        jain_index: metrics::jain_index(&per_flow),
        bound_bps: (policy == Policy::EmhctF).then_some(bound_bits / occupied_time),
        superframes_active: active,
    })
}

/// Replays a scenario up to (not including) superframe `target`, returning
/// the context, the pending flows and the priority state entering it.
pub fn replay_to_superframe(
    cfg: &SimConfig,
    scenario: Scenario,
    policy: Policy,
    target: u32,
) -> Result<(RadioContext, Vec<PendingFlow>, PriorityState)> {
    let ctx = build_context(cfg, scenario.seed, scenario.beamwidth);
    let flows = sample_flows(cfg, scenario.seed, scenario.flow_count)?;
    let mut pending = initial_pending(&flows);
    let mut state = PriorityState::default();
    for _ in 0..target {
        if pending.is_empty() {
            break;
        }
        let out = schedule_superframe(&ctx, &pending, &state, policy, cfg.maxslots)?;
        age_priorities(&mut state, &out.progress);
        pending = advance_pending(pending, &out.progress);
    }
    Ok((ctx, pending, state))
}

/// Runs the full (beamwidth x flow count x seed x policy) grid in
/// parallel; record order matches that nesting regardless of thread count.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<RunRecord>> {
    let mut grid = Vec::new();
    for &beamwidth in &cfg.beamwidths {
        for &flow_count in &cfg.flow_counts {
            for &seed in &cfg.seeds {
                for &policy in &cfg.policies {
                    grid.push((
                        Scenario {
                            seed,
                            flow_count,
                            beamwidth,
                        },
                        policy,
                    ));
                }
            }
        }
    }
    grid.par_iter()
        .map(|&(scenario, policy)| run_scenario(cfg, scenario, policy))
        .collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut sum = 0.0;
    let mut n = 0u32;
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / f64::from(n))
}

type CellKey = (u32, usize, Policy);

fn group_cells(records: &[RunRecord]) -> BTreeMap<CellKey, Vec<&RunRecord>> {
    let mut cells: BTreeMap<CellKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        cells
            .entry((r.beamwidth_deg, r.flow_count, r.policy))
            .or_default()
            .push(r);
    }
    cells
}

/// One row per run, in sweep order.
pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "seed,policy,beamwidth_deg,flow_count,throughput_bps,consumed_slots,\
         concurrency_gain,jain_index\n",
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.seed,
            r.policy,
            r.beamwidth_deg,
            r.flow_count,
            r.throughput_bps,
            r.consumed_slots,
            r.concurrency_gain,
            fmt_opt(r.jain_index)
        );
    }
    out
}

/// Seed-averaged metrics per (beamwidth, flow count, policy) cell.
pub fn summary_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "beamwidth_deg,flow_count,policy,mean_throughput_bps,mean_consumed_slots,\
         mean_concurrency_gain,mean_jain_index\n",
    );
    for ((bw, fc, policy), rs) in group_cells(records) {
        let thr = mean(rs.iter().map(|r| r.throughput_bps)).unwrap_or(0.0);
        let con = mean(rs.iter().map(|r| r.consumed_slots as f64)).unwrap_or(0.0);
        let gain = mean(rs.iter().map(|r| r.concurrency_gain)).unwrap_or(0.0);
        let jain = mean(rs.iter().filter_map(|r| r.jain_index));
        let _ = writeln!(out, "{bw},{fc},{policy},{thr},{con},{gain},{}", fmt_opt(jain));
    }
    out
}

/// Mean throughput per flow count for one beamwidth, one column per policy.
pub fn fig_throughput_csv(records: &[RunRecord], beamwidth_deg: u32) -> String {
    let cells = group_cells(records);
    let flow_counts: BTreeSet<usize> = records
        .iter()
        .filter(|r| r.beamwidth_deg == beamwidth_deg)
        .map(|r| r.flow_count)
        .collect();
    let mut out = String::from("flow_count,mhct_bps,emhct_f_bps,emhct_e_bps\n");
    for fc in flow_counts {
        let col = |policy: Policy| {
            fmt_opt(cells.get(&(beamwidth_deg, fc, policy)).and_then(|rs| {
                mean(rs.iter().map(|r| r.throughput_bps))
            }))
        };
        let _ = writeln!(
            out,
            "{fc},{},{},{}",
            col(Policy::Mhct),
            col(Policy::EmhctF),
            col(Policy::EmhctE)
        );
    }
    out
}

/// Achieved mean throughput of the hole-filling policy against its
/// water-filling bound, for one beamwidth.
pub fn fig_throughput_bound_csv(records: &[RunRecord], beamwidth_deg: u32) -> String {
    let cells = group_cells(records);
    let flow_counts: BTreeSet<usize> = records
        .iter()
        .filter(|r| r.beamwidth_deg == beamwidth_deg && r.policy == Policy::EmhctF)
        .map(|r| r.flow_count)
        .collect();
    let mut out = String::from("flow_count,emhct_f_bps,waterfill_bound_bps\n");
    for fc in flow_counts {
        let rs = &cells[&(beamwidth_deg, fc, Policy::EmhctF)];
        let thr = fmt_opt(mean(rs.iter().map(|r| r.throughput_bps)));
        let bound = fmt_opt(mean(rs.iter().filter_map(|r| r.bound_bps)));
        let _ = writeln!(out, "{fc},{thr},{bound}");
    }
    out
}

/// Long-form per-cell means of one optional metric.
fn fig_cell_csv(
    records: &[RunRecord],
    metric_name: &str,
    metric: impl Fn(&RunRecord) -> Option<f64>,
) -> String {
    let mut out = format!("beamwidth_deg,flow_count,policy,mean_{metric_name}\n");
    for ((bw, fc, policy), rs) in group_cells(records) {
        let m = mean(rs.iter().filter_map(|r| metric(r)));
        let _ = writeln!(out, "{bw},{fc},{policy},{}", fmt_opt(m));
    }
    out
}

pub fn fig_concurrency_gain_csv(records: &[RunRecord]) -> String {
    fig_cell_csv(records, "concurrency_gain", |r| Some(r.concurrency_gain))
}

pub fn fig_jain_csv(records: &[RunRecord]) -> String {
    fig_cell_csv(records, "jain_index", |r| r.jain_index)
}

pub fn records_json(records: &[RunRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

/// Writes the per-run table, the cell summary, the figure tables and the
/// JSON dump into `dir`, returning every path written.
pub fn write_sweep_outputs(
    cfg: &SimConfig,
    records: &[RunRecord],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    emit("runs.csv".into(), runs_csv(records))?;
    emit("summary.csv".into(), summary_csv(records))?;
    for &bw in &cfg.beamwidths {
        emit(
            format!("fig_throughput_{bw}deg.csv"),
            fig_throughput_csv(records, bw.degrees()),
        )?;
    }
    if cfg.policies.contains(&Policy::EmhctF) {
        if let Some(bw) = cfg.beamwidths.iter().map(|b| b.degrees()).min() {
            emit(
                format!("fig_throughput_bound_{bw}deg.csv"),
                fig_throughput_bound_csv(records, bw),
            )?;
        }
    }
    emit("fig_concurrency_gain.csv".into(), fig_concurrency_gain_csv(records))?;
    emit("fig_jain.csv".into(), fig_jain_csv(records))?;
    emit("records.json".into(), records_json(records)?)?;
    Ok(written)
}
