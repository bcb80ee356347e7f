//! Run-level performance metrics.

/// Wall-clock duration of one superframe.
pub fn superframe_duration_s(maxslots: u32, slot_duration_s: f64) -> f64 {
    f64::from(maxslots) * slot_duration_s
}

/// Bits delivered end-to-end in one superframe, per second of superframe
/// time. A flow counts only once its final hop completes.
pub fn superframe_throughput_bps(delivered_bits: u64, superframe_duration_s: f64) -> f64 {
    delivered_bits as f64 / superframe_duration_s
}

/// Run-level throughput: delivered bits per second of occupied slot time.
/// Consumption is clamped to one slot so an idle run reads 0 rather than
/// dividing by zero. Charging consumed slots instead of elapsed superframes
/// makes the number a bandwidth-efficiency figure: a policy that needs more
/// slots for the same deliveries scores lower.
pub fn run_throughput_bps(delivered_bits: u64, consumed_slots: u64, slot_duration_s: f64) -> f64 {
    let slots = consumed_slots.max(1);
    delivered_bits as f64 / (slots as f64 * slot_duration_s)
}

/// Aggregate concurrency gain: direct-link-equivalent slots of the work
/// actually served, per consumed slot. 1.0 for an idle run.
pub fn concurrency_gain(progress_slots: u64, consumed_slots: u64) -> f64 {
    if consumed_slots == 0 {
        1.0
    } else {
        progress_slots as f64 / consumed_slots as f64
    }
}

/// Jain fairness index of per-flow delivered bits: (sum x)^2 / (n sum x^2).
/// `None` when no flow delivered anything (the index is undefined).
pub fn jain_index(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if sum <= 0.0 || sum_sq <= 0.0 {
        None
    } else {
        Some(sum * sum / (values.len() as f64 * sum_sq))
    }
}
