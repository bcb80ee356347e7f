//! Flat `key = value` configuration with simulation defaults.
//!
//! Unknown and duplicated keys are errors; `#` starts a comment. Integer
//! list values accept comma-separated items and inclusive `a-b` ranges.

use crate::error::{Error, Result};
use crate::radio::{Beamwidth, RadioParams};
use crate::scheduler::Policy;
use std::collections::BTreeMap;
use std::path::Path;

/// Complete sweep configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub nodes: usize,
    pub room_width_m: f64,
    pub room_height_m: f64,
    pub radio: RadioParams,
    pub maxslots: u32,
    pub superframes_per_run: u32,
    pub payload_min_bits: u64,
    pub payload_max_bits: u64,
    pub seeds: Vec<u64>,
    pub flow_counts: Vec<usize>,
    pub beamwidths: Vec<Beamwidth>,
    pub policies: Vec<Policy>,
}

fn dbi_to_linear(dbi: f64) -> f64 {
    10f64.powf(dbi / 10.0)
}

/// dBm per MHz to W per Hz.
fn noise_density_w_per_hz(dbm_per_mhz: f64) -> f64 {
    10f64.powf(dbm_per_mhz / 10.0 - 9.0)
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 30,
            room_width_m: 16.0,
            room_height_m: 16.0,
            radio: RadioParams {
                bandwidth_hz: 7e9,
                tx_power_w: 1e-4,
                tx_gain: dbi_to_linear(12.0),
                rx_gain: dbi_to_linear(12.0),
                sidelobe_gain: 0.0,
                noise_w_per_hz: noise_density_w_per_hz(-134.0),
                path_loss_exponent: 3.0,
                carrier_hz: 60e9,
                slot_duration_s: 65.536e-6,
            },
            maxslots: 1000,
            superframes_per_run: 20,
            payload_min_bits: 50_000_000,
            payload_max_bits: 350_000_000,
            seeds: (1..=10).collect(),
            flow_counts: (1..=50).collect(),
            beamwidths: [20, 45, 90, 180]
                .iter()
                .map(|&d| Beamwidth::from_degrees(d).expect("default beamwidths"))
                .collect(),
            policies: Policy::ALL.to_vec(),
        }
    }
}

struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    "line",
                    format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
                ));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::config(
                    "line",
                    format!("line {}: empty key", lineno + 1),
                ));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::config(&key, "duplicated key"));
            }
        }
        Ok(RawConfig { entries })
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str, default: T) -> Result<T> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse `{v}`"))),
        }
    }

    fn take_list<T>(&mut self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T: std::str::FromStr + Clone + PartialOrd + RangeStep,
    {
        let Some(v) = self.entries.remove(key) else {
            return Ok(default);
        };
        let mut out = Vec::new();
        for item in v.split(',') {
            let item = item.trim();
            if item.is_empty() {
                return Err(Error::config(key, "empty list item"));
            }
            // `a-b` is an inclusive range; a bare value stands alone.
            if let Some((lo, hi)) = item.split_once('-') {
                let lo: T = lo
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(key, format!("cannot parse `{item}`")))?;
                let hi: T = hi
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(key, format!("cannot parse `{item}`")))?;
                if hi < lo {
                    return Err(Error::config(key, format!("range `{item}` is reversed")));
                }
                let mut cur = lo;
                loop {
                    out.push(cur.clone());
                    if cur < hi {
                        cur = cur.step_up();
                    } else {
                        break;
                    }
                }
            } else {
                out.push(
                    item.parse()
                        .map_err(|_| Error::config(key, format!("cannot parse `{item}`")))?,
                );
            }
        }
        Ok(out)
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.entries.keys().next() {
            return Err(Error::config(key, "unknown key"));
        }
        Ok(())
    }
}

/// Integer types usable in `a-b` config ranges.
pub trait RangeStep {
    fn step_up(&self) -> Self;
}

impl RangeStep for u64 {
    fn step_up(&self) -> Self {
        self + 1
    }
}

impl RangeStep for usize {
    fn step_up(&self) -> Self {
        self + 1
    }
}

impl SimConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let d = SimConfig::default();
        let mut raw = RawConfig::parse(text)?;
        let nodes = raw.take("nodes", d.nodes)?;
        let room_width_m = raw.take("room_width_m", d.room_width_m)?;
        let room_height_m = raw.take("room_height_m", d.room_height_m)?;
        let bandwidth_hz = raw.take("bandwidth_hz", d.radio.bandwidth_hz)?;
        let tx_power_w = raw.take("tx_power_w", d.radio.tx_power_w)?;
        let tx_gain_dbi = raw.take("tx_gain_dbi", 12.0)?;
        let rx_gain_dbi = raw.take("rx_gain_dbi", 12.0)?;
        let sidelobe_gain = raw.take("sidelobe_gain", d.radio.sidelobe_gain)?;
        let noise_dbm_per_mhz = raw.take("noise_dbm_per_mhz", -134.0)?;
        let path_loss_exponent = raw.take("path_loss_exponent", d.radio.path_loss_exponent)?;
        let carrier_hz = raw.take("carrier_hz", d.radio.carrier_hz)?;
        let slot_duration_s = raw.take("slot_duration_s", d.radio.slot_duration_s)?;
        let maxslots = raw.take("maxslots", d.maxslots)?;
        let superframes_per_run = raw.take("superframes_per_run", d.superframes_per_run)?;
        let payload_min_bits = raw.take("payload_min_bits", d.payload_min_bits)?;
        let payload_max_bits = raw.take("payload_max_bits", d.payload_max_bits)?;
        let seeds = raw.take_list("seeds", d.seeds)?;
        let flow_counts = raw.take_list("flow_counts", d.flow_counts)?;
        let beam_degrees: Vec<u64> = raw.take_list(
            "beamwidths_deg",
            d.beamwidths.iter().map(|b| u64::from(b.degrees())).collect(),
        )?;
        let policies = match raw.entries.remove("policies") {
            None => d.policies,
            Some(v) => v
                .split(',')
                .map(|p| p.trim().parse::<Policy>())
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::config("policies", e.to_string()))?,
        };
        raw.finish()?;

        let mut beamwidths = Vec::new();
        for deg in beam_degrees {
            let deg = u32::try_from(deg)
                .map_err(|_| Error::config("beamwidths_deg", format!("{deg} out of range")))?;
            beamwidths.push(
                Beamwidth::from_degrees(deg)
                    .map_err(|e| Error::config("beamwidths_deg", e.to_string()))?,
            );
        }

        let cfg = SimConfig {
            nodes,
            room_width_m,
            room_height_m,
            radio: RadioParams {
                bandwidth_hz,
                tx_power_w,
                tx_gain: dbi_to_linear(tx_gain_dbi),
                rx_gain: dbi_to_linear(rx_gain_dbi),
                sidelobe_gain,
                noise_w_per_hz: noise_density_w_per_hz(noise_dbm_per_mhz),
                path_loss_exponent,
                carrier_hz,
                slot_duration_s,
            },
            maxslots,
            superframes_per_run,
            payload_min_bits,
            payload_max_bits,
            seeds,
            flow_counts,
            beamwidths,
            policies,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::config("nodes", "need at least 2 nodes"));
        }
        if !(self.room_width_m > 0.0 && self.room_height_m > 0.0) {
            return Err(Error::config("room_width_m", "room sides must be positive"));
        }
        self.radio
            .validate()
            .map_err(|e| Error::config("radio", e.to_string()))?;
        if self.maxslots == 0 {
            return Err(Error::config("maxslots", "must be at least 1"));
        }
        if self.superframes_per_run == 0 {
            return Err(Error::config("superframes_per_run", "must be at least 1"));
        }
        if self.payload_min_bits == 0 || self.payload_min_bits > self.payload_max_bits {
            return Err(Error::config(
                "payload_min_bits",
                "need 0 < payload_min_bits <= payload_max_bits",
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "need at least one seed"));
        }
        if self.flow_counts.is_empty() {
            return Err(Error::config("flow_counts", "need at least one flow count"));
        }
        let pair_limit = self.nodes * (self.nodes - 1);
        for &fc in &self.flow_counts {
            if fc == 0 || fc > pair_limit {
                return Err(Error::config(
                    "flow_counts",
                    format!("flow count {fc} outside 1..={pair_limit} for {} nodes", self.nodes),
                ));
            }
        }
        if self.beamwidths.is_empty() {
            return Err(Error::config("beamwidths_deg", "need at least one beamwidth"));
        }
        if self.policies.is_empty() {
            return Err(Error::config("policies", "need at least one policy"));
        }
        Ok(())
    }
}
