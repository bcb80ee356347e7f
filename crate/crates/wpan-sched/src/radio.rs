//! Physical layer: flat-top directional antennas and Shannon link rates.
//!
//! All gains are linear (not dB). Angles are radians unless a name says
//! otherwise. Rates are bits per second.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

/// Antenna beamwidth in whole degrees.
///
/// Valid widths divide 360 evenly (the node carries 360/width switched
/// beams) and do not exceed 180 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Beamwidth(u32);

impl Beamwidth {
    pub fn from_degrees(degrees: u32) -> Result<Self> {
        if degrees == 0 || degrees > 180 {
            return Err(Error::Domain(format!(
                "beamwidth {degrees} deg out of range (1..=180)"
            )));
        }
        if 360 % degrees != 0 {
            return Err(Error::Domain(format!(
                "beamwidth {degrees} deg does not divide 360 into whole beams"
            )));
        }
        Ok(Beamwidth(degrees))
    }

    pub fn degrees(self) -> u32 {
        self.0
    }

    pub fn radians(self) -> f64 {
        f64::from(self.0) * PI / 180.0
    }

    pub fn half_angle_rad(self) -> f64 {
        self.radians() / 2.0
    }

    /// Number of switched beams needed for full azimuth coverage.
    pub fn beam_count(self) -> u32 {
        360 / self.0
    }
}

impl std::fmt::Display for Beamwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Normalizes an angle to (-pi, pi].
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// True when `offset` from boresight falls inside the main lobe.
///
/// The boundary offset of exactly half the beamwidth counts as inside.
pub fn in_mainlobe(offset_rad: f64, beamwidth: Beamwidth) -> bool {
    normalize_angle(offset_rad).abs() <= beamwidth.half_angle_rad()
}

/// Flat-top antenna gain: constant mainlobe level, constant sidelobe floor.
pub fn flat_top_gain(offset_rad: f64, beamwidth: Beamwidth, mainlobe: f64, sidelobe: f64) -> f64 {
    if in_mainlobe(offset_rad, beamwidth) {
        mainlobe
    } else {
        sidelobe
    }
}

/// Link-budget parameters shared by every link in a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    /// Linear mainlobe gain at the transmitter.
    pub tx_gain: f64,
    /// Linear mainlobe gain at the receiver.
    pub rx_gain: f64,
    /// Linear sidelobe gain (0 models an ideal flat-top pattern).
    pub sidelobe_gain: f64,
    pub noise_w_per_hz: f64,
    pub path_loss_exponent: f64,
    pub carrier_hz: f64,
    pub slot_duration_s: f64,
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("bandwidth_hz", self.bandwidth_hz),
            ("tx_power_w", self.tx_power_w),
            ("tx_gain", self.tx_gain),
            ("rx_gain", self.rx_gain),
            ("noise_w_per_hz", self.noise_w_per_hz),
            ("carrier_hz", self.carrier_hz),
            ("slot_duration_s", self.slot_duration_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sidelobe_gain.is_finite() && self.sidelobe_gain >= 0.0) {
            return Err(Error::Domain(format!(
                "sidelobe_gain must be non-negative, got {}",
                self.sidelobe_gain
            )));
        }
        if !(2.0..=6.0).contains(&self.path_loss_exponent) {
            return Err(Error::Domain(format!(
                "path_loss_exponent must lie in [2, 6], got {}",
                self.path_loss_exponent
            )));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_S / self.carrier_hz
    }

    /// Shannon rate of a boresight-aligned link of length `distance_m`
    /// under interference power `interference_w` at the receiver.
    pub fn link_rate_bps(&self, distance_m: f64, interference_w: f64) -> f64 {
        debug_assert!(distance_m > 0.0, "links require distinct positions");
        let lambda = self.wavelength_m();
        let signal = self.tx_power_w * self.tx_gain * self.rx_gain * lambda * lambda
            / (16.0 * PI * PI * distance_m.powf(self.path_loss_exponent));
        let noise = self.noise_w_per_hz * self.bandwidth_hz + interference_w;
        self.bandwidth_hz * (1.0 + signal / noise).log2()
    }

    /// TDMA slots needed to move `payload_bits` at `rate_bps`, at least 1.
    pub fn slots_required(&self, payload_bits: u64, rate_bps: f64) -> u32 {
        let slots = (payload_bits as f64 / rate_bps / self.slot_duration_s).ceil();
        if slots < 1.0 {
            1
        } else {
            slots as u32
        }
    }
}
