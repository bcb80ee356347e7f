//! Simulator for TDMA scheduling in 60 GHz indoor wireless networks with
//! directional antennas.
//!
//! Narrow beams let non-interfering transmissions share the same time
//! slots. The crate models the physical layer ([`radio`]), random node
//! layouts and the pairwise conflict rule ([`topology`]), three group
//! scheduling policies with aging ([`scheduler`]), a water-filling
//! throughput bound ([`waterfill`]), an exhaustive optimum for small
//! instances ([`oracle`]), and a deterministic scenario runner with CSV
//! emitters ([`sim`]).

pub mod config;
pub mod error;
pub mod metrics;
pub mod oracle;
pub mod radio;
pub mod rng;
pub mod scheduler;
pub mod sim;
pub mod topology;
pub mod waterfill;

pub use error::{Error, Result};
