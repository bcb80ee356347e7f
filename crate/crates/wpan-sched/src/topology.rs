//! Node placement, relay path selection, and the geometric conflict rule
//! between directional links.

use crate::error::{Error, Result};
use crate::radio::{in_mainlobe, Beamwidth, RadioParams};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }

    /// Azimuth of `other` as seen from `self`, in (-pi, pi].
    pub fn bearing_to(self, other: Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }
}

/// A directed transmitter-to-receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    pub tx: usize,
    pub rx: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub width_m: f64,
    pub height_m: f64,
    pub nodes: Vec<Point>,
}

impl Topology {
    /// Places `count` nodes i.i.d. uniformly in the room.
    pub fn random(count: usize, width_m: f64, height_m: f64, rng: &mut impl Rng) -> Self {
        let nodes = (0..count)
            .map(|_| Point {
                x: rng.gen_range(0.0..width_m),
                y: rng.gen_range(0.0..height_m),
            })
            .collect();
        Topology {
            width_m,
            height_m,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn distance(&self, u: usize, v: usize) -> f64 {
        self.nodes[u].distance(self.nodes[v])
    }

    pub fn diagonal_m(&self) -> f64 {
        (self.width_m * self.width_m + self.height_m * self.height_m).sqrt()
    }

    /// Cheapest path from `src` to `dst` over the complete graph under
    /// `weight(u, v)`, endpoints included.
    ///
    /// Ties are broken toward the lower node id, so results are stable
    /// across runs.
    pub fn shortest_path(
        &self,
        src: usize,
        dst: usize,
        weight: impl Fn(usize, usize) -> f64,
    ) -> Vec<usize> {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[src] = 0.0;
        for _ in 0..n {
            let mut u = usize::MAX;
            for v in 0..n {
                if !done[v] && (u == usize::MAX || dist[v] < dist[u]) {
                    u = v;
                }
            }
            if u == usize::MAX || dist[u].is_infinite() {
                break;
            }
            if u == dst {
                break;
            }
            done[u] = true;
            for v in 0..n {
                if v == u || done[v] {
                    continue;
                }
                let cand = dist[u] + weight(u, v);
                if cand < dist[v] {
                    dist[v] = cand;
                    pred[v] = u;
                }
            }
        }
        let mut path = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = pred[cur];
            debug_assert_ne!(cur, usize::MAX, "complete graph is always connected");
            path.push(cur);
        }
        path.reverse();
        path
    }
}

/// Relay link cost: squared distance normalized by the room diagonal plus
/// the receiver's normalized slot workload.
pub fn relay_weight(distance_m: f64, diagonal_m: f64, rx_load: u64, load_scale: u64) -> f64 {
    let d = distance_m / diagonal_m;
    d * d + rx_load as f64 / load_scale as f64
}

/// A topology bound to radio parameters and a beamwidth.
///
/// Rates assume boresight-aligned mainlobes on both ends; the beamwidth
/// only matters for the conflict test between links.
#[derive(Debug, Clone)]
pub struct RadioContext {
    pub params: RadioParams,
    pub beamwidth: Beamwidth,
    pub topology: Topology,
}

impl RadioContext {
    pub fn new(params: RadioParams, beamwidth: Beamwidth, topology: Topology) -> Self {
        RadioContext {
            params,
            beamwidth,
            topology,
        }
    }

    pub fn rate_bps(&self, tx: usize, rx: usize) -> f64 {
        self.params
            .link_rate_bps(self.topology.distance(tx, rx), 0.0)
    }

    pub fn slots_for(&self, payload_bits: u64, tx: usize, rx: usize) -> u32 {
        self.params
            .slots_required(payload_bits, self.rate_bps(tx, rx))
    }

    /// True when the beam `from -> toward` covers `target`.
    fn covers(&self, from: usize, toward: usize, target: usize) -> bool {
        let nodes = &self.topology.nodes;
        let boresight = nodes[from].bearing_to(nodes[toward]);
        let angle = nodes[from].bearing_to(nodes[target]);
        in_mainlobe(angle - boresight, self.beamwidth)
    }

    /// True when transmitter beam of `i` reaches the receiver of `v` while
    /// that receiver's beam is open toward `i`'s transmitter.
    fn interferes(&self, i: Link, v: Link) -> bool {
        self.covers(i.tx, i.rx, v.rx) && self.covers(v.rx, v.tx, i.tx)
    }

    /// Binary conflict test: shared endpoint or mutual mainlobe exposure
    /// in either direction. Conflicting links must never overlap in time.
    pub fn conflicts(&self, a: Link, b: Link) -> bool {
        if a.tx == b.tx || a.tx == b.rx || a.rx == b.tx || a.rx == b.rx {
            return true;
        }
        self.interferes(a, b) || self.interferes(b, a)
    }
}

/// Renders nodes as `id x y` lines with a room-size header comment.
pub fn format_topology(topology: &Topology) -> String {
    let mut out = String::new();
    out.push_str(&format!("# room {} {}\n", topology.width_m, topology.height_m));
    for (i, p) in topology.nodes.iter().enumerate() {
        out.push_str(&format!("{} {} {}\n", i, p.x, p.y));
    }
    out
}

/// Parses the `format_topology` text form.
pub fn parse_topology(text: &str) -> Result<Topology> {
    let mut width = None;
    let mut entries: Vec<(usize, Point)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.first() == Some(&"room") && fields.len() == 3 {
                let w: f64 = fields[1]
                    .parse()
                    .map_err(|_| Error::Domain(format!("line {}: bad room width", lineno + 1)))?;
                let h: f64 = fields[2]
                    .parse()
                    .map_err(|_| Error::Domain(format!("line {}: bad room height", lineno + 1)))?;
                width = Some((w, h));
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Domain(format!(
                "line {}: expected `id x y`, got `{line}`",
                lineno + 1
            )));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::Domain(format!("line {}: bad node id", lineno + 1)))?;
        let x: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Domain(format!("line {}: bad x coordinate", lineno + 1)))?;
        let y: f64 = fields[2]
            .parse()
            .map_err(|_| Error::Domain(format!("line {}: bad y coordinate", lineno + 1)))?;
        entries.push((id, Point { x, y }));
    }
    entries.sort_by_key(|(id, _)| *id);
    for (expect, (id, _)) in entries.iter().enumerate() {
        if *id != expect {
            return Err(Error::Domain(format!(
                "node ids must be 0..n without gaps, found {id}"
            )));
        }
    }
    let nodes: Vec<Point> = entries.into_iter().map(|(_, p)| p).collect();
    let (width_m, height_m) = width.unwrap_or_else(|| {
        let w = nodes.iter().map(|p| p.x).fold(0.0, f64::max);
        let h = nodes.iter().map(|p| p.y).fold(0.0, f64::max);
        (w, h)
    });
    Ok(Topology {
        width_m,
        height_m,
        nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, DOMAIN_TOPOLOGY};
    use rand::Rng;

    fn reference_params() -> RadioParams {
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

    fn fixture(points: &[(f64, f64)], beam_deg: u32) -> RadioContext {
        let topology = Topology {
            width_m: 64.0,
            height_m: 64.0,
            nodes: points.iter().map(|&(x, y)| Point { x, y }).collect(),
        };
        RadioContext::new(
            reference_params(),
            Beamwidth::from_degrees(beam_deg).unwrap(),
            topology,
        )
    }

    #[test]
    fn random_topology_is_deterministic_and_in_bounds() {
        let mut r1 = stream_rng(5, DOMAIN_TOPOLOGY, 0);
        let mut r2 = stream_rng(5, DOMAIN_TOPOLOGY, 0);
        let a = Topology::random(30, 16.0, 16.0, &mut r1);
        let b = Topology::random(30, 16.0, 16.0, &mut r2);
        assert_eq!(a, b);
        for p in &a.nodes {
            assert!((0.0..16.0).contains(&p.x));
            assert!((0.0..16.0).contains(&p.y));
        }
    }

    #[test]
    fn distance_and_diagonal() {
        let t = Topology {
            width_m: 16.0,
            height_m: 16.0,
            nodes: vec![Point { x: 0.0, y: 0.0 }, Point { x: 3.0, y: 4.0 }],
        };
        assert_eq!(t.distance(0, 1), 5.0);
        let d = t.diagonal_m();
        assert!((d - 16.0 * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn shortest_path_matches_exhaustive_enumeration() {
        let mut rng = stream_rng(11, DOMAIN_TOPOLOGY, 3);
        let n = 6;
        let mut w = vec![vec![0.0f64; n]; n];
        for (u, row) in w.iter_mut().enumerate() {
            for (v, cell) in row.iter_mut().enumerate() {
                if u != v {
                    *cell = rng.gen_range(0.1..10.0);
                }
            }
        }
        let t = Topology {
            width_m: 1.0,
            height_m: 1.0,
            nodes: (0..n)
                .map(|i| Point {
                    x: i as f64,
                    y: 0.0,
                })
                .collect(),
        };
        // All simple paths from 0 to n-1 via DFS.
        fn explore(
            w: &[Vec<f64>],
            cur: usize,
            dst: usize,
            seen: &mut Vec<bool>,
            cost: f64,
            best: &mut f64,
        ) {
            if cur == dst {
                *best = best.min(cost);
                return;
            }
            for v in 0..w.len() {
                if !seen[v] {
                    seen[v] = true;
                    explore(w, v, dst, seen, cost + w[cur][v], best);
                    seen[v] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut seen = vec![false; n];
        seen[0] = true;
        explore(&w, 0, n - 1, &mut seen, 0.0, &mut best);

        let path = t.shortest_path(0, n - 1, |u, v| w[u][v]);
        assert_eq!(path.first(), Some(&0));
        assert_eq!(path.last(), Some(&(n - 1)));
        let cost: f64 = path.windows(2).map(|e| w[e[0]][e[1]]).sum();
        assert!((cost - best).abs() < 1e-9, "dijkstra {cost} vs brute {best}");
    }

    #[test]
    fn relay_weight_prefers_close_idle_receivers() {
        let near_idle = relay_weight(2.0, 20.0, 0, 1);
        let far_idle = relay_weight(10.0, 20.0, 0, 1);
        assert!(near_idle < far_idle);
        let near_busy = relay_weight(2.0, 20.0, 100, 100);
        assert!(near_busy > near_idle);
        assert!((relay_weight(10.0, 20.0, 50, 100) - (0.25 + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn shared_endpoints_always_conflict() {
        let ctx = fixture(&[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)], 20);
        let ab = Link { tx: 0, rx: 1 };
        let bc = Link { tx: 1, rx: 2 };
        let ca = Link { tx: 2, rx: 0 };
        assert!(ctx.conflicts(ab, bc));
        assert!(ctx.conflicts(ab, ca));
        assert!(ctx.conflicts(bc, ca));
    }

    #[test]
    fn beam_interference_depends_on_beamwidth() {
        // Transmitter C aims 16.699 deg off the line toward B; at 45 deg
        // beamwidth (22.5 deg half angle) B's inbound beam sees C, at
        // 20 deg (10 deg half angle) it does not.
        let pts = [(0.0, 0.0), (10.0, 0.0), (-5.0, 0.0), (5.0, 3.0)];
        let ab = Link { tx: 0, rx: 1 };
        let cd = Link { tx: 2, rx: 3 };
        let wide = fixture(&pts, 45);
        assert!(wide.conflicts(ab, cd));
        let narrow = fixture(&pts, 20);
        assert!(!narrow.conflicts(ab, cd));
    }

    #[test]
    fn parallel_links_do_not_conflict() {
        // Two east-pointing links far apart laterally.
        let pts = [(0.0, 0.0), (5.0, 0.0), (0.0, 40.0), (5.0, 40.0)];
        let ctx = fixture(&pts, 90);
        assert!(!ctx.conflicts(Link { tx: 0, rx: 1 }, Link { tx: 2, rx: 3 }));
    }

    #[test]
    fn topology_text_roundtrips() {
        let mut rng = stream_rng(9, DOMAIN_TOPOLOGY, 0);
        let t = Topology::random(12, 16.0, 16.0, &mut rng);
        let text = format_topology(&t);
        let back = parse_topology(&text).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn parse_topology_rejects_gaps_and_garbage() {
        assert!(parse_topology("0 1.0 2.0\n2 3.0 4.0\n").is_err());
        assert!(parse_topology("0 1.0\n").is_err());
        assert!(parse_topology("x 1.0 2.0\n").is_err());
    }
}
