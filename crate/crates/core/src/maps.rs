//! Synthetic road maps used by the end-to-end checks.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GraphError;
use crate::geo::{offset, GeoPoint};
use crate::graph::{GraphBuilder, Oneway, RoadGraph, WaySpec};

/// Anchor of the synthetic maps (Porto).
pub const ORIGIN: GeoPoint = GeoPoint { lat: 41.15, lon: -8.61 };

/// Nodes and ways of a generated map, before graph construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticMap {
    pub nodes: Vec<(i64, GeoPoint)>,
    pub ways: Vec<WaySpec>,
}

impl SyntheticMap {
    pub fn build(&self) -> Result<RoadGraph, GraphError> {
        let mut b = GraphBuilder::new();
        for &(id, p) in &self.nodes {
            b.add_node(id, p)?;
        }
        for w in &self.ways {
            b.add_way(w.clone());
        }
        b.build()
    }
}

const LIMITS_KMH: [f64; 3] = [30.0, 50.0, 90.0];

/// Brick-wall street layout of `rows × cols` junctions on a `block_m`
/// lattice. Every junction joins three streets with pairwise different
/// speed limits from {30, 50, 90} km/h, junctions are jittered by up to
/// `jitter_m`, and about half of the streets carry a bend.
pub fn identifiable(rows: usize, cols: usize, block_m: f64, jitter_m: f64, seed: u64) -> SyntheticMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |i: usize, j: usize| (i * cols + j) as i64 + 1;
    let mut nodes = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let e = j as f64 * block_m + rng.random_range(-jitter_m..=jitter_m);
            let n = i as f64 * block_m + rng.random_range(-jitter_m..=jitter_m);
            nodes.push((id(i, j), offset(ORIGIN, e, n)));
        }
    }

    let mut edges: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let here = i * cols + j;
            if j + 1 < cols {
                edges.push((here, here + 1, j % 2));
            }
            if i + 1 < rows && (i + j) % 2 == 0 {
                edges.push((here, here + cols, 2));
            }
        }
    }
    let mut incident = vec![Vec::new(); rows * cols];
    for (e, &(a, b, _)) in edges.iter().enumerate() {
        incident[a].push(e);
        incident[b].push(e);
    }
    // random Kempe-chain swaps keep the colouring proper
    for _ in 0..4 * edges.len() {
        let start = rng.random_range(0..edges.len());
        let a = edges[start].2;
        let b = (a + rng.random_range(1..3)) % 3;
        let mut chain = vec![start];
        let mut seen = vec![false; edges.len()];
        seen[start] = true;
        let mut at = 0;
        while at < chain.len() {
            let (u, v, c) = edges[chain[at]];
            let other = if c == a { b } else { a };
            for node in [u, v] {
                if let Some(&f) = incident[node].iter().find(|&&f| edges[f].2 == other) {
                    if !seen[f] {
                        seen[f] = true;
                        chain.push(f);
                    }
                }
            }
            at += 1;
        }
        for e in chain {
            edges[e].2 = if edges[e].2 == a { b } else { a };
        }
    }

    let mut next_id = (rows * cols) as i64 + 1;
    let mut ways = Vec::new();
    for (k, &(a, b, c)) in edges.iter().enumerate() {
        let mut refs = vec![nodes[a].0];
        if rng.random_bool(0.5) {
            let (pa, pb) = (nodes[a].1, nodes[b].1);
            let mid = GeoPoint {
                lat: 0.5 * (pa.lat + pb.lat),
                lon: 0.5 * (pa.lon + pb.lon),
            };
            let side = rng.random_range(0.15..0.3) * block_m * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            // perpendicular to the street direction
            let horizontal = b == a + 1;
            let p = if horizontal { offset(mid, 0.0, side) } else { offset(mid, side, 0.0) };
            nodes.push((next_id, p));
            refs.push(next_id);
            next_id += 1;
        }
        refs.push(nodes[b].0);
        ways.push(WaySpec {
            id: k as i64 + 1,
            refs,
            speed_limit_mps: LIMITS_KMH[c] / 3.6,
            oneway: Oneway::No,
        });
    }
    SyntheticMap { nodes, ways }
}

/// The identifiable map used by the end-to-end checks: 8 × 10 junctions,
/// 1.2 km blocks, 320 links.
pub fn map_a() -> SyntheticMap {
    identifiable(8, 10, 1200.0, 60.0, 7)
}

/// Square grid of `n × n` junctions with straight two-way streets sharing
/// one speed limit.
pub fn uniform_grid(n: usize, block_m: f64, limit_mps: f64) -> SyntheticMap {
    let id = |i: usize, j: usize| (i * n + j) as i64 + 1;
    let mut nodes = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            nodes.push((id(i, j), offset(ORIGIN, j as f64 * block_m, i as f64 * block_m)));
        }
    }
    let mut ways = Vec::new();
    for i in 0..n {
        ways.push(WaySpec {
            id: ways.len() as i64 + 1,
            refs: (0..n).map(|j| id(i, j)).collect(),
            speed_limit_mps: limit_mps,
            oneway: Oneway::No,
        });
    }
    for j in 0..n {
        ways.push(WaySpec {
            id: ways.len() as i64 + 1,
            refs: (0..n).map(|i| id(i, j)).collect(),
            speed_limit_mps: limit_mps,
            oneway: Oneway::No,
        });
    }
    SyntheticMap { nodes, ways }
}

/// The ambiguous map used by the end-to-end checks: 41 × 41 junctions,
/// 100 m blocks, 50 km/h everywhere.
pub fn map_b() -> SyntheticMap {
    uniform_grid(41, 100.0, 50.0 / 3.6)
}
