#![allow(dead_code)]

use mapdr_core::geo::offset;
use mapdr_core::graph::{GraphBuilder, Oneway, WaySpec};
use mapdr_core::{GeoPoint, RoadGraph};

pub const ORIGIN: GeoPoint = GeoPoint { lat: 41.15, lon: -8.61 };

/// Node `(id, east_m, north_m)` around [`ORIGIN`].
pub type Node = (i64, f64, f64);

pub struct Way<'a> {
    pub refs: &'a [i64],
    pub limit: f64,
    pub oneway: Oneway,
}

pub fn two_way(refs: &[i64], limit: f64) -> Way<'_> {
    Way {
        refs,
        limit,
        oneway: Oneway::No,
    }
}

pub fn build(nodes: &[Node], ways: &[Way]) -> RoadGraph {
    let mut b = GraphBuilder::new();
    for &(id, e, n) in nodes {
        b.add_node(id, offset(ORIGIN, e, n)).unwrap();
    }
    for (i, w) in ways.iter().enumerate() {
        b.add_way(WaySpec {
            id: i as i64 + 1,
            refs: w.refs.to_vec(),
            speed_limit_mps: w.limit,
            oneway: w.oneway,
        });
    }
    b.build().unwrap()
}

pub fn at(e: f64, n: f64) -> GeoPoint {
    offset(ORIGIN, e, n)
}
