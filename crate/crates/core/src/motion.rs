//! On-graph pose propagation.
//!
//! A vehicle that reaches a junction is assumed to continue along any link
//! leaving it, except straight back, with equal probability. [`advance`]
//! enumerates every such continuation for a travelled distance and reports
//! the probability share of each, plus the share that ran into dead ends.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::geo::GeoPoint;
use crate::graph::{LinkId, RoadGraph};

/// Position on a directed link; `ratio` is the travelled fraction of the link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathState {
    pub link: LinkId,
    pub ratio: f64,
}

impl PathState {
    pub fn new(link: LinkId, ratio: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&ratio));
        Self { link, ratio }
    }
}

/// One junction split along a propagated path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JunctionSplit {
    /// OSM id of the junction node.
    pub node: i64,
    /// Identifies the split event; all branches created by it share it.
    pub group: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchOutcome {
    pub state: PathState,
    pub prob_factor: f64,
    /// Splits passed on the way, oldest first. Junctions with a single
    /// continuation are not splits and do not appear.
    pub lineage: Vec<JunctionSplit>,
    /// Distance actually covered along the links.
    pub travelled_m: f64,
}

/// Probability mass that reached a node with no continuation.
#[derive(Clone, Debug, PartialEq)]
pub struct LostBranch {
    pub prob_factor: f64,
    pub lineage: Vec<JunctionSplit>,
    pub dead_end: i64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Advance {
    pub outcomes: Vec<BranchOutcome>,
    pub lost: Vec<LostBranch>,
}

impl Advance {
    pub fn lost_mass(&self) -> f64 {
        self.lost.iter().map(|l| l.prob_factor).sum()
    }
}

/// Source of fresh split-group ids.
#[derive(Clone, Debug, Default)]
pub struct SplitCounter {
    next: u64,
}

impl SplitCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }
}

struct Frame {
    link: LinkId,
    ratio: f64,
    remaining: f64,
    prob: f64,
    lineage: Vec<JunctionSplit>,
    travelled: f64,
}

/// Moves `state` forward by `distance` meters along every legal continuation.
///
/// Reaching the end of a link exactly counts as crossing the junction.
///
/// # Panics
/// If `distance` is negative or not finite.
pub fn advance(graph: &RoadGraph, state: PathState, distance: f64, splits: &mut SplitCounter) -> Advance {
    assert!(
        distance.is_finite() && distance >= 0.0,
        "advance distance must be finite and non-negative, got {distance}"
    );
    let mut out = Advance::default();
    let mut stack = vec![Frame {
        link: state.link,
        ratio: state.ratio,
        remaining: distance,
        prob: 1.0,
        lineage: Vec::new(),
        travelled: 0.0,
    }];
    let mut children: Vec<LinkId> = Vec::new();
    while let Some(f) = stack.pop() {
        let link = graph.link(f.link);
        let to_end = (1.0 - f.ratio) * link.length_m;
        if f.remaining < to_end {
            let ratio = (f.ratio + f.remaining / link.length_m).min(1.0);
            out.outcomes.push(BranchOutcome {
                state: PathState { link: f.link, ratio },
                prob_factor: f.prob,
                lineage: f.lineage,
                travelled_m: f.travelled + f.remaining,
            });
            continue;
        }
        let remaining = f.remaining - to_end;
        let travelled = f.travelled + to_end;
        children.clear();
        children.extend(graph.continuations(f.link));
        match children.len() {
            0 => out.lost.push(LostBranch {
                prob_factor: f.prob,
                lineage: f.lineage,
                dead_end: link.to,
            }),
            1 => stack.push(Frame {
                link: children[0],
                ratio: 0.0,
                remaining,
                prob: f.prob,
                lineage: f.lineage,
                travelled,
            }),
            n => {
                let group = splits.next_id();
                let prob = f.prob / n as f64;
                // reversed so the stack yields children in adjacency order
                for &c in children.iter().rev() {
                    let mut lineage = f.lineage.clone();
                    lineage.push(JunctionSplit { node: link.to, group });
                    stack.push(Frame {
                        link: c,
                        ratio: 0.0,
                        remaining,
                        prob,
                        lineage,
                        travelled,
                    });
                }
            }
        }
    }
    out
}

/// Geographic position of a state, interpolated linearly between the link's
/// end points (equivalently, linearly in an equirectangular plane).
pub fn position_of(graph: &RoadGraph, state: PathState) -> GeoPoint {
    let link = graph.link(state.link);
    let a = graph.node(link.from_ix).point;
    let b = graph.node(link.to_ix).point;
    let t = state.ratio;
    GeoPoint {
        lat: a.lat * (1.0 - t) + b.lat * t,
        lon: a.lon * (1.0 - t) + b.lon * t,
    }
}

/// Moves a single pose by `delta` meters, forwards if positive and against
/// the travel direction if negative. At junctions one continuation (or
/// predecessor) is sampled uniformly. Dead ends stop the move.
pub fn displace<R: Rng + ?Sized>(graph: &RoadGraph, state: PathState, delta: f64, rng: &mut R) -> PathState {
    let mut link = state.link;
    let mut ratio = state.ratio;
    let mut left = libm::fabs(delta);
    let mut options: Vec<LinkId> = Vec::new();
    if delta >= 0.0 {
        loop {
            let len = graph.link(link).length_m;
            let to_end = (1.0 - ratio) * len;
            if left < to_end {
                return PathState {
                    link,
                    ratio: (ratio + left / len).min(1.0),
                };
            }
            left -= to_end;
            options.clear();
            options.extend(graph.continuations(link));
            if options.is_empty() {
                return PathState { link, ratio: 1.0 };
            }
            link = options[rng.random_range(0..options.len())];
            ratio = 0.0;
        }
    } else {
        loop {
            let len = graph.link(link).length_m;
            let to_start = ratio * len;
            if left <= to_start {
                return PathState {
                    link,
                    ratio: (ratio - left / len).max(0.0),
                };
            }
            left -= to_start;
            options.clear();
            options.extend(graph.predecessors(link));
            if options.is_empty() {
                return PathState { link, ratio: 0.0 };
            }
            link = options[rng.random_range(0..options.len())];
            ratio = 1.0;
        }
    }
}
