//! Ground-truth trip synthesis: shortest-time routes, a forward driver
//! model producing speed profiles, and odometer-style corruption.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::SimError;
use crate::geo::{wrap_angle, GeoPoint};
use crate::graph::{LinkId, RoadGraph};
use crate::motion::{position_of, PathState};

/// Forward driver model. Each step the driver approaches a target speed
/// with gain `gain` plus Gaussian acceleration noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriverProfile {
    /// Speed-approach gain, 1/s.
    pub gain: f64,
    pub accel_noise_std: f64,
    /// Lateral acceleration tolerated at nodes, m/s².
    pub comfort_lateral: f64,
    /// Upcoming constraints within this many seconds of travel lower the target.
    pub reaction_lookahead_s: f64,
    /// Braking deceleration used to meet constraints and the final stop, m/s².
    pub a_max: f64,
    /// Longest stretch over which a bearing change at a node is spread when
    /// computing its curvature, meters.
    pub turn_length_m: f64,
}

impl Default for DriverProfile {
    fn default() -> Self {
        Self {
            gain: 0.05,
            accel_noise_std: 0.5,
            comfort_lateral: 4.0,
            reaction_lookahead_s: 12.0,
            a_max: 3.0,
            turn_length_m: 25.0,
        }
    }
}

/// Per-trip speed corruption: scale drawn from a truncated normal, then
/// quantization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorruptionParams {
    pub scale_mean: f64,
    pub scale_std: f64,
    pub scale_min: f64,
    pub scale_max: f64,
    /// Quantization step, m/s. Zero disables quantization.
    pub quant_step: f64,
}

impl Default for CorruptionParams {
    fn default() -> Self {
        Self {
            scale_mean: 1.012,
            scale_std: 0.024,
            scale_min: 0.9,
            scale_max: 1.1,
            quant_step: 1.0 / 3.6,
        }
    }
}

impl CorruptionParams {
    pub fn draw_scale<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if !(self.scale_std > 0.0) {
            return self.scale_mean.clamp(self.scale_min, self.scale_max);
        }
        let normal = Normal::new(self.scale_mean, self.scale_std).expect("finite positive std");
        for _ in 0..1000 {
            let s = normal.sample(rng);
            if (self.scale_min..=self.scale_max).contains(&s) {
                return s;
            }
        }
        self.scale_mean.clamp(self.scale_min, self.scale_max)
    }
}

/// A synthesized trip. The vehicle drives `node_path` and parks at
/// `end_ratio` along its last link.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrip {
    pub node_path: Vec<i64>,
    pub links: Vec<LinkId>,
    pub end_ratio: f64,
    pub dt: f64,
    pub timestamps: Vec<f64>,
    pub true_speeds: Vec<f64>,
    pub measured_speeds: Vec<f64>,
    pub true_positions: Vec<GeoPoint>,
    pub length_m: f64,
    pub scale: f64,
}

impl SimTrip {
    pub fn final_link(&self) -> Option<LinkId> {
        self.links.last().copied()
    }

    pub fn end_position(&self) -> Option<GeoPoint> {
        self.true_positions.last().copied()
    }
}

#[derive(PartialEq)]
struct Queued(f64, u32);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn link_time(graph: &RoadGraph, link: LinkId) -> f64 {
    let l = graph.link(link);
    l.length_m / l.speed_limit_mps.max(1e-3)
}

/// Shortest travel times and predecessor links from `start` (node index).
pub fn shortest_times(graph: &RoadGraph, start: u32) -> (Vec<f64>, Vec<Option<LinkId>>) {
    let n = graph.nodes().len();
    let mut time = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    time[start as usize] = 0.0;
    heap.push(Queued(0.0, start));
    while let Some(Queued(t, u)) = heap.pop() {
        if t > time[u as usize] {
            continue;
        }
        for &l in graph.out_links(u) {
            let v = graph.link(l).to_ix;
            let tv = t + link_time(graph, l);
            if tv < time[v as usize] {
                time[v as usize] = tv;
                pred[v as usize] = Some(l);
                heap.push(Queued(tv, v));
            }
        }
    }
    (time, pred)
}

fn unwind(graph: &RoadGraph, pred: &[Option<LinkId>], start: u32, end: u32) -> Vec<LinkId> {
    let mut links = Vec::new();
    let mut at = end;
    while at != start {
        let l = pred[at as usize].expect("reachable node has a predecessor");
        links.push(l);
        at = graph.link(l).from_ix;
    }
    links.reverse();
    links
}

/// Shortest-time node path between two OSM node ids.
pub fn plan_route(graph: &RoadGraph, start: i64, end: i64) -> Result<Vec<i64>, SimError> {
    let s = graph.node_index(start).ok_or(SimError::UnknownNode(start))?;
    let e = graph.node_index(end).ok_or(SimError::UnknownNode(end))?;
    let (time, pred) = shortest_times(graph, s);
    if !time[e as usize].is_finite() {
        return Err(SimError::Unreachable { from: start, to: end });
    }
    let links = unwind(graph, &pred, s, e);
    let mut path = vec![start];
    path.extend(links.iter().map(|&l| graph.link(l).to));
    Ok(path)
}

/// Links traversed by a node path, fastest link where several connect the
/// same pair.
pub fn path_links(graph: &RoadGraph, node_path: &[i64]) -> Result<Vec<LinkId>, SimError> {
    let mut ix = Vec::with_capacity(node_path.len());
    for &id in node_path {
        ix.push(graph.node_index(id).ok_or(SimError::UnknownNode(id))?);
    }
    ix.windows(2)
        .map(|w| {
            graph
                .out_links(w[0])
                .iter()
                .copied()
                .filter(|&l| graph.link(l).to_ix == w[1])
                .min_by(|&a, &b| link_time(graph, a).total_cmp(&link_time(graph, b)))
                .ok_or(SimError::Unreachable {
                    from: graph.node(w[0]).id,
                    to: graph.node(w[1]).id,
                })
        })
        .collect()
}

/// Curvature at the node joining two consecutive links: bearing change in
/// radians over the mean incident link length, or over `turn_length_m` when
/// that is shorter.
pub fn junction_curvature(graph: &RoadGraph, a: LinkId, b: LinkId, turn_length_m: f64) -> f64 {
    let (la, lb) = (graph.link(a), graph.link(b));
    let turn = libm::fabs(wrap_angle(lb.bearing_deg - la.bearing_deg)).to_radians();
    turn / (0.5 * (la.length_m + lb.length_m)).min(turn_length_m)
}

/// Range of the parking position along the last link of a random trip.
pub const END_RATIO: (f64, f64) = (0.5, 0.85);

/// Remaining distance below which the vehicle completes its stop in one step.
const FINISH_TOLERANCE_M: f64 = 0.05;

struct Constraint {
    at: f64,
    speed: f64,
}

/// Pose `distance` meters along `links`, clamped to the route.
pub fn route_state(graph: &RoadGraph, links: &[LinkId], distance: f64) -> PathState {
    let mut left = distance.max(0.0);
    for (i, &l) in links.iter().enumerate() {
        let len = graph.link(l).length_m;
        if left < len || i + 1 == links.len() {
            return PathState {
                link: l,
                ratio: (left / len).clamp(0.0, 1.0),
            };
        }
        left -= len;
    }
    panic!("route_state on an empty route");
}

/// Runs the driver model along `links` until the vehicle stops after
/// `length_m` meters. Returns speeds `s_0 = 0, …, s_n = 0` whose products
/// with `dt` sum to `length_m`.
pub fn synthesize_speeds<R: Rng + ?Sized>(graph: &RoadGraph, links: &[LinkId], length_m: f64, driver: &DriverProfile, dt: f64, rng: &mut R) -> Vec<f64> {
    assert!(dt > 0.0, "sampling interval must be positive, got {dt}");
    if links.is_empty() || !(length_m > 0.0) {
        return Vec::new();
    }
    let mut constraints = Vec::new();
    let mut start = 0.0;
    let mut limits = Vec::with_capacity(links.len());
    for (i, &l) in links.iter().enumerate() {
        let link = graph.link(l);
        limits.push((start, link.speed_limit_mps));
        if i > 0 {
            let curve = junction_curvature(graph, links[i - 1], l, driver.turn_length_m);
            let cap = if curve > 0.0 {
                libm::sqrt(driver.comfort_lateral / curve)
            } else {
                f64::INFINITY
            };
            constraints.push(Constraint {
                at: start,
                speed: cap.min(link.speed_limit_mps),
            });
        }
        start += link.length_m;
    }
    constraints.push(Constraint { at: length_m, speed: 0.0 });
    let noise = Normal::new(0.0, driver.accel_noise_std.max(0.0)).expect("finite noise std");

    let mut speeds = vec![0.0];
    let mut x = 0.0;
    let mut s = 0.0f64;
    let mut current = 0;
    let max_steps = (10.0 * length_m / dt) as usize + 10_000;
    for _ in 0..max_steps {
        let left = length_m - x;
        if s * dt >= left - FINISH_TOLERANCE_M {
            let last = speeds.len() - 1;
            speeds[last] = left / dt;
            speeds.push(0.0);
            return speeds;
        }
        while current + 1 < limits.len() && limits[current + 1].0 <= x {
            current += 1;
        }
        let horizon = driver.reaction_lookahead_s * s;
        let mut target = limits[current].1;
        // the final stop only acts through the braking envelope below
        for c in constraints.iter().filter(|c| c.speed > 0.0 && c.at > x && c.at - x <= horizon) {
            target = target.min(c.speed);
        }
        let a = (driver.gain * (target - s) + noise.sample(rng)).clamp(-driver.a_max, driver.a_max);
        let mut next = (s + a * dt).max(0.0);
        // braking envelope, evaluated where this step ends
        for c in constraints.iter() {
            let room = c.at - x - s * dt;
            if room <= 0.0 {
                // the corner arc extends past the node
                if c.speed > 0.0 && -room <= driver.turn_length_m {
                    next = next.min(c.speed);
                }
                continue;
            }
            let cap = if c.speed == 0.0 {
                libm::sqrt(2.0 * driver.a_max * room).min(room / (2.0 * dt))
            } else {
                libm::sqrt(c.speed * c.speed + 2.0 * driver.a_max * room)
            };
            next = next.min(cap);
        }
        x += s * dt;
        s = next;
        speeds.push(s);
    }
    panic!("driver model failed to finish a {length_m} m route");
}

/// `round(scale·s / quant_step)·quant_step`, or plain scaling when the step
/// is zero.
pub fn corrupt(true_speeds: &[f64], scale: f64, quant_step: f64) -> Vec<f64> {
    true_speeds
        .iter()
        .map(|&s| {
            let v = scale * s;
            if quant_step > 0.0 {
                libm::round(v / quant_step) * quant_step
            } else {
                v
            }
        })
        .collect()
}

/// Builds a complete trip along `node_path`, parking at `end_ratio` of the
/// last link.
pub fn build_trip<R: Rng + ?Sized>(
    graph: &RoadGraph,
    node_path: &[i64],
    end_ratio: f64,
    driver: &DriverProfile,
    corruption: &CorruptionParams,
    dt: f64,
    rng: &mut R,
) -> Result<SimTrip, SimError> {
    if !(dt > 0.0) {
        return Err(SimError::InvalidInput("sampling interval must be positive"));
    }
    if !(0.0..=1.0).contains(&end_ratio) {
        return Err(SimError::InvalidInput("end ratio must lie in [0, 1]"));
    }
    let links = path_links(graph, node_path)?;
    let length_m = match links.split_last() {
        Some((&last, rest)) => rest.iter().map(|&l| graph.link(l).length_m).sum::<f64>() + end_ratio * graph.link(last).length_m,
        None => 0.0,
    };
    let true_speeds = synthesize_speeds(graph, &links, length_m, driver, dt, rng);
    let scale = corruption.draw_scale(rng);
    let measured_speeds = corrupt(&true_speeds, scale, corruption.quant_step);
    let mut true_positions = Vec::with_capacity(true_speeds.len());
    let mut timestamps = Vec::with_capacity(true_speeds.len());
    let mut x = 0.0;
    for (k, &s) in true_speeds.iter().enumerate() {
        timestamps.push(k as f64 * dt);
        true_positions.push(position_of(graph, route_state(graph, &links, x)));
        x += s * dt;
    }
    Ok(SimTrip {
        node_path: node_path.to_vec(),
        links,
        end_ratio,
        dt,
        timestamps,
        true_speeds,
        measured_speeds,
        true_positions,
        length_m,
        scale,
    })
}

/// Route-length window and retry budget for random trips.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripRequest {
    pub min_length_m: f64,
    pub max_length_m: f64,
    pub attempts: usize,
}

/// Draws a random trip whose length falls in the requested window. The
/// route is the shortest-time path between random nodes, and the vehicle
/// parks within `END_RATIO` along the last link.
pub fn random_trip<R: Rng + ?Sized>(
    graph: &RoadGraph,
    request: &TripRequest,
    driver: &DriverProfile,
    corruption: &CorruptionParams,
    dt: f64,
    rng: &mut R,
) -> Result<SimTrip, SimError> {
    let n = graph.nodes().len();
    if n == 0 {
        return Err(SimError::InvalidInput("graph has no nodes"));
    }
    for _ in 0..request.attempts {
        let start = rng.random_range(0..n) as u32;
        let (time, pred) = shortest_times(graph, start);
        let mut distance = vec![f64::NAN; n];
        let mut order: Vec<u32> = (0..n as u32).filter(|&v| time[v as usize].is_finite()).collect();
        order.sort_by(|&a, &b| time[a as usize].total_cmp(&time[b as usize]).then(a.cmp(&b)));
        let mut candidates = Vec::new();
        for v in order {
            distance[v as usize] = match pred[v as usize] {
                None => 0.0,
                Some(l) => distance[graph.link(l).from_ix as usize] + graph.link(l).length_m,
            };
            if let Some(l) = pred[v as usize] {
                let len = graph.link(l).length_m;
                let d = distance[v as usize];
                if d - (1.0 - END_RATIO.1) * len >= request.min_length_m && d - (1.0 - END_RATIO.0) * len <= request.max_length_m {
                    candidates.push(v);
                }
            }
        }
        if candidates.is_empty() {
            continue;
        }
        let end = candidates[rng.random_range(0..candidates.len())];
        let last = pred[end as usize].expect("candidate has a predecessor");
        let len = graph.link(last).length_m;
        let d = distance[end as usize];
        let lo = ((request.min_length_m - (d - len)) / len).max(END_RATIO.0);
        let hi = ((request.max_length_m - (d - len)) / len).min(END_RATIO.1);
        let end_ratio = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let links = unwind(graph, &pred, start, end);
        let mut path = vec![graph.node(start).id];
        path.extend(links.iter().map(|&l| graph.link(l).to));
        return build_trip(graph, &path, end_ratio, driver, corruption, dt, rng);
    }
    Err(SimError::NoSuitableRoute {
        min_m: request.min_length_m,
        max_m: request.max_length_m,
        attempts: request.attempts,
    })
}
