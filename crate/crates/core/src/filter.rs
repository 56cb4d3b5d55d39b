//! Speed-only map-aided particle filter.
//!
//! Each call to [`FilterRun::step`] consumes one speed pair and runs, in
//! order: time update with junction splitting, Kalman parameter update,
//! measurement update, sibling weight redistribution, elimination,
//! periodic systematic resampling and merging.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::FilterError;
use crate::geo::{geodesic_distance, wrap_angle, GeoPoint, PlanarPoint};
use crate::graph::{LinkId, RoadGraph};
use crate::kf::{project_target_speed, speed_gain, speed_predict_var, KfNoiseParams, YawCov, YawMean};
use crate::likelihood::{accel, lateral_density, y2_density, LateralParams, TargetSpeedParams};
use crate::motion::{advance, displace, position_of, PathState, SplitCounter};

/// Every tunable of the filter. Defaults reproduce the reference
/// configuration (σ_ω = 5, σ_θ = 15, σ_s1 = 0.5, σ_s2 = 10, g1 = 0.55 g,
/// g2 = 0.65 g, K = 12, c = 0.05, σ = 1.5, 100 particles, 1/200, 20 m,
/// ±100 m).
#[derive(Clone, Debug, PartialEq)]
pub struct FilterParams {
    pub noise: KfNoiseParams,
    pub lateral: LateralParams,
    pub tsp: TargetSpeedParams,
    /// Population size that triggers resampling (below) and weight-floor
    /// elimination (above).
    pub particle_threshold: usize,
    /// Fraction of the uniform share below which a particle is eliminated
    /// when the population exceeds `particle_threshold`.
    pub weight_floor: f64,
    /// Merge distance and initial particle spacing, meters.
    pub merge_dist: f64,
    /// Resampled particles are displaced by U(−h, h) meters.
    pub displacement_halfwidth: f64,
    /// Resampling may only happen at steps `k` with `k % resample_period == 0`.
    pub resample_period: usize,
    /// Cadence, in steps, of the population-size check for resampling.
    pub check_interval: usize,
    /// Merge only when yaw angles agree within this many degrees...
    pub merge_theta_tol: f64,
    /// ...yaw rates within this many deg/s...
    pub merge_omega_tol: f64,
    /// ...and target speeds within this many m/s.
    pub merge_sbar_tol: f64,
    pub resampling: bool,
    pub merging: bool,
    pub rng_seed: u64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            noise: KfNoiseParams::default(),
            lateral: LateralParams::default(),
            tsp: TargetSpeedParams::default(),
            particle_threshold: 100,
            weight_floor: 1.0 / 200.0,
            merge_dist: 20.0,
            displacement_halfwidth: 100.0,
            resample_period: 100,
            check_interval: 100,
            merge_theta_tol: 1.0,
            merge_omega_tol: 0.5,
            merge_sbar_tol: 0.5,
            resampling: true,
            merging: true,
            rng_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub state: PathState,
    pub weight: f64,
    pub yaw: YawMean,
    /// Target-speed estimate s̄, m/s.
    pub target: f64,
    /// Split event this particle most recently emerged from.
    pub group: Option<u64>,
    /// Distance moved by the time updates so far, meters.
    pub odometer: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct StepDiagnostics {
    pub step: usize,
    pub population: usize,
    pub ess: f64,
    /// Prior mass that entered dead ends during the time update.
    pub lost_mass: f64,
    pub occupied_links: usize,
    pub resampled: bool,
    pub diverged: bool,
}

/// Bookkeeping row for [`redistribute_siblings`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiblingEntry {
    pub group: Option<u64>,
    pub weight: f64,
    pub alive: bool,
}

/// Moves the weight of every dead entry to the live entries of its sibling
/// group, split equally. Dead entries end with weight 0. Returns the mass
/// that had no live sibling to go to.
pub fn redistribute_siblings(entries: &mut [SiblingEntry]) -> f64 {
    let mut groups: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for e in entries.iter() {
        if let Some(g) = e.group {
            let slot = groups.entry(g).or_insert((0.0, 0));
            if e.alive {
                slot.1 += 1;
            } else {
                slot.0 += e.weight;
            }
        }
    }
    let mut dropped = 0.0;
    for e in entries.iter_mut().filter(|e| !e.alive) {
        match e.group.and_then(|g| groups.get(&g)) {
            Some(&(_, live)) if live > 0 => {}
            _ => dropped += e.weight,
        }
        e.weight = 0.0;
    }
    for e in entries.iter_mut().filter(|e| e.alive) {
        if let Some(&(dead, live)) = e.group.and_then(|g| groups.get(&g)) {
            if dead > 0.0 {
                e.weight += dead / live as f64;
            }
        }
    }
    dropped
}

/// Removes zero-weight particles and, when the population exceeds
/// `particle_threshold`, particles below `weight_floor` times the uniform
/// share. Renormalizes the survivors.
pub fn eliminate(particles: &mut Vec<Particle>, params: &FilterParams) -> Result<(), FilterError> {
    particles.retain(|p| p.weight > 0.0);
    normalize(particles)?;
    if particles.len() > params.particle_threshold {
        let cut = params.weight_floor / particles.len() as f64;
        particles.retain(|p| p.weight >= cut);
        normalize(particles)?;
    }
    Ok(())
}

fn normalize(particles: &mut [Particle]) -> Result<(), FilterError> {
    let total: f64 = particles.iter().map(|p| p.weight).sum();
    if particles.is_empty() || !(total > 0.0) || !total.is_finite() {
        return Err(FilterError::Diverged);
    }
    for p in particles.iter_mut() {
        p.weight /= total;
    }
    Ok(())
}

/// Offspring counts of the systematic rule for weights summing to 1 and a
/// single offset `u ∈ [0, 1)`.
pub fn systematic_counts(weights: &[f64], target: usize, u: f64) -> Vec<usize> {
    let mut counts = alloc::vec![0usize; weights.len()];
    if weights.is_empty() {
        return counts;
    }
    let mut cumulative = weights[0];
    let mut i = 0;
    for m in 0..target {
        let point = (u + m as f64) / target as f64;
        while point >= cumulative && i + 1 < weights.len() {
            i += 1;
            cumulative += weights[i];
        }
        counts[i] += 1;
    }
    counts
}

/// Systematic resampling to `target` particles. Every offspring is displaced
/// by an independent U(−h, h) distance along the graph and all weights are
/// reset to `1/target`.
pub fn systematic_resample<R: Rng + ?Sized>(graph: &RoadGraph, particles: &[Particle], target: usize, halfwidth: f64, rng: &mut R) -> Vec<Particle> {
    let weights: Vec<f64> = particles.iter().map(|p| p.weight).collect();
    let u: f64 = rng.random();
    let counts = systematic_counts(&weights, target, u);
    let mut out = Vec::with_capacity(target);
    for (p, &n) in particles.iter().zip(&counts) {
        for _ in 0..n {
            let delta = if halfwidth > 0.0 { rng.random_range(-halfwidth..halfwidth) } else { 0.0 };
            out.push(Particle {
                state: displace(graph, p.state, delta, rng),
                weight: 1.0 / target as f64,
                group: None,
                ..p.clone()
            });
        }
    }
    out
}

/// Collapses particles on the same link that are within `merge_dist` of each
/// other and carry matching Kalman estimates. Weights add up; position and
/// estimates become weight-weighted means.
pub fn merge_particles(graph: &RoadGraph, particles: Vec<Particle>, params: &FilterParams) -> Vec<Particle> {
    struct Cluster {
        anchor: usize,
        weight: f64,
        ratio: f64,
        theta_offset: f64,
        omega: f64,
        target: f64,
        odometer: f64,
        heaviest: (f64, Option<u64>),
    }
    let mut order: Vec<usize> = (0..particles.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&particles[a], &particles[b]);
        pa.state
            .link
            .cmp(&pb.state.link)
            .then(pa.state.ratio.total_cmp(&pb.state.ratio))
            .then(a.cmp(&b))
    });
    let mut out = Vec::with_capacity(particles.len());
    let mut start = 0;
    while start < order.len() {
        let link = particles[order[start]].state.link;
        let mut end = start;
        while end < order.len() && particles[order[end]].state.link == link {
            end += 1;
        }
        let len = graph.link(link).length_m;
        let mut clusters: Vec<Cluster> = Vec::new();
        for &ix in &order[start..end] {
            let p = &particles[ix];
            let hit = clusters.iter_mut().find(|c| {
                let a = &particles[c.anchor];
                (p.state.ratio - a.state.ratio) * len < params.merge_dist
                    && libm::fabs(wrap_angle(p.yaw.theta - a.yaw.theta)) <= params.merge_theta_tol
                    && libm::fabs(p.yaw.omega - a.yaw.omega) <= params.merge_omega_tol
                    && libm::fabs(p.target - a.target) <= params.merge_sbar_tol
            });
            match hit {
                Some(c) => {
                    let anchor_theta = particles[c.anchor].yaw.theta;
                    c.weight += p.weight;
                    c.ratio += p.weight * p.state.ratio;
                    c.theta_offset += p.weight * wrap_angle(p.yaw.theta - anchor_theta);
                    c.omega += p.weight * p.yaw.omega;
                    c.target += p.weight * p.target;
                    c.odometer += p.weight * p.odometer;
                    if p.weight > c.heaviest.0 {
                        c.heaviest = (p.weight, p.group);
                    }
                }
                None => clusters.push(Cluster {
                    anchor: ix,
                    weight: p.weight,
                    ratio: p.weight * p.state.ratio,
                    theta_offset: 0.0,
                    omega: p.weight * p.yaw.omega,
                    target: p.weight * p.target,
                    odometer: p.weight * p.odometer,
                    heaviest: (p.weight, p.group),
                }),
            }
        }
        for c in clusters {
            let a = &particles[c.anchor];
            if c.weight <= 0.0 {
                out.push(a.clone());
                continue;
            }
            let w = c.weight;
            out.push(Particle {
                state: PathState {
                    link,
                    ratio: (c.ratio / w).clamp(0.0, 1.0),
                },
                weight: w,
                yaw: YawMean {
                    theta: wrap_angle(a.yaw.theta + c.theta_offset / w),
                    omega: c.omega / w,
                },
                target: c.target / w,
                group: c.heaviest.1,
                odometer: c.odometer / w,
            });
        }
        start = end;
    }
    out
}

/// Point estimators over the particle cloud.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimatorKind {
    /// Position of the heaviest particle.
    Map,
    /// Weighted mean position.
    Mmse,
}

/// Weighted-mean and max-weight estimates. Ties in weight go to the lowest
/// particle ordinal.
pub fn estimate(graph: &RoadGraph, particles: &[Particle], kind: EstimatorKind) -> Result<GeoPoint, FilterError> {
    if particles.is_empty() {
        return Err(FilterError::Diverged);
    }
    match kind {
        EstimatorKind::Map => {
            let mut best = 0;
            for (i, p) in particles.iter().enumerate() {
                if p.weight > particles[best].weight {
                    best = i;
                }
            }
            Ok(position_of(graph, particles[best].state))
        }
        EstimatorKind::Mmse => {
            let proj = graph.projection();
            let mut acc = PlanarPoint::default();
            let mut total = 0.0;
            for p in particles {
                let q = proj.project(position_of(graph, p.state));
                acc.x += p.weight * q.x;
                acc.y += p.weight * q.y;
                total += p.weight;
            }
            if !(total > 0.0) {
                return Err(FilterError::Diverged);
            }
            Ok(proj.unproject(PlanarPoint {
                x: acc.x / total,
                y: acc.y / total,
            }))
        }
    }
}

/// Position of the particle closest to `truth`, ignoring weights.
pub fn best_particle(graph: &RoadGraph, particles: &[Particle], truth: GeoPoint) -> Result<GeoPoint, FilterError> {
    particles
        .iter()
        .map(|p| position_of(graph, p.state))
        .min_by(|a, b| geodesic_distance(*a, truth).total_cmp(&geodesic_distance(*b, truth)))
        .ok_or(FilterError::Diverged)
}

/// Index of the heaviest particle (lowest ordinal on ties).
pub fn map_index(particles: &[Particle]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, p) in particles.iter().enumerate() {
        if best.is_none_or(|b| p.weight > particles[b].weight) {
            best = Some(i);
        }
    }
    best
}

struct Candidate {
    particle: Particle,
    /// Target speed carried into this step, used to score the lagged
    /// target-speed measurement.
    prior_target: f64,
    likelihood: f64,
    alive: bool,
}

/// One filter instance over one trip.
#[derive(Clone, Debug)]
pub struct FilterRun<'g> {
    graph: &'g RoadGraph,
    params: FilterParams,
    particles: Vec<Particle>,
    yaw_cov: YawCov,
    speed_var: f64,
    /// `(s_j, dt_j)` for every processed step `j`.
    history: Vec<(f64, f64)>,
    splits: SplitCounter,
    rng: ChaCha8Rng,
    diagnostics: Vec<StepDiagnostics>,
    diverged: bool,
    distance: f64,
}

impl<'g> FilterRun<'g> {
    /// Samples particles on every link portion within `radius_m` of
    /// `center`, one per `merge_dist` meters of portion length (at least one
    /// per directed link), all with equal weight.
    pub fn init(graph: &'g RoadGraph, center: GeoPoint, radius_m: f64, params: FilterParams) -> Result<Self, FilterError> {
        let portions = graph.links_within(center, radius_m);
        if portions.is_empty() {
            return Err(FilterError::NoLinksInCircle {
                lat: center.lat,
                lon: center.lon,
                radius_m,
            });
        }
        let mut states = Vec::new();
        for portion in portions {
            let span = portion.ratio_end - portion.ratio_start;
            let covered = span * graph.link(portion.link).length_m;
            let n = if params.merge_dist > 0.0 {
                libm::floor(covered / params.merge_dist + 1e-9) as usize
            } else {
                1
            };
            let n = n.max(1);
            for i in 0..n {
                let ratio = portion.ratio_start + span * (i as f64 + 0.5) / n as f64;
                states.push(PathState { link: portion.link, ratio });
            }
        }
        Ok(Self::from_states(graph, &states, params))
    }

    /// Starts from explicit poses with equal weights.
    pub fn from_states(graph: &'g RoadGraph, states: &[PathState], params: FilterParams) -> Self {
        let w = 1.0 / states.len().max(1) as f64;
        let particles = states
            .iter()
            .map(|&state| {
                let link = graph.link(state.link);
                Particle {
                    state,
                    weight: w,
                    yaw: YawMean {
                        theta: wrap_angle(link.bearing_deg),
                        omega: 0.0,
                    },
                    target: link.speed_limit_mps,
                    group: None,
                    odometer: 0.0,
                }
            })
            .collect::<Vec<_>>();
        Self {
            graph,
            yaw_cov: YawCov::initial(&params.noise),
            speed_var: params.noise.sigma_s2 * params.noise.sigma_s2,
            rng: ChaCha8Rng::seed_from_u64(params.rng_seed),
            params,
            diverged: particles.is_empty(),
            particles,
            history: Vec::new(),
            splits: SplitCounter::new(),
            diagnostics: Vec::new(),
            distance: 0.0,
        }
    }

    pub fn graph(&self) -> &'g RoadGraph {
        self.graph
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    /// Number of completed steps.
    pub fn step_index(&self) -> usize {
        self.history.len()
    }

    pub fn yaw_cov(&self) -> YawCov {
        self.yaw_cov
    }

    pub fn speed_var(&self) -> f64 {
        self.speed_var
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    /// Σ Δt·s over all processed steps.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn occupied_links(&self) -> usize {
        let mut links: Vec<LinkId> = self.particles.iter().map(|p| p.state.link).collect();
        links.sort_unstable();
        links.dedup();
        links.len()
    }

    pub fn estimate(&self, kind: EstimatorKind) -> Result<GeoPoint, FilterError> {
        estimate(self.graph, &self.particles, kind)
    }

    pub fn best_particle(&self, truth: GeoPoint) -> Result<GeoPoint, FilterError> {
        best_particle(self.graph, &self.particles, truth)
    }

    /// Processes the speed pair `(s_k, s_{k+1})` with sampling interval `dt`.
    pub fn step(&mut self, dt: f64, s_k: f64, s_next: f64) -> Result<StepDiagnostics, FilterError> {
        if self.diverged {
            return Err(FilterError::Diverged);
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(FilterError::InvalidInput("sampling interval must be positive"));
        }
        if !(s_k >= 0.0 && s_next >= 0.0 && s_k.is_finite() && s_next.is_finite()) {
            return Err(FilterError::InvalidInput("speeds must be finite and non-negative"));
        }
        let k = self.history.len();
        self.history.push((s_k, dt));
        self.distance += dt * s_k;
        let params = &self.params;
        let graph = self.graph;

        // Time update with junction splitting.
        let travel = dt * s_k;
        let mut lost_mass = 0.0;
        let mut candidates: Vec<Candidate> = Vec::with_capacity(self.particles.len());
        for p in &self.particles {
            let adv = advance(graph, p.state, travel, &mut self.splits);
            for o in adv.outcomes {
                candidates.push(Candidate {
                    particle: Particle {
                        state: o.state,
                        weight: p.weight * o.prob_factor,
                        yaw: p.yaw,
                        target: p.target,
                        group: o.lineage.last().map(|s| s.group).or(p.group),
                        odometer: p.odometer + o.travelled_m,
                    },
                    prior_target: p.target,
                    likelihood: 1.0,
                    alive: true,
                });
            }
            for l in adv.lost {
                lost_mass += p.weight * l.prob_factor;
                candidates.push(Candidate {
                    particle: Particle {
                        weight: p.weight * l.prob_factor,
                        group: l.lineage.last().map(|s| s.group).or(p.group),
                        ..p.clone()
                    },
                    prior_target: p.target,
                    likelihood: 0.0,
                    alive: false,
                });
            }
        }

        // Parameter update. The covariance recursions do not depend on the
        // measurements, so they run once for the whole population.
        let noise = &params.noise;
        let predicted = self.yaw_cov.predict(dt, noise);
        let yaw_gain = predicted.gain(noise);
        self.yaw_cov = predicted.correct(noise);
        let var = speed_predict_var(self.speed_var, dt, noise);
        let speed_k = speed_gain(var, noise);
        self.speed_var = (1.0 - speed_k) * var;

        let a_k = accel(s_k, s_next, dt);
        // Lagged pair (s_{k-K}, s_{k+1-K}) for the target-speed measurement.
        let lag = params.tsp.lag;
        let lagged = (k >= lag).then(|| {
            let j = k - lag;
            let (s_j, dt_j) = self.history[j];
            let s_j1 = if j < k { self.history.get(j + 1).map_or(s_next, |h| h.0) } else { s_next };
            accel(s_j, s_j1, dt_j) + params.tsp.c * s_j
        });

        for c in candidates.iter_mut().filter(|c| c.alive) {
            let link = graph.link(c.particle.state.link);
            let p = &mut c.particle;
            p.yaw = p.yaw.predict(dt).correct(link.bearing_deg, yaw_gain);
            let sbar = p.target + speed_k * (link.speed_limit_mps - p.target);
            let omega = p.yaw.omega_rad();
            p.target = project_target_speed(sbar, a_k, omega, params.lateral.g1).speed;

            // Measurement update.
            let y1 = libm::hypot(a_k, s_k * omega);
            let mut lik = lateral_density(y1, &params.lateral);
            if let Some(y2) = lagged {
                lik *= y2_density(y2, c.prior_target, &params.tsp);
            }
            c.likelihood = lik;
            if !(lik > 0.0) {
                c.alive = false;
            }
        }

        // Sibling redistribution of prior weight.
        let mut entries: Vec<SiblingEntry> = candidates
            .iter()
            .map(|c| SiblingEntry {
                group: c.particle.group,
                weight: c.particle.weight,
                alive: c.alive,
            })
            .collect();
        redistribute_siblings(&mut entries);
        let mut next: Vec<Particle> = candidates
            .into_iter()
            .zip(entries)
            .filter(|(c, _)| c.alive)
            .map(|(c, e)| Particle {
                weight: e.weight * c.likelihood,
                ..c.particle
            })
            .collect();

        // Elimination.
        if eliminate(&mut next, params).is_err() {
            self.particles.clear();
            self.diverged = true;
            let d = StepDiagnostics {
                step: k,
                lost_mass,
                diverged: true,
                ..Default::default()
            };
            self.diagnostics.push(d);
            return Err(FilterError::Diverged);
        }

        // Resampling.
        let mut resampled = false;
        let period = params.resample_period.max(1);
        let check = params.check_interval.max(1);
        if params.resampling && k > 0 && k.is_multiple_of(period) && k.is_multiple_of(check) && next.len() < params.particle_threshold {
            next = systematic_resample(graph, &next, params.particle_threshold, params.displacement_halfwidth, &mut self.rng);
            resampled = true;
        }

        // Merging.
        if params.merging {
            next = merge_particles(graph, next, params);
        }
        // merging and resampling conserve weight, but keep the sum exact
        let _ = normalize(&mut next);

        self.particles = next;
        let ess = 1.0 / self.particles.iter().map(|p| p.weight * p.weight).sum::<f64>();
        let d = StepDiagnostics {
            step: k,
            population: self.particles.len(),
            ess,
            lost_mass,
            occupied_links: self.occupied_links(),
            resampled,
            diverged: false,
        };
        self.diagnostics.push(d);
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::offset;
    use crate::graph::{GraphBuilder, Oneway, WaySpec};
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    const O: GeoPoint = GeoPoint { lat: 41.15, lon: -8.61 };

    fn graph(nodes: &[(i64, f64, f64)], ways: &[(&[i64], Oneway)]) -> RoadGraph {
        let mut b = GraphBuilder::new();
        for &(id, e, n) in nodes {
            b.add_node(id, offset(O, e, n)).unwrap();
        }
        for (i, (refs, oneway)) in ways.iter().enumerate() {
            b.add_way(WaySpec {
                id: i as i64,
                refs: refs.to_vec(),
                speed_limit_mps: 13.89,
                oneway: *oneway,
            });
        }
        b.build().unwrap()
    }

    fn particle(link: u32, ratio: f64, weight: f64) -> Particle {
        Particle {
            state: PathState { link: LinkId(link), ratio },
            weight,
            yaw: YawMean { theta: 90.0, omega: 0.0 },
            target: 13.89,
            group: None,
            odometer: 0.0,
        }
    }

    #[test]
    fn sibling_arithmetic() {
        let p = 0.6;
        let mut e = [
            SiblingEntry {
                group: Some(1),
                weight: p / 3.0,
                alive: true,
            },
            SiblingEntry {
                group: Some(1),
                weight: p / 3.0,
                alive: false,
            },
            SiblingEntry {
                group: Some(1),
                weight: p / 3.0,
                alive: true,
            },
            SiblingEntry {
                group: Some(2),
                weight: 0.4,
                alive: true,
            },
        ];
        let dropped = redistribute_siblings(&mut e);
        assert_eq!(dropped, 0.0);
        assert_abs_diff_eq!(e[0].weight, p / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e[2].weight, p / 2.0, epsilon = 1e-15);
        assert_eq!(e[1].weight, 0.0);
        assert_eq!(e[3].weight, 0.4);
    }

    #[test]
    fn lone_sibling_weight_is_dropped() {
        let mut e = [
            SiblingEntry {
                group: Some(7),
                weight: 0.25,
                alive: false,
            },
            SiblingEntry {
                group: None,
                weight: 0.75,
                alive: true,
            },
        ];
        assert_eq!(redistribute_siblings(&mut e), 0.25);
        assert_eq!(e[1].weight, 0.75);
        let mut same = [SiblingEntry {
            group: Some(1),
            weight: 0.5,
            alive: true,
        }; 2];
        redistribute_siblings(&mut same);
        assert_eq!(same[0].weight, 0.5);
    }

    #[test]
    fn elimination_rules() {
        let params = FilterParams::default();
        let mut ps = vec![particle(0, 0.1, 0.5), particle(0, 0.2, 0.0), particle(0, 0.3, 0.5)];
        eliminate(&mut ps, &params).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0].weight, 0.5);

        // below the population threshold tiny weights survive
        let mut ps = vec![particle(0, 0.1, 1.0), particle(0, 0.2, 1e-9)];
        eliminate(&mut ps, &params).unwrap();
        assert_eq!(ps.len(), 2);

        // above it they go
        let mut ps: Vec<Particle> = (0..150).map(|i| particle(0, 0.001 * i as f64, 1.0)).collect();
        ps[3].weight = 1e-6;
        eliminate(&mut ps, &params).unwrap();
        assert_eq!(ps.len(), 149);

        let mut none = vec![particle(0, 0.1, 0.0)];
        assert_eq!(eliminate(&mut none, &params), Err(FilterError::Diverged));
    }

    #[test]
    fn systematic_rule_on_equal_weights() {
        let w = [0.25; 4];
        assert_eq!(systematic_counts(&w, 4, 0.0), [1, 1, 1, 1]);
        assert_eq!(systematic_counts(&w, 4, 0.999), [1, 1, 1, 1]);
        assert_eq!(systematic_counts(&[1.0], 5, 0.3), [5]);
        assert_eq!(systematic_counts(&[0.5, 0.0, 0.5], 2, 0.5), [1, 0, 1]);
    }

    #[test]
    fn resampling_single_particle() {
        let g = graph(&[(1, 0.0, 0.0), (2, 1000.0, 0.0)], &[(&[1, 2], Oneway::No)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let out = systematic_resample(&g, &[particle(0, 0.5, 1.0)], 7, 100.0, &mut rng);
        assert_eq!(out.len(), 7);
        for p in &out {
            assert_eq!(p.weight, 1.0 / 7.0);
            assert!((p.state.ratio - 0.5).abs() <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn merging_rules() {
        let g = graph(
            &[(1, 0.0, 0.0), (2, 100.0, 0.0), (3, 100.0, 100.0)],
            &[(&[1, 2], Oneway::No), (&[2, 3], Oneway::No)],
        );
        let params = FilterParams::default();
        let len = g.links()[0].length_m;
        let merged = merge_particles(&g, vec![particle(0, 0.4, 0.3), particle(0, 0.4, 0.2)], &params);
        assert_eq!(merged.len(), 1);
        assert_abs_diff_eq!(merged[0].weight, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(merged[0].state.ratio, 0.4, epsilon = 1e-15);

        let apart = merge_particles(&g, vec![particle(0, 0.1, 0.3), particle(0, 0.1 + 25.0 / len, 0.2)], &params);
        assert_eq!(apart.len(), 2);

        let links = merge_particles(&g, vec![particle(0, 0.4, 0.3), particle(2, 0.4, 0.2)], &params);
        assert_eq!(links.len(), 2);

        let mut b = particle(0, 0.45, 0.2);
        b.target = 20.0;
        assert_eq!(merge_particles(&g, vec![particle(0, 0.4, 0.3), b.clone()], &params).len(), 2);

        b.target = 13.89;
        let m = merge_particles(&g, vec![particle(0, 0.4, 0.3), b], &params);
        assert_eq!(m.len(), 1);
        assert_abs_diff_eq!(m[0].state.ratio, (0.3 * 0.4 + 0.2 * 0.45) / 0.5, epsilon = 1e-12);
    }

    #[test]
    fn estimators() {
        let g = graph(&[(1, 0.0, 0.0), (2, 100.0, 0.0)], &[(&[1, 2], Oneway::Forward)]);
        let single = [particle(0, 0.3, 1.0)];
        let a = estimate(&g, &single, EstimatorKind::Map).unwrap();
        let b = estimate(&g, &single, EstimatorKind::Mmse).unwrap();
        let c = best_particle(&g, &single, O).unwrap();
        assert!(geodesic_distance(a, b) < 1e-6 && geodesic_distance(a, c) < 1e-6);

        let two = [particle(0, 0.1, 0.1), particle(0, 0.8, 0.9)];
        let map = estimate(&g, &two, EstimatorKind::Map).unwrap();
        assert_eq!(map, position_of(&g, two[1].state));
        let tie = [particle(0, 0.1, 0.5), particle(0, 0.8, 0.5)];
        assert_eq!(estimate(&g, &tie, EstimatorKind::Map).unwrap(), position_of(&g, tie[0].state));

        let mm = [particle(0, 0.0, 0.25), particle(0, 1.0, 0.75)];
        let m = estimate(&g, &mm, EstimatorKind::Mmse).unwrap();
        let start = g.node(0).point;
        assert_abs_diff_eq!(geodesic_distance(start, m), 0.75 * g.links()[0].length_m, epsilon = 1e-3);
        assert!(estimate(&g, &[], EstimatorKind::Map).is_err());
    }

    #[test]
    fn init_spacing() {
        let g = graph(&[(1, 0.0, 0.0), (2, 100.0, 0.0)], &[(&[1, 2], Oneway::No)]);
        let run = FilterRun::init(&g, offset(O, 50.0, 0.0), 80.0, FilterParams::default()).unwrap();
        let len = g.links()[0].length_m;
        let expected = 5;
        assert!((len - 100.0).abs() < 1e-6);
        assert_eq!(run.particles().len(), 2 * expected);
        for p in run.particles() {
            assert_abs_diff_eq!(p.weight, 1.0 / (2 * expected) as f64, epsilon = 1e-15);
        }
        let one = graph(&[(1, 0.0, 0.0), (2, 100.0, 0.0)], &[(&[1, 2], Oneway::Forward)]);
        let run = FilterRun::init(&one, offset(O, 50.0, 0.0), 80.0, FilterParams::default()).unwrap();
        assert!(run.particles().iter().all(|p| p.state.link == LinkId(0)));
        assert!(matches!(
            FilterRun::init(&g, offset(O, 50.0, 5000.0), 50.0, FilterParams::default()),
            Err(FilterError::NoLinksInCircle { .. })
        ));
    }

    #[test]
    fn single_particle_mid_link() {
        let g = graph(&[(1, 0.0, 0.0), (2, 1000.0, 0.0)], &[(&[1, 2], Oneway::Forward)]);
        let mut run = FilterRun::from_states(&g, &[PathState { link: LinkId(0), ratio: 0.1 }], FilterParams::default());
        run.step(1.0, 10.0, 10.0).unwrap();
        let p = &run.particles()[0];
        assert_eq!(run.particles().len(), 1);
        assert_eq!(p.weight, 1.0);
        assert_abs_diff_eq!(p.state.ratio, 0.1 + 10.0 / g.links()[0].length_m, epsilon = 1e-12);
        assert_abs_diff_eq!(p.odometer, 10.0, epsilon = 1e-12);
    }

    #[test]
    fn impossible_acceleration_diverges() {
        let g = graph(&[(1, 0.0, 0.0), (2, 1000.0, 0.0)], &[(&[1, 2], Oneway::No)]);
        let mut run = FilterRun::from_states(&g, &[PathState { link: LinkId(0), ratio: 0.1 }], FilterParams::default());
        assert_eq!(run.step(1.0, 0.0, 30.0), Err(FilterError::Diverged));
        assert!(run.is_diverged());
        assert_eq!(run.step(1.0, 30.0, 30.0), Err(FilterError::Diverged));
    }
}
