//! Trial evaluation: end-of-trip errors, empirical distribution functions
//! and the initial-radius sweep.

use alloc::vec::Vec;

use crate::error::{EvalError, FilterError};
use crate::filter::{map_index, EstimatorKind, FilterParams, FilterRun};
use crate::geo::{geodesic_distance, GeoPoint};
use crate::graph::{LinkId, RoadGraph};
use crate::motion::position_of;
use crate::sim::SimTrip;

/// Distance beyond which the closest particle counts as lost. Reported
/// only, never fed back into estimation.
pub const LOST_TRACK_M: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Estimator {
    Map,
    Mmse,
    Bp,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Map, Estimator::Mmse, Estimator::Bp];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Map => "MAP",
            Estimator::Mmse => "MMSE",
            Estimator::Bp => "BP",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalRecord {
    pub trip_id: u32,
    pub run_id: u32,
    pub estimator: Estimator,
    pub error_m: f64,
    pub rel_error: f64,
    pub diverged: bool,
}

impl EvalRecord {
    fn new(trip_id: u32, run_id: u32, estimator: Estimator, error_m: f64, length_m: f64, diverged: bool) -> Self {
        let rel_error = if length_m > 0.0 { error_m / length_m } else { 0.0 };
        Self {
            trip_id,
            run_id,
            estimator,
            error_m,
            rel_error,
            diverged,
        }
    }
}

/// Everything one (trip, seed) run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    /// MAP, MMSE and BP rows, in that order.
    pub records: [EvalRecord; 3],
    pub map_link: Option<LinkId>,
    pub final_population: usize,
    /// No particle within [`LOST_TRACK_M`] of the true end position.
    pub lost_track: bool,
}

impl TrialOutcome {
    pub fn record(&self, estimator: Estimator) -> &EvalRecord {
        &self.records[estimator as usize]
    }
}

/// The parts of a trip a trial consumes: the measured speed stream with its
/// timestamps, the true end points and the driven length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripView<'a> {
    pub timestamps: &'a [f64],
    pub speeds: &'a [f64],
    pub start: GeoPoint,
    pub end: GeoPoint,
    pub length_m: f64,
}

impl<'a> TripView<'a> {
    /// `None` for a trip without samples.
    pub fn of(trip: &'a SimTrip) -> Option<Self> {
        Some(Self {
            timestamps: &trip.timestamps,
            speeds: &trip.measured_speeds,
            start: *trip.true_positions.first()?,
            end: *trip.true_positions.last()?,
            length_m: trip.length_m,
        })
    }
}

/// Seed of run `run_id` in a batch with base seed `base`.
pub fn run_seed(base: u64, run_id: u32) -> u64 {
    base.wrapping_add(u64::from(run_id))
}

/// Runs the filter over the trip's measured speeds, starting from a circle
/// of `init_radius_m` around the true start, and scores the final
/// estimates against the true end position. A diverged run scores the trip
/// length for every estimator.
pub fn run_trial(
    graph: &RoadGraph,
    trip: TripView<'_>,
    trip_id: u32,
    run_id: u32,
    params: &FilterParams,
    init_radius_m: f64,
) -> Result<TrialOutcome, EvalError> {
    if trip.speeds.len() < 2 {
        return Err(EvalError::EmptyTrip);
    }
    if trip.timestamps.len() != trip.speeds.len() {
        return Err(EvalError::InvalidInput("one timestamp per speed sample required"));
    }
    let (start, end) = (trip.start, trip.end);
    let params = FilterParams {
        rng_seed: run_seed(params.rng_seed, run_id),
        ..params.clone()
    };
    let mut run = FilterRun::init(graph, start, init_radius_m, params)?;
    let mut diverged = false;
    for (t, w) in trip.timestamps.windows(2).zip(trip.speeds.windows(2)) {
        match run.step(t[1] - t[0], w[0], w[1]) {
            Ok(_) => {}
            Err(FilterError::Diverged) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let length = trip.length_m;
    if diverged {
        let rec = |e| EvalRecord::new(trip_id, run_id, e, length, length, true);
        return Ok(TrialOutcome {
            records: [rec(Estimator::Map), rec(Estimator::Mmse), rec(Estimator::Bp)],
            map_link: None,
            final_population: 0,
            lost_track: true,
        });
    }
    let err = |p: GeoPoint| geodesic_distance(p, end);
    let map = err(run.estimate(EstimatorKind::Map)?);
    let mmse = err(run.estimate(EstimatorKind::Mmse)?);
    let bp = err(run.best_particle(end)?);
    let particles = run.particles();
    let map_link = map_index(particles).map(|i| particles[i].state.link);
    let lost_track = particles.iter().all(|p| err(position_of(graph, p.state)) > LOST_TRACK_M);
    Ok(TrialOutcome {
        records: [
            EvalRecord::new(trip_id, run_id, Estimator::Map, map, length, false),
            EvalRecord::new(trip_id, run_id, Estimator::Mmse, mmse, length, false),
            EvalRecord::new(trip_id, run_id, Estimator::Bp, bp, length, false),
        ],
        map_link,
        final_population: particles.len(),
        lost_track,
    })
}

/// Empirical distribution function over a finite sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EdfCurve {
    sorted: Vec<f64>,
}

impl EdfCurve {
    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest sample `v` with `F(v) ≥ q`.
    pub fn quantile(&self, q: f64) -> Result<f64, EvalError> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(EvalError::BadQuantile(q));
        }
        let n = self.sorted.len();
        let mut i = (libm::ceil(q * n as f64) as usize).clamp(1, n);
        while i > 1 && (i - 1) as f64 / n as f64 >= q {
            i -= 1;
        }
        while i < n && (i as f64 / n as f64) < q {
            i += 1;
        }
        Ok(self.sorted[i - 1])
    }

    /// Step points `(x, F(x))`, one per distinct sample.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = f,
                _ => out.push((v, f)),
            }
        }
        out
    }
}

pub fn edf(values: &[f64]) -> Result<EdfCurve, EvalError> {
    if values.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EdfCurve { sorted })
}

pub fn quantile(curve: &EdfCurve, q: f64) -> Result<f64, EvalError> {
    curve.quantile(q)
}

/// Pooled error edf of one estimator.
pub fn estimator_edf(records: &[EvalRecord], estimator: Estimator) -> Result<EdfCurve, EvalError> {
    let values: Vec<f64> = records.iter().filter(|r| r.estimator == estimator).map(|r| r.error_m).collect();
    edf(&values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub radius_m: f64,
    pub q10_m: f64,
    pub q25_m: f64,
}

impl SweepRow {
    /// BP quantiles of the given records.
    pub fn from_records(radius_m: f64, records: &[EvalRecord]) -> Result<Self, EvalError> {
        let curve = estimator_edf(records, Estimator::Bp)?;
        Ok(Self {
            radius_m,
            q10_m: curve.quantile(0.1)?,
            q25_m: curve.quantile(0.25)?,
        })
    }
}

/// Runs every trip `runs` times per radius with all other parameters held
/// fixed.
pub fn sweep_init_radius(graph: &RoadGraph, trips: &[TripView<'_>], params: &FilterParams, radii: &[f64], runs: u32) -> Result<Vec<SweepRow>, EvalError> {
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidInput("radii must be positive and ascending"));
    }
    radii
        .iter()
        .map(|&radius| {
            let mut records = Vec::new();
            for (i, trip) in trips.iter().enumerate() {
                for run in 0..runs {
                    records.extend(run_trial(graph, *trip, i as u32, run, params, radius)?.records);
                }
            }
            SweepRow::from_records(radius, &records)
        })
        .collect()
}
