//! Parallel evaluation over (trip, run) jobs. Results come back in
//! (trip_id, run_id, estimator) order regardless of scheduling.

use mapdr_core::eval::{run_trial, EvalRecord, SweepRow, TrialOutcome, TripView};
use mapdr_core::{EvalError, FilterParams, RoadGraph};
use rayon::prelude::*;

/// Runs every trip `runs` times. Trip ids are positions in `trips`.
pub fn evaluate(graph: &RoadGraph, trips: &[TripView<'_>], params: &FilterParams, init_radius_m: f64, runs: u32) -> Result<Vec<TrialOutcome>, EvalError> {
    let jobs: Vec<(u32, u32)> = (0..trips.len() as u32).flat_map(|t| (0..runs).map(move |r| (t, r))).collect();
    jobs.par_iter()
        .map(|&(t, r)| run_trial(graph, trips[t as usize], t, r, params, init_radius_m))
        .collect()
}

pub fn records(outcomes: &[TrialOutcome]) -> Vec<EvalRecord> {
    outcomes.iter().flat_map(|o| o.records).collect()
}

/// Parallel counterpart of [`mapdr_core::eval::sweep_init_radius`] with
/// identical results.
pub fn sweep(graph: &RoadGraph, trips: &[TripView<'_>], params: &FilterParams, radii: &[f64], runs: u32) -> Result<Vec<SweepRow>, EvalError> {
    if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::InvalidInput("radii must be positive and ascending"));
    }
    radii
        .iter()
        .map(|&radius| SweepRow::from_records(radius, &records(&evaluate(graph, trips, params, radius, runs)?)))
        .collect()
}
