//! Trip files. Each trip is a CSV of samples plus a `.route` sidecar with
//! the driven node path and the driving length.
//!
//! ```text
//! t_s,speed_mps,true_lat,true_lon        (or just t_s,speed_mps)
//! ```
//!
//! The speed column holds the measured (corrupted) speeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mapdr_core::eval::TripView;
use mapdr_core::sim::SimTrip;
use mapdr_core::GeoPoint;

use crate::error::FileError;

const FULL_HEADER: [&str; 4] = ["t_s", "speed_mps", "true_lat", "true_lon"];

/// Samples of one trip. `truth` is present only for simulated trips.
#[derive(Clone, Debug, PartialEq)]
pub struct TripSamples {
    pub timestamps: Vec<f64>,
    pub speeds: Vec<f64>,
    pub truth: Option<Vec<GeoPoint>>,
}

/// Contents of a `.route` sidecar.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteMeta {
    pub node_path: Vec<i64>,
    pub length_m: f64,
    pub end_ratio: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedTrip {
    pub path: PathBuf,
    pub samples: TripSamples,
    pub route: RouteMeta,
}

impl LoadedTrip {
    /// The evaluation view, if the file carries true positions.
    pub fn view(&self) -> Option<TripView<'_>> {
        let truth = self.samples.truth.as_ref()?;
        Some(TripView {
            timestamps: &self.samples.timestamps,
            speeds: &self.samples.speeds,
            start: *truth.first()?,
            end: *truth.last()?,
            length_m: self.route.length_m,
        })
    }
}

pub fn samples_csv(samples: &TripSamples) -> String {
    let mut out = String::new();
    match &samples.truth {
        Some(truth) => {
            out.push_str("t_s,speed_mps,true_lat,true_lon\n");
            for ((t, s), p) in samples.timestamps.iter().zip(&samples.speeds).zip(truth) {
                let _ = writeln!(out, "{t:.6},{s:.6},{:.6},{:.6}", p.lat, p.lon);
            }
        }
        None => {
            out.push_str("t_s,speed_mps\n");
            for (t, s) in samples.timestamps.iter().zip(&samples.speeds) {
                let _ = writeln!(out, "{t:.6},{s:.6}");
            }
        }
    }
    out
}

pub fn route_text(route: &RouteMeta) -> String {
    let nodes: Vec<String> = route.node_path.iter().map(i64::to_string).collect();
    format!(
        "nodes = {}\nlength_m = {:.6}\nend_ratio = {:.6}\nscale = {:.6}\n",
        nodes.join(" "),
        route.length_m,
        route.end_ratio,
        route.scale
    )
}

/// Writes `<stem>.csv` and `<stem>.route` into `dir`.
pub fn write_trip(dir: &Path, stem: &str, trip: &SimTrip) -> Result<PathBuf, FileError> {
    let samples = TripSamples {
        timestamps: trip.timestamps.clone(),
        speeds: trip.measured_speeds.clone(),
        truth: Some(trip.true_positions.clone()),
    };
    let route = RouteMeta {
        node_path: trip.node_path.clone(),
        length_m: trip.length_m,
        end_ratio: trip.end_ratio,
        scale: trip.scale,
    };
    let csv_path = dir.join(format!("{stem}.csv"));
    fs::write(&csv_path, samples_csv(&samples)).map_err(|e| FileError::io(&csv_path, e))?;
    let route_path = dir.join(format!("{stem}.route"));
    fs::write(&route_path, route_text(&route)).map_err(|e| FileError::io(&route_path, e))?;
    Ok(csv_path)
}

pub fn read_samples(path: &Path) -> Result<TripSamples, FileError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| FileError::csv(path, e))?;
    let header = reader.headers().map_err(|e| FileError::csv(path, e))?.clone();
    let with_truth = match header.len() {
        4 if header.iter().eq(FULL_HEADER) => true,
        2 if header.iter().eq(FULL_HEADER[..2].iter().copied()) => false,
        _ => {
            return Err(FileError::format(
                path,
                1,
                format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
            ))
        }
    };
    let mut samples = TripSamples {
        timestamps: Vec::new(),
        speeds: Vec::new(),
        truth: with_truth.then(Vec::new),
    };
    for row in reader.records() {
        let row = row.map_err(|e| FileError::csv(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, FileError> {
            row[i]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FileError::format(path, line, format!("bad number `{}` in column {}", &row[i], header[i].to_owned())))
        };
        samples.timestamps.push(num(0)?);
        samples.speeds.push(num(1)?);
        if let Some(truth) = &mut samples.truth {
            truth.push(GeoPoint { lat: num(2)?, lon: num(3)? });
        }
    }
    if samples.timestamps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FileError::format(path, 0, "timestamps must increase"));
    }
    Ok(samples)
}

pub fn read_route(path: &Path) -> Result<RouteMeta, FileError> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    let (mut nodes, mut length, mut ratio, mut scale) = (None, None, None, None);
    for (i, line) in text.lines().enumerate() {
        let line_no = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || FileError::format(path, line_no, format!("cannot read `{line}`"));
        let (key, value) = line.split_once('=').ok_or_else(bad)?;
        let value = value.trim();
        let float = || value.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        match key.trim() {
            "nodes" => {
                nodes = Some(
                    value
                        .split_whitespace()
                        .map(|n| n.parse().map_err(|_| bad()))
                        .collect::<Result<Vec<i64>, _>>()?,
                )
            }
            "length_m" => length = Some(float()?),
            "end_ratio" => ratio = Some(float()?),
            "scale" => scale = Some(float()?),
            _ => return Err(bad()),
        }
    }
    let missing = |key: &str| FileError::format(path, 0, format!("missing `{key}`"));
    Ok(RouteMeta {
        node_path: nodes.ok_or_else(|| missing("nodes"))?,
        length_m: length.ok_or_else(|| missing("length_m"))?,
        end_ratio: ratio.ok_or_else(|| missing("end_ratio"))?,
        scale: scale.ok_or_else(|| missing("scale"))?,
    })
}

/// Loads every `*.csv` trip with its sidecar from `dir`, in file-name
/// order.
pub fn load_trip_dir(dir: &Path) -> Result<Vec<LoadedTrip>, FileError> {
    let entries = fs::read_dir(dir).map_err(|e| FileError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| FileError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let samples = read_samples(&path)?;
            let route = read_route(&path.with_extension("route"))?;
            Ok(LoadedTrip { path, samples, route })
        })
        .collect()
}
