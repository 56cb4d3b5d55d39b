//! Command-line surface. Exit codes: 0 success, 1 runtime failure, 2 bad
//! usage or unusable input.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use mapdr_core::eval::{estimator_edf, Estimator, TripView};
use mapdr_core::maps::{map_a, map_b};
use mapdr_core::sim::random_trip;
use mapdr_core::{EstimatorKind, EvalError, FilterError, FilterRun, GeoPoint, RoadFilter, RoadGraph, SimError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::batch;
use crate::config::{Config, ConfigError};
use crate::error::FileError;
use crate::osm::{parse_osm, write_osm, OsmError};
use crate::records::{edf_csv, records_csv, sweep_csv};
use crate::trips::{load_trip_dir, read_samples, write_trip, LoadedTrip};

#[derive(Debug, Parser)]
#[command(name = "mapdr", version, about = "Map-aided dead reckoning from vehicle speed")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random trips on a map.
    Simulate {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        trips: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the filter over one trip and print the final estimates.
    Track {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        trip: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Center of the initial circle; defaults to the trip's first true position.
        #[arg(long, requires = "init_lon", allow_negative_numbers = true)]
        init_lat: Option<f64>,
        #[arg(long, requires = "init_lat", allow_negative_numbers = true)]
        init_lon: Option<f64>,
        #[arg(long)]
        init_radius: Option<f64>,
        /// Per-step diagnostics CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate every trip of a directory over several runs.
    Eval {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat the evaluation for several initial radii and tabulate BP quantiles.
    SweepInit {
        #[command(flatten)]
        batch: BatchArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one of the built-in synthetic maps as OSM XML.
    GenMap {
        #[arg(long, value_enum)]
        kind: MapKind,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub trips: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub runs: u32,
    /// Base seed; run r uses seed + r. Overrides `rng_seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    A,
    B,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("map {path}: {source}")]
    Map { path: PathBuf, source: OsmError },
    #[error(transparent)]
    Input(FileError),
    #[error(transparent)]
    Output(FileError),
    #[error("{path}: {source}")]
    Trip { path: PathBuf, source: EvalError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::Map { .. } | CliError::Input(_) => 2,
            CliError::Trip {
                source: EvalError::EmptyTrip | EvalError::InvalidInput(_),
                ..
            } => 2,
            CliError::Eval(EvalError::EmptyTrip) => 2,
            _ => 1,
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    let Some(path) = path else { return Ok(Config::default()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(FileError::io(path, e)))?;
    Config::parse(&text).map_err(|source| CliError::Config { path: path.to_owned(), source })
}

fn load_map(path: &Path) -> Result<RoadGraph, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(FileError::io(path, e)))?;
    parse_osm(&text, &RoadFilter::default()).map_err(|source| CliError::Map { path: path.to_owned(), source })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Output(FileError::io(path, e)))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Output(FileError::io(path, e)))
}

fn load_views(trips: &[LoadedTrip]) -> Result<Vec<TripView<'_>>, CliError> {
    trips
        .iter()
        .map(|t| {
            if t.samples.speeds.len() < 2 {
                return Err(CliError::Trip {
                    path: t.path.clone(),
                    source: EvalError::EmptyTrip,
                });
            }
            t.view()
                .ok_or_else(|| CliError::Usage(format!("{}: evaluation needs true positions", t.path.display())))
        })
        .collect()
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { map, trips, seed, out, config } => {
            let cfg = load_config(config.as_deref())?;
            let graph = load_map(&map)?;
            create_dir(&out)?;
            let sim = cfg.sim;
            let generated: Vec<_> = (0..trips)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    random_trip(&graph, &sim.request, &sim.driver, &sim.corruption, sim.dt, &mut rng)
                })
                .collect::<Result<_, _>>()?;
            for (i, trip) in generated.iter().enumerate() {
                write_trip(&out, &format!("trip_{i:04}"), trip).map_err(CliError::Output)?;
            }
            Ok(())
        }
        Command::Track {
            map,
            trip,
            config,
            seed,
            init_lat,
            init_lon,
            init_radius,
            out,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.filter.rng_seed = seed;
            }
            let graph = load_map(&map)?;
            let samples = read_samples(&trip).map_err(CliError::Input)?;
            if samples.speeds.len() < 2 {
                return Err(CliError::Trip {
                    path: trip,
                    source: EvalError::EmptyTrip,
                });
            }
            let center = match (init_lat, init_lon, samples.truth.as_ref().and_then(|t| t.first())) {
                (Some(lat), Some(lon), _) => GeoPoint { lat, lon },
                (_, _, Some(&p)) => p,
                _ => return Err(CliError::Usage("trip has no true positions; pass --init-lat and --init-lon".into())),
            };
            let radius = init_radius.unwrap_or(cfg.init_radius_m);
            if !(radius > 0.0) {
                return Err(CliError::Usage("--init-radius must be positive".into()));
            }
            let mut run = FilterRun::init(&graph, center, radius, cfg.filter.clone())?;
            let mut failure = None;
            for (t, s) in samples.timestamps.windows(2).zip(samples.speeds.windows(2)) {
                if let Err(e) = run.step(t[1] - t[0], s[0], s[1]) {
                    failure = Some(e);
                    break;
                }
            }
            if let Some(path) = out {
                let mut text = String::from("step,population,ess,lost_mass,occupied_links,resampled,diverged\n");
                for d in run.diagnostics() {
                    let _ = writeln!(
                        text,
                        "{},{},{:.6},{:.6},{},{},{}",
                        d.step, d.population, d.ess, d.lost_mass, d.occupied_links, d.resampled, d.diverged
                    );
                }
                write_file(&path, &text)?;
            }
            if let Some(e) = failure {
                return Err(e.into());
            }
            let mut text = String::from("estimator,lat,lon\n");
            for (name, kind) in [("MAP", EstimatorKind::Map), ("MMSE", EstimatorKind::Mmse)] {
                let p = run.estimate(kind)?;
                let _ = writeln!(text, "{name},{:.6},{:.6}", p.lat, p.lon);
            }
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Output(FileError::io(Path::new("<stdout>"), e)))
        }
        Command::Eval { batch: args, out } => {
            let (cfg, graph, trips) = load_batch(&args)?;
            let views = load_views(&trips)?;
            let outcomes = batch::evaluate(&graph, &views, &cfg.filter, cfg.init_radius_m, args.runs)?;
            let records = batch::records(&outcomes);
            create_dir(&out)?;
            write_file(&out.join("records.csv"), &records_csv(&records))?;
            if !records.is_empty() {
                for e in Estimator::ALL {
                    write_file(&out.join(format!("edf_{}.csv", e.name())), &edf_csv(&estimator_edf(&records, e)?))?;
                }
            }
            Ok(())
        }
        Command::SweepInit { batch: args, radii, out } => {
            let (cfg, graph, trips) = load_batch(&args)?;
            let views = load_views(&trips)?;
            if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Usage("--radii must be positive and ascending".into()));
            }
            let rows = batch::sweep(&graph, &views, &cfg.filter, &radii, args.runs)?;
            let text = sweep_csv(&rows);
            match out {
                Some(path) => write_file(&path, &text),
                None => stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| CliError::Output(FileError::io(Path::new("<stdout>"), e))),
            }
        }
        Command::GenMap { kind, out } => {
            let map = match kind {
                MapKind::A => map_a(),
                MapKind::B => map_b(),
            };
            write_file(&out, &write_osm(&map))
        }
    }
}

fn load_batch(args: &BatchArgs) -> Result<(Config, RoadGraph, Vec<LoadedTrip>), CliError> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.filter.rng_seed = seed;
    }
    let graph = load_map(&args.map)?;
    let trips = load_trip_dir(&args.trips).map_err(CliError::Input)?;
    if args.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    Ok((cfg, graph, trips))
}
