//! Plain-text `key = value` configuration. Filter keys carry the names of
//! the [`FilterParams`] fields; every key is optional and defaults to the
//! values below.

use std::fmt::Write as _;

use mapdr_core::sim::{CorruptionParams, DriverProfile, TripRequest};
use mapdr_core::FilterParams;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for key `{key}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("key `{key}`: {reason}")]
    Invalid { key: &'static str, reason: &'static str },
}

/// Trip generation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub request: TripRequest,
    pub driver: DriverProfile,
    pub corruption: CorruptionParams,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 1.0,
            request: TripRequest {
                min_length_m: 3000.0,
                max_length_m: 10_000.0,
                attempts: 100,
            },
            driver: DriverProfile::default(),
            corruption: CorruptionParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub filter: FilterParams,
    /// Radius of the initial particle circle, meters.
    pub init_radius_m: f64,
    pub sim: SimSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            init_radius_m: 50.0,
            sim: SimSettings::default(),
        }
    }
}

const KEYS: &[&str] = &[
    "sigma_omega",
    "sigma_theta",
    "sigma_s1",
    "sigma_s2",
    "g1",
    "g2",
    "lag",
    "c",
    "sigma",
    "particle_threshold",
    "weight_floor",
    "merge_dist",
    "displacement_halfwidth",
    "resample_period",
    "check_interval",
    "merge_theta_tol",
    "merge_omega_tol",
    "merge_sbar_tol",
    "resampling",
    "merging",
    "rng_seed",
    "init_radius_m",
    "dt",
    "min_trip_m",
    "max_trip_m",
    "trip_attempts",
    "driver_gain",
    "driver_accel_noise_std",
    "driver_comfort_lateral",
    "driver_reaction_lookahead_s",
    "driver_a_max",
    "driver_turn_length_m",
    "scale_mean",
    "scale_std",
    "scale_min",
    "scale_max",
    "quant_step",
];

enum Slot<'a> {
    F(&'a mut f64),
    U(&'a mut usize),
    U64(&'a mut u64),
    B(&'a mut bool),
}

impl Slot<'_> {
    fn text(&self) -> String {
        match self {
            Slot::F(v) => format!("{v}"),
            Slot::U(v) => v.to_string(),
            Slot::U64(v) => v.to_string(),
            Slot::B(v) => v.to_string(),
        }
    }

    fn set(&mut self, value: &str) -> Option<()> {
        match self {
            Slot::F(v) => **v = value.parse().ok().filter(|x: &f64| x.is_finite())?,
            Slot::U(v) => **v = value.parse().ok()?,
            Slot::U64(v) => **v = value.parse().ok()?,
            Slot::B(v) => **v = value.parse().ok()?,
        }
        Some(())
    }
}

impl Config {
    fn slot(&mut self, key: &str) -> Option<Slot<'_>> {
        let f = &mut self.filter;
        let s = &mut self.sim;
        Some(match key {
            "sigma_omega" => Slot::F(&mut f.noise.sigma_omega),
            "sigma_theta" => Slot::F(&mut f.noise.sigma_theta),
            "sigma_s1" => Slot::F(&mut f.noise.sigma_s1),
            "sigma_s2" => Slot::F(&mut f.noise.sigma_s2),
            "g1" => Slot::F(&mut f.lateral.g1),
            "g2" => Slot::F(&mut f.lateral.g2),
            "lag" => Slot::U(&mut f.tsp.lag),
            "c" => Slot::F(&mut f.tsp.c),
            "sigma" => Slot::F(&mut f.tsp.sigma),
            "particle_threshold" => Slot::U(&mut f.particle_threshold),
            "weight_floor" => Slot::F(&mut f.weight_floor),
            "merge_dist" => Slot::F(&mut f.merge_dist),
            "displacement_halfwidth" => Slot::F(&mut f.displacement_halfwidth),
            "resample_period" => Slot::U(&mut f.resample_period),
            "check_interval" => Slot::U(&mut f.check_interval),
            "merge_theta_tol" => Slot::F(&mut f.merge_theta_tol),
            "merge_omega_tol" => Slot::F(&mut f.merge_omega_tol),
            "merge_sbar_tol" => Slot::F(&mut f.merge_sbar_tol),
            "resampling" => Slot::B(&mut f.resampling),
            "merging" => Slot::B(&mut f.merging),
            "rng_seed" => Slot::U64(&mut f.rng_seed),
            "init_radius_m" => Slot::F(&mut self.init_radius_m),
            "dt" => Slot::F(&mut s.dt),
            "min_trip_m" => Slot::F(&mut s.request.min_length_m),
            "max_trip_m" => Slot::F(&mut s.request.max_length_m),
            "trip_attempts" => Slot::U(&mut s.request.attempts),
            "driver_gain" => Slot::F(&mut s.driver.gain),
            "driver_accel_noise_std" => Slot::F(&mut s.driver.accel_noise_std),
            "driver_comfort_lateral" => Slot::F(&mut s.driver.comfort_lateral),
            "driver_reaction_lookahead_s" => Slot::F(&mut s.driver.reaction_lookahead_s),
            "driver_a_max" => Slot::F(&mut s.driver.a_max),
            "driver_turn_length_m" => Slot::F(&mut s.driver.turn_length_m),
            "scale_mean" => Slot::F(&mut s.corruption.scale_mean),
            "scale_std" => Slot::F(&mut s.corruption.scale_std),
            "scale_min" => Slot::F(&mut s.corruption.scale_min),
            "scale_max" => Slot::F(&mut s.corruption.scale_max),
            "quant_step" => Slot::F(&mut s.corruption.quant_step),
            _ => return None,
        })
    }

    /// Parses a configuration file. Blank lines and `#` comments are
    /// skipped.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            let mut slot = cfg.slot(key).ok_or_else(|| ConfigError::UnknownKey { line, key: key.into() })?;
            if seen.contains(&key) {
                return Err(ConfigError::DuplicateKey { line, key: key.into() });
            }
            slot.set(value).ok_or_else(|| ConfigError::BadValue {
                line,
                key: key.into(),
                value: value.into(),
            })?;
            seen.push(key);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key, reason| Err(ConfigError::Invalid { key, reason });
        let f = &self.filter;
        let s = &self.sim;
        for (key, v) in [
            ("sigma_omega", f.noise.sigma_omega),
            ("sigma_theta", f.noise.sigma_theta),
            ("sigma_s1", f.noise.sigma_s1),
            ("sigma_s2", f.noise.sigma_s2),
            ("g1", f.lateral.g1),
            ("c", f.tsp.c),
            ("sigma", f.tsp.sigma),
            ("merge_dist", f.merge_dist),
            ("init_radius_m", self.init_radius_m),
            ("dt", s.dt),
            ("min_trip_m", s.request.min_length_m),
            ("driver_gain", s.driver.gain),
            ("driver_comfort_lateral", s.driver.comfort_lateral),
            ("driver_reaction_lookahead_s", s.driver.reaction_lookahead_s),
            ("driver_a_max", s.driver.a_max),
            ("driver_turn_length_m", s.driver.turn_length_m),
            ("scale_mean", s.corruption.scale_mean),
            ("scale_min", s.corruption.scale_min),
        ] {
            if v <= 0.0 {
                return bad(key, "must be positive");
            }
        }
        for (key, v) in [
            ("displacement_halfwidth", f.displacement_halfwidth),
            ("merge_theta_tol", f.merge_theta_tol),
            ("merge_omega_tol", f.merge_omega_tol),
            ("merge_sbar_tol", f.merge_sbar_tol),
            ("driver_accel_noise_std", s.driver.accel_noise_std),
            ("scale_std", s.corruption.scale_std),
            ("quant_step", s.corruption.quant_step),
        ] {
            if v < 0.0 {
                return bad(key, "must not be negative");
            }
        }
        if f.lateral.g2 <= f.lateral.g1 {
            return bad("g2", "must exceed g1");
        }
        if !(0.0..1.0).contains(&f.weight_floor) {
            return bad("weight_floor", "must lie in [0, 1)");
        }
        for (key, v) in [
            ("particle_threshold", f.particle_threshold),
            ("resample_period", f.resample_period),
            ("check_interval", f.check_interval),
            ("trip_attempts", s.request.attempts),
        ] {
            if v == 0 {
                return bad(key, "must be at least 1");
            }
        }
        if s.request.max_length_m < s.request.min_length_m {
            return bad("max_trip_m", "must not be below min_trip_m");
        }
        if s.corruption.scale_max < s.corruption.scale_min {
            return bad("scale_max", "must not be below scale_min");
        }
        Ok(())
    }

    /// Every key with its current value, in a form [`Config::parse`] reads
    /// back.
    pub fn to_text(&self) -> String {
        let mut copy = self.clone();
        let mut out = String::new();
        for key in KEYS {
            let value = copy.slot(key).expect("listed key").text();
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let cfg = Config::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, Config::default());
        assert_eq!(cfg.filter.particle_threshold, 100);
        assert_eq!(cfg.filter.weight_floor, 1.0 / 200.0);
        assert_eq!(cfg.filter.tsp.lag, 12);
    }

    #[test]
    fn overrides() {
        let cfg = Config::parse("lag = 3  # shorter\nresampling=false\nsigma_theta = 7.5\nrng_seed = 42\n").unwrap();
        assert_eq!(cfg.filter.tsp.lag, 3);
        assert!(!cfg.filter.resampling);
        assert_eq!(cfg.filter.noise.sigma_theta, 7.5);
        assert_eq!(cfg.filter.rng_seed, 42);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = Config::parse("lag = 3\nsigma_psi = 1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "sigma_psi".into()
            }
        );
        assert!(err.to_string().contains("sigma_psi"));
    }

    #[test]
    fn malformed_lines() {
        assert_eq!(Config::parse("lag 3").unwrap_err(), ConfigError::Syntax { line: 1 });
        assert!(matches!(Config::parse("lag = -1").unwrap_err(), ConfigError::BadValue { key, .. } if key == "lag"));
        assert!(matches!(Config::parse("c = nan").unwrap_err(), ConfigError::BadValue { .. }));
        assert!(matches!(
            Config::parse("lag = 1\nlag = 2").unwrap_err(),
            ConfigError::DuplicateKey { line: 2, .. }
        ));
    }

    #[test]
    fn validation() {
        assert_eq!(
            Config::parse("g2 = 1.0").unwrap_err(),
            ConfigError::Invalid {
                key: "g2",
                reason: "must exceed g1"
            }
        );
        assert!(matches!(Config::parse("sigma = 0").unwrap_err(), ConfigError::Invalid { key: "sigma", .. }));
        assert!(matches!(
            Config::parse("weight_floor = 1").unwrap_err(),
            ConfigError::Invalid { key: "weight_floor", .. }
        ));
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = Config::default();
        cfg.filter.merging = false;
        cfg.sim.driver.gain = 0.07;
        cfg.init_radius_m = 1000.0;
        let text = cfg.to_text();
        assert_eq!(text.lines().count(), KEYS.len());
        assert_eq!(Config::parse(&text).unwrap(), cfg);
    }
}
