//! Measurement functions built from consecutive speed samples and their
//! unnormalized densities.
//!
//! * lateral force `y1 = sqrt(a² + s²ω²)` scored by a trapezoid that is flat
//!   below `g1` and falls linearly to zero at `g2`;
//! * target-speed residual `y2 = a + c·s` scored by a Cauchy density located
//!   at `c·s̄`.

use core::f64::consts::PI;

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.806_65;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LateralParams {
    /// Soft bound, m/s².
    pub g1: f64,
    /// Hard bound, m/s².
    pub g2: f64,
}

impl Default for LateralParams {
    fn default() -> Self {
        Self {
            g1: 0.55 * GRAVITY,
            g2: 0.65 * GRAVITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetSpeedParams {
    /// Lag, in samples, between a speed pair and the target speed it is
    /// scored against.
    pub lag: usize,
    /// Approach gain, 1/s.
    pub c: f64,
    /// Cauchy scale, m/s².
    pub sigma: f64,
}

impl Default for TargetSpeedParams {
    fn default() -> Self {
        Self { lag: 12, c: 0.05, sigma: 1.5 }
    }
}

/// Quantities derived from one speed pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinematicSnapshot {
    pub a: f64,
    /// Yaw rate, rad/s.
    pub omega: f64,
    pub y1: f64,
    pub y2: f64,
}

impl KinematicSnapshot {
    pub fn new(s_k: f64, s_k1: f64, dt: f64, omega: f64, c: f64) -> Self {
        let a = accel(s_k, s_k1, dt);
        Self {
            a,
            omega,
            y1: libm::hypot(a, s_k * omega),
            y2: a + c * s_k,
        }
    }
}

/// Difference-quotient acceleration.
///
/// # Panics
/// If `dt` is not positive.
pub fn accel(s_k: f64, s_k1: f64, dt: f64) -> f64 {
    assert!(dt > 0.0, "sampling interval must be positive, got {dt}");
    (s_k1 - s_k) / dt
}

/// `sqrt(a² + s_k²·ω²)`, ω in rad/s.
pub fn lateral_force(s_k: f64, s_k1: f64, dt: f64, omega: f64) -> f64 {
    libm::hypot(accel(s_k, s_k1, dt), s_k * omega)
}

/// Trapezoid density of the lateral force, in `[0, 1]`.
pub fn lateral_density(y1: f64, params: &LateralParams) -> f64 {
    let LateralParams { g1, g2 } = *params;
    if y1 < g1 {
        1.0
    } else if y1 < g2 {
        (y1 - g2) / (g1 - g2)
    } else {
        0.0
    }
}

/// `a + c·s_k`.
pub fn target_speed_value(s_k: f64, s_k1: f64, dt: f64, c: f64) -> f64 {
    accel(s_k, s_k1, dt) + c * s_k
}

pub fn cauchy_density(y: f64, location: f64, scale: f64) -> f64 {
    debug_assert!(scale > 0.0);
    let z = (y - location) / scale;
    1.0 / (PI * scale * (1.0 + z * z))
}

/// Density of a target-speed residual given the target speed it is scored
/// against.
pub fn y2_density(y2: f64, sbar: f64, params: &TargetSpeedParams) -> f64 {
    cauchy_density(y2, params.c * sbar, params.sigma)
}
