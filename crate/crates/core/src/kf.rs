//! Per-particle Kalman sub-filters for yaw and target speed.
//!
//! Both models are linear with measurement-independent covariance
//! recursions, so every particle of a run carries the same covariance. The
//! filters are therefore split into a mean part (per particle) and a
//! covariance part (stored once); [`YawFilterState`] and
//! [`TargetSpeedState`] bundle the two for standalone use.
//!
//! The yaw filter works in degrees.

use crate::geo::wrap_angle;

/// Tolerance below the soft lateral bound used to close the feasible set
/// of the target-speed projection, m/s².
pub const PROJECTION_MARGIN: f64 = 1e-6;

/// Noise intensities of the two sub-filters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KfNoiseParams {
    /// Yaw-rate random walk, deg/s²/√Hz.
    pub sigma_omega: f64,
    /// Bearing measurement std, degrees.
    pub sigma_theta: f64,
    /// Target-speed random walk; increment variance is `dt·sigma_s1²`.
    pub sigma_s1: f64,
    /// Speed-limit measurement std, m/s.
    pub sigma_s2: f64,
}

impl Default for KfNoiseParams {
    fn default() -> Self {
        Self {
            sigma_omega: 5.0,
            sigma_theta: 15.0,
            sigma_s1: 0.5,
            sigma_s2: 10.0,
        }
    }
}

/// Symmetric 2×2 covariance of (theta, omega).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YawCov {
    pub tt: f64,
    pub to: f64,
    pub oo: f64,
}

impl YawCov {
    /// Initial covariance: `diag(sigma_theta², (20 °/s)²)`.
    pub fn initial(params: &KfNoiseParams) -> Self {
        Self {
            tt: params.sigma_theta * params.sigma_theta,
            to: 0.0,
            oo: 400.0,
        }
    }

    pub fn predict(self, dt: f64, params: &KfNoiseParams) -> Self {
        Self {
            tt: self.tt + 2.0 * dt * self.to + dt * dt * self.oo,
            to: self.to + dt * self.oo,
            oo: self.oo + dt * params.sigma_omega * params.sigma_omega,
        }
    }

    /// Kalman gain `(k_theta, k_omega)` for a bearing measurement.
    pub fn gain(self, params: &KfNoiseParams) -> (f64, f64) {
        let s = self.tt + params.sigma_theta * params.sigma_theta;
        (self.tt / s, self.to / s)
    }

    pub fn correct(self, params: &KfNoiseParams) -> Self {
        let (kt, ko) = self.gain(params);
        Self {
            tt: (1.0 - kt) * self.tt,
            to: (1.0 - kt) * self.to,
            oo: self.oo - ko * self.to,
        }
    }

    pub fn is_psd(self) -> bool {
        self.tt >= 0.0 && self.oo >= 0.0 && self.tt * self.oo - self.to * self.to >= -1e-9 * (self.tt * self.oo).max(1.0)
    }
}

/// Per-particle yaw estimate: angle (degrees, wrapped) and rate (deg/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YawMean {
    pub theta: f64,
    pub omega: f64,
}

impl YawMean {
    pub fn predict(self, dt: f64) -> Self {
        Self {
            theta: wrap_angle(self.theta + dt * self.omega),
            omega: self.omega,
        }
    }

    /// Applies a bearing measurement with a precomputed gain. The innovation
    /// is wrapped into `[-180, 180)`.
    pub fn correct(self, bearing_deg: f64, gain: (f64, f64)) -> Self {
        let innovation = wrap_angle(bearing_deg - self.theta);
        Self {
            theta: wrap_angle(self.theta + gain.0 * innovation),
            omega: self.omega + gain.1 * innovation,
        }
    }

    pub fn omega_rad(self) -> f64 {
        self.omega.to_radians()
    }
}

/// Yaw filter with its own covariance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct YawFilterState {
    pub theta: f64,
    pub omega: f64,
    pub cov: YawCov,
}

impl YawFilterState {
    pub fn new(theta: f64, omega: f64, cov: YawCov) -> Self {
        Self {
            theta: wrap_angle(theta),
            omega,
            cov,
        }
    }

    pub fn mean(&self) -> YawMean {
        YawMean {
            theta: self.theta,
            omega: self.omega,
        }
    }

    fn with(mean: YawMean, cov: YawCov) -> Self {
        Self {
            theta: mean.theta,
            omega: mean.omega,
            cov,
        }
    }
}

pub fn yaw_time_update(state: YawFilterState, dt: f64, params: &KfNoiseParams) -> YawFilterState {
    debug_assert!(dt > 0.0);
    YawFilterState::with(state.mean().predict(dt), state.cov.predict(dt, params))
}

pub fn yaw_meas_update(state: YawFilterState, link_bearing: f64, params: &KfNoiseParams) -> YawFilterState {
    let gain = state.cov.gain(params);
    YawFilterState::with(state.mean().correct(link_bearing, gain), state.cov.correct(params))
}

/// Target-speed estimate with its own variance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetSpeedState {
    pub sbar: f64,
    pub var: f64,
}

pub fn speed_predict_var(var: f64, dt: f64, params: &KfNoiseParams) -> f64 {
    var + dt * params.sigma_s1 * params.sigma_s1
}

pub fn speed_gain(var: f64, params: &KfNoiseParams) -> f64 {
    var / (var + params.sigma_s2 * params.sigma_s2)
}

pub fn speed_time_update(state: TargetSpeedState, dt: f64, params: &KfNoiseParams) -> TargetSpeedState {
    debug_assert!(dt >= 0.0);
    TargetSpeedState {
        sbar: state.sbar,
        var: speed_predict_var(state.var, dt, params),
    }
}

pub fn speed_meas_update(state: TargetSpeedState, speed_limit: f64, params: &KfNoiseParams) -> TargetSpeedState {
    let k = speed_gain(state.var, params);
    TargetSpeedState {
        sbar: state.sbar + k * (speed_limit - state.sbar),
        var: (1.0 - k) * state.var,
    }
}

/// Result of projecting a target speed onto the lateral-force feasible set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub speed: f64,
    /// Set when `|a|` alone already exceeds the bound, so no speed is
    /// feasible; `speed` is then 0.
    pub infeasible: bool,
}

/// Closest `s ≥ 0` to `sbar` with `sqrt(a² + s²ω²) ≤ g1 − PROJECTION_MARGIN`.
/// `omega` in rad/s.
pub fn project_target_speed(sbar: f64, a: f64, omega: f64, g1: f64) -> Projection {
    let bound = g1 - PROJECTION_MARGIN;
    if libm::fabs(a) >= bound {
        return Projection { speed: 0.0, infeasible: true };
    }
    let mut speed = sbar.max(0.0);
    if omega != 0.0 {
        let s_max = libm::sqrt(bound * bound - a * a) / libm::fabs(omega);
        speed = speed.min(s_max);
    }
    Projection { speed, infeasible: false }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const P: KfNoiseParams = KfNoiseParams {
        sigma_omega: 5.0,
        sigma_theta: 15.0,
        sigma_s1: 0.5,
        sigma_s2: 10.0,
    };

    fn yaw(theta: f64, omega: f64) -> YawFilterState {
        YawFilterState::new(theta, omega, YawCov::initial(&P))
    }

    #[test]
    fn zero_rate_keeps_angle() {
        let s = yaw_time_update(yaw(42.0, 0.0), 1.0, &P);
        assert_eq!(s.theta, 42.0);
    }

    #[test]
    fn time_update_wraps() {
        let s = yaw_time_update(yaw(170.0, 20.0), 1.0, &P);
        assert_abs_diff_eq!(s.theta, -170.0, epsilon = 1e-12);
        assert_eq!(s.omega, 20.0);
    }

    #[test]
    fn covariance_recursion_matches_matrix_product() {
        // P <- F P F^T + Q written with explicit matrix products
        let mut cov = YawCov { tt: 1.0, to: 0.0, oo: 1.0 };
        let mut m = [[1.0f64, 0.0], [0.0, 1.0]];
        let dt = 1.0;
        for _ in 0..100 {
            cov = cov.predict(dt, &P);
            let f = [[1.0, dt], [0.0, 1.0]];
            let mut fp = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    fp[i][j] = (0..2).map(|k| f[i][k] * m[k][j]).sum();
                }
            }
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (0..2).map(|k| fp[i][k] * f[j][k]).sum();
                }
            }
            next[1][1] += dt * 25.0;
            m = next;
        }
        assert_abs_diff_eq!(cov.tt, m[0][0], epsilon = 1e-9 * m[0][0]);
        assert_abs_diff_eq!(cov.to, m[0][1], epsilon = 1e-9 * m[0][1]);
        assert_abs_diff_eq!(cov.oo, m[1][1], epsilon = 1e-9 * m[1][1]);
        // closed forms: oo = 1 + 25n, to = sum_{j=1..n} oo_{j-1}
        assert_abs_diff_eq!(cov.oo, 2501.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_innovation_shrinks_variance_only() {
        let s = yaw(30.0, 0.0);
        let u = yaw_meas_update(s, 30.0, &P);
        assert_eq!(u.theta, 30.0);
        assert_eq!(u.omega, 0.0);
        assert!(u.cov.tt < s.cov.tt);
    }

    #[test]
    fn innovation_takes_short_way_round() {
        let s = yaw_time_update(yaw(179.0, 0.0), 1.0, &P);
        let (kt, _) = s.cov.gain(&P);
        let u = yaw_meas_update(s, -179.0, &P);
        assert_abs_diff_eq!(wrap_angle(u.theta - 179.0), 2.0 * kt, epsilon = 1e-9);
        assert!(u.omega > 0.0);
    }

    #[test]
    fn speed_random_walk_variance() {
        let s = TargetSpeedState { sbar: 10.0, var: 1.0 };
        let u = speed_time_update(s, 1.0, &P);
        assert_abs_diff_eq!(u.var - s.var, 0.25, epsilon = 1e-15);
        assert_eq!(u.sbar, 10.0);
        assert_eq!(speed_time_update(s, 0.0, &P), s);
        let mut many = s;
        for _ in 0..10 {
            many = speed_time_update(many, 0.3, &P);
        }
        assert_abs_diff_eq!(many.var, speed_time_update(s, 3.0, &P).var, epsilon = 1e-12);
    }

    #[test]
    fn speed_measurement_closed_form() {
        let u = speed_meas_update(TargetSpeedState { sbar: 20.0, var: 4.0 }, 30.0, &P);
        assert_abs_diff_eq!(u.sbar, 20.0 + 4.0 / 104.0 * 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.sbar, 20.385, epsilon = 1e-3);
        let same = speed_meas_update(TargetSpeedState { sbar: 30.0, var: 4.0 }, 30.0, &P);
        assert_eq!(same.sbar, 30.0);
        let flat = speed_meas_update(TargetSpeedState { sbar: 5.0, var: 1e12 }, 30.0, &P);
        assert_abs_diff_eq!(flat.sbar, 30.0, epsilon = 1e-6);
    }

    #[test]
    fn projection_cases() {
        let free = project_target_speed(17.0, 1.0, 0.0, 5.3955);
        assert_eq!(
            free,
            Projection {
                speed: 17.0,
                infeasible: false
            }
        );
        let capped = project_target_speed(30.0, 0.0, 0.2, 5.3955);
        assert_abs_diff_eq!(capped.speed, 5.3955 / 0.2, epsilon = 1e-5);
        assert!(capped.speed < 26.9775);
        let feasible = project_target_speed(10.0, 0.0, 0.2, 5.3955);
        assert_eq!(feasible.speed, 10.0);
        let empty = project_target_speed(10.0, 6.0, 0.1, 5.3955);
        assert_eq!(empty, Projection { speed: 0.0, infeasible: true });
    }

    proptest! {
        #[test]
        fn covariances_stay_psd(steps in proptest::collection::vec((0.05f64..5.0, proptest::bool::ANY), 1..200)) {
            let mut cov = YawCov::initial(&P);
            let mut var = P.sigma_s2 * P.sigma_s2;
            for (dt, measure) in steps {
                cov = cov.predict(dt, &P);
                var = speed_predict_var(var, dt, &P);
                if measure {
                    cov = cov.correct(&P);
                    var *= 1.0 - speed_gain(var, &P);
                }
                prop_assert!(cov.is_psd());
                prop_assert!(var > 0.0);
            }
        }

        #[test]
        fn projection_satisfies_constraint(sbar in -5.0f64..60.0, a in -8.0f64..8.0, omega in -1.0f64..1.0) {
            let g1 = 0.55 * 9.80665;
            let p = project_target_speed(sbar, a, omega, g1);
            if p.infeasible {
                prop_assert!(a.abs() >= g1 - PROJECTION_MARGIN);
            } else {
                prop_assert!(p.speed >= 0.0);
                let force = (a * a + p.speed * p.speed * omega * omega).sqrt();
                prop_assert!(force <= g1 - PROJECTION_MARGIN + 1e-12);
                if sbar >= 0.0 && (a * a + sbar * sbar * omega * omega).sqrt() <= g1 - PROJECTION_MARGIN {
                    prop_assert_eq!(p.speed, sbar);
                }
            }
        }
    }
}
