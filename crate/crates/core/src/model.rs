//! Closed-form stride model for a C-legged robot on a granular slope.
//!
//! One step (half a stride period) is split at the anchoring time `t1`:
//! before it the body slides downslope under gravity while the leg sinks
//! towards the shear-equilibrium depth; after it the leg pushes against
//! locally solidified sand and the body accelerates upslope.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Standard gravity, used when a config does not override it.
pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid robot config: {0}")]
    InvalidRobot(String),
    #[error("slope angle {degrees} deg outside [0, 90)")]
    InvalidSlope { degrees: f64 },
    #[error("invalid shear strength profile: {0}")]
    InvalidProfile(String),
    #[error("invalid terrain strength: {0}")]
    InvalidTerrain(String),
    #[error("depth {depth} m is beyond the reachable leg depth {max_depth} m")]
    GeometricInfeasible { depth: f64, max_depth: f64 },
    #[error("{0}")]
    Domain(String),
}

/// Hexapod geometry, mass and gait timing. All quantities SI.
///
/// Deserialization goes through unit-suffixed keys and validates the
/// invariants, so a deserialized config is always usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RobotConfigRepr", into = "RobotConfigRepr")]
pub struct RobotConfig {
    pub mass: f64,
    pub leg_radius: f64,
    pub hip_height: f64,
    pub leg_width: f64,
    pub omega: f64,
    pub n_stance: u32,
    /// Characteristic elastic response time of the sand.
    pub delta_t: f64,
    pub stride_period: f64,
    /// Effective normal contact area of one leg.
    pub contact_area: f64,
    pub gravity: f64,
    /// Measured level-sand step length; when set it replaces the
    /// rotary-walking step derived from the normal-equilibrium depth.
    pub level_step_override: Option<f64>,
}

impl RobotConfig {
    /// The 350 g hexapod with 4 cm C-legs. Hip height and contact area are
    /// not measured values; they default to `h = R` and `A = W * W`.
    pub fn reference_robot() -> Self {
        RobotConfig {
            mass: 0.35,
            leg_radius: 0.04,
            hip_height: 0.04,
            leg_width: 0.01,
            omega: 2.0 * std::f64::consts::PI,
            n_stance: 3,
            delta_t: 0.2,
            stride_period: 1.0,
            contact_area: 1e-4,
            gravity: STANDARD_GRAVITY,
            level_step_override: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let positive = [
            ("mass", self.mass),
            ("leg_radius", self.leg_radius),
            ("hip_height", self.hip_height),
            ("leg_width", self.leg_width),
            ("omega", self.omega),
            ("delta_t", self.delta_t),
            ("stride_period", self.stride_period),
            ("contact_area", self.contact_area),
            ("gravity", self.gravity),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidRobot(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if self.n_stance < 1 {
            return Err(ModelError::InvalidRobot("n_stance must be >= 1".into()));
        }
        if self.hip_height > 2.0 * self.leg_radius {
            return Err(ModelError::InvalidRobot(format!(
                "hip_height {} exceeds twice the leg radius {}",
                self.hip_height, self.leg_radius
            )));
        }
        if let Some(s) = self.level_step_override {
            if !(s.is_finite() && s >= 0.0) {
                return Err(ModelError::InvalidRobot(format!(
                    "level_step_m must be finite and >= 0, got {s}"
                )));
            }
        }
        Ok(())
    }

    /// Touchdown angle `phi0 = asin((h - R) / R)`.
    pub fn touchdown_angle(&self) -> f64 {
        ((self.hip_height - self.leg_radius) / self.leg_radius)
            .clamp(-1.0, 1.0)
            .asin()
    }

    /// Deepest point the leg tip reaches below the surface, `2R - h`.
    pub fn max_depth(&self) -> f64 {
        2.0 * self.leg_radius - self.hip_height
    }

    /// Time after touchdown at which the leg reaches `max_depth`.
    pub fn time_to_max_depth(&self) -> f64 {
        (FRAC_PI_2 - self.touchdown_angle()) / self.omega
    }

    /// Duration of one step: half the stride period.
    pub fn step_period(&self) -> f64 {
        self.stride_period / 2.0
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotConfigRepr {
    mass_kg: f64,
    leg_radius_m: f64,
    hip_height_m: f64,
    leg_width_m: f64,
    omega_rad_s: f64,
    n_stance: u32,
    delta_t_s: f64,
    stride_period_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    contact_area_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gravity_m_s2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level_step_m: Option<f64>,
    #[serde(rename = "_provenance", default, skip_serializing)]
    _provenance: Option<serde_json::Value>,
}

impl TryFrom<RobotConfigRepr> for RobotConfig {
    type Error = ModelError;

    fn try_from(r: RobotConfigRepr) -> Result<Self, Self::Error> {
        let robot = RobotConfig {
            mass: r.mass_kg,
            leg_radius: r.leg_radius_m,
            hip_height: r.hip_height_m,
            leg_width: r.leg_width_m,
            omega: r.omega_rad_s,
            n_stance: r.n_stance,
            delta_t: r.delta_t_s,
            stride_period: r.stride_period_s,
            contact_area: r.contact_area_m2.unwrap_or(r.leg_width_m * r.leg_width_m),
            gravity: r.gravity_m_s2.unwrap_or(STANDARD_GRAVITY),
            level_step_override: r.level_step_m,
        };
        robot.validate()?;
        Ok(robot)
    }
}

impl From<RobotConfig> for RobotConfigRepr {
    fn from(r: RobotConfig) -> Self {
        RobotConfigRepr {
            mass_kg: r.mass,
            leg_radius_m: r.leg_radius,
            hip_height_m: r.hip_height,
            leg_width_m: r.leg_width,
            omega_rad_s: r.omega,
            n_stance: r.n_stance,
            delta_t_s: r.delta_t,
            stride_period_s: r.stride_period,
            contact_area_m2: Some(r.contact_area),
            gravity_m_s2: Some(r.gravity),
            level_step_m: r.level_step_override,
            _provenance: None,
        }
    }
}

/// Surface inclination, stored in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SlopeAngle(f64);

impl SlopeAngle {
    pub const LEVEL: SlopeAngle = SlopeAngle(0.0);

    pub fn from_radians(theta: f64) -> Result<Self, ModelError> {
        if theta.is_finite() && (0.0..FRAC_PI_2).contains(&theta) {
            Ok(SlopeAngle(theta))
        } else {
            Err(ModelError::InvalidSlope {
                degrees: theta.to_degrees(),
            })
        }
    }

    pub fn from_degrees(degrees: f64) -> Result<Self, ModelError> {
        Self::from_radians(degrees.to_radians()).map_err(|_| ModelError::InvalidSlope { degrees })
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

impl fmt::Display for SlopeAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} deg", self.degrees())
    }
}

/// Slope-dependent shear strength `k_s(theta)`, piecewise-linear between
/// samples and clamped to the end samples outside them.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearStrengthProfile {
    /// (theta rad, k_s N/m^3), strictly increasing in theta.
    samples: Vec<(f64, f64)>,
}

/// Result of a profile evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileLookup {
    pub k_s: f64,
    /// Query angle was outside the sampled range and the value was clamped.
    pub clamped: bool,
}

impl ShearStrengthProfile {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self, ModelError> {
        if samples.is_empty() {
            return Err(ModelError::InvalidProfile("no samples".into()));
        }
        for &(theta, k_s) in &samples {
            if !theta.is_finite() || !(k_s.is_finite() && k_s > 0.0) {
                return Err(ModelError::InvalidProfile(format!(
                    "sample ({} deg, {k_s}) must have finite angle and k_s > 0",
                    theta.to_degrees()
                )));
            }
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ModelError::InvalidProfile(
                "angles must be strictly increasing".into(),
            ));
        }
        Ok(ShearStrengthProfile { samples })
    }

    /// Profile with angles given in degrees.
    pub fn from_degrees(samples: &[(f64, f64)]) -> Result<Self, ModelError> {
        Self::new(samples.iter().map(|&(d, k)| (d.to_radians(), k)).collect())
    }

    /// Slope-independent shear strength.
    pub fn constant(k_s: f64) -> Result<Self, ModelError> {
        Self::new(vec![(0.0, k_s)])
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn max_angle(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn lookup(&self, theta: SlopeAngle) -> ProfileLookup {
        let t = theta.radians();
        let first = self.samples[0];
        let last = self.samples[self.samples.len() - 1];
        if t <= first.0 {
            return ProfileLookup {
                k_s: first.1,
                clamped: t < first.0,
            };
        }
        if t >= last.0 {
            return ProfileLookup {
                k_s: last.1,
                clamped: t > last.0,
            };
        }
        // first.0 < t < last.0, so an upper neighbour exists past index 0
        let hi = self.samples.partition_point(|s| s.0 <= t);
        let (t0, k0) = self.samples[hi - 1];
        let (t1, k1) = self.samples[hi];
        let frac = (t - t0) / (t1 - t0);
        ProfileLookup {
            k_s: k0 + frac * (k1 - k0),
            clamped: false,
        }
    }

    pub fn k_s_at(&self, theta: SlopeAngle) -> f64 {
        self.lookup(theta).k_s
    }
}

/// Terrain strength: normal penetration resistance plus shear profile.
/// Serializes to the calibration interchange JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TerrainStrengthRepr", into = "TerrainStrengthRepr")]
pub struct TerrainStrength {
    pub k_n: f64,
    pub shear_profile: ShearStrengthProfile,
}

impl TerrainStrength {
    pub fn new(k_n: f64, shear_profile: ShearStrengthProfile) -> Result<Self, ModelError> {
        if !(k_n.is_finite() && k_n > 0.0) {
            return Err(ModelError::InvalidTerrain(format!(
                "k_n must be > 0, got {k_n}"
            )));
        }
        Ok(TerrainStrength { k_n, shear_profile })
    }

    /// Terrain with a slope-independent shear strength.
    pub fn uniform(k_n: f64, k_s: f64) -> Result<Self, ModelError> {
        Self::new(k_n, ShearStrengthProfile::constant(k_s)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProfilePoint {
    theta_deg: f64,
    k_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TerrainStrengthRepr {
    k_n: f64,
    k_s_profile: Vec<ProfilePoint>,
}

impl TryFrom<TerrainStrengthRepr> for TerrainStrength {
    type Error = ModelError;

    fn try_from(r: TerrainStrengthRepr) -> Result<Self, Self::Error> {
        let samples: Vec<_> = r.k_s_profile.iter().map(|p| (p.theta_deg, p.k_s)).collect();
        TerrainStrength::new(r.k_n, ShearStrengthProfile::from_degrees(&samples)?)
    }
}

impl From<TerrainStrength> for TerrainStrengthRepr {
    fn from(t: TerrainStrength) -> Self {
        TerrainStrengthRepr {
            k_n: t.k_n,
            k_s_profile: t
                .shear_profile
                .samples
                .iter()
                .map(|&(theta, k_s)| ProfilePoint {
                    theta_deg: theta.to_degrees(),
                    k_s,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegimeLabel {
    Success,
    Metastable,
    SlippageFailure,
    SinkageFailure,
}

impl RegimeLabel {
    pub const ALL: [RegimeLabel; 4] = [
        RegimeLabel::Success,
        RegimeLabel::Metastable,
        RegimeLabel::SlippageFailure,
        RegimeLabel::SinkageFailure,
    ];

    /// Integer code used in exported grids.
    pub fn code(self) -> u8 {
        match self {
            RegimeLabel::Success => 0,
            RegimeLabel::Metastable => 1,
            RegimeLabel::SlippageFailure => 2,
            RegimeLabel::SinkageFailure => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RegimeLabel::Success => "Success",
            RegimeLabel::Metastable => "Metastable",
            RegimeLabel::SlippageFailure => "SlippageFailure",
            RegimeLabel::SinkageFailure => "SinkageFailure",
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(
            self,
            RegimeLabel::SlippageFailure | RegimeLabel::SinkageFailure
        )
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-step displacement breakdown, available whenever the leg finds a pivot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepKinematics {
    /// Anchoring time; equals the step period when anchoring never happens.
    pub t1: f64,
    /// Whether the leg reached shear equilibrium within the step.
    pub anchored: bool,
    pub s_star: f64,
    pub s1: f64,
    pub s2: f64,
    pub s: f64,
    pub v_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrideOutcome {
    pub theta: SlopeAngle,
    pub k_s: f64,
    pub d_s: f64,
    pub d_n: f64,
    /// `None` when the leg sinks past its pivot geometry.
    pub kinematics: Option<StepKinematics>,
    pub regime: RegimeLabel,
    /// `k_s` came from a clamped profile evaluation outside its range.
    pub extrapolated: bool,
}

impl StrideOutcome {
    /// Net step length, or negative infinity when undefined.
    pub fn step_length(&self) -> f64 {
        self.kinematics.map_or(f64::NEG_INFINITY, |k| k.s)
    }

    pub fn is_feasible(&self) -> bool {
        self.kinematics.is_some()
    }
}

/// Average downslope shear load carried by one stance leg.
pub fn applied_shear_load(robot: &RobotConfig, theta: SlopeAngle) -> f64 {
    robot.mass
        * (robot.gravity * theta.radians().sin() + robot.leg_radius * robot.omega / robot.delta_t)
        / f64::from(robot.n_stance)
}

/// Depth at which `k_s * W * d^2` balances the applied shear load.
pub fn shear_equilibrium_depth(robot: &RobotConfig, theta: SlopeAngle, k_s: f64) -> f64 {
    (applied_shear_load(robot, theta) / (k_s * robot.leg_width)).sqrt()
}

/// Leg tip depth below the surface `t` seconds after touchdown.
pub fn penetration_depth(robot: &RobotConfig, t: f64) -> Result<f64, ModelError> {
    let t_max = robot.time_to_max_depth();
    if !(0.0..=t_max).contains(&t) {
        return Err(ModelError::Domain(format!(
            "time {t} s outside the penetration interval [0, {t_max}] s"
        )));
    }
    let r = robot.leg_radius;
    let depth = r * (robot.omega * t + robot.touchdown_angle()).sin() + r - robot.hip_height;
    Ok(depth.max(0.0))
}

/// Time after touchdown at which the leg reaches depth `d_s`.
pub fn anchoring_time(robot: &RobotConfig, d_s: f64) -> Result<f64, ModelError> {
    if !(d_s >= 0.0) {
        return Err(ModelError::Domain(format!("depth must be >= 0, got {d_s}")));
    }
    let max_depth = robot.max_depth();
    if d_s > max_depth {
        return Err(ModelError::GeometricInfeasible {
            depth: d_s,
            max_depth,
        });
    }
    let arg = ((d_s + robot.hip_height) / robot.leg_radius - 1.0).clamp(-1.0, 1.0);
    Ok(((arg.asin() - robot.touchdown_angle()) / robot.omega).max(0.0))
}

/// Downslope slip accumulated before anchoring: `g sin(theta) t1^2 / 2`.
pub fn slip_displacement(theta: SlopeAngle, t1: f64, gravity: f64) -> f64 {
    0.5 * gravity * theta.radians().sin() * t1 * t1
}

/// Rotary-walking step length `2 sqrt(R^2 - (d_n + h - R)^2)`.
pub fn level_step_length(robot: &RobotConfig, d_n: f64) -> Result<f64, ModelError> {
    if !(d_n >= 0.0) {
        return Err(ModelError::Domain(format!("depth must be >= 0, got {d_n}")));
    }
    let max_depth = robot.max_depth();
    if d_n > max_depth {
        return Err(ModelError::GeometricInfeasible {
            depth: d_n,
            max_depth,
        });
    }
    let r = robot.leg_radius;
    let offset = d_n + robot.hip_height - r;
    Ok(2.0 * (r * r - offset * offset).max(0.0).sqrt())
}

/// Depth at which `k_n * d * A` supports one leg's share of the weight
/// normal to the surface.
pub fn normal_equilibrium_depth(robot: &RobotConfig, theta: SlopeAngle, k_n: f64) -> f64 {
    let load = robot.mass * robot.gravity * theta.radians().cos() / f64::from(robot.n_stance);
    load / (k_n * robot.contact_area)
}

/// Upslope displacement during propulsion after anchoring at `t1`.
/// Anchoring later than the step period yields no propulsion.
pub fn propulsion_displacement(
    robot: &RobotConfig,
    theta: SlopeAngle,
    t1: f64,
    s_star: f64,
) -> f64 {
    let half = robot.step_period();
    if t1 > half {
        return 0.0;
    }
    let remaining = half - t1;
    let frac = remaining / half;
    s_star * frac * frac - robot.gravity * theta.radians().sin() * t1 * remaining
}

/// Expanded net-step expression
/// `-g sin(theta) t1 (T - t1) / 2 + s* ((T/2 - t1) / (T/2))^2`.
pub fn net_step_closed_form(robot: &RobotConfig, theta: SlopeAngle, t1: f64, s_star: f64) -> f64 {
    let period = robot.stride_period;
    let half = robot.step_period();
    let frac = (half - t1) / half;
    -0.5 * robot.gravity * theta.radians().sin() * t1 * (period - t1) + s_star * frac * frac
}

/// Regime for a net step length. Geometric infeasibility wins; `s = 0`
/// counts as slippage and `s = R` as success.
pub fn classify_outcome(s: f64, geometric_feasible: bool, robot: &RobotConfig) -> RegimeLabel {
    if !geometric_feasible {
        RegimeLabel::SinkageFailure
    } else if !(s > 0.0) {
        RegimeLabel::SlippageFailure
    } else if s < robot.leg_radius {
        RegimeLabel::Metastable
    } else {
        RegimeLabel::Success
    }
}

/// Full step prediction for one robot, terrain and slope.
///
/// `robot` is assumed validated. A normal-equilibrium depth past the leg's
/// reach is reported as `SinkageFailure`. A shear-equilibrium depth past
/// reach, or anchoring later than the step period, means the leg never
/// anchors: the body slips for the whole step and propulsion is zero.
pub fn net_step(
    robot: &RobotConfig,
    terrain: &TerrainStrength,
    theta: SlopeAngle,
) -> StrideOutcome {
    let lookup = terrain.shear_profile.lookup(theta);
    let mut outcome = net_step_at(robot, terrain.k_n, lookup.k_s, theta);
    outcome.extrapolated = lookup.clamped && theta.radians() > terrain.shear_profile.max_angle();
    outcome
}

/// [`net_step`] with the shear strength already evaluated at `theta`.
pub fn net_step_at(robot: &RobotConfig, k_n: f64, k_s: f64, theta: SlopeAngle) -> StrideOutcome {
    let d_s = shear_equilibrium_depth(robot, theta, k_s);
    let d_n = normal_equilibrium_depth(robot, theta, k_n);
    let mut outcome = StrideOutcome {
        theta,
        k_s,
        d_s,
        d_n,
        kinematics: None,
        regime: RegimeLabel::SinkageFailure,
        extrapolated: false,
    };

    let Ok(derived_step) = level_step_length(robot, d_n) else {
        return outcome;
    };
    let s_star = robot.level_step_override.unwrap_or(derived_step);

    let half = robot.step_period();
    let (t1, anchored) = match anchoring_time(robot, d_s) {
        Ok(t) if t <= half => (t, true),
        _ => (half, false),
    };
    let s1 = slip_displacement(theta, t1, robot.gravity);
    let s2 = if anchored {
        propulsion_displacement(robot, theta, t1, s_star)
    } else {
        0.0
    };
    let s = s2 - s1;
    outcome.kinematics = Some(StepKinematics {
        t1,
        anchored,
        s_star,
        s1,
        s2,
        s,
        v_bar: s / half,
    });
    outcome.regime = classify_outcome(s, true, robot);
    outcome
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub v: f64,
}

/// Piecewise-linear body speed over one step: uniform downslope
/// acceleration until `t1`, then uniform upslope acceleration `2 s* / (T/2)^2`.
pub fn velocity_trace(
    robot: &RobotConfig,
    outcome: &StrideOutcome,
    dt: f64,
) -> Result<Vec<TracePoint>, ModelError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ModelError::Domain(format!("dt must be > 0, got {dt}")));
    }
    let kin = outcome
        .kinematics
        .ok_or_else(|| ModelError::Domain("no velocity trace for a sinkage failure".into()))?;
    let half = robot.step_period();
    let slide = robot.gravity * outcome.theta.radians().sin();
    let accel = 2.0 * kin.s_star / (half * half);
    let v1 = -slide * kin.t1;
    let speed = |t: f64| {
        if t <= kin.t1 || !kin.anchored {
            -slide * t
        } else {
            v1 + accel * (t - kin.t1)
        }
    };

    let steps = (half / dt).ceil() as usize;
    let mut trace: Vec<TracePoint> = (0..steps)
        .map(|i| i as f64 * dt)
        .take_while(|&t| t < half)
        .map(|t| TracePoint { t, v: speed(t) })
        .collect();
    trace.push(TracePoint {
        t: half,
        v: speed(half),
    });
    Ok(trace)
}

/// Trapezoidal integral of a trace.
pub fn integrate_trace(trace: &[TracePoint]) -> f64 {
    trace
        .windows(2)
        .map(|w| 0.5 * (w[0].v + w[1].v) * (w[1].t - w[0].t))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn deg(d: f64) -> SlopeAngle {
        SlopeAngle::from_degrees(d).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn applied_load_matches_hand_values() {
        let robot = RobotConfig::reference_robot();
        // 0.35 * (0.04 * 2pi / 0.2) / 3
        close(applied_shear_load(&robot, deg(0.0)), 0.146_607_657, 1e-8);
        // 0.35 * (9.81 sin 24 + 1.256637) / 3
        close(applied_shear_load(&robot, deg(24.0)), 0.612_126, 1e-5);
        let heavy = RobotConfig {
            mass: 0.7,
            ..robot.clone()
        };
        close(
            applied_shear_load(&heavy, deg(13.0)),
            2.0 * applied_shear_load(&robot, deg(13.0)),
            1e-15,
        );
    }

    #[test]
    fn shear_depth_examples() {
        let robot = RobotConfig::reference_robot();
        let d = shear_equilibrium_depth(&robot, deg(24.0), 2.0e5);
        close(d, (0.612_126_f64 / 2000.0).sqrt(), 1e-6);
        close(d, 0.0175, 5e-5);
        let quarter = shear_equilibrium_depth(&robot, deg(24.0), 8.0e5);
        close(quarter, d / 2.0, 1e-15);
        assert!(shear_equilibrium_depth(&robot, deg(0.0), 2e5) < d);
    }

    #[test]
    fn penetration_depth_examples() {
        let robot = RobotConfig::reference_robot();
        close(penetration_depth(&robot, 0.0).unwrap(), 0.0, 1e-15);
        close(penetration_depth(&robot, 0.25).unwrap(), 0.04, 1e-15);
        assert!(penetration_depth(&robot, 0.3).is_err());
        assert!(penetration_depth(&robot, -0.01).is_err());

        let tall = RobotConfig {
            hip_height: 0.06,
            ..robot
        };
        close(tall.touchdown_angle(), PI / 6.0, 1e-15);
        close(penetration_depth(&tall, 0.0).unwrap(), 0.0, 1e-15);
    }

    #[test]
    fn anchoring_time_examples() {
        let robot = RobotConfig::reference_robot();
        close(anchoring_time(&robot, 0.02).unwrap(), 1.0 / 12.0, 1e-15);
        assert_eq!(anchoring_time(&robot, 0.0).unwrap(), 0.0);
        close(anchoring_time(&robot, 0.04).unwrap(), 0.25, 1e-15);
        assert!(matches!(
            anchoring_time(&robot, 0.041),
            Err(ModelError::GeometricInfeasible { .. })
        ));
    }

    #[test]
    fn anchoring_time_at_max_depth_with_offset_hip() {
        let robot = RobotConfig {
            hip_height: 0.06,
            ..RobotConfig::reference_robot()
        };
        let t = anchoring_time(&robot, robot.max_depth()).unwrap();
        close(t, 0.25 - (PI / 6.0) / (2.0 * PI), 1e-15);
    }

    #[test]
    fn slip_examples() {
        assert_eq!(slip_displacement(deg(0.0), 0.2, 9.81), 0.0);
        close(slip_displacement(deg(24.0), 0.1, 9.81), 0.019_950, 1e-6);
        let a = slip_displacement(deg(17.0), 0.07, 9.81);
        close(slip_displacement(deg(17.0), 0.14, 9.81), 4.0 * a, 1e-15);
    }

    #[test]
    fn level_step_examples() {
        let robot = RobotConfig::reference_robot();
        close(level_step_length(&robot, 0.0).unwrap(), 0.08, 1e-15);
        close(
            level_step_length(&robot, 0.02).unwrap(),
            0.069_282_032,
            1e-9,
        );
        assert!(matches!(
            level_step_length(&robot, 0.05),
            Err(ModelError::GeometricInfeasible { .. })
        ));
    }

    #[test]
    fn normal_depth_examples() {
        let robot = RobotConfig::reference_robot();
        let d0 = normal_equilibrium_depth(&robot, deg(0.0), 3e5);
        close(d0, 0.35 * 9.81 / 3.0 / 30.0, 1e-15);
        close(d0, 0.03815, 1e-5);
        close(
            normal_equilibrium_depth(&robot, deg(0.0), 6e5),
            d0 / 2.0,
            1e-15,
        );
        close(
            normal_equilibrium_depth(&robot, deg(24.0), 3e5),
            d0 * 24f64.to_radians().cos(),
            1e-15,
        );
    }

    #[test]
    fn propulsion_examples() {
        let robot = RobotConfig::reference_robot();
        close(
            propulsion_displacement(&robot, deg(0.0), 0.0, 0.0785),
            0.0785,
            1e-15,
        );
        close(
            propulsion_displacement(&robot, deg(24.0), 0.1, 0.0785),
            0.0785 * 0.64 - 9.81 * 24f64.to_radians().sin() * 0.04,
            1e-15,
        );
        close(
            propulsion_displacement(&robot, deg(24.0), 0.1, 0.0785),
            -0.1094,
            1e-4,
        );
        close(
            propulsion_displacement(&robot, deg(0.0), 0.25, 0.0785),
            0.019_625,
            1e-12,
        );
        assert_eq!(propulsion_displacement(&robot, deg(10.0), 0.6, 0.0785), 0.0);
    }

    #[test]
    fn classification_thresholds() {
        let robot = RobotConfig::reference_robot();
        assert_eq!(
            classify_outcome(-0.01, true, &robot),
            RegimeLabel::SlippageFailure
        );
        assert_eq!(
            classify_outcome(0.0, true, &robot),
            RegimeLabel::SlippageFailure
        );
        assert_eq!(
            classify_outcome(0.02, true, &robot),
            RegimeLabel::Metastable
        );
        assert_eq!(classify_outcome(0.04, true, &robot), RegimeLabel::Success);
        assert_eq!(
            classify_outcome(1.0, false, &robot),
            RegimeLabel::SinkageFailure
        );
        assert_eq!(
            classify_outcome(f64::NAN, true, &robot),
            RegimeLabel::SlippageFailure
        );
    }

    #[test]
    fn net_step_level_instant_anchoring() {
        // k_s so large that d_s is effectively zero
        let robot = RobotConfig {
            level_step_override: Some(0.0785),
            ..RobotConfig::reference_robot()
        };
        let terrain = TerrainStrength::uniform(1e7, 1e30).unwrap();
        let out = net_step(&robot, &terrain, SlopeAngle::LEVEL);
        let k = out.kinematics.unwrap();
        close(k.t1, 0.0, 1e-9);
        close(k.s, 0.0785, 1e-9);
        close(k.v_bar, 0.0785 / 0.5, 1e-8);
        assert_eq!(out.regime, RegimeLabel::Success);
    }

    #[test]
    fn net_step_composed_slip_example() {
        // choose k_s so that t1 = 0.1 s at 24 deg: d(0.1) = R sin(0.2 pi)
        let robot = RobotConfig {
            level_step_override: Some(0.0785),
            ..RobotConfig::reference_robot()
        };
        let theta = deg(24.0);
        let d_target = 0.04 * (0.2 * PI).sin();
        let k_s = applied_shear_load(&robot, theta) / (robot.leg_width * d_target * d_target);
        let terrain = TerrainStrength::uniform(1e7, k_s).unwrap();
        let out = net_step(&robot, &terrain, theta);
        let k = out.kinematics.unwrap();
        close(k.t1, 0.1, 1e-12);
        close(k.s1, 0.019_950, 1e-6);
        close(k.s2, -0.1094, 1e-4);
        close(k.s, -0.1294, 1e-4);
        assert_eq!(out.regime, RegimeLabel::SlippageFailure);
    }

    #[test]
    fn sinkage_is_reported_not_raised() {
        let robot = RobotConfig::reference_robot();
        let terrain = TerrainStrength::uniform(1e4, 1e6).unwrap();
        let out = net_step(&robot, &terrain, deg(10.0));
        assert_eq!(out.regime, RegimeLabel::SinkageFailure);
        assert!(out.kinematics.is_none());
        assert_eq!(out.step_length(), f64::NEG_INFINITY);
    }

    #[test]
    fn unreachable_shear_depth_slips_whole_step() {
        let robot = RobotConfig::reference_robot();
        let terrain = TerrainStrength::uniform(1e7, 10.0).unwrap();
        let out = net_step(&robot, &terrain, deg(20.0));
        let k = out.kinematics.unwrap();
        assert!(!k.anchored);
        assert_eq!(k.t1, 0.5);
        assert_eq!(k.s2, 0.0);
        close(k.s1, 0.5 * 9.81 * 20f64.to_radians().sin() * 0.25, 1e-15);
        assert_eq!(out.regime, RegimeLabel::SlippageFailure);
    }

    #[test]
    fn profile_interpolates_and_clamps() {
        let p =
            ShearStrengthProfile::from_degrees(&[(0.0, 5e5), (10.0, 4e5), (20.0, 2e5)]).unwrap();
        close(p.k_s_at(deg(15.0)), 3e5, 1e-6);
        let hi = p.lookup(deg(30.0));
        assert_eq!(hi.k_s, 2e5);
        assert!(hi.clamped);
        let at = p.lookup(deg(10.0));
        close(at.k_s, 4e5, 1e-6);
        assert!(!at.clamped);
        assert!(ShearStrengthProfile::from_degrees(&[(10.0, 1.0), (5.0, 1.0)]).is_err());
        assert!(ShearStrengthProfile::from_degrees(&[(0.0, -1.0)]).is_err());
    }

    #[test]
    fn extrapolation_flag_only_above_range() {
        let robot = RobotConfig::reference_robot();
        let terrain = TerrainStrength::new(
            1e6,
            ShearStrengthProfile::from_degrees(&[(5.0, 2e6), (20.0, 1e6)]).unwrap(),
        )
        .unwrap();
        assert!(!net_step(&robot, &terrain, deg(0.0)).extrapolated);
        assert!(!net_step(&robot, &terrain, deg(20.0)).extrapolated);
        assert!(net_step(&robot, &terrain, deg(24.0)).extrapolated);
    }

    #[test]
    fn slope_angle_bounds() {
        assert!(SlopeAngle::from_degrees(-1.0).is_err());
        assert!(SlopeAngle::from_degrees(90.0).is_err());
        assert!(SlopeAngle::from_degrees(f64::NAN).is_err());
        close(
            SlopeAngle::from_degrees(24.0).unwrap().degrees(),
            24.0,
            1e-12,
        );
    }

    #[test]
    fn robot_validation() {
        let mut r = RobotConfig::reference_robot();
        assert!(r.validate().is_ok());
        r.hip_height = 0.09;
        assert!(r.validate().is_err());
        let r = RobotConfig {
            n_stance: 0,
            ..RobotConfig::reference_robot()
        };
        assert!(r.validate().is_err());
        let r = RobotConfig {
            mass: f64::NAN,
            ..RobotConfig::reference_robot()
        };
        assert!(r.validate().is_err());
    }

    #[test]
    fn robot_json_uses_unit_keys_and_defaults() {
        let json = r#"{"mass_kg":0.35,"leg_radius_m":0.04,"hip_height_m":0.04,
            "leg_width_m":0.01,"omega_rad_s":6.283185307,"n_stance":3,
            "delta_t_s":0.2,"stride_period_s":1.0,
            "_provenance":{"hip_height_m":"artifact default"}}"#;
        let r: RobotConfig = serde_json::from_str(json).unwrap();
        close(r.contact_area, 1e-4, 1e-18);
        assert_eq!(r.gravity, STANDARD_GRAVITY);
        let bad = json.replace("0.35", "-0.35");
        assert!(serde_json::from_str::<RobotConfig>(&bad).is_err());
        let unknown = json.replace("\"n_stance\"", "\"legs\":6,\"n_stance\"");
        assert!(serde_json::from_str::<RobotConfig>(&unknown).is_err());
    }

    #[test]
    fn terrain_interchange_json() {
        let t = TerrainStrength::new(
            3e5,
            ShearStrengthProfile::from_degrees(&[(0.0, 5e5), (20.0, 2e5)]).unwrap(),
        )
        .unwrap();
        let text = serde_json::to_string(&t).unwrap();
        assert!(
            text.starts_with(r#"{"k_n":300000.0,"k_s_profile":[{"theta_deg":0.0,"k_s":500000.0}"#)
        );
        let back: TerrainStrength = serde_json::from_str(&text).unwrap();
        close(
            back.shear_profile.samples()[1].0,
            t.shear_profile.samples()[1].0,
            1e-15,
        );
        assert!(serde_json::from_str::<TerrainStrength>(r#"{"k_n":0,"k_s_profile":[]}"#).is_err());
    }

    #[test]
    fn trace_rejects_bad_input() {
        let robot = RobotConfig::reference_robot();
        let ok = net_step(
            &robot,
            &TerrainStrength::uniform(1e6, 1e6).unwrap(),
            deg(10.0),
        );
        assert!(velocity_trace(&robot, &ok, 0.0).is_err());
        let sunk = net_step(
            &robot,
            &TerrainStrength::uniform(1e3, 1e6).unwrap(),
            deg(10.0),
        );
        assert!(velocity_trace(&robot, &sunk, 1e-3).is_err());
    }

    #[test]
    fn trace_level_ramp_is_triangle() {
        let robot = RobotConfig {
            level_step_override: Some(0.0785),
            ..RobotConfig::reference_robot()
        };
        let out = net_step(
            &robot,
            &TerrainStrength::uniform(1e7, 1e30).unwrap(),
            SlopeAngle::LEVEL,
        );
        let trace = velocity_trace(&robot, &out, 1e-3).unwrap();
        assert_eq!(trace.first().unwrap().t, 0.0);
        assert_eq!(trace.last().unwrap().t, 0.5);
        close(trace.last().unwrap().v, 2.0 * 0.0785 / 0.5, 1e-6);
        close(integrate_trace(&trace), 0.0785, 1e-6);
    }

    #[test]
    fn trace_speed_at_anchoring() {
        let robot = RobotConfig {
            level_step_override: Some(0.0785),
            ..RobotConfig::reference_robot()
        };
        let theta = deg(24.0);
        let d_target = 0.04 * (0.2 * PI).sin();
        let k_s = applied_shear_load(&robot, theta) / (robot.leg_width * d_target * d_target);
        let out = net_step(&robot, &TerrainStrength::uniform(1e7, k_s).unwrap(), theta);
        let trace = velocity_trace(&robot, &out, 1e-4).unwrap();
        let at = trace.iter().find(|p| (p.t - 0.1).abs() < 5e-5).unwrap();
        close(at.v, -9.81 * 24f64.to_radians().sin() * 0.1, 1e-3);
        close(at.v, -0.399, 1e-3);
    }
}
