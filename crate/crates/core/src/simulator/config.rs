//! Scenario files and the validated simulation configuration.
//!
//! A scenario is TOML with the sections `[wave]`, `[tow]`, `[asv]`, `[rm2]`,
//! `[actuator]` and `[sim]`. Every key has a default, so an empty file is a
//! valid (if uneventful) scenario. Values are SI except keys suffixed `_kn`
//! (knots) or `_deg` (degrees).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actuator::{ActuatorSpec, Fault};
use crate::controller::{Rm2Params, DEFAULT_DELTA};
use crate::geodesy::{GeoPoint, LocalFrame, LocalPoint};
use crate::physics::{self, TowConfig, WaveField, MAX_ASV_SPEED};

use super::waypoints::{parse_local_point, parse_waypt_update, WayptList};

/// Vertical travel allowed by the housing tethers, m.
pub const HOUSING_TETHER_LIMIT: f64 = 0.660;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn join_issues(issues: &[FieldIssue]) -> String {
    issues.iter().map(|i| format!("\n  {i}")).collect()
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario is not valid TOML: {0}")]
    Syntax(String),
    #[error("bad override {text:?}: {reason}")]
    Override { text: String, reason: String },
    #[error("invalid scenario:{}", join_issues(.0))]
    Invalid(Vec<FieldIssue>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveSection {
    pub amplitude: f64,
    pub period: f64,
    pub gravity: f64,
    pub phase_deg: f64,
}

impl Default for WaveSection {
    fn default() -> Self {
        WaveSection {
            amplitude: 0.5,
            period: 30.0,
            gravity: physics::DEFAULT_GRAVITY,
            phase_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TowSection {
    pub rho: f64,
    pub c_d: f64,
    pub sigma: f64,
    pub theta_deg: f64,
    pub rated_load: f64,
}

impl Default for TowSection {
    fn default() -> Self {
        TowSection {
            rho: physics::SEAWATER_DENSITY,
            c_d: physics::HALF_SPHERE_DRAG,
            sigma: physics::DEFAULT_SIGMA,
            theta_deg: physics::DEFAULT_THETA_DEG,
            rated_load: physics::DEFAULT_RATED_LOAD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsvSection {
    /// `"x,y"` in the local frame.
    pub start: String,
    /// `"x1,y1:...:xn,yn"`; empty means hold station.
    pub waypoints: String,
    pub speed: Option<f64>,
    pub speed_kn: Option<f64>,
    /// Along-track distance from the ASV to the stowed AUV, m.
    pub tow_offset: f64,
}

impl Default for AsvSection {
    fn default() -> Self {
        AsvSection {
            start: "0,0".into(),
            waypoints: String::new(),
            speed: None,
            speed_kn: None,
            tow_offset: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Rm2Section {
    /// Geodetic origin of the local frame, `"lat,lon"`.
    pub origin: String,
    pub deploy_position: Option<String>,
    pub deploy_trigger: Option<String>,
    pub delta_m: f64,
    pub resend_on_trigger: bool,
    /// Time at which the harness publishes `true` on the trigger topic.
    pub trigger_time: Option<f64>,
    /// Half-width of uniform noise added to published positions, m.
    pub position_noise_m: f64,
}

impl Default for Rm2Section {
    fn default() -> Self {
        Rm2Section {
            origin: "41.5,-70.7".into(),
            deploy_position: None,
            deploy_trigger: Some(crate::bus::DEPLOY_TRIGGER.into()),
            delta_m: DEFAULT_DELTA,
            resend_on_trigger: false,
            trigger_time: None,
            position_noise_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActuatorSection {
    pub force: f64,
    pub stroke: f64,
    pub mass: f64,
    pub actuation_time: f64,
    pub hook_fall_time: f64,
    pub fault: String,
}

impl Default for ActuatorSection {
    fn default() -> Self {
        let spec = ActuatorSpec::DEFAULT;
        ActuatorSection {
            force: spec.force,
            stroke: spec.stroke,
            mass: spec.mass,
            actuation_time: crate::actuator::DEFAULT_ACTUATION_TIME,
            hook_fall_time: 0.0,
            fault: "none".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub duration: f64,
    pub rng_seed: u64,
    /// Hysteresis band on the tautness test, m/s.
    pub slack_margin: f64,
    pub heave_limit: f64,
    /// `WAYPT_UPDATE` string handed to the AUV.
    pub waypt_update: Option<String>,
    /// Rendezvous point `"x,y"` the AUV heads to after its waypoints.
    pub rendezvous: Option<String>,
    pub auv_speed: f64,
    pub capture_radius: f64,
    pub magnet_delay: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: 0.05,
            duration: 60.0,
            rng_seed: 0,
            slack_margin: 0.0,
            heave_limit: HOUSING_TETHER_LIMIT,
            waypt_update: None,
            rendezvous: None,
            auv_speed: 1.5,
            capture_radius: 2.0,
            magnet_delay: 0.0,
        }
    }
}

/// Raw scenario as written in the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub wave: WaveSection,
    pub tow: TowSection,
    pub asv: AsvSection,
    pub rm2: Rm2Section,
    pub actuator: ActuatorSection,
    pub sim: SimSection,
}

fn override_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

// Maps a physics validation error onto the scenario key that caused it.
fn physics_issue(section: &str, e: &physics::PhysicsError) -> (String, String) {
    match e {
        physics::PhysicsError::InvalidParameter {
            name,
            requirement,
            value,
        } => {
            match *name {
                "theta" => (
                    format!("{section}.theta_deg"),
                    format!("must be in [0, 90), got {}", value.to_degrees()),
                ),
                "phase" => (format!("{section}.phase_deg"), format!("must be {requirement}")),
                key => (format!("{section}.{key}"), format!("must be {requirement}, got {value}")),
            }
        }
        physics::PhysicsError::DegenerateAngle { .. } => (format!("{section}.theta_deg"), e.to_string()),
        other => (section.to_string(), other.to_string()),
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Self::with_overrides::<&str>(text, &[])
    }

    /// Parses `text` after applying `section.key=value` overrides. Values
    /// that are not valid TOML literals are taken as strings.
    pub fn with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
        for raw in overrides {
            let raw = raw.as_ref();
            let bad = |reason: &str| ConfigError::Override {
                text: raw.to_string(),
                reason: reason.to_string(),
            };
            let (path, value) = raw.split_once('=').ok_or_else(|| bad("expected section.key=value"))?;
            let (section, key) = path
                .trim()
                .split_once('.')
                .ok_or_else(|| bad("expected section.key=value"))?;
            if !Scenario::has_key(section, key) {
                return Err(bad(&format!("no such key {section}.{key}")));
            }
            let entry = table
                .entry(section.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(sec) = entry else {
                return Err(bad(&format!("{section} is not a table")));
            };
            sec.insert(key.to_string(), override_value(value.trim()));
        }
        Scenario::deserialize(table).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    pub fn load<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::with_overrides(&text, overrides)
    }

    /// Whether `section.key` names a configurable field.
    pub fn has_key(section: &str, key: &str) -> bool {
        const KEYS: &[(&str, &[&str])] = &[
            ("wave", &["amplitude", "period", "gravity", "phase_deg"]),
            ("tow", &["rho", "c_d", "sigma", "theta_deg", "rated_load"]),
            ("asv", &["start", "waypoints", "speed", "speed_kn", "tow_offset"]),
            (
                "rm2",
                &[
                    "origin",
                    "deploy_position",
                    "deploy_trigger",
                    "delta_m",
                    "resend_on_trigger",
                    "trigger_time",
                    "position_noise_m",
                ],
            ),
            (
                "actuator",
                &["force", "stroke", "mass", "actuation_time", "hook_fall_time", "fault"],
            ),
            (
                "sim",
                &[
                    "dt",
                    "duration",
                    "rng_seed",
                    "slack_margin",
                    "heave_limit",
                    "waypt_update",
                    "rendezvous",
                    "auv_speed",
                    "capture_radius",
                    "magnet_delay",
                ],
            ),
        ];
        KEYS.iter().any(|(s, keys)| *s == section && keys.contains(&key))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Validates every field and resolves units.
    pub fn resolve(&self) -> Result<SimConfig, ConfigError> {
        let mut issues = Vec::new();
        let mut issue = |field: &str, message: String| {
            issues.push(FieldIssue {
                field: field.to_string(),
                message,
            })
        };

        let wave = WaveField::new(
            self.wave.amplitude,
            self.wave.period,
            self.wave.gravity,
            self.wave.phase_deg.to_radians(),
        )
        .map_err(|e| {
            let (f, m) = physics_issue("wave", &e);
            issue(&f, m)
        })
        .ok();

        let tow = TowConfig::with_theta_deg(
            self.tow.rho,
            self.tow.c_d,
            self.tow.sigma,
            self.tow.theta_deg,
            self.tow.rated_load,
        )
        .map_err(|e| {
            let (f, m) = physics_issue("tow", &e);
            issue(&f, m)
        })
        .ok();

        let start = parse_local_point(&self.asv.start)
            .map_err(|e| issue("asv.start", e.to_string()))
            .ok();
        let asv_waypoints = if self.asv.waypoints.trim().is_empty() {
            Some(Vec::new())
        } else {
            parse_waypt_update(&self.asv.waypoints)
                .map_err(|e| issue("asv.waypoints", e.to_string()))
                .ok()
                .map(WayptList::into_points)
        };
        let speed = match (self.asv.speed, self.asv.speed_kn) {
            (Some(_), Some(_)) => {
                issue("asv.speed", "give either speed or speed_kn, not both".into());
                None
            }
            (Some(v), None) => Some(v),
            (None, Some(kn)) => Some(physics::knots_to_mps(kn)),
            (None, None) => Some(1.0),
        };
        if let Some(v) = speed {
            if !(0.0..=MAX_ASV_SPEED).contains(&v) {
                issue("asv.speed", format!("{v} m/s is outside [0, {MAX_ASV_SPEED}]"));
            }
        }
        if !(self.asv.tow_offset >= 0.0 && self.asv.tow_offset.is_finite()) {
            issue("asv.tow_offset", format!("must be >= 0, got {}", self.asv.tow_offset));
        }

        let origin = self
            .rm2
            .origin
            .parse::<GeoPoint>()
            .map_err(|e| issue("rm2.origin", e.to_string()))
            .ok();
        let frame = origin.and_then(|o| LocalFrame::new(o).map_err(|e| issue("rm2.origin", e.to_string())).ok());
        let deploy_position = match &self.rm2.deploy_position {
            Some(text) => match crate::controller::parse_deploy_position(text) {
                Ok(p) => Some(Some(p)),
                Err(e) => {
                    issue("rm2.deploy_position", e.to_string());
                    None
                }
            },
            None => Some(None),
        };
        let rm2 = deploy_position.map(|deploy_position| Rm2Params {
            deploy_position,
            deploy_trigger_alias: self.rm2.deploy_trigger.clone().filter(|s| !s.is_empty()),
            delta: self.rm2.delta_m,
            resend_on_trigger: self.rm2.resend_on_trigger,
        });
        if let Some(params) = &rm2 {
            if let Err(e) = params.validate() {
                issue("rm2", e.to_string());
            }
            if let (Some(frame), Some(p)) = (&frame, &params.deploy_position) {
                if let Err(e) = crate::geodesy::to_local(frame, p) {
                    issue("rm2.deploy_position", e.to_string());
                }
            }
        }
        if let Some(t) = self.rm2.trigger_time {
            if !(t >= 0.0 && t.is_finite()) {
                issue("rm2.trigger_time", format!("must be >= 0, got {t}"));
            }
            if self.rm2.deploy_trigger.as_deref().unwrap_or("").is_empty() {
                issue("rm2.trigger_time", "set but rm2.deploy_trigger is empty".into());
            }
        }
        if !(self.rm2.position_noise_m >= 0.0 && self.rm2.position_noise_m.is_finite()) {
            issue(
                "rm2.position_noise_m",
                format!("must be >= 0, got {}", self.rm2.position_noise_m),
            );
        }

        let spec = ActuatorSpec {
            force: self.actuator.force,
            stroke: self.actuator.stroke,
            mass: self.actuator.mass,
        };
        if !spec.is_valid() {
            issue("actuator", "force, stroke and mass must all be positive".into());
        }
        if !(self.actuator.actuation_time > 0.0 && self.actuator.actuation_time.is_finite()) {
            issue(
                "actuator.actuation_time",
                format!("must be > 0, got {}", self.actuator.actuation_time),
            );
        }
        if !(self.actuator.hook_fall_time >= 0.0 && self.actuator.hook_fall_time.is_finite()) {
            issue(
                "actuator.hook_fall_time",
                format!("must be >= 0, got {}", self.actuator.hook_fall_time),
            );
        }
        let fault = self
            .actuator
            .fault
            .parse::<Fault>()
            .map_err(|e| issue("actuator.fault", e))
            .ok();

        let s = &self.sim;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            issue("sim.dt", format!("must be > 0, got {}", s.dt));
        }
        if !(s.duration >= 0.0 && s.duration.is_finite()) {
            issue("sim.duration", format!("must be >= 0, got {}", s.duration));
        }
        if !(s.slack_margin >= 0.0 && s.slack_margin.is_finite()) {
            issue("sim.slack_margin", format!("must be >= 0, got {}", s.slack_margin));
        }
        if !(s.heave_limit >= 0.0 && s.heave_limit.is_finite()) {
            issue("sim.heave_limit", format!("must be >= 0, got {}", s.heave_limit));
        }
        if !(s.auv_speed > 0.0 && s.auv_speed.is_finite()) {
            issue("sim.auv_speed", format!("must be > 0, got {}", s.auv_speed));
        }
        if !(s.capture_radius > 0.0 && s.capture_radius.is_finite()) {
            issue("sim.capture_radius", format!("must be > 0, got {}", s.capture_radius));
        }
        if !(s.magnet_delay >= 0.0 && s.magnet_delay.is_finite()) {
            issue("sim.magnet_delay", format!("must be >= 0, got {}", s.magnet_delay));
        }
        if let Some(text) = &s.waypt_update {
            if let Err(e) = parse_waypt_update(text) {
                issue("sim.waypt_update", e.to_string());
            }
        }
        let rendezvous = match &s.rendezvous {
            Some(text) => match parse_local_point(text) {
                Ok(p) => Some(Some(p)),
                Err(e) => {
                    issue("sim.rendezvous", e.to_string());
                    None
                }
            },
            None => Some(None),
        };

        if !issues.is_empty() {
            return Err(ConfigError::Invalid(issues));
        }
        Ok(SimConfig {
            dt: s.dt,
            duration: s.duration,
            wave: wave.expect("validated"),
            tow: tow.expect("validated"),
            asv: AsvPlan {
                start: start.expect("validated"),
                waypoints: asv_waypoints.expect("validated"),
                speed: speed.expect("validated"),
                tow_offset: self.asv.tow_offset,
            },
            frame: frame.expect("validated"),
            rm2: rm2.expect("validated"),
            trigger_time: self.rm2.trigger_time,
            position_noise: self.rm2.position_noise_m,
            actuator: ActuatorConfig {
                spec,
                actuation_time: self.actuator.actuation_time,
                hook_fall_time: self.actuator.hook_fall_time,
                fault: fault.expect("validated"),
            },
            mission: MissionPlan {
                waypt_update: s.waypt_update.clone(),
                rendezvous: rendezvous.expect("validated"),
                auv_speed: s.auv_speed,
                capture_radius: s.capture_radius,
                magnet_delay: s.magnet_delay,
            },
            slack_margin: s.slack_margin,
            heave_limit: s.heave_limit,
            rng_seed: s.rng_seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsvPlan {
    pub start: LocalPoint,
    pub waypoints: Vec<LocalPoint>,
    /// Commanded transit speed, m/s.
    pub speed: f64,
    pub tow_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorConfig {
    pub spec: ActuatorSpec,
    pub actuation_time: f64,
    pub hook_fall_time: f64,
    pub fault: Fault,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionPlan {
    pub waypt_update: Option<String>,
    pub rendezvous: Option<LocalPoint>,
    pub auv_speed: f64,
    pub capture_radius: f64,
    pub magnet_delay: f64,
}

/// Validated, unit-resolved simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub duration: f64,
    pub wave: WaveField,
    pub tow: TowConfig,
    pub asv: AsvPlan,
    pub frame: LocalFrame,
    pub rm2: Rm2Params,
    pub trigger_time: Option<f64>,
    pub position_noise: f64,
    pub actuator: ActuatorConfig,
    pub mission: MissionPlan,
    pub slack_margin: f64,
    pub heave_limit: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Scenario::default().resolve().expect("default scenario is valid")
    }
}

impl SimConfig {
    /// Number of fixed steps covering `duration`.
    pub fn steps(&self) -> usize {
        ((self.duration / self.dt) + 1e-9).floor() as usize
    }
}
