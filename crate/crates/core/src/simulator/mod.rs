//! Fixed-step world model for a tow-and-release mission.
//!
//! Each step runs in a fixed order:
//!
//! 1. move the ASV along its waypoints (and the AUV: slaved while stowed,
//!    pursuing its waypoints once active);
//! 2. advance wave time and decide towline tautness and tension;
//! 3. publish `POSITION` as a geodetic fix, plus any scheduled trigger and
//!    the `WAYPT_UPDATE` list;
//! 4. step the deployment node;
//! 5. hand serial bytes to the actuator;
//! 6. advance the actuator with the taut flag;
//! 7. on release, free the AUV, activate it and publish `DEPLOY_EVENT`;
//! 8. record a telemetry row.
//!
//! Everything is explicit Euler on kinematic state, so a run is a pure
//! function of its configuration and seed.

mod config;
mod telemetry;
mod waypoints;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::{
    ActuatorConfig, ActuatorSection, AsvPlan, AsvSection, ConfigError, FieldIssue, MissionPlan, Rm2Section,
    Scenario, SimConfig, SimSection, TowSection, WaveSection, HOUSING_TETHER_LIMIT,
};
pub use telemetry::{Telemetry, TelemetryRow, CSV_HEADER};
pub use waypoints::{parse_local_point, parse_waypt_update, WayptError, WayptList};

use crate::actuator::{MechState, ReleaseMechanism};
use crate::bus::{self, Bus, BusError, Payload, Subscription, Topic};
use crate::controller::{ControllerError, DeployReason, Rm2Node};
use crate::geodesy::{self, GeoError, LocalPoint};
use crate::physics::{self, PhysicsError, WaveField};
use crate::serial::LoopbackLink;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("towline tension {tension:.1} N exceeds rated load {rated_load:.1} N at t = {t:.3} s")]
    RatedLoadExceeded { t: f64, tension: f64, rated_load: f64 },
    #[error("deployment node failed at t = {t:.3} s: {source}")]
    Controller {
        t: f64,
        #[source]
        source: ControllerError,
    },
    #[error("bus: {0}")]
    Bus(#[from] BusError),
    #[error("position conversion: {0}")]
    Geo(#[from] GeoError),
    #[error("physics: {0}")]
    Physics(#[from] PhysicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AuvMode {
    Stowed,
    Released,
    Active,
}

impl fmt::Display for AuvMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuvMode::Stowed => "STOWED",
            AuvMode::Released => "RELEASED",
            AuvMode::Active => "ACTIVE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsvState {
    pub position: LocalPoint,
    /// Speed actually made good this step, m/s.
    pub speed: f64,
    pub heading: f64,
    /// Remaining waypoints, next first.
    pub waypoints: Vec<LocalPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuvState {
    pub position: LocalPoint,
    pub mode: AuvMode,
    /// Remaining targets, next first (waypoints then rendezvous).
    pub waypoints: Vec<LocalPoint>,
    pub speed: f64,
    /// Vertical excursion from the mean surface, m.
    pub heave: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowlineState {
    pub taut: bool,
    pub tension: f64,
    pub slack_margin: f64,
}

/// Instantaneous tautness: the tow outruns the surface surge at the AUV.
pub fn taut(asv_speed: f64, wave: &WaveField, x: f64, t: f64) -> bool {
    let surge = physics::surge_velocity(wave, x, 0.0, t).expect("surface is z = 0");
    asv_speed >= surge
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    DeployCommand {
        t: f64,
        reason: DeployReason,
        distance: Option<f64>,
    },
    SerialWriteFailed {
        t: f64,
    },
    HookOpen {
        t: f64,
    },
    Release {
        t: f64,
    },
    Activated {
        t: f64,
    },
    WaypointReached {
        t: f64,
        index: usize,
    },
    Rendezvous {
        t: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionSummary {
    pub steps: usize,
    pub final_time: f64,
    pub deploy_time: Option<f64>,
    pub deploy_reason: Option<DeployReason>,
    /// Distance from the deploy position when the node fired, m.
    pub deploy_position_error: Option<f64>,
    pub hook_open_time: Option<f64>,
    pub release_time: Option<f64>,
    pub activation_time: Option<f64>,
    pub waypoints_reached: usize,
    pub waypoints_total: usize,
    pub rendezvous_time: Option<f64>,
    pub auv_mode: AuvMode,
    pub mech_state: MechState,
    pub max_tension: f64,
    pub max_heave: f64,
    pub mission_success: bool,
    pub events: Vec<SimEvent>,
}

fn opt_time(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |t| format!("{t:.2} s"))
}

impl fmt::Display for MissionSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps == 0 {
            return writeln!(f, "no steps");
        }
        writeln!(f, "steps:             {}", self.steps)?;
        writeln!(f, "final time:        {:.2} s", self.final_time)?;
        writeln!(f, "deploy command:    {}", opt_time(self.deploy_time))?;
        if let Some(reason) = self.deploy_reason {
            writeln!(f, "deploy reason:     {reason:?}")?;
        }
        if let Some(err) = self.deploy_position_error {
            writeln!(f, "deploy pos. error: {err:.3} m")?;
        }
        writeln!(f, "hook open:         {}", opt_time(self.hook_open_time))?;
        writeln!(f, "release:           {}", opt_time(self.release_time))?;
        writeln!(f, "activation:        {}", opt_time(self.activation_time))?;
        writeln!(
            f,
            "waypoints reached: {}/{}",
            self.waypoints_reached, self.waypoints_total
        )?;
        writeln!(f, "rendezvous:        {}", opt_time(self.rendezvous_time))?;
        writeln!(f, "auv mode:          {}", self.auv_mode)?;
        writeln!(f, "mechanism:         {}", self.mech_state)?;
        writeln!(f, "max tension:       {:.1} N", self.max_tension)?;
        writeln!(f, "max heave:         {:.3} m", self.max_heave)?;
        writeln!(f, "mission success:   {}", self.mission_success)
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub telemetry: Telemetry,
    pub summary: MissionSummary,
}

fn step_toward(from: LocalPoint, to: LocalPoint, max_dist: f64) -> (LocalPoint, f64) {
    let d = geodesy::local_distance(&from, &to);
    if d <= max_dist {
        (to, d)
    } else {
        let f = max_dist / d;
        (
            LocalPoint::new(from.x + (to.x - from.x) * f, from.y + (to.y - from.y) * f),
            max_dist,
        )
    }
}

pub struct World {
    config: SimConfig,
    step_index: usize,
    t: f64,
    asv: AsvState,
    auv: AuvState,
    towline: TowlineState,
    bus: Bus,
    node: Rm2Node,
    link: LoopbackLink,
    mech: ReleaseMechanism,
    rng: ChaCha8Rng,
    position_topic: Topic,
    trigger_topic: Option<Topic>,
    waypt_topic: Topic,
    event_topic: Topic,
    waypt_sub: Subscription,
    waypt_published: bool,
    trigger_published: bool,
    auv_has_plan: bool,
    summary: MissionSummary,
}

impl World {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        let bus = Bus::new();
        let node = Rm2Node::new(config.rm2.clone(), Some(config.frame), &bus)
            .map_err(|source| SimError::Controller { t: 0.0, source })?;
        let a = &config.actuator;
        let mech = ReleaseMechanism::new(a.spec, a.actuation_time, a.hook_fall_time, a.fault);

        let start = config.asv.start;
        let heading = config
            .asv
            .waypoints
            .iter()
            .find(|w| geodesy::local_distance(w, &start) > 0.0)
            .map_or(0.0, |w| (w.y - start.y).atan2(w.x - start.x));
        let asv = AsvState {
            position: start,
            speed: 0.0,
            heading,
            waypoints: config.asv.waypoints.clone(),
        };
        let auv = AuvState {
            position: Self::stowed_position(&asv, config.asv.tow_offset),
            mode: AuvMode::Stowed,
            waypoints: Vec::new(),
            speed: 0.0,
            heave: 0.0,
        };
        let waypt_topic = Topic::new(bus::WAYPT_UPDATE)?;
        let waypt_sub = bus.subscribe(&waypt_topic);
        let trigger_topic = match &config.rm2.deploy_trigger_alias {
            Some(alias) => Some(Topic::new(alias.as_str())?),
            None => None,
        };
        let waypoints_total = config
            .mission
            .waypt_update
            .as_deref()
            .map_or(0, |w| parse_waypt_update(w).map_or(0, |l| l.len()));
        let towline = TowlineState {
            taut: false,
            tension: 0.0,
            slack_margin: config.slack_margin,
        };

        Ok(World {
            rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
            step_index: 0,
            t: 0.0,
            asv,
            auv,
            towline,
            bus,
            node,
            link: LoopbackLink::new(),
            mech,
            position_topic: Topic::new(bus::POSITION)?,
            trigger_topic,
            waypt_topic,
            event_topic: Topic::new(bus::DEPLOY_EVENT)?,
            waypt_sub,
            waypt_published: false,
            trigger_published: false,
            auv_has_plan: false,
            summary: MissionSummary {
                steps: 0,
                final_time: 0.0,
                deploy_time: None,
                deploy_reason: None,
                deploy_position_error: None,
                hook_open_time: None,
                release_time: None,
                activation_time: None,
                waypoints_reached: 0,
                waypoints_total,
                rendezvous_time: None,
                auv_mode: AuvMode::Stowed,
                mech_state: MechState::Locked,
                max_tension: 0.0,
                max_heave: 0.0,
                mission_success: false,
                events: Vec::new(),
            },
            config,
        })
    }

    fn stowed_position(asv: &AsvState, offset: f64) -> LocalPoint {
        LocalPoint::new(
            asv.position.x - offset * asv.heading.cos(),
            asv.position.y - offset * asv.heading.sin(),
        )
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn asv(&self) -> &AsvState {
        &self.asv
    }

    pub fn auv(&self) -> &AuvState {
        &self.auv
    }

    pub fn towline(&self) -> &TowlineState {
        &self.towline
    }

    pub fn mechanism(&self) -> &ReleaseMechanism {
        &self.mech
    }

    pub fn node(&self) -> &Rm2Node {
        &self.node
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    /// Mutable access to the serial link, e.g. to unplug it.
    pub fn link_mut(&mut self) -> &mut LoopbackLink {
        &mut self.link
    }

    pub fn summary(&self) -> &MissionSummary {
        &self.summary
    }

    fn attached(&self) -> bool {
        self.auv.mode == AuvMode::Stowed
    }

    fn move_asv(&mut self, dt: f64) {
        let mut budget = self.config.asv.speed * dt;
        let mut travelled = 0.0;
        while budget > 0.0 {
            let Some(&target) = self.asv.waypoints.first() else {
                break;
            };
            let from = self.asv.position;
            if geodesy::local_distance(&from, &target) > 0.0 {
                self.asv.heading = (target.y - from.y).atan2(target.x - from.x);
            }
            let (next, moved) = step_toward(from, target, budget);
            self.asv.position = next;
            budget -= moved;
            travelled += moved;
            if next == target {
                self.asv.waypoints.remove(0);
            }
        }
        self.asv.speed = travelled / dt;
    }

    fn move_auv(&mut self, dt: f64) {
        match self.auv.mode {
            AuvMode::Stowed => {
                self.auv.position = Self::stowed_position(&self.asv, self.config.asv.tow_offset);
                self.auv.speed = self.asv.speed;
            }
            AuvMode::Released => self.auv.speed = 0.0,
            AuvMode::Active => {
                let radius = self.config.mission.capture_radius;
                let Some(&target) = self.auv.waypoints.first() else {
                    self.auv.speed = 0.0;
                    return;
                };
                let (next, moved) = step_toward(self.auv.position, target, self.config.mission.auv_speed * dt);
                self.auv.position = next;
                self.auv.speed = moved / dt;
                if geodesy::local_distance(&next, &target) <= radius {
                    self.auv.waypoints.remove(0);
                    let t = self.t;
                    if self.summary.waypoints_reached < self.summary.waypoints_total {
                        self.summary.waypoints_reached += 1;
                        self.summary.events.push(SimEvent::WaypointReached {
                            t,
                            index: self.summary.waypoints_reached,
                        });
                    }
                }
            }
        }
    }

    fn update_towline(&mut self) -> Result<(), SimError> {
        let w = &self.config.wave;
        self.auv.heave = (w.amplitude() * (w.angular_frequency() * self.t + w.phase()).sin())
            .clamp(-self.config.heave_limit, self.config.heave_limit);
        self.summary.max_heave = self.summary.max_heave.max(self.auv.heave.abs());

        if !self.attached() {
            self.towline.taut = false;
            self.towline.tension = 0.0;
            return Ok(());
        }
        let surge = physics::surge_velocity(w, self.auv.position.x, 0.0, self.t)?;
        let speed = self.asv.speed;
        let margin = self.towline.slack_margin;
        // hysteresis applies only once there is a previous state
        self.towline.taut = if margin == 0.0 || self.step_index == 1 {
            speed >= surge
        } else if self.towline.taut {
            speed >= surge - margin
        } else {
            speed >= surge + margin
        };
        self.towline.tension = if self.towline.taut {
            physics::tow_tension(&self.config.tow, speed)?
        } else {
            0.0
        };
        self.summary.max_tension = self.summary.max_tension.max(self.towline.tension);
        if self.towline.tension > self.config.tow.rated_load {
            return Err(SimError::RatedLoadExceeded {
                t: self.t,
                tension: self.towline.tension,
                rated_load: self.config.tow.rated_load,
            });
        }
        Ok(())
    }

    fn publish_inputs(&mut self) -> Result<(), SimError> {
        let noise = self.config.position_noise;
        let mut fix = self.asv.position;
        if noise > 0.0 {
            fix.x += self.rng.gen_range(-noise..=noise);
            fix.y += self.rng.gen_range(-noise..=noise);
        }
        let geo = geodesy::to_geo(&self.config.frame, &fix)?;
        self.bus.publish(&self.position_topic, Payload::Geo(geo), self.t)?;

        if let (Some(at), Some(topic)) = (self.config.trigger_time, &self.trigger_topic) {
            if !self.trigger_published && self.t + 1e-9 >= at {
                self.bus.publish(topic, Payload::Bool(true), self.t)?;
                self.trigger_published = true;
            }
        }
        if !self.waypt_published {
            if let Some(list) = &self.config.mission.waypt_update {
                self.bus.publish(&self.waypt_topic, Payload::Text(list.clone()), self.t)?;
            }
            self.waypt_published = true;
        }
        Ok(())
    }

    fn step_node(&mut self) -> Result<(), SimError> {
        match self.node.step(&mut self.link) {
            Ok(Some(cmd)) => {
                if self.summary.deploy_time.is_none() {
                    self.summary.deploy_time = Some(self.t);
                    self.summary.deploy_reason = Some(cmd.reason);
                    self.summary.deploy_position_error = self
                        .node
                        .deploy_local()
                        .map(|d| geodesy::local_distance(&d, &self.asv.position));
                }
                self.summary.events.push(SimEvent::DeployCommand {
                    t: self.t,
                    reason: cmd.reason,
                    distance: cmd.distance,
                });
                Ok(())
            }
            Ok(None) => Ok(()),
            Err(ControllerError::Link(e)) => {
                log::warn!("t={:.3}: {e}; will retry", self.t);
                self.summary.events.push(SimEvent::SerialWriteFailed { t: self.t });
                Ok(())
            }
            Err(source) => Err(SimError::Controller { t: self.t, source }),
        }
    }

    fn receive_waypoints(&mut self) {
        let Some(msg) = self.waypt_sub.drain_latest() else {
            return;
        };
        let Payload::Text(text) = msg.payload else {
            return;
        };
        match parse_waypt_update(&text) {
            Ok(list) => {
                let mut targets = list.into_points();
                targets.extend(self.config.mission.rendezvous);
                self.summary.waypoints_total = targets.len() - usize::from(self.config.mission.rendezvous.is_some());
                self.auv.waypoints = targets;
                self.auv_has_plan = true;
            }
            Err(e) => log::warn!("AUV rejected WAYPT_UPDATE: {e}"),
        }
    }

    fn check_rendezvous(&mut self) {
        if self.summary.rendezvous_time.is_some() || self.auv.mode != AuvMode::Active || !self.auv_has_plan {
            return;
        }
        if !self.auv.waypoints.is_empty() {
            return;
        }
        let radius = self.config.mission.capture_radius;
        let met = match self.config.mission.rendezvous {
            Some(r) => {
                geodesy::local_distance(&self.auv.position, &r) <= radius
                    && geodesy::local_distance(&self.asv.position, &r) <= radius
            }
            None => true,
        };
        if met {
            self.summary.rendezvous_time = Some(self.t);
            self.summary.events.push(SimEvent::Rendezvous { t: self.t });
            self.summary.mission_success = self.summary.waypoints_reached == self.summary.waypoints_total;
        }
    }

    fn activate(&mut self) {
        self.auv.mode = AuvMode::Active;
        self.summary.activation_time = Some(self.t);
        self.summary.events.push(SimEvent::Activated { t: self.t });
    }

    /// Advances the world by one configured time step.
    pub fn step(&mut self) -> Result<TelemetryRow, SimError> {
        let dt = self.config.dt;
        self.step_index += 1;
        self.t = self.step_index as f64 * dt;

        self.move_asv(dt);
        if self.auv.mode == AuvMode::Released {
            let delay = self.config.mission.magnet_delay;
            if self.summary.release_time.is_some_and(|r| self.t + 1e-9 >= r + delay) {
                self.activate();
            }
        }
        self.move_auv(dt);
        self.update_towline()?;
        self.publish_inputs()?;
        self.receive_waypoints();
        self.step_node()?;

        let bytes = self.link.take();
        self.mech.handle_bytes(&bytes);
        let before = self.mech.state();
        let attached_taut = self.attached() && self.towline.taut;
        let event = self.mech.advance(dt, attached_taut);
        if before < MechState::HookFalling && self.mech.state() >= MechState::HookFalling {
            self.summary.hook_open_time = Some(self.t);
            self.summary.events.push(SimEvent::HookOpen { t: self.t });
        }
        if event.is_some() {
            self.auv.mode = AuvMode::Released;
            self.summary.release_time = Some(self.t);
            self.summary.events.push(SimEvent::Release { t: self.t });
            if self.config.mission.magnet_delay == 0.0 {
                self.activate();
            }
            self.bus.publish(&self.event_topic, Payload::Bool(true), self.t)?;
        }
        self.check_rendezvous();

        self.summary.steps = self.step_index;
        self.summary.final_time = self.t;
        self.summary.auv_mode = self.auv.mode;
        self.summary.mech_state = self.mech.state();

        Ok(TelemetryRow {
            t: self.t,
            asv_x: self.asv.position.x,
            asv_y: self.asv.position.y,
            asv_speed: self.asv.speed,
            auv_x: self.auv.position.x,
            auv_y: self.auv.position.y,
            auv_mode: self.auv.mode,
            tension: self.towline.tension,
            taut: self.towline.taut,
            mech_state: self.mech.state(),
            deployed: self.node.deployed(),
        })
    }

    pub fn into_summary(self) -> MissionSummary {
        self.summary
    }
}

/// Runs a configuration for its full duration.
pub fn run(config: SimConfig) -> Result<SimOutput, SimError> {
    let steps = config.steps();
    let mut world = World::new(config)?;
    let mut telemetry = Telemetry {
        rows: Vec::with_capacity(steps),
    };
    for _ in 0..steps {
        telemetry.rows.push(world.step()?);
    }
    Ok(SimOutput {
        telemetry,
        summary: world.into_summary(),
    })
}

/// Loads, validates and runs a scenario file's text.
pub fn run_scenario(text: &str) -> Result<SimOutput, SimError> {
    run(Scenario::from_toml(text)?.resolve()?)
}

/// Nominal tow-deploy-survey-rendezvous mission.
pub const MISSION_NOMINAL: &str = include_str!("../../scenarios/mission_nominal.toml");

/// The nominal mission with a dead actuator controller.
pub const MISSION_STUCK_CONTROLLER: &str = include_str!("../../scenarios/mission_stuck_controller.toml");
