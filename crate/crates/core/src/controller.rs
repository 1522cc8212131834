//! Deployment node: fires the release when the vehicle is within `delta` of
//! the deploy position or the deploy trigger reads true.
//!
//! The node latches after the first successful send unless
//! `resend_on_trigger` is set, in which case every update that satisfies the
//! condition writes another `'D'`. A failed write leaves the node armed so
//! the next step retries.

use thiserror::Error;

use crate::bus::{self, Bus, Payload, Subscription, Topic};
use crate::geodesy::{self, GeoError, GeoPoint, LocalFrame, LocalPoint};
use crate::serial::{self, LinkError, SerialLink};

/// Deploy tolerance used when none is configured, m.
pub const DEFAULT_DELTA: f64 = 5.0;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("deploy position: {0}")]
    DeployPosition(#[source] GeoError),
    #[error("either a deploy position or a deploy trigger must be configured")]
    NoDeployCondition,
    #[error("deploy tolerance must be positive, got {0} m")]
    InvalidDelta(f64),
    #[error("trigger alias: {0}")]
    TriggerAlias(#[from] bus::BusError),
    #[error("position update received before the local frame origin was set")]
    FrameNotSet,
    #[error("position update could not be converted: {0}")]
    Position(#[source] GeoError),
    #[error("unexpected payload on {topic}: {payload:?}")]
    UnexpectedPayload { topic: String, payload: Payload },
    #[error("deploy command not delivered: {0}")]
    Link(#[from] LinkError),
}

/// Parses the `"lat,lon"` deploy position.
pub fn parse_deploy_position(text: &str) -> Result<GeoPoint, ControllerError> {
    text.parse().map_err(ControllerError::DeployPosition)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rm2Params {
    pub deploy_position: Option<GeoPoint>,
    /// Topic name whose boolean value triggers deployment.
    pub deploy_trigger_alias: Option<String>,
    /// Deploy tolerance, m.
    pub delta: f64,
    pub resend_on_trigger: bool,
}

impl Rm2Params {
    pub fn at_position(position: GeoPoint) -> Self {
        Rm2Params {
            deploy_position: Some(position),
            deploy_trigger_alias: None,
            delta: DEFAULT_DELTA,
            resend_on_trigger: false,
        }
    }

    pub fn on_trigger(alias: impl Into<String>) -> Self {
        Rm2Params {
            deploy_position: None,
            deploy_trigger_alias: Some(alias.into()),
            delta: DEFAULT_DELTA,
            resend_on_trigger: false,
        }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        if self.deploy_position.is_none() && self.deploy_trigger_alias.is_none() {
            return Err(ControllerError::NoDeployCondition);
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(ControllerError::InvalidDelta(self.delta));
        }
        if let Some(p) = &self.deploy_position {
            p.validate().map_err(ControllerError::DeployPosition)?;
        }
        if let Some(alias) = &self.deploy_trigger_alias {
            Topic::new(alias.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rm2State {
    pub last_position: Option<LocalPoint>,
    pub last_trigger: bool,
    pub deployed: bool,
    pub frame: Option<LocalFrame>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeployReason {
    Position,
    Trigger,
}

/// Record of one `'D'` written to the link.
#[derive(Debug, Clone, PartialEq)]
pub struct DeployCommand {
    pub reason: DeployReason,
    /// Vehicle position when the command fired, if known.
    pub position: Option<LocalPoint>,
    /// Distance to the deploy position, if one is configured.
    pub distance: Option<f64>,
    /// Timestamp of the newest message that fed this decision.
    pub timestamp: f64,
}

#[derive(Debug)]
pub struct Rm2Node {
    params: Rm2Params,
    state: Rm2State,
    deploy_local: Option<LocalPoint>,
    position_sub: Subscription,
    trigger_sub: Option<Subscription>,
    last_timestamp: f64,
}

impl Rm2Node {
    /// Subscribes to `POSITION` and, when configured, the trigger alias.
    pub fn new(params: Rm2Params, frame: Option<LocalFrame>, bus: &Bus) -> Result<Self, ControllerError> {
        params.validate()?;
        let position_sub = bus.subscribe(&Topic::new(bus::POSITION)?);
        let trigger_sub = match &params.deploy_trigger_alias {
            Some(alias) => Some(bus.subscribe(&Topic::new(alias.as_str())?)),
            None => None,
        };
        let mut node = Rm2Node {
            params,
            state: Rm2State::default(),
            deploy_local: None,
            position_sub,
            trigger_sub,
            last_timestamp: 0.0,
        };
        if let Some(frame) = frame {
            node.set_frame(frame)?;
        }
        Ok(node)
    }

    /// Anchors the local frame and converts the deploy position into it.
    pub fn set_frame(&mut self, frame: LocalFrame) -> Result<(), ControllerError> {
        self.deploy_local = match &self.params.deploy_position {
            Some(p) => Some(geodesy::to_local(&frame, p).map_err(ControllerError::DeployPosition)?),
            None => None,
        };
        self.state.frame = Some(frame);
        Ok(())
    }

    pub fn params(&self) -> &Rm2Params {
        &self.params
    }

    pub fn state(&self) -> &Rm2State {
        &self.state
    }

    pub fn deployed(&self) -> bool {
        self.state.deployed
    }

    /// Deploy position in the local frame, once a frame is set.
    pub fn deploy_local(&self) -> Option<LocalPoint> {
        self.deploy_local
    }

    pub fn distance_to_deploy(&self) -> Option<f64> {
        match (self.state.last_position, self.deploy_local) {
            (Some(here), Some(target)) => Some(geodesy::local_distance(&here, &target)),
            _ => None,
        }
    }

    fn ingest_position(&mut self, payload: Payload) -> Result<(), ControllerError> {
        let local = match payload {
            Payload::Local(p) => {
                if self.params.deploy_position.is_some() && self.state.frame.is_none() {
                    return Err(ControllerError::FrameNotSet);
                }
                p
            }
            Payload::Geo(g) => {
                let frame = self.state.frame.as_ref().ok_or(ControllerError::FrameNotSet)?;
                geodesy::to_local(frame, &g).map_err(ControllerError::Position)?
            }
            other => {
                return Err(ControllerError::UnexpectedPayload {
                    topic: bus::POSITION.to_string(),
                    payload: other,
                })
            }
        };
        self.state.last_position = Some(local);
        Ok(())
    }

    /// Drains pending updates (newest wins) and writes `'D'` if the deploy
    /// condition holds.
    pub fn step(&mut self, link: &mut dyn SerialLink) -> Result<Option<DeployCommand>, ControllerError> {
        let mut updated = false;
        if let Some(msg) = self.position_sub.drain_latest() {
            self.last_timestamp = self.last_timestamp.max(msg.timestamp);
            self.ingest_position(msg.payload)?;
            updated = true;
        }
        if let Some(sub) = &self.trigger_sub {
            if let Some(msg) = sub.drain_latest() {
                self.last_timestamp = self.last_timestamp.max(msg.timestamp);
                match msg.payload {
                    Payload::Bool(value) => self.state.last_trigger = value,
                    other => {
                        return Err(ControllerError::UnexpectedPayload {
                            topic: sub.topic().to_string(),
                            payload: other,
                        })
                    }
                }
                updated = true;
            }
        }

        if self.state.deployed && !self.params.resend_on_trigger {
            return Ok(None);
        }
        // Literal mode only reacts to fresh updates; latched mode also
        // re-checks on quiet steps so a failed write is retried.
        if self.params.resend_on_trigger && !updated {
            return Ok(None);
        }

        let distance = self.distance_to_deploy();
        let reason = if distance.is_some_and(|d| d < self.params.delta) {
            DeployReason::Position
        } else if self.state.last_trigger {
            DeployReason::Trigger
        } else {
            return Ok(None);
        };

        serial::send_deploy(link)?;
        self.state.deployed = true;
        Ok(Some(DeployCommand {
            reason,
            position: self.state.last_position,
            distance,
            timestamp: self.last_timestamp,
        }))
    }
}
