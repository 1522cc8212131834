//! Virtual actuator board and release hook.
//!
//! A `'D'` on the wire starts the release: the linear actuator retracts the
//! pin, the unpinned hook falls open under gravity, and the tether slides
//! free once the towline pulls on it. A slack line holds the hook-open
//! state indefinitely.
//!
//! ```text
//! LOCKED --'D'--> PIN_RETRACTING --actuation_time--> HOOK_FALLING --taut--> TETHER_FREE
//! ```

use std::fmt;

/// Table values for the release unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorSpec {
    /// Linear actuator force, N.
    pub force: f64,
    /// Linear actuator stroke, m.
    pub stroke: f64,
    /// Total unit mass, kg.
    pub mass: f64,
}

impl ActuatorSpec {
    pub const DEFAULT: ActuatorSpec = ActuatorSpec {
        force: 1468.0,
        stroke: 0.0508,
        mass: 3.95,
    };

    pub fn is_valid(&self) -> bool {
        [self.force, self.stroke, self.mass]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0)
    }
}

impl Default for ActuatorSpec {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Outer dimensions of the release unit, m (length, height, width).
pub const UNIT_DIMENSIONS: (f64, f64, f64) = (0.3556, 0.1651, 0.127);

// Absorbs rounding when a phase ends on a step boundary.
const TIME_EPS: f64 = 1e-9;

/// Seconds per mechanical phase when not configured.
pub const DEFAULT_ACTUATION_TIME: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MechState {
    Locked,
    PinRetracting,
    HookFalling,
    TetherFree,
}

impl MechState {
    pub const ALL: [MechState; 4] = [
        MechState::Locked,
        MechState::PinRetracting,
        MechState::HookFalling,
        MechState::TetherFree,
    ];

    /// The only state this one may move to.
    pub fn successor(self) -> Option<MechState> {
        match self {
            MechState::Locked => Some(MechState::PinRetracting),
            MechState::PinRetracting => Some(MechState::HookFalling),
            MechState::HookFalling => Some(MechState::TetherFree),
            MechState::TetherFree => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MechState::Locked => "LOCKED",
            MechState::PinRetracting => "PIN_RETRACTING",
            MechState::HookFalling => "HOOK_FALLING",
            MechState::TetherFree => "TETHER_FREE",
        }
    }
}

impl fmt::Display for MechState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Fault {
    #[default]
    None,
    /// Controller board ignores every command.
    StuckController,
    /// Pin jams: retraction starts but never completes.
    StuckPin,
}

impl Fault {
    pub const ALL: [Fault; 3] = [Fault::None, Fault::StuckController, Fault::StuckPin];
}

impl std::str::FromStr for Fault {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(Fault::None),
            "stuck_controller" => Ok(Fault::StuckController),
            "stuck_pin" => Ok(Fault::StuckPin),
            other => Err(format!(
                "unknown fault {other:?} (expected none, stuck_controller or stuck_pin)"
            )),
        }
    }
}

/// Emitted once, when the tether slides free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReleaseEvent {
    /// Mechanism clock at release, s.
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReleaseMechanism {
    state: MechState,
    fault: Fault,
    spec: ActuatorSpec,
    actuation_time: f64,
    hook_fall_time: f64,
    stroke_progress: f64,
    phase_elapsed: f64,
    clock: f64,
    ignored: Vec<u8>,
    transitions: Vec<(MechState, MechState)>,
}

impl Default for ReleaseMechanism {
    fn default() -> Self {
        Self::new(ActuatorSpec::DEFAULT, DEFAULT_ACTUATION_TIME, 0.0, Fault::None)
    }
}

impl ReleaseMechanism {
    /// `hook_fall_time` is how long the unpinned hook takes to swing open
    /// before the tether can slide out.
    pub fn new(spec: ActuatorSpec, actuation_time: f64, hook_fall_time: f64, fault: Fault) -> Self {
        assert!(actuation_time > 0.0, "actuation time must be positive");
        assert!(hook_fall_time >= 0.0, "hook fall time must be non-negative");
        ReleaseMechanism {
            state: MechState::Locked,
            fault,
            spec,
            actuation_time,
            hook_fall_time,
            stroke_progress: 0.0,
            phase_elapsed: 0.0,
            clock: 0.0,
            ignored: Vec::new(),
            transitions: Vec::new(),
        }
    }

    pub fn with_fault(fault: Fault) -> Self {
        Self::new(ActuatorSpec::DEFAULT, DEFAULT_ACTUATION_TIME, 0.0, fault)
    }

    /// A mechanism placed directly in `state`, for exercising the machine
    /// from arbitrary starting points.
    pub fn in_state(state: MechState, fault: Fault) -> Self {
        let mut m = Self::with_fault(fault);
        m.state = state;
        if state >= MechState::HookFalling {
            m.stroke_progress = m.spec.stroke;
        }
        m
    }

    pub fn state(&self) -> MechState {
        self.state
    }

    pub fn fault(&self) -> Fault {
        self.fault
    }

    pub fn spec(&self) -> &ActuatorSpec {
        &self.spec
    }

    pub fn actuation_time(&self) -> f64 {
        self.actuation_time
    }

    pub fn stroke_progress(&self) -> f64 {
        self.stroke_progress
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Bytes received that were not a command.
    pub fn ignored_bytes(&self) -> &[u8] {
        &self.ignored
    }

    /// Every state change so far, in order.
    pub fn transitions(&self) -> &[(MechState, MechState)] {
        &self.transitions
    }

    fn enter(&mut self, next: MechState) {
        debug_assert_eq!(self.state.successor(), Some(next));
        self.transitions.push((self.state, next));
        self.state = next;
        self.phase_elapsed = 0.0;
    }

    pub fn handle_byte(&mut self, b: u8) {
        if b != crate::serial::DEPLOY_BYTE {
            log::debug!("actuator ignored byte 0x{b:02x}");
            self.ignored.push(b);
            return;
        }
        if self.state == MechState::Locked && self.fault != Fault::StuckController {
            self.enter(MechState::PinRetracting);
        }
    }

    pub fn handle_bytes(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.handle_byte(b);
        }
    }

    /// Runs the mechanism forward by `dt`. Returns the release event on the
    /// call that frees the tether.
    pub fn advance(&mut self, dt: f64, line_taut: bool) -> Option<ReleaseEvent> {
        assert!(dt > 0.0, "dt must be positive");
        self.clock += dt;
        let mut remaining = dt;

        if self.state == MechState::PinRetracting {
            if self.fault == Fault::StuckPin {
                return None;
            }
            let needed = self.actuation_time - self.phase_elapsed;
            if remaining + TIME_EPS < needed {
                self.phase_elapsed += remaining;
                self.stroke_progress = self.spec.stroke * (self.phase_elapsed / self.actuation_time);
                return None;
            }
            remaining = (remaining - needed).max(0.0);
            self.stroke_progress = self.spec.stroke;
            self.enter(MechState::HookFalling);
        }

        if self.state == MechState::HookFalling {
            let fall_left = (self.hook_fall_time - self.phase_elapsed).max(0.0);
            if remaining + TIME_EPS < fall_left {
                self.phase_elapsed += remaining;
                return None;
            }
            self.phase_elapsed = self.hook_fall_time;
            if line_taut {
                self.enter(MechState::TetherFree);
                return Some(ReleaseEvent { at: self.clock });
            }
        }
        None
    }
}
