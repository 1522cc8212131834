//! Shared helpers for the integration suites: a plain reference version of
//! the deployment loop and a random trace generator that drives it side by
//! side with `Rm2Node`.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rm2_core::bus::{self, Bus, Payload, Topic};
use rm2_core::controller::{Rm2Node, Rm2Params};
use rm2_core::geodesy::{GeoPoint, LocalFrame, LocalPoint};
use rm2_core::serial::LoopbackLink;

pub const ORIGIN_LAT: f64 = 41.5;
pub const ORIGIN_LON: f64 = -70.7;

pub fn frame() -> LocalFrame {
    LocalFrame::new(GeoPoint::new(ORIGIN_LAT, ORIGIN_LON).unwrap()).unwrap()
}

/// The deployment loop written out directly: read the newest position and
/// trigger, fire when `|x' - x| < delta` or the trigger is true. `latched`
/// stops it after the first fire; otherwise it fires on every pass that
/// brought an update.
#[derive(Debug, Clone)]
pub struct ReferenceLoop {
    pub x: Option<(f64, f64)>,
    pub delta: f64,
    pub latched: bool,
    x_prime: Option<(f64, f64)>,
    t_prime: bool,
    fired: bool,
}

impl ReferenceLoop {
    pub fn new(x: Option<(f64, f64)>, delta: f64, latched: bool) -> Self {
        ReferenceLoop {
            x,
            delta,
            latched,
            x_prime: None,
            t_prime: false,
            fired: false,
        }
    }

    pub fn pass(&mut self, position: Option<(f64, f64)>, trigger: Option<bool>) -> bool {
        let updated = position.is_some() || trigger.is_some();
        if let Some(p) = position {
            self.x_prime = Some(p);
        }
        if let Some(t) = trigger {
            self.t_prime = t;
        }
        if self.latched && self.fired {
            return false;
        }
        if !self.latched && !updated {
            return false;
        }
        let near = match (self.x_prime, self.x) {
            (Some(a), Some(b)) => (a.0 - b.0).hypot(a.1 - b.1) < self.delta,
            _ => false,
        };
        if near || self.t_prime {
            self.fired = true;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceEvent {
    Position(f64, f64),
    Trigger(bool),
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub deploy: Option<GeoPoint>,
    pub use_trigger: bool,
    pub delta: f64,
    pub resend: bool,
    pub steps: Vec<Vec<TraceEvent>>,
}

pub const DELTAS: [f64; 6] = [0.5, 1.0, 2.5, 5.0, 10.0, 25.0];

/// A random trace. Positions cluster around the deploy point, with a good
/// share placed exactly on the `delta` circle and a hair either side of it.
pub fn random_trace(seed: u64, allow_resend: bool) -> Trace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = DELTAS[rng.gen_range(0..DELTAS.len())];
    let (deploy, use_trigger) = match rng.gen_range(0..4) {
        0 => (None, true),
        1 => (Some(origin_or_offset(&mut rng)), false),
        _ => (Some(origin_or_offset(&mut rng)), true),
    };
    // Exact ring points only land exactly on the circle around the origin.
    let centred = deploy.is_none_or(|g| g.lat == ORIGIN_LAT && g.lon == ORIGIN_LON);
    let n = rng.gen_range(1..=40);
    let mut steps = Vec::with_capacity(n);
    for _ in 0..n {
        let mut events = Vec::new();
        for _ in 0..rng.gen_range(0..=3) {
            if rng.gen_bool(0.75) {
                let (x, y) = position_sample(&mut rng, delta, centred);
                events.push(TraceEvent::Position(x, y));
            } else {
                events.push(TraceEvent::Trigger(rng.gen_bool(0.15)));
            }
        }
        steps.push(events);
    }
    Trace {
        deploy,
        use_trigger,
        delta,
        resend: allow_resend && rng.gen_bool(0.25),
        steps,
    }
}

fn origin_or_offset(rng: &mut ChaCha8Rng) -> GeoPoint {
    if rng.gen_bool(0.6) {
        GeoPoint::new(ORIGIN_LAT, ORIGIN_LON).unwrap()
    } else {
        GeoPoint::new(
            ORIGIN_LAT + rng.gen_range(-0.002..0.002),
            ORIGIN_LON + rng.gen_range(-0.003..0.003),
        )
        .unwrap()
    }
}

fn position_sample(rng: &mut ChaCha8Rng, delta: f64, centred: bool) -> (f64, f64) {
    let kind = rng.gen_range(0..6);
    match kind {
        0 if centred => {
            let ring = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0), (0.6, 0.8), (-0.8, -0.6)];
            let (a, b) = ring[rng.gen_range(0..ring.len())];
            (a * delta, b * delta)
        }
        1 => {
            let r = if rng.gen_bool(0.5) {
                delta * (1.0 - 1e-9)
            } else {
                delta * (1.0 + 1e-9)
            };
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            (r * a.cos(), r * a.sin())
        }
        2 => (rng.gen_range(-1500.0..1500.0), rng.gen_range(-1500.0..1500.0)),
        _ => {
            let r = rng.gen_range(0.0..3.0 * delta);
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            (r * a.cos(), r * a.sin())
        }
    }
}

/// Per-step fire decisions of the node and the reference loop, plus how
/// many evaluated positions sat exactly on the `delta` circle.
pub struct TraceResult {
    pub node: Vec<bool>,
    pub reference: Vec<bool>,
    pub exact_boundary: usize,
}

pub fn run_trace(trace: &Trace) -> TraceResult {
    let bus = Bus::new();
    let params = Rm2Params {
        deploy_position: trace.deploy,
        deploy_trigger_alias: trace.use_trigger.then(|| bus::DEPLOY_TRIGGER.to_string()),
        delta: trace.delta,
        resend_on_trigger: trace.resend,
    };
    let mut node = Rm2Node::new(params, Some(frame()), &bus).unwrap();
    let x = node.deploy_local().map(|p| (p.x, p.y));
    let mut reference = ReferenceLoop::new(x, trace.delta, !trace.resend);
    let mut link = LoopbackLink::new();
    let pos_topic = Topic::new(bus::POSITION).unwrap();
    let trig_topic = Topic::new(bus::DEPLOY_TRIGGER).unwrap();

    let mut out = TraceResult {
        node: Vec::new(),
        reference: Vec::new(),
        exact_boundary: 0,
    };
    for (i, events) in trace.steps.iter().enumerate() {
        let t = i as f64;
        let mut pos = None;
        let mut trig = None;
        for ev in events {
            match *ev {
                TraceEvent::Position(px, py) => {
                    bus.publish(&pos_topic, Payload::Local(LocalPoint::new(px, py)), t).unwrap();
                    pos = Some((px, py));
                }
                TraceEvent::Trigger(v) => {
                    bus.publish(&trig_topic, Payload::Bool(v), t).unwrap();
                    if trace.use_trigger {
                        trig = Some(v);
                    }
                }
            }
        }
        if let (Some((px, py)), Some((dx, dy))) = (pos, x) {
            if (px - dx).hypot(py - dy) == trace.delta {
                out.exact_boundary += 1;
            }
        }
        out.node.push(node.step(&mut link).unwrap().is_some());
        out.reference.push(reference.pass(pos, trig));
    }
    out
}
