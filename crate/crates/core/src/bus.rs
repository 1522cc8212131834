//! In-process topic bus with latched, pull-based delivery.
//!
//! Every topic keeps its most recent message; a new subscription starts
//! with that value and then sees later publishes in order. Subscribers pull
//! from their own queue, so nothing is delivered behind the caller's back.
//!
//! Ordering is FIFO per topic only. Two messages on different topics carry
//! no ordering relation to each other, even if one was published first.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard, Weak};

use thiserror::Error;

use crate::geodesy::{GeoPoint, LocalPoint};

/// Vehicle navigation position.
pub const POSITION: &str = "POSITION";
/// Boolean deployment trigger (default alias).
pub const DEPLOY_TRIGGER: &str = "DEPLOY_TRIGGER";
/// Waypoint list for the released vehicle, `x1,y1:...:xn,yn`.
pub const WAYPT_UPDATE: &str = "WAYPT_UPDATE";
/// Emitted by the simulator when the tether comes free.
pub const DEPLOY_EVENT: &str = "DEPLOY_EVENT";

/// Queue length at which a subscription logs a warning.
pub const DEFAULT_HIGH_WATER: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BusError {
    #[error("invalid topic name {0:?}: must be non-empty without whitespace")]
    InvalidTopic(String),
    #[error("topic {topic} carries {expected} payloads, got {got}")]
    PayloadMismatch {
        topic: String,
        expected: PayloadKind,
        got: PayloadKind,
    },
    #[error("topic {topic}: timestamp {got} precedes previous {previous}")]
    TimestampRegression { topic: String, previous: f64, got: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Topic(String);

impl Topic {
    pub fn new(name: impl Into<String>) -> Result<Self, BusError> {
        let name = name.into();
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(BusError::InvalidTopic(name));
        }
        Ok(Topic(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Local(LocalPoint),
    Geo(GeoPoint),
    Bool(bool),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Position,
    Bool,
    Text,
}

impl fmt::Display for PayloadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PayloadKind::Position => "position",
            PayloadKind::Bool => "boolean",
            PayloadKind::Text => "string",
        })
    }
}

impl Payload {
    /// Local and geodetic positions share a kind so a topic may carry either.
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::Local(_) | Payload::Geo(_) => PayloadKind::Position,
            Payload::Bool(_) => PayloadKind::Bool,
            Payload::Text(_) => PayloadKind::Text,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub topic: Topic,
    pub payload: Payload,
    pub timestamp: f64,
    pub seq: u64,
}

type Queue = Arc<Mutex<VecDeque<Message>>>;

struct TopicState {
    kind: PayloadKind,
    seq: u64,
    latched: Option<Message>,
    subscribers: Vec<Weak<Mutex<VecDeque<Message>>>>,
}

struct Inner {
    topics: HashMap<Topic, TopicState>,
    // Subscriptions made before a topic's first publish.
    pending: HashMap<Topic, Vec<Weak<Mutex<VecDeque<Message>>>>>,
    high_water: usize,
}

/// Cloneable handle to a shared bus.
#[derive(Clone)]
pub struct Bus {
    inner: Arc<Mutex<Inner>>,
}

impl Default for Bus {
    fn default() -> Self {
        Self::new()
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Bus {
    pub fn new() -> Self {
        Self::with_high_water(DEFAULT_HIGH_WATER)
    }

    pub fn with_high_water(high_water: usize) -> Self {
        Bus {
            inner: Arc::new(Mutex::new(Inner {
                topics: HashMap::new(),
                pending: HashMap::new(),
                high_water,
            })),
        }
    }

    /// Publishes on `topic`, registering it on first use. Returns the
    /// message's sequence number, starting at 1 per topic.
    pub fn publish(&self, topic: &Topic, payload: Payload, timestamp: f64) -> Result<u64, BusError> {
        let mut inner = lock(&self.inner);
        let high_water = inner.high_water;
        let pending = inner.pending.remove(topic).unwrap_or_default();
        let state = inner.topics.entry(topic.clone()).or_insert_with(|| TopicState {
            kind: payload.kind(),
            seq: 0,
            latched: None,
            subscribers: Vec::new(),
        });
        state.subscribers.extend(pending);

        if state.kind != payload.kind() {
            return Err(BusError::PayloadMismatch {
                topic: topic.to_string(),
                expected: state.kind,
                got: payload.kind(),
            });
        }
        if let Some(prev) = &state.latched {
            if timestamp < prev.timestamp {
                return Err(BusError::TimestampRegression {
                    topic: topic.to_string(),
                    previous: prev.timestamp,
                    got: timestamp,
                });
            }
        }

        state.seq += 1;
        let msg = Message {
            topic: topic.clone(),
            payload,
            timestamp,
            seq: state.seq,
        };
        state.subscribers.retain(|weak| match weak.upgrade() {
            Some(queue) => {
                let mut q = lock(&queue);
                q.push_back(msg.clone());
                if q.len() == high_water {
                    log::warn!("subscription on {topic} reached {high_water} undrained messages");
                }
                true
            }
            None => false,
        });
        let seq = msg.seq;
        state.latched = Some(msg);
        Ok(seq)
    }

    pub fn subscribe(&self, topic: &Topic) -> Subscription {
        let queue: Queue = Arc::new(Mutex::new(VecDeque::new()));
        let mut inner = lock(&self.inner);
        match inner.topics.get_mut(topic) {
            Some(state) => {
                if let Some(latched) = &state.latched {
                    lock(&queue).push_back(latched.clone());
                }
                state.subscribers.push(Arc::downgrade(&queue));
            }
            None => inner
                .pending
                .entry(topic.clone())
                .or_default()
                .push(Arc::downgrade(&queue)),
        }
        Subscription {
            topic: topic.clone(),
            queue,
        }
    }

    /// Most recent message on `topic`, if any.
    pub fn latest(&self, topic: &Topic) -> Option<Message> {
        lock(&self.inner).topics.get(topic).and_then(|s| s.latched.clone())
    }
}

impl fmt::Debug for Bus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = lock(&self.inner);
        let mut topics: Vec<_> = inner.topics.keys().map(Topic::as_str).collect();
        topics.sort_unstable();
        f.debug_struct("Bus").field("topics", &topics).finish()
    }
}

/// Receiving end of one subscription. Dropping it unsubscribes.
#[derive(Debug)]
pub struct Subscription {
    topic: Topic,
    queue: Queue,
}

impl Subscription {
    pub fn topic(&self) -> &Topic {
        &self.topic
    }

    pub fn try_recv(&self) -> Option<Message> {
        lock(&self.queue).pop_front()
    }

    /// Takes every pending message in publish order.
    pub fn drain(&self) -> Vec<Message> {
        lock(&self.queue).drain(..).collect()
    }

    /// Takes every pending message and keeps only the newest.
    pub fn drain_latest(&self) -> Option<Message> {
        let mut q = lock(&self.queue);
        let last = q.pop_back();
        q.clear();
        last
    }

    pub fn pending(&self) -> usize {
        lock(&self.queue).len()
    }
}
