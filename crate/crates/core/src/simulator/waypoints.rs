//! `WAYPT_UPDATE` strings: `x1,y1:x2,y2:...:xn,yn`, local metres.

use thiserror::Error;

use crate::geodesy::LocalPoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WayptError {
    #[error("empty waypoint list")]
    Empty,
    #[error("pair {index} ({text:?}): {reason}")]
    Malformed {
        /// 1-based position of the offending pair.
        index: usize,
        text: String,
        reason: String,
    },
}

/// Ordered, non-empty list of local waypoints.
#[derive(Debug, Clone, PartialEq)]
pub struct WayptList(Vec<LocalPoint>);

impl WayptList {
    pub fn points(&self) -> &[LocalPoint] {
        &self.0
    }

    pub fn into_points(self) -> Vec<LocalPoint> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Renders back to the wire format.
    pub fn to_wire(&self) -> String {
        self.0
            .iter()
            .map(|p| format!("{},{}", p.x, p.y))
            .collect::<Vec<_>>()
            .join(":")
    }
}

fn parse_pair(index: usize, text: &str) -> Result<LocalPoint, WayptError> {
    let bad = |reason: String| WayptError::Malformed {
        index,
        text: text.to_string(),
        reason,
    };
    let (x, y) = text.split_once(',').ok_or_else(|| bad("expected x,y".into()))?;
    let num = |axis: &str, s: &str| -> Result<f64, WayptError> {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| bad(format!("{axis} {:?} is not a finite number", s.trim())))
    };
    Ok(LocalPoint::new(num("x", x)?, num("y", y)?))
}

pub fn parse_waypt_update(text: &str) -> Result<WayptList, WayptError> {
    if text.trim().is_empty() {
        return Err(WayptError::Empty);
    }
    text.split(':')
        .enumerate()
        .map(|(i, pair)| parse_pair(i + 1, pair))
        .collect::<Result<Vec<_>, _>>()
        .map(WayptList)
}

/// A single `x,y` point.
pub fn parse_local_point(text: &str) -> Result<LocalPoint, WayptError> {
    if text.trim().is_empty() {
        return Err(WayptError::Empty);
    }
    parse_pair(1, text)
}
