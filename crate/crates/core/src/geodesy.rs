//! Geodetic <-> local Cartesian conversion about a mission origin.
//!
//! Uses an equirectangular tangent plane on a spherical earth, which is
//! accurate to well under a metre over the few-kilometre extent of a
//! deployment mission.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Mean earth radius, m.
pub const EARTH_RADIUS: f64 = 6_371_000.0;

/// Largest distance from the origin the tangent plane is trusted for, m.
pub const MAX_LOCAL_RANGE: f64 = 100_000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} is outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("longitude {0} is outside [-180, 180)")]
    LongitudeOutOfRange(f64),
    #[error("point is {distance:.0} m from the frame origin, beyond the {limit:.0} m local range")]
    TooFarFromOrigin { distance: f64, limit: f64 },
    #[error("frame origin at latitude {0} is degenerate for a tangent plane")]
    DegenerateOrigin(f64),
    #[error("earth radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("local coordinates must be finite")]
    NonFinite,
    #[error("malformed \"lat,lon\" text {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// Latitude/longitude in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        let p = GeoPoint { lat, lon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(-90.0..=90.0).contains(&self.lat) {
            return Err(GeoError::LatitudeOutOfRange(self.lat));
        }
        if !(-180.0..180.0).contains(&self.lon) {
            return Err(GeoError::LongitudeOutOfRange(self.lon));
        }
        Ok(())
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.lat, self.lon)
    }
}

/// Parses `"lat,lon"` with optional whitespace around the comma.
impl FromStr for GeoPoint {
    type Err = GeoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = |reason: String| GeoError::Parse {
            text: s.to_string(),
            reason,
        };
        let mut parts = s.split(',');
        let (Some(lat), Some(lon), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err("expected exactly one comma".into()));
        };
        let lat: f64 = lat
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("latitude {:?} is not a number", lat.trim())))?;
        let lon: f64 = lon
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("longitude {:?} is not a number", lon.trim())))?;
        GeoPoint::new(lat, lon)
    }
}

/// Position in the local frame: `x` east, `y` north, metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalPoint {
    pub x: f64,
    pub y: f64,
}

impl LocalPoint {
    pub const ORIGIN: LocalPoint = LocalPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        LocalPoint { x, y }
    }

    pub fn distance_to(&self, other: &LocalPoint) -> f64 {
        local_distance(self, other)
    }
}

impl fmt::Display for LocalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.x, self.y)
    }
}

/// Tangent-plane frame anchored at a geodetic origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    origin: GeoPoint,
    earth_radius: f64,
}

impl LocalFrame {
    pub fn new(origin: GeoPoint) -> Result<Self, GeoError> {
        Self::with_radius(origin, EARTH_RADIUS)
    }

    pub fn with_radius(origin: GeoPoint, earth_radius: f64) -> Result<Self, GeoError> {
        origin.validate()?;
        if !(earth_radius > 0.0 && earth_radius.is_finite()) {
            return Err(GeoError::InvalidRadius(earth_radius));
        }
        if origin.lat.abs() >= 90.0 {
            return Err(GeoError::DegenerateOrigin(origin.lat));
        }
        Ok(LocalFrame {
            origin,
            earth_radius,
        })
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn earth_radius(&self) -> f64 {
        self.earth_radius
    }

    fn parallel_radius(&self) -> f64 {
        self.earth_radius * self.origin.lat.to_radians().cos()
    }
}

/// Wraps a longitude difference into (-180, 180].
fn wrap_delta(deg: f64) -> f64 {
    let d = (deg + 180.0).rem_euclid(360.0) - 180.0;
    if d == -180.0 {
        180.0
    } else {
        d
    }
}

/// Wraps an absolute longitude into [-180, 180).
fn wrap_lon(deg: f64) -> f64 {
    (deg + 180.0).rem_euclid(360.0) - 180.0
}

pub fn to_local(frame: &LocalFrame, p: &GeoPoint) -> Result<LocalPoint, GeoError> {
    p.validate()?;
    let dlat = p.lat - frame.origin.lat;
    let dlon = wrap_delta(p.lon - frame.origin.lon);
    let local = LocalPoint {
        x: frame.parallel_radius() * dlon.to_radians(),
        y: frame.earth_radius * dlat.to_radians(),
    };
    let distance = local.x.hypot(local.y);
    if distance > MAX_LOCAL_RANGE {
        return Err(GeoError::TooFarFromOrigin {
            distance,
            limit: MAX_LOCAL_RANGE,
        });
    }
    Ok(local)
}

pub fn to_geo(frame: &LocalFrame, p: &LocalPoint) -> Result<GeoPoint, GeoError> {
    if !(p.x.is_finite() && p.y.is_finite()) {
        return Err(GeoError::NonFinite);
    }
    let lat = frame.origin.lat + (p.y / frame.earth_radius).to_degrees();
    let lon = frame.origin.lon + (p.x / frame.parallel_radius()).to_degrees();
    GeoPoint::new(lat, wrap_lon(lon))
}

pub fn local_distance(a: &LocalPoint, b: &LocalPoint) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}
