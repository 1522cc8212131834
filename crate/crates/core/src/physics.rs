//! Closed-form hydrodynamics for a body towed at the surface.
//!
//! Covers the quasi-static towline balance (drag against the horizontal
//! component of line tension) and a single monochromatic plane progressive
//! wave in deep water, which together give the minimum tow speed that keeps
//! the line taut against wave-induced surge.
//!
//! All quantities are SI. Knots are only accepted at the edges through
//! [`knots_to_mps`] and [`mps_to_knots`].

use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

/// Metres per second in one international knot.
pub const KNOT: f64 = 0.514444;

/// Standard gravity used when none is configured.
pub const DEFAULT_GRAVITY: f64 = 9.81;

/// Surface seawater density, kg/m³.
pub const SEAWATER_DENSITY: f64 = 1020.0;

/// Drag coefficient of a half-sphere nose.
pub const HALF_SPHERE_DRAG: f64 = 0.42;

/// Effective cross-sectional area of the towed vehicle, m².
pub const DEFAULT_SIGMA: f64 = 0.057;

/// Towline angle to the horizontal, degrees.
pub const DEFAULT_THETA_DEG: f64 = 45.0;

/// Safe working load of the towline, N.
pub const DEFAULT_RATED_LOAD: f64 = 2.0e3;

/// Top speed of the towing catamaran (11 kn), m/s.
pub const MAX_ASV_SPEED: f64 = 5.66;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("{name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("towline angle {theta} rad leaves cos(theta) <= 0")]
    DegenerateAngle { theta: f64 },
    #[error("depth z = {z} m is above the mean free surface")]
    AboveSurface { z: f64 },
    #[error("speed must be finite and non-negative, got {0} m/s")]
    NegativeSpeed(f64),
}

fn require(name: &'static str, value: f64, ok: bool, requirement: &'static str) -> Result<(), PhysicsError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(PhysicsError::InvalidParameter {
            name,
            requirement,
            value,
        })
    }
}

fn check_speed(speed: f64) -> Result<(), PhysicsError> {
    if speed.is_finite() && speed >= 0.0 {
        Ok(())
    } else {
        Err(PhysicsError::NegativeSpeed(speed))
    }
}

pub fn knots_to_mps(knots: f64) -> f64 {
    knots * KNOT
}

pub fn mps_to_knots(mps: f64) -> f64 {
    mps / KNOT
}

/// Fluid, drag and geometry parameters of the towed body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowConfig {
    /// Fluid density, kg/m³.
    pub rho: f64,
    /// Drag coefficient.
    pub c_d: f64,
    /// Effective cross-sectional area, m².
    pub sigma: f64,
    /// Angle between towline and horizontal, radians.
    pub theta: f64,
    /// Safe working load of the towline, N.
    pub rated_load: f64,
}

impl TowConfig {
    pub fn new(rho: f64, c_d: f64, sigma: f64, theta: f64, rated_load: f64) -> Result<Self, PhysicsError> {
        let cfg = TowConfig {
            rho,
            c_d,
            sigma,
            theta,
            rated_load,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_theta_deg(rho: f64, c_d: f64, sigma: f64, theta_deg: f64, rated_load: f64) -> Result<Self, PhysicsError> {
        Self::new(rho, c_d, sigma, theta_deg.to_radians(), rated_load)
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        require("rho", self.rho, self.rho > 0.0, "> 0")?;
        require("c_d", self.c_d, self.c_d > 0.0, "> 0")?;
        require("sigma", self.sigma, self.sigma > 0.0, "> 0")?;
        require("rated_load", self.rated_load, self.rated_load > 0.0, "> 0")?;
        require(
            "theta",
            self.theta,
            (0.0..FRAC_PI_2).contains(&self.theta),
            "in [0, pi/2)",
        )?;
        if self.theta.cos() <= 0.0 {
            return Err(PhysicsError::DegenerateAngle { theta: self.theta });
        }
        Ok(())
    }
}

impl Default for TowConfig {
    fn default() -> Self {
        TowConfig {
            rho: SEAWATER_DENSITY,
            c_d: HALF_SPHERE_DRAG,
            sigma: DEFAULT_SIGMA,
            theta: DEFAULT_THETA_DEG.to_radians(),
            rated_load: DEFAULT_RATED_LOAD,
        }
    }
}

/// Hydrodynamic drag on the towed body, `(rho/2) C_D sigma v^2`.
pub fn drag_force(cfg: &TowConfig, speed: f64) -> Result<f64, PhysicsError> {
    cfg.validate()?;
    check_speed(speed)?;
    Ok(0.5 * cfg.rho * cfg.c_d * cfg.sigma * speed * speed)
}

/// Towline tension that balances drag when the line makes angle `theta`
/// with the horizontal.
pub fn tow_tension(cfg: &TowConfig, speed: f64) -> Result<f64, PhysicsError> {
    let cos = cfg.theta.cos();
    if cfg.theta.abs() >= FRAC_PI_2 || cos <= 0.0 {
        return Err(PhysicsError::DegenerateAngle { theta: cfg.theta });
    }
    Ok(drag_force(cfg, speed)? / cos)
}

/// A monochromatic plane progressive wave travelling in +x over deep water.
///
/// The wavenumber is derived from the period through the deep-water
/// dispersion relation `k = omega^2 / g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveField {
    amplitude: f64,
    period: f64,
    gravity: f64,
    phase: f64,
    angular_frequency: f64,
    wavenumber: f64,
}

impl WaveField {
    pub fn new(amplitude: f64, period: f64, gravity: f64, phase: f64) -> Result<Self, PhysicsError> {
        require("amplitude", amplitude, amplitude >= 0.0, ">= 0")?;
        require("period", period, period > 0.0, "> 0")?;
        require("gravity", gravity, gravity > 0.0, "> 0")?;
        require("phase", phase, true, "finite")?;
        let angular_frequency = 2.0 * PI / period;
        Ok(WaveField {
            amplitude,
            period,
            gravity,
            phase,
            angular_frequency,
            wavenumber: angular_frequency * angular_frequency / gravity,
        })
    }

    /// Wave with standard gravity and zero phase.
    pub fn deep_water(amplitude: f64, period: f64) -> Result<Self, PhysicsError> {
        Self::new(amplitude, period, DEFAULT_GRAVITY, 0.0)
    }

    /// Flat sea.
    pub fn calm() -> Self {
        Self::deep_water(0.0, 1.0).expect("calm sea is valid")
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn angular_frequency(&self) -> f64 {
        self.angular_frequency
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase = phase;
        self
    }

    fn argument(&self, x: f64, t: f64) -> f64 {
        self.wavenumber * x - self.angular_frequency * t + self.phase
    }

    /// Free-surface elevation `A sin(kx - omega t + phase)`.
    pub fn elevation(&self, x: f64, t: f64) -> f64 {
        self.amplitude * self.argument(x, t).sin()
    }
}

fn check_depth(z: f64) -> Result<(), PhysicsError> {
    if z <= 0.0 {
        Ok(())
    } else {
        Err(PhysicsError::AboveSurface { z })
    }
}

/// Velocity potential `(gA/omega) e^{kz} sin(kx - omega t + phase)`.
///
/// `z` is measured upward from the mean free surface, so the fluid is at
/// `z <= 0`.
pub fn velocity_potential(w: &WaveField, x: f64, z: f64, t: f64) -> Result<f64, PhysicsError> {
    check_depth(z)?;
    if w.amplitude == 0.0 {
        return Ok(0.0);
    }
    Ok(w.gravity * w.amplitude / w.angular_frequency * (w.wavenumber * z).exp() * w.argument(x, t).sin())
}

/// Horizontal particle velocity `d(phi)/dx = A omega e^{kz} cos(kx - omega t + phase)`.
pub fn surge_velocity(w: &WaveField, x: f64, z: f64, t: f64) -> Result<f64, PhysicsError> {
    check_depth(z)?;
    Ok(w.amplitude * w.angular_frequency * (w.wavenumber * z).exp() * w.argument(x, t).cos())
}

/// Peak surface surge velocity `A omega`, the slowest tow that never lets
/// the wave overrun the towed body.
pub fn min_release_speed(w: &WaveField) -> f64 {
    w.amplitude * w.angular_frequency
}

/// True when towing at `tow_speed` keeps the line taut through every wave
/// phase. The threshold itself counts as releasing.
pub fn assured_release(tow_speed: f64, w: &WaveField) -> Result<bool, PhysicsError> {
    check_speed(tow_speed)?;
    Ok(tow_speed >= min_release_speed(w))
}
