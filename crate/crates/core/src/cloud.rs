//! Freely falling Gaussian cloud: phase-space density, spatial density and
//! the characteristic time scales of expansion, fall and beam transit.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::beam::BeamParams;
use crate::error::{check_time, require, Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudParams {
    /// Mean total atom number.
    pub n_total: f64,
    /// Initial rms radius per axis, m.
    pub sigma_r: f64,
    /// Thermal rms velocity per axis, m/s.
    pub sigma_v: f64,
    /// Magnitude of gravity, pointing along -z, m/s².
    pub g: f64,
}

impl CloudParams {
    pub fn new(n_total: f64, sigma_r: f64, sigma_v: f64, g: f64) -> Result<Self> {
        let c = Self {
            n_total,
            sigma_r,
            sigma_v,
            g,
        };
        c.validate()?;
        Ok(c)
    }

    /// Thermal velocity from temperature (K) and atomic mass (kg): `sigma_v^2 = k_B T / m`.
    pub fn from_temperature(n_total: f64, sigma_r: f64, temperature: f64, mass: f64, g: f64) -> Result<Self> {
        require("temperature", temperature, temperature > 0.0, "temperature must be positive")?;
        require("mass", mass, mass > 0.0, "atomic mass must be positive")?;
        Self::new(n_total, sigma_r, (BOLTZMANN * temperature / mass).sqrt(), g)
    }

    pub fn validate(&self) -> Result<()> {
        require("n_total", self.n_total, self.n_total >= 0.0, "atom number must be non-negative")?;
        require("sigma_r", self.sigma_r, self.sigma_r > 0.0, "cloud radius must be positive")?;
        require("sigma_v", self.sigma_v, self.sigma_v > 0.0, "thermal velocity must be positive")?;
        require("g", self.g, self.g >= 0.0, "gravity is a non-negative magnitude")
    }

    /// Gravity as a vector, `(0, 0, -g)`.
    pub fn gravity(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, -self.g)
    }

    /// Per-axis variance of the cloud at time `t`: `sigma_r^2 + sigma_v^2 t^2`.
    pub fn spread_sq(&self, t: f64) -> f64 {
        self.sigma_r * self.sigma_r + self.sigma_v * self.sigma_v * t * t
    }

    /// Position of the falling cloud center.
    pub fn center(&self, t: f64) -> Vector3<f64> {
        0.5 * self.gravity() * t * t
    }

    pub fn tau_r(&self) -> f64 {
        self.sigma_r / self.sigma_v
    }

    pub fn fall_scale(&self) -> FallScale {
        if self.g == 0.0 {
            FallScale::NoGravity
        } else {
            FallScale::Finite(2.0 * std::f64::consts::SQRT_2 * self.sigma_v / self.g)
        }
    }
}

/// The gravity time scale `tau_g = 2 sqrt(2) sigma_v / g`, with an explicit
/// variant for `g = 0` so that gravity exponents vanish exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FallScale {
    NoGravity,
    Finite(f64),
}

impl FallScale {
    pub fn seconds(&self) -> f64 {
        match *self {
            FallScale::NoGravity => f64::INFINITY,
            FallScale::Finite(t) => t,
        }
    }

    /// `1 / tau_g^2`, exactly zero without gravity.
    pub fn inv_sq(&self) -> f64 {
        match *self {
            FallScale::NoGravity => 0.0,
            FallScale::Finite(t) => 1.0 / (t * t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeScales {
    /// Ballistic expansion time `sigma_r / sigma_v`.
    pub tau_r: f64,
    pub tau_g: FallScale,
    sigma_v: f64,
    beam: BeamParams,
}

impl TimeScales {
    /// Transit time through the beam at `x`: `w(x) / (2 sigma_v)`.
    pub fn tau_w_at(&self, x: f64) -> f64 {
        self.beam.beam_size(x) / (2.0 * self.sigma_v)
    }

    pub fn tau_w(&self) -> f64 {
        self.tau_w_at(0.0)
    }

    /// `zeta = tau_r^2 / tau_g^2`.
    pub fn zeta(&self) -> f64 {
        self.tau_r * self.tau_r * self.tau_g.inv_sq()
    }
}

pub fn time_scales(c: &CloudParams, b: &BeamParams) -> Result<TimeScales> {
    if !(c.sigma_v > 0.0) {
        return Err(Error::DegenerateCloud(c.sigma_v));
    }
    Ok(TimeScales {
        tau_r: c.tau_r(),
        tau_g: c.fall_scale(),
        sigma_v: c.sigma_v,
        beam: *b,
    })
}

/// Phase-space density at time `t`, obtained by mapping `(r, v)` back to
/// the release instant and evaluating the initial Gaussian there.
pub fn phase_space_density(c: &CloudParams, r: &Vector3<f64>, v: &Vector3<f64>, t: f64) -> Result<f64> {
    check_time(t)?;
    let g = c.gravity();
    let r0 = r - v * t + 0.5 * g * t * t;
    let v0 = v - g * t;
    let norm = c.n_total / (2.0 * PI * c.sigma_r * c.sigma_v).powi(3);
    Ok(norm
        * (-r0.norm_squared() / (2.0 * c.sigma_r * c.sigma_r) - v0.norm_squared() / (2.0 * c.sigma_v * c.sigma_v))
            .exp())
}

/// Spatial density at time `t`, atoms/m³.
pub fn density(c: &CloudParams, r: &Vector3<f64>, t: f64) -> Result<f64> {
    check_time(t)?;
    let s2 = c.spread_sq(t);
    let d = r - c.center(t);
    Ok(c.n_total / (2.0 * PI * s2).powf(1.5) * (-d.norm_squared() / (2.0 * s2)).exp())
}

/// Density at the release point written with the time scales.
pub fn center_density(c: &CloudParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let tau_r = c.tau_r();
    let peak = c.n_total / (2.0 * PI * c.sigma_r * c.sigma_r).powf(1.5);
    let lorentz = tau_r * tau_r / (tau_r * tau_r + t * t);
    let fall = t.powi(4) * c.fall_scale().inv_sq() / (tau_r * tau_r + t * t);
    Ok(peak * lorentz.powf(1.5) * (-fall).exp())
}

/// Late-time form of [`center_density`] where the gravity exponent is `t^2 / tau_g^2`.
pub fn center_density_late(c: &CloudParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let tau_r = c.tau_r();
    let peak = c.n_total / (2.0 * PI * c.sigma_r * c.sigma_r).powf(1.5);
    let lorentz = tau_r * tau_r / (tau_r * tau_r + t * t);
    Ok(peak * lorentz.powf(1.5) * (-t * t * c.fall_scale().inv_sq()).exp())
}
