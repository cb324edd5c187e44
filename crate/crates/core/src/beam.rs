//! Gaussian TEM00 probe beam propagating along +x.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{require, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Waist radius (1/e² intensity), m.
    pub w0: f64,
    /// Wavelength, m.
    pub lambda: f64,
}

impl BeamParams {
    pub fn new(w0: f64, lambda: f64) -> Result<Self> {
        let p = Self { w0, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require("w0", self.w0, self.w0 > 0.0, "beam waist must be positive")?;
        require("lambda", self.lambda, self.lambda > 0.0, "wavelength must be positive")
    }

    /// Rayleigh length `pi w0^2 / lambda`.
    pub fn rayleigh_length(&self) -> f64 {
        PI * self.w0 * self.w0 / self.lambda
    }

    /// Squared beam size `w(x)^2`.
    pub fn beam_size_sq(&self, x: f64) -> f64 {
        let ratio = x / self.rayleigh_length();
        self.w0 * self.w0 * (1.0 + ratio * ratio)
    }

    pub fn beam_size(&self, x: f64) -> f64 {
        self.beam_size_sq(x).sqrt()
    }

    /// Effective section `pi w(x)^2 / 2`, m².
    pub fn beam_section(&self, x: f64) -> f64 {
        0.5 * PI * self.beam_size_sq(x)
    }

    /// Transverse weight `exp(-2 (y^2+z^2) / w(x)^2)`, equal to 1 on axis.
    pub fn weight(&self, r: &Vector3<f64>) -> f64 {
        weight_for_size_sq(r.y * r.y + r.z * r.z, self.beam_size_sq(r.x))
    }

    /// Longitudinal phase of the mode: propagation, Gouy and curvature terms.
    pub fn phase(&self, r: &Vector3<f64>) -> f64 {
        let l_r = self.rayleigh_length();
        let rho_sq = r.y * r.y + r.z * r.z;
        -2.0 * PI * r.x / self.lambda + (r.x / l_r).atan()
            - PI / self.lambda * rho_sq * r.x / (r.x * r.x + l_r * l_r)
    }

    /// Normalized mode `u(r)`, in m⁻¹; `|u|^2 = f / S`.
    pub fn mode_amplitude(&self, r: &Vector3<f64>) -> Complex64 {
        let w_sq = self.beam_size_sq(r.x);
        let rho_sq = r.y * r.y + r.z * r.z;
        let modulus = (2.0 / PI).sqrt() / w_sq.sqrt() * (-rho_sq / w_sq).exp();
        Complex64::from_polar(modulus, -self.phase(r))
    }
}

/// Gaussian weight for an arbitrary squared size. `f^j` is this function
/// evaluated at `w^2 / j`.
pub fn weight_for_size_sq(rho_sq: f64, w_sq: f64) -> f64 {
    (-2.0 * rho_sq / w_sq).exp()
}
