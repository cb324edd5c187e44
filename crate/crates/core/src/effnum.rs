//! Effective atom number per beam section seen through the linear phase shift.
//!
//! `sigma_general` integrates the layer number density over the beam axis
//! for arbitrary geometry. The three remaining `sigma_*` functions are the
//! closed forms valid in their respective limits; none is auto-selected.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::beam::BeamParams;
use crate::cloud::CloudParams;
use crate::error::{check_time, Result};
use crate::quad::{integrate, Tolerance};
use crate::saturation::OpticalParams;

/// Relative tolerance of the longitudinal quadrature.
pub const SIGMA_QUAD_REL_TOL: f64 = 1e-9;

/// Half-width of the longitudinal integration window in units of the cloud spread.
pub const LONGITUDINAL_SPAN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffNumInputs {
    pub cloud: CloudParams,
    pub beam: BeamParams,
}

impl EffNumInputs {
    pub fn new(cloud: CloudParams, beam: BeamParams) -> Result<Self> {
        cloud.validate()?;
        beam.validate()?;
        Ok(Self { cloud, beam })
    }

    /// `tau_w` at the waist.
    pub fn tau_w(&self) -> f64 {
        self.beam.w0 / (2.0 * self.cloud.sigma_v)
    }
}

/// Atoms per unit length in a slab of the whole cloud, atoms/m.
pub fn column_number_density(inp: &EffNumInputs, x: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let s2 = inp.cloud.spread_sq(t);
    Ok(inp.cloud.n_total / (2.0 * PI * s2).sqrt() * (-x * x / (2.0 * s2)).exp())
}

/// Gaussian-weighted atoms per unit length for a beam of squared size `w_sq`
/// at `x`. Shared by the linear layer density and the saturation series.
pub(crate) fn layer_density_for_size_sq(inp: &EffNumInputs, x: f64, t: f64, w_sq: f64) -> f64 {
    let c = &inp.cloud;
    let s2 = c.spread_sq(t);
    let column = c.n_total / (2.0 * PI * s2).sqrt() * (-x * x / (2.0 * s2)).exp();
    let d = 4.0 * s2 + w_sq;
    let fall = 0.5 * c.g * c.g * t.powi(4) / d;
    column * w_sq / d * (-fall).exp()
}

/// Atoms per unit length inside the beam, weighted by the transverse profile.
pub fn layer_number_density(inp: &EffNumInputs, x: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(layer_density_for_size_sq(inp, x, t, inp.beam.beam_size_sq(x)))
}

/// Layer density for the `j`-th power of the weight: beam size `w^2 / j`.
pub fn layer_number_density_power(inp: &EffNumInputs, x: f64, t: f64, j: u32) -> Result<f64> {
    check_time(t)?;
    Ok(layer_density_for_size_sq(inp, x, t, inp.beam.beam_size_sq(x) / j as f64))
}

/// Integration window on the beam axis at time `t`.
pub(crate) fn longitudinal_window(inp: &EffNumInputs, t: f64) -> (f64, f64) {
    let half = LONGITUDINAL_SPAN * inp.cloud.spread_sq(t).sqrt();
    (-half, half)
}

/// `sigma(t)` for arbitrary `w / sigma_r` and `sigma_r / l_R`, atoms/m².
pub fn sigma_general(inp: &EffNumInputs, t: f64) -> Result<f64> {
    check_time(t)?;
    let (a, b) = longitudinal_window(inp, t);
    let est = integrate(
        |x| layer_density_for_size_sq(inp, x, t, inp.beam.beam_size_sq(x)) / inp.beam.beam_section(x),
        a,
        b,
        Tolerance::relative(SIGMA_QUAD_REL_TOL),
    )?;
    Ok(est.value)
}

fn lorentz_with_fall(inp: &EffNumInputs, t: f64, extra_sq: f64) -> f64 {
    let c = &inp.cloud;
    let tau_r = c.tau_r();
    let denom = tau_r * tau_r + extra_sq + t * t;
    c.n_total / (2.0 * PI * c.sigma_v * c.sigma_v * denom) * (-t.powi(4) * c.fall_scale().inv_sq() / denom).exp()
}

/// Small-waist limit `w << sigma_r`, any Rayleigh length.
pub fn sigma_small_waist(inp: &EffNumInputs, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(lorentz_with_fall(inp, t, 0.0))
}

/// Long-Rayleigh limit `sigma_r << l_R`, any waist.
pub fn sigma_long_rayleigh(inp: &EffNumInputs, t: f64) -> Result<f64> {
    check_time(t)?;
    let tw = inp.tau_w();
    Ok(lorentz_with_fall(inp, t, tw * tw))
}

/// Single-formula approximation for `tau_w << tau_r << tau_g`.
pub fn sigma_high_temperature(inp: &EffNumInputs, t: f64) -> Result<f64> {
    check_time(t)?;
    let c = &inp.cloud;
    let tau_r = c.tau_r();
    let denom = tau_r * tau_r + t * t;
    Ok(c.n_total / (2.0 * PI * c.sigma_v * c.sigma_v * denom) * (-t * t * c.fall_scale().inv_sq()).exp())
}

/// Resonant absorption cross-section over two, `3 lambda^2 / (4 pi)`.
pub fn coupling_area(beam: &BeamParams) -> f64 {
    3.0 * beam.lambda * beam.lambda / (4.0 * PI)
}

/// Relative field change `dA/A = -alpha_l (3 lambda^2 / 4 pi) sigma` for a given areal density.
pub fn field_shift_for(beam: &BeamParams, opt: &OpticalParams, sigma: f64) -> Complex64 {
    -opt.linear_polarizability() * coupling_area(beam) * sigma
}

/// Linear-regime `dA/A` using the general `sigma(t)`. Its imaginary part is
/// the phase shift, and `2 Re` is the fractional intensity change.
pub fn linear_field_shift(inp: &EffNumInputs, opt: &OpticalParams, t: f64) -> Result<Complex64> {
    Ok(field_shift_for(&inp.beam, opt, sigma_general(inp, t)?))
}
