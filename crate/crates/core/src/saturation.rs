//! Saturated polarizability and the effective number seen through the
//! nonlinear phase shift.

use std::cell::Cell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::beam::weight_for_size_sq;
use crate::cloud::density;
use crate::effnum::{
    field_shift_for, layer_density_for_size_sq, longitudinal_window, sigma_long_rayleigh, EffNumInputs,
    SIGMA_QUAD_REL_TOL,
};
use crate::error::{check_time, require, Error, Result};
use crate::quad::{integrate, integrate_2d, Tolerance};
use nalgebra::Vector3;

/// The power series in `-2 s_m` is used only while `2 s_m` stays below this.
pub const SERIES_LIMIT: f64 = 0.8;
pub const SERIES_REL_STOP: f64 = 1e-12;
pub const SERIES_MAX_TERMS: usize = 200;

/// Below this value of `w^2 / (4 spread^2)` the density is treated as
/// uniform across the beam and the transverse integral is done in closed form.
const UNIFORM_TRANSVERSE_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    /// Detuning in units of the dipole decay rate.
    pub delta: f64,
    /// On-axis saturation parameter at the waist.
    pub s_m0: f64,
}

impl OpticalParams {
    pub fn new(delta: f64, s_m0: f64) -> Result<Self> {
        let p = Self { delta, s_m0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        require("delta", self.delta, true, "detuning must be finite")?;
        require("s_m0", self.s_m0, self.s_m0 >= 0.0, "saturation parameter must be non-negative")
    }

    /// `alpha_l = 1 / (1 + i delta)`.
    pub fn linear_polarizability(&self) -> Complex64 {
        Complex64::new(1.0, self.delta).inv()
    }

    /// `alpha = alpha_l / (1 + 2 s)` at local saturation `s`.
    pub fn polarizability(&self, s_local: f64) -> Complex64 {
        self.linear_polarizability() / (1.0 + 2.0 * s_local)
    }
}

/// On-axis saturation at `x`; falls off with the inverse beam section.
pub fn saturation_on_axis(opt: &OpticalParams, inp: &EffNumInputs, x: f64) -> f64 {
    opt.s_m0 * inp.beam.w0 * inp.beam.w0 / inp.beam.beam_size_sq(x)
}

/// `ln(1 + 2 s) / (2 s)`, continuous at `s = 0`.
pub fn saturation_factor(s: f64) -> f64 {
    let two_s = 2.0 * s;
    if two_s < 1e-8 {
        1.0 - two_s / 2.0 + two_s * two_s / 3.0
    } else {
        two_s.ln_1p() / two_s
    }
}

/// Closed form valid for `w << sigma_r` and `sigma_r << l_R`: the linear
/// `sigma(t)` times a time-independent saturation factor.
pub fn sigma_saturated_closed(inp: &EffNumInputs, opt: &OpticalParams, t: f64) -> Result<f64> {
    Ok(sigma_long_rayleigh(inp, t)? * saturation_factor(opt.s_m0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SeriesOutcome {
    pub value: f64,
    pub terms: usize,
}

/// `sum_k (-2 s)^k dn^(1+k)` at one layer.
pub(crate) fn saturated_layer_series(inp: &EffNumInputs, x: f64, t: f64, s: f64) -> Result<SeriesOutcome> {
    let w_sq = inp.beam.beam_size_sq(x);
    let ratio = -2.0 * s;
    let mut sum = 0.0;
    let mut power = 1.0;
    for k in 0..SERIES_MAX_TERMS {
        let term = power * layer_density_for_size_sq(inp, x, t, w_sq / (k + 1) as f64);
        sum += term;
        if term.abs() <= SERIES_REL_STOP * sum.abs() || sum == 0.0 {
            return Ok(SeriesOutcome { value: sum, terms: k + 1 });
        }
        power *= ratio;
    }
    Err(Error::SeriesNonConvergence {
        terms: SERIES_MAX_TERMS,
        last_relative: (power / ratio * layer_density_for_size_sq(inp, x, t, w_sq / SERIES_MAX_TERMS as f64)
            / sum)
            .abs(),
    })
}

/// Direct evaluation of the transverse integral `int f/(1+2 s f) rho dy dz`.
fn saturated_layer_direct(inp: &EffNumInputs, x: f64, t: f64, s: f64) -> Result<f64> {
    let w_sq = inp.beam.beam_size_sq(x);
    let spread_sq = inp.cloud.spread_sq(t);
    if w_sq / (4.0 * spread_sq) < UNIFORM_TRANSVERSE_RATIO {
        let on_axis = density(&inp.cloud, &Vector3::new(x, 0.0, 0.0), t)?;
        return Ok(on_axis * inp.beam.beam_section(x) * saturation_factor(s));
    }
    let lim = 8.0 * w_sq.sqrt();
    let est = integrate_2d(
        |y, z| {
            let f = weight_for_size_sq(y * y + z * z, w_sq);
            f / (1.0 + 2.0 * s * f) * density(&inp.cloud, &Vector3::new(x, y, z), t).unwrap_or(0.0)
        },
        (-lim, lim),
        (-lim, lim),
        Tolerance::relative(SIGMA_QUAD_REL_TOL / 10.0),
    )?;
    Ok(est.value)
}

/// Saturated layer density `dn_s/dx` at `x`.
pub fn saturated_layer_density(inp: &EffNumInputs, opt: &OpticalParams, x: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = saturation_on_axis(opt, inp, x);
    if 2.0 * s < SERIES_LIMIT {
        match saturated_layer_series(inp, x, t, s) {
            Ok(out) => return Ok(out.value),
            Err(Error::SeriesNonConvergence { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    saturated_layer_direct(inp, x, t, s)
}

/// `sigma_s(t)` for arbitrary geometry.
pub fn sigma_saturated_general(inp: &EffNumInputs, opt: &OpticalParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let (a, b) = longitudinal_window(inp, t);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let est = integrate(
        |x| match saturated_layer_density(inp, opt, x, t) {
            Ok(v) => v / inp.beam.beam_section(x),
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        a,
        b,
        Tolerance::relative(SIGMA_QUAD_REL_TOL),
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(est.value)
}

/// `dA/A` with saturation.
pub fn nonlinear_field_shift(inp: &EffNumInputs, opt: &OpticalParams, t: f64) -> Result<Complex64> {
    Ok(field_shift_for(&inp.beam, opt, sigma_saturated_general(inp, opt, t)?))
}
