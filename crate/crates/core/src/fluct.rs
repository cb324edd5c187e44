//! Fluctuations of the effective atom number `N(t)` in the long-Rayleigh
//! regime: mean, variance, two-time covariance and noise spectra.
//!
//! Exact expressions take raw times. The quasistationary family works in
//! the scaled variables `T / tau_r` and `tau / tau_w` through
//! [`ScaledFluctParams`], and is valid for `tau_w << tau_r`.
//!
//! Spectra use `|omega|`, so they are even in frequency and the normalized
//! spectrum integrates to one over the whole frequency axis.

use std::f64::consts::PI;

use crate::effnum::EffNumInputs;
use crate::error::{check_time, Error, Result};
use crate::special::{factorial, ln_factorial, log_sum_exp, DIRECT_FACTORIAL_MAX};

pub const SERIES_REL_STOP: f64 = 1e-12;
pub const SERIES_MAX_TERMS: usize = 200;

struct Scales {
    n_total: f64,
    tau_r_sq: f64,
    tau_w_sq: f64,
    inv_tau_g_sq: f64,
}

fn scales(inp: &EffNumInputs) -> Scales {
    let tau_r = inp.cloud.tau_r();
    let tau_w = inp.tau_w();
    Scales {
        n_total: inp.cloud.n_total,
        tau_r_sq: tau_r * tau_r,
        tau_w_sq: tau_w * tau_w,
        inv_tau_g_sq: inp.cloud.fall_scale().inv_sq(),
    }
}

/// `<N(t)>`, equal to `sigma_long_rayleigh(t) * pi w0^2 / 2`.
pub fn mean_number(inp: &EffNumInputs, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = scales(inp);
    let denom = s.tau_r_sq + s.tau_w_sq + t * t;
    Ok(s.n_total * s.tau_w_sq / denom * (-t.powi(4) * s.inv_tau_g_sq / denom).exp())
}

/// `<N(t), N(t)>`: the mean evaluated with `tau_w^2 -> tau_w^2 / 2`, times one half.
pub fn variance(inp: &EffNumInputs, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = scales(inp);
    let denom = 2.0 * s.tau_r_sq + s.tau_w_sq + 2.0 * t * t;
    Ok(s.n_total * s.tau_w_sq / denom * (-2.0 * t.powi(4) * s.inv_tau_g_sq / denom).exp())
}

/// Exact two-time covariance `<N(T + tau/2), N(T - tau/2)>`.
pub fn covariance_exact(inp: &EffNumInputs, mid: f64, delay: f64) -> Result<f64> {
    check_time(mid + 0.5 * delay)?;
    check_time(mid - 0.5 * delay)?;
    let s = scales(inp);
    let n0 = s.n_total * s.tau_w_sq / (s.tau_r_sq + s.tau_w_sq);
    let tau_sq = delay * delay;
    let t_sq = mid * mid;
    let spread = s.tau_r_sq + 0.5 * s.tau_w_sq;
    let gap = tau_sq + 2.0 * s.tau_w_sq;
    let denom = 2.0 * s.tau_w_sq * t_sq + spread * gap;
    let l = s.tau_w_sq * (s.tau_r_sq + s.tau_w_sq) / denom;
    let fall_num = (t_sq + 0.25 * tau_sq).powi(2) * gap + 4.0 * spread * t_sq * tau_sq;
    let m = fall_num * s.inv_tau_g_sq / denom;
    Ok(n0 * l * (-m).exp())
}

/// Which prefactor `n(0)` the quasistationary expressions carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prefactor {
    /// `N tau_w^2 / (tau_r^2 + tau_w^2)`.
    Exact,
    /// `N tau_w^2 / tau_r^2`, consistent with the rest of the small-waist expansion.
    SmallWaist,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledFluctParams {
    pub n0: f64,
    pub tau_r: f64,
    pub tau_w: f64,
    /// `tau_r^2 / tau_g^2`, zero without gravity.
    pub zeta: f64,
}

/// Fall-time dependent coefficients of the quasistationary covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallCoefficients {
    /// `2 (1 + (T/tau_r)^2)`
    pub alpha_sq: f64,
    /// `(T/tau_r)^2 (4 + (T/tau_r)^2)`
    pub a: f64,
    /// `2 (T/tau_r)^2 (2 + (T/tau_r)^2)^2`
    pub b: f64,
}

impl FallCoefficients {
    pub fn alpha(&self) -> f64 {
        self.alpha_sq.sqrt()
    }
}

impl ScaledFluctParams {
    pub fn new(inp: &EffNumInputs, prefactor: Prefactor) -> Self {
        let tau_r = inp.cloud.tau_r();
        let tau_w = inp.tau_w();
        let n0 = match prefactor {
            Prefactor::Exact => inp.cloud.n_total * tau_w * tau_w / (tau_r * tau_r + tau_w * tau_w),
            Prefactor::SmallWaist => inp.cloud.n_total * tau_w * tau_w / (tau_r * tau_r),
        };
        Self {
            n0,
            tau_r,
            tau_w,
            zeta: tau_r * tau_r * inp.cloud.fall_scale().inv_sq(),
        }
    }

    pub fn small_waist(inp: &EffNumInputs) -> Self {
        Self::new(inp, Prefactor::SmallWaist)
    }

    pub fn coefficients(&self, mid: f64) -> FallCoefficients {
        let u = (mid / self.tau_r).powi(2);
        FallCoefficients {
            alpha_sq: 2.0 * (1.0 + u),
            a: u * (4.0 + u),
            b: 2.0 * u * (2.0 + u).powi(2),
        }
    }

    /// `L = 1 / ((tau/tau_w)^2 + alpha_T^2)`.
    pub fn lorentzian(&self, mid: f64, delay: f64) -> f64 {
        1.0 / ((delay / self.tau_w).powi(2) + self.coefficients(mid).alpha_sq)
    }
}

/// Number of series terms: a fixed count (`0..=k`) or adaptive truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terms {
    Fixed(usize),
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
}

/// Sums positive terms given by their logarithms. Adaptive mode stops once
/// the terms are decreasing and the newest one is below the relative stop.
fn sum_log_terms<F: FnMut(usize) -> f64>(mut ln_term: F, terms: Terms) -> Result<SeriesSum> {
    match terms {
        Terms::Fixed(k) => {
            let logs: Vec<f64> = (0..=k).map(&mut ln_term).collect();
            Ok(SeriesSum {
                value: log_sum_exp(&logs).exp(),
                terms: k + 1,
            })
        }
        Terms::Adaptive => {
            let mut logs = Vec::with_capacity(64);
            let mut previous = f64::NEG_INFINITY;
            for k in 0..SERIES_MAX_TERMS {
                let current = ln_term(k);
                logs.push(current);
                let total = log_sum_exp(&logs);
                let decreasing = current <= previous;
                if current == f64::NEG_INFINITY
                    || (decreasing && current - total <= SERIES_REL_STOP.ln())
                {
                    return Ok(SeriesSum {
                        value: total.exp(),
                        terms: k + 1,
                    });
                }
                previous = current;
            }
            let total = log_sum_exp(&logs);
            Err(Error::SeriesNonConvergence {
                terms: SERIES_MAX_TERMS,
                last_relative: (logs[logs.len() - 1] - total).exp(),
            })
        }
    }
}

/// Quasistationary covariance `n0 L exp(-zeta (a_T - b_T L))`.
pub fn covariance_quasistationary(p: &ScaledFluctParams, mid: f64, delay: f64) -> f64 {
    let c = p.coefficients(mid);
    let l = p.lorentzian(mid, delay);
    p.n0 * l * (-p.zeta * (c.a - c.b * l)).exp()
}

/// Expansion of the quasistationary covariance in powers of `L`.
pub fn covariance_series(p: &ScaledFluctParams, mid: f64, delay: f64, terms: Terms) -> Result<SeriesSum> {
    let c = p.coefficients(mid);
    let l = p.lorentzian(mid, delay);
    let x = p.zeta * c.b * l;
    let base = p.n0.ln() - p.zeta * c.a + l.ln();
    let ln_x = x.ln();
    sum_log_terms(
        |k| {
            if k == 0 {
                base
            } else {
                base + k as f64 * ln_x - ln_factorial(k as u64)
            }
        },
        terms,
    )
}

/// `ln p_k(x)` for `x >= 0`.
pub fn ln_pk(k: u64, x: f64) -> f64 {
    if k <= DIRECT_FACTORIAL_MAX {
        return pk_direct(k, x).ln();
    }
    if x == 0.0 {
        return ln_factorial(2 * k) - ln_factorial(k);
    }
    let ln_2x = (2.0 * x).ln();
    let logs: Vec<f64> = (0..=k)
        .map(|j| j as f64 * ln_2x + ln_factorial(2 * k - j) - ln_factorial(j) - ln_factorial(k - j))
        .collect();
    log_sum_exp(&logs)
}

fn pk_direct(k: u64, x: f64) -> f64 {
    let mut power = 1.0;
    let mut sum = 0.0;
    for j in 0..=k {
        sum += power * factorial(2 * k - j) / (factorial(j) * factorial(k - j));
        power *= 2.0 * x;
    }
    sum
}

/// `p_k(x) = sum_j (2x)^j (2k-j)! / (j! (k-j)!)`.
pub fn pk_polynomial(k: u64, x: f64) -> f64 {
    if k <= DIRECT_FACTORIAL_MAX {
        pk_direct(k, x)
    } else {
        ln_pk(k, x).exp()
    }
}

/// Gravity-free spectrum: `n0 (pi tau_w / alpha_T) exp(-alpha_T |omega| tau_w)`.
pub fn spectrum_exponential(p: &ScaledFluctParams, mid: f64, omega: f64) -> f64 {
    let alpha = p.coefficients(mid).alpha();
    p.n0 * PI * p.tau_w / alpha * (-alpha * omega.abs() * p.tau_w).exp()
}

/// Term-by-term Fourier transform of [`covariance_series`]. The weight of
/// the `k`-th polynomial is `(zeta b_T / (4 alpha_T^2))^k / (k!)^2`.
pub fn spectrum_series(p: &ScaledFluctParams, mid: f64, omega: f64, terms: Terms) -> Result<SeriesSum> {
    let c = p.coefficients(mid);
    let alpha = c.alpha();
    let y = alpha * omega.abs() * p.tau_w;
    let base = (p.n0 * PI * p.tau_w / alpha).ln() - y - p.zeta * c.a;
    spectral_sum(base, p.zeta * c.b / (4.0 * c.alpha_sq), y, terms)
}

/// Spectrum divided by the quasistationary variance `C_NN(T, 0)`; integrates
/// to one over `d omega / 2 pi`.
pub fn normalized_spectrum(p: &ScaledFluctParams, mid: f64, omega: f64, terms: Terms) -> Result<SeriesSum> {
    let c = p.coefficients(mid);
    let alpha = c.alpha();
    let y = alpha * omega.abs() * p.tau_w;
    let base = (PI * alpha * p.tau_w).ln() - y - p.zeta * c.b / c.alpha_sq;
    spectral_sum(base, p.zeta * c.b / (4.0 * c.alpha_sq), y, terms)
}

fn spectral_sum(base: f64, weight: f64, y: f64, terms: Terms) -> Result<SeriesSum> {
    if weight == 0.0 {
        // only the k = 0 term survives, and p_0 = 1
        return Ok(SeriesSum {
            value: base.exp(),
            terms: 1,
        });
    }
    let ln_w = weight.ln();
    sum_log_terms(
        |k| base + k as f64 * ln_w + ln_pk(k as u64, y) - 2.0 * ln_factorial(k as u64),
        terms,
    )
}

/// Zero-frequency value of [`normalized_spectrum`] from the series in
/// `(2k)! / (k!)^3`.
pub fn normalized_spectrum_peak(p: &ScaledFluctParams, mid: f64, terms: Terms) -> Result<SeriesSum> {
    let c = p.coefficients(mid);
    let base = (PI * c.alpha() * p.tau_w).ln() - p.zeta * c.b / c.alpha_sq;
    let weight = p.zeta * c.b / (4.0 * c.alpha_sq);
    if weight == 0.0 {
        return Ok(SeriesSum {
            value: base.exp(),
            terms: 1,
        });
    }
    let ln_w = weight.ln();
    sum_log_terms(
        |k| {
            let k = k as u64;
            base + k as f64 * ln_w + ln_factorial(2 * k) - 3.0 * ln_factorial(k)
        },
        terms,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumWarning {
    /// The delay window is shorter than twenty transit times.
    ShortWindow { span: f64, required: f64 },
    /// The grid spacing does not resolve the transit time.
    CoarseGrid { spacing: f64, limit: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericSpectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
    /// Bound on the contribution of the covariance tails beyond the window.
    pub truncation_bound: f64,
    pub warnings: Vec<SpectrumWarning>,
}

/// Trapezoidal cosine transform of samples on a (not necessarily uniform)
/// ascending grid.
pub fn discrete_cosine_transform(grid: &[f64], samples: &[f64], omegas: &[f64]) -> Vec<f64> {
    assert_eq!(grid.len(), samples.len(), "grid and samples differ in length");
    omegas
        .iter()
        .map(|&w| {
            grid.windows(2)
                .zip(samples.windows(2))
                .map(|(g, s)| 0.5 * (g[1] - g[0]) * (s[0] * (w * g[0]).cos() + s[1] * (w * g[1]).cos()))
                .sum()
        })
        .collect()
}

/// Spectrum obtained by transforming the exact covariance over a symmetric
/// delay grid.
pub fn spectrum_numeric(inp: &EffNumInputs, mid: f64, tau_grid: &[f64], omegas: &[f64]) -> Result<NumericSpectrum> {
    if tau_grid.len() < 3 {
        return Err(Error::InvalidInput("delay grid needs at least three points".into()));
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("delay grid must be strictly ascending".into()));
    }
    let n = tau_grid.len();
    let span = tau_grid[n - 1];
    let symmetric = tau_grid
        .iter()
        .zip(tau_grid.iter().rev())
        .all(|(a, b)| (a + b).abs() <= 1e-12 * span.abs());
    if !symmetric {
        return Err(Error::InvalidInput("delay grid must be symmetric about zero".into()));
    }
    let samples = tau_grid
        .iter()
        .map(|&tau| covariance_exact(inp, mid, tau))
        .collect::<Result<Vec<_>>>()?;

    let tau_w = inp.tau_w();
    let mut warnings = Vec::new();
    let width = tau_grid[n - 1] - tau_grid[0];
    if width < 20.0 * tau_w {
        warnings.push(SpectrumWarning::ShortWindow {
            span: width,
            required: 20.0 * tau_w,
        });
    }
    let spacing = tau_grid.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if spacing > 0.25 * tau_w {
        warnings.push(SpectrumWarning::CoarseGrid {
            spacing,
            limit: 0.25 * tau_w,
        });
    }
    // tails decay at least as 1/tau^2, so each tail integrates to at most C(edge) * edge
    let truncation_bound = 2.0 * samples[n - 1].abs() * span;

    Ok(NumericSpectrum {
        omegas: omegas.to_vec(),
        values: discrete_cosine_transform(tau_grid, &samples, omegas),
        truncation_bound,
        warnings,
    })
}
