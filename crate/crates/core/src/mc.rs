//! Monte Carlo particle oracle.
//!
//! Each realization draws a Poisson number of atoms with i.i.d. Gaussian
//! positions and velocities, propagates them ballistically and sums a
//! detection weight. Realization `i` uses its own generator seeded with
//! [`substream_seed`]`(seed, i)`, and results are reduced in index order, so
//! the statistics do not depend on the thread count.
//!
//! Normal deviates come from the ziggurat sampler of `rand_distr`.
//! Poisson counts use inversion below a mean of 30, transformed rejection
//! with squeeze (PTRS) up to 1e6, and a continuity-corrected normal above.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::beam::BeamParams;
use crate::cloud::CloudParams;
use crate::error::{check_time, require, Error, Result};
use crate::special::ln_factorial;

pub const POISSON_INVERSION_MAX: f64 = 30.0;
pub const POISSON_REJECTION_MAX: f64 = 1e6;
/// Upper bound on the number of jackknife blocks.
pub const JACKKNIFE_BLOCKS: usize = 100;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of realization `index` under `master`.
pub fn substream_seed(master: u64, index: u64) -> u64 {
    mix64(mix64(master).wrapping_add(index.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        0
    } else if mean < POISSON_INVERSION_MAX {
        poisson_inversion(rng, mean)
    } else if mean <= POISSON_REJECTION_MAX {
        poisson_ptrs(rng, mean)
    } else {
        let z: f64 = rng.sample(StandardNormal);
        (mean + mean.sqrt() * z + 0.5).floor().max(0.0) as u64
    }
}

fn poisson_inversion<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        let next = cdf + p;
        if next == cdf {
            break;
        }
        cdf = next;
    }
    k
}

fn poisson_ptrs<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        if lhs <= -mean + k * loglam - ln_factorial(k as u64) {
            return k as u64;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub positions: Vec<Vector3<f64>>,
    pub velocities: Vec<Vector3<f64>>,
}

impl Realization {
    pub fn count(&self) -> usize {
        self.positions.len()
    }
}

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Vector3<f64> {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vector3::new(x, y, z) * sigma
}

fn sample_with(c: &CloudParams, rng: &mut ChaCha8Rng) -> Realization {
    let count = sample_poisson(rng, c.n_total) as usize;
    let mut positions = Vec::with_capacity(count);
    let mut velocities = Vec::with_capacity(count);
    for _ in 0..count {
        positions.push(gaussian_vector(rng, c.sigma_r));
        velocities.push(gaussian_vector(rng, c.sigma_v));
    }
    Realization { positions, velocities }
}

pub fn sample_cloud(c: &CloudParams, seed: u64) -> Realization {
    sample_with(c, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Ballistic position `r0 + v0 t - g t^2 / 2 e_z`.
pub fn propagate(r0: &Vector3<f64>, v0: &Vector3<f64>, g: f64, t: f64) -> Vector3<f64> {
    Vector3::new(r0.x + v0.x * t, r0.y + v0.y * t, r0.z + v0.z * t - 0.5 * g * t * t)
}

pub fn effective_count(b: &BeamParams, real: &Realization, g: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(weighted_sum(real, g, t, |r| b.weight(r)))
}

fn weighted_sum<W: Fn(&Vector3<f64>) -> f64>(real: &Realization, g: f64, t: f64, weight: W) -> f64 {
    real.positions
        .iter()
        .zip(&real.velocities)
        .map(|(r, v)| weight(&propagate(r, v, g, t)))
        .sum()
}

/// Axis-aligned box with an indicator weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionBox {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
}

impl DetectionBox {
    pub fn new(lower: [f64; 3], upper: [f64; 3]) -> Result<Self> {
        for i in 0..3 {
            if !(lower[i] < upper[i]) {
                return Err(Error::InvalidInput(format!("box axis {i}: lower bound must be below upper bound")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn everywhere() -> Self {
        Self {
            lower: [f64::NEG_INFINITY; 3],
            upper: [f64::INFINITY; 3],
        }
    }

    pub fn contains(&self, r: &Vector3<f64>) -> bool {
        (0..3).all(|i| r[i] >= self.lower[i] && r[i] < self.upper[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    /// `covariance[i][j]` between `times[i]` and `times[j]`.
    pub covariance: Vec<Vec<f64>>,
    pub mean_se: Vec<f64>,
    pub variance_se: Vec<f64>,
    pub covariance_se: Vec<Vec<f64>>,
    /// Variance over mean at each time.
    pub fano: Vec<f64>,
    pub fano_se: Vec<f64>,
    pub realization_count: usize,
    pub seed: u64,
}

fn check_ensemble(times: &[f64], n_realizations: usize) -> Result<()> {
    if n_realizations < 2 {
        return Err(Error::InvalidInput("at least two realizations are needed".into()));
    }
    for &t in times {
        check_time(t)?;
    }
    Ok(())
}

fn counts_per_realization<W>(c: &CloudParams, times: &[f64], n_realizations: usize, seed: u64, weight: W) -> Vec<Vec<f64>>
where
    W: Fn(&Vector3<f64>) -> f64 + Sync,
{
    (0..n_realizations as u64)
        .into_par_iter()
        .map(|i| {
            let real = sample_cloud(c, substream_seed(seed, i));
            times.iter().map(|&t| weighted_sum(&real, c.g, t, &weight)).collect()
        })
        .collect()
}

/// Sums over a contiguous block of realizations, after subtracting `shift`.
#[derive(Clone)]
struct Moments {
    n: f64,
    s1: Vec<f64>,
    s2: Vec<Vec<f64>>,
}

impl Moments {
    fn new(m: usize) -> Self {
        Self {
            n: 0.0,
            s1: vec![0.0; m],
            s2: vec![vec![0.0; m]; m],
        }
    }

    fn add(&mut self, x: &[f64], shift: &[f64]) {
        self.n += 1.0;
        let d: Vec<f64> = x.iter().zip(shift).map(|(a, b)| a - b).collect();
        for i in 0..d.len() {
            self.s1[i] += d[i];
            for j in 0..d.len() {
                self.s2[i][j] += d[i] * d[j];
            }
        }
    }

    fn minus(&self, other: &Self) -> Self {
        Self {
            n: self.n - other.n,
            s1: self.s1.iter().zip(&other.s1).map(|(a, b)| a - b).collect(),
            s2: self
                .s2
                .iter()
                .zip(&other.s2)
                .map(|(r, q)| r.iter().zip(q).map(|(a, b)| a - b).collect())
                .collect(),
        }
    }

    fn plus(&mut self, other: &Self) {
        self.n += other.n;
        for i in 0..self.s1.len() {
            self.s1[i] += other.s1[i];
            for j in 0..self.s1.len() {
                self.s2[i][j] += other.s2[i][j];
            }
        }
    }

    fn mean(&self, shift: &[f64]) -> Vec<f64> {
        self.s1.iter().zip(shift).map(|(s, k)| k + s / self.n).collect()
    }

    fn covariance(&self) -> Vec<Vec<f64>> {
        let m = self.s1.len();
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| (self.s2[i][j] - self.s1[i] * self.s1[j] / self.n) / (self.n - 1.0))
                    .collect()
            })
            .collect()
    }
}

struct Summary {
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

impl Summary {
    fn from(m: &Moments, shift: &[f64]) -> Self {
        Self {
            mean: m.mean(shift),
            covariance: m.covariance(),
        }
    }

    fn fano(&self) -> Vec<f64> {
        self.mean.iter().enumerate().map(|(i, m)| self.covariance[i][i] / m).collect()
    }
}

fn jackknife_se<F: Fn(&Summary) -> f64>(leave_out: &[Summary], stat: F) -> f64 {
    let g = leave_out.len() as f64;
    let values: Vec<f64> = leave_out.iter().map(stat).collect();
    let mean = values.iter().sum::<f64>() / g;
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    ((g - 1.0) / g * ss).sqrt()
}

fn summarize(times: &[f64], samples: &[Vec<f64>], seed: u64) -> EnsembleStats {
    let m = times.len();
    let n = samples.len();
    let shift = samples[0].clone();
    let groups = n.min(JACKKNIFE_BLOCKS);
    let mut blocks = vec![Moments::new(m); groups];
    for (k, x) in samples.iter().enumerate() {
        blocks[k * groups / n].add(x, &shift);
    }
    let mut total = Moments::new(m);
    for b in &blocks {
        total.plus(b);
    }
    let full = Summary::from(&total, &shift);
    let leave_out: Vec<Summary> = blocks.iter().map(|b| Summary::from(&total.minus(b), &shift)).collect();

    let variance: Vec<f64> = (0..m).map(|i| full.covariance[i][i]).collect();
    let mean_se = (0..m).map(|i| jackknife_se(&leave_out, |s| s.mean[i])).collect();
    let covariance_se: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| jackknife_se(&leave_out, |s| s.covariance[i][j])).collect())
        .collect();
    let variance_se = (0..m).map(|i| covariance_se[i][i]).collect();
    let fano_se = (0..m).map(|i| jackknife_se(&leave_out, |s| s.fano()[i])).collect();

    EnsembleStats {
        times: times.to_vec(),
        fano: full.fano(),
        mean: full.mean,
        variance,
        covariance: full.covariance,
        mean_se,
        variance_se,
        covariance_se,
        fano_se,
        realization_count: n,
        seed,
    }
}

/// Ensemble statistics of the Gaussian-weighted count at each time.
pub fn ensemble_stats(
    c: &CloudParams,
    b: &BeamParams,
    times: &[f64],
    n_realizations: usize,
    seed: u64,
) -> Result<EnsembleStats> {
    check_ensemble(times, n_realizations)?;
    let samples = counts_per_realization(c, times, n_realizations, seed, |r| b.weight(r));
    Ok(summarize(times, &samples, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinaryCheck {
    pub detection_box: DetectionBox,
    pub stats: EnsembleStats,
    /// Largest `|fano - 1| / fano_se` over the time grid.
    pub worst_deviation_se: f64,
    /// Every time point within three standard errors of one.
    pub poissonian: bool,
}

/// Indicator-weight counts, whose variance equals the mean.
pub fn binary_count_check(
    c: &CloudParams,
    detection_box: &DetectionBox,
    times: &[f64],
    n_realizations: usize,
    seed: u64,
) -> Result<BinaryCheck> {
    check_ensemble(times, n_realizations)?;
    require("n_total", c.n_total, c.n_total > 0.0, "must be positive")?;
    let samples = counts_per_realization(c, times, n_realizations, seed, |r| {
        if detection_box.contains(r) {
            1.0
        } else {
            0.0
        }
    });
    let stats = summarize(times, &samples, seed);
    let worst = stats
        .fano
        .iter()
        .zip(&stats.fano_se)
        .map(|(f, se)| {
            let dev = (f - 1.0).abs();
            if dev == 0.0 {
                0.0
            } else {
                dev / se
            }
        })
        .fold(0.0, f64::max);
    Ok(BinaryCheck {
        detection_box: *detection_box,
        stats,
        worst_deviation_se: worst,
        poissonian: worst <= 3.0,
    })
}
