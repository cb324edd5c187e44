//! Adaptive Gauss-Kronrod quadrature.
//!
//! A global-subdivision scheme in the spirit of QUADPACK's QAG with the
//! 21-point Kronrod rule, nested drivers for 2D/3D boxes, a semi-infinite
//! mapping, and a Fourier cosine integral on `[0, inf)` built from
//! zero-to-zero cycles accelerated with Wynn's epsilon algorithm.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_745_872,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// 10-point Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const MAX_SEGMENTS: usize = 4000;

/// Absolute and relative error targets; the stricter one that is attainable wins,
/// i.e. the run stops once `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Round-off level of this segment; no refinement gets below it.
    floor: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn kronrod21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = 0.0;
    let mut res_k = WGK[10] * fc;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];

    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }

    let scale = half.abs();
    let value = res_k * half;
    let error = rescale_error((res_k - res_g) * half, res_abs * scale, res_asc * scale);
    let floor = 50.0 * f64::EPSILON * res_abs * scale;
    Segment {
        a,
        b,
        value,
        error,
        floor,
    }
}

/// Integrates `f` over `[a, b]` to the requested tolerance.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let first = kronrod21(&mut f, a, b);
    let mut evaluations = 21;
    let mut total = first.value;
    let mut total_err = first.error;
    let mut total_floor = first.floor;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while total_err > tol.target(total).max(total_floor) || !total.is_finite() {
        if heap.len() >= MAX_SEGMENTS {
            return Err(Error::QuadratureNonConvergence {
                achieved: total_err,
                requested: tol.target(total),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // interval exhausted at machine resolution
            return Err(Error::QuadratureNonConvergence {
                achieved: total_err,
                requested: tol.target(total),
            });
        }
        let left = kronrod21(&mut f, worst.a, mid);
        let right = kronrod21(&mut f, mid, worst.b);
        evaluations += 42;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        total_floor += left.floor + right.floor - worst.floor;
        heap.push(left);
        heap.push(right);

        // the running sums drift; refresh them from the segments now and then
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|s| s.value).sum();
            total_err = heap.iter().map(|s| s.error).sum();
            total_floor = heap.iter().map(|s| s.floor).sum();
        }
    }

    let value = heap.iter().map(|s| s.value).sum();
    let abs_error = heap.iter().map(|s| s.error).sum();
    Ok(Estimate {
        value,
        abs_error,
        evaluations,
    })
}

/// Integrates over `[a, inf)` through the map `x = a + u / (1 - u)`.
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(mut f: F, a: f64, tol: Tolerance) -> Result<Estimate> {
    integrate(
        |u: f64| {
            let one_minus = 1.0 - u;
            let x = a + u / one_minus;
            let v = f(x);
            if v == 0.0 {
                0.0
            } else {
                v / (one_minus * one_minus)
            }
        },
        0.0,
        1.0,
        tol,
    )
}

/// Iterated integral over a rectangle; the inner integral runs at a
/// tolerance ten times tighter than the outer one.
pub fn integrate_2d<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    x: (f64, f64),
    y: (f64, f64),
    tol: Tolerance,
) -> Result<Estimate> {
    let inner_tol = Tolerance::new(tol.abs / (10.0 * (x.1 - x.0).abs().max(1e-300)), tol.rel / 10.0);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let evals = Cell::new(0usize);
    let outer = integrate(
        |xv| match integrate(|yv| f(xv, yv), y.0, y.1, inner_tol) {
            Ok(e) => {
                evals.set(evals.get() + e.evaluations);
                e.value
            }
            Err(err) => {
                failure.set(Some(err));
                0.0
            }
        },
        x.0,
        x.1,
        tol,
    )?;
    if let Some(err) = failure.take() {
        return Err(err);
    }
    Ok(Estimate {
        evaluations: evals.get(),
        ..outer
    })
}

/// Iterated integral over a box.
pub fn integrate_3d<F: FnMut(f64, f64, f64) -> f64>(
    mut f: F,
    x: (f64, f64),
    y: (f64, f64),
    z: (f64, f64),
    tol: Tolerance,
) -> Result<Estimate> {
    let inner_tol = Tolerance::new(tol.abs / (10.0 * (x.1 - x.0).abs().max(1e-300)), tol.rel / 10.0);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let evals = Cell::new(0usize);
    let outer = integrate(
        |xv| match integrate_2d(|yv, zv| f(xv, yv, zv), y, z, inner_tol) {
            Ok(e) => {
                evals.set(evals.get() + e.evaluations);
                e.value
            }
            Err(err) => {
                failure.set(Some(err));
                0.0
            }
        },
        x.0,
        x.1,
        tol,
    )?;
    if let Some(err) = failure.take() {
        return Err(err);
    }
    Ok(Estimate {
        evaluations: evals.get(),
        ..outer
    })
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
/// Returns the newest entry of the highest even column together with the
/// gap to its predecessor, which serves as the error estimate.
pub fn wynn_epsilon(partial_sums: &[f64]) -> (f64, f64) {
    let n = partial_sums.len();
    match n {
        0 => return (0.0, 0.0),
        1 => return (partial_sums[0], partial_sums[0].abs()),
        _ => {}
    }
    let mut below = vec![0.0; n];
    let mut column: Vec<f64> = partial_sums.to_vec();
    let mut best = (column[n - 1], (column[n - 1] - column[n - 2]).abs());
    let mut even = true;
    while column.len() > 1 {
        let mut next = Vec::with_capacity(column.len() - 1);
        for i in 0..column.len() - 1 {
            let diff = column[i + 1] - column[i];
            if diff == 0.0 {
                return best;
            }
            next.push(below[i + 1] + 1.0 / diff);
        }
        below = column;
        column = next;
        even = !even;
        if even && column.len() >= 2 {
            let m = column.len();
            best = (column[m - 1], (column[m - 1] - column[m - 2]).abs());
        }
    }
    best
}

/// Cosine transform `int_0^inf f(tau) cos(omega tau) dtau` of a smooth,
/// eventually monotone integrand. Requires `omega > 0`.
pub fn fourier_cosine<F: FnMut(f64) -> f64>(mut f: F, omega: f64, tol: Tolerance) -> Result<Estimate> {
    if !(omega > 0.0) {
        return Err(Error::InvalidInput(format!(
            "fourier_cosine needs a positive angular frequency, got {omega}"
        )));
    }
    let half_period = PI / omega;
    let cycle_tol = Tolerance::new(0.0, 1e-14);
    let mut g = |x: f64| f(x) * (omega * x).cos();

    // first piece ends at the first zero of cos
    let first = integrate(&mut g, 0.0, 0.5 * half_period, cycle_tol)?;
    let scale = first.value.abs().max(f64::MIN_POSITIVE);
    let mut evaluations = first.evaluations;
    let mut sums = vec![first.value];
    let mut running = first.value;
    let mut last_estimate = f64::NAN;
    const WINDOW: usize = 24;
    const MAX_CYCLES: usize = 4000;

    for j in 1..MAX_CYCLES {
        let lo = (j as f64 - 0.5) * half_period;
        let hi = (j as f64 + 0.5) * half_period;
        let piece = integrate(&mut g, lo, hi, Tolerance::new(1e-16 * scale, 1e-14))?;
        evaluations += piece.evaluations;
        running += piece.value;
        sums.push(running);
        if sums.len() >= 8 {
            let start = sums.len().saturating_sub(WINDOW);
            let (estimate, gap) = wynn_epsilon(&sums[start..]);
            let target = tol.target(estimate);
            let change = (estimate - last_estimate).abs();
            if gap <= target && change <= target {
                return Ok(Estimate {
                    value: estimate,
                    abs_error: gap.max(change),
                    evaluations,
                });
            }
            last_estimate = estimate;
        }
    }
    Err(Error::QuadratureNonConvergence {
        achieved: (running - last_estimate).abs(),
        requested: tol.target(running),
    })
}
