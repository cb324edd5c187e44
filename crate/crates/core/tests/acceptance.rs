//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coldcloud::cavity::{cooperativity, detuning_shift, detuning_spectrum, CavityParams};
use coldcloud::cloud::density;
use coldcloud::effnum::{sigma_general, sigma_long_rayleigh, sigma_small_waist};
use coldcloud::fluct::{
    covariance_exact, covariance_quasistationary, covariance_series, mean_number, normalized_spectrum,
    normalized_spectrum_peak, spectrum_series, variance, ScaledFluctParams, Terms,
};
use coldcloud::mc::{binary_count_check, ensemble_stats, DetectionBox};
use coldcloud::quad::{fourier_cosine, integrate, integrate_2d, integrate_3d, Tolerance};
use coldcloud::saturation::{sigma_saturated_closed, sigma_saturated_general, OpticalParams};
use coldcloud::{BeamParams, CloudParams, EffNumInputs};

const MC_SEED: u64 = 0x00c0_1dc1_0d5e_ed01;

struct Outcome {
    passed: bool,
    detail: String,
    notes: Vec<String>,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            notes: Vec::new(),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn inputs(n: f64, sigma_r: f64, sigma_v: f64, g: f64, w0: f64, lambda: f64) -> EffNumInputs {
    EffNumInputs::new(
        CloudParams::new(n, sigma_r, sigma_v, g).unwrap(),
        BeamParams::new(w0, lambda).unwrap(),
    )
    .unwrap()
}

/// Gravity giving `tau_r^2 / tau_g^2 = zeta`.
fn gravity_for_zeta(sigma_r: f64, sigma_v: f64, zeta: f64) -> f64 {
    if zeta == 0.0 {
        return 0.0;
    }
    let tau_g = sigma_r / sigma_v / zeta.sqrt();
    2.0 * SQRT_2 * sigma_v / tau_g
}

fn normalization() -> Outcome {
    let b = BeamParams::new(100e-6, 852e-9).unwrap();
    let l_r = b.rayleigh_length();
    let mut worst: f64 = 0.0;
    for &x in &[0.0, 0.4 * l_r, l_r, -2.0 * l_r, 5.0 * l_r] {
        let h = 10.0 * b.beam_size(x);
        let e = integrate_2d(
            |y, z| b.mode_amplitude(&Vector3::new(x, y, z)).norm_sqr(),
            (-h, h),
            (-h, h),
            Tolerance::relative(1e-12),
        )
        .unwrap();
        worst = worst.max((e.value - 1.0).abs());
    }
    Outcome::new(worst <= 1e-9, format!("max |int - 1| = {worst:.2e} over 5 planes"))
}

fn mass_conservation() -> Outcome {
    let c = CloudParams::new(1e6, 1e-3, 0.1, 9.81).unwrap();
    let tau_r = c.tau_r();
    let mut worst: f64 = 0.0;
    for &t in &[0.0, tau_r, 3.0 * tau_r] {
        let h = 10.0 * c.spread_sq(t).sqrt();
        let z0 = c.center(t).z;
        let e = integrate_3d(
            |x, y, z| density(&c, &Vector3::new(x, y, z), t).unwrap(),
            (-h, h),
            (-h, h),
            (z0 - h, z0 + h),
            Tolerance::relative(1e-9),
        )
        .unwrap();
        worst = worst.max(rel(e.value, c.n_total));
    }
    Outcome::new(worst <= 1e-6, format!("max relative error {worst:.2e} at t = 0, tau_r, 3 tau_r"))
}

fn limit_collapse() -> Outcome {
    let lambda = 852e-9;
    // sigma_r / l_R = 1e-3 with w0 = sigma_r
    let sigma_r = 1000.0 * lambda / PI;
    let long = inputs(1e6, sigma_r, 0.1, 9.81, sigma_r, lambda);
    let tau_r = long.cloud.tau_r();
    let mut worst_long: f64 = 0.0;
    for i in 0..=12 {
        let t = 3.0 * tau_r * i as f64 / 12.0;
        worst_long = worst_long.max(rel(sigma_general(&long, t).unwrap(), sigma_long_rayleigh(&long, t).unwrap()));
    }
    // w0 / sigma_r = 1e-2; sigma_v = 0.3 keeps the fall exponent of order one at 3 tau_r
    let small = inputs(1e6, 1e-2, 0.3, 9.81, 1e-4, lambda);
    let tau_r = small.cloud.tau_r();
    let mut worst_small: f64 = 0.0;
    for i in 0..=12 {
        let t = 3.0 * tau_r * i as f64 / 12.0;
        worst_small = worst_small.max(rel(sigma_general(&small, t).unwrap(), sigma_small_waist(&small, t).unwrap()));
    }
    let mut o = Outcome::new(
        worst_long <= 1e-6 && worst_small <= 1e-4,
        format!("long-Rayleigh {worst_long:.2e} (<= 1e-6), small-waist {worst_small:.2e} (<= 1e-4)"),
    );
    o.notes.push(format!(
        "long-Rayleigh case: sigma_r = w0 = {sigma_r:.4e} m; small-waist case: sigma_r = 1 cm, sigma_v = 0.3 m/s, w0 = 100 um"
    ));
    o
}

fn sub_poissonian() -> Outcome {
    let mut all_inside = true;
    let mut count = 0;
    for &w0 in &[1e-6, 1e-5, 1e-4, 1e-3, 5e-3] {
        for &sigma_r in &[1e-4, 1e-3, 5e-3] {
            for &g in &[0.0, 9.81] {
                let inp = inputs(1e6, sigma_r, 0.1, g, w0, 852e-9);
                for i in 0..=40 {
                    let t = 0.002 * i as f64;
                    let m = mean_number(&inp, t).unwrap();
                    let v = variance(&inp, t).unwrap();
                    count += 1;
                    if !(m > 0.0 && v > 0.0 && v < m) {
                        all_inside = false;
                    }
                }
            }
        }
    }
    // tau_w / tau_r = 1e-3
    let sigma_r = 1e-3;
    let inp = inputs(1e6, sigma_r, 0.1, 9.81, 2e-3 * sigma_r, 852e-9);
    let mut worst: f64 = 0.0;
    for i in 0..=30 {
        let t = 0.001 * i as f64;
        let r = variance(&inp, t).unwrap() / mean_number(&inp, t).unwrap();
        worst = worst.max((r - 0.5).abs());
    }
    Outcome::new(
        all_inside && worst <= 1e-3,
        format!("ratio inside (0,1) at {count} points: {all_inside}; |ratio - 1/2| <= {worst:.2e} at tau_w/tau_r = 1e-3"),
    )
}

fn covariance_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for &g in &[0.0, 9.81] {
        let inp = inputs(1e6, 1e-3, 0.1, g, 1e-4, 852e-9);
        for i in 0..20 {
            let t = 0.0025 * i as f64;
            worst = worst.max(rel(covariance_exact(&inp, t, 0.0).unwrap(), variance(&inp, t).unwrap()));
        }
    }
    Outcome::new(worst <= 1e-12, format!("max relative error {worst:.2e} on 20 times, g = 0 and 9.81"))
}

fn quasistationary_consistency() -> Outcome {
    let sigma_r = 1e-3;
    let sigma_v = 0.1;
    let g = 9.81;
    let mut per_ratio = Vec::new();
    for &ratio in &[1e-3, 1e-4, 1e-5] {
        let inp = inputs(1e6, sigma_r, sigma_v, g, 2.0 * ratio * sigma_r, 852e-9);
        let p = ScaledFluctParams::small_waist(&inp);
        let mut worst: f64 = 0.0;
        for i in 0..=30 {
            let t = 0.001 * i as f64;
            let qs = covariance_quasistationary(&p, t, 0.0);
            worst = worst.max(rel(qs, 0.5 * mean_number(&inp, t).unwrap()));
        }
        per_ratio.push((ratio, worst));
    }
    let worst = per_ratio.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut o = Outcome::new(worst <= 1e-9, format!("max relative gap {worst:.2e} for tau_w/tau_r <= 1e-3"));
    for (ratio, w) in &per_ratio {
        o.notes.push(format!("tau_w/tau_r = {ratio:.0e}: max relative gap {w:.2e}"));
    }
    o.notes.push(
        "the gap is (tau_w^2 / (tau_r^2 + T^2)) to leading order, so 1e-9 needs tau_w/tau_r below about 3e-5".into(),
    );
    o
}

fn series_duality() -> Outcome {
    let sigma_r = 1e-3;
    let sigma_v = 0.1;
    let mut worst_cov: f64 = 0.0;
    let mut worst_peak: f64 = 0.0;
    let mut max_terms = 0;
    for &zeta in &[0.0, 0.1, 0.5, 1.0] {
        let inp = inputs(1e6, sigma_r, sigma_v, gravity_for_zeta(sigma_r, sigma_v, zeta), 1e-6, 852e-9);
        let p = ScaledFluctParams::small_waist(&inp);
        let (tr, tw) = (p.tau_r, p.tau_w);
        for &mid in &[0.0, 0.5 * tr, tr, 2.0 * tr, 3.0 * tr] {
            for &delay in &[0.0, tw, -10.0 * tw, 0.1 * tr, 0.5 * tr, -tr, tr] {
                let s = covariance_series(&p, mid, delay, Terms::Adaptive).unwrap();
                max_terms = max_terms.max(s.terms);
                worst_cov = worst_cov.max(rel(s.value, covariance_quasistationary(&p, mid, delay)));
            }
            let from_spectrum =
                spectrum_series(&p, mid, 0.0, Terms::Adaptive).unwrap().value / covariance_quasistationary(&p, mid, 0.0);
            let peak = normalized_spectrum_peak(&p, mid, Terms::Adaptive).unwrap().value;
            worst_peak = worst_peak.max(rel(from_spectrum, peak));
        }
    }
    Outcome::new(
        worst_cov <= 1e-9 && worst_peak <= 1e-10,
        format!("covariance {worst_cov:.2e} (<= 1e-9, up to {max_terms} terms), zero-frequency peak {worst_peak:.2e} (<= 1e-10)"),
    )
}

fn spectrum_normalization() -> Outcome {
    let sigma_r = 1e-3;
    let sigma_v = 0.1;
    let mut worst: f64 = 0.0;
    for &zeta in &[0.0, 0.1, 1.0] {
        let inp = inputs(1e6, sigma_r, sigma_v, gravity_for_zeta(sigma_r, sigma_v, zeta), 1e-5, 852e-9);
        let p = ScaledFluctParams::small_waist(&inp);
        for &frac in &[0.5, 1.0, 2.0] {
            let mid = frac * p.tau_r;
            let alpha = p.coefficients(mid).alpha();
            // omega = y / (alpha tau_w); integrate the even spectrum over y >= 0
            let jac = 1.0 / (alpha * p.tau_w);
            let e = integrate(
                |y| normalized_spectrum(&p, mid, y * jac, Terms::Adaptive).unwrap().value,
                0.0,
                300.0,
                Tolerance::relative(1e-11),
            )
            .unwrap();
            let total = 2.0 * e.value * jac / (2.0 * PI);
            worst = worst.max((total - 1.0).abs());
        }
    }
    Outcome::new(worst <= 1e-6, format!("max |int - 1| = {worst:.2e} over 9 (zeta, T) pairs"))
}

fn fourier_pair() -> Outcome {
    let sigma_r = 1e-3;
    let sigma_v = 0.1;
    let inp = inputs(1e6, sigma_r, sigma_v, gravity_for_zeta(sigma_r, sigma_v, 0.5), 1e-5, 852e-9);
    let p = ScaledFluctParams::small_waist(&inp);
    let mid = p.tau_r;
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let omega = 10f64.powf(-2.5 + 3.0 * k as f64 / 9.0) / p.tau_w;
        let series = spectrum_series(&p, mid, omega, Terms::Adaptive).unwrap().value;
        let ft = fourier_cosine(
            |tau| covariance_quasistationary(&p, mid, tau),
            omega,
            Tolerance::relative(1e-10),
        )
        .unwrap();
        worst = worst.max(rel(2.0 * ft.value, series));
    }
    Outcome::new(
        worst <= 1e-6,
        format!("max relative error {worst:.2e} at 10 frequencies, omega tau_w in [3e-3, 3]"),
    )
}

struct McCase {
    label: &'static str,
    g: f64,
}

fn monte_carlo() -> Outcome {
    let sigma_r = 1e-3;
    let sigma_v = 0.1;
    let w0 = 1e-2 * sigma_r;
    // l_R = 10 m keeps the cloud deep inside the Rayleigh range
    let lambda = PI * w0 * w0 / 10.0;
    let n_total = 1e4;
    let realizations = 10_000;
    let mut notes = Vec::new();
    let mut within3 = true;
    let mut beyond5 = 0;
    let mut worst: f64 = 0.0;
    let mut checked = 0;

    let mut record = |name: String, est: f64, se: f64, exact: f64, notes: &mut Vec<String>| {
        let z = if se > 0.0 { (est - exact).abs() / se } else if est == exact { 0.0 } else { f64::INFINITY };
        checked += 1;
        worst = worst.max(z);
        if z > 3.0 {
            within3 = false;
            notes.push(format!("{name}: estimate {est:.5e} +- {se:.2e}, expected {exact:.5e} ({z:.2} SE)"));
        }
        if z > 5.0 {
            beyond5 += 1;
        }
    };

    for case in [McCase { label: "g = 0", g: 0.0 }, McCase { label: "g = 9.81", g: 9.81 }] {
        let inp = inputs(n_total, sigma_r, sigma_v, case.g, w0, lambda);
        let (tr, tw) = (inp.cloud.tau_r(), inp.tau_w());
        let times = [0.0, tw, 2.0 * tw, tr, 3.0 * tr];
        let stats = ensemble_stats(&inp.cloud, &inp.beam, &times, realizations, MC_SEED).unwrap();
        for (i, &t) in times.iter().enumerate() {
            record(
                format!("{} mean t={t:.3e}", case.label),
                stats.mean[i],
                stats.mean_se[i],
                mean_number(&inp, t).unwrap(),
                &mut notes,
            );
            record(
                format!("{} variance t={t:.3e}", case.label),
                stats.variance[i],
                stats.variance_se[i],
                variance(&inp, t).unwrap(),
                &mut notes,
            );
            for (j, &a) in times.iter().enumerate().skip(i + 1) {
                let b = t;
                let exact = covariance_exact(&inp, 0.5 * (a + b), a - b).unwrap();
                record(
                    format!("{} covariance t={b:.3e},{a:.3e}", case.label),
                    stats.covariance[i][j],
                    stats.covariance_se[i][j],
                    exact,
                    &mut notes,
                );
            }
        }
        notes.push(format!(
            "{}: variance/mean at t=0 is {:.4} +- {:.4}",
            case.label, stats.fano[0], stats.fano_se[0]
        ));
    }

    // indicator weights
    let cloud = CloudParams::new(n_total, sigma_r, sigma_v, 9.81).unwrap();
    let tau_g = cloud.fall_scale().seconds();
    let tr = cloud.tau_r();
    let all = binary_count_check(&cloud, &DetectionBox::everywhere(), &[0.0, tr, 3.0 * tr], realizations, MC_SEED).unwrap();
    let half = 0.3 * sigma_r;
    let centre = DetectionBox::new([-half; 3], [half; 3]).unwrap();
    let at_centre = binary_count_check(&cloud, &centre, &[0.0], realizations, MC_SEED).unwrap();
    let s = cloud.spread_sq(tau_g).sqrt();
    let zc = cloud.center(tau_g).z;
    let below = DetectionBox::new([-0.5 * s, -0.5 * s, zc - 1.5 * s], [0.5 * s, 0.5 * s, zc - 0.5 * s]).unwrap();
    let fallen = binary_count_check(&cloud, &below, &[tau_g], realizations, MC_SEED).unwrap();
    for (label, check) in [("all space", &all), ("centre box t=0", &at_centre), ("box below centre t=tau_g", &fallen)] {
        for (k, &t) in check.stats.times.iter().enumerate() {
            record(
                format!("indicator {label} t={t:.3e} variance/mean"),
                check.stats.fano[k],
                check.stats.fano_se[k],
                1.0,
                &mut notes,
            );
        }
        notes.push(format!(
            "indicator {label}: mean count {:.1}, variance/mean {:.4}",
            check.stats.mean[0], check.stats.fano[0]
        ));
    }

    let mut o = Outcome::new(
        within3 && beyond5 < 2,
        format!("{checked} comparisons, worst {worst:.2} SE, {beyond5} beyond 5 SE (seed {MC_SEED:#x})"),
    );
    o.notes = notes;
    o
}

fn saturation() -> Outcome {
    // joint limit: w0 / sigma_r = 1e-2, sigma_r / l_R = 1e-3
    let sigma_r = 1e-3;
    let w0 = 1e-2 * sigma_r;
    let lambda = PI * w0 * w0 / (sigma_r / 1e-3);
    let inp = inputs(1e6, sigma_r, 0.1, 9.81, w0, lambda);
    let tau_r = inp.cloud.tau_r();
    let times: Vec<f64> = (0..=6).map(|i| 0.5 * tau_r * i as f64).collect();
    let mut worst_closed: f64 = 0.0;
    let mut worst_shape_closed: f64 = 0.0;
    for &s_m0 in &[0.1, 0.3] {
        let opt = OpticalParams::new(0.0, s_m0).unwrap();
        let r0 = sigma_saturated_closed(&inp, &opt, 0.0).unwrap() / sigma_long_rayleigh(&inp, 0.0).unwrap();
        for &t in &times {
            let general = sigma_saturated_general(&inp, &opt, t).unwrap();
            let closed = sigma_saturated_closed(&inp, &opt, t).unwrap();
            worst_closed = worst_closed.max(rel(general, closed));
            let r = closed / sigma_long_rayleigh(&inp, t).unwrap();
            worst_shape_closed = worst_shape_closed.max(rel(r, r0));
        }
    }
    // deep joint limit for the quadrature path: w0 / sigma_r = 1e-5, sigma_r / l_R = 1e-6
    let w0 = 1e-5 * sigma_r;
    let lambda = PI * w0 * w0 / (sigma_r / 1e-6);
    let deep = inputs(1e6, sigma_r, 0.1, 9.81, w0, lambda);
    let mut worst_shape_general: f64 = 0.0;
    for &s_m0 in &[0.1, 0.3] {
        let opt = OpticalParams::new(0.0, s_m0).unwrap();
        let ratio = |t: f64| sigma_saturated_general(&deep, &opt, t).unwrap() / sigma_general(&deep, t).unwrap();
        let r0 = ratio(0.0);
        for &t in &times[1..] {
            worst_shape_general = worst_shape_general.max(rel(ratio(t), r0));
        }
    }
    Outcome::new(
        worst_closed <= 1e-4 && worst_shape_closed <= 1e-9 && worst_shape_general <= 1e-9,
        format!(
            "series vs closed {worst_closed:.2e} (<= 1e-4); ratio drift closed {worst_shape_closed:.2e}, quadrature {worst_shape_general:.2e} (<= 1e-9)"
        ),
    )
}

fn cavity_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_shift: f64 = 0.0;
    let mut worst_spectrum: f64 = 0.0;
    for _ in 0..100 {
        let kappa = 10f64.powf(rng.random_range(5.0..8.0));
        let tau_c = rng.random_range(1e-3..1.0) / (2.0 * kappa);
        let cav = CavityParams::new(kappa, tau_c).unwrap();
        let w0 = 10f64.powf(rng.random_range(-5.0..-3.0));
        let lambda = rng.random_range(4e-7..1.6e-6);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let delta = sign * rng.random_range(3.0..100.0);
        let opt = OpticalParams::new(delta, 0.0).unwrap();
        let n = rng.random_range(1.0..1e7);
        let (sigma_r, sigma_v) = (rng.random_range(3e-4..3e-3), rng.random_range(0.02..0.3));
        let g = gravity_for_zeta(sigma_r, sigma_v, rng.random_range(0.0..1.0));
        let inp = inputs(n, sigma_r, sigma_v, g, w0, lambda);
        let s = detuning_shift(&cav, &inp.beam, &opt, n).unwrap();
        worst_shift = worst_shift.max(rel(s.via_cooperativity, s.direct));
        let mid = rng.random_range(0.0..3.0) * inp.cloud.tau_r();
        let omega = rng.random_range(0.0..5.0) / inp.tau_w();
        let d = detuning_spectrum(&cav, &opt, &inp, mid, omega).unwrap();
        worst_spectrum = worst_spectrum.max(rel(d.from_cooperativity, d.from_number_spectrum));
        assert!(cooperativity(&cav, &inp.beam, n).unwrap() > 0.0);
    }
    Outcome::new(
        worst_shift <= 1e-12 && worst_spectrum <= 1e-12,
        format!("shift forms {worst_shift:.2e}, spectrum forms {worst_spectrum:.2e} over 100 draws"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("1 mode normalization", normalization),
        ("2 mass conservation", mass_conservation),
        ("3 limit collapse", limit_collapse),
        ("4 sub-Poissonian law", sub_poissonian),
        ("5 covariance identity", covariance_identity),
        ("6 quasistationary consistency", quasistationary_consistency),
        ("7 series duality", series_duality),
        ("8 spectrum normalization", spectrum_normalization),
        ("9 spectrum-covariance Fourier pair", fourier_pair),
        ("10 Monte Carlo oracle", monte_carlo),
        ("11 saturation", saturation),
        ("12 cavity identities", cavity_identities),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{verdict} AC{name}: {} [{secs:.2} s]", outcome.detail);
        for note in &outcome.notes {
            println!("     {note}");
        }
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
