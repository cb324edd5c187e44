//! Cross-module consistency on shared parameter sets.

use approx::assert_relative_eq;

use coldcloud::cavity::{cooperativity, detuning_shift, CavityParams};
use coldcloud::effnum::{coupling_area, field_shift_for, linear_field_shift, sigma_general, sigma_long_rayleigh};
use coldcloud::fluct::{mean_number, variance, ScaledFluctParams, Terms};
use coldcloud::mc::{ensemble_stats, sample_cloud, substream_seed};
use coldcloud::{time_scales, BeamParams, CloudParams, EffNumInputs, OpticalParams};

fn desk() -> EffNumInputs {
    EffNumInputs::new(
        CloudParams::new(1e6, 1e-3, 0.1, 9.81).unwrap(),
        BeamParams::new(1e-4, 852e-9).unwrap(),
    )
    .unwrap()
}

#[test]
fn mean_number_is_sigma_times_waist_section() {
    let inp = desk();
    let section = inp.beam.beam_section(0.0);
    for &t in &[0.0, 0.004, 0.012, 0.03] {
        assert_relative_eq!(
            mean_number(&inp, t).unwrap(),
            sigma_long_rayleigh(&inp, t).unwrap() * section,
            max_relative = 1e-12
        );
    }
}

#[test]
fn quadrature_sigma_is_close_to_long_rayleigh_at_desk_scale() {
    // sigma_r / l_R is about 0.03 here, so the closed form is good to about 1e-3
    let inp = desk();
    for &t in &[0.0, 0.01, 0.02] {
        assert_relative_eq!(
            sigma_general(&inp, t).unwrap(),
            sigma_long_rayleigh(&inp, t).unwrap(),
            max_relative = 1e-2
        );
    }
}

#[test]
fn field_shift_and_cavity_shift_share_the_coupling_area() {
    let inp = desk();
    let opt = OpticalParams::new(20.0, 0.0).unwrap();
    let cav = CavityParams::new(1e6, 5e-8).unwrap();
    let t = 0.01;
    let sigma = sigma_long_rayleigh(&inp, t).unwrap();
    let shift = field_shift_for(&inp.beam, &opt, sigma);
    let n = mean_number(&inp, t).unwrap();
    let phi = detuning_shift(&cav, &inp.beam, &opt, n).unwrap().direct;
    // |dA/A| = area sigma / |1 + i delta|
    let area_sigma = shift.norm() * (1.0 + opt.delta * opt.delta).sqrt();
    assert_relative_eq!(phi, area_sigma / (opt.delta * cav.tau_c), max_relative = 1e-12);
    assert!(linear_field_shift(&inp, &opt, t).unwrap().norm() > 0.0);
    assert_relative_eq!(
        cooperativity(&cav, &inp.beam, n).unwrap(),
        coupling_area(&inp.beam) / inp.beam.beam_section(0.0) * n / cav.mirror_transmission(),
        max_relative = 1e-14
    );
}

#[test]
fn time_scales_feed_the_fluctuation_parameters() {
    let inp = desk();
    let ts = time_scales(&inp.cloud, &inp.beam).unwrap();
    let p = ScaledFluctParams::small_waist(&inp);
    assert_relative_eq!(p.tau_r, ts.tau_r, max_relative = 1e-15);
    assert_relative_eq!(p.tau_w, ts.tau_w(), max_relative = 1e-15);
    assert_relative_eq!(p.zeta, ts.zeta(), max_relative = 1e-15);
    let s = coldcloud::fluct::covariance_series(&p, ts.tau_r, 0.0, Terms::Adaptive).unwrap();
    assert!(s.terms < 60);
}

#[test]
fn small_ensemble_agrees_with_closed_forms() {
    let cloud = CloudParams::new(3000.0, 1e-3, 0.1, 9.81).unwrap();
    let beam = BeamParams::new(2e-4, 852e-9).unwrap();
    let inp = EffNumInputs::new(cloud, beam).unwrap();
    let times = [0.0, 0.005, 0.015];
    let stats = ensemble_stats(&cloud, &beam, &times, 3000, 77).unwrap();
    for (i, &t) in times.iter().enumerate() {
        // l_R is about 15 cm, so the long-Rayleigh bias stays well below the errors
        let m = mean_number(&inp, t).unwrap();
        let v = variance(&inp, t).unwrap();
        assert!((stats.mean[i] - m).abs() < 4.0 * stats.mean_se[i], "mean at t={t}");
        assert!((stats.variance[i] - v).abs() < 4.0 * stats.variance_se[i], "variance at t={t}");
    }
}

#[test]
fn realizations_are_reproducible_from_their_index() {
    let cloud = CloudParams::new(100.0, 1e-3, 0.1, 9.81).unwrap();
    let a = sample_cloud(&cloud, substream_seed(123, 17));
    let b = sample_cloud(&cloud, substream_seed(123, 17));
    assert_eq!(a, b);
}
