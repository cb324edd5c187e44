//! Cavity observables driven by the effective atom number: cooperativity,
//! dispersive detuning shift and its noise spectrum.

use serde::{Deserialize, Serialize};

use crate::beam::BeamParams;
use crate::effnum::{coupling_area, EffNumInputs};
use crate::error::{require, Error, Result};
use crate::fluct::{mean_number, normalized_spectrum, normalized_spectrum_peak, ScaledFluctParams, Terms};
use crate::saturation::OpticalParams;

/// Below this `|delta|` the dispersive formulas are used outside their regime.
pub const DISPERSIVE_ADVISORY: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Intracavity field decay rate [rad/s].
    pub kappa: f64,
    /// Round-trip time [s].
    pub tau_c: f64,
}

impl CavityParams {
    pub fn new(kappa: f64, tau_c: f64) -> Result<Self> {
        let c = Self { kappa, tau_c };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        require("kappa", self.kappa, self.kappa > 0.0, "must be positive")?;
        require("tau_c", self.tau_c, self.tau_c > 0.0, "must be positive")?;
        let t = self.mirror_transmission();
        require("2 kappa tau_c", t, t > 0.0 && t <= 1.0, "must lie in (0, 1]")
    }

    /// `2 kappa tau_c`, the intensity transmission of the coupling mirror.
    pub fn mirror_transmission(&self) -> f64 {
        2.0 * self.kappa * self.tau_c
    }
}

/// `3 lambda^2 / (4 pi S)` with `S` the waist section.
fn coupling_fraction(b: &BeamParams) -> f64 {
    coupling_area(b) / b.beam_section(0.0)
}

pub fn cooperativity(cav: &CavityParams, b: &BeamParams, n: f64) -> Result<f64> {
    require("n", n, n >= 0.0, "must be non-negative")?;
    Ok(coupling_fraction(b) * n / cav.mirror_transmission())
}

/// True when `|delta|` is large enough for the dispersive expressions.
pub fn is_dispersive(opt: &OpticalParams) -> bool {
    opt.delta.abs() >= DISPERSIVE_ADVISORY
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningShift {
    /// `2 kappa C / delta`
    pub via_cooperativity: f64,
    /// `(3 lambda^2 / 4 pi S) n / (delta tau_c)`
    pub direct: f64,
}

pub fn detuning_shift(cav: &CavityParams, b: &BeamParams, opt: &OpticalParams, n: f64) -> Result<DetuningShift> {
    if opt.delta == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    let c = cooperativity(cav, b, n)?;
    Ok(DetuningShift {
        via_cooperativity: 2.0 * cav.kappa * c / opt.delta,
        direct: coupling_fraction(b) * n / (opt.delta * cav.tau_c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetuningSpectrum {
    /// Built from the atom-number spectrum `S_NN(T, omega)`.
    pub from_number_spectrum: f64,
    /// Built from the time-dependent cooperativity and the normalized spectrum.
    pub from_cooperativity: f64,
    pub number_spectrum: f64,
    pub normalized: f64,
    pub cooperativity: f64,
}

/// Detuning noise spectrum at fall time `mid`. The atom-number spectrum is
/// `S_NN = <N(T)> Sbar_NN / 2`, using the small-waist variance.
pub fn detuning_spectrum(
    cav: &CavityParams,
    opt: &OpticalParams,
    inp: &EffNumInputs,
    mid: f64,
    omega: f64,
) -> Result<DetuningSpectrum> {
    if opt.delta == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    let p = ScaledFluctParams::small_waist(inp);
    let normalized = normalized_spectrum(&p, mid, omega, Terms::Adaptive)?.value;
    assemble(cav, opt, inp, mid, normalized)
}

fn assemble(cav: &CavityParams, opt: &OpticalParams, inp: &EffNumInputs, mid: f64, normalized: f64) -> Result<DetuningSpectrum> {
    let mean = mean_number(inp, mid)?;
    let number_spectrum = 0.5 * mean * normalized;
    let frac = coupling_fraction(&inp.beam);
    let c = cooperativity(cav, &inp.beam, mean)?;
    let from_number_spectrum = frac * frac * number_spectrum / (opt.delta * cav.tau_c).powi(2);
    let from_cooperativity = cav.kappa * c / (opt.delta * opt.delta) * frac * normalized / cav.tau_c;
    Ok(DetuningSpectrum {
        from_number_spectrum,
        from_cooperativity,
        number_spectrum,
        normalized,
        cooperativity: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearRegime {
    /// Zero-frequency maximum of the detuning spectrum [rad/s].
    pub peak: f64,
    pub kappa: f64,
    pub linear: bool,
}

/// Compares the spectrum maximum, reached at zero frequency, with `kappa`.
pub fn linear_regime(cav: &CavityParams, opt: &OpticalParams, inp: &EffNumInputs, mid: f64) -> Result<LinearRegime> {
    if opt.delta == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    let p = ScaledFluctParams::small_waist(inp);
    let normalized = normalized_spectrum_peak(&p, mid, Terms::Adaptive)?.value;
    let peak = assemble(cav, opt, inp, mid, normalized)?.from_number_spectrum;
    Ok(LinearRegime {
        peak,
        kappa: cav.kappa,
        linear: peak < cav.kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::CloudParams;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn beam() -> BeamParams {
        BeamParams::new(1e-4, 852e-9).unwrap()
    }

    #[test]
    fn mirror_transmission_bounds() {
        assert!(CavityParams::new(1e6, 5e-8).is_ok());
        assert!(CavityParams::new(2e7, 5e-8).is_err());
        assert!(CavityParams::new(0.0, 5e-8).is_err());
        assert!(CavityParams::new(1e6, -1.0).is_err());
    }

    #[test]
    fn cooperativity_reference() {
        let cav = CavityParams::new(0.05 / 1e-8, 1e-8).unwrap();
        assert!((cav.mirror_transmission() - 0.1).abs() < 1e-15);
        let lambda: f64 = 852e-9;
        let section = PI * 1e-8 / 2.0;
        let want = 3.0 * lambda * lambda / (4.0 * PI * section) * 1e5 / 0.1;
        let got = cooperativity(&cav, &beam(), 1e5).unwrap();
        assert!((got / want - 1.0).abs() < 1e-14);
        assert!((got - 11.032_418).abs() < 1e-6, "{got}");
        assert_eq!(cooperativity(&cav, &beam(), 0.0).unwrap(), 0.0);
        assert!(cooperativity(&cav, &beam(), -1.0).is_err());
    }

    #[test]
    fn shift_sign_and_zero_detuning() {
        let cav = CavityParams::new(1e6, 5e-8).unwrap();
        let plus = detuning_shift(&cav, &beam(), &OpticalParams::new(10.0, 0.0).unwrap(), 1e4).unwrap();
        let minus = detuning_shift(&cav, &beam(), &OpticalParams::new(-10.0, 0.0).unwrap(), 1e4).unwrap();
        assert!(plus.direct > 0.0);
        assert_eq!(plus.direct, -minus.direct);
        let zero = detuning_shift(&cav, &beam(), &OpticalParams::new(10.0, 0.0).unwrap(), 0.0).unwrap();
        assert_eq!(zero.direct, 0.0);
        let err = detuning_shift(&cav, &beam(), &OpticalParams::new(0.0, 0.0).unwrap(), 1e4);
        assert!(matches!(err, Err(Error::ZeroDetuning)));
        assert!(!is_dispersive(&OpticalParams::new(2.0, 0.0).unwrap()));
    }

    fn inputs() -> EffNumInputs {
        EffNumInputs::new(CloudParams::new(1e6, 1e-3, 0.1, 9.81).unwrap(), beam()).unwrap()
    }

    #[test]
    fn spectrum_scales_with_inverse_detuning_squared() {
        let cav = CavityParams::new(1e6, 5e-8).unwrap();
        let a = detuning_spectrum(&cav, &OpticalParams::new(5.0, 0.0).unwrap(), &inputs(), 0.01, 300.0).unwrap();
        let b = detuning_spectrum(&cav, &OpticalParams::new(10.0, 0.0).unwrap(), &inputs(), 0.01, 300.0).unwrap();
        assert!((a.from_number_spectrum / b.from_number_spectrum - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectrum_width_follows_normalized_spectrum() {
        let cav = CavityParams::new(1e6, 5e-8).unwrap();
        let opt = OpticalParams::new(8.0, 0.0).unwrap();
        let inp = inputs();
        let r0 = detuning_spectrum(&cav, &opt, &inp, 0.01, 0.0).unwrap();
        for &w in &[100.0, 1e3, 1e4] {
            let r = detuning_spectrum(&cav, &opt, &inp, 0.01, w).unwrap();
            let ratio = r.from_number_spectrum / r0.from_number_spectrum;
            assert!((ratio - r.normalized / r0.normalized).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_regime_peak_is_zero_frequency_value() {
        let cav = CavityParams::new(1e6, 5e-8).unwrap();
        let opt = OpticalParams::new(8.0, 0.0).unwrap();
        let inp = inputs();
        let lr = linear_regime(&cav, &opt, &inp, 0.01).unwrap();
        let s0 = detuning_spectrum(&cav, &opt, &inp, 0.01, 0.0).unwrap();
        assert!((lr.peak / s0.from_number_spectrum - 1.0).abs() < 1e-12);
        assert_eq!(lr.linear, lr.peak < 1e6);
    }

    proptest! {
        #[test]
        fn two_forms_agree(
            kappa in 1e5f64..1e8, trans in 1e-3f64..1.0, w0 in 1e-5f64..1e-3, lambda in 4e-7f64..1.6e-6,
            delta in prop_oneof![-100.0f64..-1.0, 1.0f64..100.0], n in 0.0f64..1e7,
            mid in 0.0f64..0.03, y in 0.0f64..20.0
        ) {
            let cav = CavityParams::new(kappa, trans / (2.0 * kappa)).unwrap();
            let b = BeamParams::new(w0, lambda).unwrap();
            let opt = OpticalParams::new(delta, 0.0).unwrap();
            let s = detuning_shift(&cav, &b, &opt, n).unwrap();
            prop_assert!((s.direct - s.via_cooperativity).abs() <= 1e-12 * s.direct.abs());
            let inp = EffNumInputs::new(CloudParams::new(1e6, 1e-3, 0.1, 9.81).unwrap(), b).unwrap();
            let d = detuning_spectrum(&cav, &opt, &inp, mid, y / inp.tau_w()).unwrap();
            prop_assert!((d.from_number_spectrum - d.from_cooperativity).abs() <= 1e-12 * d.from_number_spectrum.abs());
        }
    }
}
