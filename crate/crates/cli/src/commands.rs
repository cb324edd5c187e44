use std::f64::consts::PI;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use coldcloud::cavity::{detuning_spectrum, is_dispersive, linear_regime, DISPERSIVE_ADVISORY};
use coldcloud::effnum::{sigma_general, sigma_high_temperature, sigma_long_rayleigh, sigma_small_waist};
use coldcloud::fluct::{
    covariance_exact, covariance_quasistationary, mean_number, normalized_spectrum, spectrum_series, variance,
    ScaledFluctParams, Terms,
};
use coldcloud::mc::{ensemble_stats, EnsembleStats};
use coldcloud::saturation::{sigma_saturated_closed, sigma_saturated_general};
use coldcloud::{CloudParams, EffNumInputs};

use crate::config::RunConfig;
use crate::output::{Cell, Table, Writer};

/// Above this `tau_w / tau_r` the quasistationary results are flagged.
const QUASISTATIONARY_RATIO: f64 = 0.1;

/// Raised by `validate` when a comparison fails; maps to exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("validation failed: {failed} of {total} comparisons outside {limit} standard errors")]
pub struct ValidationFailed {
    pub failed: usize,
    pub total: usize,
    pub limit: f64,
}

fn times(cfg: &RunConfig) -> Result<Vec<f64>> {
    let t = cfg.grids.t.values("grids.t")?;
    if t.iter().any(|&x| x < 0.0) {
        return Err(crate::config::ConfigError("field `grids.t`: times must be non-negative".into()).into());
    }
    Ok(t)
}

fn mids(cfg: &RunConfig) -> Result<Vec<f64>> {
    let t = cfg.grids.mid.values("grids.T")?;
    if t.iter().any(|&x| x < 0.0) {
        return Err(crate::config::ConfigError("field `grids.T`: fall times must be non-negative".into()).into());
    }
    Ok(t)
}

fn check_quasistationary(inp: &EffNumInputs, out: &mut Writer) {
    let ratio = inp.tau_w() / inp.cloud.tau_r();
    if ratio > QUASISTATIONARY_RATIO {
        out.warn(format!(
            "tau_w / tau_r = {ratio:.3} is not small; quasistationary results are rough"
        ));
    }
}

pub fn mean(cfg: &RunConfig, out: &mut Writer) -> Result<Value> {
    let inp = cfg.inputs()?;
    let mut table = Table::new(vec!["t_s", "mean_number"]);
    for t in times(cfg)? {
        table.push(vec![Cell::Num(t), Cell::Num(mean_number(&inp, t)?)]);
    }
    out.write_table("mean.csv", &table)?;
    Ok(Value::Null)
}

pub fn sigma(cfg: &RunConfig, out: &mut Writer) -> Result<Value> {
    let inp = cfg.inputs()?;
    let mut table = Table::new(vec![
        "t_s",
        "sigma_general",
        "sigma_small_waist",
        "sigma_long_rayleigh",
        "sigma_high_temperature",
    ]);
    for t in times(cfg)? {
        table.push(vec![
            Cell::Num(t),
            Cell::Num(sigma_general(&inp, t).with_context(|| format!("sigma_general at t = {t}"))?),
            Cell::Num(sigma_small_waist(&inp, t)?),
            Cell::Num(sigma_long_rayleigh(&inp, t)?),
            Cell::Num(sigma_high_temperature(&inp, t)?),
        ]);
    }
    out.write_table("sigma.csv", &table)?;
    Ok(Value::Null)
}

pub fn saturated(cfg: &RunConfig, out: &mut Writer) -> Result<Value> {
    let inp = cfg.inputs()?;
    let opt = cfg.optical_params()?;
    let mut table = Table::new(vec!["t_s", "sigma_general", "sigma_saturated_general", "sigma_saturated_closed"]);
    for t in times(cfg)? {
        table.push(vec![
            Cell::Num(t),
            Cell::Num(sigma_general(&inp, t)?),
            Cell::Num(sigma_saturated_general(&inp, &opt, t).with_context(|| format!("saturated sigma at t = {t}"))?),
            Cell::Num(sigma_saturated_closed(&inp, &opt, t)?),
        ]);
    }
    out.write_table("saturated.csv", &table)?;
    Ok(Value::Null)
}

pub fn variance_cmd(cfg: &RunConfig, out: &mut Writer) -> Result<Value> {
    let inp = cfg.inputs()?;
    let mut table = Table::new(vec!["t_s", "mean_number", "variance", "variance_over_mean"]);
    for t in times(cfg)? {
        let m = mean_number(&inp, t)?;
        let v = variance(&inp, t)?;
        table.push(vec![Cell::Num(t), Cell::Num(m), Cell::Num(v), Cell::Num(v / m)]);
    }
    out.write_table("variance.csv", &table)?;
    Ok(Value::Null)
}

pub fn covariance(cfg: &RunConfig, out: &mut Writer) -> Result<Value> {
    let inp = cfg.inputs()?;
    check_quasistationary(&inp, out);
    let p = ScaledFluctParams::small_waist(&inp);
    let taus = cfg.grids.tau.values("grids.tau")?;
    let mut table = Table::new(vec!["T_s", "tau_s", "covariance_exact", "covariance_quasistationary"]);
    let mut skipped = 0;
    for mid in mids(cfg)? {
        for &tau in &taus {
            // the exact form needs both observation times to be non-negative
            let exact = if 0.5 * tau.abs() <= mid {
                covariance_exact(&inp, mid, tau)?
            } else {
                skipped += 1;
                f64::NAN
            };
            table.push(vec![
                Cell::Num(mid),
                Cell::Num(tau),
                Cell::Num(exact),
                Cell::Num(covariance_quasistationary(&p, mid, tau)),
            ]);
        }
    }
    if skipped > 0 {
        out.warn(format!("{skipped} rows have an observation time before release; exact covariance set to nan"));
    }
    out.write_table("covariance.csv", &table)?;
    Ok(Value::Null)
}

pub fn spectrum(cfg: &RunConfig, out: &mut Writer) -> Result<Value> {
    let inp = cfg.inputs()?;
    check_quasistationary(&inp, out);
    let p = ScaledFluctParams::small_waist(&inp);
    let omegas = cfg.grids.omega.values("grids.omega")?;
    let mut table = Table::new(vec![
        "T_s",
        "omega_rad_s",
        "frequency_hz",
        "spectrum",
        "normalized_spectrum",
        "series_terms",
    ]);
    for mid in mids(cfg)? {
        for &w in &omegas {
            let s = spectrum_series(&p, mid, w, Terms::Adaptive).with_context(|| format!("spectrum at T = {mid}, omega = {w}"))?;
            let n = normalized_spectrum(&p, mid, w, Terms::Adaptive)?;
            table.push(vec![
                Cell::Num(mid),
                Cell::Num(w),
                Cell::Num(w / (2.0 * PI)),
                Cell::Num(s.value),
                Cell::Num(n.value),
                Cell::Int(s.terms as u64),
            ]);
        }
    }
    out.write_table("spectrum.csv", &table)?;
    Ok(Value::Null)
}

pub fn detuning(cfg: &RunConfig, out: &mut Writer) -> Result<Value> {
    let inp = cfg.inputs()?;
    let opt = cfg.optical_params()?;
    let cav = cfg.cavity_params()?;
    check_quasistationary(&inp, out);
    if !is_dispersive(&opt) {
        out.warn(format!(
            "|delta| = {} is below {DISPERSIVE_ADVISORY}; the dispersive expressions are outside their regime",
            opt.delta.abs()
        ));
    }
    let omegas = cfg.grids.omega.values("grids.omega")?;
    let mut table = Table::new(vec![
        "T_s",
        "omega_rad_s",
        "frequency_hz",
        "s_phiphi",
        "s_phiphi_cooperativity_form",
        "cooperativity",
    ]);
    let mut regimes = Vec::new();
    for mid in mids(cfg)? {
        for &w in &omegas {
            let d = detuning_spectrum(&cav, &opt, &inp, mid, w)?;
            table.push(vec![
                Cell::Num(mid),
                Cell::Num(w),
                Cell::Num(w / (2.0 * PI)),
                Cell::Num(d.from_number_spectrum),
                Cell::Num(d.from_cooperativity),
                Cell::Num(d.cooperativity),
            ]);
        }
        let lr = linear_regime(&cav, &opt, &inp, mid)?;
        if !lr.linear {
            out.warn(format!("at T = {mid} s the detuning noise peak {:.3e} exceeds kappa", lr.peak));
        }
        regimes.push(json!({"T_s": mid, "peak_s_phiphi": lr.peak, "kappa": lr.kappa, "linear": lr.linear}));
    }
    out.write_table("detuning_spectrum.csv", &table)?;
    Ok(json!({ "linear_regime": regimes }))
}

fn mc_inputs(cfg: &RunConfig) -> Result<EffNumInputs> {
    let inp = cfg.inputs()?;
    let n_total = cfg.mc()?.n_total.unwrap_or(inp.cloud.n_total);
    let cloud = CloudParams::new(n_total, inp.cloud.sigma_r, inp.cloud.sigma_v, inp.cloud.g)?;
    Ok(EffNumInputs::new(cloud, inp.beam)?)
}

fn run_ensemble(cfg: &RunConfig, seed: u64) -> Result<(EffNumInputs, EnsembleStats)> {
    let inp = mc_inputs(cfg)?;
    let t = times(cfg)?;
    let stats = ensemble_stats(&inp.cloud, &inp.beam, &t, cfg.mc()?.realizations, seed)?;
    Ok((inp, stats))
}

pub fn mc(cfg: &RunConfig, seed: u64, out: &mut Writer) -> Result<Value> {
    let (inp, stats) = run_ensemble(cfg, seed)?;
    let mut table = Table::new(vec![
        "t_s",
        "mean",
        "mean_se",
        "variance",
        "variance_se",
        "variance_over_mean",
        "variance_over_mean_se",
        "mean_analytic",
        "variance_analytic",
    ]);
    for (i, &t) in stats.times.iter().enumerate() {
        table.push(vec![
            Cell::Num(t),
            Cell::Num(stats.mean[i]),
            Cell::Num(stats.mean_se[i]),
            Cell::Num(stats.variance[i]),
            Cell::Num(stats.variance_se[i]),
            Cell::Num(stats.fano[i]),
            Cell::Num(stats.fano_se[i]),
            Cell::Num(mean_number(&inp, t)?),
            Cell::Num(variance(&inp, t)?),
        ]);
    }
    out.write_table("mc.csv", &table)?;

    let mut cov = Table::new(vec!["t1_s", "t2_s", "covariance", "covariance_se", "covariance_exact"]);
    for (i, &a) in stats.times.iter().enumerate() {
        for (j, &b) in stats.times.iter().enumerate() {
            cov.push(vec![
                Cell::Num(a),
                Cell::Num(b),
                Cell::Num(stats.covariance[i][j]),
                Cell::Num(stats.covariance_se[i][j]),
                Cell::Num(covariance_exact(&inp, 0.5 * (a + b), a - b)?),
            ]);
        }
    }
    out.write_table("mc_covariance.csv", &cov)?;
    Ok(json!({ "realizations": stats.realization_count, "n_total": inp.cloud.n_total }))
}

pub fn validate(cfg: &RunConfig, seed: u64, out: &mut Writer) -> Result<(Value, Option<ValidationFailed>)> {
    let (inp, stats) = run_ensemble(cfg, seed)?;
    let limit = cfg.tolerances.mc_se;
    let mut table = Table::new(vec![
        "quantity",
        "t1_s",
        "t2_s",
        "estimate",
        "standard_error",
        "analytic",
        "deviation_se",
        "pass",
    ]);
    let mut report = String::new();
    let mut failed = 0;
    let mut total = 0;
    let mut check = |name: &'static str, a: f64, b: f64, est: f64, se: f64, exact: f64| {
        let dev = if se > 0.0 {
            (est - exact).abs() / se
        } else if est == exact {
            0.0
        } else {
            f64::INFINITY
        };
        let pass = dev <= limit;
        total += 1;
        if !pass {
            failed += 1;
        }
        table.push(vec![
            Cell::Text(name),
            Cell::Num(a),
            Cell::Num(b),
            Cell::Num(est),
            Cell::Num(se),
            Cell::Num(exact),
            Cell::Num(dev),
            Cell::Text(if pass { "true" } else { "false" }),
        ]);
        report.push_str(&format!(
            "{} {name} t1={a:.6e} t2={b:.6e}: estimate {est:.6e} +- {se:.3e}, analytic {exact:.6e} ({dev:.2} SE)\n",
            if pass { "PASS" } else { "FAIL" }
        ));
    };
    for (i, &t) in stats.times.iter().enumerate() {
        check("mean", t, t, stats.mean[i], stats.mean_se[i], mean_number(&inp, t)?);
        check("variance", t, t, stats.variance[i], stats.variance_se[i], variance(&inp, t)?);
        for (j, &b) in stats.times.iter().enumerate().skip(i + 1) {
            let exact = covariance_exact(&inp, 0.5 * (t + b), b - t)?;
            check("covariance", t, b, stats.covariance[i][j], stats.covariance_se[i][j], exact);
        }
    }
    let verdict = if failed == 0 { "PASS" } else { "FAIL" };
    report.push_str(&format!(
        "{verdict}: {} of {total} comparisons within {limit} standard errors ({} realizations, seed {seed})\n",
        total - failed,
        stats.realization_count
    ));
    print!("{report}");
    out.write_table("validate.csv", &table)?;
    out.write_text("validate_report.txt", &report)?;
    let summary = json!({ "passed": failed == 0, "comparisons": total, "failed": failed, "limit_se": limit });
    let failure = (failed > 0).then_some(ValidationFailed { failed, total, limit });
    Ok((summary, failure))
}
