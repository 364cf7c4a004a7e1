//! Subcommand implementations.

use crate::config::Resolved;
use crate::output::{
    check_schema, csv_preamble, write_summary, write_text, SlopeFit, Summary, VarianceFit,
};
use anyhow::{bail, Context, Result};
use condensate::analysis::fit_inverse_slope;
use condensate::filter::lambda_visibility;
use condensate::model::{visibility_one_detection, CondensateSpec};
use condensate::montecarlo::{run_ensemble, run_many, run_single, Engine};
use condensate::report::run_validation_suite;
use condensate::rng::run_stream;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn with_extension(prefix: &Path, ext: &str) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(ext);
    prefix.with_file_name(name)
}

/// `visibility-curve`: closed-form reference curves over a log-spaced
/// net-rate-ratio grid.
pub fn visibility_curve(
    resolved: &Resolved,
    out: &Path,
    ratio_min: f64,
    ratio_max: f64,
    points: usize,
    fock_atoms: u64,
) -> Result<()> {
    if !(ratio_min > 0.0 && ratio_max > ratio_min) || points < 2 {
        bail!("ratio grid must satisfy 0 < min < max with at least 2 points");
    }
    let log_min = ratio_min.log10();
    let log_max = ratio_max.log10();
    let ratios: Vec<f64> = (0..points)
        .map(|i| 10f64.powf(log_min + (log_max - log_min) * i as f64 / (points - 1) as f64))
        .collect();
    let fock = CondensateSpec::fock(fock_atoms);
    let poisson = CondensateSpec::poisson(100.0)?;
    let thermal = CondensateSpec::thermal(100.0)?;
    let mut text = csv_preamble("visibility-curve", &resolved.echo());
    writeln!(text, "ratio,fock_n{fock_atoms},poisson,thermal").unwrap();
    for &ratio in &ratios {
        // Equal means in each pair, so gamma equals the net-rate ratio.
        let vf = visibility_one_detection(&fock, &fock, ratio);
        let vp = visibility_one_detection(&poisson, &poisson, ratio);
        let vt = visibility_one_detection(&thermal, &thermal, ratio);
        writeln!(text, "{ratio},{vf},{vp},{vt}").unwrap();
    }
    write_text(out, &text)
}

/// `run`: one stochastic run; histogram CSV plus fit summary.
pub fn run(resolved: &Resolved, out_prefix: &Path) -> Result<()> {
    let started = Instant::now();
    let mut rng = run_stream(resolved.config.seed, 0);
    let summary = run_single(&resolved.config, resolved.engine, &mut rng)?;
    let hist = condensate::analysis::FringeHistogram::from_phases(
        &summary.trace.phases,
        resolved.config.histogram_bins,
    )?;
    let mut text = csv_preamble("run", &resolved.echo());
    writeln!(text, "bin_center,count,normalized").unwrap();
    for j in 0..hist.bin_count() {
        writeln!(
            text,
            "{},{},{}",
            hist.bin_center(j),
            hist.counts()[j],
            hist.normalized()[j]
        )
        .unwrap();
    }
    write_text(&with_extension(out_prefix, "csv"), &text)?;

    let mut json = Summary::new("run", resolved.echo());
    json.final_visibility = summary.trace.per_step_visibility.last().copied();
    json.mean_fitted_visibility = Some(summary.fitted_visibility);
    json.fitted_phase = Some(summary.fitted_phase);
    write_summary(&with_extension(out_prefix, "json"), &json)?;
    eprintln!("run finished in {:.2?}", started.elapsed());
    Ok(())
}

/// `ensemble`: per-step mean and quartile bands plus a scalar summary.
pub fn ensemble(resolved: &Resolved, out_prefix: &Path) -> Result<()> {
    let started = Instant::now();
    let summary = run_ensemble(&resolved.config, resolved.engine)?;
    let mut text = csv_preamble("ensemble", &resolved.echo());
    writeln!(text, "m,mean_visibility,q25,q75,variance").unwrap();
    for m in 1..=resolved.config.detections {
        writeln!(
            text,
            "{m},{},{},{},{}",
            summary.per_step_mean[m],
            summary.per_step_lower_quartile[m],
            summary.per_step_upper_quartile[m],
            summary.variance_estimate_trace[m]
        )
        .unwrap();
    }
    write_text(&with_extension(out_prefix, "csv"), &text)?;

    let mut json = Summary::new("ensemble", resolved.echo());
    json.final_visibility = summary.per_step_mean.last().copied();
    json.mean_fitted_visibility = Some(summary.mean_fitted_visibility);
    write_summary(&with_extension(out_prefix, "json"), &json)?;
    eprintln!(
        "ensemble of {} runs finished in {:.2?}",
        resolved.config.runs,
        started.elapsed()
    );
    Ok(())
}

/// `variance`: contrast-loss variance against the 1/m law.
pub fn variance(resolved: &Resolved, out_prefix: &Path, fit_from: usize) -> Result<()> {
    let started = Instant::now();
    let config = &resolved.config;
    if fit_from < 1 || fit_from >= config.detections {
        bail!("fit_from must lie in [1, detections)");
    }
    let summary = run_ensemble(config, resolved.engine)?;
    let lambda = lambda_visibility(
        config.condensate_1.mean(),
        config.condensate_2.mean(),
        config.gamma_ratio,
    );
    let slope_factor = 1.0 - (1.0 - lambda * lambda).max(0.0).sqrt();

    // Least-squares coefficient of sigma² = c/m over [fit_from, detections].
    let mut num = 0.0;
    let mut den = 0.0;
    for m in fit_from..=config.detections {
        let x = 1.0 / m as f64;
        num += summary.variance_estimate_trace[m] * x;
        den += x * x;
    }
    let coefficient = num / den;

    let mut text = csv_preamble("variance", &resolved.echo());
    writeln!(text, "m,variance,law").unwrap();
    for m in fit_from..=config.detections {
        let law = if slope_factor > 0.0 {
            1.0 / (slope_factor * m as f64)
        } else {
            f64::NAN
        };
        writeln!(text, "{m},{},{law}", summary.variance_estimate_trace[m]).unwrap();
    }
    write_text(&with_extension(out_prefix, "csv"), &text)?;

    let mut json = Summary::new("variance", resolved.echo());
    json.final_visibility = summary.per_step_mean.last().copied();
    json.variance_fit = Some(VarianceFit {
        coefficient,
        fit_from,
        slope_factor,
    });
    write_summary(&with_extension(out_prefix, "json"), &json)?;
    eprintln!("variance experiment finished in {:.2?}", started.elapsed());
    Ok(())
}

/// `slope`: inverse-spread slopes of number-state trajectories at several
/// net counting-rate ratios.
pub fn slope(
    resolved: &Resolved,
    out_prefix: &Path,
    atoms: u64,
    ratios: &[f64],
    fit_from: usize,
) -> Result<()> {
    let started = Instant::now();
    if ratios.is_empty() {
        bail!("need at least one ratio");
    }
    let mut text = csv_preamble("slope", &resolved.echo());
    writeln!(text, "ratio,m,mean_delta_phi").unwrap();
    let mut fits = Vec::new();
    for &ratio in ratios {
        if !(ratio.is_finite() && ratio > 0.0) {
            bail!("ratios must be positive, got {ratio}");
        }
        let mut config = resolved.config.clone();
        config.condensate_1 = CondensateSpec::fock(atoms);
        config.condensate_2 = CondensateSpec::fock(atoms);
        // Equal occupations: the net-rate ratio is the detection-rate ratio.
        config.gamma_ratio = ratio;
        let summaries = run_many(&config, Engine::FockTrajectory)?;
        let steps = config.detections;
        let mean_trace: Vec<(usize, f64)> = (0..steps)
            .map(|i| {
                let mean = summaries.iter().map(|r| r.variance_trace[i]).sum::<f64>()
                    / summaries.len() as f64;
                (i + 1, mean)
            })
            .collect();
        for &(m, dphi) in &mean_trace {
            writeln!(text, "{ratio},{m},{dphi}").unwrap();
        }
        // Per-run slopes averaged over the ensemble.
        let mut slope_sum = 0.0;
        for run in &summaries {
            let trace: Vec<(usize, f64)> = run
                .variance_trace
                .iter()
                .enumerate()
                .map(|(i, &v)| (i + 1, v))
                .collect();
            slope_sum += fit_inverse_slope(&trace, fit_from)?;
        }
        let lambda = lambda_visibility(atoms as f64, atoms as f64, ratio);
        fits.push(SlopeFit {
            ratio,
            slope: slope_sum / summaries.len() as f64,
            predicted: 1.0 - (1.0 - lambda * lambda).max(0.0).sqrt(),
        });
    }
    write_text(&with_extension(out_prefix, "csv"), &text)?;

    let mut json = Summary::new("slope", resolved.echo());
    json.slope_fits = Some(fits);
    write_summary(&with_extension(out_prefix, "json"), &json)?;
    eprintln!("slope experiment finished in {:.2?}", started.elapsed());
    Ok(())
}

/// `validate`: cross-engine oracle suite plus schema checks of emitted
/// files. Returns false if anything failed.
pub fn validate(resolved: &Resolved, out: Option<&Path>, check: &[PathBuf]) -> Result<bool> {
    let report = run_validation_suite(resolved.config.seed);
    for outcome in &report.checks {
        println!(
            "check {:<42} max deviation {:>12.3e}  tolerance {:>9.1e}  {}",
            outcome.name,
            outcome.max_deviation,
            outcome.tolerance,
            if outcome.passed { "PASS" } else { "FAIL" }
        );
    }
    let mut all_passed = report.passed;
    for path in check {
        match check_schema(path) {
            Ok(()) => println!("check schema {:<35} PASS", path.display()),
            Err(err) => {
                println!("check schema {:<35} FAIL ({err})", path.display());
                all_passed = false;
            }
        }
    }
    if let Some(path) = out {
        let mut json = Summary::new("validate", resolved.echo());
        json.oracle_report = Some(report);
        write_summary(path, &json).context("writing validation report")?;
    }
    Ok(all_passed)
}
