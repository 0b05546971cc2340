use rayon::prelude::*;

use super::{mean_std, trial_seed, ExperimentKind, ExperimentPlan, ExperimentTable, TableRow};
use crate::error::Result;
use crate::metrics::{emd_score, ideal_for_oracle};
use crate::signals::{
    add_noise, gen_2d_warped, gen_single_chirp, noise_only_2d, warped_wavevector_component,
    NoiseSpec, OracleId, Signal,
};
use crate::synchrosqueeze::{redundant_sst, selective_max_sst, stack_2d, SqueezeConfig, TfDistribution, VAxis};
use crate::wavepacket::FrameSpec;

/// Stand-in for `s = 1`, which lies outside the transform's validity range.
pub const COMPARISON_S: f64 = 1.0 - 1e-3;

fn run_s(s: f64) -> (f64, bool) {
    if s >= 1.0 {
        (COMPARISON_S, true)
    } else {
        (s, false)
    }
}

fn noisy(clean: &Signal, sigma2: f64, seed: u64) -> Result<Signal> {
    if sigma2 == 0.0 {
        return Ok(clean.clone());
    }
    add_noise(clean, &NoiseSpec::gaussian(sigma2, seed))
}

/// EMD of the chirp pipeline over `(s, red, sigma2)` cells.
fn emd_table(plan: &ExperimentPlan) -> Result<ExperimentTable> {
    let fs = plan.fs.unwrap_or(1024);
    let trials = plan.trials();
    let clean = gen_single_chirp(fs)?;
    let mut table = ExperimentTable::new(
        plan.kind,
        plan.seed,
        &["s", "red", "sigma2"],
        &["empty_slices", "dropped", "comparison"],
    );
    let band = plan.band;
    table.notes.push(format!("fs={fs}"));
    if let Some((lo, hi)) = band {
        table.notes.push(format!("band={lo}:{hi}"));
    }
    table.notes.push(format!("delta={}", plan.delta.unwrap_or(1e-2)));
    if plan.s.iter().any(|&s| s >= 1.0) {
        table.notes.push(format!("comparison_s={COMPARISON_S}"));
    }
    // noisy inputs are shared by every method cell at the same noise level
    let inputs: Vec<Vec<Signal>> = plan
        .sigma2
        .iter()
        .enumerate()
        .map(|(c, &sigma2)| {
            (0..trials)
                .map(|t| noisy(&clean, sigma2, trial_seed(plan.seed, c, t)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let cfg = SqueezeConfig::default()
        .with_delta(plan.delta.unwrap_or(1e-2))
        .with_bin(plan.v_bin.unwrap_or(1.0));
    for &s_req in &plan.s {
        let (s, flagged) = run_s(s_req);
        for &red in &plan.red {
            let mut spec = FrameSpec::new_1d(fs, s).with_red(red);
            if let Some((lo, hi)) = band {
                spec = spec.with_band(lo, hi);
            }
            let axis = cfg.axes_for(&spec)?[0];
            let ideal = ideal_for_oracle(OracleId::Chirp, axis, fs)?;
            for (c, &sigma2) in plan.sigma2.iter().enumerate() {
                let results: Vec<(f64, f64, f64)> = inputs[c]
                    .par_iter()
                    .map(|sig| {
                        let tf = redundant_sst(sig, &spec, &cfg)?;
                        let report = emd_score(&tf, &ideal)?;
                        Ok((report.emd, report.empty as f64, tf.dropped))
                    })
                    .collect::<Result<_>>()?;
                let emds: Vec<f64> = results.iter().map(|r| r.0).collect();
                let (mean, std) = mean_std(&emds);
                let n = results.len() as f64;
                table.rows.push(TableRow {
                    axes: vec![s, red as f64, sigma2],
                    mean,
                    std,
                    trials,
                    seed: trial_seed(plan.seed, c, 0),
                    extra: vec![
                        results.iter().map(|r| r.1).sum::<f64>() / n,
                        results.iter().map(|r| r.2).sum::<f64>() / n,
                        flagged as u8 as f64,
                    ],
                });
            }
        }
    }
    Ok(table)
}

/// Mean EMD of the redundant chirp pipeline as a function of `red` and the
/// noise variance.
pub fn run_emd_vs_red(plan: &ExperimentPlan) -> Result<ExperimentTable> {
    let mut plan = plan.clone();
    plan.kind = ExperimentKind::EmdVsRed;
    emd_table(&plan)
}

/// Mean EMD as a function of `s` and the noise variance; `s = 1` runs as
/// [`COMPARISON_S`] and is flagged.
pub fn run_emd_vs_noise(plan: &ExperimentPlan) -> Result<ExperimentTable> {
    let mut plan = plan.clone();
    plan.kind = ExperimentKind::EmdVsNoise;
    emd_table(&plan)
}

/// Fraction of `x1` positions whose stacked argmax lies within `tol_bins`
/// bins of the oracle wave-vector component.
pub fn ridge_concentration(stacked: &TfDistribution, oracle: impl Fn(f64) -> f64, tol_bins: f64) -> Result<f64> {
    let ridge = stacked.ridge()?;
    let ax = stacked.v_axes[0];
    let len = ridge.len();
    let hits = ridge
        .iter()
        .enumerate()
        .filter(|(b, k)| {
            k.is_some_and(|k| (ax.center(k) - oracle(*b as f64 / len as f64)).abs() <= tol_bins * ax.width)
        })
        .count();
    Ok(hits as f64 / len as f64)
}

/// Oracle-free statistic: fraction of neighbouring positions (cyclic) whose
/// argmax bins differ by at most `tol_bins`.
pub fn ridge_continuity(stacked: &TfDistribution, tol_bins: usize) -> Result<f64> {
    let ridge = stacked.ridge()?;
    let len = ridge.len();
    let close = (0..len)
        .filter(|&b| match (ridge[b], ridge[(b + 1) % len]) {
            (Some(a), Some(c)) => a.abs_diff(c) <= tol_bins,
            _ => false,
        })
        .count();
    Ok(close as f64 / len as f64)
}

/// Selective-max reassignment on the warped image with noise, and on noise
/// alone, at the `x2 = 0` row.
///
/// Rows are `(s, red, sigma2, noise_only)`. `signal_wins` counts trials in
/// which the signal case concentrated more than noise alone with the same
/// noise draw.
pub fn component_test(plan: &ExperimentPlan) -> Result<ExperimentTable> {
    let len = plan.fs.unwrap_or(512);
    let trials = plan.trials();
    let (lo, hi) = plan.band.unwrap_or((20.0, 120.0));
    let clean = gen_2d_warped(len)?;
    let mut table = ExperimentTable::new(
        ExperimentKind::ComponentTest,
        plan.seed,
        &["s", "red", "sigma2", "noise_only"],
        &["continuity", "signal_wins"],
    );
    table.notes.push(format!("scale={len}x{len}"));
    table.notes.push(format!("band={lo}:{hi}"));
    table.notes.push("row=0".into());
    // v2 only needs to hold the estimate; it is summed out
    let axes = vec![VAxis::over(0.0, hi, plan.v_bin.unwrap_or(1.0))?, VAxis::over(-hi, hi, hi / 12.0)?];
    let cfg = SqueezeConfig::default()
        .with_delta(plan.delta.unwrap_or(1e-2))
        .with_axes(axes)
        .with_rows(vec![0]);
    let conc = |sig: &Signal, spec: &FrameSpec| -> Result<(f64, f64)> {
        let st = stack_2d(&selective_max_sst(sig, spec, &cfg)?, 0)?;
        Ok((ridge_concentration(&st, warped_wavevector_component, 2.0)?, ridge_continuity(&st, 2)?))
    };
    for &s_req in &plan.s {
        let (s, _) = run_s(s_req);
        for &red in &plan.red {
            let spec = FrameSpec::new_2d(len, s).with_red(red).with_band(lo, hi);
            for (c, &sigma2) in plan.sigma2.iter().enumerate() {
                // trials run one at a time: each 2D distribution is large
                let mut sig_stats = Vec::with_capacity(trials);
                let mut noise_stats = Vec::with_capacity(trials);
                for t in 0..trials {
                    let seed = trial_seed(plan.seed, c, t);
                    sig_stats.push(conc(&noisy(&clean, sigma2, seed)?, &spec)?);
                    let only = noise_only_2d(len, &NoiseSpec::gaussian(sigma2, seed))?;
                    noise_stats.push(conc(&only, &spec)?);
                }
                let wins = sig_stats
                    .iter()
                    .zip(&noise_stats)
                    .filter(|(a, b)| a.0 > b.0)
                    .count() as f64;
                for (flag, stats) in [(0.0, &sig_stats), (1.0, &noise_stats)] {
                    let conc: Vec<f64> = stats.iter().map(|x| x.0).collect();
                    let cont: Vec<f64> = stats.iter().map(|x| x.1).collect();
                    let (mean, std) = mean_std(&conc);
                    table.rows.push(TableRow {
                        axes: vec![s, red as f64, sigma2, flag],
                        mean,
                        std,
                        trials,
                        seed: trial_seed(plan.seed, c, 0),
                        extra: vec![mean_std(&cont).0, wins],
                    });
                }
            }
        }
    }
    Ok(table)
}
