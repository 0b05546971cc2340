//! Monte-Carlo checks of the noise-robustness statements: probability of a
//! good estimate on a plane wave, and the second-order statistics of pure
//! noise coefficients.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_std, splitmix64, trial_seed, ExperimentKind, ExperimentPlan, ExperimentTable, TableRow};
use crate::error::{Error, Result};
use crate::signals::{add_noise, gen_plane_wave, NoiseSpec, Provenance, Signal};
use crate::wavepacket::{build_frame_grid, forward_transform, window_energy, FrameSpec};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub successes: usize,
    pub trials: usize,
    /// Trials with no coefficient in `Z_1 ∩ S_delta` (counted as failures).
    pub no_points: usize,
    /// Threshold actually used.
    pub delta: f64,
}

/// Fraction of trials in which the estimate at a random point of
/// `Z_1 ∩ S_delta` is within `tol * n` of the true frequency `n`.
///
/// The signal is `exp(2 pi i n x)` on `fs` samples plus real white noise of
/// variance `sigma2`. `delta` is raised to three noise standard deviations
/// of a coefficient, `3 sqrt(sigma2 / fs)`, when that exceeds `delta_floor`,
/// so that `S_delta` stays above the noise level. `cell` selects the noise
/// stream.
#[allow(clippy::too_many_arguments)]
pub fn estimate_probability(
    n: f64,
    s: f64,
    sigma2: f64,
    tol: f64,
    trials: usize,
    seed: u64,
    cell: usize,
    fs: usize,
    delta_floor: f64,
) -> Result<ProbabilityEstimate> {
    if trials == 0 {
        return Err(Error::param("trials must be at least 1"));
    }
    if !(n > 0.0 && n < fs as f64 / 2.0) {
        return Err(Error::param(format!("frequency {n} outside (0, {})", fs / 2)));
    }
    let clean = gen_plane_wave(n, fs)?;
    let grid = build_frame_grid(&FrameSpec::new_1d(fs, s))?;
    let delta = delta_floor.max(3.0 * (sigma2 / fs as f64).sqrt());
    let zone: Vec<usize> = grid
        .centers
        .iter()
        .enumerate()
        .filter(|(_, c)| (c.modulus - n).abs() <= c.radius)
        .map(|(i, _)| i)
        .collect();
    let outcomes: Vec<Option<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let tseed = trial_seed(seed, cell, t);
            let sig = if sigma2 > 0.0 {
                add_noise(&clean, &NoiseSpec::gaussian(sigma2, tseed))?
            } else {
                clean.clone()
            };
            let coeffs = forward_transform(&sig, &grid)?;
            let mut points = Vec::new();
            for &i in &zone {
                for (b, w) in coeffs.w.row(i).iter().enumerate() {
                    if w.norm() >= delta {
                        points.push((i, b));
                    }
                }
            }
            if points.is_empty() {
                return Ok(None);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(tseed));
            let (i, b) = points[rng.random_range(0..points.len())];
            let v = (coeffs.grad[0][[i, b]] / (Complex64::new(0.0, 2.0 * std::f64::consts::PI) * coeffs.w[[i, b]])).re;
            Ok(Some((v - n).abs() <= tol * n))
        })
        .collect::<Result<_>>()?;
    let successes = outcomes.iter().filter(|o| **o == Some(true)).count();
    let no_points = outcomes.iter().filter(|o| o.is_none()).count();
    let (lo, hi) = wilson_interval(successes, trials);
    Ok(ProbabilityEstimate {
        p_hat: successes as f64 / trials as f64,
        lo,
        hi,
        successes,
        trials,
        no_points,
        delta,
    })
}

/// Rows `(s, n, sigma2)`; the noise stream depends on `(n, sigma2)` only.
pub(super) fn run_prob_estimate(plan: &ExperimentPlan) -> Result<ExperimentTable> {
    let fs = plan.fs.unwrap_or(1024);
    let tol = plan.tol.unwrap_or(0.05);
    let floor = plan.delta.unwrap_or(1e-2);
    let mut table = ExperimentTable::new(
        ExperimentKind::ProbEstimate,
        plan.seed,
        &["s", "n", "sigma2"],
        &["wilson_lo", "wilson_hi", "no_points", "delta"],
    );
    table.notes.push(format!("fs={fs}"));
    table.notes.push(format!("tol={tol}"));
    table.notes.push(format!("delta_floor={floor}"));
    for &s in &plan.s {
        let s = if s >= 1.0 { super::COMPARISON_S } else { s };
        for (ni, &n) in plan.n.iter().enumerate() {
            for (si, &sigma2) in plan.sigma2.iter().enumerate() {
                let cell = ni * plan.sigma2.len() + si;
                let est = estimate_probability(n, s, sigma2, tol, plan.trials(), plan.seed, cell, fs, floor)?;
                let bernoulli: Vec<f64> = (0..est.trials)
                    .map(|k| if k < est.successes { 1.0 } else { 0.0 })
                    .collect();
                let (_, std) = mean_std(&bernoulli);
                table.rows.push(TableRow {
                    axes: vec![s, n, sigma2],
                    mean: est.p_hat,
                    std,
                    trials: est.trials,
                    seed: trial_seed(plan.seed, cell, 0),
                    extra: vec![est.lo, est.hi, est.no_points as f64, est.delta],
                });
            }
        }
    }
    Ok(table)
}

/// Empirical `Var W_e(a, b)` of pure white noise against `sigma2 * h * ||w_ab||^2`,
/// with `h = 1 / fs` the sample spacing of the unit domain.
///
/// For each requested center frequency the nearest frame center is used.
/// Per trial the squared magnitude is averaged over all `b` (the noise is
/// stationary); rows report the mean and spread of that average. The
/// `corr_disjoint` column is the sample correlation magnitude across trials
/// of `W_a(0)` and `W_a'(0)`, for the sampled center `a'` farthest from `a`
/// whose support is disjoint. (Summing over `b` instead would vanish
/// identically for disjoint supports, whatever the noise.)
pub fn coeff_variance_check(plan: &ExperimentPlan) -> Result<ExperimentTable> {
    let plan = plan.clone().resolved()?;
    let fs = plan.fs.unwrap_or(1024);
    let trials = plan.trials();
    let mut table = ExperimentTable::new(
        ExperimentKind::CoeffVariance,
        plan.seed,
        &["s", "sigma2", "a"],
        &["expected", "ratio", "corr_disjoint"],
    );
    table.notes.push(format!("fs={fs}"));
    let zero = Signal::new_1d(vec![Complex64::new(0.0, 0.0); fs], false, Provenance::default())?;
    for &s in &plan.s {
        let s = if s >= 1.0 { super::COMPARISON_S } else { s };
        let grid = build_frame_grid(&FrameSpec::new_1d(fs, s))?;
        let picks: Vec<usize> = plan
            .centers
            .iter()
            .map(|&f| {
                (0..grid.len())
                    .min_by(|&i, &j| {
                        let di = (grid.centers[i].modulus - f).abs();
                        let dj = (grid.centers[j].modulus - f).abs();
                        di.total_cmp(&dj)
                    })
                    .unwrap_or(0)
            })
            .collect();
        let partner: Vec<Option<usize>> = picks
            .iter()
            .map(|&i| {
                let ci = &grid.centers[i];
                let reach = grid.spec.mother.cutoff();
                picks
                    .iter()
                    .copied()
                    .filter(|&j| {
                        let cj = &grid.centers[j];
                        (ci.modulus - cj.modulus).abs() > reach * (ci.radius + cj.radius)
                    })
                    .max_by(|&j, &k| {
                        let dj = (grid.centers[j].modulus - ci.modulus).abs();
                        let dk = (grid.centers[k].modulus - ci.modulus).abs();
                        dj.total_cmp(&dk)
                    })
            })
            .collect();
        for (c, &sigma2) in plan.sigma2.iter().enumerate() {
            // per trial: mean |W|^2 per pick, and the coefficient at b = 0
            let per_trial: Vec<(Vec<f64>, Vec<Complex64>)> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let noise = add_noise(&zero, &NoiseSpec::gaussian(sigma2, trial_seed(plan.seed, c, t)))?;
                    let coeffs = forward_transform(&noise, &grid)?;
                    let power = picks
                        .iter()
                        .map(|&i| coeffs.w.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>() / fs as f64)
                        .collect();
                    let at0 = picks.iter().map(|&i| coeffs.w[[i, 0]]).collect();
                    Ok((power, at0))
                })
                .collect::<Result<_>>()?;
            for (k, &i) in picks.iter().enumerate() {
                let samples: Vec<f64> = per_trial.iter().map(|(p, _)| p[k]).collect();
                let (mean, std) = mean_std(&samples);
                let expected = sigma2 / fs as f64 * window_energy(&grid, i);
                let corr = match partner[k] {
                    Some(j) => {
                        let kj = picks.iter().position(|&p| p == j).unwrap_or(k);
                        let num = per_trial.iter().map(|(_, x)| x[k] * x[kj].conj()).sum::<Complex64>().norm();
                        let pi: f64 = per_trial.iter().map(|(_, x)| x[k].norm_sqr()).sum();
                        let pj: f64 = per_trial.iter().map(|(_, x)| x[kj].norm_sqr()).sum();
                        if pi * pj > 0.0 {
                            num / (pi * pj).sqrt()
                        } else {
                            0.0
                        }
                    }
                    None => f64::NAN,
                };
                table.rows.push(TableRow {
                    axes: vec![s, sigma2, grid.centers[i].modulus],
                    mean,
                    std,
                    trials,
                    seed: trial_seed(plan.seed, c, 0),
                    extra: vec![expected, mean / expected, corr],
                });
            }
        }
    }
    Ok(table)
}
