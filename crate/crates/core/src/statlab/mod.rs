//! Seeded Monte-Carlo experiments.
//!
//! Every trial draws its noise from `trial_seed(base, cell, trial)`, where
//! `cell` indexes the noise level only. Rows that differ in method
//! parameters (`s`, `red`) at the same noise level therefore see the same
//! realisations, and the comparison between methods is paired.
//!
//! Trials run in parallel but are collected in order, so tables are
//! bit-identical for any thread count.

mod experiments;
mod theory;

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use experiments::{
    component_test, ridge_concentration, ridge_continuity, run_emd_vs_noise, run_emd_vs_red,
    COMPARISON_S,
};
pub use theory::{coeff_variance_check, estimate_probability, wilson_interval, ProbabilityEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    EmdVsRed,
    EmdVsNoise,
    ProbEstimate,
    ComponentTest,
    CoeffVariance,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::EmdVsRed => "emd-vs-red",
            ExperimentKind::EmdVsNoise => "emd-vs-noise",
            ExperimentKind::ProbEstimate => "prob-estimate",
            ExperimentKind::ComponentTest => "component-test",
            ExperimentKind::CoeffVariance => "coeff-variance",
        }
    }
}

/// An experiment description, usually read from TOML.
///
/// Empty axes and unset options take per-kind defaults (see
/// [`ExperimentPlan::resolved`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default)]
    pub red: Vec<usize>,
    #[serde(default)]
    pub sigma2: Vec<f64>,
    /// Plane-wave frequencies (prob-estimate).
    #[serde(default)]
    pub n: Vec<f64>,
    /// Center frequencies to probe (coeff-variance).
    #[serde(default)]
    pub centers: Vec<f64>,
    /// Samples per axis.
    #[serde(default)]
    pub fs: Option<usize>,
    #[serde(default)]
    pub band: Option<(f64, f64)>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Relative IF error counted as a good estimate (prob-estimate).
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub v_bin: Option<f64>,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentPlan {
            kind,
            trials: None,
            seed: 0,
            output: None,
            s: Vec::new(),
            red: Vec::new(),
            sigma2: Vec::new(),
            n: Vec::new(),
            centers: Vec::new(),
            fs: None,
            band: None,
            delta: None,
            tol: None,
            v_bin: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let plan: ExperimentPlan = toml::from_str(text)?;
        plan.resolved()
    }

    /// Fills defaults and validates.
    ///
    /// | kind | s | red | sigma2 | other |
    /// |---|---|---|---|---|
    /// | emd-vs-red | 0.75 | 1,2,4,6,8,10,12,16 | 0,1,2 | fs 1024, band 10..60, 20 trials |
    /// | emd-vs-noise | 0.625,0.75,0.875,1 | 10 | 0,0.5,..,4 | fs 1024, band 10..60, 20 trials |
    /// | prob-estimate | 0.625,0.75,0.875 | - | 1 | n 64,128,256, fs 1024, tol 0.05, 200 trials |
    /// | coeff-variance | 0.75 | - | 1 | centers 32,100,300, fs 1024, 500 trials |
    /// | component-test | 0.625 | 10 | 5,10 | fs 512, band 20..120, 20 trials |
    pub fn resolved(mut self) -> Result<Self> {
        use ExperimentKind::*;
        let fill_f = |v: &mut Vec<f64>, d: &[f64]| {
            if v.is_empty() {
                *v = d.to_vec();
            }
        };
        match self.kind {
            EmdVsRed => {
                fill_f(&mut self.s, &[0.75]);
                fill_f(&mut self.sigma2, &[0.0, 1.0, 2.0]);
                if self.red.is_empty() {
                    self.red = vec![1, 2, 4, 6, 8, 10, 12, 16];
                }
            }
            EmdVsNoise => {
                fill_f(&mut self.s, &[0.625, 0.75, 0.875, 1.0]);
                fill_f(&mut self.sigma2, &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]);
                if self.red.is_empty() {
                    self.red = vec![10];
                }
            }
            ProbEstimate => {
                fill_f(&mut self.s, &[0.625, 0.75, 0.875]);
                fill_f(&mut self.sigma2, &[1.0]);
                fill_f(&mut self.n, &[64.0, 128.0, 256.0]);
            }
            CoeffVariance => {
                fill_f(&mut self.s, &[0.75]);
                fill_f(&mut self.sigma2, &[1.0]);
                fill_f(&mut self.centers, &[32.0, 100.0, 300.0]);
            }
            ComponentTest => {
                fill_f(&mut self.s, &[0.625]);
                fill_f(&mut self.sigma2, &[5.0, 10.0]);
                if self.red.is_empty() {
                    self.red = vec![10];
                }
            }
        }
        let (fs, band, trials) = match self.kind {
            EmdVsRed | EmdVsNoise => (1024, Some((10.0, 60.0)), 20),
            ProbEstimate => (1024, None, 200),
            CoeffVariance => (1024, None, 500),
            ComponentTest => (512, Some((20.0, 120.0)), 20),
        };
        self.fs.get_or_insert(fs);
        if self.band.is_none() {
            self.band = band;
        }
        self.trials.get_or_insert(trials);
        self.delta.get_or_insert(1e-2);
        self.tol.get_or_insert(0.05);
        self.v_bin.get_or_insert(1.0);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.trials.unwrap_or(0) == 0 {
            return Err(Error::param("trials must be at least 1"));
        }
        let axes: &[(&str, bool)] = match self.kind {
            ExperimentKind::EmdVsRed | ExperimentKind::EmdVsNoise | ExperimentKind::ComponentTest => {
                &[("s", self.s.is_empty()), ("red", self.red.is_empty()), ("sigma2", self.sigma2.is_empty())]
            }
            ExperimentKind::ProbEstimate => {
                &[("s", self.s.is_empty()), ("n", self.n.is_empty()), ("sigma2", self.sigma2.is_empty())]
            }
            ExperimentKind::CoeffVariance => &[
                ("s", self.s.is_empty()),
                ("centers", self.centers.is_empty()),
                ("sigma2", self.sigma2.is_empty()),
            ],
        };
        if let Some((name, _)) = axes.iter().find(|(_, empty)| *empty) {
            return Err(Error::param(format!("axis `{name}` is empty")));
        }
        if let Some(&v) = self.sigma2.iter().find(|&&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::param(format!("noise variance must be >= 0, got {v}")));
        }
        if let Some(&s) = self.s.iter().find(|&&s| !(s > 0.5 && s <= 1.0)) {
            return Err(Error::param(format!("s must lie in (1/2, 1], got {s}")));
        }
        if self.red.contains(&0) {
            return Err(Error::param("red must be at least 1"));
        }
        let fs = self.fs.unwrap_or(0);
        if !fs.is_power_of_two() {
            return Err(Error::param(format!("fs must be a power of two, got {fs}")));
        }
        if !(self.tol.unwrap_or(0.05) > 0.0) {
            return Err(Error::param("tol must be positive"));
        }
        Ok(())
    }

    pub fn trials(&self) -> usize {
        self.trials.unwrap_or(1)
    }
}

/// SplitMix64 finaliser, used to decorrelate seed arithmetic.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of `trial` in noise cell `cell`.
pub fn trial_seed(base: u64, cell: usize, trial: usize) -> u64 {
    base ^ splitmix64(((cell as u64) << 32) | trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub axes: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
    /// Seed of the row's first trial.
    pub seed: u64,
    pub extra: Vec<f64>,
}

/// Rows of `(axes..., mean, std, trials, seed, extra...)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTable {
    pub kind: ExperimentKind,
    pub base_seed: u64,
    pub version: String,
    pub axis_names: Vec<String>,
    pub extra_names: Vec<String>,
    pub rows: Vec<TableRow>,
    /// Free-form `key=value` notes written into the header.
    pub notes: Vec<String>,
}

impl ExperimentTable {
    pub fn new(kind: ExperimentKind, base_seed: u64, axis_names: &[&str], extra_names: &[&str]) -> Self {
        ExperimentTable {
            kind,
            base_seed,
            version: crate::VERSION.to_string(),
            axis_names: axis_names.iter().map(|s| s.to_string()).collect(),
            extra_names: extra_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols = self.axis_names.clone();
        cols.extend(["mean", "std", "trials", "seed"].map(String::from));
        cols.extend(self.extra_names.iter().cloned());
        cols
    }

    /// Row whose axes equal `axes` exactly.
    pub fn row(&self, axes: &[f64]) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.axes == axes)
    }

    /// Value of a named extra column.
    pub fn extra(&self, row: &TableRow, name: &str) -> Option<f64> {
        let i = self.extra_names.iter().position(|n| n == name)?;
        row.extra.get(i).copied()
    }

    /// CSV with a `#` header line carrying version, kind, seed and notes.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header = format!(
            "# synsq {} kind={} base_seed={}",
            self.version,
            self.kind.name(),
            self.base_seed
        );
        for note in &self.notes {
            header.push(' ');
            header.push_str(note);
        }
        writeln!(out, "{header}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns())?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.axes.iter().map(|v| v.to_string()).collect();
            rec.push(r.mean.to_string());
            rec.push(r.std.to_string());
            rec.push(r.trials.to_string());
            rec.push(r.seed.to_string());
            rec.extend(r.extra.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::internal(e.to_string()))
    }
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for one value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the experiment described by a plan.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ExperimentTable> {
    let plan = plan.clone().resolved()?;
    match plan.kind {
        ExperimentKind::EmdVsRed => run_emd_vs_red(&plan),
        ExperimentKind::EmdVsNoise => run_emd_vs_noise(&plan),
        ExperimentKind::ProbEstimate => theory::run_prob_estimate(&plan),
        ExperimentKind::CoeffVariance => coeff_variance_check(&plan),
        ExperimentKind::ComponentTest => component_test(&plan),
    }
}
