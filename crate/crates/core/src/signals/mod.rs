//! Synthetic benchmark signals, noise processes and analytic
//! instantaneous-frequency oracles.
//!
//! All generators sample the unit domain `[0, 1)^n` at `fs` points per axis,
//! so sample `k` sits at `x = k / fs` and frequencies are measured in Hz.

mod noise;
mod stable;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use noise::{add_noise, noise_only_2d, NoiseKind, NoiseRecord, NoiseSpec};
pub use stable::{AlphaStable, StableParams};

/// Where a signal came from, enough to regenerate it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub noise: Vec<NoiseRecord>,
}

/// A uniformly sampled 1D or 2D signal on the unit domain.
///
/// Samples are stored row-major; in 2D the index is `i1 * len + i2` for the
/// point `(x1, x2) = (i1, i2) / fs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub dim: usize,
    pub len: usize,
    pub samples: Vec<Complex64>,
    /// Real-valued data (imaginary parts are identically zero).
    pub real: bool,
    pub sample_rate: f64,
    pub provenance: Provenance,
}

impl Signal {
    pub fn new_1d(samples: Vec<Complex64>, real: bool, provenance: Provenance) -> Result<Self> {
        let len = samples.len();
        let sig = Signal {
            dim: 1,
            len,
            samples,
            real,
            sample_rate: len as f64,
            provenance,
        };
        sig.check()?;
        Ok(sig)
    }

    pub fn new_2d(
        len: usize,
        samples: Vec<Complex64>,
        real: bool,
        provenance: Provenance,
    ) -> Result<Self> {
        if samples.len() != len * len {
            return Err(Error::input(format!(
                "2D signal of side {len} needs {} samples, got {}",
                len * len,
                samples.len()
            )));
        }
        let sig = Signal {
            dim: 2,
            len,
            samples,
            real,
            sample_rate: len as f64,
            provenance,
        };
        sig.check()?;
        Ok(sig)
    }

    pub fn check(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::input("empty signal"));
        }
        if let Some(i) = self
            .samples
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::input(format!("non-finite sample at index {i}")));
        }
        if self.real && self.samples.iter().any(|z| z.im != 0.0) {
            return Err(Error::input("real signal carries imaginary parts"));
        }
        Ok(())
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.len; self.dim]
    }

    /// Sample position of index `k` along one axis.
    pub fn position(&self, k: usize) -> f64 {
        k as f64 / self.sample_rate
    }

    pub fn linf(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Scales the samples so that the largest modulus is one.
    pub fn normalize_linf(&mut self) {
        let m = self.linf();
        if m > 0.0 {
            for z in &mut self.samples {
                *z /= m;
            }
        }
    }

    /// Multiplies a 1D signal by `exp(2 pi i k x)`.
    pub fn modulate(&self, k: f64) -> Signal {
        let mut out = self.clone();
        for (i, z) in out.samples.iter_mut().enumerate() {
            let x = i as f64 / self.sample_rate;
            *z *= Complex64::from_polar(1.0, 2.0 * PI * k * x);
        }
        out.real = false;
        out
    }

    /// Circular shift of a 1D signal by `shift` samples.
    pub fn circular_shift(&self, shift: usize) -> Signal {
        let mut out = self.clone();
        out.samples.rotate_right(shift % self.samples.len());
        out
    }
}

fn provenance(generator: &str, params: &[(&str, f64)]) -> Provenance {
    Provenance {
        generator: generator.to_string(),
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), serde_json::json!(v)))
            .collect(),
        noise: Vec::new(),
    }
}

/// Identifies a generator with an analytic instantaneous frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "id")]
pub enum OracleId {
    /// `exp(60 pi i (x + 0.05 cos 2 pi x))`.
    Chirp,
    /// The separable warped plane wave in 2D.
    Warped2d,
    /// `exp(2 pi i freq x)`.
    PlaneWave { freq: f64 },
    /// Component `k` (1..=5) of the 1D benchmark.
    Benchmark { component: u8 },
    /// No component: pure noise.
    NoiseOnly,
}

impl OracleId {
    /// Parses `chirp`, `warped2d`, `plane:<hz>`, `benchmark:<k>` or `noise`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::param(format!("unknown oracle id `{text}`"));
        match text {
            "chirp" => Ok(OracleId::Chirp),
            "warped2d" => Ok(OracleId::Warped2d),
            "noise" => Ok(OracleId::NoiseOnly),
            other => {
                let (head, tail) = other.split_once(':').ok_or_else(bad)?;
                match head {
                    "plane" => Ok(OracleId::PlaneWave {
                        freq: tail.parse().map_err(|_| bad())?,
                    }),
                    "benchmark" => Ok(OracleId::Benchmark {
                        component: tail.parse().map_err(|_| bad())?,
                    }),
                    _ => Err(bad()),
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            OracleId::Warped2d => 2,
            _ => 1,
        }
    }
}

/// Instantaneous frequency of the chirp, `30 (1 - 0.1 pi sin 2 pi x)`.
pub fn chirp_if(x: f64) -> f64 {
    30.0 * (1.0 - 0.1 * PI * (2.0 * PI * x).sin())
}

/// One component of the warped plane wave's local wave vector.
pub fn warped_wavevector_component(x: f64) -> f64 {
    60.0 * (1.0 + 0.1 * PI * (2.0 * PI * x).cos())
}

/// Analytic instantaneous frequency (1D) or local wave vector (2D).
///
/// `x` holds one coordinate per dimension of the generator.
pub fn oracle_if(id: OracleId, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != id.dim() {
        return Err(Error::param(format!(
            "oracle {id:?} expects {} coordinates, got {}",
            id.dim(),
            x.len()
        )));
    }
    match id {
        OracleId::Chirp => Ok(vec![chirp_if(x[0])]),
        OracleId::Warped2d => Ok(vec![
            warped_wavevector_component(x[0]),
            warped_wavevector_component(x[1]),
        ]),
        OracleId::PlaneWave { freq } => Ok(vec![freq]),
        OracleId::Benchmark { component } => {
            let x = x[0];
            let f = match component {
                1 => 350.0,
                2 => 150.0,
                3 => 650.0 + 50.0 * (20.0 * PI * x).cos(),
                4 => 50.0 * 100f64.powf(1.25 * x),
                5 => 50.0 / (2.0 * PI),
                _ => {
                    return Err(Error::param(format!(
                        "benchmark has components 1..=5, got {component}"
                    )))
                }
            };
            Ok(vec![f])
        }
        OracleId::NoiseOnly => Err(Error::param("noise-only input has no instantaneous frequency")),
    }
}

/// Phase (in cycles) of generators with a closed-form phase; used to check
/// the oracles against finite differences.
pub fn oracle_phase(id: OracleId, x: f64) -> Result<f64> {
    match id {
        OracleId::Chirp => Ok(30.0 * (x + 0.05 * (2.0 * PI * x).cos())),
        OracleId::Warped2d => Ok(60.0 * (x + 0.05 * (2.0 * PI * x).sin())),
        OracleId::PlaneWave { freq } => Ok(freq * x),
        OracleId::Benchmark { component } => {
            let rad = match component {
                1 => 700.0 * PI * x,
                2 => 300.0 * PI * x,
                3 => 1300.0 * PI * x + 5.0 * (20.0 * PI * x).sin(),
                4 => 80.0 * PI * 100f64.powf(1.25 * x) / 100f64.ln(),
                5 => 50.0 * (x - 0.2),
                _ => return Err(Error::param("benchmark has components 1..=5")),
            };
            Ok(rad / (2.0 * PI))
        }
        OracleId::NoiseOnly => Err(Error::param("noise-only input has no phase")),
    }
}

/// Half-open indicator `[start, end)`.
fn indicator(x: f64, start: f64, end: f64) -> f64 {
    if x >= start && x < end {
        1.0
    } else {
        0.0
    }
}

/// The five benchmark components at `x`, each multiplied by its indicator,
/// before normalisation.
pub fn benchmark_components(x: f64) -> [f64; 5] {
    let f1 = 0.6 * (700.0 * PI * x).cos();
    let f2 = 0.8 * (300.0 * PI * x).cos();
    let f3 = 0.7 * (1300.0 * PI * x + 5.0 * (20.0 * PI * x).sin()).cos();
    let f4 = (80.0 * PI * 100f64.powf(1.25 * x) / 100f64.ln()).sin();
    let f5 = 3.0 * (-50.0 * (x - 0.2).powi(2)).exp() * (50.0 * (x - 0.2)).cos();
    [
        indicator(x, 0.0, 0.6) * f1,
        indicator(x, 0.0, 0.6) * f2,
        indicator(x, 0.4, 0.8) * f3,
        indicator(x, 0.6, 1.0) * f4,
        f5,
    ]
}

/// The real 1D benchmark, L-infinity normalised.
pub fn gen_benchmark_1d(fs: usize) -> Result<Signal> {
    if fs < 4096 {
        return Err(Error::param(format!(
            "benchmark needs a sampling rate of at least 4096 Hz, got {fs}"
        )));
    }
    let samples = (0..fs)
        .map(|k| {
            let x = k as f64 / fs as f64;
            Complex64::new(benchmark_components(x).iter().sum(), 0.0)
        })
        .collect();
    let mut sig = Signal::new_1d(samples, true, provenance("benchmark", &[("fs", fs as f64)]))?;
    sig.normalize_linf();
    Ok(sig)
}

/// `exp(60 pi i (x + 0.05 cos 2 pi x))` sampled at `fs`.
pub fn gen_single_chirp(fs: usize) -> Result<Signal> {
    if fs == 0 {
        return Err(Error::param("sampling rate must be positive"));
    }
    let samples = (0..fs)
        .map(|k| {
            let x = k as f64 / fs as f64;
            Complex64::from_polar(1.0, 2.0 * PI * oracle_phase(OracleId::Chirp, x).unwrap())
        })
        .collect();
    Signal::new_1d(samples, false, provenance("chirp", &[("fs", fs as f64)]))
}

/// `exp(2 pi i freq x)` sampled at `fs`.
pub fn gen_plane_wave(freq: f64, fs: usize) -> Result<Signal> {
    if fs == 0 {
        return Err(Error::param("sampling rate must be positive"));
    }
    let samples = (0..fs)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * freq * k as f64 / fs as f64))
        .collect();
    Signal::new_1d(
        samples,
        false,
        provenance("plane", &[("fs", fs as f64), ("freq", freq)]),
    )
}

/// The separable 2D warped plane wave on an `fs x fs` grid.
pub fn gen_2d_warped(fs: usize) -> Result<Signal> {
    if fs == 0 {
        return Err(Error::param("sampling rate must be positive"));
    }
    let axis: Vec<Complex64> = (0..fs)
        .map(|k| {
            let x = k as f64 / fs as f64;
            Complex64::from_polar(1.0, 2.0 * PI * oracle_phase(OracleId::Warped2d, x).unwrap())
        })
        .collect();
    let mut samples = Vec::with_capacity(fs * fs);
    for g1 in &axis {
        for g2 in &axis {
            samples.push(g1 * g2);
        }
    }
    Signal::new_2d(fs, samples, false, provenance("warped2d", &[("fs", fs as f64)]))
}

/// Generator lookup by name, as used by the CLI.
pub fn synth(generator: &str, fs: usize) -> Result<Signal> {
    match generator {
        "benchmark" => gen_benchmark_1d(fs),
        "chirp" => gen_single_chirp(fs),
        "warped2d" => gen_2d_warped(fs),
        other => {
            if let Some(freq) = other.strip_prefix("plane:") {
                let freq = freq
                    .parse()
                    .map_err(|_| Error::param(format!("bad plane-wave frequency `{freq}`")))?;
                gen_plane_wave(freq, fs)
            } else {
                Err(Error::param(format!("unknown generator `{other}`")))
            }
        }
    }
}

fn variance(values: &[Complex64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<Complex64>() / n;
    values.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / n
}

/// `10 log10(Var f / Var e)` with sample variances; `+inf` when `Var e = 0`.
pub fn snr_db(signal: &[Complex64], noise: &[Complex64]) -> Result<f64> {
    if signal.len() != noise.len() {
        return Err(Error::input(format!(
            "signal and noise lengths differ: {} vs {}",
            signal.len(),
            noise.len()
        )));
    }
    if signal.is_empty() {
        return Err(Error::input("empty signal"));
    }
    let ve = variance(noise);
    if ve == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (variance(signal) / ve).log10())
}
