use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::stable::{AlphaStable, StableParams};
use super::{snr_db, Provenance, Signal};
use crate::error::{Error, Result};

/// Additive noise process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum NoiseKind {
    /// i.i.d. `N(0, sigma2)` per sample. Real noise goes to the real part;
    /// with `circular` the variance is split evenly between real and
    /// imaginary parts instead.
    WhiteGaussian {
        sigma2: f64,
        #[serde(default)]
        circular: bool,
    },
    /// Alpha-stable noise rescaled so that its largest modulus is
    /// `target_linf`.
    AlphaStable {
        alpha: f64,
        #[serde(default)]
        beta: f64,
        dispersion: f64,
        location: f64,
        target_linf: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn gaussian(sigma2: f64, seed: u64) -> Self {
        NoiseSpec {
            kind: NoiseKind::WhiteGaussian {
                sigma2,
                circular: false,
            },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::WhiteGaussian { sigma2, .. } => {
                if !(sigma2 >= 0.0) || !sigma2.is_finite() {
                    return Err(Error::param(format!("noise variance must be >= 0, got {sigma2}")));
                }
            }
            NoiseKind::AlphaStable {
                alpha,
                beta,
                dispersion,
                location,
                target_linf,
            } => {
                AlphaStable::new(StableParams {
                    alpha,
                    beta,
                    dispersion,
                    location,
                })?;
                if !(target_linf > 0.0) {
                    return Err(Error::param(format!(
                        "target L-infinity norm must be positive, got {target_linf}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// What was added to a signal; kept in its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub spec: NoiseSpec,
    /// SNR of the clean input against the drawn noise; `inf` for a zero
    /// draw and `-inf` for a zero input.
    #[serde(with = "nonfinite")]
    pub snr_db: f64,
    /// Factor the raw alpha-stable draw was divided by.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale_divisor: Option<f64>,
}

/// JSON has no infinities: non-finite values are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("expected a number, got `{other}`"))),
            },
        }
    }
}

/// Draws the noise field for `count` samples.
pub fn draw_noise(spec: &NoiseSpec, count: usize) -> Result<(Vec<Complex64>, Option<f64>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        NoiseKind::WhiteGaussian { sigma2, circular } => {
            let sd = sigma2.sqrt();
            let noise = if circular {
                let sd = sd / std::f64::consts::SQRT_2;
                (0..count)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(sd * re, sd * im)
                    })
                    .collect()
            } else {
                (0..count)
                    .map(|_| {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        Complex64::new(sd * re, 0.0)
                    })
                    .collect()
            };
            Ok((noise, None))
        }
        NoiseKind::AlphaStable {
            alpha,
            beta,
            dispersion,
            location,
            target_linf,
        } => {
            let dist = AlphaStable::new(StableParams {
                alpha,
                beta,
                dispersion,
                location,
            })?;
            let raw: Vec<f64> = (0..count).map(|_| dist.sample(&mut rng)).collect();
            let peak = raw.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if !(peak > 0.0) || !peak.is_finite() {
                return Err(Error::internal("alpha-stable draw has no finite peak"));
            }
            let divisor = peak / target_linf;
            Ok((
                raw.iter().map(|v| Complex64::new(v / divisor, 0.0)).collect(),
                Some(divisor),
            ))
        }
    }
}

/// Returns `signal + e` for a freshly drawn, seeded noise field `e`.
pub fn add_noise(signal: &Signal, spec: &NoiseSpec) -> Result<Signal> {
    let (noise, divisor) = draw_noise(spec, signal.samples.len())?;
    let snr = snr_db(&signal.samples, &noise)?;
    let mut out = signal.clone();
    for (z, e) in out.samples.iter_mut().zip(&noise) {
        *z += e;
    }
    out.real = signal.real && noise.iter().all(|e| e.im == 0.0);
    out.provenance.noise.push(NoiseRecord {
        spec: *spec,
        snr_db: snr,
        rescale_divisor: divisor,
    });
    Ok(out)
}

/// A zero 2D field with noise added; the "noise only" input.
///
/// The field is flagged complex so it takes the same path through the
/// transform as a complex image with additive noise.
pub fn noise_only_2d(len: usize, spec: &NoiseSpec) -> Result<Signal> {
    let zero = Signal::new_2d(
        len,
        vec![Complex64::new(0.0, 0.0); len * len],
        false,
        Provenance {
            generator: "zeros".into(),
            ..Default::default()
        },
    )?;
    add_noise(&zero, spec)
}
