//! Alpha-stable sampling via the Chambers-Mallows-Stuck construction.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `S(alpha, beta, gamma, delta)` in the common "1" parameterisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    /// Stability index in `(0, 2]`.
    pub alpha: f64,
    /// Skewness in `[-1, 1]`.
    pub beta: f64,
    /// Dispersion (scale), positive.
    pub dispersion: f64,
    /// Location.
    pub location: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct AlphaStable {
    params: StableParams,
}

impl AlphaStable {
    pub fn new(params: StableParams) -> Result<Self> {
        let StableParams {
            alpha,
            beta,
            dispersion,
            ..
        } = params;
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::param(format!("stability index alpha must lie in (0, 2], got {alpha}")));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::param(format!("skewness beta must lie in [-1, 1], got {beta}")));
        }
        if !(dispersion > 0.0) {
            return Err(Error::param(format!("dispersion must be positive, got {dispersion}")));
        }
        Ok(AlphaStable { params })
    }
}

impl Distribution<f64> for AlphaStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let StableParams {
            alpha,
            beta,
            dispersion: gamma,
            location: delta,
        } = self.params;
        // U uniform on the open interval (-pi/2, pi/2), W standard exponential
        let u = loop {
            let u = PI * (rng.random::<f64>() - 0.5);
            if u.abs() < FRAC_PI_2 {
                break u;
            }
        };
        let w: f64 = Exp1.sample(rng);
        if (alpha - 1.0).abs() < 1e-12 {
            let x = ((FRAC_PI_2 + beta * u) * u.tan()
                - beta * ((FRAC_PI_2 * w * u.cos()) / (FRAC_PI_2 + beta * u)).ln())
                / FRAC_PI_2;
            gamma * x + 2.0 / PI * beta * gamma * gamma.ln() + delta
        } else {
            let zeta = -beta * (PI * alpha / 2.0).tan();
            let xi = (-zeta).atan() / alpha;
            let x = (1.0 + zeta * zeta).powf(1.0 / (2.0 * alpha))
                * (alpha * (u + xi)).sin()
                / u.cos().powf(1.0 / alpha)
                * ((u - alpha * (u + xi)).cos() / w).powf((1.0 - alpha) / alpha);
            gamma * x + delta
        }
    }
}
