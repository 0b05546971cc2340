//! Frame specifications and the discrete lattice of frequency centers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::mother::{MotherWavePacket, PacketKind};
use crate::error::{Error, Result};

/// Default radial spacing between adjacent centers, in units of the
/// support radius of the lower center. Keeps at least 50% overlap.
pub const DEFAULT_SPACING: f64 = 1.25;

/// Parameters of one wave packet frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSpec {
    /// Spatial dimension, 1 or 2.
    pub dim: usize,
    /// Geometric scaling parameter.
    pub s: f64,
    /// Number of frames in the redundant family.
    pub red: usize,
    /// Which member of the family this spec describes.
    pub frame_index: usize,
    /// Analysed band `[lo, hi]` in Hz (radial in 2D).
    pub band: Option<(f64, f64)>,
    pub mother: MotherWavePacket,
    /// Samples per axis.
    pub len: usize,
    /// Samples per unit length; equal to `len` on the unit domain.
    pub sample_rate: f64,
    /// Radial center spacing in units of the local support radius.
    pub spacing: f64,
    /// Permits `s = 1` (wavelet-like comparison runs).
    pub comparison_mode: bool,
}

impl FrameSpec {
    /// A single-frame 1D spec on `len` samples of the unit interval.
    pub fn new_1d(len: usize, s: f64) -> Self {
        FrameSpec {
            dim: 1,
            s,
            red: 1,
            frame_index: 0,
            band: None,
            mother: MotherWavePacket::bump(),
            len,
            sample_rate: len as f64,
            spacing: DEFAULT_SPACING,
            comparison_mode: false,
        }
    }

    /// A single-frame 2D spec on a `len x len` grid.
    pub fn new_2d(len: usize, s: f64) -> Self {
        FrameSpec {
            dim: 2,
            ..Self::new_1d(len, s)
        }
    }

    pub fn with_band(mut self, lo: f64, hi: f64) -> Self {
        self.band = Some((lo, hi));
        self
    }

    pub fn with_red(mut self, red: usize) -> Self {
        self.red = red;
        self
    }

    pub fn with_frame_index(mut self, index: usize) -> Self {
        self.frame_index = index;
        self
    }

    pub fn with_mother(mut self, mother: MotherWavePacket) -> Self {
        self.mother = mother;
        self
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    /// Band actually analysed: the explicit band or `[1 Hz, Nyquist]`.
    pub fn effective_band(&self) -> (f64, f64) {
        self.band.unwrap_or((1.0, self.nyquist()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::param(format!("dimension must be 1 or 2, got {}", self.dim)));
        }
        let s_ok = if self.comparison_mode {
            self.s > 0.5 && self.s <= 1.0
        } else {
            self.s > 0.5 && self.s < 1.0
        };
        if !s_ok {
            return Err(Error::param(format!(
                "geometric scaling s must satisfy 1/2 < s < 1, got {}",
                self.s
            )));
        }
        if self.red == 0 {
            return Err(Error::param("red must be at least 1"));
        }
        if self.frame_index >= self.red {
            return Err(Error::param(format!(
                "frame index {} outside [0, {})",
                self.frame_index, self.red
            )));
        }
        if self.len < 2 || !self.len.is_power_of_two() {
            return Err(Error::param(format!(
                "samples per axis must be a power of two, got {}",
                self.len
            )));
        }
        if (self.sample_rate - self.len as f64).abs() > 1e-9 {
            return Err(Error::param(format!(
                "sample rate {} must equal samples per axis {} on the unit domain",
                self.sample_rate, self.len
            )));
        }
        if !(self.spacing > 0.0 && self.spacing <= 1.5) {
            return Err(Error::param(format!(
                "center spacing must lie in (0, 1.5] to keep 50% overlap, got {}",
                self.spacing
            )));
        }
        if let Some((lo, hi)) = self.band {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::param(format!("band [{lo}, {hi}] must satisfy 0 < lo < hi")));
            }
            if hi > self.nyquist() {
                return Err(Error::param(format!(
                    "band upper edge {hi} exceeds Nyquist {}",
                    self.nyquist()
                )));
            }
        }
        if self.mother.kind() == PacketKind::TimeSpline {
            let m = self.mother.order().unwrap_or(0) as f64;
            let need = (2.0 / (1.0 - self.s)).ceil() + 4.0;
            if self.s < 1.0 && m < need {
                return Err(Error::param(format!(
                    "time-compact packet with s = {} needs decay order m >= {need}, got {m}",
                    self.s
                )));
            }
        }
        Ok(())
    }

    /// Frequency support radius `|a|^s d` of the packet centered at `|a|`.
    pub fn support_radius(&self, a: f64) -> f64 {
        a.abs().powf(self.s) * self.mother.radius()
    }

    fn step(&self, a: f64) -> f64 {
        self.spacing * self.support_radius(a)
    }
}

/// One frequency center of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Center {
    /// Position in Hz; the second component is zero in 1D.
    pub pos: [f64; 2],
    /// `|a|`.
    pub modulus: f64,
    /// Support radius `|a|^s d`.
    pub radius: f64,
    /// Angular spacing of the ring this center belongs to (2D only).
    pub angular_width: Option<f64>,
}

/// The set of centers of one frame, sorted by `|a|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameGrid {
    pub spec: FrameSpec,
    pub centers: Vec<Center>,
}

impl FrameGrid {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// True when `xi` lies inside the support of at least one center.
    pub fn covers(&self, xi: [f64; 2]) -> bool {
        self.centers.iter().any(|c| {
            let d0 = xi[0] - c.pos[0];
            let d1 = xi[1] - c.pos[1];
            (d0 * d0 + d1 * d1).sqrt() <= c.radius
        })
    }
}

/// Base radial lattice `a_{k+1} = a_k + spacing * |a_k|^s d` from one step
/// below `lo` up to the first point at or above `hi`.
fn radial_lattice(spec: &FrameSpec, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    // predecessor of lo: a + step(a) = lo, with the left side increasing in a
    let (mut left, mut right) = (0.0, lo);
    for _ in 0..200 {
        let mid = 0.5 * (left + right);
        if mid + spec.step(mid) < lo {
            left = mid;
        } else {
            right = mid;
        }
    }
    if left > 0.0 && left < lo {
        pts.push(left);
    }
    let mut a = lo;
    pts.push(a);
    while a < hi {
        a += spec.step(a);
        pts.push(a);
    }
    pts
}

/// Radii of frame `j`: each base interval is split at fraction `j / red`.
fn frame_radii(spec: &FrameSpec) -> Vec<f64> {
    let (lo, hi) = spec.effective_band();
    let base = radial_lattice(spec, lo, hi);
    let t = spec.frame_index as f64 / spec.red as f64;
    let mut radii = Vec::with_capacity(base.len());
    if t == 0.0 {
        radii.extend(base.iter().copied());
    } else {
        for w in base.windows(2) {
            radii.push(w[0] + t * (w[1] - w[0]));
        }
    }
    radii
        .into_iter()
        .filter(|&a| {
            let r = spec.support_radius(a);
            a > 0.0 && a + r >= lo && a - r <= hi
        })
        .collect()
}

/// Number of uniformly spaced directions on the ring of radius `rho`.
///
/// Arc spacing matches the radial spacing so neighbouring supports on a
/// ring overlap as much as neighbouring rings do; never fewer than 8.
pub fn directions_on_ring(spec: &FrameSpec, rho: f64) -> usize {
    let arc = spec.step(rho);
    let needed = (2.0 * PI * rho / arc).ceil() as usize;
    needed.max(8)
}

/// Builds the centers of frame `spec.frame_index` out of `spec.red`.
pub fn build_frame_grid(spec: &FrameSpec) -> Result<FrameGrid> {
    spec.validate()?;
    let radii = frame_radii(spec);
    let t = spec.frame_index as f64 / spec.red as f64;
    let mut centers = Vec::new();
    for &rho in &radii {
        let radius = spec.support_radius(rho);
        if spec.dim == 1 {
            centers.push(Center {
                pos: [rho, 0.0],
                modulus: rho,
                radius,
                angular_width: None,
            });
        } else {
            let count = directions_on_ring(spec, rho);
            let width = 2.0 * PI / count as f64;
            for k in 0..count {
                let theta = width * (k as f64 + t);
                centers.push(Center {
                    pos: [rho * theta.cos(), rho * theta.sin()],
                    modulus: rho,
                    radius,
                    angular_width: Some(width),
                });
            }
        }
    }
    if centers.is_empty() {
        return Err(Error::param("frame grid has no centers for the requested band"));
    }
    Ok(FrameGrid {
        spec: spec.clone(),
        centers,
    })
}
