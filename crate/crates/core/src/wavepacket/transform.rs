//! FFT evaluation of `W(a, b) = <f, w_ab>` and its spatial gradient.
//!
//! With `f_hat(xi) = FFT(f)(xi) / len^n` on the integer frequency lattice,
//!
//! ```text
//! W(a, b)   = sum_xi f_hat(xi) g_a(xi) exp(2 pi i xi.b)
//! G_k(a, b) = sum_xi 2 pi i xi_k f_hat(xi) g_a(xi) exp(2 pi i xi.b)
//! g_a(xi)   = |a|^(-n s / 2) w_hat(|xi - a| / |a|^s)
//! ```
//!
//! which is the Fourier-side form of the packet family
//! `w_ab(x) = |a|^(n s / 2) w(|a|^s (x - b)) exp(2 pi i (x - b).a)`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::frame::{Center, FrameGrid};
use crate::error::{Error, Result};
use crate::signals::Signal;

/// Spatial sample positions at which coefficients are evaluated.
///
/// In 1D every sample is used. In 2D all `x1` positions are used for each
/// selected `x2` row; the flat index is `row_slot * len + i1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BLattice {
    pub dim: usize,
    pub len: usize,
    /// Selected `x2` indices (2D only).
    pub rows: Vec<usize>,
}

impl BLattice {
    pub fn line(len: usize) -> Self {
        BLattice {
            dim: 1,
            len,
            rows: Vec::new(),
        }
    }

    pub fn rows(len: usize, rows: Vec<usize>) -> Self {
        BLattice { dim: 2, len, rows }
    }

    /// Number of lattice points.
    pub fn size(&self) -> usize {
        if self.dim == 1 {
            self.len
        } else {
            self.len * self.rows.len()
        }
    }

    /// Shape of the b-axes: `[len]` or `[len (x1), rows (x2)]`.
    pub fn shape(&self) -> Vec<usize> {
        if self.dim == 1 {
            vec![self.len]
        } else {
            vec![self.len, self.rows.len()]
        }
    }
}

/// Fourier coefficients `f_hat` of a signal, after analytic conversion of
/// real input.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub dim: usize,
    pub len: usize,
    /// Row-major, unshifted FFT order, divided by `len^dim`.
    pub coeffs: Vec<Complex64>,
}

/// Signed frequency of FFT bin `k`.
#[cfg(test)]
fn signed(k: usize, len: usize) -> i64 {
    if k < len / 2 {
        k as i64
    } else {
        k as i64 - len as i64
    }
}

fn bin(xi: i64, len: usize) -> usize {
    xi.rem_euclid(len as i64) as usize
}

/// Analytic weighting for a 1D bin: negative frequencies removed, positive
/// frequencies doubled, DC and Nyquist kept.
fn analytic_weight_1d(k: usize, len: usize) -> f64 {
    if k == 0 || (len.is_multiple_of(2) && k == len / 2) {
        1.0
    } else if k < len / 2 {
        2.0
    } else {
        0.0
    }
}

impl Spectrum {
    /// FFT of the signal. Real signals are made analytic (half-plane
    /// `xi_1 > 0` in 2D) before anything else sees them.
    pub fn of(signal: &Signal) -> Result<Self> {
        signal.check()?;
        if !signal.len.is_power_of_two() {
            return Err(Error::input(format!(
                "samples per axis must be a power of two, got {}",
                signal.len
            )));
        }
        let len = signal.len;
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(len);
        let mut data = signal.samples.clone();
        match signal.dim {
            1 => {
                fft.process(&mut data);
                let scale = 1.0 / len as f64;
                for (k, z) in data.iter_mut().enumerate() {
                    let w = if signal.real { analytic_weight_1d(k, len) } else { 1.0 };
                    *z *= scale * w;
                }
            }
            2 => {
                fft2_in_place(&mut data, len, &fft);
                let scale = 1.0 / (len * len) as f64;
                for k1 in 0..len {
                    for k2 in 0..len {
                        let w = if signal.real {
                            if k1 == 0 {
                                analytic_weight_1d(k2, len)
                            } else {
                                analytic_weight_1d(k1, len)
                            }
                        } else {
                            1.0
                        };
                        data[k1 * len + k2] *= scale * w;
                    }
                }
            }
            d => return Err(Error::input(format!("unsupported dimension {d}"))),
        }
        Ok(Spectrum {
            dim: signal.dim,
            len,
            coeffs: data,
        })
    }
}

fn fft2_in_place(data: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    for row in data.chunks_mut(len) {
        fft.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); len];
    for j in 0..len {
        for i in 0..len {
            col[i] = data[i * len + j];
        }
        fft.process(&mut col);
        for i in 0..len {
            data[i * len + j] = col[i];
        }
    }
}

/// Coefficients of one frame over its lattice.
#[derive(Debug, Clone)]
pub struct WpCoefficients {
    pub grid: FrameGrid,
    /// `W`, indexed `(center, b)`.
    pub w: Array2<Complex64>,
    /// One gradient component per spatial axis, same shape as `w`.
    pub grad: Vec<Array2<Complex64>>,
    pub lattice: BLattice,
}

impl WpCoefficients {
    pub fn centers(&self) -> &[Center] {
        &self.grid.centers
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim
    }
}

/// Packet window `g_a(xi)` for a center.
#[inline]
fn window(grid: &FrameGrid, c: &Center, xi: [f64; 2]) -> f64 {
    let spec = &grid.spec;
    let d0 = xi[0] - c.pos[0];
    let d1 = xi[1] - c.pos[1];
    let scale = c.modulus.powf(spec.s);
    let u = (d0 * d0 + d1 * d1).sqrt() / scale;
    let n = spec.dim as f64;
    c.modulus.powf(-n * spec.s / 2.0) * spec.mother.profile(u, spec.dim)
}

/// Discrete packet energy `sum_xi |g_a(xi)|^2` over the FFT lattice, i.e.
/// `||w_ab||^2` as seen by the sampled transform (1 unless the support is
/// clipped at Nyquist).
pub fn window_energy(grid: &FrameGrid, center: usize) -> f64 {
    let c = &grid.centers[center];
    let len = grid.spec.len;
    let reach = grid.spec.mother.cutoff() * c.modulus.powf(grid.spec.s);
    let (lo1, hi1) = support_range(c.pos[0], reach, len);
    let mut acc = 0.0;
    for xi1 in lo1..=hi1 {
        if grid.spec.dim == 1 {
            acc += window(grid, c, [xi1 as f64, 0.0]).powi(2);
        } else {
            let (lo2, hi2) = support_range(c.pos[1], reach, len);
            for xi2 in lo2..=hi2 {
                acc += window(grid, c, [xi1 as f64, xi2 as f64]).powi(2);
            }
        }
    }
    acc
}

/// Forward transform of a signal on every sample (all rows in 2D).
pub fn forward_transform(signal: &Signal, grid: &FrameGrid) -> Result<WpCoefficients> {
    let rows: Vec<usize> = (0..signal.len).collect();
    let spectrum = Spectrum::of(signal)?;
    transform_spectrum(&spectrum, grid, &rows)
}

/// Forward transform restricted to the given `x2` rows (ignored in 1D).
pub fn forward_transform_rows(
    signal: &Signal,
    grid: &FrameGrid,
    rows: &[usize],
) -> Result<WpCoefficients> {
    let spectrum = Spectrum::of(signal)?;
    transform_spectrum(&spectrum, grid, rows)
}

/// Forward transform from a precomputed spectrum, so redundant frames can
/// share one FFT of the input.
pub fn transform_spectrum(
    spectrum: &Spectrum,
    grid: &FrameGrid,
    rows: &[usize],
) -> Result<WpCoefficients> {
    if grid.is_empty() {
        return Err(Error::input("frame grid has no centers"));
    }
    if spectrum.dim != grid.spec.dim || spectrum.len != grid.spec.len {
        return Err(Error::input(format!(
            "signal ({}D, {} per axis) does not match frame ({}D, {} per axis)",
            spectrum.dim, spectrum.len, grid.spec.dim, grid.spec.len
        )));
    }
    let len = spectrum.len;
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(len);
    match spectrum.dim {
        1 => Ok(transform_1d(spectrum, grid, &ifft)),
        _ => {
            if let Some(&r) = rows.iter().find(|&&r| r >= len) {
                return Err(Error::param(format!("row {r} outside [0, {len})")));
            }
            Ok(transform_2d(spectrum, grid, rows, &ifft))
        }
    }
}

/// Inclusive signed-frequency range of a window around `center`.
fn support_range(center: f64, reach: f64, len: usize) -> (i64, i64) {
    let lo = (center - reach).ceil() as i64;
    let hi = (center + reach).floor() as i64;
    let half = (len / 2) as i64;
    (lo.max(-half), hi.min(half - 1))
}

fn transform_1d(spectrum: &Spectrum, grid: &FrameGrid, ifft: &Arc<dyn Fft<f64>>) -> WpCoefficients {
    let len = spectrum.len;
    let cutoff = grid.spec.mother.cutoff();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let rows: Vec<(Vec<Complex64>, Vec<Complex64>)> = grid
        .centers
        .par_iter()
        .map(|c| {
            let mut w = vec![Complex64::new(0.0, 0.0); len];
            let mut g = vec![Complex64::new(0.0, 0.0); len];
            let reach = cutoff * c.modulus.powf(grid.spec.s);
            let (lo, hi) = support_range(c.pos[0], reach, len);
            for xi in lo..=hi {
                let k = bin(xi, len);
                let val = spectrum.coeffs[k] * window(grid, c, [xi as f64, 0.0]);
                w[k] = val;
                g[k] = val * two_pi_i * xi as f64;
            }
            ifft.process(&mut w);
            ifft.process(&mut g);
            (w, g)
        })
        .collect();
    let n = grid.centers.len();
    let mut w = Array2::zeros((n, len));
    let mut g = Array2::zeros((n, len));
    for (i, (wr, gr)) in rows.into_iter().enumerate() {
        w.row_mut(i).assign(&ndarray::ArrayView1::from(&wr));
        g.row_mut(i).assign(&ndarray::ArrayView1::from(&gr));
    }
    WpCoefficients {
        grid: grid.clone(),
        w,
        grad: vec![g],
        lattice: BLattice::line(len),
    }
}

fn transform_2d(
    spectrum: &Spectrum,
    grid: &FrameGrid,
    rows: &[usize],
    ifft: &Arc<dyn Fft<f64>>,
) -> WpCoefficients {
    let len = spectrum.len;
    let nrows = rows.len();
    let cutoff = grid.spec.mother.cutoff();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let twiddle: Vec<Complex64> = (0..len)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / len as f64))
        .collect();
    let per_center: Vec<[Vec<Complex64>; 3]> = grid
        .centers
        .par_iter()
        .map(|c| {
            let reach = cutoff * c.modulus.powf(grid.spec.s);
            let (lo1, hi1) = support_range(c.pos[0], reach, len);
            // spectra along xi_1 for every selected row, already summed over xi_2
            let mut w_rows = vec![Complex64::new(0.0, 0.0); nrows * len];
            let mut g1_rows = vec![Complex64::new(0.0, 0.0); nrows * len];
            let mut g2_rows = vec![Complex64::new(0.0, 0.0); nrows * len];
            for xi1 in lo1..=hi1 {
                let d1 = xi1 as f64 - c.pos[0];
                let half = (reach * reach - d1 * d1).max(0.0).sqrt();
                let (lo2, hi2) = support_range(c.pos[1], half, len);
                if lo2 > hi2 {
                    continue;
                }
                let k1 = bin(xi1, len);
                let line: Vec<(i64, Complex64)> = (lo2..=hi2)
                    .filter_map(|xi2| {
                        let val = spectrum.coeffs[k1 * len + bin(xi2, len)]
                            * window(grid, c, [xi1 as f64, xi2 as f64]);
                        (val != Complex64::new(0.0, 0.0)).then_some((xi2, val))
                    })
                    .collect();
                if line.is_empty() {
                    continue;
                }
                for (slot, &row) in rows.iter().enumerate() {
                    let mut sw = Complex64::new(0.0, 0.0);
                    let mut s2 = Complex64::new(0.0, 0.0);
                    for &(xi2, val) in &line {
                        let t = val * twiddle[(bin(xi2, len) * row) % len];
                        sw += t;
                        s2 += t * xi2 as f64;
                    }
                    w_rows[slot * len + k1] = sw;
                    g1_rows[slot * len + k1] = sw * two_pi_i * xi1 as f64;
                    g2_rows[slot * len + k1] = s2 * two_pi_i;
                }
            }
            for buf in [&mut w_rows, &mut g1_rows, &mut g2_rows] {
                for chunk in buf.chunks_mut(len) {
                    ifft.process(chunk);
                }
            }
            [w_rows, g1_rows, g2_rows]
        })
        .collect();
    let n = grid.centers.len();
    let size = nrows * len;
    let mut w = Array2::zeros((n, size));
    let mut g1 = Array2::zeros((n, size));
    let mut g2 = Array2::zeros((n, size));
    for (i, [wr, g1r, g2r]) in per_center.into_iter().enumerate() {
        w.row_mut(i).assign(&ndarray::ArrayView1::from(&wr));
        g1.row_mut(i).assign(&ndarray::ArrayView1::from(&g1r));
        g2.row_mut(i).assign(&ndarray::ArrayView1::from(&g2r));
    }
    WpCoefficients {
        grid: grid.clone(),
        w,
        grad: vec![g1, g2],
        lattice: BLattice::rows(len, rows.to_vec()),
    }
}

/// Which magnitude threshold selects coefficients for reassignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `|W(a, b)| >= |a|^(-n s / 2) delta`.
    #[default]
    R,
    /// `|W(a, b)| >= delta`.
    S,
}

/// Boolean mask of coefficients passing the threshold.
pub fn threshold_mask(coeffs: &WpCoefficients, delta: f64, mode: ThresholdMode) -> Array2<bool> {
    let spec = &coeffs.grid.spec;
    let n = spec.dim as f64;
    let mut mask = Array2::from_elem(coeffs.w.raw_dim(), false);
    for (i, c) in coeffs.grid.centers.iter().enumerate() {
        let level = match mode {
            ThresholdMode::R => c.modulus.powf(-n * spec.s / 2.0) * delta,
            ThresholdMode::S => delta,
        };
        for (m, z) in mask.row_mut(i).iter_mut().zip(coeffs.w.row(i)) {
            let mag = z.norm();
            *m = mag >= level && mag > 0.0;
        }
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{gen_benchmark_1d, gen_plane_wave, Provenance};
    use crate::wavepacket::frame::{build_frame_grid, FrameSpec};
    use crate::wavepacket::mother::{MotherWavePacket, PacketKind};

    fn plane_grid(len: usize) -> FrameGrid {
        build_frame_grid(&FrameSpec::new_1d(len, 0.75).with_band(100.0, 500.0)).unwrap()
    }

    #[test]
    fn plane_wave_flat_envelope_and_selectivity() {
        let sig = gen_plane_wave(300.0, 2048).unwrap();
        let grid = plane_grid(2048);
        let coeffs = forward_transform(&sig, &grid).unwrap();
        for (i, c) in grid.centers.iter().enumerate() {
            let row = coeffs.w.row(i);
            let dist = (c.modulus - 300.0).abs();
            if dist < c.radius {
                let m0 = row[0].norm();
                assert!(m0 > 0.0);
                for z in row.iter() {
                    assert!((z.norm() - m0).abs() <= 1e-8 * m0);
                }
            } else if dist > c.radius {
                for z in row.iter() {
                    assert!(z.norm() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn unit_norm_packets() {
        // discrete Parseval: sum_xi g_a(xi)^2 approximates ||w_ab||^2 = 1
        for &s in &[0.625, 0.75, 0.875] {
            let spec = FrameSpec::new_1d(8192, s).with_band(200.0, 3000.0);
            let grid = build_frame_grid(&spec).unwrap();
            for c in grid.centers.iter().filter(|c| c.modulus + c.radius < 4096.0) {
                let reach = c.radius;
                let (lo, hi) = support_range(c.pos[0], reach, 8192);
                let e: f64 = (lo..=hi).map(|xi| window(&grid, c, [xi as f64, 0.0]).powi(2)).sum();
                assert!((e - 1.0).abs() < 1e-8, "s={s} a={} energy {e}", c.modulus);
            }
        }
    }

    #[test]
    fn shift_equivariance_and_linearity() {
        let len = 1024;
        let a = gen_plane_wave(137.0, len).unwrap();
        let mut b = crate::signals::gen_single_chirp(len).unwrap();
        b.samples[17] += Complex64::new(0.3, -0.2);
        let grid = build_frame_grid(&FrameSpec::new_1d(len, 0.75).with_band(10.0, 300.0)).unwrap();
        let wa = forward_transform(&a, &grid).unwrap();
        let wb = forward_transform(&b, &grid).unwrap();

        let shift = 37;
        let ws = forward_transform(&b.circular_shift(shift), &grid).unwrap();
        for i in 0..grid.len() {
            for k in 0..len {
                let src = (k + len - shift) % len;
                assert!((ws.w[[i, k]] - wb.w[[i, src]]).norm() <= 1e-8);
                assert!((ws.grad[0][[i, k]] - wb.grad[0][[i, src]]).norm() <= 1e-8);
            }
        }

        let alpha = Complex64::new(0.7, -1.3);
        let mix: Vec<Complex64> = a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(x, y)| alpha * x + y)
            .collect();
        let mix = Signal::new_1d(mix, false, Provenance::default()).unwrap();
        let wm = forward_transform(&mix, &grid).unwrap();
        for ((m, x), y) in wm.w.iter().zip(wa.w.iter()).zip(wb.w.iter()) {
            assert!((m - (alpha * x + y)).norm() <= 1e-12);
        }
    }

    #[test]
    fn analytic_preprocessing_keeps_positive_line() {
        // f2 = 0.8 cos(300 pi x) on [0, 0.6): only +150 Hz survives
        let fs = 8192;
        let samples: Vec<Complex64> = (0..fs)
            .map(|k| {
                let x = k as f64 / fs as f64;
                let v = if x < 0.6 { 0.8 * (300.0 * PI * x).cos() } else { 0.0 };
                Complex64::new(v, 0.0)
            })
            .collect();
        let sig = Signal::new_1d(samples, true, Provenance::default()).unwrap();
        let spec = Spectrum::of(&sig).unwrap();
        for k in fs / 2 + 1..fs {
            assert_eq!(spec.coeffs[k], Complex64::new(0.0, 0.0));
        }
        let peak = (1..fs / 2).max_by(|&i, &j| {
            spec.coeffs[i].norm().partial_cmp(&spec.coeffs[j].norm()).unwrap()
        });
        assert_eq!(peak, Some(150));
        assert!((spec.coeffs[150].norm() - 0.8 * 0.6).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut sig = gen_plane_wave(50.0, 256).unwrap();
        let grid = build_frame_grid(&FrameSpec::new_1d(256, 0.75)).unwrap();
        sig.samples[3] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(forward_transform(&sig, &grid), Err(Error::Input(_))));
        let other = gen_plane_wave(50.0, 512).unwrap();
        assert!(matches!(forward_transform(&other, &grid), Err(Error::Input(_))));
        let empty = FrameGrid { spec: grid.spec.clone(), centers: vec![] };
        assert!(forward_transform(&gen_plane_wave(50.0, 256).unwrap(), &empty).is_err());
    }

    #[test]
    fn slice_energy_bounded_by_windowed_spectrum() {
        let sig = gen_benchmark_1d(4096).unwrap();
        let grid = build_frame_grid(&FrameSpec::new_1d(4096, 0.75).with_band(100.0, 1800.0)).unwrap();
        let coeffs = forward_transform(&sig, &grid).unwrap();
        let spectrum = Spectrum::of(&sig).unwrap();
        for (i, c) in grid.centers.iter().enumerate() {
            // Parseval on the slice: (1/len) sum_b |W|^2 = sum_xi |f_hat g|^2
            let slice: f64 = coeffs.w.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>() / 4096.0;
            let (lo, hi) = support_range(c.pos[0], c.radius, 4096);
            let windowed: f64 = (lo..=hi)
                .map(|xi| {
                    (spectrum.coeffs[bin(xi, 4096)] * window(&grid, c, [xi as f64, 0.0])).norm_sqr()
                })
                .sum();
            assert!(slice <= windowed * (1.0 + 1e-10) + 1e-300);
        }
    }

    #[test]
    fn two_d_rows_match_full_transform() {
        let len = 32;
        let sig = crate::signals::gen_2d_warped(len).unwrap();
        let spec = FrameSpec::new_2d(len, 0.75).with_band(3.0, 15.0);
        let grid = build_frame_grid(&spec).unwrap();
        let full = forward_transform(&sig, &grid).unwrap();
        let part = forward_transform_rows(&sig, &grid, &[0, 5]).unwrap();
        for i in 0..grid.len() {
            for (slot, &row) in [0usize, 5].iter().enumerate() {
                for x1 in 0..len {
                    let a = full.w[[i, row * len + x1]];
                    let b = part.w[[i, slot * len + x1]];
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
        // direct evaluation of one coefficient: W(a, b) = sum_xi f_hat g e^{2 pi i xi.b}
        let spectrum = Spectrum::of(&sig).unwrap();
        let c = grid.centers[3];
        let (x1, x2) = (7usize, 5usize);
        let mut direct = Complex64::new(0.0, 0.0);
        for k1 in 0..len {
            for k2 in 0..len {
                let (xi1, xi2) = (signed(k1, len) as f64, signed(k2, len) as f64);
                let ph = 2.0 * PI * (xi1 * x1 as f64 + xi2 * x2 as f64) / len as f64;
                direct += spectrum.coeffs[k1 * len + k2]
                    * window(&grid, &c, [xi1, xi2])
                    * Complex64::from_polar(1.0, ph);
            }
        }
        assert!((direct - part.w[[3, len + x1]]).norm() < 1e-12);
    }

    #[test]
    fn spline_packet_transform_is_finite() {
        let mother = MotherWavePacket::new(PacketKind::TimeSpline, Some(12), 1.0).unwrap();
        let spec = FrameSpec::new_1d(1024, 0.75).with_band(20.0, 200.0).with_mother(mother);
        let grid = build_frame_grid(&spec).unwrap();
        let coeffs = forward_transform(&gen_plane_wave(80.0, 1024).unwrap(), &grid).unwrap();
        assert!(coeffs.w.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    }

    #[test]
    fn masks() {
        let sig = gen_plane_wave(300.0, 1024).unwrap();
        let grid = plane_grid(1024);
        let mut coeffs = forward_transform(&sig, &grid).unwrap();
        let r = threshold_mask(&coeffs, 1e-2, ThresholdMode::R);
        let s = threshold_mask(&coeffs, 1e-2, ThresholdMode::S);
        for (a, b) in s.iter().zip(r.iter()) {
            assert!(!a || *b, "S mask must be inside R mask for |a| >= 1");
        }
        assert!(r.iter().any(|&m| m));
        coeffs.w.fill(Complex64::new(0.0, 0.0));
        assert!(!threshold_mask(&coeffs, 1e-2, ThresholdMode::R).iter().any(|&m| m));
    }
}
