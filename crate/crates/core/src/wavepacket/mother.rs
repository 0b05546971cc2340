//! Mother wave packets, described by their radial frequency profile.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Profile values below this magnitude are treated as exactly zero when the
/// window of a time-compact packet is truncated for the FFT pipeline.
const TRUNCATION_LEVEL: f64 = 1e-14;

/// Largest normalised radius ever evaluated for slowly decaying profiles.
const MAX_CUTOFF: f64 = 4096.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacketKind {
    /// `exp(-1/(1-|u/d|^2))` on `|u| < d`, exactly zero outside.
    FrequencyBump,
    /// Fourier transform of a centred B-spline of order `m`, i.e.
    /// `sinc(u/d)^m`. Compact in time, decays like `|u|^-m` in frequency.
    TimeSpline,
}

/// A mother wave packet `w` given through its real, even Fourier profile.
///
/// The profile is evaluated on demand at a normalised radius
/// `u = |xi - a| / |a|^s`. It is L2-normalised separately for one and two
/// dimensions so that every dilated/modulated member of the family has unit
/// norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotherWavePacket {
    kind: PacketKind,
    /// Decay order; `None` stands for the infinitely smooth bump.
    order: Option<u32>,
    radius: f64,
    norm: [f64; 2],
    epsilon: f64,
    cutoff: f64,
}

impl MotherWavePacket {
    /// Builds a packet of the given kind. `order` is ignored for the bump
    /// (which is of type `(0, inf)`) and must be at least 2 for the spline.
    pub fn new(kind: PacketKind, order: Option<u32>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius <= 1.0) {
            return Err(Error::param(format!(
                "support radius d must lie in (0, 1], got {radius}"
            )));
        }
        let order = match kind {
            PacketKind::FrequencyBump => None,
            PacketKind::TimeSpline => match order {
                Some(m) if m >= 2 => Some(m),
                Some(m) => {
                    return Err(Error::param(format!(
                        "time-compact packet needs decay order m >= 2, got {m}"
                    )))
                }
                None => {
                    return Err(Error::param(
                        "time-compact packet needs a finite decay order m",
                    ))
                }
            },
        };
        let mut packet = MotherWavePacket {
            kind,
            order,
            radius,
            norm: [1.0, 1.0],
            epsilon: 0.0,
            cutoff: radius,
        };
        packet.cutoff = packet.truncation_radius();
        packet.norm = [
            1.0 / packet.raw_energy(1).sqrt(),
            1.0 / packet.raw_energy(2).sqrt(),
        ];
        packet.epsilon = packet.measure_epsilon();
        Ok(packet)
    }

    /// The default packet: frequency-compact bump with `d = 1`.
    pub fn bump() -> Self {
        Self::new(PacketKind::FrequencyBump, None, 1.0).expect("d = 1 is valid")
    }

    pub fn kind(&self) -> PacketKind {
        self.kind
    }

    pub fn order(&self) -> Option<u32> {
        self.order
    }

    /// Essential support radius `d`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Measured `epsilon` of the `(epsilon, m)` envelope. Zero for the bump.
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Normalised radius beyond which the profile is treated as zero.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Unnormalised profile at normalised radius `u >= 0`.
    fn raw(&self, u: f64) -> f64 {
        let u = u.abs();
        match self.kind {
            PacketKind::FrequencyBump => {
                let t = u / self.radius;
                if t >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - t * t)).exp()
                }
            }
            PacketKind::TimeSpline => {
                let t = u / self.radius;
                let sinc = if t == 0.0 {
                    1.0
                } else {
                    (PI * t).sin() / (PI * t)
                };
                sinc.powi(self.order.unwrap_or(2) as i32)
            }
        }
    }

    /// L2-normalised profile `w_hat(u)` for an `dim`-dimensional family.
    pub fn profile(&self, u: f64, dim: usize) -> f64 {
        let u = u.abs();
        if u > self.cutoff {
            return 0.0;
        }
        self.raw(u) * self.norm[dim.clamp(1, 2) - 1]
    }

    fn truncation_radius(&self) -> f64 {
        match self.kind {
            PacketKind::FrequencyBump => self.radius,
            PacketKind::TimeSpline => {
                // |sinc(t)|^m <= (1 / (pi t))^m; the raw profile peaks at 1.
                let m = self.order.unwrap_or(2) as f64;
                let t = (1.0 / TRUNCATION_LEVEL).powf(1.0 / m) / PI;
                (t * self.radius).clamp(self.radius, MAX_CUTOFF)
            }
        }
    }

    /// Integral of the squared raw profile over R^dim (radial for dim 2).
    fn raw_energy(&self, dim: usize) -> f64 {
        // Smooth integrand: a fine composite Simpson rule is accurate to
        // round-off for the bump; the spline tail beyond the cutoff is below
        // the truncation level squared.
        let upper = self.cutoff;
        let per_lobe = 400.0;
        let n = ((upper / self.radius) * per_lobe).ceil() as usize;
        let n = (n.max(2000) + 1) & !1;
        let h = upper / n as f64;
        let integrand = |u: f64| {
            let r = self.raw(u);
            if dim == 1 {
                2.0 * r * r
            } else {
                2.0 * PI * u * r * r
            }
        };
        let mut acc = integrand(0.0) + integrand(upper);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(i as f64 * h);
        }
        acc * h / 3.0
    }

    /// `sup_{|u| > 1} |w_hat(u)| (1 + |u|)^m`, scanned on a fine grid.
    fn measure_epsilon(&self) -> f64 {
        let Some(m) = self.order else {
            return 0.0;
        };
        let m = m as i32;
        let start = 1.0_f64;
        let end = self.cutoff.max(start + 1.0).min(256.0);
        let steps = 200_000;
        let mut eps: f64 = 0.0;
        for i in 0..=steps {
            let u = start + (end - start) * i as f64 / steps as f64;
            let val = self.raw(u).abs() * self.norm[0] * (1.0 + u).powi(m);
            eps = eps.max(val);
        }
        // The envelope (d / (pi u))^m (1 + u)^m is decreasing, so the scanned
        // maximum also bounds the tail past `end`.
        let tail = self.norm[0] * (self.radius * (1.0 + end) / (PI * end)).powi(m);
        eps.max(tail)
    }
}

impl Default for MotherWavePacket {
    fn default() -> Self {
        Self::bump()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_vanishes_on_boundary() {
        let w = MotherWavePacket::bump();
        assert_eq!(w.profile(1.0, 1), 0.0);
        assert!(w.profile(0.999, 1) > 0.0);
        assert_eq!(w.epsilon(), 0.0);
    }

    #[test]
    fn bump_radius_half() {
        let w = MotherWavePacket::new(PacketKind::FrequencyBump, None, 0.5).unwrap();
        assert!(w.profile(0.49, 1) > 0.0);
        assert_eq!(w.profile(0.51, 1), 0.0);
    }

    #[test]
    fn profiles_are_unit_norm() {
        for w in [
            MotherWavePacket::bump(),
            MotherWavePacket::new(PacketKind::FrequencyBump, None, 0.3).unwrap(),
            MotherWavePacket::new(PacketKind::TimeSpline, Some(12), 1.0).unwrap(),
        ] {
            // independent trapezoid quadrature on a different grid
            let n = 400_000;
            let upper = w.cutoff();
            let h = upper / n as f64;
            let mut e1 = 0.0;
            let mut e2 = 0.0;
            for i in 0..n {
                let u = (i as f64 + 0.5) * h;
                e1 += 2.0 * w.profile(u, 1).powi(2) * h;
                e2 += 2.0 * PI * u * w.profile(u, 2).powi(2) * h;
            }
            assert!((e1 - 1.0).abs() < 1e-8, "1d energy {e1}");
            assert!((e2 - 1.0).abs() < 1e-8, "2d energy {e2}");
        }
    }

    #[test]
    fn spline_envelope_holds() {
        let w = MotherWavePacket::new(PacketKind::TimeSpline, Some(12), 1.0).unwrap();
        let eps = w.epsilon();
        assert!(eps > 0.0);
        // at u = 2 the profile hits a sinc zero; the bound must still hold
        assert!(w.profile(2.0, 1).abs() <= eps / 3f64.powi(12) + 1e-300);
        for i in 0..2000 {
            let u = 1.0 + i as f64 * 0.01;
            assert!(w.profile(u, 1).abs() <= eps / (1.0 + u).powi(12) * (1.0 + 1e-9));
        }
        for i in 0..100 {
            let u = i as f64 * 0.0099;
            assert!(w.profile(u, 1) > 0.0);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            MotherWavePacket::new(PacketKind::FrequencyBump, None, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(MotherWavePacket::new(PacketKind::FrequencyBump, None, 1.5).is_err());
        assert!(MotherWavePacket::new(PacketKind::TimeSpline, Some(1), 1.0).is_err());
        assert!(MotherWavePacket::new(PacketKind::TimeSpline, None, 1.0).is_err());
    }
}
