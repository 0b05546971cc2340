use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::signals::NoiseSpec;
use crate::statlab::ExperimentPlan;
use crate::synchrosqueeze::SqueezeConfig;
use crate::wavepacket::{FrameSpec, MotherWavePacket, PacketKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotherConfig {
    pub kind: PacketKind,
    /// Decay order of the time-compact spline packet.
    pub order: Option<u32>,
    /// Support radius `d` of the profile, in `(0, 1]`.
    pub radius: f64,
}

impl Default for MotherConfig {
    fn default() -> Self {
        MotherConfig {
            kind: PacketKind::FrequencyBump,
            order: None,
            radius: 1.0,
        }
    }
}

/// Frame parameters that do not depend on the input grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub s: f64,
    pub red: usize,
    pub band: Option<(f64, f64)>,
    pub spacing: f64,
    pub comparison_mode: bool,
    pub mother: MotherConfig,
}

impl Default for FrameConfig {
    fn default() -> Self {
        let base = FrameSpec::new_1d(2, 0.75);
        FrameConfig {
            s: base.s,
            red: base.red,
            band: None,
            spacing: base.spacing,
            comparison_mode: false,
            mother: MotherConfig::default(),
        }
    }
}

impl FrameConfig {
    /// The frame spec for a `dim`-dimensional grid with `len` samples per axis.
    pub fn spec(&self, dim: usize, len: usize) -> Result<FrameSpec> {
        let mut spec = if dim == 2 {
            FrameSpec::new_2d(len, self.s)
        } else {
            FrameSpec::new_1d(len, self.s)
        };
        spec.dim = dim;
        spec.red = self.red;
        spec.band = self.band;
        spec.spacing = self.spacing;
        spec.comparison_mode = self.comparison_mode;
        spec.mother = MotherWavePacket::new(self.mother.kind, self.mother.order, self.mother.radius)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Text configuration shared by all subcommands. Every section is optional
/// and command-line flags override individual fields.
///
/// ```toml
/// [frame]
/// s = 0.75
/// red = 10
/// band = [10.0, 60.0]
///
/// [squeeze]
/// delta = 0.01
/// mode = "selective-max"
///
/// [noise]
/// seed = 7
/// kind = { kind = "white-gaussian", sigma2 = 1.0 }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub frame: FrameConfig,
    pub squeeze: SqueezeConfig,
    pub noise: Option<NoiseSpec>,
    pub experiment: Option<ExperimentPlan>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.squeeze.validate()?;
        if let Some(n) = &cfg.noise {
            n.validate()?;
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| crate::Error::internal(e.to_string()))
    }
}
