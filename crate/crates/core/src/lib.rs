//! Synchrosqueezed wave packet transforms in one and two dimensions.
//!
//! The crate is organised bottom-up:
//!
//! - [`wavepacket`]: mother packets, redundant frame grids and the FFT-based
//!   forward transform with its spatial gradient.
//! - [`synchrosqueeze`]: the instantaneous-frequency information function and
//!   energy reassignment, including redundancy averaging and selective-max
//!   reassignment.
//! - [`signals`]: benchmark generators, noise processes and analytic
//!   instantaneous-frequency oracles.
//! - [`metrics`]: the per-slice earth mover's distance against an ideal ridge.
//! - [`statlab`]: seeded Monte-Carlo experiments.
//! - [`io`]: grid files with JSON sidecars, run configuration and CSV tables.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod metrics;
pub mod signals;
pub mod statlab;
pub mod synchrosqueeze;
pub mod wavepacket;

pub use error::{Error, Result};

pub use signals::{NoiseKind, NoiseSpec, Signal};
pub use synchrosqueeze::{
    information_function, redundant_sst, selective_max_sst, squeeze, stack_2d, SqueezeConfig,
    SqueezeMode, TfDistribution, VAxis,
};
pub use wavepacket::{
    build_frame_grid, forward_transform, threshold_mask, FrameGrid, FrameSpec, MotherWavePacket,
    PacketKind, ThresholdMode, WpCoefficients,
};

/// Version tag written into every reproducibility header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
