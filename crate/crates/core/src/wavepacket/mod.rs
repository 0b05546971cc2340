//! Mother wave packets, redundant frame grids and the forward transform.

mod frame;
mod mother;
mod transform;

pub use frame::{build_frame_grid, directions_on_ring, Center, FrameGrid, FrameSpec, DEFAULT_SPACING};
pub use mother::{MotherWavePacket, PacketKind};
pub use transform::{
    forward_transform, forward_transform_rows, threshold_mask, transform_spectrum, window_energy, BLattice,
    Spectrum, ThresholdMode, WpCoefficients,
};
