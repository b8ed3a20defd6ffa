//! Shared image and mask types, binary morphology, and localization metrics.

mod io;
mod mask;
mod metrics;
mod morph;
mod plane;

pub use io::{
    decode_mask_png, encode_mask_png, mask_roundtrip, read_mask, read_rgb, write_mask, write_plane, write_rgb,
};
pub use mask::{MaskSource, TamperMask};
pub use metrics::{color_coded, evaluate, f_measure, Scores};
pub use morph::{close, components, dilate, disc_offsets, erode, morph_clean, open, remove_small_components};
pub use plane::{Plane, RgbImage, LUMA_WEIGHTS};

pub(crate) use plane::Integral;
