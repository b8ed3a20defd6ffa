//! Image forgery localization by fusing three independent detectors:
//!
//! - [`prnu`]: camera sensor-noise (PRNU) fingerprints, clustered from an unlabeled corpus
//!   and checked with a sliding-window correlation field;
//! - [`copymove`]: dense PatchMatch offset fields swept over rotations and scales;
//! - [`splicing`]: high-pass residual co-occurrence features scored block-wise by a linear
//!   max-margin classifier and aggregated into a per-pixel distance map.
//!
//! [`fusion`] combines the three binary masks by detector reliability, [`synth`] generates
//! cameras and forgeries with exact ground truth, and [`pipeline`] wires everything into a
//! batch run over a corpus manifest.

pub mod copymove;
mod error;
mod par;
pub mod fusion;
pub mod imgcore;
pub mod pipeline;
pub mod prnu;
pub mod splicing;
pub mod synth;

pub use error::{Error, Result};
pub use imgcore::{MaskSource, Plane, RgbImage, TamperMask};
