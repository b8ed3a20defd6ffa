//! Synthetic cameras, scenes and forgeries with exact ground truth.

mod camera;
mod corpus;
mod forge;
mod scene;

pub use camera::{
    sensor_noise, shoot, shoot_unclamped, shoot_without_prnu, SyntheticCamera, DEFAULT_NOISE_STD, DEFAULT_SIGMA_K,
};
pub use corpus::{emit_corpus, CorpusEntry, CorpusSpec, MANIFEST_HEADER};
pub use forge::{forge, ForgeryKind, ForgerySpec, Rect};
pub use scene::{scene, texture};
