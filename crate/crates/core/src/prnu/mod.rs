//! Sensor-noise (PRNU) forensics: residual extraction, PCE, blind clustering of a corpus into
//! cameras, fingerprint estimation, association, and sliding-window localization.

mod cluster;
mod correlation;
mod denoise;
mod fingerprint;
mod io;
mod localize;
mod residual;

pub use cluster::{
    associate_image, cluster_residuals, merge_centers, normalized_residual, Association, Cluster, ClusterParams,
    ClusterSet,
};
pub use correlation::{
    normalized_corr, pce, pce_from_surface, windowed_correlation, CorrelationField, PceEngine, Spectrum,
};
pub use denoise::{denoise, estimate_sigma};
pub use fingerprint::{estimate_fingerprint, Fingerprint};
pub use io::{
    as_stored, decode_fingerprint, encode_fingerprint, format_cluster_manifest, parse_cluster_manifest,
    read_cluster_manifest, read_fingerprint, write_cluster_manifest, write_fingerprint, ManifestEntry,
};
pub use localize::{correlation_field, prnu_mask, saturated_pixels, PrnuMaskParams};
pub use residual::{noise_residual, noise_residual_with, NoiseResidual};

pub(crate) use correlation::windowed_correlation_span;

/// Default PCE exclusion radius (an 11×11 neighbourhood around the peak).
pub const DEFAULT_EXCLUSION_RADIUS: usize = 5;
