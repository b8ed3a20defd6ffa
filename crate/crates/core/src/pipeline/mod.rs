//! Batch pipeline: configuration, corpus manifests, and the end-to-end run.

mod config;
mod manifest;
mod run;

pub use config::{parse_sweep, PipelineConfig};
pub use manifest::{read_manifest, ManifestRow};
pub use run::{
    build_clusters, build_splicing_model, detect_image, format_report, run_pipeline, with_means, Detections, Models,
    Report, ReportRow, DETECTORS,
};
