use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::copymove::{CopyMoveParams, NnfParams, RegionParams, TransformSpec};
use crate::error::{Error, Result};
use crate::prnu::{ClusterParams, PrnuMaskParams};
use crate::splicing::{SplicingMaskParams, TrainParams};

/// Every threshold and size used by the full pipeline, loadable from flat `key = value` text.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,

    pub denoise_strength: f64,
    pub exclusion_radius: usize,
    pub cluster_pce: f64,
    pub min_cluster_size: usize,
    pub association_pce: f64,
    pub corr_window: usize,
    pub prnu_base_threshold: f64,
    pub prnu_pce_ref: f64,
    pub saturation_level: f64,
    pub prnu_morph_radius: usize,
    pub prnu_min_area: usize,

    pub patch: usize,
    pub nnf_iterations: usize,
    pub min_displacement: f64,
    pub transform_sweep: Vec<TransformSpec>,
    pub coherence_window: usize,
    pub coherence_tolerance: u32,
    pub coherence_threshold: f64,
    pub copy_corr_threshold: f64,
    pub copy_corr_window: usize,
    pub flat_variance_floor: f64,
    pub copy_morph_radius: usize,
    pub copy_min_area: usize,
    pub copy_refine_tolerance: f64,
    pub disambiguation_pce: f64,
    pub disambiguation_min_region: usize,

    pub block: usize,
    pub stride: usize,
    pub sdh_fraction: f64,
    pub splicing_morph_radius: usize,
    pub splicing_min_area: usize,
    pub svm_regularization: f64,
    pub svm_epochs: usize,

    pub fusion_pce: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let prnu = PrnuMaskParams::default();
        let regions = RegionParams::default();
        let nnf = NnfParams::default();
        let spl = SplicingMaskParams::default();
        let train = TrainParams::default();
        Self {
            seed: 0,
            output_dir: PathBuf::from("forgeloc-out"),
            denoise_strength: 1.0,
            exclusion_radius: crate::prnu::DEFAULT_EXCLUSION_RADIUS,
            cluster_pce: 50.0,
            min_cluster_size: 5,
            association_pce: 100.0,
            corr_window: 129,
            prnu_base_threshold: prnu.base_threshold,
            prnu_pce_ref: prnu.pce_ref,
            saturation_level: prnu.saturation_level,
            prnu_morph_radius: prnu.morph_radius,
            prnu_min_area: prnu.min_area,
            patch: nnf.patch,
            nnf_iterations: nnf.iterations,
            min_displacement: regions.min_displacement,
            transform_sweep: TransformSpec::default_sweep(),
            coherence_window: regions.coherence_window,
            coherence_tolerance: regions.coherence_tolerance,
            coherence_threshold: regions.coherence_threshold,
            copy_corr_threshold: regions.corr_threshold,
            copy_corr_window: regions.corr_window,
            flat_variance_floor: regions.flat_variance_floor,
            copy_morph_radius: regions.morph_radius,
            copy_min_area: regions.min_area,
            copy_refine_tolerance: regions.refine_tolerance,
            disambiguation_pce: 150.0,
            disambiguation_min_region: 5000,
            block: crate::splicing::BLOCK,
            stride: crate::splicing::DEFAULT_STRIDE,
            sdh_fraction: spl.fraction,
            splicing_morph_radius: spl.morph_radius,
            splicing_min_area: spl.min_area,
            svm_regularization: train.regularization,
            svm_epochs: train.epochs,
            fusion_pce: crate::fusion::DEFAULT_PCE_OVERRIDE,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("cannot parse {key} = {value:?}")))
}

/// `rotation:scale` pairs separated by commas, e.g. `0:1, 90:1.25`.
pub fn parse_sweep(text: &str) -> Result<Vec<TransformSpec>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (r, s) = item
                .split_once(':')
                .ok_or_else(|| Error::invalid(format!("transform {item:?} is not rotation:scale")))?;
            TransformSpec::new(parse("transform_sweep", r.trim())?, parse("transform_sweep", s.trim())?)
        })
        .collect()
}

fn format_sweep(sweep: &[TransformSpec]) -> String {
    sweep.iter().map(|t| format!("{}:{}", t.rotation, t.scale)).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    /// Effective values in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("denoise_strength", self.denoise_strength.to_string()),
            ("exclusion_radius", self.exclusion_radius.to_string()),
            ("cluster_pce", self.cluster_pce.to_string()),
            ("min_cluster_size", self.min_cluster_size.to_string()),
            ("association_pce", self.association_pce.to_string()),
            ("corr_window", self.corr_window.to_string()),
            ("prnu_base_threshold", self.prnu_base_threshold.to_string()),
            ("prnu_pce_ref", self.prnu_pce_ref.to_string()),
            ("saturation_level", self.saturation_level.to_string()),
            ("prnu_morph_radius", self.prnu_morph_radius.to_string()),
            ("prnu_min_area", self.prnu_min_area.to_string()),
            ("patch", self.patch.to_string()),
            ("nnf_iterations", self.nnf_iterations.to_string()),
            ("min_displacement", self.min_displacement.to_string()),
            ("transform_sweep", format_sweep(&self.transform_sweep)),
            ("coherence_window", self.coherence_window.to_string()),
            ("coherence_tolerance", self.coherence_tolerance.to_string()),
            ("coherence_threshold", self.coherence_threshold.to_string()),
            ("copy_corr_threshold", self.copy_corr_threshold.to_string()),
            ("copy_corr_window", self.copy_corr_window.to_string()),
            ("flat_variance_floor", self.flat_variance_floor.to_string()),
            ("copy_morph_radius", self.copy_morph_radius.to_string()),
            ("copy_min_area", self.copy_min_area.to_string()),
            ("copy_refine_tolerance", self.copy_refine_tolerance.to_string()),
            ("disambiguation_pce", self.disambiguation_pce.to_string()),
            ("disambiguation_min_region", self.disambiguation_min_region.to_string()),
            ("block", self.block.to_string()),
            ("stride", self.stride.to_string()),
            ("sdh_fraction", self.sdh_fraction.to_string()),
            ("splicing_morph_radius", self.splicing_morph_radius.to_string()),
            ("splicing_min_area", self.splicing_min_area.to_string()),
            ("svm_regularization", self.svm_regularization.to_string()),
            ("svm_epochs", self.svm_epochs.to_string()),
            ("fusion_pce", self.fusion_pce.to_string()),
        ]
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = parse(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "denoise_strength" => self.denoise_strength = parse(key, v)?,
            "exclusion_radius" => self.exclusion_radius = parse(key, v)?,
            "cluster_pce" => self.cluster_pce = parse(key, v)?,
            "min_cluster_size" => self.min_cluster_size = parse(key, v)?,
            "association_pce" => self.association_pce = parse(key, v)?,
            "corr_window" => self.corr_window = parse(key, v)?,
            "prnu_base_threshold" => self.prnu_base_threshold = parse(key, v)?,
            "prnu_pce_ref" => self.prnu_pce_ref = parse(key, v)?,
            "saturation_level" => self.saturation_level = parse(key, v)?,
            "prnu_morph_radius" => self.prnu_morph_radius = parse(key, v)?,
            "prnu_min_area" => self.prnu_min_area = parse(key, v)?,
            "patch" => self.patch = parse(key, v)?,
            "nnf_iterations" => self.nnf_iterations = parse(key, v)?,
            "min_displacement" => self.min_displacement = parse(key, v)?,
            "transform_sweep" => self.transform_sweep = parse_sweep(v)?,
            "coherence_window" => self.coherence_window = parse(key, v)?,
            "coherence_tolerance" => self.coherence_tolerance = parse(key, v)?,
            "coherence_threshold" => self.coherence_threshold = parse(key, v)?,
            "copy_corr_threshold" => self.copy_corr_threshold = parse(key, v)?,
            "copy_corr_window" => self.copy_corr_window = parse(key, v)?,
            "flat_variance_floor" => self.flat_variance_floor = parse(key, v)?,
            "copy_morph_radius" => self.copy_morph_radius = parse(key, v)?,
            "copy_min_area" => self.copy_min_area = parse(key, v)?,
            "copy_refine_tolerance" => self.copy_refine_tolerance = parse(key, v)?,
            "disambiguation_pce" => self.disambiguation_pce = parse(key, v)?,
            "disambiguation_min_region" => self.disambiguation_min_region = parse(key, v)?,
            "block" => self.block = parse(key, v)?,
            "stride" => self.stride = parse(key, v)?,
            "sdh_fraction" => self.sdh_fraction = parse(key, v)?,
            "splicing_morph_radius" => self.splicing_morph_radius = parse(key, v)?,
            "splicing_min_area" => self.splicing_min_area = parse(key, v)?,
            "svm_regularization" => self.svm_regularization = parse(key, v)?,
            "svm_epochs" => self.svm_epochs = parse(key, v)?,
            "fusion_pce" => self.fusion_pce = parse(key, v)?,
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("config line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("denoise_strength", self.denoise_strength),
            ("cluster_pce", self.cluster_pce),
            ("association_pce", self.association_pce),
            ("prnu_base_threshold", self.prnu_base_threshold),
            ("prnu_pce_ref", self.prnu_pce_ref),
            ("saturation_level", self.saturation_level),
            ("coherence_threshold", self.coherence_threshold),
            ("copy_corr_threshold", self.copy_corr_threshold),
            ("disambiguation_pce", self.disambiguation_pce),
            ("sdh_fraction", self.sdh_fraction),
            ("svm_regularization", self.svm_regularization),
            ("fusion_pce", self.fusion_pce),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{k} must be positive, got {v}")));
            }
        }
        let odd = |k: &str, v: usize, min: usize| {
            if v < min || v % 2 == 0 {
                Err(Error::invalid(format!("{k} must be odd and >= {min}, got {v}")))
            } else {
                Ok(())
            }
        };
        odd("corr_window", self.corr_window, 3)?;
        odd("patch", self.patch, 1)?;
        odd("coherence_window", self.coherence_window, 3)?;
        if self.coherence_threshold > 1.0 || self.copy_corr_threshold > 1.0 || self.sdh_fraction >= 1.0 {
            return Err(Error::invalid("coherence/correlation thresholds must be <= 1 and sdh_fraction < 1"));
        }
        if self.min_displacement < 0.0 || self.flat_variance_floor < 0.0 || self.copy_refine_tolerance < 0.0 {
            return Err(Error::invalid("min_displacement, flat_variance_floor and copy_refine_tolerance must be >= 0"));
        }
        if self.nnf_iterations == 0 || self.svm_epochs == 0 || self.min_cluster_size == 0 {
            return Err(Error::invalid("nnf_iterations, svm_epochs and min_cluster_size must be >= 1"));
        }
        if self.block < 8 || self.stride == 0 || self.copy_corr_window < 2 || self.copy_min_area == 0 {
            return Err(Error::invalid("block >= 8, stride >= 1, copy_corr_window >= 2 and copy_min_area >= 1 required"));
        }
        if self.transform_sweep.is_empty() {
            return Err(Error::invalid("transform_sweep needs at least one rotation:scale pair"));
        }
        Ok(())
    }

    pub fn cluster_params(&self) -> ClusterParams {
        ClusterParams {
            pce_threshold: self.cluster_pce,
            min_cluster_size: self.min_cluster_size,
            exclusion_radius: self.exclusion_radius,
            seed: self.seed,
        }
    }

    pub fn prnu_mask_params(&self) -> PrnuMaskParams {
        PrnuMaskParams {
            base_threshold: self.prnu_base_threshold,
            pce_ref: self.prnu_pce_ref,
            saturation_level: self.saturation_level,
            morph_radius: self.prnu_morph_radius,
            min_area: self.prnu_min_area,
        }
    }

    pub fn copymove_params(&self) -> CopyMoveParams {
        CopyMoveParams {
            nnf: NnfParams {
                patch: self.patch,
                iterations: self.nnf_iterations,
                min_displacement: self.min_displacement,
                seed: self.seed,
            },
            sweep: self.transform_sweep.clone(),
            regions: RegionParams {
                coherence_window: self.coherence_window,
                coherence_tolerance: self.coherence_tolerance,
                coherence_threshold: self.coherence_threshold,
                corr_threshold: self.copy_corr_threshold,
                corr_window: self.copy_corr_window,
                min_displacement: self.min_displacement,
                flat_variance_floor: self.flat_variance_floor,
                morph_radius: self.copy_morph_radius,
                min_area: self.copy_min_area,
                refine_tolerance: self.copy_refine_tolerance,
            },
        }
    }

    pub fn splicing_mask_params(&self) -> SplicingMaskParams {
        SplicingMaskParams {
            fraction: self.sdh_fraction,
            morph_radius: self.splicing_morph_radius,
            min_area: self.splicing_min_area,
        }
    }

    pub fn train_params(&self) -> TrainParams {
        TrainParams {
            regularization: self.svm_regularization,
            epochs: self.svm_epochs,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_roundtrip_and_overrides() {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text("# comment\nseed = 7\n\ntransform_sweep = 0:1, 90:1.25 # inline\nfusion_pce=900").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.transform_sweep.len(), 2);
        assert_eq!(cfg.fusion_pce, 900.0);
        let mut again = PipelineConfig::default();
        again.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn defaults_carry_the_documented_constants() {
        let c = PipelineConfig::default();
        assert_eq!((c.cluster_pce, c.association_pce, c.disambiguation_pce, c.fusion_pce), (50.0, 100.0, 150.0, 1200.0));
        assert_eq!((c.corr_window, c.block, c.stride, c.patch), (129, 128, 16, 7));
        assert_eq!(c.sdh_fraction, 0.25);
        assert_eq!(c.transform_sweep.len(), 12);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = PipelineConfig::default();
        assert!(c.apply_text("nonsense").is_err());
        assert!(c.apply_text("bogus_key = 1").is_err());
        assert!(c.apply_text("seed = -1").is_err());
        assert!(c.apply_text("transform_sweep = 90").is_err());
        c.corr_window = 128;
        assert!(c.validate().is_err());
        let c = PipelineConfig { association_pce: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
