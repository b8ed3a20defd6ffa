use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use crate::copymove::{copymove_mask, detect_copymove, disambiguate_source, CopyRegionPair};
use crate::error::{Error, Result};
use crate::fusion::{fuse_masks, FusionInput};
use crate::imgcore::{evaluate, read_mask, read_rgb, write_mask, MaskSource, RgbImage, Scores, TamperMask};
use crate::par;
use crate::prnu::{
    associate_image, cluster_residuals, correlation_field, noise_residual_with, prnu_mask, read_fingerprint,
    write_cluster_manifest, write_fingerprint, Association, ClusterSet, CorrelationField, ManifestEntry, NoiseResidual,
};
use crate::splicing::{
    collect_training_blocks, read_model, sdh_map, splicing_mask, train_model, write_model, LinearModel,
};

use super::config::PipelineConfig;
use super::manifest::{read_manifest, ManifestRow};

/// Detector names in report order.
pub const DETECTORS: [&str; 4] = ["prnu", "copymove", "splicing", "fused"];

/// Trained state shared by every per-image detection.
#[derive(Debug, Clone, Default)]
pub struct Models {
    pub clusters: ClusterSet,
    pub splicing: Option<LinearModel>,
}

/// All detector outputs for one image.
#[derive(Debug, Clone)]
pub struct Detections {
    pub association: Association,
    pub field: Option<CorrelationField>,
    pub prnu: Option<TamperMask>,
    pub copy_pairs: Vec<CopyRegionPair>,
    pub copymove: TamperMask,
    pub splicing: TamperMask,
    pub fused: TamperMask,
}

impl Detections {
    /// Masks in [`DETECTORS`] order; a detector that did not run counts as "nothing found".
    pub fn masks(&self) -> [TamperMask; 4] {
        let (w, h) = self.fused.dims();
        [
            self.prnu.clone().unwrap_or_else(|| TamperMask::genuine(w, h, MaskSource::Prnu)),
            self.copymove.clone(),
            self.splicing.clone(),
            self.fused.clone(),
        ]
    }
}

/// Runs every detector on one image and fuses the results.
pub fn detect_image(image: &RgbImage, residual: &NoiseResidual, models: &Models, config: &PipelineConfig) -> Result<Detections> {
    let (w, h) = image.dims();
    let association = associate_image(image, residual, &models.clusters, config.association_pce, config.exclusion_radius)?;
    let (field, prnu) = match association.cluster {
        Some(c) => {
            let fp = &models.clusters.clusters[c].fingerprint;
            let field = correlation_field(image, residual, fp, config.corr_window, config.exclusion_radius)?;
            let mask = prnu_mask(&field, image, &config.prnu_mask_params())?;
            (Some(field), Some(mask))
        }
        None => (None, None),
    };
    let copy_pairs: Vec<CopyRegionPair> = detect_copymove(image, &config.copymove_params())?
        .iter()
        .map(|p| disambiguate_source(p, field.as_ref(), config.disambiguation_pce, config.disambiguation_min_region))
        .collect();
    let copymove = copymove_mask(&copy_pairs, (w, h));
    let splicing = match &models.splicing {
        Some(model) if w >= config.block && h >= config.block => {
            let map = sdh_map(image, model, config.block, config.stride)?;
            splicing_mask(&map, &config.splicing_mask_params())?
        }
        _ => TamperMask::genuine(w, h, MaskSource::Splicing),
    };
    let fused = fuse_masks(
        &FusionInput {
            copymove_mask: Some(copymove.clone()),
            prnu_mask: prnu.clone(),
            prnu_pce: field.as_ref().map(|f| f.pce),
            splicing_mask: splicing.clone(),
        },
        config.fusion_pce,
    )?;
    Ok(Detections {
        association,
        field,
        prnu,
        copy_pairs,
        copymove,
        splicing,
        fused,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub image_id: String,
    pub detector: &'static str,
    pub scores: Scores,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    /// Per-image rows sorted by image id, then one `mean` row per detector.
    pub rows: Vec<ReportRow>,
    /// `(image_id, message)` for every image that could not be processed.
    pub errors: Vec<(String, String)>,
    pub clusters: usize,
    pub splicing_trained: bool,
}

impl Report {
    pub fn mean(&self, detector: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.image_id == "mean" && r.detector == detector)
            .map(|r| r.scores.f_measure)
    }
}

pub fn format_report(rows: &[ReportRow]) -> String {
    let mut wr = csv::Writer::from_writer(Vec::new());
    wr.write_record(["image_id", "detector", "precision", "recall", "f_measure"]).expect("in-memory write");
    for r in rows {
        wr.write_record([
            r.image_id.clone(),
            r.detector.to_string(),
            format!("{:.6}", r.scores.precision),
            format!("{:.6}", r.scores.recall),
            format!("{:.6}", r.scores.f_measure),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(wr.into_inner().expect("in-memory flush")).expect("ascii csv")
}

/// Appends one `mean` row per detector (averaging over images that have rows).
pub fn with_means(mut rows: Vec<ReportRow>) -> Vec<ReportRow> {
    rows.sort_by(|a, b| a.image_id.cmp(&b.image_id).then(detector_rank(a.detector).cmp(&detector_rank(b.detector))));
    let mut means = Vec::new();
    for d in DETECTORS {
        let sel: Vec<&Scores> = rows.iter().filter(|r| r.detector == d).map(|r| &r.scores).collect();
        if sel.is_empty() {
            continue;
        }
        let n = sel.len() as f64;
        means.push(ReportRow {
            image_id: "mean".into(),
            detector: d,
            scores: Scores {
                precision: sel.iter().map(|s| s.precision).sum::<f64>() / n,
                recall: sel.iter().map(|s| s.recall).sum::<f64>() / n,
                f_measure: sel.iter().map(|s| s.f_measure).sum::<f64>() / n,
            },
        });
    }
    rows.extend(means);
    rows
}

fn detector_rank(d: &str) -> usize {
    DETECTORS.iter().position(|&x| x == d).unwrap_or(DETECTORS.len())
}

fn load(row: &ManifestRow, config: &PipelineConfig) -> Result<(RgbImage, NoiseResidual)> {
    let image = read_rgb(&row.image_path)?;
    let residual = noise_residual_with(&image, config.denoise_strength)?;
    Ok((image, residual))
}

fn mkdir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Clusters same-sized training residuals, one clustering per image size. Fingerprints are
/// written under `dir` and read back, so detection uses exactly the stored values.
pub fn build_clusters(images: &[&RgbImage], residuals: &[&NoiseResidual], config: &PipelineConfig, dir: &Path) -> Result<ClusterSet> {
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, img) in images.iter().enumerate() {
        groups.entry(img.dims()).or_default().push(i);
    }
    mkdir(dir)?;
    let mut out = ClusterSet::default();
    for idx in groups.values() {
        let imgs: Vec<RgbImage> = idx.iter().map(|&i| images[i].clone()).collect();
        let res: Vec<NoiseResidual> = idx.iter().map(|&i| residuals[i].clone()).collect();
        let set = cluster_residuals(&res, &imgs, &config.cluster_params())?;
        for mut c in set.clusters {
            let id = out.clusters.len();
            let path = dir.join(format!("cluster_{id:03}.prnu"));
            c.fingerprint.id = id;
            write_fingerprint(&path, &c.fingerprint)?;
            c.fingerprint = read_fingerprint(&path, id)?;
            c.members = c.members.iter().map(|&m| idx[m]).collect();
            out.clusters.push(c);
        }
        out.leftovers.extend(set.leftovers.iter().map(|&m| idx[m]));
    }
    out.leftovers.sort_unstable();
    Ok(out)
}

/// Trains the splicing classifier; `None` when the samples hold only one class. The model is
/// written to `path` and read back.
pub fn build_splicing_model(samples: &[(RgbImage, TamperMask)], config: &PipelineConfig, path: &Path) -> Result<Option<LinearModel>> {
    let (features, labels) = match collect_training_blocks(samples, config.block, config.stride, config.seed) {
        Ok(v) => v,
        Err(Error::SingleClass) | Err(Error::EmptyInput(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let model = train_model(&features, &labels, &config.train_params())?;
    write_model(path, &model)?;
    Ok(Some(read_model(path)?))
}

/// Full batch run over a manifest: cluster → fingerprints → splicing training → per-image
/// detection and fusion → masks and (with truth) a CSV report under `config.output_dir`.
///
/// Rows with `split = train` train the models and the others are analyzed; without any
/// train rows every image serves both roles.
pub fn run_pipeline(config: &PipelineConfig, manifest: impl AsRef<Path>) -> Result<Report> {
    config.validate()?;
    let rows = read_manifest(manifest)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput("manifest"));
    }
    let out = &config.output_dir;
    mkdir(out)?;
    let mut report = Report::default();

    let has_train = rows.iter().any(ManifestRow::is_train);
    let train_rows: Vec<&ManifestRow> = rows.iter().filter(|r| !has_train || r.is_train()).collect();
    let detect_rows: Vec<&ManifestRow> = rows.iter().filter(|r| !has_train || !r.is_train()).collect();

    let mut cache: HashMap<String, (RgbImage, NoiseResidual)> = HashMap::new();
    for (row, loaded) in train_rows.iter().zip(par::map(&train_rows, |r| load(r, config))) {
        match loaded {
            Ok(v) => {
                cache.insert(row.image_id.clone(), v);
            }
            Err(e) => report.errors.push((row.image_id.clone(), e.to_string())),
        }
    }
    let train_ok: Vec<&ManifestRow> = train_rows.iter().copied().filter(|r| cache.contains_key(&r.image_id)).collect();
    if train_ok.is_empty() {
        return Err(Error::EmptyInput("readable training images"));
    }
    let images: Vec<&RgbImage> = train_ok.iter().map(|r| &cache[&r.image_id].0).collect();
    let residuals: Vec<&NoiseResidual> = train_ok.iter().map(|r| &cache[&r.image_id].1).collect();
    let clusters = build_clusters(&images, &residuals, config, &out.join("fingerprints"))?;
    report.clusters = clusters.clusters.len();

    let mut samples = Vec::new();
    for r in &train_ok {
        let usable = matches!(r.kind.as_deref(), None | Some("splice") | Some("pristine"));
        if let (true, Some(t)) = (usable, &r.truth_path) {
            match read_mask(t, MaskSource::GroundTruth) {
                Ok(m) => samples.push((cache[&r.image_id].0.clone(), m)),
                Err(e) => report.errors.push((r.image_id.clone(), e.to_string())),
            }
        }
    }
    let splicing = build_splicing_model(&samples, config, &out.join("splicing.svm"))?;
    report.splicing_trained = splicing.is_some();
    drop(samples);
    let models = Models { clusters, splicing };

    let mask_dirs: Vec<PathBuf> = DETECTORS.iter().map(|d| out.join("masks").join(d)).collect();
    for d in &mask_dirs {
        mkdir(d)?;
    }
    let results = par::map(&detect_rows, |row| -> Result<(Association, Option<Vec<ReportRow>>)> {
        let owned;
        let (image, residual) = match cache.get(&row.image_id) {
            Some((i, r)) => (i, r),
            None => {
                owned = load(row, config)?;
                (&owned.0, &owned.1)
            }
        };
        let det = detect_image(image, residual, &models, config)?;
        let masks = det.masks();
        for (dir, m) in mask_dirs.iter().zip(&masks) {
            write_mask(dir.join(format!("{}.png", row.image_id)), m)?;
        }
        let scored = match &row.truth_path {
            Some(t) => {
                let truth = read_mask(t, MaskSource::GroundTruth)?;
                let mut rows = Vec::new();
                for (d, m) in DETECTORS.iter().zip(&masks) {
                    rows.push(ReportRow {
                        image_id: row.image_id.clone(),
                        detector: d,
                        scores: evaluate(m, &truth)?,
                    });
                }
                Some(rows)
            }
            None => None,
        };
        Ok((det.association, scored))
    });

    let mut entries = Vec::new();
    let mut rows_out = Vec::new();
    for (row, res) in detect_rows.iter().zip(results) {
        match res {
            Ok((assoc, scored)) => {
                entries.push(ManifestEntry {
                    image_id: row.image_id.clone(),
                    cluster: assoc.cluster,
                    best_pce: assoc.pce,
                });
                rows_out.extend(scored.unwrap_or_default());
            }
            Err(e) => report.errors.push((row.image_id.clone(), e.to_string())),
        }
    }
    entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    write_cluster_manifest(out.join("clusters.txt"), &entries)?;
    report.rows = with_means(rows_out);
    if !report.rows.is_empty() {
        let p = out.join("report.csv");
        fs::write(&p, format_report(&report.rows)).map_err(|e| Error::io(&p, e))?;
    }
    report.errors.sort();
    if !report.errors.is_empty() {
        let text: String = report.errors.iter().map(|(id, e)| format!("{id}\t{e}\n")).collect();
        let p = out.join("errors.txt");
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    Ok(report)
}
