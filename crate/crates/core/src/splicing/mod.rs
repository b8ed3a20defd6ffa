//! Splicing localization: third-order residual co-occurrences classified block-wise by a
//! linear max-margin model and aggregated into a sum-of-distances map.

mod features;
mod labels;
mod model;
mod sdh;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use features::{gram_index, residual_features, FeatureVector, BLOCK, FEATURE_DIM, T};
pub use labels::{block_origins, label_blocks, BlockLabel};
pub use model::{decode_model, encode_model, read_model, train_model, train_model_traced, write_model, LinearModel, TrainParams};
pub use sdh::{sdh_map, splicing_mask, SdhMap, SplicingMaskParams};

use crate::error::{Error, Result};
use crate::imgcore::{RgbImage, TamperMask};
use crate::par;

pub const DEFAULT_STRIDE: usize = 16;

/// Labeled blocks from `(image, truth)` pairs, balanced by subsampling the larger class.
pub fn collect_training_blocks(
    samples: &[(RgbImage, TamperMask)],
    block: usize,
    stride: usize,
    seed: u64,
) -> Result<(Vec<FeatureVector>, Vec<bool>)> {
    let per_image = par::map(samples, |(image, truth)| -> Result<Vec<(FeatureVector, bool)>> {
        if image.dims() != truth.dims() {
            return Err(Error::DimensionMismatch {
                expected: image.dims(),
                actual: truth.dims(),
            });
        }
        let lum = image.luminance();
        Ok(label_blocks(truth, block, stride)?
            .into_iter()
            .filter(|(_, l)| *l != BlockLabel::Skip)
            .map(|(o, l)| (features::block_features(&lum, o, block), l == BlockLabel::Fake))
            .collect())
    });
    let mut fake = Vec::new();
    let mut pristine = Vec::new();
    for blocks in per_image {
        for (f, is_fake) in blocks? {
            if is_fake {
                fake.push(f);
            } else {
                pristine.push(f);
            }
        }
    }
    let n = fake.len().min(pristine.len());
    if n == 0 {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fake.shuffle(&mut rng);
    pristine.shuffle(&mut rng);
    fake.truncate(n);
    pristine.truncate(n);
    let labels = std::iter::repeat_n(true, n).chain(std::iter::repeat_n(false, n)).collect();
    Ok((fake.into_iter().chain(pristine).collect(), labels))
}

/// `(image path, truth path)` rows from a headered CSV with `image_path` and `truth_path`
/// columns; relative paths resolve against the manifest's directory.
pub fn read_training_manifest(path: impl AsRef<Path>) -> Result<Vec<(PathBuf, PathBuf)>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new("."));
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = rd.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::format(path, format!("missing column {name}")))
    };
    let (ci, ct) = (col("image_path")?, col("truth_path")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let get = |i: usize| rec.get(i).map(str::trim).unwrap_or("");
        if get(ct).is_empty() {
            continue;
        }
        out.push((base.join(get(ci)), base.join(get(ct))));
    }
    Ok(out)
}
