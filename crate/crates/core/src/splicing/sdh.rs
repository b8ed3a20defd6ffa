use crate::error::{Error, Result};
use crate::imgcore::{morph_clean, MaskSource, Plane, RgbImage, TamperMask};
use crate::par;

use super::features::block_features;
use super::labels::block_origins;
use super::model::LinearModel;

/// Per-pixel sum of signed hyperplane distances of all covering blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SdhMap {
    pub plane: Plane,
    pub coverage: Vec<u32>,
}

/// Classifies every `block`×`block` window on a `stride` grid (plus border-aligned blocks)
/// and accumulates their distances onto the pixels they cover.
pub fn sdh_map(image: &RgbImage, model: &LinearModel, block: usize, stride: usize) -> Result<SdhMap> {
    let (w, h) = image.dims();
    if block < 4 || stride == 0 || w < block || h < block {
        return Err(Error::invalid(format!("image {w}x{h} is smaller than the {block}-pixel block")));
    }
    let lum = image.luminance();
    let origins = block_origins(w, h, block, stride);
    let distances = par::map(&origins, |&o| model.distance(&block_features(&lum, o, block).bins));
    let mut sum = vec![0.0; w * h];
    let mut coverage = vec![0u32; w * h];
    for (&(x0, y0), &d) in origins.iter().zip(&distances) {
        for y in y0..y0 + block {
            let row = y * w;
            for x in x0..x0 + block {
                sum[row + x] += d;
                coverage[row + x] += 1;
            }
        }
    }
    Ok(SdhMap {
        plane: Plane::from_raw(w, h, sum),
        coverage,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplicingMaskParams {
    pub fraction: f64,
    pub morph_radius: usize,
    pub min_area: usize,
}

impl Default for SplicingMaskParams {
    fn default() -> Self {
        Self {
            fraction: 0.25,
            morph_radius: 3,
            min_area: 1000,
        }
    }
}

/// Pixels whose clamped SDH exceeds `fraction · max(SDH)`.
pub fn splicing_mask(map: &SdhMap, params: &SplicingMaskParams) -> Result<TamperMask> {
    if !(params.fraction > 0.0 && params.fraction < 1.0) {
        return Err(Error::invalid(format!("SDH fraction must lie in (0, 1), got {}", params.fraction)));
    }
    let (w, h) = map.plane.dims();
    let max = map.plane.data().iter().fold(0.0f64, |m, &v| m.max(v));
    if max <= 0.0 {
        return Ok(TamperMask::genuine(w, h, MaskSource::Splicing));
    }
    let cut = params.fraction * max;
    let raw = TamperMask::from_fn(w, h, MaskSource::Splicing, |x, y| map.plane.get(x, y).max(0.0) > cut);
    Ok(morph_clean(&raw, params.morph_radius, params.min_area))
}
