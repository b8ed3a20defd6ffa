use crate::error::{ensure_same_dims, Result};
use crate::imgcore::{morph_clean, MaskSource, Plane, RgbImage, TamperMask};

use super::correlation::{pce, windowed_correlation, CorrelationField};
use super::fingerprint::Fingerprint;
use super::residual::NoiseResidual;

/// Correlation between the residual and `z = k̂·y` over a sliding `window` at every pixel.
pub fn correlation_field(
    image: &RgbImage,
    residual: &NoiseResidual,
    fingerprint: &Fingerprint,
    window: usize,
    exclusion_radius: usize,
) -> Result<CorrelationField> {
    ensure_same_dims(fingerprint.dims(), image.dims())?;
    ensure_same_dims(residual.source_dims(), image.dims())?;
    let z = fingerprint.expected_pattern(&image.luminance())?;
    let (plane, degenerate_pixels) = windowed_correlation(residual.plane(), &z, window)?;
    Ok(CorrelationField {
        plane,
        window,
        pce: pce(residual, &z, exclusion_radius)?,
        degenerate_pixels,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrnuMaskParams {
    pub base_threshold: f64,
    /// PCE at which the threshold equals `base_threshold`.
    pub pce_ref: f64,
    pub saturation_level: f64,
    pub morph_radius: usize,
    pub min_area: usize,
}

impl Default for PrnuMaskParams {
    fn default() -> Self {
        Self {
            base_threshold: 0.8,
            pce_ref: 500.0,
            saturation_level: 250.0,
            morph_radius: 3,
            min_area: 1000,
        }
    }
}

impl PrnuMaskParams {
    /// `base · clamp(pce_ref / pce, 0.5, 2)`.
    pub fn threshold(&self, pce: f64) -> f64 {
        let ratio = if pce > 0.0 { self.pce_ref / pce } else { f64::INFINITY };
        self.base_threshold * ratio.clamp(0.5, 2.0)
    }
}

/// Pixels whose whole 3×3 neighbourhood (clipped at borders) has luminance at or above `level`.
pub fn saturated_pixels(luminance: &Plane, level: f64) -> Vec<bool> {
    let (w, h) = luminance.dims();
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut all = true;
            'n: for ny in y.saturating_sub(1)..(y + 2).min(h) {
                for nx in x.saturating_sub(1)..(x + 2).min(w) {
                    if luminance.get(nx, ny) < level {
                        all = false;
                        break 'n;
                    }
                }
            }
            out[y * w + x] = all;
        }
    }
    out
}

/// Thresholds the correlation field with a PCE-adaptive threshold. Saturated areas carry no
/// PRNU and are always declared genuine.
pub fn prnu_mask(field: &CorrelationField, image: &RgbImage, params: &PrnuMaskParams) -> Result<TamperMask> {
    ensure_same_dims(field.plane.dims(), image.dims())?;
    let (w, h) = image.dims();
    let t = params.threshold(field.pce);
    let saturated = saturated_pixels(&image.luminance(), params.saturation_level);
    let bits = field
        .plane
        .data()
        .iter()
        .zip(&saturated)
        .map(|(&rho, &sat)| rho < t && !sat)
        .collect();
    let raw = TamperMask::from_bits(w, h, bits, MaskSource::Prnu)?;
    let mut cleaned = morph_clean(&raw, params.morph_radius, params.min_area);
    // Closing can bridge into saturated areas; re-apply the override.
    for (b, &sat) in cleaned.bits_mut().iter_mut().zip(&saturated) {
        *b &= !sat;
    }
    Ok(cleaned)
}
