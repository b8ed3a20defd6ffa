use crate::error::Result;
use crate::imgcore::{Plane, RgbImage, LUMA_WEIGHTS};
use crate::par;

use super::denoise::denoise;

/// Zero-mean noise residual `r = y - f(y)` of an image, collapsed to one band.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseResidual {
    plane: Plane,
}

impl NoiseResidual {
    /// Wraps an already computed residual plane.
    pub fn from_plane(plane: Plane) -> Self {
        Self { plane }
    }

    pub fn plane(&self) -> &Plane {
        &self.plane
    }

    pub fn source_dims(&self) -> (usize, usize) {
        self.plane.dims()
    }
}

pub fn noise_residual(image: &RgbImage) -> Result<NoiseResidual> {
    noise_residual_with(image, 1.0)
}

/// Per-channel residuals against the nonlocal-means estimate, combined with the
/// luminance weights and made zero-mean.
pub fn noise_residual_with(image: &RgbImage, strength: f64) -> Result<NoiseResidual> {
    let channels: Vec<&Plane> = image.channels().iter().collect();
    let denoised = par::map(&channels, |c| denoise(c, strength));
    let (w, h) = image.dims();
    let mut out = vec![0.0; w * h];
    for ((channel, est), weight) in channels.iter().zip(denoised).zip(LUMA_WEIGHTS) {
        let est = est?;
        for ((o, y), e) in out.iter_mut().zip(channel.data()).zip(est.data()) {
            *o += weight * (y - e);
        }
    }
    let mean = out.iter().sum::<f64>() / out.len() as f64;
    out.iter_mut().for_each(|v| *v -= mean);
    Ok(NoiseResidual {
        plane: Plane::from_raw(w, h, out),
    })
}
