use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{Plane, RgbImage};

use super::residual::NoiseResidual;

/// Camera PRNU estimate kept as its weighted-average numerator and denominator, so that
/// estimates can be accumulated and persisted exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub id: usize,
    numerator: Plane,
    denominator: Plane,
    members: usize,
}

impl Fingerprint {
    pub fn from_parts(id: usize, numerator: Plane, denominator: Plane, members: usize) -> Result<Self> {
        ensure_same_dims(numerator.dims(), denominator.dims())?;
        if members == 0 {
            return Err(Error::invalid("fingerprint needs at least one member"));
        }
        if denominator.data().iter().any(|&d| d < 0.0) {
            return Err(Error::invalid("fingerprint denominator must be non-negative"));
        }
        Ok(Self {
            id,
            numerator,
            denominator,
            members,
        })
    }

    pub fn numerator(&self) -> &Plane {
        &self.numerator
    }

    pub fn denominator(&self) -> &Plane {
        &self.denominator
    }

    pub fn members(&self) -> usize {
        self.members
    }

    pub fn dims(&self) -> (usize, usize) {
        self.numerator.dims()
    }

    /// Pointwise `numerator / denominator`, zero where nothing was accumulated.
    pub fn estimate(&self) -> Plane {
        self.numerator
            .zip_map(&self.denominator, |n, d| if d > 0.0 { n / d } else { 0.0 })
            .expect("dimensions checked at construction")
    }

    /// The PRNU term expected in an image from this camera: `k̂ · y`.
    pub fn expected_pattern(&self, luminance: &Plane) -> Result<Plane> {
        self.estimate().zip_map(luminance, |k, y| k * y)
    }
}

/// Weighted estimate `k̂ = Σ y_j r_j / Σ y_j²` with `y_j` the member luminance, so dark
/// images (weak PRNU) contribute less.
pub fn estimate_fingerprint<'a>(
    members: impl IntoIterator<Item = (&'a RgbImage, &'a NoiseResidual)>,
) -> Result<Fingerprint> {
    let mut numerator: Option<Vec<f64>> = None;
    let mut denominator = Vec::new();
    let mut dims = (0, 0);
    let mut count = 0;
    for (image, residual) in members {
        ensure_same_dims(image.dims(), residual.source_dims())?;
        let y = image.luminance();
        let num = numerator.get_or_insert_with(|| {
            dims = image.dims();
            denominator = vec![0.0; y.len()];
            vec![0.0; y.len()]
        });
        ensure_same_dims(dims, image.dims())?;
        for (i, (&yv, &rv)) in y.data().iter().zip(residual.plane().data()).enumerate() {
            num[i] += yv * rv;
            denominator[i] += yv * yv;
        }
        count += 1;
    }
    let numerator = numerator.ok_or(Error::EmptyInput("fingerprint members"))?;
    Fingerprint::from_parts(
        0,
        Plane::new(dims.0, dims.1, numerator)?,
        Plane::new(dims.0, dims.1, denominator)?,
        count,
    )
}
