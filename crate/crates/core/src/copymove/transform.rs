use crate::error::{Error, Result};
use crate::imgcore::RgbImage;

/// One point of the rotation/scale sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    /// Degrees, counter-clockwise in image coordinates (x right, y down).
    pub rotation: f64,
    pub scale: f64,
}

impl TransformSpec {
    pub const IDENTITY: TransformSpec = TransformSpec {
        rotation: 0.0,
        scale: 1.0,
    };

    pub fn new(rotation: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && rotation.is_finite()) {
            return Err(Error::invalid(format!("invalid transform rotation={rotation} scale={scale}")));
        }
        Ok(Self { rotation, scale })
    }

    pub fn is_identity(&self) -> bool {
        self.rotation.rem_euclid(360.0) == 0.0 && self.scale == 1.0
    }

    /// Rotations {0, 90, 180, 270} × scales {0.8, 1.0, 1.25}, identity first.
    pub fn default_sweep() -> Vec<TransformSpec> {
        let mut out = vec![Self::IDENTITY];
        for rotation in [0.0, 90.0, 180.0, 270.0] {
            for scale in [0.8, 1.0, 1.25] {
                let t = TransformSpec { rotation, scale };
                if !t.is_identity() {
                    out.push(t);
                }
            }
        }
        out
    }
}

/// Similarity mapping from original to transformed image coordinates, about the image centers.
#[derive(Debug, Clone, Copy)]
pub struct Warp {
    cos: f64,
    sin: f64,
    scale: f64,
    src_center: (f64, f64),
    dst_center: (f64, f64),
    pub dst_dims: (usize, usize),
    identity: bool,
}

impl Warp {
    pub fn new(spec: &TransformSpec, src_dims: (usize, usize)) -> Self {
        let t = spec.rotation.to_radians();
        let snap = |v: f64| if (v - v.round()).abs() < 1e-12 { v.round() } else { v };
        let (cos, sin) = (snap(t.cos()), snap(t.sin()));
        let (w, h) = (src_dims.0 as f64 * spec.scale, src_dims.1 as f64 * spec.scale);
        let dw = (w * cos.abs() + h * sin.abs()).round().max(1.0) as usize;
        let dh = (w * sin.abs() + h * cos.abs()).round().max(1.0) as usize;
        Self {
            cos,
            sin,
            scale: spec.scale,
            src_center: ((src_dims.0 as f64 - 1.0) / 2.0, (src_dims.1 as f64 - 1.0) / 2.0),
            dst_center: ((dw as f64 - 1.0) / 2.0, (dh as f64 - 1.0) / 2.0),
            dst_dims: (dw, dh),
            identity: spec.is_identity(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    #[inline]
    pub fn forward(&self, x: f64, y: f64) -> (f64, f64) {
        if self.identity {
            return (x, y);
        }
        let (dx, dy) = (x - self.src_center.0, y - self.src_center.1);
        (
            self.scale * (self.cos * dx - self.sin * dy) + self.dst_center.0,
            self.scale * (self.sin * dx + self.cos * dy) + self.dst_center.1,
        )
    }

    #[inline]
    pub fn inverse(&self, u: f64, v: f64) -> (f64, f64) {
        if self.identity {
            return (u, v);
        }
        let (du, dv) = (u - self.dst_center.0, v - self.dst_center.1);
        (
            (self.cos * du + self.sin * dv) / self.scale + self.src_center.0,
            (-self.sin * du + self.cos * dv) / self.scale + self.src_center.1,
        )
    }

    /// Bilinear resampling of `image` onto the transformed canvas.
    pub fn apply(&self, image: &RgbImage) -> RgbImage {
        if self.identity {
            return image.clone();
        }
        let (w, h) = self.dst_dims;
        RgbImage::from_fn(w, h, |u, v| {
            let (x, y) = self.inverse(u as f64, v as f64);
            [0, 1, 2].map(|c| image.channel(c).bilinear(x, y))
        })
    }
}
