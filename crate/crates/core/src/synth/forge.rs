use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imgcore::{MaskSource, RgbImage, TamperMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForgeryKind {
    CopyMove,
    Splice,
    /// Target region covered with many small patches copied from elsewhere in the image.
    InpaintLike,
}

impl ForgeryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ForgeryKind::CopyMove => "copymove",
            ForgeryKind::Splice => "splice",
            ForgeryKind::InpaintLike => "inpaint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.width && y >= self.y && y < self.y + self.height
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.width > 0 && self.height > 0 && self.x + self.width <= width && self.y + self.height <= height
    }

    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x + other.width
            && other.x < self.x + self.width
            && self.y < other.y + other.height
            && other.y < self.y + self.height
    }
}

/// Geometry of one synthetic manipulation.
///
/// `source` is read from the host (copy-move) or donor (splice) and pasted, rotated by
/// `rotation_deg` and scaled by `scale` about its center, with the bounding box of the
/// result at `target`. For inpainting `source` only supplies the size of the covered area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForgerySpec {
    pub kind: ForgeryKind,
    pub source: Rect,
    pub target: (usize, usize),
    pub rotation_deg: f64,
    pub scale: f64,
}

impl ForgerySpec {
    pub fn copy_move(source: Rect, target: (usize, usize)) -> Self {
        Self {
            kind: ForgeryKind::CopyMove,
            source,
            target,
            rotation_deg: 0.0,
            scale: 1.0,
        }
    }

    pub fn splice(source: Rect, target: (usize, usize), scale: f64) -> Self {
        Self {
            kind: ForgeryKind::Splice,
            source,
            target,
            rotation_deg: 0.0,
            scale,
        }
    }

    pub fn inpaint(size: (usize, usize), target: (usize, usize)) -> Self {
        Self {
            kind: ForgeryKind::InpaintLike,
            source: Rect::new(0, 0, size.0, size.1),
            target,
            rotation_deg: 0.0,
            scale: 1.0,
        }
    }

    pub fn with_rotation(mut self, degrees: f64) -> Self {
        self.rotation_deg = degrees;
        self
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    fn trig(&self) -> (f64, f64) {
        let t = self.rotation_deg.to_radians();
        let snap = |v: f64| if (v - v.round()).abs() < 1e-12 { v.round() } else { v };
        (snap(t.cos()), snap(t.sin()))
    }

    /// Bounding box of the pasted region.
    pub fn target_rect(&self) -> Rect {
        let (w, h) = (self.source.width as f64 * self.scale, self.source.height as f64 * self.scale);
        if self.kind == ForgeryKind::InpaintLike {
            return Rect::new(self.target.0, self.target.1, self.source.width, self.source.height);
        }
        let (c, s) = self.trig();
        let bw = (w * c.abs() + h * s.abs()).round().max(1.0) as usize;
        let bh = (w * s.abs() + h * c.abs()).round().max(1.0) as usize;
        Rect::new(self.target.0, self.target.1, bw, bh)
    }

    /// Source-image coordinates sampled for target pixel `(x, y)`, or `None` outside the footprint.
    pub fn source_point(&self, x: usize, y: usize) -> Option<(f64, f64)> {
        let t = self.target_rect();
        if !t.contains(x, y) {
            return None;
        }
        let (c, s) = self.trig();
        let ctx = t.x as f64 + (t.width as f64 - 1.0) / 2.0;
        let cty = t.y as f64 + (t.height as f64 - 1.0) / 2.0;
        let (dx, dy) = (x as f64 - ctx, y as f64 - cty);
        // Inverse rotation, then inverse scale.
        let ux = (c * dx + s * dy) / self.scale;
        let uy = (-s * dx + c * dy) / self.scale;
        let src = self.source;
        let csx = src.x as f64 + (src.width as f64 - 1.0) / 2.0;
        let csy = src.y as f64 + (src.height as f64 - 1.0) / 2.0;
        let eps = 1e-9;
        if ux.abs() > src.width as f64 / 2.0 + eps || uy.abs() > src.height as f64 / 2.0 + eps {
            return None;
        }
        let sx = (csx + ux).clamp(src.x as f64, (src.x + src.width - 1) as f64);
        let sy = (csy + uy).clamp(src.y as f64, (src.y + src.height - 1) as f64);
        Some((sx, sy))
    }

    /// Exact tampered area for an image of the given size.
    pub fn truth(&self, width: usize, height: usize) -> TamperMask {
        if self.kind == ForgeryKind::InpaintLike {
            let t = self.target_rect();
            return TamperMask::rect(width, height, t.x, t.y, t.width, t.height, MaskSource::GroundTruth);
        }
        TamperMask::from_fn(width, height, MaskSource::GroundTruth, |x, y| self.source_point(x, y).is_some())
    }
}

/// Applies a manipulation and returns the forged image with its exact truth mask.
///
/// The pasted pixels are copied verbatim (or resampled), so they carry the source's sensor
/// pattern, not the host's.
pub fn forge(image: &RgbImage, donor: Option<&RgbImage>, spec: &ForgerySpec, seed: u64) -> Result<(RgbImage, TamperMask)> {
    let (w, h) = image.dims();
    if !(spec.scale > 0.0 && spec.scale.is_finite()) {
        return Err(Error::invalid(format!("forgery scale must be positive, got {}", spec.scale)));
    }
    let target = spec.target_rect();
    if !target.fits(w, h) {
        return Err(Error::invalid(format!("target {target:?} outside {w}x{h} image")));
    }
    match spec.kind {
        ForgeryKind::CopyMove | ForgeryKind::Splice => {
            let src_img = match (spec.kind, donor) {
                (ForgeryKind::Splice, Some(d)) => d,
                (ForgeryKind::Splice, None) => return Err(Error::invalid("splice needs a donor image")),
                _ => image,
            };
            if !spec.source.fits(src_img.width(), src_img.height()) {
                return Err(Error::invalid(format!("source {:?} outside the source image", spec.source)));
            }
            let mut out = image.clone();
            for y in target.y..target.y + target.height {
                for x in target.x..target.x + target.width {
                    if let Some((sx, sy)) = spec.source_point(x, y) {
                        let v = [0, 1, 2].map(|c| src_img.channel(c).bilinear(sx, sy));
                        out.set_pixel(x, y, v);
                    }
                }
            }
            Ok((out, spec.truth(w, h)))
        }
        ForgeryKind::InpaintLike => {
            const TILE: usize = 16;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = image.clone();
            let mut ty = target.y;
            while ty < target.y + target.height {
                let th = TILE.min(target.y + target.height - ty);
                let mut tx = target.x;
                while tx < target.x + target.width {
                    let tw = TILE.min(target.x + target.width - tx);
                    let (sx, sy) = pick_tile_source(&mut rng, w, h, tw, th, &target)?;
                    for dy in 0..th {
                        for dx in 0..tw {
                            out.set_pixel(tx + dx, ty + dy, image.pixel(sx + dx, sy + dy));
                        }
                    }
                    tx += tw;
                }
                ty += th;
            }
            Ok((out, spec.truth(w, h)))
        }
    }
}

fn pick_tile_source(rng: &mut impl Rng, w: usize, h: usize, tw: usize, th: usize, avoid: &Rect) -> Result<(usize, usize)> {
    for _ in 0..10_000 {
        let x = rng.random_range(0..=w - tw);
        let y = rng.random_range(0..=h - th);
        if !Rect::new(x, y, tw, th).overlaps(avoid) {
            return Ok((x, y));
        }
    }
    Err(Error::invalid("no room outside the inpainted region to draw tiles from"))
}
