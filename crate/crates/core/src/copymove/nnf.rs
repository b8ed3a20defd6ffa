//! PatchMatch nearest-neighbour fields over mean-normalized RGB patches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imgcore::RgbImage;

use super::transform::Warp;

/// Per-pixel displacement to the best-matching patch and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetField {
    width: usize,
    height: usize,
    offsets: Vec<(i32, i32)>,
    costs: Vec<f64>,
}

impl OffsetField {
    pub fn new(width: usize, height: usize, offsets: Vec<(i32, i32)>, costs: Vec<f64>) -> Result<Self> {
        if offsets.len() != width * height || costs.len() != width * height {
            return Err(Error::invalid("offset field buffers do not match its dimensions"));
        }
        Ok(Self {
            width,
            height,
            offsets,
            costs,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn offset(&self, x: usize, y: usize) -> (i32, i32) {
        self.offsets[y * self.width + x]
    }

    #[inline]
    pub fn cost(&self, x: usize, y: usize) -> f64 {
        self.costs[y * self.width + x]
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn mean_cost(&self) -> f64 {
        self.costs.iter().sum::<f64>() / self.costs.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnfParams {
    pub patch: usize,
    pub iterations: usize,
    pub min_displacement: f64,
    pub seed: u64,
}

impl Default for NnfParams {
    fn default() -> Self {
        Self {
            patch: 7,
            iterations: 5,
            min_displacement: 8.0,
            seed: 0,
        }
    }
}

/// Interleaved channels per pixel in [`PatchImage`].
const LANES: usize = 3;

/// Edge-replicated, channel-interleaved image with per-pixel patch means.
pub(crate) struct PatchImage {
    width: usize,
    height: usize,
    radius: usize,
    stride: usize,
    data: Vec<f32>,
    means: Vec<[f32; LANES]>,
}

impl PatchImage {
    pub(crate) fn new(image: &RgbImage, patch: usize) -> Self {
        let (w, h) = image.dims();
        let r = patch / 2;
        let stride = w + 2 * r;
        let ph = h + 2 * r;
        let mut data = vec![0f32; stride * ph * LANES];
        for py in 0..ph {
            let sy = (py as isize - r as isize).clamp(0, h as isize - 1) as usize;
            for px in 0..stride {
                let sx = (px as isize - r as isize).clamp(0, w as isize - 1) as usize;
                let p = image.pixel(sx, sy);
                let o = (py * stride + px) * LANES;
                for c in 0..3 {
                    data[o + c] = p[c] as f32;
                }
            }
        }
        // Patch means from a summed-area table over the padded planes.
        let side = 2 * r + 1;
        let mut means = vec![[0f32; LANES]; w * h];
        let s1 = stride + 1;
        for c in 0..3 {
            let mut sat = vec![0f64; s1 * (ph + 1)];
            for y in 0..ph {
                let mut row = 0.0;
                for x in 0..stride {
                    row += data[(y * stride + x) * LANES + c] as f64;
                    sat[(y + 1) * s1 + x + 1] = sat[y * s1 + x + 1] + row;
                }
            }
            let n = (side * side) as f64;
            for y in 0..h {
                for x in 0..w {
                    let (x1, y1) = (x + side, y + side);
                    let s = sat[y1 * s1 + x1] - sat[y * s1 + x1] - sat[y1 * s1 + x] + sat[y * s1 + x];
                    means[y * w + x][c] = (s / n) as f32;
                }
            }
        }
        Self {
            width: w,
            height: h,
            radius: r,
            stride,
            data,
            means,
        }
    }

    pub(crate) fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// SSD between mean-removed patches at `p` in `a` and `q` in `b`, summed over channels.
/// Stops early once the running sum reaches `bound`.
#[inline]
pub(crate) fn patch_cost(a: &PatchImage, p: (usize, usize), b: &PatchImage, q: (usize, usize), bound: f32) -> f32 {
    match a.radius {
        1 => cost_fixed::<3>(a, p, b, q, bound),
        2 => cost_fixed::<5>(a, p, b, q, bound),
        3 => cost_fixed::<7>(a, p, b, q, bound),
        4 => cost_fixed::<9>(a, p, b, q, bound),
        _ => cost_any(a, p, b, q, bound),
    }
}

#[inline]
fn mean_delta(a: &PatchImage, p: (usize, usize), b: &PatchImage, q: (usize, usize)) -> [f32; LANES] {
    let ma = a.means[p.1 * a.width + p.0];
    let mb = b.means[q.1 * b.width + q.0];
    [ma[0] - mb[0], ma[1] - mb[1], ma[2] - mb[2]]
}

#[inline]
fn cost_fixed<const SIDE: usize>(a: &PatchImage, p: (usize, usize), b: &PatchImage, q: (usize, usize), bound: f32) -> f32 {
    let dm = mean_delta(a, p, b, q);
    let mut acc = 0f32;
    for dy in 0..SIDE {
        let ra = ((p.1 + dy) * a.stride + p.0) * LANES;
        let rb = ((q.1 + dy) * b.stride + q.0) * LANES;
        let row_a: &[f32] = &a.data[ra..ra + SIDE * LANES];
        let row_b: &[f32] = &b.data[rb..rb + SIDE * LANES];
        let mut lanes = [0f32; LANES];
        for k in 0..SIDE {
            for l in 0..LANES {
                let d = row_a[k * LANES + l] - row_b[k * LANES + l] - dm[l];
                lanes[l] += d * d;
            }
        }
        acc += lanes[0] + lanes[1] + lanes[2];
        if acc >= bound {
            return acc;
        }
    }
    acc
}

fn cost_any(a: &PatchImage, p: (usize, usize), b: &PatchImage, q: (usize, usize), bound: f32) -> f32 {
    let side = 2 * a.radius + 1;
    let dm = mean_delta(a, p, b, q);
    let mut acc = 0f32;
    for dy in 0..side {
        let ra = ((p.1 + dy) * a.stride + p.0) * LANES;
        let rb = ((q.1 + dy) * b.stride + q.0) * LANES;
        let mut lanes = [0f32; LANES];
        for k in 0..side {
            for l in 0..LANES {
                let d = a.data[ra + k * LANES + l] - b.data[rb + k * LANES + l] - dm[l];
                lanes[l] += d * d;
            }
        }
        acc += lanes[0] + lanes[1] + lanes[2];
        if acc >= bound {
            return acc;
        }
    }
    acc
}

/// Incremental PatchMatch from a source image into a (possibly warped) target image.
///
/// A target `q` is legal for source pixel `p` when it lies inside the target and, mapped
/// back to source coordinates, is at least `min_displacement` away from `p`.
pub struct PatchMatch {
    src: PatchImage,
    dst: PatchImage,
    warp: Warp,
    min_disp_sq: f64,
    offsets: Vec<(i32, i32)>,
    costs: Vec<f32>,
    rng: ChaCha8Rng,
    round: usize,
}

impl PatchMatch {
    pub fn new(image: &RgbImage, warp: Warp, params: &NnfParams) -> Result<Self> {
        validate(image, params)?;
        let src = PatchImage::new(image, params.patch);
        let target = warp.apply(image);
        let (dw, dh) = target.dims();
        if dw <= params.patch || dh <= params.patch {
            return Err(Error::invalid(format!(
                "transformed image {dw}x{dh} is not larger than the {}-pixel patch",
                params.patch
            )));
        }
        let dst = PatchImage::new(&target, params.patch);
        let mut pm = Self {
            src,
            dst,
            warp,
            min_disp_sq: params.min_displacement * params.min_displacement,
            offsets: Vec::new(),
            costs: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            round: 0,
        };
        pm.initialize(params.min_displacement == 0.0)?;
        Ok(pm)
    }

    #[inline]
    fn legal(&self, p: (usize, usize), q: (i64, i64)) -> bool {
        let (dw, dh) = self.dst.dims();
        if q.0 < 0 || q.1 < 0 || q.0 >= dw as i64 || q.1 >= dh as i64 {
            return false;
        }
        if self.min_disp_sq == 0.0 {
            return true;
        }
        let (bx, by) = self.warp.inverse(q.0 as f64, q.1 as f64);
        let (dx, dy) = (bx - p.0 as f64, by - p.1 as f64);
        dx * dx + dy * dy >= self.min_disp_sq
    }

    fn initialize(&mut self, seed_self_match: bool) -> Result<()> {
        let (w, h) = self.src.dims();
        let (dw, dh) = self.dst.dims();
        self.offsets = Vec::with_capacity(w * h);
        self.costs = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let p = (x, y);
                let mut found = None;
                for _ in 0..64 {
                    let q = (self.rng.random_range(0..dw) as i64, self.rng.random_range(0..dh) as i64);
                    if self.legal(p, q) {
                        found = Some(q);
                        break;
                    }
                }
                let q = match found {
                    Some(q) => q,
                    None => self.first_legal(p).ok_or_else(|| {
                        Error::invalid(format!("minimum displacement leaves no legal match for pixel {p:?}"))
                    })?,
                };
                let mut best = (q, patch_cost(&self.src, p, &self.dst, (q.0 as usize, q.1 as usize), f32::INFINITY));
                if seed_self_match {
                    let (u, v) = self.warp.forward(x as f64, y as f64);
                    let s = (u.round() as i64, v.round() as i64);
                    if self.legal(p, s) {
                        let c = patch_cost(&self.src, p, &self.dst, (s.0 as usize, s.1 as usize), f32::INFINITY);
                        if self.warp.is_identity() || c < best.1 {
                            best = (s, c);
                        }
                    }
                }
                self.offsets.push(((best.0 .0 - x as i64) as i32, (best.0 .1 - y as i64) as i32));
                self.costs.push(best.1);
            }
        }
        Ok(())
    }

    fn first_legal(&self, p: (usize, usize)) -> Option<(i64, i64)> {
        let (dw, dh) = self.dst.dims();
        (0..dh as i64)
            .flat_map(|y| (0..dw as i64).map(move |x| (x, y)))
            .find(|&q| self.legal(p, q))
    }

    #[inline]
    fn try_candidate(&mut self, idx: usize, p: (usize, usize), q: (i64, i64)) {
        let cur = self.offsets[idx];
        if (q.0 - p.0 as i64, q.1 - p.1 as i64) == (cur.0 as i64, cur.1 as i64) || !self.legal(p, q) {
            return;
        }
        let bound = self.costs[idx];
        let c = patch_cost(&self.src, p, &self.dst, (q.0 as usize, q.1 as usize), bound);
        if c < bound {
            self.offsets[idx] = ((q.0 - p.0 as i64) as i32, (q.1 - p.1 as i64) as i32);
            self.costs[idx] = c;
        }
    }

    /// One propagation + random-search sweep. Even rounds scan forward and look left/up;
    /// odd rounds scan backward and look right/down.
    pub fn iterate(&mut self) {
        let (w, h) = self.src.dims();
        let (dw, dh) = self.dst.dims();
        let forward = self.round % 2 == 0;
        let step: i64 = if forward { -1 } else { 1 };
        for i in 0..w * h {
            let idx = if forward { i } else { w * h - 1 - i };
            let (x, y) = (idx % w, idx / w);
            let p = (x, y);
            let nx = x as i64 + step;
            if nx >= 0 && nx < w as i64 {
                let o = self.offsets[y * w + nx as usize];
                self.try_candidate(idx, p, (x as i64 + o.0 as i64, y as i64 + o.1 as i64));
            }
            let ny = y as i64 + step;
            if ny >= 0 && ny < h as i64 {
                let o = self.offsets[ny as usize * w + x];
                self.try_candidate(idx, p, (x as i64 + o.0 as i64, y as i64 + o.1 as i64));
            }
            let o = self.offsets[idx];
            let (cx, cy) = (x as i64 + o.0 as i64, y as i64 + o.1 as i64);
            let mut radius = dw.max(dh) as i64;
            while radius >= 1 {
                let qx = self.rng.random_range((cx - radius).max(0)..=(cx + radius).min(dw as i64 - 1));
                let qy = self.rng.random_range((cy - radius).max(0)..=(cy + radius).min(dh as i64 - 1));
                self.try_candidate(idx, p, (qx, qy));
                radius /= 2;
            }
        }
        self.round += 1;
    }

    pub fn costs(&self) -> Vec<f64> {
        self.costs.iter().map(|&c| c as f64).collect()
    }

    pub fn field(&self) -> OffsetField {
        let (w, h) = self.src.dims();
        OffsetField {
            width: w,
            height: h,
            offsets: self.offsets.clone(),
            costs: self.costs(),
        }
    }
}

fn validate(image: &RgbImage, params: &NnfParams) -> Result<()> {
    if params.patch == 0 || params.patch % 2 == 0 {
        return Err(Error::invalid(format!("patch size must be odd, got {}", params.patch)));
    }
    if params.iterations == 0 {
        return Err(Error::invalid("PatchMatch needs at least one iteration"));
    }
    if !(params.min_displacement >= 0.0 && params.min_displacement.is_finite()) {
        return Err(Error::invalid("minimum displacement must be non-negative"));
    }
    let (w, h) = image.dims();
    if w <= params.patch || h <= params.patch {
        return Err(Error::invalid(format!("image {w}x{h} is not larger than the {}-pixel patch", params.patch)));
    }
    Ok(())
}

/// Matches an image against itself; offsets never point closer than `min_displacement`.
pub fn compute_nnf(image: &RgbImage, params: &NnfParams) -> Result<OffsetField> {
    let warp = Warp::new(&super::TransformSpec::IDENTITY, image.dims());
    run(image, warp, params)
}

pub(crate) fn run(image: &RgbImage, warp: Warp, params: &NnfParams) -> Result<OffsetField> {
    let mut pm = PatchMatch::new(image, warp, params)?;
    for _ in 0..params.iterations {
        pm.iterate();
    }
    Ok(pm.field())
}
