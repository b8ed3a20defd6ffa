use std::collections::HashMap;

use crate::imgcore::{components, morph_clean, Integral, MaskSource, Plane, RgbImage, TamperMask};
use crate::prnu::{windowed_correlation_span, CorrelationField};

use super::filter::filter_offset_field;
use super::transform::{TransformSpec, Warp};
use super::OffsetField;

/// Which side of a duplicated pair is the original.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    ASource,
    BSource,
    Unknown,
}

/// Two matching regions: pixels `p` of `region_a` correspond to `p + offset` in the
/// transformed image, whose back-projection is `region_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyRegionPair {
    pub region_a: TamperMask,
    pub region_b: TamperMask,
    pub offset: (i32, i32),
    pub transform: TransformSpec,
    pub verification_corr: f64,
    pub role: Role,
}

impl CopyRegionPair {
    /// Dominant offset seen from `region_b`; exact negation for untransformed copies.
    pub fn mirror_offset(&self) -> (i32, i32) {
        (-self.offset.0, -self.offset.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionParams {
    pub coherence_window: usize,
    pub coherence_tolerance: u32,
    pub coherence_threshold: f64,
    pub corr_threshold: f64,
    /// Side of the square verification window.
    pub corr_window: usize,
    pub min_displacement: f64,
    pub flat_variance_floor: f64,
    pub morph_radius: usize,
    pub min_area: usize,
    /// Largest 3×3 standard deviation of the luminance difference for a pixel to join a
    /// verified region while growing it back to the region's true border.
    pub refine_tolerance: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            coherence_window: 9,
            coherence_tolerance: 2,
            coherence_threshold: 0.5,
            corr_threshold: 0.5,
            corr_window: 16,
            min_displacement: 8.0,
            flat_variance_floor: 1.0,
            morph_radius: 2,
            min_area: 1000,
            refine_tolerance: 1.5,
        }
    }
}

/// Variance of `plane` over the 7×7 neighbourhood of each pixel (clipped at borders).
fn local_variance(plane: &Plane) -> Vec<f64> {
    let (w, h) = plane.dims();
    let s = Integral::new(plane.data(), w, h);
    let sq: Vec<f64> = plane.data().iter().map(|v| v * v).collect();
    let s2 = Integral::new(&sq, w, h);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(3), (y + 4).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(3), (x + 4).min(w));
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            let m = s.rect(x0, y0, x1, y1) / n;
            out.push((s2.rect(x0, y0, x1, y1) / n - m * m).max(0.0));
        }
    }
    out
}

/// Luminance minus its 5×5 local mean; removes the smooth shading that would make any two
/// gradients look alike.
fn high_pass(lum: &Plane) -> Plane {
    let (w, h) = lum.dims();
    let s = Integral::new(lum.data(), w, h);
    Plane::from_fn(w, h, |x, y| {
        let (x0, x1) = (x.saturating_sub(2), (x + 3).min(w));
        let (y0, y1) = (y.saturating_sub(2), (y + 3).min(h));
        let n = ((x1 - x0) * (y1 - y0)) as f64;
        lum.get(x, y) - s.rect(x0, y0, x1, y1) / n
    })
}

/// Most frequent offset among `pixels`; ties go to the smallest `(dy, dx)`.
fn mode_offset(field: &OffsetField, pixels: &[usize]) -> (i32, i32) {
    let mut counts: HashMap<(i32, i32), usize> = HashMap::new();
    for &i in pixels {
        *counts.entry(field.offsets()[i]).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then((b.0 .1, b.0 .0).cmp(&(a.0 .1, a.0 .0))))
        .map(|(o, _)| o)
        .unwrap_or((0, 0))
}

struct Shared {
    lum: Plane,
    lum_hp: Plane,
    variance: Vec<f64>,
}

struct Warped {
    lum: Plane,
    hp: Plane,
}

/// Turns coherent areas of the offset fields into verified region pairs.
///
/// `fields` come from [`super::sweep_transforms`] on the same image.
pub fn extract_copy_regions(image: &RgbImage, fields: &[(TransformSpec, OffsetField)], params: &RegionParams) -> Vec<CopyRegionPair> {
    let (w, h) = image.dims();
    let lum = image.luminance();
    let shared = Shared {
        lum_hp: high_pass(&lum),
        variance: local_variance(&lum),
        lum,
    };
    let mut covered = vec![false; w * h];
    let mut pairs = Vec::new();
    for (spec, field) in fields {
        if field.dims() != (w, h) {
            continue;
        }
        let warp = Warp::new(spec, (w, h));
        let Ok(coherence) = filter_offset_field(field, params.coherence_window, params.coherence_tolerance) else {
            continue;
        };
        let seeds = TamperMask::from_fn(w, h, MaskSource::CopyMove, |x, y| {
            let i = y * w + x;
            coherence.data()[i] >= params.coherence_threshold
                && shared.variance[i] >= params.flat_variance_floor
                && displacement(&warp, (x, y), field.offset(x, y)) >= params.min_displacement
        });
        let mut comps = components(&seeds);
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
        let mut warped: Option<Warped> = None;
        for comp in comps {
            if comp.len() < params.min_area / 16 {
                break;
            }
            let already = comp.iter().filter(|&&i| covered[i]).count();
            if 2 * already >= comp.len() {
                continue;
            }
            let offset = mode_offset(field, &comp);
            let wl = warped.get_or_insert_with(|| {
                let lum = warp.apply(image).luminance();
                Warped { hp: high_pass(&lum), lum }
            });
            if let Some(pair) = verify(&shared, wl, &warp, *spec, offset, &comp, params) {
                for (i, c) in covered.iter_mut().enumerate() {
                    *c |= pair.region_a.bits()[i] || pair.region_b.bits()[i];
                }
                pairs.push(pair);
            }
        }
    }
    pairs
}

/// Source-space distance between `p` and its match.
fn displacement(warp: &Warp, p: (usize, usize), offset: (i32, i32)) -> f64 {
    let u = (p.0 as f64 + offset.0 as f64, p.1 as f64 + offset.1 as f64);
    let (bx, by) = warp.inverse(u.0, u.1);
    ((bx - p.0 as f64).powi(2) + (by - p.1 as f64).powi(2)).sqrt()
}

fn verify(
    shared: &Shared,
    warped: &Warped,
    warp: &Warp,
    spec: TransformSpec,
    offset: (i32, i32),
    seed: &[usize],
    params: &RegionParams,
) -> Option<CopyRegionPair> {
    let (w, h) = shared.lum_hp.dims();
    let (dw, dh) = warp.dst_dims;
    let target = |x: usize, y: usize| -> Option<(usize, usize)> {
        let (u, v) = (x as i64 + offset.0 as i64, y as i64 + offset.1 as i64);
        (u >= 0 && v >= 0 && u < dw as i64 && v < dh as i64).then_some((u as usize, v as usize))
    };
    let shifted = Plane::from_fn(w, h, |x, y| target(x, y).map_or(0.0, |(u, v)| warped.hp.get(u, v)));
    let before = params.corr_window / 2;
    let after = params.corr_window.saturating_sub(before + 1);
    let (rho, _) = windowed_correlation_span(&shared.lum_hp, &shifted, before, after).ok()?;
    let candidate = TamperMask::from_fn(w, h, MaskSource::CopyMove, |x, y| {
        target(x, y).is_some()
            && rho.get(x, y) >= params.corr_threshold
            && displacement(warp, (x, y), offset) >= params.min_displacement
    });
    let cleaned = morph_clean(&candidate, params.morph_radius, params.min_area);
    let mut region_a = TamperMask::genuine(w, h, MaskSource::CopyMove);
    for comp in components(&cleaned) {
        let touches = {
            let mut s = seed.iter();
            s.any(|&i| comp.binary_search(&i).is_ok())
        };
        if touches {
            for i in comp {
                region_a.bits_mut()[i] = true;
            }
        }
    }
    if region_a.count() < params.min_area {
        return None;
    }
    // The window straddles the border for pixels near it; reclaim those that match closely.
    let agree = matching_pixels(&shared.lum, &warped.lum, offset, params.refine_tolerance);
    grow_within(&mut region_a, &agree, params.corr_window / 2);
    let area = region_a.count();
    // Pixels q whose transformed position, shifted back by the offset, lands in region_a.
    let region_b = TamperMask::from_fn(w, h, MaskSource::CopyMove, |x, y| {
        let (u, v) = warp.forward(x as f64, y as f64);
        let (px, py) = ((u - offset.0 as f64).round(), (v - offset.1 as f64).round());
        px >= 0.0
            && py >= 0.0
            && (px as usize) < w
            && (py as usize) < h
            && region_a.get(px as usize, py as usize)
            && !region_a.get(x, y)
    });
    if region_b.count() < params.min_area {
        return None;
    }
    let corr = region_a.bits().iter().zip(rho.data()).filter(|(&b, _)| b).map(|(_, &r)| r).sum::<f64>() / area as f64;
    Some(CopyRegionPair {
        region_a,
        region_b,
        offset,
        transform: spec,
        verification_corr: corr,
        role: Role::Unknown,
    })
}

/// Pixels whose 3×3 neighbourhood of `lum(p) - warped(p + offset)` has standard deviation
/// at most `tolerance` (an illumination offset cancels out).
fn matching_pixels(lum: &Plane, warped: &Plane, offset: (i32, i32), tolerance: f64) -> Vec<bool> {
    let (w, h) = lum.dims();
    let (dw, dh) = warped.dims();
    let diff = |x: usize, y: usize| -> Option<f64> {
        let (u, v) = (x as i64 + offset.0 as i64, y as i64 + offset.1 as i64);
        (u >= 0 && v >= 0 && u < dw as i64 && v < dh as i64).then(|| lum.get(x, y) - warped.get(u as usize, v as usize))
    };
    let limit = tolerance * tolerance;
    let mut out = vec![false; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let (mut s, mut s2) = (0.0, 0.0);
            let mut ok = true;
            for yy in y - 1..=y + 1 {
                for xx in x - 1..=x + 1 {
                    match diff(xx, yy) {
                        Some(d) => {
                            s += d;
                            s2 += d * d;
                        }
                        None => ok = false,
                    }
                }
            }
            out[y * w + x] = ok && s2 / 9.0 - (s / 9.0).powi(2) <= limit;
        }
    }
    out
}

/// Geodesic dilation of `region` inside `allowed`, at most `steps` 8-neighbour rings.
fn grow_within(region: &mut TamperMask, allowed: &[bool], steps: usize) {
    let (w, h) = region.dims();
    for _ in 0..steps {
        let cur = region.bits().to_vec();
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if cur[i] || !allowed[i] {
                    continue;
                }
                let near = (y.saturating_sub(1)..(y + 2).min(h)).any(|yy| (x.saturating_sub(1)..(x + 2).min(w)).any(|xx| cur[yy * w + xx]));
                if near {
                    region.bits_mut()[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Picks the genuine side of a pair from a PRNU correlation field: with a reliable field
/// (PCE above `pce_floor`) and both regions at least `min_region` pixels, the region with
/// higher mean correlation keeps the camera pattern and is the source.
pub fn disambiguate_source(pair: &CopyRegionPair, field: Option<&CorrelationField>, pce_floor: f64, min_region: usize) -> CopyRegionPair {
    let mut out = pair.clone();
    out.role = Role::Unknown;
    let Some(field) = field else { return out };
    if !(field.pce > pce_floor) || field.plane.dims() != pair.region_a.dims() {
        return out;
    }
    let mean_in = |m: &TamperMask| {
        let (mut s, mut n) = (0.0, 0usize);
        for (&b, &r) in m.bits().iter().zip(field.plane.data()) {
            if b {
                s += r;
                n += 1;
            }
        }
        (n, if n > 0 { s / n as f64 } else { 0.0 })
    };
    let (na, ra) = mean_in(&pair.region_a);
    let (nb, rb) = mean_in(&pair.region_b);
    if na < min_region || nb < min_region {
        return out;
    }
    out.role = if ra > rb {
        Role::ASource
    } else if rb > ra {
        Role::BSource
    } else {
        Role::Unknown
    };
    out
}

/// Union of the tampered side of every pair (both sides when the role is unknown).
pub fn copymove_mask(pairs: &[CopyRegionPair], dims: (usize, usize)) -> TamperMask {
    let mut out = TamperMask::genuine(dims.0, dims.1, MaskSource::CopyMove);
    for p in pairs {
        if p.region_a.dims() != dims {
            continue;
        }
        let sides: &[&TamperMask] = match p.role {
            Role::Unknown => &[&p.region_a, &p.region_b],
            Role::ASource => &[&p.region_b],
            Role::BSource => &[&p.region_a],
        };
        for side in sides {
            for (o, &b) in out.bits_mut().iter_mut().zip(side.bits()) {
                *o |= b;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copymove::{detect_copymove, CopyMoveParams, NnfParams};
    use crate::imgcore::f_measure;
    use crate::synth::{forge, scene, shoot, ForgerySpec, Rect, SyntheticCamera};

    fn identity_only() -> CopyMoveParams {
        CopyMoveParams {
            sweep: vec![TransformSpec::IDENTITY],
            nnf: NnfParams { seed: 5, ..Default::default() },
            ..Default::default()
        }
    }

    fn captured(w: usize, h: usize, seed: u64) -> RgbImage {
        let cam = SyntheticCamera::new(0, w, h, 0.02, 2.0, seed).unwrap();
        shoot(&cam, &scene(w, h, seed + 50), seed).unwrap().quantized()
    }

    #[test]
    fn flat_image_has_no_regions() {
        let img = RgbImage::from_fn(96, 96, |_, _| [120.0, 80.0, 40.0]);
        assert!(detect_copymove(&img, &CopyMoveParams::default()).unwrap().is_empty());
    }

    #[test]
    fn rigid_copy_yields_one_pair_with_mirrored_offsets() {
        let img = captured(160, 160, 1);
        let spec = ForgerySpec::copy_move(Rect::new(12, 20, 64, 64), (88, 80));
        let (forged, target) = forge(&img, None, &spec, 0).unwrap();
        let pairs = detect_copymove(&forged, &identity_only()).unwrap();
        assert_eq!(pairs.len(), 1);
        let pair = &pairs[0];
        let truth = target.union(&TamperMask::rect(160, 160, 12, 20, 64, 64, MaskSource::GroundTruth)).unwrap();
        let found = copymove_mask(&pairs, (160, 160));
        let sym_diff = found.bits().iter().zip(truth.bits()).filter(|(a, b)| a != b).count();
        assert!(sym_diff as f64 <= 0.2 * truth.count() as f64, "{sym_diff}");
        assert!(pair.region_a.intersection_count(&pair.region_b).unwrap() == 0);
        assert!(pair.offset == (76, 60) || pair.offset == (-76, -60));
        // The field over region_b points back with the negated offset.
        let fields = crate::copymove::sweep_transforms(&forged, &[TransformSpec::IDENTITY], &identity_only().nnf).unwrap();
        let b: Vec<usize> = (0..160 * 160).filter(|&i| pair.region_b.bits()[i]).collect();
        assert_eq!(mode_offset(&fields[0].1, &b), pair.mirror_offset());
    }

    #[test]
    fn close_paste_is_suppressed() {
        let img = captured(128, 128, 2);
        let spec = ForgerySpec::copy_move(Rect::new(30, 30, 64, 64), (34, 30));
        let (forged, _) = forge(&img, None, &spec, 0).unwrap();
        assert!(detect_copymove(&forged, &identity_only()).unwrap().is_empty());
    }

    #[test]
    fn pristine_capture_has_no_regions() {
        let img = captured(128, 128, 3);
        assert!(detect_copymove(&img, &CopyMoveParams::default()).unwrap().is_empty());
    }

    fn square_pair(role: Role) -> CopyRegionPair {
        CopyRegionPair {
            region_a: TamperMask::rect(200, 200, 0, 0, 80, 80, MaskSource::CopyMove),
            region_b: TamperMask::rect(200, 200, 100, 100, 80, 80, MaskSource::CopyMove),
            offset: (100, 100),
            transform: TransformSpec::IDENTITY,
            verification_corr: 1.0,
            role,
        }
    }

    fn field(pce: f64, rho_a: f64, rho_b: f64) -> CorrelationField {
        CorrelationField {
            plane: Plane::from_fn(200, 200, |x, y| if x >= 100 && y >= 100 { rho_b } else { rho_a }),
            window: 129,
            pce,
            degenerate_pixels: 0,
        }
    }

    #[test]
    fn disambiguation_rules() {
        let pair = square_pair(Role::Unknown);
        assert_eq!(disambiguate_source(&pair, None, 150.0, 5000).role, Role::Unknown);
        assert_eq!(disambiguate_source(&pair, Some(&field(100.0, 0.3, 0.0)), 150.0, 5000).role, Role::Unknown);
        assert_eq!(disambiguate_source(&pair, Some(&field(400.0, 0.3, 0.0)), 150.0, 5000).role, Role::ASource);
        assert_eq!(disambiguate_source(&pair, Some(&field(400.0, 0.0, 0.3)), 150.0, 5000).role, Role::BSource);
        // Regions of 6400 px fall below a 7000 px floor.
        assert_eq!(disambiguate_source(&pair, Some(&field(400.0, 0.3, 0.0)), 150.0, 7000).role, Role::Unknown);
    }

    #[test]
    fn mask_follows_roles() {
        assert!(!copymove_mask(&[], (200, 200)).any());
        let both = copymove_mask(&[square_pair(Role::Unknown)], (200, 200));
        assert_eq!(both.count(), 2 * 6400);
        let a_src = copymove_mask(&[square_pair(Role::ASource)], (200, 200));
        assert_eq!(a_src, square_pair(Role::ASource).region_b);
        let b_src = copymove_mask(&[square_pair(Role::BSource)], (200, 200));
        assert_eq!(b_src.bits(), square_pair(Role::BSource).region_a.bits());
        assert_eq!(b_src.source(), MaskSource::CopyMove);
        assert!(f_measure(&a_src, &square_pair(Role::Unknown).region_b).unwrap() == 1.0);
    }
}
