//! Binary morphology on tamper masks.

use std::collections::VecDeque;

use super::mask::TamperMask;

/// Offsets of the rasterized disc `{(dx, dy): dx² + dy² ≤ r²}`.
pub fn disc_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

// Out-of-bounds neighbours are ignored by both operators, which keeps them adjoint on the
// image domain (so opening/closing stay idempotent).
pub fn dilate(mask: &TamperMask, radius: usize) -> TamperMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let disc = disc_offsets(radius);
    let mut out = TamperMask::genuine(w, h, mask.source());
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            for &(dx, dy) in &disc {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    out.set(nx as usize, ny as usize, true);
                }
            }
        }
    }
    out
}

pub fn erode(mask: &TamperMask, radius: usize) -> TamperMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    let disc = disc_offsets(radius);
    TamperMask::from_fn(w, h, mask.source(), |x, y| {
        mask.get(x, y)
            && disc.iter().all(|&(dx, dy)| {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h || mask.get(nx as usize, ny as usize)
            })
    })
}

pub fn close(mask: &TamperMask, radius: usize) -> TamperMask {
    erode(&dilate(mask, radius), radius)
}

pub fn open(mask: &TamperMask, radius: usize) -> TamperMask {
    dilate(&erode(mask, radius), radius)
}

/// 8-connected components of the tampered pixels, each as a list of linear indices.
pub fn components(mask: &TamperMask) -> Vec<Vec<usize>> {
    let (w, h) = mask.dims();
    let bits = mask.bits();
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !bits[start] || seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if bits[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

pub fn remove_small_components(mask: &TamperMask, min_area: usize) -> TamperMask {
    if min_area == 0 {
        return mask.clone();
    }
    let mut out = TamperMask::genuine(mask.width(), mask.height(), mask.source());
    for comp in components(mask) {
        if comp.len() >= min_area {
            for i in comp {
                out.bits_mut()[i] = true;
            }
        }
    }
    out
}

/// Closing, then opening, with a disc of `radius`, then removal of 8-connected
/// components smaller than `min_area` pixels.
pub fn morph_clean(mask: &TamperMask, radius: usize, min_area: usize) -> TamperMask {
    let smoothed = open(&close(mask, radius), radius);
    remove_small_components(&smoothed, min_area)
}
