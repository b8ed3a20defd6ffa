//! Nonlocal-means estimate of the noise-free image.

use crate::error::{Error, Result};
use crate::imgcore::Plane;

const PATCH_RADIUS: usize = 3;
const SEARCH_RADIUS: usize = 10;

/// Robust noise level from horizontal first differences: `1.4826·median(|d|)/√2`.
pub fn estimate_sigma(image: &Plane) -> f64 {
    let (w, h) = image.dims();
    if w < 2 {
        return 0.0;
    }
    let mut diffs: Vec<f64> = (0..h)
        .flat_map(|y| (0..w - 1).map(move |x| (x, y)))
        .map(|(x, y)| (image.get(x + 1, y) - image.get(x, y)).abs())
        .collect();
    let mid = diffs.len() / 2;
    let median = if diffs.len() % 2 == 1 {
        *diffs.select_nth_unstable_by(mid, f64::total_cmp).1
    } else {
        let upper = *diffs.select_nth_unstable_by(mid, f64::total_cmp).1;
        let lower = diffs[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    };
    1.4826 * median / std::f64::consts::SQRT_2
}

fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Nonlocal means with 7×7 patches and a 21×21 search window.
///
/// Weights are `exp(-max(d² - 2σ², 0) / h²)` with `d²` the mean squared patch difference,
/// `σ` from [`estimate_sigma`] and `h = strength·σ`. Borders are mirror-reflected.
pub fn denoise(image: &Plane, strength: f64) -> Result<Plane> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(Error::invalid(format!("denoise strength must be positive, got {strength}")));
    }
    if image.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (w, h) = image.dims();
    let sigma = estimate_sigma(image);
    let h2 = (strength * sigma).powi(2);
    let bias = 2.0 * sigma * sigma;

    let pad = PATCH_RADIUS + SEARCH_RADIUS;
    let pw = w + 2 * pad;
    let ph = h + 2 * pad;
    let mut padded = vec![0.0; pw * ph];
    for py in 0..ph {
        let sy = reflect(py as isize - pad as isize, h);
        for px in 0..pw {
            let sx = reflect(px as isize - pad as isize, w);
            padded[py * pw + px] = image.get(sx, sy);
        }
    }

    let pr = PATCH_RADIUS;
    let side = 2 * pr + 1;
    let norm = 1.0 / (side * side) as f64;
    // Region over which squared differences are needed: the image grown by the patch radius.
    let rw = w + 2 * pr;
    let rh = h + 2 * pr;
    let base = SEARCH_RADIUS; // padded index of region origin

    let mut acc = vec![0.0; w * h];
    let mut wsum = vec![0.0; w * h];
    let mut sq = vec![0.0; rw * rh];
    let mut hsum = vec![0.0; w * rh];
    let mut colsum = vec![0.0; w];

    let sr = SEARCH_RADIUS as isize;
    for dy in -sr..=sr {
        for dx in -sr..=sr {
            for ry in 0..rh {
                let row = (base + ry) * pw + base;
                let orow = ((base + ry) as isize + dy) as usize * pw;
                for rx in 0..rw {
                    let a = padded[row + rx];
                    let b = padded[orow + ((base + rx) as isize + dx) as usize];
                    sq[ry * rw + rx] = (a - b) * (a - b);
                }
            }
            for ry in 0..rh {
                let src = &sq[ry * rw..(ry + 1) * rw];
                let dst = &mut hsum[ry * w..(ry + 1) * w];
                let mut s: f64 = src[..side].iter().sum();
                dst[0] = s;
                for x in 1..w {
                    s += src[x + side - 1] - src[x - 1];
                    dst[x] = s;
                }
            }
            // Vertical box sums, one running row of column sums.
            colsum.iter_mut().for_each(|c| *c = 0.0);
            for r in 0..side {
                for (c, v) in colsum.iter_mut().zip(&hsum[r * w..(r + 1) * w]) {
                    *c += v;
                }
            }
            for y in 0..h {
                if y > 0 {
                    let (add, sub) = (&hsum[(y + side - 1) * w..(y + side) * w], &hsum[(y - 1) * w..y * w]);
                    for ((c, a), b) in colsum.iter_mut().zip(add).zip(sub) {
                        *c += a - b;
                    }
                }
                let q0 = ((pad + y) as isize + dy) as usize * pw + (pad as isize + dx) as usize;
                let others = &padded[q0..q0 + w];
                let acc_row = &mut acc[y * w..(y + 1) * w];
                let wsum_row = &mut wsum[y * w..(y + 1) * w];
                for x in 0..w {
                    let d2 = (colsum[x] * norm).max(0.0);
                    let excess = (d2 - bias).max(0.0);
                    let weight = if h2 > 0.0 {
                        (-excess / h2).exp()
                    } else if excess == 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                    acc_row[x] += weight * others[x];
                    wsum_row[x] += weight;
                }
            }
        }
    }

    let data = acc.iter().zip(&wsum).map(|(a, s)| a / s).collect();
    Ok(Plane::from_raw(w, h, data))
}
