//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeMap;

use forgeloc::imgcore::Plane;
use forgeloc::splicing::FEATURE_DIM;
use forgeloc::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn noise_image(w: usize, h: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RgbImage::from_fn(w, h, |_, _| [0, 1, 2].map(|_| rng.random_range(0..256) as f64))
}

/// Exact nearest-neighbour cost per pixel: mean-subtracted 3-channel patches with
/// replicated borders, every in-bounds target at distance ≥ `floor`.
pub fn brute_costs(img: &RgbImage, patch: usize, floor: f64) -> Vec<f64> {
    let (w, h) = img.dims();
    let r = (patch / 2) as i64;
    let at = |x: i64, y: i64, c: usize| img.channel(c).get(x.clamp(0, w as i64 - 1) as usize, y.clamp(0, h as i64 - 1) as usize);
    let patches: Vec<Vec<f64>> = (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            let mut v = Vec::new();
            for c in 0..3 {
                let vals: Vec<f64> = (-r..=r).flat_map(|dy| (-r..=r).map(move |dx| (dx, dy))).map(|(dx, dy)| at(x + dx, y + dy, c)).collect();
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                v.extend(vals.iter().map(|a| a - m));
            }
            v
        })
        .collect();
    (0..w * h)
        .map(|p| {
            let mut best = f64::INFINITY;
            for q in 0..w * h {
                let dx = (q % w) as f64 - (p % w) as f64;
                let dy = (q / w) as f64 - (p / w) as f64;
                if dx.hypot(dy) < floor {
                    continue;
                }
                best = best.min(patches[p].iter().zip(&patches[q]).map(|(a, b)| (a - b) * (a - b)).sum());
            }
            best
        })
        .collect()
}

/// Direct recount: every horizontal and vertical run of four third-order residuals,
/// each sign-folded to its lexicographically smaller form.
pub fn brute_histogram(block: &Plane) -> Vec<f64> {
    let n = block.width();
    let q = |v: f64| v.round().clamp(-2.0, 2.0) as i32;
    let mut counts: BTreeMap<[i32; 4], u64> = BTreeMap::new();
    let mut add = |g: [i32; 4]| {
        let neg = g.map(|v| -v);
        *counts.entry(g.min(neg)).or_default() += 1;
    };
    for a in 0..n {
        for b in 0..n - 6 {
            let h: Vec<i32> = (0..4)
                .map(|i| {
                    let p = |k: usize| block.get(b + i + k, a);
                    q(p(0) - 3.0 * p(1) + 3.0 * p(2) - p(3))
                })
                .collect();
            add([h[0], h[1], h[2], h[3]]);
            let v: Vec<i32> = (0..4)
                .map(|i| {
                    let p = |k: usize| block.get(a, b + i + k);
                    q(p(0) - 3.0 * p(1) + 3.0 * p(2) - p(3))
                })
                .collect();
            add([v[0], v[1], v[2], v[3]]);
        }
    }
    let total: u64 = counts.values().sum();
    let mut bins = vec![0.0; FEATURE_DIM];
    for (g, c) in counts {
        let idx = (g[0] + 2) * 125 + (g[1] + 2) * 25 + (g[2] + 2) * 5 + (g[3] + 2);
        bins[idx as usize] = c as f64 / total as f64;
    }
    bins
}


/// Adjusted Rand index of two labelings (Hubert and Arabie).
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let pairs = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let index: f64 = table.values().map(|&n| pairs(n)).sum();
    let sa: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sb: f64 = cols.values().map(|&n| pairs(n)).sum();
    let expected = sa * sb / pairs(a.len() as u64);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}
