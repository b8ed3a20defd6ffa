//! Procedural scenes: multi-octave value noise with flat shapes, dark and saturated spots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imgcore::{Plane, RgbImage};

/// Smoothly interpolated random lattice with spacing `cell`, values in [-1, 1].
fn value_noise(width: usize, height: usize, cell: usize, rng: &mut impl Rng) -> Plane {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
    let fade = |t: f64| t * t * (3.0 - 2.0 * t);
    Plane::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64 / cell as f64, y as f64 / cell as f64);
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fade(fx - ix as f64), fade(fy - iy as f64));
        let at = |i: usize, j: usize| lattice[j * gw + i];
        let top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
        let bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    })
}

/// Textured luminance field in roughly [30, 220].
pub fn texture(width: usize, height: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Plane::filled(width, height, 125.0);
    for (cell, amp) in [(64, 45.0), (24, 25.0), (9, 14.0), (4, 8.0), (2, 5.0)] {
        let n = value_noise(width, height, cell, &mut rng);
        acc = acc.zip_map(&n, |a, v| a + amp * v).expect("same dims");
    }
    acc.map(|v| v.clamp(0.0, 255.0))
}

/// Color scene: textured background, a few flat shapes, and optionally a saturated disc.
pub fn scene(width: usize, height: usize, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5343_454e_4500_0000);
    let lum = texture(width, height, rng.random());
    let chroma: Vec<Plane> = (0..3).map(|_| value_noise(width, height, 48, &mut rng)).collect();
    let tint: [f64; 3] = [rng.random_range(0.85..1.15), rng.random_range(0.85..1.15), rng.random_range(0.85..1.15)];
    let mut img = RgbImage::from_fn(width, height, |x, y| {
        let l = lum.get(x, y);
        [0, 1, 2].map(|c| (l * tint[c] + 20.0 * chroma[c].get(x, y)).clamp(0.0, 255.0))
    });

    let shapes = rng.random_range(2..5);
    let min_dim = width.min(height) as f64;
    for _ in 0..shapes {
        let color: [f64; 3] = [rng.random_range(40.0..210.0), rng.random_range(40.0..210.0), rng.random_range(40.0..210.0)];
        let cx = rng.random_range(0.0..width as f64);
        let cy = rng.random_range(0.0..height as f64);
        let r = rng.random_range(0.05..0.15) * min_dim;
        let is_disc = rng.random_bool(0.5);
        // Gentle gradient so shapes are smooth rather than perfectly constant.
        let (gx, gy) = (rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15));
        paint(&mut img, |x, y| {
            let (dx, dy) = (x - cx, y - cy);
            if is_disc {
                dx * dx + dy * dy <= r * r
            } else {
                dx.abs() <= r && dy.abs() <= 0.7 * r
            }
        }, |x, y| color.map(|c| (c + gx * (x - cx) + gy * (y - cy)).clamp(0.0, 255.0)));
    }
    if rng.random_bool(0.3) {
        let cx = rng.random_range(0.0..width as f64);
        let cy = rng.random_range(0.0..height as f64);
        let r = rng.random_range(0.04..0.08) * min_dim;
        paint(&mut img, |x, y| (x - cx).powi(2) + (y - cy).powi(2) <= r * r, |_, _| [255.0; 3]);
    }
    img
}

fn paint(img: &mut RgbImage, inside: impl Fn(f64, f64) -> bool, color: impl Fn(f64, f64) -> [f64; 3]) {
    let (w, h) = img.dims();
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            if inside(fx, fy) {
                img.set_pixel(x, y, color(fx, fy));
            }
        }
    }
}
