use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{Plane, RgbImage};

/// A simulated sensor: fixed multiplicative PRNU `k` plus additive noise of std `noise_std`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCamera {
    pub id: usize,
    pub k: Plane,
    pub noise_std: f64,
}

pub const DEFAULT_SIGMA_K: f64 = 0.02;
pub const DEFAULT_NOISE_STD: f64 = 2.0;

impl SyntheticCamera {
    /// Zero-mean Gaussian PRNU of standard deviation `sigma_k ∈ (0, 0.1]`.
    pub fn new(id: usize, width: usize, height: usize, sigma_k: f64, noise_std: f64, seed: u64) -> Result<Self> {
        if !(sigma_k > 0.0 && sigma_k <= 0.1) {
            return Err(Error::invalid(format!("sigma_k must lie in (0, 0.1], got {sigma_k}")));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::invalid(format!("noise_std must be non-negative, got {noise_std}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5052_4e55_0000_0000);
        let normal = Normal::new(0.0, sigma_k).expect("valid std");
        let raw = Plane::from_fn(width, height, |_, _| normal.sample(&mut rng));
        let mean = raw.mean();
        Ok(Self {
            id,
            k: raw.map(|v| v - mean),
            noise_std,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.k.dims()
    }
}

/// Additive per-channel noise `θ` that [`shoot`] uses for a given seed.
pub fn sensor_noise(width: usize, height: usize, noise_std: f64, seed: u64) -> [Plane; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut channel = || {
        if noise_std == 0.0 {
            return Plane::zeros(width, height);
        }
        let normal = Normal::new(0.0, noise_std).expect("valid std");
        Plane::from_fn(width, height, |_, _| normal.sample(&mut rng))
    };
    [channel(), channel(), channel()]
}

/// `(1 + k)·x + θ` per channel, without clamping.
pub fn shoot_unclamped(camera: &SyntheticCamera, scene: &RgbImage, seed: u64) -> Result<RgbImage> {
    ensure_same_dims(camera.dims(), scene.dims())?;
    let (w, h) = scene.dims();
    let theta = sensor_noise(w, h, camera.noise_std, seed);
    let mut out = scene.clone();
    for (c, plane) in out.channels_mut().iter_mut().enumerate() {
        *plane = scene
            .channel(c)
            .zip_map(&camera.k, |x, k| (1.0 + k) * x)?
            .zip_map(&theta[c], |v, t| v + t)?;
    }
    Ok(out)
}

/// Imaging model `y = clamp((1 + k)·x + θ, 0, 255)`, same `k` on every channel.
pub fn shoot(camera: &SyntheticCamera, scene: &RgbImage, seed: u64) -> Result<RgbImage> {
    let raw = shoot_unclamped(camera, scene, seed)?;
    let clamp = |p: &Plane| p.map(|v| v.clamp(0.0, 255.0));
    let [r, g, b] = raw.channels();
    RgbImage::new(clamp(r), clamp(g), clamp(b))
}

/// A capture with additive noise only: no sensor pattern at all.
pub fn shoot_without_prnu(scene: &RgbImage, noise_std: f64, seed: u64) -> RgbImage {
    let (w, h) = scene.dims();
    let theta = sensor_noise(w, h, noise_std, seed);
    RgbImage::from_fn(w, h, |x, y| {
        let p = scene.pixel(x, y);
        [0, 1, 2].map(|c| (p[c] + theta[c].get(x, y)).clamp(0.0, 255.0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(w: usize, h: usize, v: f64) -> RgbImage {
        RgbImage::from_fn(w, h, |_, _| [v; 3])
    }

    #[test]
    fn zero_noise_zero_prnu_is_identity() {
        let mut cam = SyntheticCamera::new(0, 16, 16, 0.02, 0.0, 1).unwrap();
        cam.k = Plane::zeros(16, 16);
        let scene = RgbImage::from_fn(16, 16, |x, y| [x as f64 * 3.0, y as f64 * 5.0, 77.0]);
        assert_eq!(shoot(&cam, &scene, 9).unwrap(), scene);
    }

    #[test]
    fn flat_scene_recovers_k() {
        let cam = SyntheticCamera::new(0, 20, 20, 0.05, 0.0, 3).unwrap();
        let y = shoot(&cam, &flat(20, 20, 100.0), 1).unwrap();
        for yy in 0..20 {
            for x in 0..20 {
                let rec = (y.channel(1).get(x, yy) - 100.0) / 100.0;
                assert!((rec - cam.k.get(x, yy)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unclamped_model_holds_pointwise() {
        let cam = SyntheticCamera::new(1, 24, 24, 0.02, 2.0, 5).unwrap();
        let scene = RgbImage::from_fn(24, 24, |x, y| [10.0 + x as f64, 50.0 + y as f64, 200.0]);
        let seed = 42;
        let y = shoot_unclamped(&cam, &scene, seed).unwrap();
        let theta = sensor_noise(24, 24, 2.0, seed);
        for c in 0..3 {
            for py in 0..24 {
                for px in 0..24 {
                    let x = scene.channel(c).get(px, py);
                    let lhs = (y.channel(c).get(px, py) - x) / x;
                    let rhs = cam.k.get(px, py) + theta[c].get(px, py) / x;
                    assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn output_std_matches_model() {
        // Var(y - x) = noise_std² + x²·σ_k² per pixel, averaged over the camera's k.
        let (w, h, x) = (64usize, 64usize, 120.0);
        let (sigma_k, noise_std) = (0.02, 2.0);
        let mut sq = 0.0;
        let mut n = 0usize;
        for seed in 0..20u64 {
            let cam = SyntheticCamera::new(0, w, h, sigma_k, noise_std, 1000 + seed).unwrap();
            let y = shoot(&cam, &flat(w, h, x), seed).unwrap();
            for v in y.channel(0).data() {
                sq += (v - x) * (v - x);
                n += 1;
            }
        }
        let empirical = (sq / n as f64).sqrt();
        let model = (noise_std * noise_std + (sigma_k * x).powi(2)).sqrt();
        assert!((empirical / model - 1.0).abs() < 0.05, "{empirical} vs {model}");
    }

    #[test]
    fn rejects_out_of_range_sigma() {
        assert!(SyntheticCamera::new(0, 4, 4, 0.0, 1.0, 0).is_err());
        assert!(SyntheticCamera::new(0, 4, 4, 0.2, 1.0, 0).is_err());
    }

    #[test]
    fn seeded_determinism() {
        let cam = SyntheticCamera::new(0, 16, 16, 0.02, 2.0, 8).unwrap();
        let scene = flat(16, 16, 90.0);
        assert_eq!(shoot(&cam, &scene, 3).unwrap(), shoot(&cam, &scene, 3).unwrap());
        assert_ne!(shoot(&cam, &scene, 3).unwrap(), shoot(&cam, &scene, 4).unwrap());
    }
}
