//! Correlation statistics: Pearson correlation, PCE, and the sliding-window correlation field.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{ensure_same_dims, Error, Result};
use crate::imgcore::{Integral, Plane};

use super::residual::NoiseResidual;

/// Pearson correlation of two equally sized planes.
pub fn normalized_corr(a: &Plane, b: &Plane) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (ma, mb) = (a.mean(), b.mean());
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Mean-removed 2-D spectrum of a plane, reusable across many PCE evaluations.
#[derive(Clone)]
pub struct Spectrum {
    width: usize,
    height: usize,
    bins: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// `(wa·a + wb·b) / (wa + wb)`; the transform is linear so this is the spectrum of the
    /// weighted mean of the underlying planes.
    pub fn weighted_mean(&self, wa: f64, other: &Spectrum, wb: f64) -> Spectrum {
        let s = 1.0 / (wa + wb);
        Spectrum {
            width: self.width,
            height: self.height,
            bins: self
                .bins
                .iter()
                .zip(&other.bins)
                .map(|(a, b)| (a * wa + b * wb) * s)
                .collect(),
        }
    }
}

/// Cached FFT plans for one image size.
pub struct PceEngine {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl PceEngine {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            col_fwd: planner.plan_fft_forward(height),
            row_inv: planner.plan_fft_inverse(width),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn transform(&self, data: &mut [Complex<f64>], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        let (w, h) = (self.width, self.height);
        rows.process(data);
        let mut column = vec![Complex::new(0.0, 0.0); h];
        for x in 0..w {
            for y in 0..h {
                column[y] = data[y * w + x];
            }
            cols.process(&mut column);
            for y in 0..h {
                data[y * w + x] = column[y];
            }
        }
    }

    pub fn spectrum(&self, plane: &Plane) -> Result<Spectrum> {
        ensure_same_dims((self.width, self.height), plane.dims())?;
        let m = plane.mean();
        let mut bins: Vec<Complex<f64>> = plane.data().iter().map(|&v| Complex::new(v - m, 0.0)).collect();
        self.transform(&mut bins, self.row_fwd.as_ref(), self.col_fwd.as_ref());
        Ok(Spectrum {
            width: self.width,
            height: self.height,
            bins,
        })
    }

    /// Circular cross-correlation surface `c(τ) = Σ a(p)·b(p+τ)` of the mean-removed inputs.
    pub fn cross_correlation(&self, a: &Spectrum, b: &Spectrum) -> Result<Vec<f64>> {
        ensure_same_dims((self.width, self.height), a.dims())?;
        ensure_same_dims((self.width, self.height), b.dims())?;
        let mut prod: Vec<Complex<f64>> = a.bins.iter().zip(&b.bins).map(|(x, y)| x.conj() * y).collect();
        self.transform(&mut prod, self.row_inv.as_ref(), self.col_inv.as_ref());
        let n = (self.width * self.height) as f64;
        Ok(prod.iter().map(|c| c.re / n).collect())
    }

    pub fn pce_spectra(&self, a: &Spectrum, b: &Spectrum, exclusion_radius: usize) -> Result<f64> {
        let surface = self.cross_correlation(a, b)?;
        Ok(pce_from_surface(&surface, self.width, self.height, exclusion_radius))
    }

    pub fn pce(&self, a: &Plane, b: &Plane, exclusion_radius: usize) -> Result<f64> {
        ensure_same_dims(a.dims(), b.dims())?;
        self.pce_spectra(&self.spectrum(a)?, &self.spectrum(b)?, exclusion_radius)
    }
}

/// Signed peak-to-correlation-energy of a correlation surface: the largest-magnitude lag is
/// the peak, and the energy excludes the `(2r+1)²` lags around it (with wrap-around).
pub fn pce_from_surface(surface: &[f64], width: usize, height: usize, exclusion_radius: usize) -> f64 {
    let (mut best, mut peak) = (0usize, 0.0f64);
    for (i, &c) in surface.iter().enumerate() {
        if c.abs() > peak.abs() {
            best = i;
            peak = c;
        }
    }
    let (px, py) = ((best % width) as isize, (best / width) as isize);
    let r = exclusion_radius as isize;
    let excluded = |x: usize, y: usize| {
        let wrap = |d: isize, n: usize| {
            let d = d.rem_euclid(n as isize);
            d.min(n as isize - d)
        };
        wrap(x as isize - px, width) <= r && wrap(y as isize - py, height) <= r
    };
    let mut energy = 0.0;
    let mut kept = 0usize;
    for y in 0..height {
        for x in 0..width {
            if !excluded(x, y) {
                let c = surface[y * width + x];
                energy += c * c;
                kept += 1;
            }
        }
    }
    if peak == 0.0 {
        return 0.0;
    }
    if energy == 0.0 || kept == 0 {
        return peak.signum() * f64::INFINITY;
    }
    peak.signum() * peak * peak * kept as f64 / energy
}

/// PCE between a residual and a fingerprint-times-image plane.
pub fn pce(residual: &NoiseResidual, fingerprint_times_image: &Plane, exclusion_radius: usize) -> Result<f64> {
    let r = residual.plane();
    ensure_same_dims(r.dims(), fingerprint_times_image.dims())?;
    PceEngine::new(r.width(), r.height()).pce(r, fingerprint_times_image, exclusion_radius)
}

/// Per-pixel normalized correlation between a residual and the expected PRNU term.
#[derive(Debug, Clone)]
pub struct CorrelationField {
    pub plane: Plane,
    pub window: usize,
    /// Reliability of the image-level association.
    pub pce: f64,
    /// Pixels whose window had zero variance in either input (ρ set to 0).
    pub degenerate_pixels: usize,
}

/// Windowed Pearson correlation of `a` and `b` over an odd `window`, clipped at the borders.
///
/// Uses summed-area tables, so the cost does not depend on the window size.
pub fn windowed_correlation(a: &Plane, b: &Plane, window: usize) -> Result<(Plane, usize)> {
    ensure_same_dims(a.dims(), b.dims())?;
    if window < 3 || window % 2 == 0 {
        return Err(Error::invalid(format!("correlation window must be odd and >= 3, got {window}")));
    }
    let half = window / 2;
    windowed_correlation_span(a, b, half, half)
}

/// Same as [`windowed_correlation`] with the window spanning `[-before, +after]` around each pixel.
pub(crate) fn windowed_correlation_span(a: &Plane, b: &Plane, before: usize, after: usize) -> Result<(Plane, usize)> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    // Centering first keeps the one-pass variance formula well conditioned.
    let (ma, mb) = (a.mean(), b.mean());
    let ac: Vec<f64> = a.data().iter().map(|v| v - ma).collect();
    let bc: Vec<f64> = b.data().iter().map(|v| v - mb).collect();
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> { ac.iter().zip(&bc).map(|(&x, &y)| f(x, y)).collect() };
    let sa = Integral::new(&ac, w, h);
    let sb = Integral::new(&bc, w, h);
    let saa = Integral::new(&prod(&|x, _| x * x), w, h);
    let sbb = Integral::new(&prod(&|_, y| y * y), w, h);
    let sab = Integral::new(&prod(&|x, y| x * y), w, h);

    let mut degenerate = 0;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let y0 = y.saturating_sub(before);
        let y1 = (y + after + 1).min(h);
        for x in 0..w {
            let x0 = x.saturating_sub(before);
            let x1 = (x + after + 1).min(w);
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            let (ta, tb) = (sa.rect(x0, y0, x1, y1), sb.rect(x0, y0, x1, y1));
            let va = saa.rect(x0, y0, x1, y1) - ta * ta / n;
            let vb = sbb.rect(x0, y0, x1, y1) - tb * tb / n;
            let cov = sab.rect(x0, y0, x1, y1) - ta * tb / n;
            let scale_a = saa.rect(x0, y0, x1, y1).max(f64::MIN_POSITIVE);
            let scale_b = sbb.rect(x0, y0, x1, y1).max(f64::MIN_POSITIVE);
            if va <= 1e-12 * scale_a || vb <= 1e-12 * scale_b {
                degenerate += 1;
                out.push(0.0);
            } else {
                out.push((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0));
            }
        }
    }
    Ok((Plane::from_raw(w, h, out), degenerate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    pub(crate) fn white(w: usize, h: usize, seed: u64) -> Plane {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Plane::from_fn(w, h, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn corr_basic_identities() {
        let a = white(16, 16, 1);
        assert!((normalized_corr(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((normalized_corr(&a, &a.map(|v| -v)).unwrap() + 1.0).abs() < 1e-12);
        let x = Plane::new(2, 2, vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let y = Plane::new(2, 2, vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        assert_eq!(normalized_corr(&x, &y).unwrap(), 0.0);
        assert!(matches!(
            normalized_corr(&Plane::filled(3, 3, 2.0), &a.crop(0, 0, 3, 3).unwrap()),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn pce_degenerate_and_self_match() {
        let z = Plane::zeros(32, 32);
        let engine = PceEngine::new(32, 32);
        assert_eq!(engine.pce(&z, &z, 5).unwrap(), 0.0);

        let e64 = PceEngine::new(64, 64);
        for seed in 0..10 {
            let a = white(64, 64, seed);
            assert!(e64.pce(&a, &a, 5).unwrap() >= 1000.0);
        }
    }

    #[test]
    fn pce_sign_follows_anticorrelation() {
        let a = white(64, 64, 4);
        let e = PceEngine::new(64, 64);
        assert!(e.pce(&a, &a.map(|v| -v), 5).unwrap() < -1000.0);
    }

    #[test]
    fn pce_of_independent_noise_stays_small() {
        let e = PceEngine::new(64, 64);
        let below = (0..200u64)
            .filter(|&s| e.pce(&white(64, 64, 2 * s + 1000), &white(64, 64, 2 * s + 1001), 5).unwrap().abs() < 50.0)
            .count();
        assert!(below >= 198, "{below}/200 below 50");
    }

    #[test]
    fn spectrum_weighted_mean_is_linear() {
        let e = PceEngine::new(16, 8);
        let (a, b) = (white(16, 8, 1), white(16, 8, 2));
        let mixed = a.zip_map(&b, |x, y| (2.0 * x + 3.0 * y) / 5.0).unwrap();
        let via = e.spectrum(&a).unwrap().weighted_mean(2.0, &e.spectrum(&b).unwrap(), 3.0);
        let direct = e.spectrum(&mixed).unwrap();
        for (x, y) in via.bins.iter().zip(&direct.bins) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    fn brute_window(a: &Plane, b: &Plane, window: usize) -> Plane {
        let half = window / 2;
        let (w, h) = a.dims();
        Plane::from_fn(w, h, |x, y| {
            let x0 = x.saturating_sub(half);
            let y0 = y.saturating_sub(half);
            let x1 = (x + half + 1).min(w);
            let y1 = (y + half + 1).min(h);
            let ca = a.crop(x0, y0, x1 - x0, y1 - y0).unwrap();
            let cb = b.crop(x0, y0, x1 - x0, y1 - y0).unwrap();
            normalized_corr(&ca, &cb).unwrap_or(0.0)
        })
    }

    #[test]
    fn sliding_matches_brute_force() {
        let a = white(64, 64, 11).map(|v| 3.0 * v + 40.0);
        let b = white(64, 64, 12).zip_map(&a, |n, x| n + 0.3 * x).unwrap();
        let (fast, degenerate) = windowed_correlation(&a, &b, 17).unwrap();
        assert_eq!(degenerate, 0);
        let slow = brute_window(&a, &b, 17);
        for (f, s) in fast.data().iter().zip(slow.data()) {
            assert!((f - s).abs() < 1e-9, "{f} vs {s}");
        }
    }

    #[test]
    fn window_must_be_odd() {
        let a = white(8, 8, 1);
        assert!(windowed_correlation(&a, &a, 4).is_err());
        assert!(windowed_correlation(&a, &a, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn corr_invariant_to_positive_affine(seed in 0u64..10_000, gain in 0.01f64..100.0, shift in -1e3f64..1e3) {
            let a = white(12, 9, seed);
            let b = white(12, 9, seed + 1).zip_map(&a, |n, x| n + x).unwrap();
            let base = normalized_corr(&a, &b).unwrap();
            let scaled = normalized_corr(&a.map(|v| gain * v + shift), &b).unwrap();
            prop_assert!((base - scaled).abs() < 1e-9);
        }

        #[test]
        fn pce_invariant_to_common_gain(seed in 0u64..10_000, gain in 0.01f64..100.0) {
            let e = PceEngine::new(16, 16);
            let a = white(16, 16, seed);
            let b = white(16, 16, seed + 7).zip_map(&a, |n, x| n + 0.5 * x).unwrap();
            let base = e.pce(&a, &b, 2).unwrap();
            let scaled = e.pce(&a.map(|v| gain * v), &b.map(|v| gain * v), 2).unwrap();
            prop_assert!(((base - scaled) / base).abs() < 1e-6);
        }

        #[test]
        fn sliding_equals_brute_force_random(seed in 0u64..10_000, window in prop::sample::select(vec![3usize, 5, 9, 17])) {
            let a = white(64, 64, seed);
            let b = white(64, 64, seed ^ 0xdead).zip_map(&a, |n, x| n + 0.2 * x).unwrap();
            let (fast, _) = windowed_correlation(&a, &b, window).unwrap();
            let slow = brute_window(&a, &b, window);
            for (f, s) in fast.data().iter().zip(slow.data()) {
                prop_assert!((f - s).abs() < 1e-9);
            }
        }
    }
}
