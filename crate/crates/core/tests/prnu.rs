use forgeloc::imgcore::Plane;
use forgeloc::prnu::{
    correlation_field, estimate_fingerprint, noise_residual, normalized_corr, normalized_residual, windowed_correlation,
    NoiseResidual,
};
use forgeloc::synth::{forge, scene, shoot, ForgerySpec, Rect, SyntheticCamera};
use forgeloc::RgbImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn capture(cam: &SyntheticCamera, seed: u64) -> RgbImage {
    let (w, h) = cam.dims();
    shoot(cam, &scene(w, h, seed), seed ^ 0xabc).unwrap().quantized()
}

fn white(w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, 1.0).unwrap();
    Plane::from_fn(w, h, |_, _| n.sample(&mut rng))
}

#[test]
fn residual_carries_the_true_pattern() {
    let seeds = 20;
    let mut wins = 0;
    for seed in 0..seeds {
        let cam = SyntheticCamera::new(0, 128, 128, 0.02, 2.0, seed).unwrap();
        let other = SyntheticCamera::new(1, 128, 128, 0.02, 2.0, seed + 1000).unwrap();
        let img = capture(&cam, seed);
        let r = noise_residual(&img).unwrap();
        let y = img.luminance();
        let own = normalized_corr(r.plane(), &cam.k.zip_map(&y, |k, y| k * y).unwrap()).unwrap();
        let foreign = normalized_corr(r.plane(), &other.k.zip_map(&y, |k, y| k * y).unwrap()).unwrap();
        wins += (own > foreign) as u64;
    }
    assert!(wins * 100 >= seeds * 95, "{wins}/{seeds}");
}

#[test]
fn same_camera_residuals_correlate_more() {
    let a = SyntheticCamera::new(0, 128, 128, 0.02, 2.0, 1).unwrap();
    let b = SyntheticCamera::new(1, 128, 128, 0.02, 2.0, 2).unwrap();
    let norm = |img: &RgbImage| normalized_residual(img, &noise_residual(img).unwrap()).unwrap();
    for t in 0..8 {
        let a1 = norm(&capture(&a, 10 * t));
        let a2 = norm(&capture(&a, 10 * t + 1));
        let b1 = norm(&capture(&b, 10 * t + 2));
        let same = normalized_corr(&a1, &a2).unwrap();
        let cross = normalized_corr(&a1, &b1).unwrap();
        assert!(same > cross, "trial {t}: same {same} cross {cross}");
    }
}

#[test]
fn fingerprint_error_falls_with_more_members() {
    let cam = SyntheticCamera::new(0, 96, 96, 0.02, 2.0, 5).unwrap();
    let images: Vec<RgbImage> = (0..50).map(|s| capture(&cam, 300 + s)).collect();
    let residuals: Vec<NoiseResidual> = images.iter().map(|i| noise_residual(i).unwrap()).collect();
    let mse: Vec<f64> = [5, 10, 25, 50]
        .iter()
        .map(|&n| {
            let k = estimate_fingerprint(images[..n].iter().zip(&residuals[..n])).unwrap().estimate();
            k.data().iter().zip(cam.k.data()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / k.len() as f64
        })
        .collect();
    assert!(mse.windows(2).all(|w| w[1] < w[0]), "{mse:?}");
}

#[test]
fn unrelated_noise_gives_near_zero_local_correlation() {
    let (rho, _) = windowed_correlation(&white(256, 256, 1), &white(256, 256, 2), 129).unwrap();
    let mean_abs = rho.data().iter().map(|v| v.abs()).sum::<f64>() / rho.len() as f64;
    assert!(mean_abs < 0.05, "{mean_abs}");
}

#[test]
fn spliced_area_loses_the_host_pattern() {
    let size = 256;
    let host_cam = SyntheticCamera::new(0, size, size, 0.02, 2.0, 9).unwrap();
    let donor_cam = SyntheticCamera::new(1, size, size, 0.02, 2.0, 19).unwrap();
    let members: Vec<RgbImage> = (0..10).map(|s| capture(&host_cam, 700 + s)).collect();
    let residuals: Vec<NoiseResidual> = members.iter().map(|i| noise_residual(i).unwrap()).collect();
    let fp = estimate_fingerprint(members.iter().zip(&residuals)).unwrap();
    for seed in 0..4 {
        let host = capture(&host_cam, seed);
        let donor = capture(&donor_cam, 50 + seed);
        let spec = ForgerySpec::splice(Rect::new(30, 30, 96, 96), (100, 90), 1.0);
        let (img, truth) = forge(&host, Some(&donor), &spec, 0).unwrap();
        let field = correlation_field(&img, &noise_residual(&img).unwrap(), &fp, 65, 5).unwrap();
        let (mut inside, mut outside) = ((0.0, 0usize), (0.0, 0usize));
        for (&rho, &t) in field.plane.data().iter().zip(truth.bits()) {
            let acc = if t { &mut inside } else { &mut outside };
            acc.0 += rho;
            acc.1 += 1;
        }
        let (mi, mo) = (inside.0 / inside.1 as f64, outside.0 / outside.1 as f64);
        assert!(mi < mo, "seed {seed}: inside {mi} outside {mo}");
    }
}
