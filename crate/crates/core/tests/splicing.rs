use forgeloc::imgcore::{evaluate, read_mask, read_rgb, MaskSource, Plane};
use forgeloc::splicing::{
    collect_training_blocks, residual_features, sdh_map, splicing_mask, train_model, LinearModel, SplicingMaskParams,
    TrainParams, FEATURE_DIM,
};
use forgeloc::synth::{emit_corpus, scene, CorpusSpec};
use forgeloc::RgbImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::brute_histogram;

fn random_block(rng: &mut ChaCha8Rng) -> Plane {
    // Mix smooth content with noise of varying strength so every residual level occurs.
    let base = scene(128, 128, rng.random()).luminance();
    let amp = rng.random_range(0.0..3.0);
    let noise = Plane::from_fn(128, 128, |_, _| amp * rng.random_range(-1.0..1.0));
    base.zip_map(&noise, |v, n| (v + n).round()).unwrap()
}

#[test]
fn histograms_match_a_direct_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for i in 0..100 {
        let block = if i % 10 == 0 {
            Plane::from_fn(128, 128, |_, _| rng.random_range(0..256) as f64)
        } else {
            random_block(&mut rng)
        };
        let got = residual_features(&block).unwrap().bins;
        assert_eq!(got, brute_histogram(&block), "block {i}");
    }
}

#[test]
fn low_degree_polynomials_fall_in_the_zero_bin() {
    let zero = 2 * 125 + 2 * 25 + 2 * 5 + 2;
    for (a, b, c) in [(0.0, 0.0, 0.0), (0.5, -0.25, 0.01), (1.0, 2.0, -0.003)] {
        let block = Plane::from_fn(128, 128, |x, y| {
            let (x, y) = (x as f64, y as f64);
            17.0 + a * x + b * y + c * (x * x - x * y + 2.0 * y * y)
        });
        let f = residual_features(&block).unwrap();
        assert!(f.zero_residual);
        assert_eq!(f.bins[zero], 1.0);
    }
}

fn random_model(seed: u64) -> LinearModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    LinearModel {
        weights: (0..FEATURE_DIM).map(|_| rng.random_range(-1.0..1.0)).collect(),
        bias: rng.random_range(-0.1..0.1),
        feature_mean: (0..FEATURE_DIM).map(|_| rng.random_range(0.0..0.01)).collect(),
        feature_scale: (0..FEATURE_DIM).map(|_| rng.random_range(0.01..0.1)).collect(),
        margin_scale: 0.37,
    }
}

#[test]
fn distance_map_equals_per_block_recomputation() {
    let (w, h, block, stride) = (200, 170, 128, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img = RgbImage::from_fn(w, h, |_, _| [0, 1, 2].map(|_| rng.random_range(0..256) as f64));
    let model = random_model(9);
    let map = sdh_map(&img, &model, block, stride).unwrap();
    let axis = |len: usize| {
        let mut v: Vec<usize> = (0..=len - block).filter(|o| o % stride == 0).collect();
        if !v.contains(&(len - block)) {
            v.push(len - block);
        }
        v
    };
    let lum = img.luminance();
    let mut expected = vec![0.0; w * h];
    for &y0 in &axis(h) {
        for &x0 in &axis(w) {
            let d = model.distance(&residual_features(&lum.crop(x0, y0, block, block).unwrap()).unwrap().bins);
            for y in y0..y0 + block {
                for x in x0..x0 + block {
                    expected[y * w + x] += d;
                }
            }
        }
    }
    for (i, (a, b)) in map.plane.data().iter().zip(&expected).enumerate() {
        assert!((a - b).abs() <= 1e-9, "pixel {i}: {a} vs {b}");
    }
}

#[test]
fn spliced_regions_are_localized_on_held_out_images() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        cameras: 2,
        pristine_per_camera: 3,
        train_splices: 16,
        test_copymove: 0,
        test_splice: 10,
        test_inpaint: 0,
        seed: 3,
        ..Default::default()
    };
    let entries = emit_corpus(dir.path(), &spec).unwrap();
    let load = |split: &str| -> Vec<_> {
        entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| {
                (
                    read_rgb(dir.path().join(&e.image_path)).unwrap(),
                    read_mask(dir.path().join(&e.truth_path), MaskSource::GroundTruth).unwrap(),
                )
            })
            .collect()
    };
    let train = load("train");
    let test = load("test");
    let (features, labels) = collect_training_blocks(&train, 128, 16, 0).unwrap();
    let model = train_model(&features, &labels, &TrainParams::default()).unwrap();
    let maps: Vec<_> = test.iter().map(|(img, _)| sdh_map(img, &model, 128, 16).unwrap()).collect();
    let mean_f = |fraction: f64| {
        let params = SplicingMaskParams {
            fraction,
            ..Default::default()
        };
        maps.iter()
            .zip(&test)
            .map(|(m, (_, truth))| evaluate(&splicing_mask(m, &params).unwrap(), truth).unwrap().f_measure)
            .sum::<f64>()
            / test.len() as f64
    };
    let sweep: Vec<(f64, f64)> = [0.1, 0.15, 0.25, 0.35, 0.5, 0.65].iter().map(|&t| (t, mean_f(t))).collect();
    let at_default = sweep[2].1;
    // Higher fractions score better on this corpus; the default stays at 0.25.
    eprintln!("fraction sweep {sweep:?}");
    assert!(at_default >= 0.4, "{sweep:?}");
}
