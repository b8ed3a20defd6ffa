use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::features::FeatureVector;

/// Linear max-margin classifier on standardized features. Positive scores mean "fake".
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    /// Converts a raw score into a signed distance from the hyperplane.
    pub margin_scale: f64,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn raw_score(&self, bins: &[f64]) -> f64 {
        let mut s = self.bias;
        for i in 0..self.weights.len() {
            s += self.weights[i] * (bins[i] - self.feature_mean[i]) / self.feature_scale[i];
        }
        s
    }

    /// Signed geometric distance to the hyperplane.
    pub fn distance(&self, bins: &[f64]) -> f64 {
        self.raw_score(bins) * self.margin_scale
    }

    pub fn is_fake(&self, bins: &[f64]) -> bool {
        self.raw_score(bins) > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            regularization: 1e-3,
            epochs: 100,
            seed: 0,
        }
    }
}

/// Standardization constants; zero-variance dimensions keep scale 1.
fn standardization(features: &[FeatureVector], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = features.len() as f64;
    let mut mean = vec![0.0; dim];
    for f in features {
        for (m, v) in mean.iter_mut().zip(&f.bins) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for f in features {
        for i in 0..dim {
            var[i] += (f.bins[i] - mean[i]).powi(2);
        }
    }
    let scale = var.into_iter().map(|v| if v > 0.0 { (v / n).sqrt() } else { 1.0 }).collect();
    (mean, scale)
}

/// Regularized hinge objective `λ/2·‖w‖² + mean(max(0, 1 − y·s))`, the bias counted as a weight.
fn objective(w: &[f64], xs: &[Vec<f64>], ys: &[f64], lambda: f64) -> f64 {
    let norm: f64 = w.iter().map(|v| v * v).sum();
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| (1.0 - y * dot(w, x)).max(0.0))
        .sum::<f64>()
        / xs.len() as f64;
    0.5 * lambda * norm + loss
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains on `features` with `is_fake` labels; also returns the objective of the averaged
/// iterate after every epoch.
pub fn train_model_traced(features: &[FeatureVector], is_fake: &[bool], params: &TrainParams) -> Result<(LinearModel, Vec<f64>)> {
    if features.is_empty() {
        return Err(Error::EmptyInput("training features"));
    }
    if features.len() != is_fake.len() {
        return Err(Error::invalid("features and labels differ in length"));
    }
    if !(params.regularization > 0.0 && params.regularization.is_finite()) {
        return Err(Error::invalid("regularization must be positive"));
    }
    if params.epochs == 0 {
        return Err(Error::invalid("training needs at least one epoch"));
    }
    if is_fake.iter().all(|&l| l) || is_fake.iter().all(|&l| !l) {
        return Err(Error::SingleClass);
    }
    let dim = features[0].bins.len();
    if features.iter().any(|f| f.bins.len() != dim) {
        return Err(Error::invalid("feature vectors differ in dimension"));
    }
    let (mean, scale) = standardization(features, dim);
    // Standardized samples with a trailing constant 1 so the bias is just another weight.
    let xs: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            let mut x: Vec<f64> = (0..dim).map(|i| (f.bins[i] - mean[i]) / scale[i]).collect();
            x.push(1.0);
            x
        })
        .collect();
    let ys: Vec<f64> = is_fake.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();

    let lambda = params.regularization;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut w = vec![0.0; dim + 1];
    let mut avg = vec![0.0; dim + 1];
    let mut t = 0usize;
    let mut trace = Vec::with_capacity(params.epochs);
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let margin = ys[i] * dot(&w, &xs[i]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, x) in w.iter_mut().zip(&xs[i]) {
                    *v += eta * ys[i] * x;
                }
            }
            let k = 1.0 / t as f64;
            for (a, v) in avg.iter_mut().zip(&w) {
                *a += (v - *a) * k;
            }
        }
        trace.push(objective(&avg, &xs, &ys, lambda));
    }
    let bias = avg[dim];
    avg.truncate(dim);
    let norm = avg.iter().map(|v| v * v).sum::<f64>().sqrt();
    let model = LinearModel {
        margin_scale: if norm > 0.0 { 1.0 / norm } else { 1.0 },
        weights: avg,
        bias,
        feature_mean: mean,
        feature_scale: scale,
    };
    Ok((model, trace))
}

pub fn train_model(features: &[FeatureVector], is_fake: &[bool], params: &TrainParams) -> Result<LinearModel> {
    train_model_traced(features, is_fake, params).map(|(m, _)| m)
}

const MAGIC: &[u8; 8] = b"LDSVM01\0";

pub fn encode_model(model: &LinearModel) -> Vec<u8> {
    let dim = model.dim();
    let mut out = Vec::with_capacity(12 + 8 * (3 * dim + 2));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    model.weights.iter().for_each(|&v| put(v));
    put(model.bias);
    model.feature_mean.iter().for_each(|&v| put(v));
    model.feature_scale.iter().for_each(|&v| put(v));
    put(model.margin_scale);
    out
}

pub fn decode_model(bytes: &[u8], origin: &Path) -> Result<LinearModel> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(Error::format(origin, "not a linear model file (bad magic)"));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    if bytes.len() != 12 + 8 * (3 * dim + 2) {
        return Err(Error::format(origin, format!("model of dimension {dim} has wrong length {}", bytes.len())));
    }
    let mut vals = bytes[12..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = |n: usize| -> Vec<f64> { vals.by_ref().take(n).collect() };
    let weights = take(dim);
    let bias = take(1)[0];
    let feature_mean = take(dim);
    let feature_scale = take(dim);
    let margin_scale = take(1)[0];
    let finite = weights.iter().chain(&feature_mean).chain(&feature_scale).chain([&bias, &margin_scale]).all(|v| v.is_finite());
    if !finite || feature_scale.iter().any(|&s| s <= 0.0) {
        return Err(Error::format(origin, "model contains non-finite values or non-positive scales"));
    }
    Ok(LinearModel {
        weights,
        bias,
        feature_mean,
        feature_scale,
        margin_scale,
    })
}

pub fn write_model(path: impl AsRef<Path>, model: &LinearModel) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<LinearModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn fv(bins: Vec<f64>) -> FeatureVector {
        FeatureVector {
            bins,
            block_origin: (0, 0),
            zero_residual: false,
        }
    }

    fn separable(n: usize, seed: u64) -> (Vec<FeatureVector>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fs = Vec::new();
        let mut ls = Vec::new();
        for i in 0..n {
            let fake = i % 2 == 0;
            let shift = if fake { 2.0 } else { -2.0 };
            let bins: Vec<f64> = (0..5)
                .map(|d| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    if d == 0 { shift + 0.5 * z } else { z }
                })
                .collect();
            fs.push(fv(bins));
            ls.push(fake);
        }
        (fs, ls)
    }

    #[test]
    fn two_points_are_separated() {
        let fs = vec![fv(vec![0.0, 1.0]), fv(vec![1.0, 0.0])];
        let m = train_model(&fs, &[false, true], &TrainParams::default()).unwrap();
        assert!(!m.is_fake(&fs[0].bins) && m.is_fake(&fs[1].bins));
        assert!(m.distance(&fs[1].bins) > 0.0 && m.distance(&fs[0].bins) < 0.0);
    }

    #[test]
    fn objective_settles_after_warmup() {
        for seed in 0..10 {
            let (fs, ls) = separable(200, seed);
            let (m, trace) = train_model_traced(&fs, &ls, &TrainParams { seed, ..Default::default() }).unwrap();
            for w in trace[2..].windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "seed {seed}: {trace:?}");
            }
            let acc = fs.iter().zip(&ls).filter(|(f, &l)| m.is_fake(&f.bins) == l).count();
            assert_eq!(acc, fs.len());
        }
    }

    #[test]
    fn deterministic_per_seed_and_errors() {
        let (fs, ls) = separable(50, 1);
        let p = TrainParams { seed: 4, ..Default::default() };
        assert_eq!(train_model(&fs, &ls, &p).unwrap(), train_model(&fs, &ls, &p).unwrap());
        assert!(matches!(train_model(&fs, &vec![true; 50], &p), Err(Error::SingleClass)));
        assert!(train_model(&fs, &ls, &TrainParams { regularization: 0.0, ..p }).is_err());
    }

    #[test]
    fn random_labels_generalize_at_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut make = |n: usize| -> (Vec<FeatureVector>, Vec<bool>) {
            (0..n).map(|_| (fv((0..20).map(|_| StandardNormal.sample(&mut rng)).collect()), rng.random_bool(0.5))).unzip()
        };
        let (train_f, train_l) = make(400);
        let (test_f, test_l) = make(2000);
        let m = train_model(&train_f, &train_l, &TrainParams::default()).unwrap();
        let acc = test_f.iter().zip(&test_l).filter(|(f, &l)| m.is_fake(&f.bins) == l).count() as f64 / 2000.0;
        assert!((0.4..=0.6).contains(&acc), "{acc}");
    }

    #[test]
    fn zero_weights_use_unit_margin_scale_and_file_roundtrip() {
        let m = LinearModel {
            weights: vec![0.0; 3],
            bias: -0.5,
            feature_mean: vec![0.1, 0.2, 0.3],
            feature_scale: vec![1.0, 2.0, 0.5],
            margin_scale: 1.0,
        };
        assert_eq!(m.distance(&[9.0, 9.0, 9.0]), -0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.svm");
        write_model(&path, &m).unwrap();
        assert_eq!(read_model(&path).unwrap(), m);
        let bytes = encode_model(&m);
        assert!(decode_model(&bytes[..bytes.len() - 1], &path).is_err());
        assert!(decode_model(b"LDSVM02\0\0\0\0\0", &path).is_err());
    }
}
