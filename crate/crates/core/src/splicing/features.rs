use crate::error::{Error, Result};
use crate::imgcore::Plane;

/// Truncation threshold: quantized residuals lie in `-T..=T`.
pub const T: i32 = 2;
const SYMBOLS: usize = (2 * T + 1) as usize;
/// 4-gram bins: `SYMBOLS^4`.
pub const FEATURE_DIM: usize = SYMBOLS * SYMBOLS * SYMBOLS * SYMBOLS;
pub const BLOCK: usize = 128;
const KERNEL: [f64; 4] = [1.0, -3.0, 3.0, -1.0];

/// Normalized co-occurrence histogram of a block's quantized third-order residual.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub bins: Vec<f64>,
    pub block_origin: (usize, usize),
    /// Every residual sample quantized to zero (all mass in the zero bin).
    pub zero_residual: bool,
}

/// Bin index of a 4-gram, first sample most significant.
#[inline]
pub fn gram_index(g: [i32; 4]) -> usize {
    g.iter().fold(0, |acc, &v| acc * SYMBOLS + (v + T) as usize)
}

/// Index of the sign-flipped 4-gram.
#[inline]
fn negated(index: usize) -> usize {
    let mut out = 0;
    let mut scale = 1;
    let mut rest = index;
    for _ in 0..4 {
        let digit = rest % SYMBOLS;
        rest /= SYMBOLS;
        out += (SYMBOLS - 1 - digit) * scale;
        scale *= SYMBOLS;
    }
    out
}

#[inline]
fn quantize(r: f64) -> i32 {
    (r.round() as i64).clamp(-(T as i64), T as i64) as i32
}

/// Raw (unmerged, unnormalized) 4-gram counts of the `size`×`size` block at `origin`,
/// horizontal and vertical directions summed.
fn raw_counts(lum: &Plane, origin: (usize, usize), size: usize) -> Vec<u64> {
    let mut hist = vec![0u64; FEATURE_DIM];
    let (x0, y0) = origin;
    let n = size.saturating_sub(3);
    let mut q = vec![0i32; n];
    let residual = |at: &dyn Fn(usize) -> f64| KERNEL.iter().enumerate().map(|(k, c)| c * at(k)).sum::<f64>();
    // Rows.
    for y in y0..y0 + size {
        for (i, slot) in q.iter_mut().enumerate() {
            *slot = quantize(residual(&|k| lum.get(x0 + i + k, y)));
        }
        for win in q.windows(4) {
            hist[gram_index([win[0], win[1], win[2], win[3]])] += 1;
        }
    }
    // Columns.
    for x in x0..x0 + size {
        for (i, slot) in q.iter_mut().enumerate() {
            *slot = quantize(residual(&|k| lum.get(x, y0 + i + k)));
        }
        for win in q.windows(4) {
            hist[gram_index([win[0], win[1], win[2], win[3]])] += 1;
        }
    }
    hist
}

/// Folds each bin onto the lexicographically smaller of itself and its sign flip, then
/// normalizes to unit mass.
pub(crate) fn symmetrize(raw: &[u64], origin: (usize, usize)) -> FeatureVector {
    let mut merged = vec![0u64; FEATURE_DIM];
    for (b, &c) in raw.iter().enumerate() {
        merged[b.min(negated(b))] += c;
    }
    let total: u64 = merged.iter().sum();
    let zero = gram_index([0; 4]);
    let bins = if total == 0 {
        vec![0.0; FEATURE_DIM]
    } else {
        merged.iter().map(|&c| c as f64 / total as f64).collect()
    };
    FeatureVector {
        zero_residual: total > 0 && merged[zero] == total,
        bins,
        block_origin: origin,
    }
}

/// Features of the block of `lum` at `origin` (must fit inside the plane).
pub(crate) fn block_features(lum: &Plane, origin: (usize, usize), size: usize) -> FeatureVector {
    symmetrize(&raw_counts(lum, origin, size), origin)
}

/// Co-occurrence features of a 128×128 luminance block.
pub fn residual_features(block: &Plane) -> Result<FeatureVector> {
    if block.dims() != (BLOCK, BLOCK) {
        return Err(Error::DimensionMismatch {
            expected: (BLOCK, BLOCK),
            actual: block.dims(),
        });
    }
    Ok(block_features(block, (0, 0), BLOCK))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn negation_is_an_involution() {
        for b in 0..FEATURE_DIM {
            assert_eq!(negated(negated(b)), b);
        }
        assert_eq!(negated(gram_index([0; 4])), gram_index([0; 4]));
        assert_eq!(negated(gram_index([2, -1, 0, 1])), gram_index([-2, 1, 0, -1]));
    }

    #[test]
    fn constant_and_quadratic_blocks_hit_zero_bin() {
        let zero = gram_index([0; 4]);
        for plane in [
            Plane::filled(128, 128, 77.0),
            Plane::from_fn(128, 128, |x, y| 0.5 * x as f64 + 0.25 * y as f64 + 3.0),
            Plane::from_fn(128, 128, |x, y| 0.01 * (x * x) as f64 - 0.02 * (x * y) as f64 + 0.003 * (y * y) as f64),
        ] {
            let f = residual_features(&plane).unwrap();
            assert!((f.bins[zero] - 1.0).abs() < 1e-12);
            assert!(f.zero_residual);
        }
    }

    #[test]
    fn wrong_size_rejected() {
        assert!(residual_features(&Plane::zeros(128, 127)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn mass_sums_to_one_and_lives_in_canonical_bins(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = Plane::from_fn(128, 128, |_, _| rng.random_range(0..256) as f64);
            let f = residual_features(&p).unwrap();
            prop_assert!((f.bins.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            for (b, &v) in f.bins.iter().enumerate() {
                prop_assert!(v >= 0.0);
                if b > negated(b) {
                    prop_assert_eq!(v, 0.0);
                }
            }
        }
    }
}
