use crate::error::{ensure_same_dims, Result};

use super::mask::TamperMask;

/// Pixel-level precision, recall and F-measure over tampered pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

pub fn evaluate(predicted: &TamperMask, truth: &TamperMask) -> Result<Scores> {
    ensure_same_dims(truth.dims(), predicted.dims())?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &t) in predicted.bits().iter().zip(truth.bits()) {
        match (p, t) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    // A pristine image correctly left untouched scores perfectly.
    if tp + fp + fn_ == 0 {
        return Ok(Scores {
            precision: 1.0,
            recall: 1.0,
            f_measure: 1.0,
        });
    }
    if tp == 0 {
        return Ok(Scores {
            precision: 0.0,
            recall: 0.0,
            f_measure: 0.0,
        });
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    Ok(Scores {
        precision,
        recall,
        f_measure: 2.0 * precision * recall / (precision + recall),
    })
}

pub fn f_measure(predicted: &TamperMask, truth: &TamperMask) -> Result<f64> {
    evaluate(predicted, truth).map(|s| s.f_measure)
}

/// Four-way color coding of a prediction against the truth, as RGB triples:
/// gray = genuine kept, red = false alarm, white = miss, green = hit.
pub fn color_coded(predicted: &TamperMask, truth: &TamperMask) -> Result<Vec<[u8; 3]>> {
    ensure_same_dims(truth.dims(), predicted.dims())?;
    Ok(predicted
        .bits()
        .iter()
        .zip(truth.bits())
        .map(|(&p, &t)| match (p, t) {
            (false, false) => [128, 128, 128],
            (true, false) => [220, 30, 30],
            (false, true) => [255, 255, 255],
            (true, true) => [30, 200, 60],
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::MaskSource;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, on: &[(usize, usize)]) -> TamperMask {
        let mut m = TamperMask::genuine(w, h, MaskSource::GroundTruth);
        for &(x, y) in on {
            m.set(x, y, true);
        }
        m
    }

    #[test]
    fn perfect_match_scores_one() {
        let t = mask(5, 5, &[(1, 1), (2, 1)]);
        assert_eq!(f_measure(&t, &t).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_scores_zero() {
        let t = mask(5, 5, &[(1, 1)]);
        let p = mask(5, 5, &[(3, 3)]);
        assert_eq!(f_measure(&p, &t).unwrap(), 0.0);
    }

    #[test]
    fn half_recall_gives_two_thirds() {
        let t = mask(5, 5, &[(1, 1), (2, 1)]);
        let p = mask(5, 5, &[(1, 1)]);
        let s = evaluate(&p, &t).unwrap();
        assert_eq!(s.precision, 1.0);
        assert_eq!(s.recall, 0.5);
        assert!((s.f_measure - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_conventions() {
        let empty = mask(4, 4, &[]);
        let some = mask(4, 4, &[(0, 0)]);
        assert_eq!(f_measure(&empty, &empty).unwrap(), 1.0);
        assert_eq!(f_measure(&some, &empty).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        assert!(f_measure(&mask(4, 4, &[]), &mask(4, 5, &[])).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_reflexive(
            a in prop::collection::vec(any::<bool>(), 64),
            b in prop::collection::vec(any::<bool>(), 64),
        ) {
            let a = TamperMask::from_bits(8, 8, a, MaskSource::Prnu).unwrap();
            let b = TamperMask::from_bits(8, 8, b, MaskSource::Prnu).unwrap();
            let ab = f_measure(&a, &b).unwrap();
            let ba = f_measure(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-15);
            prop_assert_eq!(f_measure(&a, &a).unwrap(), 1.0);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
