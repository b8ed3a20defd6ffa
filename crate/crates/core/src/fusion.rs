//! Reliability-ordered combination of the detector masks.

use crate::error::{ensure_same_dims, Result};
use crate::imgcore::{MaskSource, TamperMask};

pub const DEFAULT_PCE_OVERRIDE: f64 = 1200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FusionInput {
    pub copymove_mask: Option<TamperMask>,
    pub prnu_mask: Option<TamperMask>,
    pub prnu_pce: Option<f64>,
    pub splicing_mask: TamperMask,
}

/// Copy-move when it found something (joined with PRNU above `pce_override`), otherwise
/// PRNU when available, otherwise splicing.
pub fn fuse_masks(input: &FusionInput, pce_override: f64) -> Result<TamperMask> {
    let dims = input.splicing_mask.dims();
    for m in [&input.copymove_mask, &input.prnu_mask].into_iter().flatten() {
        ensure_same_dims(dims, m.dims())?;
    }
    let out = match (&input.copymove_mask, &input.prnu_mask) {
        (Some(cm), prnu) if cm.any() => match (prnu, input.prnu_pce) {
            (Some(p), Some(pce)) if pce > pce_override => cm.union(p)?,
            _ => cm.clone(),
        },
        (_, Some(p)) => p.clone(),
        _ => input.splicing_mask.clone(),
    };
    Ok(out.with_source(MaskSource::Fused))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: usize, source: MaskSource) -> TamperMask {
        TamperMask::rect(64, 64, x, 0, 10, 10, source)
    }

    #[test]
    fn truth_table() {
        let cm_full = r(0, MaskSource::CopyMove);
        let cm_empty = TamperMask::genuine(64, 64, MaskSource::CopyMove);
        let prnu = r(20, MaskSource::Prnu);
        let spl = r(40, MaskSource::Splicing);
        // copy-move: absent / empty / nonempty; PRNU: absent / present; PCE: below / above.
        let mut cases = 0;
        for cm in [None, Some(&cm_empty), Some(&cm_full)] {
            for pm in [None, Some(&prnu)] {
                for pce in [800.0, 1500.0] {
                    let input = FusionInput {
                        copymove_mask: cm.cloned(),
                        prnu_mask: pm.cloned(),
                        prnu_pce: pm.map(|_| pce),
                        splicing_mask: spl.clone(),
                    };
                    let got = fuse_masks(&input, DEFAULT_PCE_OVERRIDE).unwrap();
                    let want = match (cm.is_some_and(|m| m.any()), pm.is_some(), pce > 1200.0) {
                        (true, true, true) => cm_full.union(&prnu).unwrap(),
                        (true, _, _) => cm_full.clone(),
                        (false, true, _) => prnu.clone(),
                        (false, false, _) => spl.clone(),
                    };
                    assert_eq!(got.bits(), want.bits(), "cm={:?} prnu={} pce={pce}", cm.map(|m| m.any()), pm.is_some());
                    assert_eq!(got.source(), MaskSource::Fused);
                    cases += 1;
                }
            }
        }
        assert_eq!(cases, 12);
    }

    #[test]
    fn override_boundary_only_adds_pixels() {
        let input = |pce: f64| FusionInput {
            copymove_mask: Some(r(0, MaskSource::CopyMove)),
            prnu_mask: Some(r(5, MaskSource::Prnu)),
            prnu_pce: Some(pce),
            splicing_mask: r(40, MaskSource::Splicing),
        };
        let below = fuse_masks(&input(1200.0), 1200.0).unwrap();
        let above = fuse_masks(&input(1200.0001), 1200.0).unwrap();
        assert_eq!(below.count(), 100);
        assert_eq!(above.count(), 150);
        assert!(below.bits().iter().zip(above.bits()).all(|(&b, &a)| !b || a));
    }

    #[test]
    fn dimension_mismatch() {
        let input = FusionInput {
            copymove_mask: None,
            prnu_mask: Some(TamperMask::genuine(32, 32, MaskSource::Prnu)),
            prnu_pce: Some(10.0),
            splicing_mask: TamperMask::genuine(64, 64, MaskSource::Splicing),
        };
        assert!(fuse_masks(&input, 1200.0).is_err());
    }
}
