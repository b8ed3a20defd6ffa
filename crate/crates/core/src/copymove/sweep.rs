use crate::error::{Error, Result};
use crate::imgcore::RgbImage;
use crate::par;

use super::nnf::{self, NnfParams};
use super::transform::{TransformSpec, Warp};
use super::OffsetField;

/// Per-spec seed: spec `i` uses `seed + i·SEED_STRIDE`, so the leading identity spec reuses `seed`.
const SEED_STRIDE: u64 = 0x9e37_79b9_7f4a_7c15;

/// Matches the image against each rotated/rescaled copy of itself. The identity spec is
/// prepended when absent, so element 0 is always the plain self-match.
pub fn sweep_transforms(image: &RgbImage, specs: &[TransformSpec], params: &NnfParams) -> Result<Vec<(TransformSpec, OffsetField)>> {
    if specs.is_empty() {
        return Err(Error::invalid("transform sweep needs at least one spec"));
    }
    let mut all = Vec::with_capacity(specs.len() + 1);
    if !specs.iter().any(TransformSpec::is_identity) {
        all.push(TransformSpec::IDENTITY);
    }
    all.extend_from_slice(specs);
    if let Some(i) = all.iter().position(TransformSpec::is_identity) {
        all[..=i].rotate_right(1);
    }
    let jobs: Vec<(usize, TransformSpec)> = all.into_iter().enumerate().collect();
    par::map(&jobs, |&(i, spec)| {
        let p = NnfParams {
            seed: params.seed.wrapping_add((i as u64).wrapping_mul(SEED_STRIDE)),
            ..*params
        };
        nnf::run(image, Warp::new(&spec, image.dims()), &p).map(|f| (spec, f))
    })
    .into_iter()
    .collect()
}
