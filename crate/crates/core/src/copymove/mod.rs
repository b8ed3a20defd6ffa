//! Copy-move detection: PatchMatch offset fields over a rotation/scale sweep, coherence
//! filtering, dense correlation verification, and PRNU-assisted source disambiguation.

mod filter;
mod nnf;
mod regions;
mod sweep;
mod transform;

use std::path::Path;

pub use filter::filter_offset_field;
pub use nnf::{compute_nnf, NnfParams, OffsetField, PatchMatch};
pub use regions::{copymove_mask, disambiguate_source, extract_copy_regions, CopyRegionPair, RegionParams, Role};
pub use sweep::sweep_transforms;
pub use transform::{TransformSpec, Warp};

use crate::error::{Error, Result};
use crate::imgcore::RgbImage;

/// Everything needed to go from an image to region pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CopyMoveParams {
    pub nnf: NnfParams,
    pub sweep: Vec<TransformSpec>,
    pub regions: RegionParams,
}

impl Default for CopyMoveParams {
    fn default() -> Self {
        Self {
            nnf: NnfParams::default(),
            sweep: TransformSpec::default_sweep(),
            regions: RegionParams::default(),
        }
    }
}

/// Sweep plus region extraction. Pairs come back with `Role::Unknown`.
pub fn detect_copymove(image: &RgbImage, params: &CopyMoveParams) -> Result<Vec<CopyRegionPair>> {
    let nnf = NnfParams {
        min_displacement: params.regions.min_displacement,
        ..params.nnf
    };
    let fields = sweep_transforms(image, &params.sweep, &nnf)?;
    Ok(extract_copy_regions(image, &fields, &params.regions))
}

/// Debug rendering: R = dx + 128, G = dy + 128, B = cost scaled to the field's maximum.
pub fn write_offset_field(path: impl AsRef<Path>, field: &OffsetField) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = field.dims();
    let max_cost = field.costs().iter().cloned().fold(0.0, f64::max);
    let mut buf = image::RgbImage::new(w as u32, h as u32);
    for y in 0..h {
        for x in 0..w {
            let (dx, dy) = field.offset(x, y);
            let c = if max_cost > 0.0 { field.cost(x, y) / max_cost * 255.0 } else { 0.0 };
            buf.put_pixel(
                x as u32,
                y as u32,
                image::Rgb([(dx + 128).clamp(0, 255) as u8, (dy + 128).clamp(0, 255) as u8, c.round() as u8]),
            );
        }
    }
    buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        source: e,
    })
}
