use crate::error::{Error, Result};
use crate::imgcore::{Integral, TamperMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLabel {
    Pristine,
    Fake,
    Skip,
}

/// Block origins on a `stride` grid, plus one border-aligned row/column when the grid does
/// not end exactly at the image edge.
pub fn block_origins(width: usize, height: usize, block: usize, stride: usize) -> Vec<(usize, usize)> {
    let axis = |len: usize| -> Vec<usize> {
        if len < block || stride == 0 {
            return Vec::new();
        }
        let mut v: Vec<usize> = (0..=len - block).step_by(stride).collect();
        if *v.last().expect("nonempty") != len - block {
            v.push(len - block);
        }
        v
    };
    let xs = axis(width);
    axis(height).into_iter().flat_map(|y| xs.iter().map(move |&x| (x, y))).collect()
}

/// Fake if 20–80% of the block is forged, pristine if none of it is, otherwise skipped.
pub fn label_blocks(truth: &TamperMask, block: usize, stride: usize) -> Result<Vec<((usize, usize), BlockLabel)>> {
    let (w, h) = truth.dims();
    if block == 0 || stride == 0 || block > w || block > h {
        return Err(Error::invalid(format!("block {block} (stride {stride}) does not fit a {w}x{h} mask")));
    }
    let ones: Vec<f64> = truth.bits().iter().map(|&b| b as u8 as f64).collect();
    let sums = Integral::new(&ones, w, h);
    let area = (block * block) as f64;
    Ok(block_origins(w, h, block, stride)
        .into_iter()
        .map(|(x, y)| {
            let forged = sums.rect(x, y, x + block, y + block);
            let fraction = forged / area;
            let label = if forged == 0.0 {
                BlockLabel::Pristine
            } else if (0.2..=0.8).contains(&fraction) {
                BlockLabel::Fake
            } else {
                BlockLabel::Skip
            };
            ((x, y), label)
        })
        .collect())
}
