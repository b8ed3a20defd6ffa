use crate::error::{Error, Result};
use crate::imgcore::Plane;

use super::OffsetField;

/// Fraction of offsets in each window (clipped at borders) lying within `tolerance`
/// (Chebyshev) of the window's componentwise median offset.
pub fn filter_offset_field(field: &OffsetField, window: usize, tolerance: u32) -> Result<Plane> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::invalid(format!("coherence window must be odd and >= 3, got {window}")));
    }
    let (w, h) = field.dims();
    let half = window / 2;
    let tol = tolerance as i32;
    let mut dxs = Vec::with_capacity(window * window);
    let mut dys = Vec::with_capacity(window * window);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(half), (y + half + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(half), (x + half + 1).min(w));
            dxs.clear();
            dys.clear();
            for yy in y0..y1 {
                for xx in x0..x1 {
                    let (dx, dy) = field.offset(xx, yy);
                    dxs.push(dx);
                    dys.push(dy);
                }
            }
            let n = dxs.len();
            let mid = (n - 1) / 2;
            let mx = *dxs.select_nth_unstable(mid).1;
            let my = *dys.select_nth_unstable(mid).1;
            let mut hits = 0usize;
            for yy in y0..y1 {
                for xx in x0..x1 {
                    let (dx, dy) = field.offset(xx, yy);
                    hits += ((dx - mx).abs() <= tol && (dy - my).abs() <= tol) as usize;
                }
            }
            out.push(hits as f64 / n as f64);
        }
    }
    Ok(Plane::from_raw(w, h, out))
}
