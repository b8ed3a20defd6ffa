//! wasm bindings behind `www/index.html`. Images cross the boundary as RGBA bytes.

use forgeloc::copymove::{compute_nnf, copymove_mask, detect_copymove, CopyMoveParams, NnfParams, TransformSpec};
use forgeloc::synth::{forge, scene, shoot, ForgerySpec, Rect, SyntheticCamera};
use forgeloc::{Error, RgbImage, TamperMask};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Sample {
    width: usize,
    height: usize,
    image: Vec<u8>,
    truth: Vec<u8>,
}

#[wasm_bindgen]
impl Sample {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    /// Forged image, RGBA.
    pub fn image(&self) -> Vec<u8> {
        self.image.clone()
    }

    /// Pasted area in white on black, RGBA.
    pub fn truth(&self) -> Vec<u8> {
        self.truth.clone()
    }
}

/// A camera capture of a procedural scene with one block copied elsewhere, rotated by
/// `rotation` degrees.
#[wasm_bindgen]
pub fn synth_copy_move(size: usize, seed: u32, rotation: f64) -> Result<Sample, JsError> {
    make_sample(size, seed as u64, rotation).map_err(js)
}

/// Copy-move mask over the image; `full_sweep` also searches rotated and rescaled copies.
#[wasm_bindgen]
pub fn detect_copy_move(rgba: &[u8], width: usize, height: usize, full_sweep: bool) -> Result<Vec<u8>, JsError> {
    let image = from_rgba(rgba, width, height).map_err(js)?;
    let mask = copy_move_mask(&image, full_sweep).map_err(js)?;
    Ok(mask_rgba(&mask))
}

/// Dense nearest-neighbour offsets of the unwarped image: hue is direction, brightness is length.
#[wasm_bindgen]
pub fn offset_field(rgba: &[u8], width: usize, height: usize) -> Result<Vec<u8>, JsError> {
    let image = from_rgba(rgba, width, height).map_err(js)?;
    offsets_rgba(&image).map_err(js)
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn make_sample(size: usize, seed: u64, rotation: f64) -> forgeloc::Result<Sample> {
    if size < 96 {
        return Err(Error::InvalidParameter(format!("sample size {size} below 96")));
    }
    let camera = SyntheticCamera::new(0, size, size, 0.02, 2.0, seed)?;
    let host = shoot(&camera, &scene(size, size, seed ^ 0x5eed), seed.wrapping_add(1))?;
    let side = size * 3 / 8;
    let spec = ForgerySpec::copy_move(Rect::new(size / 16, size / 16, side, side), (size - side - size / 16, size - side - size / 16))
        .with_rotation(rotation);
    let (forged, truth) = forge(&host, None, &spec, seed)?;
    Ok(Sample {
        width: size,
        height: size,
        image: to_rgba(&forged.quantized()),
        truth: mask_rgba(&truth),
    })
}

fn from_rgba(rgba: &[u8], width: usize, height: usize) -> forgeloc::Result<RgbImage> {
    if width == 0 || height == 0 || rgba.len() != width * height * 4 {
        return Err(Error::InvalidParameter(format!("{} bytes for a {width}x{height} RGBA image", rgba.len())));
    }
    Ok(RgbImage::from_fn(width, height, |x, y| {
        let i = (y * width + x) * 4;
        [rgba[i] as f64, rgba[i + 1] as f64, rgba[i + 2] as f64]
    }))
}

fn to_rgba(image: &RgbImage) -> Vec<u8> {
    let (w, h) = image.dims();
    let mut out = Vec::with_capacity(w * h * 4);
    for y in 0..h {
        for x in 0..w {
            let p = image.pixel(x, y);
            out.extend(p.map(|v| v.round().clamp(0.0, 255.0) as u8));
            out.push(255);
        }
    }
    out
}

fn mask_rgba(mask: &TamperMask) -> Vec<u8> {
    mask.bits().iter().flat_map(|&b| if b { [255, 255, 255, 255] } else { [0, 0, 0, 255] }).collect()
}

fn copy_move_mask(image: &RgbImage, full_sweep: bool) -> forgeloc::Result<TamperMask> {
    let params = CopyMoveParams {
        sweep: if full_sweep { TransformSpec::default_sweep() } else { vec![TransformSpec::IDENTITY] },
        ..CopyMoveParams::default()
    };
    let pairs = detect_copymove(image, &params)?;
    Ok(copymove_mask(&pairs, image.dims()))
}

fn offsets_rgba(image: &RgbImage) -> forgeloc::Result<Vec<u8>> {
    let field = compute_nnf(image, &NnfParams::default())?;
    let (w, h) = field.dims();
    let reach = w.max(h) as f64;
    let mut out = Vec::with_capacity(w * h * 4);
    for &(dx, dy) in field.offsets() {
        let hue = (dy as f64).atan2(dx as f64).to_degrees().rem_euclid(360.0);
        let value = ((dx as f64).hypot(dy as f64) / reach).sqrt().min(1.0);
        out.extend(hsv(hue, 0.85, value));
        out.push(255);
    }
    Ok(out)
}

fn hsv(h: f64, s: f64, v: f64) -> [u8; 3] {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|u| ((u + m) * 255.0).round() as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgba_roundtrip() {
        let img = RgbImage::from_fn(5, 3, |x, y| [x as f64 * 40.0, y as f64 * 80.0, 7.0]);
        let bytes = to_rgba(&img);
        assert_eq!(bytes.len(), 60);
        assert_eq!(from_rgba(&bytes, 5, 3).unwrap(), img);
        assert!(from_rgba(&bytes, 4, 3).is_err());
    }

    #[test]
    fn hsv_primaries() {
        assert_eq!(hsv(0.0, 1.0, 1.0), [255, 0, 0]);
        assert_eq!(hsv(120.0, 1.0, 1.0), [0, 255, 0]);
        assert_eq!(hsv(240.0, 1.0, 1.0), [0, 0, 255]);
        assert_eq!(hsv(77.0, 0.5, 0.0), [0, 0, 0]);
    }

    #[test]
    fn sample_copy_is_found() {
        let s = make_sample(160, 3, 0.0).unwrap();
        let img = from_rgba(&s.image, 160, 160).unwrap();
        let mask = copy_move_mask(&img, false).unwrap();
        let truth: Vec<bool> = s.truth.chunks(4).map(|p| p[0] == 255).collect();
        let hit = mask.bits().iter().zip(&truth).filter(|(m, t)| **m && **t).count();
        let area = truth.iter().filter(|t| **t).count();
        assert!(hit as f64 > 0.8 * area as f64, "{hit} of {area}");
        assert_eq!(offsets_rgba(&img).unwrap().len(), 160 * 160 * 4);
    }
}
