//! Image and mask file I/O (8-bit PNG, binary PGM/PPM).

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, Luma, Rgb};

use super::mask::{MaskSource, TamperMask};
use super::plane::{Plane, RgbImage};
use crate::error::{Error, Result};

fn open_image(path: &Path) -> Result<DynamicImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let format = image::guess_format(&bytes)
        .or_else(|_| ImageFormat::from_path(path))
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    image::load_from_memory_with_format(&bytes, format).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an 8-bit color or grayscale image; grayscale is replicated over R, G, B.
pub fn read_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let rgb = open_image(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::format(path, "empty image"));
    }
    Ok(RgbImage::from_fn(w, h, |x, y| {
        let p = rgb.get_pixel(x as u32, y as u32).0;
        [p[0] as f64, p[1] as f64, p[2] as f64]
    }))
}

fn to_rgb8(image: &RgbImage) -> image::RgbImage {
    let (w, h) = image.dims();
    image::RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let p = image.pixel(x as usize, y as usize);
        Rgb(p.map(|v| v.round().clamp(0.0, 255.0) as u8))
    })
}

/// Writes an 8-bit image; the format follows the extension (`.png`, `.ppm`).
pub fn write_rgb(path: impl AsRef<Path>, image: &RgbImage) -> Result<()> {
    let path = path.as_ref();
    to_rgb8(image).save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a plane as an 8-bit grayscale image, linearly mapping `[lo, hi]` onto `[0, 255]`.
pub fn write_plane(path: impl AsRef<Path>, plane: &Plane, lo: f64, hi: f64) -> Result<()> {
    let path = path.as_ref();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let img = GrayImage::from_fn(plane.width() as u32, plane.height() as u32, |x, y| {
        let v = (plane.get(x as usize, y as usize) - lo) / span * 255.0;
        Luma([v.round().clamp(0.0, 255.0) as u8])
    });
    img.save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

fn mask_to_gray(mask: &TamperMask) -> GrayImage {
    GrayImage::from_fn(mask.width() as u32, mask.height() as u32, |x, y| {
        Luma([if mask.get(x as usize, y as usize) { 255 } else { 0 }])
    })
}

fn gray_to_mask(gray: &GrayImage, source: MaskSource) -> TamperMask {
    TamperMask::from_fn(gray.width() as usize, gray.height() as usize, source, |x, y| {
        gray.get_pixel(x as u32, y as u32).0[0] >= 128
    })
}

/// Encodes a mask as a single-channel PNG (0 = genuine, 255 = tampered).
pub fn encode_mask_png(mask: &TamperMask) -> Result<Vec<u8>> {
    let mut buf = Cursor::new(Vec::new());
    mask_to_gray(mask)
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: "<memory>".into(),
            source,
        })?;
    Ok(buf.into_inner())
}

pub fn decode_mask_png(bytes: &[u8], source: MaskSource) -> Result<TamperMask> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png).map_err(|e| Error::Image {
        path: "<memory>".into(),
        source: e,
    })?;
    Ok(gray_to_mask(&img.to_luma8(), source))
}

pub fn write_mask(path: impl AsRef<Path>, mask: &TamperMask) -> Result<()> {
    let path = path.as_ref();
    mask_to_gray(mask).save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a mask; pixels ≥ 128 count as tampered.
pub fn read_mask(path: impl AsRef<Path>, source: MaskSource) -> Result<TamperMask> {
    let path = path.as_ref();
    Ok(gray_to_mask(&open_image(path)?.to_luma8(), source))
}

/// Serializes a mask to the PNG mask format and parses it back.
pub fn mask_roundtrip(mask: &TamperMask) -> Result<TamperMask> {
    decode_mask_png(&encode_mask_png(mask)?, mask.source())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_masks_roundtrip() {
        for fill in [false, true] {
            let m = TamperMask::from_fn(8, 8, MaskSource::Fused, |_, _| fill);
            assert_eq!(mask_roundtrip(&m).unwrap(), m);
        }
    }

    proptest! {
        #[test]
        fn random_masks_roundtrip(bits in prop::collection::vec(any::<bool>(), 33 * 17)) {
            let m = TamperMask::from_bits(33, 17, bits, MaskSource::Splicing).unwrap();
            prop_assert_eq!(mask_roundtrip(&m).unwrap(), m);
        }
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_mask("/nonexistent/mask.png", MaskSource::GroundTruth).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/mask.png"));
    }

    #[test]
    fn rgb_png_and_ppm_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let img = RgbImage::from_fn(6, 4, |x, y| [x as f64 * 40.0, y as f64 * 60.0, 255.0]);
        for name in ["a.png", "a.ppm"] {
            let p = dir.path().join(name);
            write_rgb(&p, &img).unwrap();
            assert_eq!(read_rgb(&p).unwrap(), img);
        }
    }
}
