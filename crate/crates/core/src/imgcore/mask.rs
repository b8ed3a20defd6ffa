use std::fmt;

use crate::error::{ensure_same_dims, Error, Result};

/// Which stage produced a mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskSource {
    Prnu,
    CopyMove,
    Splicing,
    Fused,
    /// Reference masks read from disk or emitted by the generator.
    GroundTruth,
}

impl MaskSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MaskSource::Prnu => "prnu",
            MaskSource::CopyMove => "copymove",
            MaskSource::Splicing => "splicing",
            MaskSource::Fused => "fused",
            MaskSource::GroundTruth => "truth",
        }
    }
}

impl fmt::Display for MaskSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Binary per-pixel tamper decision (`true` = tampered).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TamperMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    source: MaskSource,
}

impl TamperMask {
    pub fn genuine(width: usize, height: usize, source: MaskSource) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
            source,
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>, source: MaskSource) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid(format!(
                "mask has {} bits, expected {width}x{height}",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
            source,
        })
    }

    pub fn from_fn(width: usize, height: usize, source: MaskSource, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
            source,
        }
    }

    /// Axis-aligned rectangle `[x0, x0+w) × [y0, y0+h)`, clipped to the mask.
    pub fn rect(width: usize, height: usize, x0: usize, y0: usize, w: usize, h: usize, source: MaskSource) -> Self {
        Self::from_fn(width, height, source, |x, y| x >= x0 && x < x0 + w && y >= y0 && y < y0 + h)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn source(&self) -> MaskSource {
        self.source
    }

    pub fn with_source(mut self, source: MaskSource) -> Self {
        self.source = source;
        self
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    /// Number of tampered pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn union(&self, other: &TamperMask) -> Result<TamperMask> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect(),
            source: self.source,
        })
    }

    pub fn intersection_count(&self, other: &TamperMask) -> Result<usize> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count())
    }
}
