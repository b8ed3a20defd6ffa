//! Fingerprint files and cluster manifests.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgcore::Plane;

use super::fingerprint::Fingerprint;

const MAGIC: &[u8; 8] = b"PRNUFP1\0";

/// `PRNUFP1\0`, u32 width, u32 height, u32 members, then numerator and denominator as
/// little-endian f32, row-major.
pub fn encode_fingerprint(fp: &Fingerprint) -> Vec<u8> {
    let (w, h) = fp.dims();
    let mut out = Vec::with_capacity(20 + 8 * w * h);
    out.extend_from_slice(MAGIC);
    for v in [w as u32, h as u32, fp.members() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for plane in [fp.numerator(), fp.denominator()] {
        for &v in plane.data() {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_fingerprint(bytes: &[u8], id: usize, origin: &Path) -> Result<Fingerprint> {
    let bad = |m: &str| Error::format(origin, m.to_string());
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(bad("not a fingerprint file (bad magic)"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let (w, h, members) = (word(0), word(1), word(2));
    let n = w
        .checked_mul(h)
        .filter(|&n| n > 0)
        .ok_or_else(|| bad("invalid fingerprint dimensions"))?;
    if bytes.len() != 20 + 8 * n {
        return Err(bad("fingerprint payload length does not match header"));
    }
    let floats = |start: usize| -> Vec<f64> {
        bytes[start..start + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect()
    };
    let numerator = Plane::new(w, h, floats(20)).map_err(|e| bad(&e.to_string()))?;
    let denominator = Plane::new(w, h, floats(20 + 4 * n)).map_err(|e| bad(&e.to_string()))?;
    Fingerprint::from_parts(id, numerator, denominator, members).map_err(|e| bad(&e.to_string()))
}

pub fn write_fingerprint(path: impl AsRef<Path>, fp: &Fingerprint) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_fingerprint(fp)).map_err(|e| Error::io(path, e))
}

pub fn read_fingerprint(path: impl AsRef<Path>, id: usize) -> Result<Fingerprint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_fingerprint(&bytes, id, path)
}

/// Rounds the stored planes to what the file format keeps.
pub fn as_stored(fp: &Fingerprint) -> Fingerprint {
    decode_fingerprint(&encode_fingerprint(fp), fp.id, Path::new("<memory>")).expect("encoded fingerprint decodes")
}

/// One line of a cluster/association manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub cluster: Option<usize>,
    pub best_pce: f64,
}

/// `image_id,cluster_id|-,best_pce`, one line per image.
pub fn format_cluster_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let cluster = e.cluster.map_or_else(|| "-".to_string(), |c| c.to_string());
        let _ = writeln!(out, "{},{},{}", e.image_id, cluster, e.best_pce);
    }
    out
}

pub fn parse_cluster_manifest(text: &str, origin: &Path) -> Result<Vec<ManifestEntry>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let bad = || Error::format(origin, format!("line {}: expected image_id,cluster,pce", n + 1));
            let mut parts = line.rsplitn(3, ',');
            let pce = parts.next().ok_or_else(bad)?.trim();
            let cluster = parts.next().ok_or_else(bad)?.trim();
            let image_id = parts.next().ok_or_else(bad)?.trim().to_string();
            Ok(ManifestEntry {
                image_id,
                cluster: if cluster == "-" {
                    None
                } else {
                    Some(cluster.parse().map_err(|_| bad())?)
                },
                best_pce: pce.parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

pub fn write_cluster_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_cluster_manifest(entries)).map_err(|e| Error::io(path, e))
}

pub fn read_cluster_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cluster_manifest(&text, path)
}
