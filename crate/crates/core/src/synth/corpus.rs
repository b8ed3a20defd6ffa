//! Writes a mixed synthetic corpus (images, truth masks, manifest CSV) to disk.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imgcore::{write_mask, write_rgb, MaskSource, RgbImage, TamperMask};

use super::{forge, scene, shoot, ForgeryKind, ForgerySpec, Rect, SyntheticCamera, DEFAULT_NOISE_STD, DEFAULT_SIGMA_K};

/// Layout of an emitted corpus. Train rows are pristine captures plus splices (for the
/// classifier); test rows mix copy-move, splice and inpainting forgeries.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub width: usize,
    pub height: usize,
    pub cameras: usize,
    pub pristine_per_camera: usize,
    pub train_splices: usize,
    pub test_copymove: usize,
    pub test_splice: usize,
    pub test_inpaint: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            cameras: 3,
            pristine_per_camera: 6,
            train_splices: 12,
            test_copymove: 10,
            test_splice: 10,
            test_inpaint: 10,
            seed: 0,
        }
    }
}

/// One manifest row. Paths are relative to the corpus root.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub image_id: String,
    pub image_path: PathBuf,
    pub truth_path: PathBuf,
    pub split: &'static str,
    pub kind: &'static str,
    pub camera: usize,
}

pub const MANIFEST_HEADER: [&str; 6] = ["image_id", "image_path", "truth_path", "split", "kind", "camera"];

struct Generator {
    spec: CorpusSpec,
    cameras: Vec<SyntheticCamera>,
    donors: Vec<SyntheticCamera>,
    rng: ChaCha8Rng,
}

impl Generator {
    fn capture(&mut self, camera: usize) -> Result<RgbImage> {
        let (w, h) = (self.spec.width, self.spec.height);
        let scene_seed = self.rng.random();
        let noise_seed = self.rng.random();
        shoot(&self.cameras[camera], &scene(w, h, scene_seed), noise_seed)
    }

    fn donor_capture(&mut self) -> Result<RgbImage> {
        let (w, h) = (self.spec.width, self.spec.height);
        let d = self.rng.random_range(0..self.donors.len());
        let scene_seed = self.rng.random();
        let noise_seed = self.rng.random();
        shoot(&self.donors[d], &scene(w, h, scene_seed), noise_seed)
    }

    fn splice(&mut self, host: &RgbImage) -> Result<(RgbImage, TamperMask)> {
        let (w, h) = host.dims();
        let donor = self.donor_capture()?;
        let side = self.rng.random_range(72..=96).min(w.min(h) * 3 / 8);
        let scale = self.rng.random_range(1.15..1.35);
        let src = Rect::new(self.rng.random_range(0..=w - side), self.rng.random_range(0..=h - side), side, side);
        let probe = ForgerySpec::splice(src, (0, 0), scale).target_rect();
        let target = (
            self.rng.random_range(0..=w - probe.width),
            self.rng.random_range(0..=h - probe.height),
        );
        forge(host, Some(&donor), &ForgerySpec::splice(src, target, scale), 0)
    }

    fn copy_move(&mut self, host: &RgbImage) -> Result<(RgbImage, TamperMask)> {
        let (w, h) = host.dims();
        let side = self.rng.random_range(48..=72).min(w.min(h) / 3);
        for _ in 0..1000 {
            let src = Rect::new(self.rng.random_range(0..=w - side), self.rng.random_range(0..=h - side), side, side);
            let dst = Rect::new(self.rng.random_range(0..=w - side), self.rng.random_range(0..=h - side), side, side);
            if !src.overlaps(&dst) {
                return forge(host, None, &ForgerySpec::copy_move(src, (dst.x, dst.y)), 0);
            }
        }
        Err(Error::invalid("image too small to place a non-overlapping copy"))
    }

    fn inpaint(&mut self, host: &RgbImage) -> Result<(RgbImage, TamperMask)> {
        let (w, h) = host.dims();
        let side = self.rng.random_range(64..=96).min(w.min(h) / 3);
        let target = (self.rng.random_range(0..=w - side), self.rng.random_range(0..=h - side));
        let seed = self.rng.random();
        forge(host, None, &ForgerySpec::inpaint((side, side), target), seed)
    }
}

/// Generates the corpus under `root` (creating `images/`, `masks/` and `manifest.csv`).
pub fn emit_corpus(root: impl AsRef<Path>, spec: &CorpusSpec) -> Result<Vec<CorpusEntry>> {
    let root = root.as_ref();
    if spec.cameras == 0 || spec.width < 128 || spec.height < 128 {
        return Err(Error::invalid("corpus needs at least one camera and images of at least 128x128"));
    }
    for dir in ["images", "masks"] {
        let p = root.join(dir);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let (w, h) = (spec.width, spec.height);
    let cameras = (0..spec.cameras)
        .map(|c| SyntheticCamera::new(c, w, h, DEFAULT_SIGMA_K, DEFAULT_NOISE_STD, spec.seed.wrapping_add(c as u64)))
        .collect::<Result<Vec<_>>>()?;
    // Splice donors: unrelated sensors with a noisier pipeline.
    let donors = (0..2)
        .map(|d| SyntheticCamera::new(100 + d, w, h, DEFAULT_SIGMA_K, 2.0 * DEFAULT_NOISE_STD, !spec.seed ^ d as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut g = Generator {
        spec: spec.clone(),
        cameras,
        donors,
        rng: ChaCha8Rng::seed_from_u64(spec.seed ^ 0x434f_5250_5553),
    };

    let mut plan: Vec<(&'static str, Option<ForgeryKind>, usize)> = Vec::new();
    for c in 0..spec.cameras {
        plan.extend((0..spec.pristine_per_camera).map(|_| ("train", None, c)));
    }
    plan.extend((0..spec.train_splices).map(|i| ("train", Some(ForgeryKind::Splice), i % spec.cameras)));
    plan.extend((0..spec.test_copymove).map(|i| ("test", Some(ForgeryKind::CopyMove), i % spec.cameras)));
    plan.extend((0..spec.test_splice).map(|i| ("test", Some(ForgeryKind::Splice), i % spec.cameras)));
    plan.extend((0..spec.test_inpaint).map(|i| ("test", Some(ForgeryKind::InpaintLike), i % spec.cameras)));

    let mut entries = Vec::with_capacity(plan.len());
    for (i, (split, kind, camera)) in plan.into_iter().enumerate() {
        let host = g.capture(camera)?;
        let (image, truth) = match kind {
            None => (host, TamperMask::genuine(w, h, MaskSource::GroundTruth)),
            Some(ForgeryKind::Splice) => g.splice(&host)?,
            Some(ForgeryKind::CopyMove) => g.copy_move(&host)?,
            Some(ForgeryKind::InpaintLike) => g.inpaint(&host)?,
        };
        let image_id = format!("img{i:04}");
        let image_path = PathBuf::from("images").join(format!("{image_id}.png"));
        let truth_path = PathBuf::from("masks").join(format!("{image_id}.png"));
        write_rgb(root.join(&image_path), &image)?;
        write_mask(root.join(&truth_path), &truth)?;
        entries.push(CorpusEntry {
            image_id,
            image_path,
            truth_path,
            split,
            kind: kind.map_or("pristine", ForgeryKind::as_str),
            camera,
        });
    }
    write_manifest(&root.join("manifest.csv"), &entries)?;
    Ok(entries)
}

fn write_manifest(path: &Path, entries: &[CorpusEntry]) -> Result<()> {
    let csv_err = |e: csv::Error| Error::format(path, e.to_string());
    let mut wr = csv::Writer::from_path(path).map_err(csv_err)?;
    wr.write_record(MANIFEST_HEADER).map_err(csv_err)?;
    for e in entries {
        wr.write_record([
            e.image_id.as_str(),
            &e.image_path.to_string_lossy(),
            &e.truth_path.to_string_lossy(),
            e.split,
            e.kind,
            &e.camera.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wr.flush().map_err(|e| Error::io(path, e))
}
