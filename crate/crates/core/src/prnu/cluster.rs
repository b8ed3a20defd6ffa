//! Randomized pairwise-nearest-neighbour clustering of residuals by PCE.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::imgcore::{Plane, RgbImage};

use super::correlation::{PceEngine, Spectrum};
use super::fingerprint::{estimate_fingerprint, Fingerprint};
use super::residual::NoiseResidual;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub pce_threshold: f64,
    pub min_cluster_size: usize,
    pub exclusion_radius: usize,
    pub seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            pce_threshold: 50.0,
            min_cluster_size: 5,
            exclusion_radius: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub fingerprint: Fingerprint,
    /// Input indices, ascending.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub leftovers: Vec<usize>,
}

impl ClusterSet {
    /// Cluster index of every input image, `None` for leftovers.
    pub fn assignments(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &m in &cluster.members {
                out[m] = Some(c);
            }
        }
        out
    }
}

/// `r / max(y, 1)`: a single-image PRNU estimate.
pub fn normalized_residual(image: &RgbImage, residual: &NoiseResidual) -> Result<Plane> {
    residual.plane().zip_map(&image.luminance(), |r, y| r / y.max(1.0))
}

/// Greedy randomized clustering: grow one cluster at a time from a random seed by scanning
/// the unassigned residuals in random order, merging every one whose PCE against the running
/// center exceeds the threshold (center = weight-averaged members), until a full scan adds
/// nothing. Clusters smaller than `min_cluster_size` are dissolved into the leftovers, and
/// the kept ones get their final fingerprint from the weighted estimator.
pub fn cluster_residuals(residuals: &[NoiseResidual], images: &[RgbImage], params: &ClusterParams) -> Result<ClusterSet> {
    if residuals.is_empty() {
        return Err(Error::EmptyInput("residuals to cluster"));
    }
    if residuals.len() != images.len() {
        return Err(Error::invalid(format!(
            "{} residuals but {} images",
            residuals.len(),
            images.len()
        )));
    }
    if !(params.pce_threshold > 0.0) {
        return Err(Error::invalid("clustering PCE threshold must be positive"));
    }
    let (w, h) = residuals[0].source_dims();
    let engine = PceEngine::new(w, h);
    let spectra = residuals
        .iter()
        .zip(images)
        .map(|(r, img)| engine.spectrum(&normalized_residual(img, r)?))
        .collect::<Result<Vec<Spectrum>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut unassigned: Vec<usize> = (0..residuals.len()).collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    while !unassigned.is_empty() {
        let start = unassigned.swap_remove(rng.random_range(0..unassigned.len()));
        let mut center = spectra[start].clone();
        let mut weight = 1.0;
        let mut members = vec![start];
        loop {
            unassigned.shuffle(&mut rng);
            let mut added = false;
            let mut remaining = Vec::with_capacity(unassigned.len());
            for &j in &unassigned {
                if engine.pce_spectra(&center, &spectra[j], params.exclusion_radius)? > params.pce_threshold {
                    center = center.weighted_mean(weight, &spectra[j], 1.0);
                    weight += 1.0;
                    members.push(j);
                    added = true;
                } else {
                    remaining.push(j);
                }
            }
            unassigned = remaining;
            if !added || unassigned.is_empty() {
                break;
            }
        }
        groups.push(members);
    }

    let mut set = ClusterSet::default();
    for mut members in groups {
        members.sort_unstable();
        if members.len() < params.min_cluster_size.max(1) {
            set.leftovers.extend(members);
            continue;
        }
        let mut fingerprint = estimate_fingerprint(members.iter().map(|&m| (&images[m], &residuals[m])))?;
        fingerprint.id = set.clusters.len();
        set.clusters.push(Cluster { fingerprint, members });
    }
    set.leftovers.sort_unstable();
    Ok(set)
}

/// Result of matching one image against the known fingerprints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Association {
    pub cluster: Option<usize>,
    /// Best PCE over all comparable fingerprints (0 when there were none).
    pub pce: f64,
}

/// PCE of the residual against `k̂·y` for every cluster; the best one is returned when it
/// clears `pce_threshold`. Fingerprints of a different size are skipped.
pub fn associate_image(
    image: &RgbImage,
    residual: &NoiseResidual,
    clusters: &ClusterSet,
    pce_threshold: f64,
    exclusion_radius: usize,
) -> Result<Association> {
    let dims = residual.source_dims();
    let engine = PceEngine::new(dims.0, dims.1);
    let luminance = image.luminance();
    let r_spec = engine.spectrum(residual.plane())?;
    let mut best: Option<(usize, f64)> = None;
    for (c, cluster) in clusters.clusters.iter().enumerate() {
        if cluster.fingerprint.dims() != dims {
            continue;
        }
        let z = cluster.fingerprint.expected_pattern(&luminance)?;
        let value = engine.pce_spectra(&r_spec, &engine.spectrum(&z)?, exclusion_radius)?;
        if best.is_none_or(|(_, b)| value > b) {
            best = Some((c, value));
        }
    }
    Ok(match best {
        Some((c, value)) => Association {
            cluster: (value > pce_threshold).then_some(c),
            pce: value,
        },
        None => Association { cluster: None, pce: 0.0 },
    })
}


/// Weighted merge of two cluster centers: `((w'v' + w''v'') / (w' + w''), w' + w'')`.
pub fn merge_centers(a: &Plane, wa: f64, b: &Plane, wb: f64) -> Result<(Plane, f64)> {
    let total = wa + wb;
    Ok((a.zip_map(b, |x, y| (wa * x + wb * y) / total)?, total))
}
