//! Depth-guided clustering of superpixel descriptors and free-space selection.
//!
//! Attraction and repulsion only shape the initialization: center 0 is the
//! attraction-weighted mean of the descriptors, the remaining centers are
//! drawn k-means++ style with the `D²` probability damped by `1 - w`. The
//! Lloyd iterations afterwards are standard and run on feature vectors only.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::SuperpixelDescriptor;
use crate::dasp::SeedSet;
use crate::raster::{FreeSpaceMask, SuperpixelMap};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    pub k: usize,
    /// Attraction falloff as a fraction of the image diagonal.
    pub sigma: f64,
    pub max_iter: usize,
    /// Stop once relative center movement drops below this.
    pub tol: f64,
    pub rng_seed: u64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            k: 5,
            sigma: 0.15,
            max_iter: 100,
            tol: 1e-4,
            rng_seed: 0,
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParam("cluster: k must be >= 2".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::InvalidParam("cluster: sigma must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParam("cluster: max_iter must be >= 1".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParam("cluster: tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Row-major `k × dim` centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Centers {
    pub k: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Centers {
    pub fn center(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn center_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub centers: Centers,
    pub freespace_cluster: usize,
    pub iterations_run: usize,
    /// Objective after each assignment step.
    pub objective: Vec<f64>,
}

#[inline]
fn sq_dist(f: &[f32], c: &[f64]) -> f64 {
    f.iter().zip(c).map(|(&a, &b)| (a as f64 - b).powi(2)).sum()
}

/// `w_i = ẑ_i * exp(-d_i² / (2 (sigma * diag)²))`, with `ẑ` the min-max
/// normalized mean depth and `d_i` the distance from the centroid to the
/// nearest seed. When every descriptor has the same depth, `ẑ = 1`.
pub fn attraction_weights(
    descs: &[SuperpixelDescriptor],
    seeds: &SeedSet,
    sigma: f64,
    image_diag: f64,
) -> Result<Vec<f64>> {
    if seeds.is_empty() {
        return Err(Error::InvalidParam("attraction weights need at least one seed".into()));
    }
    let lo = descs.iter().map(|d| d.mean_depth).fold(f64::INFINITY, f64::min);
    let hi = descs.iter().map(|d| d.mean_depth).fold(f64::NEG_INFINITY, f64::max);
    let scale = 2.0 * (sigma * image_diag).powi(2);
    let weights: Vec<f64> = descs
        .iter()
        .map(|d| {
            let z_hat = if hi > lo {
                (d.mean_depth - lo) / (hi - lo)
            } else if hi > 0.0 {
                1.0
            } else {
                0.0
            };
            let dist = seeds.nearest_distance(d.centroid.0, d.centroid.1);
            z_hat * (-dist * dist / scale).exp()
        })
        .collect();
    if weights.iter().all(|&w| w <= 0.0) {
        return Err(Error::DegenerateWeights);
    }
    Ok(weights)
}

/// Probability of drawing each descriptor as the next center:
/// `(1 - w_i) * min_j |f_i - c_j|²`, normalized. `None` when all mass is zero.
pub fn repulsion_probabilities(
    descs: &[SuperpixelDescriptor],
    weights: &[f64],
    chosen: &[Vec<f64>],
) -> Option<Vec<f64>> {
    let mass: Vec<f64> = descs
        .iter()
        .zip(weights)
        .map(|(d, &w)| {
            let nearest = chosen.iter().map(|c| sq_dist(&d.feature, c)).fold(f64::INFINITY, f64::min);
            (1.0 - w).max(0.0) * nearest
        })
        .collect();
    let total: f64 = mass.iter().sum();
    (total > 0.0 && total.is_finite()).then(|| mass.into_iter().map(|m| m / total).collect())
}

pub fn init_centers(descs: &[SuperpixelDescriptor], weights: &[f64], k: usize, rng_seed: u64) -> Result<Centers> {
    if descs.len() < k {
        return Err(Error::TooFewDescriptors {
            needed: k,
            got: descs.len(),
        });
    }
    if weights.len() != descs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} descriptors",
            weights.len(),
            descs.len()
        )));
    }
    let dim = descs[0].feature.len();
    let wsum: f64 = weights.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let mut first = vec![0.0f64; dim];
    for (d, &w) in descs.iter().zip(weights) {
        for (c, &f) in first.iter_mut().zip(&d.feature) {
            *c += w * f as f64;
        }
    }
    first.iter_mut().for_each(|c| *c /= wsum);

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut chosen = vec![first];
    while chosen.len() < k {
        let next = match repulsion_probabilities(descs, weights, &chosen) {
            Some(p) => WeightedIndex::new(&p).expect("normalized mass").sample(&mut rng),
            // nothing left to repel: take the descriptor farthest from the chosen set
            None => descs
                .iter()
                .enumerate()
                .map(|(i, d)| (i, chosen.iter().map(|c| sq_dist(&d.feature, c)).fold(f64::INFINITY, f64::min)))
                .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
                .0,
        };
        chosen.push(descs[next].feature.iter().map(|&f| f as f64).collect());
    }
    Ok(Centers {
        k,
        dim,
        data: chosen.into_iter().flatten().collect(),
    })
}

fn assign(descs: &[SuperpixelDescriptor], centers: &Centers, labels: &mut [usize]) -> f64 {
    let mut objective = 0.0;
    for (d, l) in descs.iter().zip(labels.iter_mut()) {
        let (best, dist) = (0..centers.k)
            .map(|c| (c, sq_dist(&d.feature, centers.center(c))))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        *l = best;
        objective += dist;
    }
    objective
}

/// Lloyd iterations from the given centers.
///
/// An emptied cluster is re-seeded at the descriptor farthest from its own
/// center, which moves that descriptor at zero cost; the objective therefore
/// never increases.
pub fn kmeans(descs: &[SuperpixelDescriptor], init: &Centers, p: &ClusterParams) -> Result<ClusterAssignment> {
    p.validate()?;
    if init.k != p.k {
        return Err(Error::InvalidParam(format!("init has {} centers, params want {}", init.k, p.k)));
    }
    if descs.len() < p.k {
        return Err(Error::TooFewDescriptors {
            needed: p.k,
            got: descs.len(),
        });
    }
    if descs.iter().any(|d| d.feature.len() != init.dim) {
        return Err(Error::DimensionMismatch("descriptor and center dimensions differ".into()));
    }
    let mut centers = init.clone();
    let mut labels = vec![0usize; descs.len()];
    let mut objective = Vec::new();
    let mut iterations_run = 0;

    for _ in 0..p.max_iter {
        iterations_run += 1;
        let j = assign(descs, &centers, &mut labels);
        objective.push(j);

        let mut counts = vec![0usize; p.k];
        for &l in &labels {
            counts[l] += 1;
        }
        for empty in 0..p.k {
            if counts[empty] > 0 {
                continue;
            }
            let far = (0..descs.len())
                .filter(|&i| counts[labels[i]] > 1)
                .map(|i| (i, sq_dist(&descs[i].feature, centers.center(labels[i]))))
                .fold((usize::MAX, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
                .0;
            if far == usize::MAX {
                continue;
            }
            counts[labels[far]] -= 1;
            labels[far] = empty;
            counts[empty] = 1;
        }

        let mut next = Centers {
            k: p.k,
            dim: centers.dim,
            data: vec![0.0; centers.data.len()],
        };
        for (d, &l) in descs.iter().zip(&labels) {
            for (c, &f) in next.center_mut(l).iter_mut().zip(&d.feature) {
                *c += f as f64;
            }
        }
        for c in 0..p.k {
            let n = counts[c] as f64;
            next.center_mut(c).iter_mut().for_each(|v| *v /= n);
        }

        let moved: f64 = next.data.iter().zip(&centers.data).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = centers.data.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        centers = next;
        if moved / norm < p.tol {
            break;
        }
    }
    // final labels consistent with the returned centers
    let j = assign(descs, &centers, &mut labels);
    if objective.last().is_none_or(|&last| j < last) {
        objective.push(j);
    }
    let freespace_cluster = select_freespace_cluster(&labels, p.k, descs);
    Ok(ClusterAssignment {
        labels,
        centers,
        freespace_cluster,
        iterations_run,
        objective,
    })
}

/// Area-weighted mean depth per cluster; `None` for empty clusters.
pub fn cluster_depths(labels: &[usize], k: usize, descs: &[SuperpixelDescriptor]) -> Vec<Option<f64>> {
    let mut area = vec![0.0f64; k];
    let mut depth = vec![0.0f64; k];
    for (&l, d) in labels.iter().zip(descs) {
        area[l] += d.area as f64;
        depth[l] += d.area as f64 * d.mean_depth;
    }
    area.iter().zip(depth).map(|(&a, z)| (a > 0.0).then(|| z / a)).collect()
}

/// Cluster with the largest area-weighted mean depth; ties go to the lower index.
pub fn select_freespace_cluster(labels: &[usize], k: usize, descs: &[SuperpixelDescriptor]) -> usize {
    cluster_depths(labels, k, descs)
        .into_iter()
        .enumerate()
        .filter_map(|(c, z)| z.map(|z| (c, z)))
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

/// Marks every pixel whose superpixel belongs to `chosen`.
pub fn rasterize_mask(sp: &SuperpixelMap, labels: &[usize], chosen: usize) -> Result<FreeSpaceMask> {
    if labels.len() != sp.count() {
        return Err(Error::DimensionMismatch(format!(
            "{} cluster labels for {} superpixels",
            labels.len(),
            sp.count()
        )));
    }
    let data = sp.labels().iter().map(|&l| labels[l as usize] == chosen).collect();
    FreeSpaceMask::new(sp.width(), sp.height(), data)
}
