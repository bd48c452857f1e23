//! Depth-adaptive superpixels.
//!
//! 1. [`compute_density`] turns depth into a per-pixel superpixel density.
//! 2. [`poisson_disc_sample`] throws variable-radius darts to place centers.
//! 3. [`iterate_clusters`] runs the density-adaptive local clustering and
//!    finishes with [`enforce_connectivity`].
//!
//! [`extract_seeds`] is independent of the oversegmentation: it finds deep,
//! low-gradient regions used later to attract the free-space cluster.

mod cluster;
mod connectivity;
mod density;
mod poisson;
mod repair;
mod seeds;

use serde::{Deserialize, Serialize};

pub use cluster::{assignment_objective, iterate_clusters, iterate_clusters_observed, ClusterSnapshot};
pub use connectivity::{component_counts, enforce_connectivity};
pub use density::{compute_density, DensityMap};
pub use poisson::{poisson_disc_sample, ClusterCenter, MIN_DISTANCE_SLACK};
pub use repair::repair_depth;
pub use seeds::{depth_gradient, extract_seeds, extract_seeds_or_deepest, Seed, SeedSet};

use crate::raster::{DepthMap, RgbImage, SuperpixelMap};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaspParams {
    pub target_superpixels: usize,
    /// Exponent of the depth-to-density law `rho ∝ z^gamma`.
    pub density_exponent: f64,
    /// Color normalization, RGB 0-255 scale.
    pub compactness_color: f64,
    /// Depth normalization, meters.
    pub compactness_depth: f64,
    pub iterations: usize,
    pub rng_seed: u64,
    pub seed_gradient_percentile: f64,
    pub seed_depth_percentile: f64,
    /// Minimum seed component area as a fraction of the image.
    pub seed_min_area: f64,
    pub seed_max_count: usize,
}

impl Default for DaspParams {
    fn default() -> Self {
        Self {
            target_superpixels: 400,
            density_exponent: -2.0,
            compactness_color: 10.0,
            compactness_depth: 0.5,
            iterations: 10,
            rng_seed: 0,
            seed_gradient_percentile: 0.30,
            seed_depth_percentile: 0.80,
            seed_min_area: 0.005,
            seed_max_count: 5,
        }
    }
}

impl DaspParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidParam(format!("dasp: {m}")));
        if self.target_superpixels < 2 {
            return fail("target_superpixels must be >= 2");
        }
        if self.iterations < 1 {
            return fail("iterations must be >= 1");
        }
        if !(self.compactness_color > 0.0 && self.compactness_depth > 0.0) {
            return fail("compactness terms must be positive");
        }
        if !self.density_exponent.is_finite() {
            return fail("density_exponent must be finite");
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.seed_gradient_percentile)
            || !unit.contains(&self.seed_depth_percentile)
            || !unit.contains(&self.seed_min_area)
        {
            return fail("seed percentiles and area fraction must lie in [0, 1]");
        }
        if self.seed_max_count < 1 {
            return fail("seed_max_count must be >= 1");
        }
        Ok(())
    }
}

/// Density, sampling and clustering in one call. `depth` must already be repaired.
pub fn oversegment(img: &RgbImage, depth: &DepthMap, p: &DaspParams) -> Result<SuperpixelMap> {
    p.validate()?;
    let rho = compute_density(depth, p)?;
    let centers = poisson_disc_sample(&rho, depth, img, p.rng_seed)?;
    iterate_clusters(img, depth, &centers, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        DaspParams::default().validate().unwrap();
    }

    #[test]
    fn invalid_params_are_rejected() {
        for p in [
            DaspParams { target_superpixels: 1, ..Default::default() },
            DaspParams { iterations: 0, ..Default::default() },
            DaspParams { compactness_color: 0.0, ..Default::default() },
            DaspParams { compactness_depth: -1.0, ..Default::default() },
        ] {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }
}
