use crate::raster::DepthMap;
use crate::{Error, Result};

use super::DaspParams;

/// Expected superpixels per pixel. Sums to the target count.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMap {
    width: usize,
    height: usize,
    rho: Vec<f64>,
}

impl DensityMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.rho[y * self.width + x]
    }

    pub fn total(&self) -> f64 {
        self.rho.iter().sum()
    }

    /// Local disc radius `1 / sqrt(rho * pi)`, so a disc of that radius holds
    /// one expected superpixel.
    #[inline]
    pub fn radius_at(&self, x: usize, y: usize) -> f64 {
        1.0 / (self.at(x, y) * std::f64::consts::PI).sqrt()
    }
}

/// `rho(x) = c * z(x)^gamma`, with `c` chosen so the map sums to the target count.
pub fn compute_density(d: &DepthMap, p: &DaspParams) -> Result<DensityMap> {
    if !d.is_valid() {
        return Err(Error::DegenerateInput("density needs a repaired depth map".into()));
    }
    let gamma = p.density_exponent;
    let raw: Vec<f64> = d.data().iter().map(|&z| (z as f64).powf(gamma)).collect();
    let sum: f64 = raw.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::DegenerateInput(format!("density normalizer {sum} with exponent {gamma}")));
    }
    let c = p.target_superpixels as f64 / sum;
    Ok(DensityMap {
        width: d.width(),
        height: d.height(),
        rho: raw.into_iter().map(|r| c * r).collect(),
    })
}
