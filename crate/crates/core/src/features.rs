//! Dense feature grids: ingest of transformer token dumps, or a small
//! handcrafted descriptor when no dump is available.

use std::path::Path;

use crate::npy::{self, NpyArray};
use crate::raster::{DepthMap, RgbImage};
use crate::{Error, Result};

/// Spatial grid of `dim`-dimensional descriptors covering the image.
/// Cell `(gx, gy)` channel `c` lives at `(gy * grid_w + gx) * dim + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    grid_w: usize,
    grid_h: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureGrid {
    pub fn new(grid_w: usize, grid_h: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if grid_w < 2 || grid_h < 2 || dim < 1 {
            return Err(Error::Shape(format!("feature grid {grid_w}x{grid_h}x{dim} too small")));
        }
        if data.len() != grid_w * grid_h * dim {
            return Err(Error::Shape(format!(
                "feature grid {grid_w}x{grid_h}x{dim} needs {} values, got {}",
                grid_w * grid_h * dim,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite feature value at index {i}")));
        }
        Ok(Self {
            grid_w,
            grid_h,
            dim,
            data,
        })
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn cell(&self, gx: usize, gy: usize) -> &[f32] {
        let start = (gy * self.grid_w + gx) * self.dim;
        &self.data[start..start + self.dim]
    }
}

/// Reads a `<stem>.feat.npy` dump.
pub fn ingest_token_features(path: impl AsRef<Path>) -> Result<FeatureGrid> {
    grid_from_array(npy::read_npy(path)?)
}

/// Token form `(T, D)` with `T = G² + 1`: the leading class token is dropped
/// and the patch tokens are laid out row-major on a `G×G` grid. Spatial form
/// `(H, W, D)` passes through.
pub fn grid_from_array(arr: NpyArray) -> Result<FeatureGrid> {
    match arr.shape[..] {
        [tokens, dim] => {
            if tokens < 2 {
                return Err(Error::Shape(format!("{tokens} tokens leave no patch grid")));
            }
            let patches = tokens - 1;
            let side = patches.isqrt();
            if side * side != patches {
                return Err(Error::Shape(format!(
                    "{tokens} tokens: {patches} patch tokens is not a perfect square"
                )));
            }
            let data = arr.data[dim..].to_vec();
            FeatureGrid::new(side, side, dim, data)
        }
        [h, w, dim] => FeatureGrid::new(w, h, dim, arr.data),
        _ => Err(Error::Shape(format!(
            "feature array must be (T, D) or (H, W, D), got {:?}",
            arr.shape
        ))),
    }
}

/// Descriptor length of [`fallback_features`].
pub const FALLBACK_DIM: usize = 16;
const ORIENTATION_BINS: usize = 8;
/// `(start, len)` of each normalization block in the fallback descriptor.
const BLOCKS: [(usize, usize); 5] = [(0, 3), (3, 3), (6, 1), (7, 1), (8, ORIENTATION_BINS)];

/// Cell `i` of `n` over `len` pixels covers `[i*len/n, (i+1)*len/n)`.
fn cell_span(i: usize, n: usize, len: usize) -> (usize, usize) {
    (i * len / n, ((i + 1) * len / n).max(i * len / n + 1).min(len))
}

/// Handcrafted 16-D descriptor per cell of a `grid × grid` partition:
/// mean RGB (3), RGB standard deviation (3), mean depth (1), depth standard
/// deviation (1), and an 8-bin magnitude-weighted histogram of gray-level
/// gradient orientation (8, divided by the cell's pixel count). Every block is
/// then min-max scaled to `[0, 1]` across all cells of the image.
pub fn fallback_features(img: &RgbImage, depth: &DepthMap, grid: usize) -> Result<FeatureGrid> {
    if grid < 2 {
        return Err(Error::InvalidParam(format!("fallback grid side must be >= 2, got {grid}")));
    }
    if !depth.same_size_as(img) {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs depth {}x{}",
            img.width(),
            img.height(),
            depth.width(),
            depth.height()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let gray: Vec<f64> = img
        .data()
        .chunks_exact(3)
        .map(|p| (p[0] as f64 + p[1] as f64 + p[2] as f64) / 3.0)
        .collect();
    let g = |x: usize, y: usize| gray[y * w + x];

    let mut data = vec![0.0f32; grid * grid * FALLBACK_DIM];
    for gy in 0..grid {
        let (y0, y1) = cell_span(gy, grid, h);
        for gx in 0..grid {
            let (x0, x1) = cell_span(gx, grid, w);
            let n = ((x1 - x0) * (y1 - y0)) as f64;
            let mut sum = [0.0f64; 4];
            let mut sq = [0.0f64; 4];
            let mut hist = [0.0f64; ORIENTATION_BINS];
            for y in y0..y1 {
                for x in x0..x1 {
                    let px = img.pixel(x, y);
                    let vals = [px[0] as f64, px[1] as f64, px[2] as f64, depth.get(x, y) as f64];
                    for k in 0..4 {
                        sum[k] += vals[k];
                        sq[k] += vals[k] * vals[k];
                    }
                    let dx = g((x + 1).min(w - 1), y) - g(x.saturating_sub(1), y);
                    let dy = g(x, (y + 1).min(h - 1)) - g(x, y.saturating_sub(1));
                    let mag = (dx * dx + dy * dy).sqrt();
                    if mag > 0.0 {
                        let angle = dy.atan2(dx).rem_euclid(std::f64::consts::TAU);
                        let bin = ((angle / std::f64::consts::TAU * ORIENTATION_BINS as f64) as usize)
                            .min(ORIENTATION_BINS - 1);
                        hist[bin] += mag;
                    }
                }
            }
            let out = &mut data[(gy * grid + gx) * FALLBACK_DIM..][..FALLBACK_DIM];
            for k in 0..3 {
                let mean = sum[k] / n;
                out[k] = mean as f32;
                out[3 + k] = (sq[k] / n - mean * mean).max(0.0).sqrt() as f32;
            }
            let zmean = sum[3] / n;
            out[6] = zmean as f32;
            out[7] = (sq[3] / n - zmean * zmean).max(0.0).sqrt() as f32;
            for (o, hb) in out[8..].iter_mut().zip(hist) {
                *o = (hb / n) as f32;
            }
        }
    }

    for (start, len) in BLOCKS {
        let values = || data.chunks_exact(FALLBACK_DIM).flat_map(|c| c[start..start + len].iter().copied());
        let lo = values().fold(f32::INFINITY, f32::min);
        let hi = values().fold(f32::NEG_INFINITY, f32::max);
        let span = hi - lo;
        for cell in data.chunks_exact_mut(FALLBACK_DIM) {
            for v in &mut cell[start..start + len] {
                *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
            }
        }
    }
    FeatureGrid::new(grid, grid, FALLBACK_DIM, data)
}
