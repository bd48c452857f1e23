use serde::{Deserialize, Serialize};

use crate::raster::DepthMap;
use crate::{Error, Result};

use super::DaspParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub x: f64,
    pub y: f64,
    /// Mean depth of the seed region.
    pub score: f64,
    pub area: usize,
}

/// Seeds sorted by descending score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSet {
    pub seeds: Vec<Seed>,
}

impl SeedSet {
    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    /// Euclidean distance from `(x, y)` to the closest seed.
    pub fn nearest_distance(&self, x: f64, y: f64) -> f64 {
        self.seeds
            .iter()
            .map(|s| ((s.x - x).powi(2) + (s.y - y).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Sobel gradient magnitude with replicated borders.
pub fn depth_gradient(d: &DepthMap) -> Vec<f32> {
    let (w, h) = (d.width() as isize, d.height() as isize);
    let at = |x: isize, y: isize| d.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize);
    let mut out = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

/// Value at rank `floor(q * (n - 1))` of the sorted samples.
fn percentile(values: &[f32], q: f64) -> f32 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f32::total_cmp);
    let idx = ((q * (sorted.len() - 1) as f64).floor() as usize).min(sorted.len() - 1);
    sorted[idx]
}

/// Deep, flat regions of the depth map.
///
/// Candidates are pixels whose depth gradient is at or below the configured
/// gradient percentile and whose depth is at or above the depth percentile.
/// Their 4-connected components smaller than the minimum area are dropped;
/// each survivor yields a seed at its centroid scored by its mean depth.
pub fn extract_seeds(d: &DepthMap, p: &DaspParams) -> Result<SeedSet> {
    if !d.is_valid() {
        return Err(Error::DegenerateInput("seed extraction needs a repaired depth map".into()));
    }
    let (w, h) = (d.width(), d.height());
    let grad = depth_gradient(d);
    let g_thr = percentile(&grad, p.seed_gradient_percentile);
    let z_thr = percentile(d.data(), p.seed_depth_percentile);
    let candidate: Vec<bool> = grad
        .iter()
        .zip(d.data())
        .map(|(&g, &z)| g <= g_thr && z >= z_thr)
        .collect();

    let min_area = p.seed_min_area * (w * h) as f64;
    let mut visited = vec![false; w * h];
    let mut stack = Vec::new();
    let mut seeds = Vec::new();
    for start in 0..w * h {
        if !candidate[start] || visited[start] {
            continue;
        }
        visited[start] = true;
        stack.push(start);
        let (mut n, mut sx, mut sy, mut sz) = (0usize, 0.0f64, 0.0f64, 0.0f64);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            n += 1;
            sx += x as f64;
            sy += y as f64;
            sz += d.data()[i] as f64;
            let neighbors = [
                (x > 0).then(|| i - 1),
                (x + 1 < w).then(|| i + 1),
                (y > 0).then(|| i - w),
                (y + 1 < h).then(|| i + w),
            ];
            for j in neighbors.into_iter().flatten() {
                if candidate[j] && !visited[j] {
                    visited[j] = true;
                    stack.push(j);
                }
            }
        }
        if n as f64 >= min_area {
            let nf = n as f64;
            seeds.push(Seed {
                x: sx / nf,
                y: sy / nf,
                score: sz / nf,
                area: n,
            });
        }
    }
    if seeds.is_empty() {
        return Err(Error::NoSeeds);
    }
    seeds.sort_by(|a, b| b.score.total_cmp(&a.score).then(b.area.cmp(&a.area)));
    seeds.truncate(p.seed_max_count);
    Ok(SeedSet { seeds })
}

/// [`extract_seeds`], falling back to the single deepest pixel when no
/// region qualifies.
pub fn extract_seeds_or_deepest(d: &DepthMap, p: &DaspParams) -> Result<SeedSet> {
    match extract_seeds(d, p) {
        Err(Error::NoSeeds) => {
            let (i, z) = d
                .data()
                .iter()
                .enumerate()
                .fold((0, f32::NEG_INFINITY), |best, (i, &z)| if z > best.1 { (i, z) } else { best });
            Ok(SeedSet {
                seeds: vec![Seed {
                    x: (i % d.width()) as f64,
                    y: (i / d.width()) as f64,
                    score: z as f64,
                    area: 1,
                }],
            })
        }
        other => other,
    }
}
