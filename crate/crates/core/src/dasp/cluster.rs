use crate::raster::{DepthMap, RgbImage, SuperpixelMap};
use crate::{Error, Result};

use super::{enforce_connectivity, ClusterCenter, DaspParams};

const UNASSIGNED: u32 = u32::MAX;

/// State seen by an observer after each assignment round.
pub struct ClusterSnapshot<'a> {
    pub iteration: usize,
    /// Per-pixel center index (before connectivity enforcement).
    pub labels: &'a [u32],
    /// Centers the labels were assigned against.
    pub centers: &'a [ClusterCenter],
    pub objective: f64,
}

struct Metric {
    inv_color: f64,
    inv_depth: f64,
}

impl Metric {
    fn new(p: &DaspParams) -> Self {
        Self {
            inv_color: 1.0 / (p.compactness_color * p.compactness_color),
            inv_depth: 1.0 / (p.compactness_depth * p.compactness_depth),
        }
    }

    #[inline]
    fn distance(&self, c: &ClusterCenter, x: usize, y: usize, rgb: [u8; 3], z: f32) -> f64 {
        let dr = rgb[0] as f64 - c.color[0];
        let dg = rgb[1] as f64 - c.color[1];
        let db = rgb[2] as f64 - c.color[2];
        let dz = z as f64 - c.depth;
        let dx = x as f64 - c.x;
        let dy = y as f64 - c.y;
        (dr * dr + dg * dg + db * db) * self.inv_color
            + dz * dz * self.inv_depth
            + (dx * dx + dy * dy) / (c.radius * c.radius)
    }
}

/// `Σ_p D(p, centers[labels[p]])` for a full assignment.
pub fn assignment_objective(
    img: &RgbImage,
    depth: &DepthMap,
    labels: &[u32],
    centers: &[ClusterCenter],
    p: &DaspParams,
) -> f64 {
    let m = Metric::new(p);
    let w = img.width();
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let (x, y) = (i % w, i / w);
            m.distance(&centers[l as usize], x, y, img.pixel(x, y), depth.get(x, y))
        })
        .sum()
}

/// Density-adaptive local iterative clustering followed by connectivity
/// enforcement.
pub fn iterate_clusters(
    img: &RgbImage,
    depth: &DepthMap,
    centers: &[ClusterCenter],
    p: &DaspParams,
) -> Result<SuperpixelMap> {
    iterate_clusters_observed(img, depth, centers, p, |_| {})
}

/// [`iterate_clusters`] with a callback after every assignment round.
///
/// Each round, center `i` competes for the pixels of its `4 r_i` square
/// window under
/// `D = |rgb - c_i|² / m_c² + (z - z_i)² / m_z² + |p - x_i|² / r_i²`.
/// A pixel keeps its previous center unless a window offers a strictly
/// smaller `D`, so the objective reported to the observer never increases.
/// Pixels no window reaches in the first round go to the spatially nearest
/// center. Centers then move to the mean position, color and depth of their
/// members; radii stay fixed.
pub fn iterate_clusters_observed(
    img: &RgbImage,
    depth: &DepthMap,
    centers: &[ClusterCenter],
    p: &DaspParams,
    mut observer: impl FnMut(&ClusterSnapshot<'_>),
) -> Result<SuperpixelMap> {
    p.validate()?;
    if centers.len() < 2 {
        return Err(Error::InvalidParam(format!("need at least 2 centers, got {}", centers.len())));
    }
    let (w, h) = (img.width(), img.height());
    if depth.width() != w || depth.height() != h {
        return Err(Error::DimensionMismatch(format!(
            "image {w}x{h} vs depth {}x{}",
            depth.width(),
            depth.height()
        )));
    }
    let m = Metric::new(p);
    let mut centers = centers.to_vec();
    let mut labels = vec![UNASSIGNED; w * h];
    let mut dist = vec![f64::INFINITY; w * h];

    for iteration in 0..p.iterations {
        // current assignment cost under the current centers
        for (i, (&l, d)) in labels.iter().zip(dist.iter_mut()).enumerate() {
            *d = if l == UNASSIGNED {
                f64::INFINITY
            } else {
                let (x, y) = (i % w, i / w);
                m.distance(&centers[l as usize], x, y, img.pixel(x, y), depth.get(x, y))
            };
        }

        for (ci, c) in centers.iter().enumerate() {
            let half = 2.0 * c.radius;
            let x0 = (c.x - half).floor().max(0.0) as usize;
            let y0 = (c.y - half).floor().max(0.0) as usize;
            let x1 = ((c.x + half).ceil() as usize).min(w - 1);
            let y1 = ((c.y + half).ceil() as usize).min(h - 1);
            if x0 > x1 || y0 > y1 {
                continue;
            }
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let i = y * w + x;
                    let d = m.distance(c, x, y, img.pixel(x, y), depth.get(x, y));
                    if d < dist[i] {
                        dist[i] = d;
                        labels[i] = ci as u32;
                    }
                }
            }
        }

        for i in 0..w * h {
            if labels[i] != UNASSIGNED {
                continue;
            }
            let (x, y) = (i % w, i / w);
            let nearest = centers
                .iter()
                .enumerate()
                .map(|(ci, c)| (ci, (c.x - x as f64).powi(2) + (c.y - y as f64).powi(2)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(ci, _)| ci)
                .expect("at least two centers");
            labels[i] = nearest as u32;
            dist[i] = m.distance(&centers[nearest], x, y, img.pixel(x, y), depth.get(x, y));
        }

        let objective = dist.iter().sum();
        observer(&ClusterSnapshot {
            iteration,
            labels: &labels,
            centers: &centers,
            objective,
        });

        update_centers(img, depth, &labels, &mut centers);
    }

    let sp = SuperpixelMap::compacted(w, h, &labels)?;
    Ok(enforce_connectivity(&sp))
}

fn update_centers(img: &RgbImage, depth: &DepthMap, labels: &[u32], centers: &mut [ClusterCenter]) {
    let w = img.width();
    // count, x, y, r, g, b, z
    let mut acc = vec![[0.0f64; 7]; centers.len()];
    for (i, &l) in labels.iter().enumerate() {
        let (x, y) = (i % w, i / w);
        let rgb = img.pixel(x, y);
        let a = &mut acc[l as usize];
        a[0] += 1.0;
        a[1] += x as f64;
        a[2] += y as f64;
        a[3] += rgb[0] as f64;
        a[4] += rgb[1] as f64;
        a[5] += rgb[2] as f64;
        a[6] += depth.get(x, y) as f64;
    }
    for (c, a) in centers.iter_mut().zip(&acc) {
        let n = a[0];
        if n == 0.0 {
            continue;
        }
        c.x = a[1] / n;
        c.y = a[2] / n;
        c.color = [a[3] / n, a[4] / n, a[5] / n];
        c.depth = a[6] / n;
    }
}
