use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::{DepthMap, RgbImage};
use crate::{Error, Result};

use super::DensityMap;

/// Guaranteed lower bound on center spacing, as a fraction of the smaller
/// of the two local radii.
pub const MIN_DISTANCE_SLACK: f64 = 0.8;

/// Rejection distance between two darts, in units of their mean local radius.
/// Large enough for even spacing, small enough that the target count is
/// reached well before jamming.
const SPACING: f64 = 1.2;

/// Attempts allowed per requested center.
const ATTEMPTS_PER_CENTER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCenter {
    pub x: f64,
    pub y: f64,
    pub color: [f64; 3],
    pub depth: f64,
    /// Local length scale `1 / sqrt(pi * rho)` in pixels.
    pub radius: f64,
}

struct Grid {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl Grid {
    fn new(width: usize, height: usize, cell: f64) -> Self {
        let cols = ((width as f64 / cell).ceil() as usize).max(1);
        let rows = ((height as f64 / cell).ceil() as usize).max(1);
        Self {
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let cx = ((x / self.cell) as usize).min(self.cols - 1);
        let cy = ((y / self.cell) as usize).min(self.rows - 1);
        (cx, cy)
    }

    fn insert(&mut self, x: f64, y: f64, idx: usize) {
        let (cx, cy) = self.cell_of(x, y);
        self.buckets[cy * self.cols + cx].push(idx);
    }

    /// Indices of points possibly within `reach` of `(x, y)`.
    fn near(&self, x: f64, y: f64, reach: f64) -> impl Iterator<Item = usize> + '_ {
        let span = (reach / self.cell).ceil() as usize;
        let (cx, cy) = self.cell_of(x, y);
        let (x0, x1) = (cx.saturating_sub(span), (cx + span).min(self.cols - 1));
        let (y0, y1) = (cy.saturating_sub(span), (cy + span).min(self.rows - 1));
        (y0..=y1).flat_map(move |gy| (x0..=x1).flat_map(move |gx| self.buckets[gy * self.cols + gx].iter().copied()))
    }
}

/// Variable-radius dart throwing.
///
/// Candidates are drawn with probability proportional to `rho` and accepted
/// when no earlier center lies closer than `1.2 * (r_a + r_b) / 2`. Sampling stops
/// once the target count (the density sum) is reached or after `50 * N`
/// attempts. Each center takes color and depth from the pixel under it.
pub fn poisson_disc_sample(
    rho: &DensityMap,
    depth: &DepthMap,
    img: &RgbImage,
    rng_seed: u64,
) -> Result<Vec<ClusterCenter>> {
    let (w, h) = (rho.width(), rho.height());
    if depth.width() != w || depth.height() != h || img.width() != w || img.height() != h {
        return Err(Error::DimensionMismatch("density, depth and image must share dimensions".into()));
    }
    let target = rho.total().round().max(0.0) as usize;
    let max_attempts = ATTEMPTS_PER_CENTER * target.max(1);

    let mut cdf = Vec::with_capacity(w * h);
    let mut acc = 0.0;
    for &r in rho.rho() {
        acc += r;
        cdf.push(acc);
    }
    let r_max = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| rho.radius_at(x, y))
        .fold(0.0f64, f64::max);
    let mut grid = Grid::new(w, h, r_max.max(1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut centers: Vec<ClusterCenter> = Vec::with_capacity(target);
    let mut attempts = 0;
    while centers.len() < target && attempts < max_attempts {
        attempts += 1;
        let u: f64 = rng.random::<f64>() * acc;
        let idx = cdf.partition_point(|c| *c <= u).min(w * h - 1);
        let (px, py) = (idx % w, idx / w);
        let (x, y) = (px as f64, py as f64);
        let r = rho.radius_at(px, py);

        let reach = SPACING * 0.5 * (r + r_max);
        let blocked = grid.near(x, y, reach).any(|j| {
            let c = &centers[j];
            let (dx, dy) = (c.x - x, c.y - y);
            (dx * dx + dy * dy).sqrt() < SPACING * 0.5 * (r + c.radius)
        });
        if blocked {
            continue;
        }
        let rgb = img.pixel(px, py);
        grid.insert(x, y, centers.len());
        centers.push(ClusterCenter {
            x,
            y,
            color: [rgb[0] as f64, rgb[1] as f64, rgb[2] as f64],
            depth: depth.get(px, py) as f64,
            radius: r,
        });
    }
    if centers.len() < 2 {
        return Err(Error::SamplingExhausted {
            placed: centers.len(),
            attempts,
        });
    }
    Ok(centers)
}
