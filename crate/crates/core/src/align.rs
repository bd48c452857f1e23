//! Superpixel alignment: pool a coarse [`FeatureGrid`] onto superpixels.
//!
//! Each superpixel contributes ten anchor pixels. The grid is bilinearly
//! interpolated at every anchor from its four surrounding cell centers and
//! the ten samples are averaged into the superpixel's descriptor.

use serde::{Deserialize, Serialize};

use crate::features::FeatureGrid;
use crate::raster::{DepthMap, SuperpixelMap};
use crate::{Error, Result};

pub const ANCHORS_PER_SUPERPIXEL: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperpixelDescriptor {
    pub label: usize,
    pub feature: Vec<f32>,
    pub centroid: (f64, f64),
    pub mean_depth: f64,
    pub area: usize,
}

/// Row-major member pixels of every label, in one pass.
fn members_by_label(sp: &SuperpixelMap) -> Vec<Vec<(usize, usize)>> {
    let mut members = vec![Vec::new(); sp.count()];
    let w = sp.width();
    for (i, &l) in sp.labels().iter().enumerate() {
        members[l as usize].push((i % w, i / w));
    }
    members
}

fn anchors_from_members(members: &[(usize, usize)]) -> [(usize, usize); ANCHORS_PER_SUPERPIXEL] {
    let n = members.len();
    std::array::from_fn(|j| members[j * (n - 1) / (ANCHORS_PER_SUPERPIXEL - 1)])
}

/// Anchor `j` is member `floor(j * (n - 1) / 9)` in row-major order.
pub fn select_anchors(sp: &SuperpixelMap, label: usize) -> Result<[(usize, usize); ANCHORS_PER_SUPERPIXEL]> {
    if label >= sp.count() {
        return Err(Error::UnknownLabel(label));
    }
    let w = sp.width();
    let members: Vec<(usize, usize)> = sp
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l as usize == label)
        .map(|(i, _)| (i % w, i / w))
        .collect();
    Ok(anchors_from_members(&members))
}

/// Interpolates the grid at image position `(x, y)`.
///
/// Cell centers sit at `u = (x + 0.5) * grid_w / img_w - 0.5` (same for `v`);
/// positions past the outer cell centers clamp to the border cells.
pub fn bilinear_sample(grid: &FeatureGrid, x: f64, y: f64, img_w: usize, img_h: usize) -> Result<Vec<f32>> {
    let mut out = vec![0.0; grid.dim()];
    bilinear_into(grid, x, y, img_w, img_h, &mut out)?;
    Ok(out)
}

fn bilinear_into(grid: &FeatureGrid, x: f64, y: f64, img_w: usize, img_h: usize, out: &mut [f32]) -> Result<()> {
    if !(x >= 0.0 && y >= 0.0 && x < img_w as f64 && y < img_h as f64) {
        return Err(Error::OutOfBounds {
            x,
            y,
            width: img_w,
            height: img_h,
        });
    }
    let (gw, gh) = (grid.grid_w(), grid.grid_h());
    let u = ((x + 0.5) * gw as f64 / img_w as f64 - 0.5).clamp(0.0, (gw - 1) as f64);
    let v = ((y + 0.5) * gh as f64 / img_h as f64 - 0.5).clamp(0.0, (gh - 1) as f64);
    let (i0, j0) = (u.floor() as usize, v.floor() as usize);
    let (i1, j1) = ((i0 + 1).min(gw - 1), (j0 + 1).min(gh - 1));
    let (tu, tv) = (u - i0 as f64, v - j0 as f64);
    let weights = [
        (1.0 - tu) * (1.0 - tv),
        tu * (1.0 - tv),
        (1.0 - tu) * tv,
        tu * tv,
    ];
    let cells = [grid.cell(i0, j0), grid.cell(i1, j0), grid.cell(i0, j1), grid.cell(i1, j1)];
    for (c, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0f64;
        for (cell, wt) in cells.iter().zip(weights) {
            acc += wt * cell[c] as f64;
        }
        *o = acc as f32;
    }
    Ok(())
}

/// One descriptor per superpixel, ordered by label.
pub fn pool_superpixels(sp: &SuperpixelMap, grid: &FeatureGrid, depth: &DepthMap) -> Result<Vec<SuperpixelDescriptor>> {
    let (w, h) = (sp.width(), sp.height());
    if depth.width() != w || depth.height() != h {
        return Err(Error::DimensionMismatch(format!(
            "superpixels {w}x{h} vs depth {}x{}",
            depth.width(),
            depth.height()
        )));
    }
    let dim = grid.dim();
    let mut sample = vec![0.0f32; dim];
    members_by_label(sp)
        .into_iter()
        .enumerate()
        .map(|(label, members)| {
            let mut acc = vec![0.0f64; dim];
            for (ax, ay) in anchors_from_members(&members) {
                bilinear_into(grid, ax as f64, ay as f64, w, h, &mut sample)?;
                for (a, s) in acc.iter_mut().zip(&sample) {
                    *a += *s as f64;
                }
            }
            let n = members.len() as f64;
            let (sx, sy, sz) = members.iter().fold((0.0, 0.0, 0.0), |(sx, sy, sz), &(x, y)| {
                (sx + x as f64, sy + y as f64, sz + depth.get(x, y) as f64)
            });
            Ok(SuperpixelDescriptor {
                label,
                feature: acc.iter().map(|a| (a / ANCHORS_PER_SUPERPIXEL as f64) as f32).collect(),
                centroid: (sx / n, sy / n),
                mean_depth: sz / n,
                area: members.len(),
            })
        })
        .collect()
}
