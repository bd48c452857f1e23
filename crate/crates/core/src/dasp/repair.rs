use crate::raster::DepthMap;
use crate::{Error, Result};

#[inline]
fn valid(z: f32) -> bool {
    z.is_finite() && z > 0.0
}

fn median(values: &mut [f32]) -> f32 {
    values.sort_by(f32::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Replaces zero, negative and non-finite samples with the median of valid
/// neighbors in a 5×5 window, then a 9×9 window, then the global median.
/// Only original samples contribute to each median.
pub fn repair_depth(d: &DepthMap) -> Result<DepthMap> {
    if d.is_valid() {
        return Ok(d.clone());
    }
    let (w, h) = (d.width(), d.height());
    let src = d.data();
    let mut global: Vec<f32> = src.iter().copied().filter(|z| valid(*z)).collect();
    if global.is_empty() {
        return Err(Error::DegenerateInput("depth map has no valid sample".into()));
    }
    let global_median = median(&mut global);

    let mut out = src.to_vec();
    let mut window = Vec::with_capacity(81);
    for y in 0..h {
        for x in 0..w {
            if valid(src[y * w + x]) {
                continue;
            }
            let mut fill = None;
            for half in [2usize, 4] {
                window.clear();
                for yy in y.saturating_sub(half)..=(y + half).min(h - 1) {
                    for xx in x.saturating_sub(half)..=(x + half).min(w - 1) {
                        let z = src[yy * w + xx];
                        if valid(z) {
                            window.push(z);
                        }
                    }
                }
                if !window.is_empty() {
                    fill = Some(median(&mut window));
                    break;
                }
            }
            out[y * w + x] = fill.unwrap_or(global_median);
        }
    }
    DepthMap::new(w, h, out)
}
