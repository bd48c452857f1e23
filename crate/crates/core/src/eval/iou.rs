use crate::raster::FreeSpaceMask;
use crate::{Error, Result};

/// `|a ∧ b| / |a ∨ b|`. Two empty masks agree perfectly and score 1.
pub fn iou(a: &FreeSpaceMask, b: &FreeSpaceMask) -> Result<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(format!(
            "masks are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &q) in a.data().iter().zip(b.data()) {
        inter += (p && q) as usize;
        union += (p || q) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}
