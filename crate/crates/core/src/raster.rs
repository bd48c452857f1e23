//! Raster containers shared by every stage.
//!
//! All buffers are row-major with the pixel at `(x, y)` stored at
//! `y * width + x` (times the channel count for [`RgbImage`]).

use crate::{Error, Result};

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Shape(format!("raster must be non-empty, got {width}x{height}")));
    }
    Ok(())
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Shape(format!("{what}: expected {want} samples, got {got}")));
    }
    Ok(())
}

/// 8-bit, three channel image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        check_len("rgb image", data.len(), width * height * 3)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let data = rgb.iter().copied().cycle().take(width * height * 3).collect();
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Per-pixel depth in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl DepthMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        check_len("depth map", data.len(), width * height)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, z: f32) -> Result<Self> {
        Self::new(width, height, vec![z; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f32) -> Result<Self> {
        check_dims(width, height)?;
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// True when every sample is finite and strictly positive.
    pub fn is_valid(&self) -> bool {
        self.data.iter().all(|z| z.is_finite() && *z > 0.0)
    }

    pub fn same_size_as(&self, img: &RgbImage) -> bool {
        self.width == img.width() && self.height == img.height()
    }
}

/// Binary free-space raster, `true` marks traversable pixels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreeSpaceMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl FreeSpaceMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height)?;
        check_len("mask", data.len(), width * height)?;
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        check_dims(width, height)?;
        let data = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }
}

/// Dense label raster; labels are `0..count` and none is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperpixelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: usize,
}

impl SuperpixelMap {
    /// Validates that labels are dense in `0..count`.
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self> {
        check_dims(width, height)?;
        check_len("superpixel map", labels.len(), width * height)?;
        let count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        let mut seen = vec![false; count];
        for &l in &labels {
            seen[l as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Shape(format!("label {missing} of {count} has no pixels")));
        }
        Ok(Self {
            width,
            height,
            labels,
            count,
        })
    }

    /// Renumbers arbitrary labels to `0..count`, preserving their relative order.
    pub fn compacted(width: usize, height: usize, labels: &[u32]) -> Result<Self> {
        check_dims(width, height)?;
        check_len("superpixel map", labels.len(), width * height)?;
        let max = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut used = vec![false; max + 1];
        for &l in labels {
            used[l as usize] = true;
        }
        let mut remap = vec![u32::MAX; max + 1];
        let mut next = 0u32;
        for (old, u) in used.iter().enumerate() {
            if *u {
                remap[old] = next;
                next += 1;
            }
        }
        Ok(Self {
            width,
            height,
            labels: labels.iter().map(|&l| remap[l as usize]).collect(),
            count: next as usize,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Pixel count per label.
    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0; self.count];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }
}
