//! Image, depth and mask file I/O.
//!
//! * RGB: 8-bit PNG or PPM (gray and alpha are expanded / dropped).
//! * Depth: 16-bit single-channel PNG in millimeters, or 2-D `float32` NPY in meters.
//! * Masks: 8-bit single-channel PNG holding only 0 and 255.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, ImageReader, Luma, Rgb};

use crate::npy;
use crate::raster::{DepthMap, FreeSpaceMask, RgbImage};
use crate::{Error, Result};

/// Millimeters per meter for 16-bit depth PNGs.
pub const DEPTH_PNG_SCALE: f32 = 1000.0;

fn open(path: &Path) -> Result<DynamicImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    reader.decode().map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    })
}

fn encode_err(path: &Path, e: image::ImageError) -> Error {
    match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let img = open(path)?;
    let rgb = match img {
        DynamicImage::ImageRgb8(buf) => buf,
        DynamicImage::ImageRgba8(_) | DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) => img.to_rgb8(),
        other => {
            return Err(Error::Format(format!(
                "{}: unsupported color type {:?} (8-bit RGB/gray expected)",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = rgb.dimensions();
    RgbImage::new(w as usize, h as usize, rgb.into_raw())
}

pub fn save_image(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf: ImageBuffer<Rgb<u8>, &[u8]> =
        ImageBuffer::from_raw(img.width() as u32, img.height() as u32, img.data()).expect("validated dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

/// Loads a depth map in meters. The format is chosen by extension: `.npy`
/// is read as float32 meters, anything else as a 16-bit millimeter PNG.
pub fn load_depth(path: impl AsRef<Path>) -> Result<DepthMap> {
    let path = path.as_ref();
    let is_npy = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("npy"));
    if is_npy {
        let arr = npy::read_npy(path)?;
        let [h, w] = arr.shape[..] else {
            return Err(Error::Shape(format!(
                "{}: depth array must be 2-D, got shape {:?}",
                path.display(),
                arr.shape
            )));
        };
        return DepthMap::new(w, h, arr.data);
    }
    match open(path)? {
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            let data = buf.into_raw().into_iter().map(|mm| mm as f32 / DEPTH_PNG_SCALE).collect();
            DepthMap::new(w as usize, h as usize, data)
        }
        other => Err(Error::Format(format!(
            "{}: depth PNG must be 16-bit single channel, got {:?}",
            path.display(),
            other.color()
        ))),
    }
}

/// Writes depth as a 16-bit millimeter PNG. Values are rounded and clamped
/// to `0..=65535`; non-finite samples become 0.
pub fn save_depth_png(depth: &DepthMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let data: Vec<u16> = depth
        .data()
        .iter()
        .map(|&z| {
            if z.is_finite() {
                (z * DEPTH_PNG_SCALE).round().clamp(0.0, u16::MAX as f32) as u16
            } else {
                0
            }
        })
        .collect();
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_raw(depth.width() as u32, depth.height() as u32, data).expect("validated dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

pub fn save_mask(mask: &FreeSpaceMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let data: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_raw(mask.width() as u32, mask.height() as u32, data).expect("validated dimensions");
    buf.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| encode_err(path, e))
}

/// Loads a binary mask. Any gray value other than 0 or 255 is a format error.
pub fn load_mask(path: impl AsRef<Path>) -> Result<FreeSpaceMask> {
    let path = path.as_ref();
    let buf = match open(path)? {
        DynamicImage::ImageLuma8(buf) => buf,
        other => {
            return Err(Error::Format(format!(
                "{}: mask must be 8-bit single channel, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = buf.dimensions();
    let mut data = Vec::with_capacity((w * h) as usize);
    for (i, &v) in buf.as_raw().iter().enumerate() {
        match v {
            0 => data.push(false),
            255 => data.push(true),
            other => {
                return Err(Error::Format(format!(
                    "{}: non-binary mask value {other} at pixel {i}",
                    path.display()
                )))
            }
        }
    }
    FreeSpaceMask::new(w as usize, h as usize, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_png_decodes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.png");
        let img = RgbImage::filled(2, 2, [255, 255, 255]).unwrap();
        save_image(&img, &p).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!((back.width(), back.height()), (2, 2));
        assert!(back.data().iter().all(|&v| v == 255));
    }

    #[test]
    fn dataset_sized_frame_decodes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.png");
        save_image(&RgbImage::filled(640, 480, [10, 20, 30]).unwrap(), &p).unwrap();
        let back = load_image(&p).unwrap();
        assert_eq!((back.width(), back.height()), (640, 480));
    }

    #[test]
    fn ppm_decodes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.ppm");
        let mut bytes = b"P6\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        std::fs::write(&p, bytes).unwrap();
        let img = load_image(&p).unwrap();
        assert_eq!(img.data(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_image("/nonexistent/x.png"), Err(Error::Io { .. })));
        assert!(matches!(load_depth("/nonexistent/x.png"), Err(Error::Io { .. })));
    }

    #[test]
    fn sixteen_bit_rgb_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        save_depth_png(&DepthMap::filled(3, 3, 1.0).unwrap(), &p).unwrap();
        assert!(matches!(load_image(&p), Err(Error::Format(_))));
    }

    #[test]
    fn depth_png_is_millimeters() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(2, 1, vec![1500, 65535]).unwrap();
        buf.save(&p).unwrap();
        let d = load_depth(&p).unwrap();
        assert_eq!(d.data(), &[1.5, 65.535]);
    }

    #[test]
    fn depth_png_round_trips_at_millimeter_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.png");
        let d = DepthMap::from_fn(4, 3, |x, y| (1 + x + 10 * y) as f32 / 1000.0 * 137.0).unwrap();
        save_depth_png(&d, &p).unwrap();
        let back = load_depth(&p).unwrap();
        for (a, b) in d.data().iter().zip(back.data()) {
            assert_eq!((a * 1000.0).round(), (b * 1000.0).round());
        }
    }

    #[test]
    fn depth_npy_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.npy");
        npy::write_npy(&[480, 640], &vec![2.0; 480 * 640], &p).unwrap();
        let d = load_depth(&p).unwrap();
        assert_eq!((d.width(), d.height()), (640, 480));

        let p3 = dir.path().join("d3.npy");
        npy::write_npy(&[2, 2, 2], &[1.0; 8], &p3).unwrap();
        assert!(matches!(load_depth(&p3), Err(Error::Shape(_))));
    }

    #[test]
    fn mask_round_trip_and_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let all = FreeSpaceMask::filled(4, 4, true).unwrap();
        save_mask(&all, &p).unwrap();
        let raw = image::open(&p).unwrap().into_luma8().into_raw();
        assert_eq!(raw, vec![255u8; 16]);

        let none = FreeSpaceMask::filled(4, 4, false).unwrap();
        save_mask(&none, &p).unwrap();
        assert_eq!(image::open(&p).unwrap().into_luma8().into_raw(), vec![0u8; 16]);

        let half = FreeSpaceMask::from_fn(5, 3, |x, y| (x + y) % 2 == 0).unwrap();
        save_mask(&half, &p).unwrap();
        assert_eq!(load_mask(&p).unwrap(), half);
    }

    #[test]
    fn non_binary_mask_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.png");
        let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_raw(2, 1, vec![0, 128]).unwrap();
        buf.save(&p).unwrap();
        assert!(matches!(load_mask(&p), Err(Error::Format(_))));
    }
}
