//! Unsupervised free-space mask generation for indoor RGB-D frames.
//!
//! The pipeline oversegments an image with depth-adaptive superpixels, pools a
//! dense feature grid onto every superpixel through ten bilinear anchors, and
//! clusters the pooled descriptors with a k-means whose first center is pulled
//! toward deep, low-gradient seed regions. The cluster covering the deepest
//! area becomes the free-space mask.
//!
//! Around that core sit a telemetry-driven auto-annotator ([`annotate`]), an
//! IoU evaluation harness and a synthetic corridor generator ([`eval`]).
//!
//! ```no_run
//! use fsseg_core::{io, pipeline::{self, PipelineConfig}};
//!
//! let rgb = io::load_image("frame.png").unwrap();
//! let depth = io::load_depth("frame_depth.png").unwrap();
//! let out = pipeline::process_frame(&rgb, &depth, None, &PipelineConfig::default()).unwrap();
//! io::save_mask(&out.mask, "frame_mask.png").unwrap();
//! ```

pub mod align;
pub mod annotate;
pub mod dasp;
pub mod error;
pub mod eval;
pub mod features;
pub mod freespace;
pub mod io;
pub mod npy;
pub mod pipeline;
pub mod raster;

pub use error::{Error, Result};
pub use raster::{DepthMap, FreeSpaceMask, RgbImage, SuperpixelMap};
