//! IoU scoring, batch evaluation and synthetic corridor scenes.

mod batch;
mod iou;
mod synth;

pub use batch::{evaluate_batch, load_digest, EvalReport, ImageScore};
pub use iou::iou;
pub use synth::{floor_depth, generate_scene, write_scene, BoxSpec, SceneSpec, Surface, SyntheticScene};
