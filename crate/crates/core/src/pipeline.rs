//! End-to-end mask generation: single frames and directory batches.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::{pool_superpixels, SuperpixelDescriptor};
use crate::annotate::AnnotationParams;
use crate::dasp::{self, DaspParams, SeedSet};
use crate::features::{fallback_features, ingest_token_features, FeatureGrid};
use crate::freespace::{attraction_weights, cluster_depths, init_centers, kmeans, rasterize_mask, ClusterAssignment, ClusterParams};
use crate::raster::{DepthMap, FreeSpaceMask, RgbImage, SuperpixelMap};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Ingest,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub source: FeatureSource,
    /// Ingested file per stem; `{stem}` is substituted, relative paths
    /// resolve against the input directory.
    pub pattern: String,
    /// Side of the fallback feature grid.
    pub grid: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            source: FeatureSource::Fallback,
            pattern: "{stem}.feat.npy".into(),
            grid: 24,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dasp: DaspParams,
    pub cluster: ClusterParams,
    pub annotation: AnnotationParams,
    pub features: FeatureConfig,
    pub paths: PathConfig,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub debug_json: bool,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.dasp.validate().map_err(wrap)?;
        self.cluster.validate().map_err(wrap)?;
        self.annotation.validate().map_err(wrap)?;
        if self.features.source == FeatureSource::Fallback && self.features.grid < 2 {
            return Err(Error::Config("features.grid must be >= 2".into()));
        }
        Ok(())
    }

    /// SHA-256 over the parameters that shape a mask (paths, parallelism and
    /// debug output excluded).
    pub fn params_digest(&self) -> String {
        let relevant = serde_json::json!({
            "dasp": self.dasp,
            "cluster": self.cluster,
            "features": self.features,
        });
        let bytes = serde_json::to_vec(&relevant).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub mask: FreeSpaceMask,
    pub superpixels: SuperpixelMap,
    pub descriptors: Vec<SuperpixelDescriptor>,
    pub seeds: SeedSet,
    pub weights: Vec<f64>,
    pub assignment: ClusterAssignment,
}

impl FrameOutput {
    pub fn debug_summary(&self) -> serde_json::Value {
        serde_json::json!({
            "superpixels": self.superpixels.count(),
            "seeds": self.seeds.seeds,
            "weights": self.weights,
            "cluster_labels": self.assignment.labels,
            "cluster_depths": cluster_depths(&self.assignment.labels, self.assignment.centers.k, &self.descriptors),
            "freespace_cluster": self.assignment.freespace_cluster,
            "iterations": self.assignment.iterations_run,
            "objective": self.assignment.objective,
            "mask_pixels": self.mask.count(),
        })
    }
}

/// Runs the full chain on one frame. `features` overrides the configured
/// source; without it the fallback descriptor is computed.
pub fn process_frame(
    rgb: &RgbImage,
    depth: &DepthMap,
    features: Option<&FeatureGrid>,
    cfg: &PipelineConfig,
) -> Result<FrameOutput> {
    if !depth.same_size_as(rgb) {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs depth {}x{}",
            rgb.width(),
            rgb.height(),
            depth.width(),
            depth.height()
        )));
    }
    let depth = dasp::repair_depth(depth)?;
    let superpixels = dasp::oversegment(rgb, &depth, &cfg.dasp)?;
    let seeds = match dasp::extract_seeds(&depth, &cfg.dasp) {
        Err(Error::NoSeeds) => {
            log::warn!("no seed region qualified; using the deepest pixel");
            dasp::extract_seeds_or_deepest(&depth, &cfg.dasp)?
        }
        other => other?,
    };
    let fallback;
    let grid = match features {
        Some(g) => g,
        None => {
            fallback = fallback_features(rgb, &depth, cfg.features.grid)?;
            &fallback
        }
    };
    let descriptors = pool_superpixels(&superpixels, grid, &depth)?;
    let diag = ((rgb.width().pow(2) + rgb.height().pow(2)) as f64).sqrt();
    let weights = attraction_weights(&descriptors, &seeds, cfg.cluster.sigma, diag)?;
    let init = init_centers(&descriptors, &weights, cfg.cluster.k, cfg.cluster.rng_seed)?;
    let assignment = kmeans(&descriptors, &init, &cfg.cluster)?;
    if assignment.freespace_cluster != 0 {
        log::debug!(
            "deepest cluster is {} rather than the attraction-initialized cluster 0",
            assignment.freespace_cluster
        );
    }
    let mask = rasterize_mask(&superpixels, &assignment.labels, assignment.freespace_cluster)?;
    Ok(FrameOutput {
        mask,
        superpixels,
        descriptors,
        seeds,
        weights,
        assignment,
    })
}

/// Image and depth files for one stem.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFiles {
    pub stem: String,
    pub rgb: PathBuf,
    pub depth: Option<PathBuf>,
}

/// Frames under `dir`. Two layouts are recognized: subdirectories holding
/// `rgb.png` and `depth.png`, and flat `<stem>.png` files whose depth is
/// `<stem>_depth.png` or `<stem>_depth.npy`. A missing depth file is kept
/// as `None` so the batch can report it.
pub fn discover_frames(dir: &Path) -> Result<Vec<FrameFiles>> {
    let mut frames = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        if path.is_dir() {
            let rgb = path.join("rgb.png");
            if rgb.is_file() {
                let depth = ["depth.png", "depth.npy"].iter().map(|d| path.join(d)).find(|p| p.is_file());
                frames.push(FrameFiles { stem: name, rgb, depth });
            }
            continue;
        }
        let Some(stem) = name.strip_suffix(".png") else { continue };
        if stem.ends_with("_depth") || stem.ends_with("_mask") {
            continue;
        }
        let depth = [format!("{stem}_depth.png"), format!("{stem}_depth.npy")]
            .iter()
            .map(|d| dir.join(d))
            .find(|p| p.is_file());
        frames.push(FrameFiles {
            stem: stem.to_string(),
            rgb: path,
            depth,
        });
    }
    frames.sort_by(|a, b| a.stem.cmp(&b.stem));
    Ok(frames)
}

fn feature_path(cfg: &PipelineConfig, input: &Path, stem: &str) -> PathBuf {
    let p = PathBuf::from(cfg.features.pattern.replace("{stem}", stem));
    if p.is_relative() {
        input.join(p)
    } else {
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFailure {
    pub stem: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params_digest: String,
    pub written: Vec<String>,
    pub failures: Vec<FrameFailure>,
    pub config: PipelineConfig,
}

impl RunSummary {
    pub fn is_success(&self) -> bool {
        self.failures.is_empty()
    }
}

fn run_one(frame: &FrameFiles, input: &Path, output: &Path, cfg: &PipelineConfig) -> Result<()> {
    let rgb = crate::io::load_image(&frame.rgb)?;
    let depth_path = frame.depth.as_ref().ok_or_else(|| Error::MissingPair {
        stem: frame.stem.clone(),
        side: "depth",
    })?;
    let depth = crate::io::load_depth(depth_path)?;
    let grid = match cfg.features.source {
        FeatureSource::Ingest => Some(ingest_token_features(feature_path(cfg, input, &frame.stem))?),
        FeatureSource::Fallback => None,
    };
    let out = process_frame(&rgb, &depth, grid.as_ref(), cfg)?;
    crate::io::save_mask(&out.mask, output.join(format!("{}.png", frame.stem)))?;
    if cfg.debug_json {
        let p = output.join(format!("{}.debug.json", frame.stem));
        let json = serde_json::to_string_pretty(&out.debug_summary()).expect("summary serializes");
        std::fs::write(&p, json + "\n").map_err(|e| Error::io(&p, e))?;
        let labels: Vec<i32> = out.superpixels.labels().iter().map(|&l| l as i32).collect();
        crate::npy::write_npy_i32(
            &[out.superpixels.height(), out.superpixels.width()],
            &labels,
            output.join(format!("{}.labels.npy", frame.stem)),
        )?;
        let dim = out.descriptors.first().map_or(0, |d| d.feature.len());
        let feats: Vec<f32> = out.descriptors.iter().flat_map(|d| d.feature.iter().copied()).collect();
        crate::npy::write_npy(
            &[out.descriptors.len(), dim],
            &feats,
            output.join(format!("{}.descriptors.npy", frame.stem)),
        )?;
    }
    Ok(())
}

/// Generates masks for every frame under the configured input directory.
///
/// Frames run in parallel; a failing frame is recorded and the rest continue.
/// Masks land in `<output>/<stem>.png` next to a `run.json` summary.
pub fn run_maskgen(cfg: &PipelineConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let input = cfg.paths.input.as_deref().ok_or_else(|| Error::Config("paths.input is not set".into()))?;
    let output = cfg.paths.output.as_deref().ok_or_else(|| Error::Config("paths.output is not set".into()))?;
    if !input.is_dir() {
        return Err(Error::Config(format!("input directory {} does not exist", input.display())));
    }
    std::fs::create_dir_all(output).map_err(|e| Error::io(output, e))?;
    let frames = discover_frames(input)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(String, Result<()>)> = pool.install(|| {
        frames
            .par_iter()
            .map(|f| (f.stem.clone(), run_one(f, input, output, cfg)))
            .collect()
    });
    let mut written = Vec::new();
    let mut failures = Vec::new();
    for (stem, r) in results {
        match r {
            Ok(()) => written.push(stem),
            Err(e) => {
                log::error!("{stem}: {e}");
                failures.push(FrameFailure { stem, error: e.to_string() });
            }
        }
    }
    let summary = RunSummary {
        params_digest: cfg.params_digest(),
        written,
        failures,
        config: cfg.clone(),
    };
    let run = output.join("run.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&run, json + "\n").map_err(|e| Error::io(&run, e))?;
    Ok(summary)
}

pub const HIGHLIGHT: [u8; 3] = [0, 220, 80];

/// Blends `HIGHLIGHT` at 50% over every masked pixel.
pub fn overlay(img: &RgbImage, mask: &FreeSpaceMask) -> Result<RgbImage> {
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(Error::DimensionMismatch(format!(
            "image {}x{} vs mask {}x{}",
            img.width(),
            img.height(),
            mask.width(),
            mask.height()
        )));
    }
    let mut out = img.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if mask.get(x, y) {
                let p = img.pixel(x, y);
                out.set_pixel(x, y, std::array::from_fn(|c| (p[c] as u16 + HIGHLIGHT[c] as u16).div_ceil(2) as u8));
            }
        }
    }
    Ok(out)
}
