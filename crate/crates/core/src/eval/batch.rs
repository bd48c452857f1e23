use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::iou;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub id: String,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_image: Vec<ImageScore>,
    pub mean_iou: f64,
    pub params_digest: String,
}

impl EvalReport {
    pub fn from_scores(per_image: Vec<ImageScore>, params_digest: String) -> Result<Self> {
        if per_image.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let mean_iou = per_image.iter().map(|s| s.iou).sum::<f64>() / per_image.len() as f64;
        Ok(Self {
            per_image,
            mean_iou,
            params_digest,
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    /// `id,iou` rows followed by a `mean` row.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let fail = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
        w.write_record(["id", "iou"]).map_err(fail)?;
        for s in &self.per_image {
            w.write_record([s.id.as_str(), &format!("{:.6}", s.iou)]).map_err(fail)?;
        }
        w.write_record(["mean", &format!("{:.6}", self.mean_iou)]).map_err(fail)?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// PNG stems directly under `dir`, plus subdirectories holding `truth.png`.
fn mask_stems(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        if path.is_dir() {
            let truth = path.join("truth.png");
            if truth.is_file() {
                out.push((name, truth));
            }
        } else if let Some(stem) = name.strip_suffix(".png") {
            out.push((stem.to_string(), path));
        }
    }
    out.sort();
    Ok(out)
}

/// The `params_digest` recorded by a mask-generation run in `dir`, or `"unknown"`.
pub fn load_digest(dir: &Path) -> String {
    let run = dir.join("run.json");
    std::fs::read_to_string(run)
        .ok()
        .and_then(|s| serde_json::from_str::<serde_json::Value>(&s).ok())
        .and_then(|v| v.get("params_digest").and_then(|d| d.as_str()).map(str::to_string))
        .unwrap_or_else(|| "unknown".into())
}

/// Scores every predicted mask against the truth mask of the same stem.
///
/// Predictions are `<pred_dir>/<stem>.png`; truth is either
/// `<truth_dir>/<stem>.png` or `<truth_dir>/<stem>/truth.png`. A stem present
/// on only one side is an error.
pub fn evaluate_batch(pred_dir: &Path, truth_dir: &Path) -> Result<EvalReport> {
    let preds = mask_stems(pred_dir)?;
    let truths = mask_stems(truth_dir)?;
    let pred_ids: BTreeSet<&str> = preds.iter().map(|(s, _)| s.as_str()).collect();
    let truth_ids: BTreeSet<&str> = truths.iter().map(|(s, _)| s.as_str()).collect();
    if let Some(stem) = pred_ids.difference(&truth_ids).next() {
        return Err(Error::MissingPair {
            stem: stem.to_string(),
            side: "truth",
        });
    }
    if let Some(stem) = truth_ids.difference(&pred_ids).next() {
        return Err(Error::MissingPair {
            stem: stem.to_string(),
            side: "prediction",
        });
    }
    let scores = preds
        .par_iter()
        .zip(truths.par_iter())
        .map(|((id, p), (_, t))| {
            let pred = crate::io::load_mask(p)?;
            let truth = crate::io::load_mask(t)?;
            Ok(ImageScore {
                id: id.clone(),
                iou: iou(&pred, &truth)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    EvalReport::from_scores(scores, load_digest(pred_dir))
}
