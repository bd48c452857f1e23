//! Positive/unlabeled frame annotation from robot telemetry.
//!
//! A frame is positive when, over the time window centered on it, all four
//! wheels ran at or above the speed threshold, the robot was commanded
//! forwards or turning, and the laser saw nothing within the clearance range.
//!
//! Telemetry is treated as sample-and-hold: a record stays in effect until the
//! next one, so the records examined for a window are those whose hold
//! interval overlaps it.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub t: f64,
    pub v_fl: f64,
    pub v_fr: f64,
    pub v_rl: f64,
    pub v_rr: f64,
    pub cmd_lin: f64,
    pub cmd_ang: f64,
    /// `inf` when the scanner has no return.
    pub laser_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameIndex {
    pub frame_id: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationParams {
    pub v_thresh: f64,
    pub window: f64,
    pub laser_clear: f64,
    pub ang_min: f64,
}

impl Default for AnnotationParams {
    fn default() -> Self {
        Self {
            v_thresh: 1.0,
            window: 2.5,
            laser_clear: 1.2,
            ang_min: 0.05,
        }
    }
}

impl AnnotationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("v_thresh", self.v_thresh),
            ("window", self.window),
            ("laser_clear", self.laser_clear),
            ("ang_min", self.ang_min),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam(format!("annotation: {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    pub positive: Vec<String>,
    pub unlabeled: Vec<String>,
    /// Hand-labeled frames, moved out of the other two lists.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub challenging: Vec<String>,
}

impl LabelSet {
    /// Moves every listed frame into `challenging`. Ids not present are ignored.
    pub fn mark_challenging<S: AsRef<str>>(&mut self, ids: &[S]) {
        let wanted: HashSet<&str> = ids.iter().map(|s| s.as_ref()).collect();
        let mut taken = Vec::new();
        for list in [&mut self.positive, &mut self.unlabeled] {
            list.retain(|id| {
                if wanted.contains(id.as_str()) {
                    taken.push(id.clone());
                    false
                } else {
                    true
                }
            });
        }
        taken.sort();
        self.challenging.extend(taken);
    }
}

fn validate_log(log: &[TelemetryRecord]) -> Result<()> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    for (i, pair) in log.windows(2).enumerate() {
        if !(pair[1].t > pair[0].t) {
            return Err(Error::UnsortedLog(i + 1));
        }
    }
    Ok(())
}

fn record_ok(r: &TelemetryRecord, p: &AnnotationParams) -> bool {
    let slowest = [r.v_fl, r.v_fr, r.v_rl, r.v_rr].iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let moving = r.cmd_lin > 0.0 || (r.cmd_lin >= 0.0 && r.cmd_ang.abs() >= p.ang_min);
    slowest >= p.v_thresh && moving && r.laser_min > p.laser_clear
}

/// Whether the window centered on `t` qualifies; `None` when it leaves the log span.
fn window_positive(log: &[TelemetryRecord], t: f64, p: &AnnotationParams) -> Option<bool> {
    let (lo, hi) = (t - p.window / 2.0, t + p.window / 2.0);
    if lo < log[0].t || hi > log[log.len() - 1].t {
        return None;
    }
    // last record at or before lo holds at the window start
    let first = log.partition_point(|r| r.t <= lo).saturating_sub(1);
    let end = log.partition_point(|r| r.t <= hi);
    Some(log[first..end].iter().all(|r| record_ok(r, p)))
}

/// Splits frames into positive and unlabeled. Frames whose window is not
/// fully covered by the log are unlabeled. Both lists are ordered by
/// timestamp, then id.
pub fn label_frames(log: &[TelemetryRecord], frames: &[FrameIndex], p: &AnnotationParams) -> Result<LabelSet> {
    p.validate()?;
    validate_log(log)?;
    let mut ordered: Vec<&FrameIndex> = frames.iter().collect();
    ordered.sort_by(|a, b| a.t.total_cmp(&b.t).then_with(|| a.frame_id.cmp(&b.frame_id)));
    let mut out = LabelSet::default();
    for f in ordered {
        match window_positive(log, f.t, p) {
            Some(true) => out.positive.push(f.frame_id.clone()),
            _ => out.unlabeled.push(f.frame_id.clone()),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub positive: usize,
    pub unlabeled: usize,
    pub challenging: usize,
    pub total: usize,
    pub positive_ratio: f64,
}

impl SplitCounts {
    fn of(l: &LabelSet) -> Self {
        let total = l.positive.len() + l.unlabeled.len() + l.challenging.len();
        Self {
            positive: l.positive.len(),
            unlabeled: l.unlabeled.len(),
            challenging: l.challenging.len(),
            total,
            positive_ratio: if total == 0 { 0.0 } else { l.positive.len() as f64 / total as f64 },
        }
    }

    fn add(&mut self, o: &SplitCounts) {
        self.positive += o.positive;
        self.unlabeled += o.unlabeled;
        self.challenging += o.challenging;
        self.total += o.total;
        self.positive_ratio = if self.total == 0 { 0.0 } else { self.positive as f64 / self.total as f64 };
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    #[serde(flatten)]
    pub overall: SplitCounts,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_source: BTreeMap<String, SplitCounts>,
}

pub fn split_report(labels: &LabelSet) -> SplitReport {
    SplitReport {
        overall: SplitCounts::of(labels),
        per_source: BTreeMap::new(),
    }
}

/// Report over several logs, keyed by source name.
pub fn split_report_by_source<'a, I>(sources: I) -> SplitReport
where
    I: IntoIterator<Item = (&'a str, &'a LabelSet)>,
{
    let mut report = SplitReport::default();
    for (name, labels) in sources {
        let c = SplitCounts::of(labels);
        report.overall.add(&c);
        report.per_source.entry(name.to_string()).or_default().add(&c);
    }
    report
}

pub fn read_telemetry(path: &Path) -> Result<Vec<TelemetryRecord>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let records = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<TelemetryRecord>, _>>()
        .map_err(|e| csv_err(path, e))?;
    if records.iter().any(|r| !(r.laser_min > 0.0)) {
        return Err(Error::Format(format!("{}: laser_min must be positive or inf", path.display())));
    }
    Ok(records)
}

pub fn read_frames(path: &Path) -> Result<Vec<FrameIndex>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    rdr.deserialize().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| csv_err(path, e))
}

/// One frame id per line; blank lines and `#` comments are skipped.
pub fn read_challenging(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

pub fn write_labels(labels: &LabelSet, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(labels).expect("label set serializes");
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}
