//! Detector dump records and the score threshold.
//!
//! A dump is JSON lines, one detection per line, with fields in this order:
//! `{"image_id": "...", "class": "<voc name>", "score": <0..1>, "bbox": [xmin, ymin, xmax, ymax]}`.
//! Box coordinates are integers in VOC inclusive pixel coordinates; producers
//! with real-valued boxes round half away from zero before writing.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::voc::{BoundingBox, ClassLabel};

/// Score threshold applied to raw weak-detector output.
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub class: ClassLabel,
    pub score: f64,
    pub bbox: BoundingBox,
}

impl Detection {
    pub fn new(
        image_id: impl Into<String>,
        class: ClassLabel,
        score: f64,
        bbox: BoundingBox,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ScoreOutOfRange { line: 0, score });
        }
        Ok(Self {
            image_id: image_id.into(),
            class,
            score,
            bbox,
        })
    }
}

/// Detections in ingestion order, tagged with where they came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DetectionSet {
    pub detections: Vec<Detection>,
    pub provenance: String,
}

impl DetectionSet {
    pub fn new(detections: Vec<Detection>, provenance: impl Into<String>) -> Self {
        Self {
            detections,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.detections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detections.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Detection> {
        self.detections.iter()
    }

    /// Same provenance, only the detections satisfying `keep`, order preserved.
    pub fn retain_cloned(&self, mut keep: impl FnMut(&Detection) -> bool) -> DetectionSet {
        DetectionSet {
            detections: self
                .detections
                .iter()
                .filter(|d| keep(d))
                .cloned()
                .collect(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    image_id: String,
    class: String,
    score: f64,
    bbox: [i32; 4],
}

#[derive(Serialize)]
struct OutRecord<'a> {
    image_id: &'a str,
    class: ClassLabel,
    score: f64,
    bbox: [i32; 4],
}

/// Read a dump. Blank lines are skipped; errors carry 1-based line numbers.
pub fn read_dump(reader: impl BufRead, provenance: impl Into<String>) -> Result<DetectionSet> {
    let mut detections = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        let at_line = |e: Error| Error::AtLine {
            line: line_no,
            source: Box::new(e),
        };
        let class: ClassLabel = raw.class.parse().map_err(at_line)?;
        if !(0.0..=1.0).contains(&raw.score) {
            return Err(Error::ScoreOutOfRange {
                line: line_no,
                score: raw.score,
            });
        }
        let bbox = BoundingBox::try_from(raw.bbox).map_err(at_line)?;
        detections.push(Detection {
            image_id: raw.image_id,
            class,
            score: raw.score,
            bbox,
        });
    }
    Ok(DetectionSet::new(detections, provenance))
}

/// Write a dump: fixed field order, shortest round-trip score representation.
pub fn write_dump(dets: &DetectionSet, mut writer: impl Write) -> Result<()> {
    for d in &dets.detections {
        let rec = OutRecord {
            image_id: &d.image_id,
            class: d.class,
            score: d.score,
            bbox: d.bbox.to_array(),
        };
        serde_json::to_writer(&mut writer, &rec).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// Keep detections with `score >= tau`, in order.
pub fn threshold_filter(dets: &DetectionSet, tau: f64) -> DetectionSet {
    dets.retain_cloned(|d| d.score >= tau)
}
