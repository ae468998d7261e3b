//! Turning filtered detections into pseudo-strong VOC annotations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detections::{DetectionSet, DEFAULT_SCORE_THRESHOLD};
use crate::error::{Error, Result};
use crate::metrics::iou;
use crate::voc::{ClassLabel, GtObject, ImageRecord};

/// IoU threshold used when NMS is switched on without an explicit value.
pub const DEFAULT_NMS_IOU: f64 = 0.3;

/// Split name of exported pseudo-label sets.
pub const PSEUDO_SPLIT: &str = "trainval";

/// Drop detections whose class is not among the image-level labels of their image.
pub fn class_consistency_filter(
    dets: &DetectionSet,
    labels: &HashMap<String, BTreeSet<ClassLabel>>,
) -> Result<DetectionSet> {
    let mut kept = Vec::with_capacity(dets.len());
    for d in dets.iter() {
        let present = labels
            .get(&d.image_id)
            .ok_or_else(|| Error::UnknownImage(d.image_id.clone()))?;
        if present.contains(&d.class) {
            kept.push(d.clone());
        }
    }
    Ok(DetectionSet::new(kept, dets.provenance.clone()))
}

/// Greedy per-image, per-class non-maximum suppression.
///
/// Within a group, detections are visited by descending score (ties in ingestion
/// order) and kept iff their IoU with every kept detection is below `iou_thr`.
/// Survivors are returned in ingestion order.
pub fn nms(dets: &DetectionSet, iou_thr: f64) -> DetectionSet {
    let mut groups: HashMap<(&str, ClassLabel), Vec<usize>> = HashMap::new();
    for (i, d) in dets.iter().enumerate() {
        groups
            .entry((d.image_id.as_str(), d.class))
            .or_default()
            .push(i);
    }

    let all = &dets.detections;
    let mut keep = vec![false; all.len()];
    for mut members in groups.into_values() {
        members.sort_by(|&a, &b| all[b].score.total_cmp(&all[a].score));
        let mut kept: Vec<usize> = Vec::new();
        for i in members {
            if kept
                .iter()
                .all(|&k| iou(&all[i].bbox, &all[k].bbox) < iou_thr)
            {
                kept.push(i);
                keep[i] = true;
            }
        }
    }

    let mut flags = keep.into_iter();
    dets.retain_cloned(|_| flags.next().unwrap_or(false))
}

/// Parameters that produced a pseudo-label set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub tau: f64,
    pub class_consistency: bool,
    pub nms_iou: Option<f64>,
    /// Keep at most this many boxes per (image, class), highest scores first.
    pub max_per_class: Option<usize>,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            tau: DEFAULT_SCORE_THRESHOLD,
            class_consistency: true,
            nms_iou: None,
            max_per_class: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    /// Non-empty object lists keyed by image id, in lexicographic id order.
    pub images: BTreeMap<String, Vec<GtObject>>,
    pub provenance: String,
    pub params: FilterParams,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn object_count(&self) -> usize {
        self.images.values().map(Vec::len).sum()
    }

    pub fn records(&self) -> impl Iterator<Item = ImageRecord> + '_ {
        self.images.iter().map(|(id, objects)| ImageRecord {
            image_id: id.clone(),
            size: None,
            objects: objects.clone(),
        })
    }
}

/// Group surviving detections by image, dropping scores.
///
/// `dets` is expected to have been filtered already; `params` is recorded as-is
/// and only its `max_per_class` cap is applied here.
pub fn build_pseudo_labels(dets: &DetectionSet, params: FilterParams) -> PseudoLabelSet {
    let capped;
    let dets = match params.max_per_class {
        Some(cap) => {
            capped = cap_per_class(dets, cap);
            &capped
        }
        None => dets,
    };

    let mut images: BTreeMap<String, Vec<GtObject>> = BTreeMap::new();
    for d in dets.iter() {
        images
            .entry(d.image_id.clone())
            .or_default()
            .push(GtObject {
                class: d.class,
                bbox: d.bbox,
                difficult: false,
            });
    }
    PseudoLabelSet {
        images,
        provenance: dets.provenance.clone(),
        params,
    }
}

fn cap_per_class(dets: &DetectionSet, cap: usize) -> DetectionSet {
    let all = &dets.detections;
    let mut groups: HashMap<(&str, ClassLabel), Vec<usize>> = HashMap::new();
    for (i, d) in all.iter().enumerate() {
        groups
            .entry((d.image_id.as_str(), d.class))
            .or_default()
            .push(i);
    }
    let mut keep = vec![false; all.len()];
    for mut members in groups.into_values() {
        members.sort_by(|&a, &b| all[b].score.total_cmp(&all[a].score));
        for i in members.into_iter().take(cap) {
            keep[i] = true;
        }
    }
    let mut flags = keep.into_iter();
    dets.retain_cloned(|_| flags.next().unwrap_or(false))
}

/// Render an image record as a VOC annotation document.
///
/// The filename is `<image_id>.jpg`; `<size>` is written only when known.
pub fn write_annotation(record: &ImageRecord) -> String {
    let mut s = String::new();
    s.push_str("<annotation>\n");
    s.push_str("\t<folder>VOC2007</folder>\n");
    let _ = writeln!(s, "\t<filename>{}.jpg</filename>", escape(&record.image_id));
    if let Some(size) = record.size {
        let _ = writeln!(
            s,
            "\t<size>\n\t\t<width>{}</width>\n\t\t<height>{}</height>\n\t\t<depth>3</depth>\n\t</size>",
            size.width, size.height
        );
    }
    s.push_str("\t<segmented>0</segmented>\n");
    for o in &record.objects {
        let b = o.bbox;
        let _ = write!(
            s,
            "\t<object>\n\
             \t\t<name>{}</name>\n\
             \t\t<pose>Unspecified</pose>\n\
             \t\t<truncated>0</truncated>\n\
             \t\t<difficult>{}</difficult>\n\
             \t\t<bndbox>\n\
             \t\t\t<xmin>{}</xmin>\n\
             \t\t\t<ymin>{}</ymin>\n\
             \t\t\t<xmax>{}</xmax>\n\
             \t\t\t<ymax>{}</ymax>\n\
             \t\t</bndbox>\n\
             \t</object>\n",
            o.class.name(),
            u8::from(o.difficult),
            b.xmin(),
            b.ymin(),
            b.xmax(),
            b.ymax()
        );
    }
    s.push_str("</annotation>\n");
    s
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Write `out_dir/Annotations/<id>.xml` per image and, last,
/// `out_dir/ImageSets/Main/trainval.txt` listing the ids in sorted order.
pub fn export_voc(pl: &PseudoLabelSet, out_dir: &Path) -> Result<()> {
    let ann_dir = out_dir.join("Annotations");
    let sets_dir = out_dir.join("ImageSets").join("Main");
    fs::create_dir_all(&ann_dir).map_err(|e| Error::io(&ann_dir, e))?;
    fs::create_dir_all(&sets_dir).map_err(|e| Error::io(&sets_dir, e))?;

    let records: Vec<ImageRecord> = pl.records().collect();
    records.par_iter().try_for_each(|rec| {
        let path = ann_dir.join(format!("{}.xml", rec.image_id));
        fs::write(&path, write_annotation(rec)).map_err(|e| Error::io(path, e))
    })?;

    let mut split = String::new();
    for id in pl.images.keys() {
        split.push_str(id);
        split.push('\n');
    }
    let split_path = sets_dir.join(format!("{PSEUDO_SPLIT}.txt"));
    fs::write(&split_path, split).map_err(|e| Error::io(split_path, e))
}
