//! PASCAL VOC 2007 detection evaluation.
//!
//! Per class: detections are sorted by descending score (stable, so equal
//! scores keep ingestion order) and each one is greedily matched to the
//! same-image ground-truth object of highest IoU. Matches at or above the IoU
//! threshold become true positives the first time an object is claimed and false
//! positives afterwards; matches to a difficult object are ignored. The
//! resulting precision/recall curve is summarised by 11-point interpolated AP
//! (default) or by the area under its monotone envelope.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detections::{Detection, DetectionSet};
use crate::error::{Error, Result};
use crate::voc::{BoundingBox, ClassLabel, Dataset, GtObject};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

const DIFFICULT_RULE: &str =
    "difficult objects excluded from npos; detections whose best match is difficult are ignored";
const EMPTY_CLASS_RULE: &str =
    "classes with npos = 0 score AP 0 if they have detections, otherwise are excluded from mAP";

/// Intersection over union with inclusive pixel coordinates.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = a.xmax().min(b.xmax()) as i64 - a.xmin().max(b.xmin()) as i64 + 1;
    let ih = a.ymax().min(b.ymax()) as i64 - a.ymin().max(b.ymin()) as i64 + 1;
    if iw <= 0 || ih <= 0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchOutcome {
    TruePositive,
    FalsePositive,
    /// Best match was a difficult object; neither TP nor FP.
    Ignored,
}

/// Match outcomes for one class, in descending score order.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchFlags {
    pub outcomes: Vec<MatchOutcome>,
    /// Non-difficult ground-truth objects of the class.
    pub npos: usize,
}

impl MatchFlags {
    pub fn true_positives(&self) -> usize {
        self.outcomes
            .iter()
            .filter(|o| **o == MatchOutcome::TruePositive)
            .count()
    }
}

/// Greedy VOC matching of one class's detections against that class's ground truth.
///
/// Detections on images missing from `gt_of_class` have nothing to match and
/// count as false positives. Among equal-IoU objects the lowest index wins.
pub fn match_detections<'a, I>(
    dets_of_class: I,
    gt_of_class: &HashMap<String, Vec<GtObject>>,
    iou_thr: f64,
) -> MatchFlags
where
    I: IntoIterator<Item = &'a Detection>,
{
    let mut dets: Vec<&Detection> = dets_of_class.into_iter().collect();
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));

    let npos = gt_of_class
        .values()
        .flatten()
        .filter(|o| !o.difficult)
        .count();
    let mut claimed: HashMap<&str, Vec<bool>> = gt_of_class
        .iter()
        .map(|(id, objs)| (id.as_str(), vec![false; objs.len()]))
        .collect();

    let outcomes = dets
        .into_iter()
        .map(|d| {
            let Some(objects) = gt_of_class.get(&d.image_id) else {
                return MatchOutcome::FalsePositive;
            };
            let mut best: Option<(usize, f64)> = None;
            for (j, o) in objects.iter().enumerate() {
                let ov = iou(&d.bbox, &o.bbox);
                if best.is_none_or(|(_, b)| ov > b) {
                    best = Some((j, ov));
                }
            }
            match best {
                Some((j, ov)) if ov >= iou_thr => {
                    if objects[j].difficult {
                        MatchOutcome::Ignored
                    } else {
                        let flags = claimed
                            .get_mut(d.image_id.as_str())
                            .expect("claim flags exist for every gt image");
                        if flags[j] {
                            MatchOutcome::FalsePositive
                        } else {
                            flags[j] = true;
                            MatchOutcome::TruePositive
                        }
                    }
                }
                _ => MatchOutcome::FalsePositive,
            }
        })
        .collect();

    MatchFlags { outcomes, npos }
}

/// Precision/recall points, one per non-ignored detection in score order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrCurve {
    pub recall: Vec<f64>,
    pub precision: Vec<f64>,
}

impl PrCurve {
    pub fn len(&self) -> usize {
        self.recall.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recall.is_empty()
    }
}

pub fn precision_recall(flags: &MatchFlags) -> PrCurve {
    if flags.npos == 0 {
        return PrCurve::default();
    }
    let npos = flags.npos as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut curve = PrCurve::default();
    for outcome in &flags.outcomes {
        match outcome {
            MatchOutcome::TruePositive => tp += 1,
            MatchOutcome::FalsePositive => fp += 1,
            MatchOutcome::Ignored => continue,
        }
        curve.recall.push(tp as f64 / npos);
        curve.precision.push(tp as f64 / (tp + fp) as f64);
    }
    curve
}

/// VOC2007 11-point interpolated AP: mean over recall levels 0, 0.1, ..., 1 of
/// the best precision attained at or beyond that recall (0 if never reached).
pub fn average_precision_11pt(curve: &PrCurve) -> f64 {
    let mut sum = 0.0;
    for t in 0..=10 {
        let level = t as f64 / 10.0;
        let best = curve
            .recall
            .iter()
            .zip(&curve.precision)
            .filter(|(r, _)| **r >= level)
            .map(|(_, p)| *p)
            .fold(0.0f64, f64::max);
        sum += best;
    }
    sum / 11.0
}

/// All-points AP: area under precision made monotone from the right.
pub fn average_precision_area(curve: &PrCurve) -> f64 {
    let mut envelope = curve.precision.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    for (r, p) in curve.recall.iter().zip(&envelope) {
        area += (r - prev_recall) * p;
        prev_recall = *r;
    }
    area
}

/// Arithmetic mean of the given APs, summed in class order; 0 when empty.
pub fn mean_ap(per_class: &BTreeMap<ClassLabel, f64>) -> f64 {
    if per_class.is_empty() {
        return 0.0;
    }
    per_class.values().sum::<f64>() / per_class.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ApMode {
    #[default]
    #[serde(rename = "11pt")]
    ElevenPoint,
    #[serde(rename = "area")]
    Area,
}

impl ApMode {
    pub fn average_precision(self, curve: &PrCurve) -> f64 {
        match self {
            ApMode::ElevenPoint => average_precision_11pt(curve),
            ApMode::Area => average_precision_area(curve),
        }
    }
}

impl fmt::Display for ApMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApMode::ElevenPoint => "11pt",
            ApMode::Area => "area",
        })
    }
}

impl FromStr for ApMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "11pt" => Ok(ApMode::ElevenPoint),
            "area" => Ok(ApMode::Area),
            other => Err(Error::InvalidParam(format!(
                "AP mode '{other}' is not 11pt or area"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub mode: ApMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            mode: ApMode::ElevenPoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAp {
    pub class: ClassLabel,
    pub ap: f64,
    pub npos: usize,
    pub detections: usize,
    /// Whether this class counts towards mAP.
    pub included: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub iou_threshold: f64,
    pub mode: ApMode,
    pub split: String,
    pub provenance: String,
    pub difficult_rule: String,
    pub empty_class_rule: String,
}

impl ReportMetadata {
    pub fn new(config: EvalConfig, split: &str, provenance: &str) -> Self {
        Self {
            iou_threshold: config.iou_threshold,
            mode: config.mode,
            split: split.to_string(),
            provenance: provenance.to_string(),
            difficult_rule: DIFFICULT_RULE.to_string(),
            empty_class_rule: EMPTY_CLASS_RULE.to_string(),
        }
    }
}

/// Per-class AP in class order, plus mAP over the included classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub per_class: Vec<ClassAp>,
    pub map: f64,
    pub metadata: ReportMetadata,
}

impl ApReport {
    /// Build a report from externally obtained per-class APs, e.g. published values.
    pub fn from_per_class(values: &BTreeMap<ClassLabel, f64>, metadata: ReportMetadata) -> Self {
        let per_class = values
            .iter()
            .map(|(&class, &ap)| ClassAp {
                class,
                ap,
                npos: 0,
                detections: 0,
                included: true,
            })
            .collect();
        Self {
            per_class,
            map: mean_ap(values),
            metadata,
        }
    }

    /// APs of the classes counted in mAP.
    pub fn included(&self) -> BTreeMap<ClassLabel, f64> {
        self.per_class
            .iter()
            .filter(|c| c.included)
            .map(|c| (c.class, c.ap))
            .collect()
    }

    pub fn ap(&self, class: ClassLabel) -> Option<f64> {
        self.per_class
            .iter()
            .find(|c| c.class == class && c.included)
            .map(|c| c.ap)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is always serialisable");
        s.push('\n');
        s
    }
}

/// Evaluate `dets` against `gt`. Classes are evaluated in parallel on the
/// current rayon pool; the result does not depend on the pool size.
pub fn evaluate(dets: &DetectionSet, gt: &Dataset, config: EvalConfig) -> Result<ApReport> {
    if let Some(d) = dets.iter().find(|d| !gt.contains(&d.image_id)) {
        return Err(Error::UnknownImage(d.image_id.clone()));
    }

    let mut by_class: Vec<Vec<&Detection>> = vec![Vec::new(); ClassLabel::COUNT];
    for d in dets.iter() {
        by_class[d.class.index()].push(d);
    }

    let per_class: Vec<ClassAp> = ClassLabel::ALL
        .par_iter()
        .map(|&class| {
            let mut gt_of_class: HashMap<String, Vec<GtObject>> = HashMap::new();
            for img in gt.iter() {
                let objs: Vec<GtObject> = img
                    .objects
                    .iter()
                    .filter(|o| o.class == class)
                    .cloned()
                    .collect();
                if !objs.is_empty() {
                    gt_of_class.insert(img.image_id.clone(), objs);
                }
            }
            let class_dets = &by_class[class.index()];
            let flags = match_detections(
                class_dets.iter().copied(),
                &gt_of_class,
                config.iou_threshold,
            );
            let curve = precision_recall(&flags);
            ClassAp {
                class,
                ap: config.mode.average_precision(&curve),
                npos: flags.npos,
                detections: class_dets.len(),
                included: flags.npos > 0 || !class_dets.is_empty(),
            }
        })
        .collect();

    let included: BTreeMap<ClassLabel, f64> = per_class
        .iter()
        .filter(|c| c.included)
        .map(|c| (c.class, c.ap))
        .collect();

    Ok(ApReport {
        map: mean_ap(&included),
        per_class,
        metadata: ReportMetadata::new(config, gt.split(), &dets.provenance),
    })
}
