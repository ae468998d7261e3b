//! Pseudo-strong box labels from a black-box weak detector, plus the
//! PASCAL VOC 2007 detection evaluation protocol.
//!
//! The pipeline is: read a detection dump, keep detections above a score
//! threshold, drop detections whose class is absent from the image-level
//! labels, optionally suppress duplicates, and export the survivors as VOC
//! annotations. [`metrics::evaluate`] scores any detection set against a VOC
//! dataset, and [`simulator`] produces seeded synthetic dumps from ground truth.

pub mod detections;
pub mod error;
pub mod metrics;
pub mod pseudo_labels;
pub mod simulator;
pub mod voc;

pub use detections::{read_dump, threshold_filter, write_dump, Detection, DetectionSet};
pub use error::{Error, Result};
pub use metrics::{evaluate, iou, ApMode, ApReport, EvalConfig};
pub use pseudo_labels::{
    build_pseudo_labels, class_consistency_filter, export_voc, nms, FilterParams, PseudoLabelSet,
};
pub use simulator::{corrupt_dataset, perturb_box, NoiseParams, ScoreRange, Seed};

pub use voc::{
    image_level_labels, load_dataset, load_devkit_split, parse_annotation, parse_imageset,
    BoundingBox, ClassLabel, Dataset, GtObject, ImageRecord, ImageSize,
};

/// Round half away from zero to `decimals` places.
///
/// Representation noise below 1e-9 of the last kept digit is removed first, so
/// that a mean such as `39.455` stored as `39.454999999...` still rounds up.
pub fn round_half_away(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    let scaled = value * scale;
    let cleaned = (scaled * 1e9).round() / 1e9;
    cleaned.round() / scale
}
