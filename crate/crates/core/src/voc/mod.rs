//! PASCAL VOC datasets: class vocabulary, boxes, annotation documents and
//! image-set split files.

mod annotation;
mod class;
mod dataset;

pub use annotation::parse_annotation;
pub use class::ClassLabel;
pub use dataset::{image_level_labels, load_dataset, load_devkit_split, parse_imageset, Dataset};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box in inclusive integer pixel coordinates (VOC devkit
/// convention). Coordinates are stored exactly as read; no re-basing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i32; 4]", into = "[i32; 4]")]
pub struct BoundingBox {
    xmin: i32,
    ymin: i32,
    xmax: i32,
    ymax: i32,
}

impl BoundingBox {
    pub fn new(xmin: i32, ymin: i32, xmax: i32, ymax: i32) -> Result<Self> {
        if xmin > xmax || ymin > ymax {
            return Err(Error::InvalidBox {
                xmin,
                ymin,
                xmax,
                ymax,
            });
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    pub fn xmin(&self) -> i32 {
        self.xmin
    }

    pub fn ymin(&self) -> i32 {
        self.ymin
    }

    pub fn xmax(&self) -> i32 {
        self.xmax
    }

    pub fn ymax(&self) -> i32 {
        self.ymax
    }

    pub fn width(&self) -> i64 {
        self.xmax as i64 - self.xmin as i64 + 1
    }

    pub fn height(&self) -> i64 {
        self.ymax as i64 - self.ymin as i64 + 1
    }

    /// Pixel count, `(xmax - xmin + 1) * (ymax - ymin + 1)`.
    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }

    pub fn to_array(self) -> [i32; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }
}

impl TryFrom<[i32; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(v: [i32; 4]) -> Result<Self> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [i32; 4] {
    fn from(b: BoundingBox) -> Self {
        b.to_array()
    }
}

/// Image extent in pixels, as recorded in the annotation's `<size>` element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    /// Modal PASCAL VOC image size, used when an annotation carries none.
    pub const VOC_DEFAULT: ImageSize = ImageSize {
        width: 500,
        height: 375,
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtObject {
    pub class: ClassLabel,
    pub bbox: BoundingBox,
    pub difficult: bool,
}

/// One image: identity, optional size, and ground-truth objects in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub size: Option<ImageSize>,
    pub objects: Vec<GtObject>,
}

impl ImageRecord {
    /// Classes present among the objects, difficult ones included.
    pub fn label_set(&self) -> BTreeSet<ClassLabel> {
        self.objects.iter().map(|o| o.class).collect()
    }
}
