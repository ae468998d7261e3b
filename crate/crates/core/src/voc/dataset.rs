use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{parse_annotation, ClassLabel, ImageRecord};
use crate::error::{Error, Result};

/// An ordered split of annotated images. Iteration order is the split-file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    split: String,
    images: Vec<ImageRecord>,
    index: HashMap<String, usize>,
}

impl Dataset {
    /// Fails with [`Error::InvalidParam`] on a duplicate image id.
    pub fn new(split: impl Into<String>, images: Vec<ImageRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(images.len());
        for (i, img) in images.iter().enumerate() {
            if index.insert(img.image_id.clone(), i).is_some() {
                return Err(Error::InvalidParam(format!(
                    "duplicate image id '{}' in dataset",
                    img.image_id
                )));
            }
        }
        Ok(Self {
            split: split.into(),
            images,
            index,
        })
    }

    pub fn split(&self) -> &str {
        &self.split
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageRecord> {
        self.index.get(image_id).map(|&i| &self.images[i])
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.index.contains_key(image_id)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ImageRecord> {
        self.images.iter()
    }

    pub fn object_count(&self) -> usize {
        self.images.iter().map(|i| i.objects.len()).sum()
    }
}

/// Parse an image-set split file.
///
/// Accepts the plain format (`id` per line) and the per-class format
/// (`id flag` with flag in {-1, 0, 1}); the latter keeps only `1` entries.
pub fn parse_imageset(text: &str) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut fields = line.split_whitespace();
        let Some(id) = fields.next() else {
            continue;
        };
        match (fields.next(), fields.next()) {
            (None, _) => ids.push(id.to_string()),
            (Some(flag), None) => match flag {
                "1" | "+1" => ids.push(id.to_string()),
                "0" | "-1" => {}
                other => {
                    return Err(Error::MalformedLine {
                        line: line_no,
                        message: format!("flag '{other}' is not one of -1, 0, 1"),
                    })
                }
            },
            (Some(_), Some(_)) => {
                return Err(Error::MalformedLine {
                    line: line_no,
                    message: "more than two fields".into(),
                })
            }
        }
    }
    Ok(ids)
}

/// Load every image listed in `split_file` from `annotation_dir/<id>.xml`.
///
/// Files are parsed in parallel; the result is in split order and each record's
/// `image_id` is the id from the split file. The split name is the file stem.
pub fn load_dataset(annotation_dir: &Path, split_file: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(split_file).map_err(|e| Error::io(split_file, e))?;
    let ids = parse_imageset(&text)?;
    let split = split_file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();

    let images = ids
        .par_iter()
        .map(|id| load_record(annotation_dir, id))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(split, images)
}

/// Load `<root>/ImageSets/Main/<split>.txt` against `<root>/Annotations`.
pub fn load_devkit_split(root: &Path, split: &str) -> Result<Dataset> {
    load_dataset(
        &root.join("Annotations"),
        &root
            .join("ImageSets")
            .join("Main")
            .join(format!("{split}.txt")),
    )
}

fn load_record(annotation_dir: &Path, id: &str) -> Result<ImageRecord> {
    let path = annotation_dir.join(format!("{id}.xml"));
    let text = match fs::read_to_string(&path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::MissingAnnotation {
                id: id.to_string(),
                path,
            })
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut record = parse_annotation(&text).map_err(|e| Error::InAnnotation {
        id: id.to_string(),
        source: Box::new(e),
    })?;
    record.image_id = id.to_string();
    Ok(record)
}

/// Image-level labels: for each image, the classes of all its objects.
pub fn image_level_labels(dataset: &Dataset) -> HashMap<String, BTreeSet<ClassLabel>> {
    dataset
        .iter()
        .map(|img| (img.image_id.clone(), img.label_set()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voc::{BoundingBox, GtObject};

    fn obj(class: ClassLabel) -> GtObject {
        GtObject {
            class,
            bbox: BoundingBox::new(1, 1, 10, 10).unwrap(),
            difficult: false,
        }
    }

    fn record(id: &str, classes: &[ClassLabel]) -> ImageRecord {
        ImageRecord {
            image_id: id.into(),
            size: None,
            objects: classes.iter().copied().map(obj).collect(),
        }
    }

    #[test]
    fn imageset_plain() {
        assert_eq!(
            parse_imageset("000005\n000007\n").unwrap(),
            vec!["000005", "000007"]
        );
    }

    #[test]
    fn imageset_per_class_flags() {
        assert_eq!(
            parse_imageset("000005  1\n000007 -1\n").unwrap(),
            vec!["000005"]
        );
        assert_eq!(
            parse_imageset("a 0\nb 1\n\n  \nc\n").unwrap(),
            vec!["b", "c"]
        );
    }

    #[test]
    fn imageset_empty() {
        assert!(parse_imageset("").unwrap().is_empty());
    }

    #[test]
    fn imageset_errors_carry_line() {
        let err = parse_imageset("a\nb 1 2\n").unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 2, .. }));
        let err = parse_imageset("a 2\n").unwrap_err();
        assert_eq!(err.line(), Some(1));
    }

    #[test]
    fn labels_per_image() {
        let ds = Dataset::new(
            "train",
            vec![
                record("a", &[ClassLabel::Dog, ClassLabel::Dog, ClassLabel::Person]),
                record("b", &[]),
            ],
        )
        .unwrap();
        let labels = image_level_labels(&ds);
        assert_eq!(labels.len(), 2);
        assert_eq!(
            labels["a"].iter().copied().collect::<Vec<_>>(),
            vec![ClassLabel::Dog, ClassLabel::Person]
        );
        assert!(labels["b"].is_empty());
    }

    #[test]
    fn difficult_objects_count_as_present() {
        let mut r = record("a", &[ClassLabel::Cow]);
        r.objects[0].difficult = true;
        let ds = Dataset::new("val", vec![r]).unwrap();
        assert!(image_level_labels(&ds)["a"].contains(&ClassLabel::Cow));
    }

    #[test]
    fn duplicate_ids_rejected() {
        assert!(Dataset::new("x", vec![record("a", &[]), record("a", &[])]).is_err());
    }
}
