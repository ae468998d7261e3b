use roxmltree::{Document, Node};

use super::{BoundingBox, ClassLabel, GtObject, ImageRecord, ImageSize};
use crate::error::{Error, Result};

/// Parse one VOC annotation document.
///
/// The image id is the `<filename>` with its last extension removed. Objects
/// keep document order. A missing `<difficult>` element reads as not difficult.
pub fn parse_annotation(xml_text: &str) -> Result<ImageRecord> {
    let doc = Document::parse(xml_text)
        .map_err(|e| Error::MalformedAnnotation(format!("not well-formed XML: {e}")))?;
    let root = doc.root_element();
    if root.tag_name().name() != "annotation" {
        return Err(Error::MalformedAnnotation(format!(
            "root element is <{}>, expected <annotation>",
            root.tag_name().name()
        )));
    }

    let filename = child_text(root, "filename")
        .ok_or_else(|| Error::MalformedAnnotation("missing <filename>".into()))?;
    let image_id = match filename.rsplit_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem.to_string(),
        _ => filename.to_string(),
    };

    let size = match child(root, "size") {
        Some(size) => Some(ImageSize {
            width: parse_int(size, "width")?,
            height: parse_int(size, "height")?,
        }),
        None => None,
    };

    let objects = root
        .children()
        .filter(|n| n.has_tag_name("object"))
        .map(parse_object)
        .collect::<Result<Vec<_>>>()?;

    Ok(ImageRecord {
        image_id,
        size,
        objects,
    })
}

fn parse_object(node: Node) -> Result<GtObject> {
    let name = child_text(node, "name")
        .ok_or_else(|| Error::MalformedAnnotation("object without <name>".into()))?;
    let class: ClassLabel = name.parse()?;

    let difficult = match child_text(node, "difficult") {
        None => false,
        Some("0") => false,
        Some("1") => true,
        Some(other) => {
            return Err(Error::MalformedAnnotation(format!(
                "difficult flag '{other}' is not 0 or 1"
            )))
        }
    };

    let bndbox = child(node, "bndbox")
        .ok_or_else(|| Error::MalformedAnnotation(format!("{name} object without <bndbox>")))?;
    let bbox = BoundingBox::new(
        parse_int(bndbox, "xmin")?,
        parse_int(bndbox, "ymin")?,
        parse_int(bndbox, "xmax")?,
        parse_int(bndbox, "ymax")?,
    )?;

    Ok(GtObject {
        class,
        bbox,
        difficult,
    })
}

fn child<'a, 'i>(node: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(tag))
}

fn child_text<'a>(node: Node<'a, '_>, tag: &str) -> Option<&'a str> {
    child(node, tag).map(|n| n.text().unwrap_or("").trim())
}

fn parse_int<T: std::str::FromStr>(node: Node, tag: &str) -> Result<T> {
    let text = child_text(node, tag)
        .ok_or_else(|| Error::MalformedAnnotation(format!("missing <{tag}>")))?;
    text.parse().map_err(|_| {
        Error::MalformedAnnotation(format!("<{tag}> value '{text}' is not an integer"))
    })
}
