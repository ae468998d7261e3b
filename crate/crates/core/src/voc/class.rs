use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// The 20 PASCAL VOC object categories, in devkit (and results table) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Aeroplane,
    Bicycle,
    Bird,
    Boat,
    Bottle,
    Bus,
    Car,
    Cat,
    Chair,
    Cow,
    Diningtable,
    Dog,
    Horse,
    Motorbike,
    Person,
    Pottedplant,
    Sheep,
    Sofa,
    Train,
    Tvmonitor,
}

impl ClassLabel {
    pub const COUNT: usize = 20;

    pub const ALL: [ClassLabel; 20] = [
        ClassLabel::Aeroplane,
        ClassLabel::Bicycle,
        ClassLabel::Bird,
        ClassLabel::Boat,
        ClassLabel::Bottle,
        ClassLabel::Bus,
        ClassLabel::Car,
        ClassLabel::Cat,
        ClassLabel::Chair,
        ClassLabel::Cow,
        ClassLabel::Diningtable,
        ClassLabel::Dog,
        ClassLabel::Horse,
        ClassLabel::Motorbike,
        ClassLabel::Person,
        ClassLabel::Pottedplant,
        ClassLabel::Sheep,
        ClassLabel::Sofa,
        ClassLabel::Train,
        ClassLabel::Tvmonitor,
    ];

    /// Position in [`ClassLabel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Aeroplane => "aeroplane",
            ClassLabel::Bicycle => "bicycle",
            ClassLabel::Bird => "bird",
            ClassLabel::Boat => "boat",
            ClassLabel::Bottle => "bottle",
            ClassLabel::Bus => "bus",
            ClassLabel::Car => "car",
            ClassLabel::Cat => "cat",
            ClassLabel::Chair => "chair",
            ClassLabel::Cow => "cow",
            ClassLabel::Diningtable => "diningtable",
            ClassLabel::Dog => "dog",
            ClassLabel::Horse => "horse",
            ClassLabel::Motorbike => "motorbike",
            ClassLabel::Person => "person",
            ClassLabel::Pottedplant => "pottedplant",
            ClassLabel::Sheep => "sheep",
            ClassLabel::Sofa => "sofa",
            ClassLabel::Train => "train",
            ClassLabel::Tvmonitor => "tvmonitor",
        }
    }

    /// Short column header used in results tables.
    pub fn short_name(self) -> &'static str {
        match self {
            ClassLabel::Aeroplane => "aero",
            ClassLabel::Bicycle => "bike",
            ClassLabel::Diningtable => "table",
            ClassLabel::Motorbike => "mbike",
            ClassLabel::Pottedplant => "plant",
            ClassLabel::Tvmonitor => "tv",
            other => other.name(),
        }
    }

    pub fn from_short_name(alias: &str) -> Option<ClassLabel> {
        ClassLabel::ALL
            .into_iter()
            .find(|c| c.short_name() == alias)
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses canonical names only; the vocabulary is closed.
impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassLabel::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn twenty_distinct_labels() {
        let names: HashSet<_> = ClassLabel::ALL.iter().map(|c| c.name()).collect();
        let shorts: HashSet<_> = ClassLabel::ALL.iter().map(|c| c.short_name()).collect();
        assert_eq!(names.len(), 20);
        assert_eq!(shorts.len(), 20);
        for (i, c) in ClassLabel::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn aliases_map_both_ways() {
        for c in ClassLabel::ALL {
            assert_eq!(ClassLabel::from_short_name(c.short_name()), Some(c));
            assert_eq!(c.name().parse::<ClassLabel>().unwrap(), c);
        }
        assert_eq!(
            ClassLabel::from_short_name("tv"),
            Some(ClassLabel::Tvmonitor)
        );
        assert_eq!(ClassLabel::from_short_name("tvmonitor"), None);
    }

    #[test]
    fn unknown_name_is_error() {
        assert!(
            matches!("zebra".parse::<ClassLabel>(), Err(Error::UnknownClass(n)) if n == "zebra")
        );
        // aliases are not canonical names
        assert!("aero".parse::<ClassLabel>().is_err());
        assert!("Dog".parse::<ClassLabel>().is_err());
    }

    #[test]
    fn serde_uses_canonical_name() {
        assert_eq!(
            serde_json::to_string(&ClassLabel::Diningtable).unwrap(),
            "\"diningtable\""
        );
        let c: ClassLabel = serde_json::from_str("\"pottedplant\"").unwrap();
        assert_eq!(c, ClassLabel::Pottedplant);
    }
}
