//! Attribute taxonomy: named groups of classes, each routed to one of the
//! two architectural channels.

use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;

/// Which convolution + pooling channel a group's classifier reads from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// Behavior-relevant attributes (motion, pose).
    MotionPose,
    /// Appearance attributes tied to identity.
    IdRelevant,
}

impl Channel {
    pub fn tag(self) -> &'static str {
        match self {
            Channel::MotionPose => "mp",
            Channel::IdRelevant => "id",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "mp" => Some(Channel::MotionPose),
            "id" => Some(Channel::IdRelevant),
            _ => None,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// One categorical attribute with its ordered class list.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeGroup {
    pub name: String,
    pub classes: Vec<String>,
    pub channel: Channel,
}

impl AttributeGroup {
    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }
}

/// Ordered list of attribute groups.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeSchema {
    groups: Vec<AttributeGroup>,
}

impl AttributeSchema {
    pub fn new(groups: Vec<AttributeGroup>) -> Result<Self> {
        let schema = AttributeSchema { groups };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::Invalid("schema has no attribute groups".into()));
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.classes.len() < 2 {
                return Err(Error::Invalid(format!(
                    "group '{}' has {} classes, need at least 2",
                    g.name,
                    g.classes.len()
                )));
            }
            for (j, c) in g.classes.iter().enumerate() {
                if g.classes[..j].contains(c) {
                    return Err(Error::Invalid(format!(
                        "group '{}' repeats class '{}'",
                        g.name, c
                    )));
                }
            }
            if self.groups[..i].iter().any(|o| o.name == g.name) {
                return Err(Error::Invalid(format!("duplicate group name '{}'", g.name)));
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> &[AttributeGroup] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn group(&self, idx: usize) -> &AttributeGroup {
        &self.groups[idx]
    }

    pub fn total_classes(&self) -> usize {
        self.groups.iter().map(|g| g.classes.len()).sum()
    }

    pub fn group_index(&self, name: &str) -> Option<usize> {
        self.groups.iter().position(|g| g.name == name)
    }

    /// Canonical text form; `parse` of this round-trips exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str(&g.name);
            out.push('|');
            out.push_str(g.channel.tag());
            out.push('|');
            out.push_str(&g.classes.join(","));
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the canonical serialization; checkpoints pin this.
    pub fn digest(&self) -> [u8; 32] {
        let hash = Sha256::digest(self.serialize().as_bytes());
        let mut out = [0u8; 32];
        out.copy_from_slice(&hash);
        out
    }

    /// Parse the line-oriented schema format:
    /// `group_name|channel_tag|class1,class2,...` with `#` comments.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut groups: Vec<AttributeGroup> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('|').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("expected 3 '|'-separated fields, got {}", fields.len()),
                ));
            }
            let name = fields[0].trim();
            if name.is_empty() {
                return Err(Error::parse(origin, lineno, "empty group name"));
            }
            if groups.iter().any(|g| g.name == name) {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("duplicate group name '{name}'"),
                ));
            }
            let channel = Channel::from_tag(fields[1].trim()).ok_or_else(|| {
                Error::parse(
                    origin,
                    lineno,
                    format!("unknown channel tag '{}', expected 'mp' or 'id'", fields[1].trim()),
                )
            })?;
            let mut classes = Vec::new();
            for class in fields[2].split(',') {
                let class = class.trim();
                if class.is_empty() {
                    return Err(Error::parse(origin, lineno, "empty class name"));
                }
                if class == "?" {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        "'?' is reserved for unknown labels",
                    ));
                }
                if classes.iter().any(|c| c == class) {
                    return Err(Error::parse(
                        origin,
                        lineno,
                        format!("duplicate class '{class}' in group '{name}'"),
                    ));
                }
                classes.push(class.to_string());
            }
            if classes.len() < 2 {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!("group '{name}' needs at least 2 classes"),
                ));
            }
            groups.push(AttributeGroup {
                name: name.to_string(),
                classes,
                channel,
            });
        }
        if groups.is_empty() {
            return Err(Error::parse(origin, 0, "no attribute groups defined"));
        }
        Ok(AttributeSchema { groups })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Bundled 52-class schema for the MARS annotation set.
    pub fn mars() -> Self {
        Self::parse(MARS_SCHEMA, Path::new("<bundled mars>")).expect("bundled schema")
    }

    /// Bundled 12-group schema for the DukeMTMC-VideoReID annotation set.
    /// Class lists for boots and shoes color are binary placeholders;
    /// supply an authoritative schema file when one exists.
    pub fn duke() -> Self {
        Self::parse(DUKE_SCHEMA, Path::new("<bundled duke>")).expect("bundled schema")
    }
}

pub const MARS_SCHEMA: &str = "\
# MARS video attribute schema: 14 groups, 52 classes.
motion|mp|walking,standing,running,biking,various
pose|mp|frontal,lateral-frontal,lateral,lateral-back,back,various
gender|id|male,female
hair|id|long,short
top_length|id|long,short
bottom_length|id|long,short
bottom_type|id|pants,dress
hat|id|yes,no
shoulder_bag|id|yes,no
backpack|id|yes,no
hand_bag|id|yes,no
bottom_color|id|black,white,red,purple,yellow,gray,blue,green,complex
top_color|id|black,white,pink,purple,yellow,gray,blue,green,brown,complex
age|id|child,teenager,adult,old
";

pub const DUKE_SCHEMA: &str = "\
# DukeMTMC-VideoReID attribute schema: 12 groups.
motion|mp|walking,standing,running,biking,various
pose|mp|frontal,lateral-frontal,lateral,lateral-back,back,various
backpack|id|yes,no
shoulder_bag|id|yes,no
hand_bag|id|yes,no
boots|id|yes,no
gender|id|male,female
hat|id|yes,no
shoes_color|id|dark,light
top_length|id|long,short
bottom_color|id|black,white,red,purple,yellow,gray,blue,green,complex
top_color|id|black,white,pink,purple,yellow,gray,blue,green,brown,complex
";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_mars_counts() {
        let mars = AttributeSchema::mars();
        assert_eq!(mars.len(), 14);
        assert_eq!(mars.total_classes(), 52);
        let counts: Vec<usize> = mars.groups().iter().map(|g| g.classes.len()).collect();
        assert_eq!(counts, vec![5, 6, 2, 2, 2, 2, 2, 2, 2, 2, 2, 9, 10, 4]);
    }

    #[test]
    fn bundled_mars_channels() {
        let mars = AttributeSchema::mars();
        for g in mars.groups() {
            let want = if g.name == "motion" || g.name == "pose" {
                Channel::MotionPose
            } else {
                Channel::IdRelevant
            };
            assert_eq!(g.channel, want, "{}", g.name);
        }
    }

    #[test]
    fn bundled_duke_groups() {
        let duke = AttributeSchema::duke();
        assert_eq!(duke.len(), 12);
        let names: Vec<&str> = duke.groups().iter().map(|g| g.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "motion",
                "pose",
                "backpack",
                "shoulder_bag",
                "hand_bag",
                "boots",
                "gender",
                "hat",
                "shoes_color",
                "top_length",
                "bottom_color",
                "top_color",
            ]
        );
    }

    #[test]
    fn mars_purple_is_fourth_top_color() {
        let mars = AttributeSchema::mars();
        let g = &mars.groups()[mars.group_index("top_color").unwrap()];
        assert_eq!(g.classes.len(), 10);
        assert_eq!(g.class_index("purple"), Some(3));
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(AttributeSchema::parse("", Path::new("x")).is_err());
        assert!(AttributeSchema::parse("# only comments\n", Path::new("x")).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "good|mp|a,b\nbad|xx|a,b\n";
        let err = AttributeSchema::parse(bad, Path::new("s.txt")).unwrap_err();
        assert!(err.to_string().contains("s.txt:2"), "{err}");

        let dup = "g|mp|a,b\ng|id|c,d\n";
        let err = AttributeSchema::parse(dup, Path::new("s.txt")).unwrap_err();
        assert!(err.to_string().contains(":2"), "{err}");

        let single = "g|mp|only\n";
        assert!(AttributeSchema::parse(single, Path::new("s.txt")).is_err());

        let dup_class = "g|mp|a,a\n";
        assert!(AttributeSchema::parse(dup_class, Path::new("s.txt")).is_err());
    }

    #[test]
    fn serialize_parse_round_trip() {
        for schema in [AttributeSchema::mars(), AttributeSchema::duke()] {
            let text = schema.serialize();
            let back = AttributeSchema::parse(&text, Path::new("rt")).unwrap();
            assert_eq!(back, schema);
            assert_eq!(back.digest(), schema.digest());
        }
    }

    #[test]
    fn digests_differ_across_schemas() {
        assert_ne!(AttributeSchema::mars().digest(), AttributeSchema::duke().digest());
    }
}
