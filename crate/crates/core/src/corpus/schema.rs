//! The nine-category annotation schema and label containers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CorpusError;

/// One of the nine annotation categories.
///
/// `Causality` is the primary binary decision; every other category is only
/// meaningful for causal sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Causality,
    Explicit,
    Marked,
    SingleSentence,
    SingleCause,
    SingleEffect,
    EventChain,
    Relationship,
    Temporality,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Causality,
        Category::Explicit,
        Category::Marked,
        Category::SingleSentence,
        Category::SingleCause,
        Category::SingleEffect,
        Category::EventChain,
        Category::Relationship,
        Category::Temporality,
    ];

    pub const BINARY: [Category; 7] = [
        Category::Causality,
        Category::Explicit,
        Category::Marked,
        Category::SingleSentence,
        Category::SingleCause,
        Category::SingleEffect,
        Category::EventChain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Causality => "Causality",
            Category::Explicit => "Explicit",
            Category::Marked => "Marked",
            Category::SingleSentence => "SingleSentence",
            Category::SingleCause => "SingleCause",
            Category::SingleEffect => "SingleEffect",
            Category::EventChain => "EventChain",
            Category::Relationship => "Relationship",
            Category::Temporality => "Temporality",
        }
    }

    pub fn is_binary(self) -> bool {
        !matches!(self, Category::Relationship | Category::Temporality)
    }

    /// True for every category that may only be labeled on causal sentences.
    pub fn is_dependent(self) -> bool {
        self != Category::Causality
    }

    /// Label values in schema order, rendered as they appear in reports.
    pub fn value_names(self) -> &'static [&'static str] {
        match self {
            Category::Relationship => &["cause", "enable", "prevent"],
            Category::Temporality => &["before", "overlap", "during"],
            _ => &["0", "1"],
        }
    }

    pub fn parse_value(self, raw: &str) -> Result<LabelValue, String> {
        match self {
            Category::Relationship => raw.parse().map(LabelValue::Relationship),
            Category::Temporality => raw.parse().map(LabelValue::Temporality),
            _ => match raw {
                "0" => Ok(LabelValue::Binary(false)),
                "1" => Ok(LabelValue::Binary(true)),
                other => Err(format!("expected 0 or 1, got `{other}`")),
            },
        }
    }

    fn accepts(self, value: LabelValue) -> bool {
        matches!(
            (self, value),
            (Category::Relationship, LabelValue::Relationship(_))
                | (Category::Temporality, LabelValue::Temporality(_))
        ) || (self.is_binary() && matches!(value, LabelValue::Binary(_)))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CorpusError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relationship {
    Cause,
    Enable,
    Prevent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Temporality {
    Before,
    Overlap,
    During,
}

impl FromStr for Relationship {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cause" => Ok(Relationship::Cause),
            "enable" => Ok(Relationship::Enable),
            "prevent" => Ok(Relationship::Prevent),
            other => Err(format!("expected cause, enable or prevent, got `{other}`")),
        }
    }
}

impl FromStr for Temporality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "before" => Ok(Temporality::Before),
            "overlap" => Ok(Temporality::Overlap),
            "during" => Ok(Temporality::During),
            other => Err(format!("expected before, overlap or during, got `{other}`")),
        }
    }
}

/// A single label value; the variant must match the category it is stored under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelValue {
    Binary(bool),
    Relationship(Relationship),
    Temporality(Temporality),
}

impl LabelValue {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelValue::Binary(false) => "0",
            LabelValue::Binary(true) => "1",
            LabelValue::Relationship(Relationship::Cause) => "cause",
            LabelValue::Relationship(Relationship::Enable) => "enable",
            LabelValue::Relationship(Relationship::Prevent) => "prevent",
            LabelValue::Temporality(Temporality::Before) => "before",
            LabelValue::Temporality(Temporality::Overlap) => "overlap",
            LabelValue::Temporality(Temporality::During) => "during",
        }
    }
}

impl fmt::Display for LabelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A rule of the label schema that a label set violates.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaViolation {
    #[error("category {category} cannot hold value `{value}`")]
    WrongValueKind { category: Category, value: String },
    #[error("{category} is only labeled on causal sentences, but Causality = 0")]
    DependentOnNonCausal { category: Category },
    #[error("{category} requires Causality = 1, but Causality is not labeled")]
    DependentWithoutCausality { category: Category },
    #[error("Causality label is required")]
    MissingCausality,
    #[error("empty cue phrase")]
    EmptyCuePhrase,
}

/// Partial map from category to label value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(BTreeMap<Category, LabelValue>);

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Convenience constructor for a label set holding only the causality decision.
    pub fn causal(causal: bool) -> Self {
        let mut set = Self::new();
        set.0
            .insert(Category::Causality, LabelValue::Binary(causal));
        set
    }

    pub fn insert(&mut self, category: Category, value: LabelValue) -> Result<(), SchemaViolation> {
        if !category.accepts(value) {
            return Err(SchemaViolation::WrongValueKind {
                category,
                value: value.to_string(),
            });
        }
        self.0.insert(category, value);
        Ok(())
    }

    pub fn with(mut self, category: Category, value: LabelValue) -> Result<Self, SchemaViolation> {
        self.insert(category, value)?;
        Ok(self)
    }

    pub fn get(&self, category: Category) -> Option<LabelValue> {
        self.0.get(&category).copied()
    }

    pub fn causality(&self) -> Option<bool> {
        match self.0.get(&Category::Causality) {
            Some(LabelValue::Binary(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Category, LabelValue)> + '_ {
        self.0.iter().map(|(c, v)| (*c, *v))
    }

    pub fn remove(&mut self, category: Category) -> Option<LabelValue> {
        self.0.remove(&category)
    }

    /// Checks the dependency rules; `complete` additionally requires the
    /// causality decision to be present.
    pub fn validate(&self, complete: bool) -> Result<(), SchemaViolation> {
        for (category, value) in self.iter() {
            if !category.accepts(value) {
                return Err(SchemaViolation::WrongValueKind {
                    category,
                    value: value.to_string(),
                });
            }
        }
        let dependent = self.iter().map(|(c, _)| c).find(|c| c.is_dependent());
        match (self.causality(), dependent) {
            (None, _) if complete => Err(SchemaViolation::MissingCausality),
            (None, Some(category)) => Err(SchemaViolation::DependentWithoutCausality { category }),
            (Some(false), Some(category)) => {
                Err(SchemaViolation::DependentOnNonCausal { category })
            }
            _ => Ok(()),
        }
    }
}

impl FromIterator<(Category, LabelValue)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (Category, LabelValue)>>(iter: I) -> Self {
        LabelSet(iter.into_iter().collect())
    }
}

impl Serialize for LabelSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (category, value) in &self.0 {
            match value {
                LabelValue::Binary(b) => map.serialize_entry(category.name(), &u8::from(*b))?,
                other => map.serialize_entry(category.name(), other.as_str())?,
            }
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for LabelSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LabelSetVisitor;

        impl<'de> Visitor<'de> for LabelSetVisitor {
            type Value = LabelSet;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object keyed by category name")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<LabelSet, A::Error> {
                let mut set = LabelSet::new();
                while let Some((key, raw)) = access.next_entry::<String, serde_json::Value>()? {
                    let category: Category = key.parse().map_err(de::Error::custom)?;
                    let value = label_from_json(category, &raw).map_err(de::Error::custom)?;
                    set.0.insert(category, value);
                }
                Ok(set)
            }
        }

        deserializer.deserialize_map(LabelSetVisitor)
    }
}

/// Parses a JSON label value: binary categories take `0`/`1`, ternary ones a
/// lowercase string.
pub fn label_from_json(category: Category, raw: &serde_json::Value) -> Result<LabelValue, String> {
    match raw {
        serde_json::Value::Number(n) if category.is_binary() => match n.as_u64() {
            Some(0) => Ok(LabelValue::Binary(false)),
            Some(1) => Ok(LabelValue::Binary(true)),
            _ => Err(format!("{category}: expected 0 or 1, got {n}")),
        },
        serde_json::Value::String(s) if !category.is_binary() => category
            .parse_value(s)
            .map_err(|e| format!("{category}: {e}")),
        other => Err(format!("{category}: unexpected value {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dependent_label_on_non_causal_is_rejected() {
        let set = LabelSet::causal(false)
            .with(
                Category::Temporality,
                LabelValue::Temporality(Temporality::Before),
            )
            .unwrap();
        assert_eq!(
            set.validate(true),
            Err(SchemaViolation::DependentOnNonCausal {
                category: Category::Temporality
            })
        );
    }

    #[test]
    fn wrong_value_kind_is_rejected_on_insert() {
        let mut set = LabelSet::new();
        let err = set
            .insert(Category::Relationship, LabelValue::Binary(true))
            .unwrap_err();
        assert!(matches!(err, SchemaViolation::WrongValueKind { .. }));
    }

    #[test]
    fn complete_record_needs_causality() {
        assert_eq!(
            LabelSet::new().validate(true),
            Err(SchemaViolation::MissingCausality)
        );
        assert_eq!(LabelSet::new().validate(false), Ok(()));
    }

    #[test]
    fn json_shape() {
        let set = LabelSet::causal(true)
            .with(
                Category::Relationship,
                LabelValue::Relationship(Relationship::Enable),
            )
            .unwrap();
        let json = serde_json::to_string(&set).unwrap();
        assert_eq!(json, r#"{"Causality":1,"Relationship":"enable"}"#);
        let back: LabelSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
        assert!(serde_json::from_str::<LabelSet>(r#"{"Causality":"1"}"#).is_err());
        assert!(serde_json::from_str::<LabelSet>(r#"{"Relationship":2}"#).is_err());
    }

    #[test]
    fn exactly_nine_categories() {
        assert_eq!(Category::ALL.len(), 9);
        assert_eq!(
            "singlesentence".parse::<Category>().unwrap(),
            Category::SingleSentence
        );
        assert!("Polarity".parse::<Category>().is_err());
    }
}
