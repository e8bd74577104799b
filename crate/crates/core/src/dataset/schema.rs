use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    Categorical,
    Continuous,
}

/// One column of the schema sidecar.
///
/// Categorical attributes carry their category labels in `domain`; when the
/// sidecar omits it, the domain is inferred at load time (sorted labels).
/// Continuous attributes may carry an inclusive numeric `range`. Attributes
/// produced by quantile binning are categorical, `ordinal`, and keep the
/// cut-points they were binned with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ordinal: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut_points: Option<Vec<f64>>,
}

impl AttributeSpec {
    pub fn categorical(name: impl Into<String>, domain: Vec<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Categorical,
            domain: Some(domain),
            range: None,
            ordinal: false,
            cut_points: None,
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: AttributeKind::Continuous,
            domain: None,
            range: None,
            ordinal: false,
            cut_points: None,
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == AttributeKind::Categorical
    }

    /// Category labels; empty for continuous attributes.
    pub fn categories(&self) -> &[String] {
        self.domain.as_deref().unwrap_or(&[])
    }

    pub fn category_index(&self, label: &str) -> Option<u32> {
        self.categories()
            .iter()
            .position(|c| c == label)
            .map(|i| i as u32)
    }

    /// Whether `<`, `<=`, `>=`, `>` are meaningful on this attribute.
    pub fn is_ordered(&self) -> bool {
        !self.is_categorical() || self.ordinal
    }
}

/// Column layout plus the explicit sensitive-group and label mappings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub attributes: Vec<AttributeSpec>,
    pub sensitive_attribute: String,
    /// Value of the sensitive attribute that maps to the privileged group (S = 1).
    pub privileged_value: String,
    /// Label value that maps to the positive outcome (Y = 1).
    pub positive_label: String,
    pub label_column: String,
    /// Text of the other label value, recorded at load time when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_label: Option<String>,
}

impl Schema {
    pub fn from_path(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|e| DatasetError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let schema: Schema = serde_json::from_str(&text).map_err(|e| DatasetError::SchemaParse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::new();
        for attr in &self.attributes {
            if !seen.insert(attr.name.as_str()) {
                return Err(DatasetError::DuplicateAttribute(attr.name.clone()));
            }
            if let Some(domain) = &attr.domain {
                let mut labels = HashSet::new();
                for label in domain {
                    if !labels.insert(label.as_str()) {
                        return Err(DatasetError::InvalidSchema(format!(
                            "attribute `{}` lists category `{label}` twice",
                            attr.name
                        )));
                    }
                }
            }
        }
        if seen.contains(self.label_column.as_str()) {
            return Err(DatasetError::InvalidSchema(format!(
                "label column `{}` is also listed as an attribute",
                self.label_column
            )));
        }
        let sensitive = self
            .attribute(&self.sensitive_attribute)
            .ok_or_else(|| DatasetError::SensitiveAttributeMissing(self.sensitive_attribute.clone()))?;
        if !sensitive.is_categorical() {
            return Err(DatasetError::InvalidSchema(format!(
                "sensitive attribute `{}` must be categorical",
                sensitive.name
            )));
        }
        if let Some(domain) = &sensitive.domain {
            if !domain.contains(&self.privileged_value) {
                return Err(DatasetError::InvalidSchema(format!(
                    "privileged value `{}` is not in the domain of `{}`",
                    self.privileged_value, sensitive.name
                )));
            }
        }
        Ok(())
    }

    pub fn attribute(&self, name: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn sensitive_index(&self) -> usize {
        self.attribute_index(&self.sensitive_attribute)
            .expect("validated schema has its sensitive attribute")
    }

    /// Whether two schemas describe the same feature space (names, kinds, domains).
    pub fn same_features(&self, other: &Schema) -> bool {
        self.attributes.len() == other.attributes.len()
            && self.attributes.iter().zip(&other.attributes).all(|(a, b)| {
                a.name == b.name
                    && a.kind == b.kind
                    && a.ordinal == b.ordinal
                    && (!a.is_categorical() || a.domain == b.domain)
            })
    }
}
