use serde::{Deserialize, Serialize};

use crate::dataset::{Column, Dataset};

/// Forest-side encoding of one attribute. Continuous and ordinal attributes
/// split on thresholds; nominal ones split one-vs-rest on a category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureColumn {
    Numeric(Vec<f64>),
    Nominal { codes: Vec<u32>, n_categories: u32 },
}

impl FeatureColumn {
    pub fn is_constant_on(&self, ids: &[u32]) -> bool {
        let Some(&first) = ids.first() else { return true };
        match self {
            FeatureColumn::Numeric(values) => {
                let v0 = values[first as usize];
                ids.iter().all(|&i| values[i as usize] == v0)
            }
            FeatureColumn::Nominal { codes, .. } => {
                let c0 = codes[first as usize];
                ids.iter().all(|&i| codes[i as usize] == c0)
            }
        }
    }
}

pub(crate) fn encode_features(d: &Dataset) -> Vec<FeatureColumn> {
    d.schema()
        .attributes
        .iter()
        .zip(d.columns())
        .map(|(attr, column)| match column {
            Column::Continuous(values) => FeatureColumn::Numeric(values.clone()),
            Column::Categorical(codes) if attr.ordinal => {
                FeatureColumn::Numeric(codes.iter().map(|&c| c as f64).collect())
            }
            Column::Categorical(codes) => FeatureColumn::Nominal {
                codes: codes.clone(),
                n_categories: attr.categories().len() as u32,
            },
        })
        .collect()
}

/// The training sample a forest owns: features and labels by position, and
/// the dataset row id of each position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingData {
    pub features: Vec<FeatureColumn>,
    pub labels: Vec<u8>,
    pub row_ids: Vec<u32>,
}

impl TrainingData {
    pub fn from_dataset(d: &Dataset) -> Self {
        Self {
            features: encode_features(d),
            labels: d.labels().to_vec(),
            row_ids: d.row_ids().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
