//! Removal-enabled random forest.
//!
//! Every tree is trained on the full sample. The top `d_rand` levels split
//! on a randomly drawn attribute and threshold; deeper nodes choose the best
//! Gini split among a few cached candidates per sampled attribute, and keep
//! the left-side label counts of every candidate. Leaves keep the training
//! positions that reach them. Deleting instances walks their root-to-leaf
//! paths, decrements the cached counts, and rebuilds a subtree only where
//! the cached statistics show the chosen split is no longer the one a fresh
//! build would choose.

mod audit;
mod data;
mod tree;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, Schema};

pub use audit::AuditDiscrepancy;
pub use data::{FeatureColumn, TrainingData};
pub use tree::{Candidate, DeleteReport, LeafNode, Node, SideCounts, Split, SplitKind, SplitNode, SplitTest};

use data::encode_features;
use tree::{BuildConfig, Builder};

pub const FORMAT_NAME: &str = "biasslice-forest";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("invalid forest parameters: {0}")]
    InvalidParams(String),
    #[error("training data is empty")]
    EmptyTraining,
    #[error("dataset schema does not match the training schema")]
    SchemaMismatch,
    #[error("unknown training row id {0}")]
    UnknownId(u32),
    #[error("training row id {0} is already deleted")]
    AlreadyDeleted(u32),
    #[error("refusing to delete every remaining training row")]
    WouldDeleteAll,
    #[error("forest serialization: {0}")]
    Serialization(String),
    #[error("unsupported forest format `{format}` version {version}")]
    UnsupportedFormat { format: String, version: u32 },
    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Number of attributes sampled at each greedy node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSample {
    /// `max(1, floor(sqrt(p)))`
    Sqrt,
    All,
    /// `max(1, round(fraction * p))`
    Fraction(f64),
}

impl FeatureSample {
    pub fn count(&self, p: usize) -> usize {
        let k = match *self {
            FeatureSample::Sqrt => (p as f64).sqrt().floor() as usize,
            FeatureSample::All => p,
            FeatureSample::Fraction(f) => (f * p as f64).round() as usize,
        };
        k.clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Levels `0..d_rand` use random splits.
    pub d_rand: usize,
    /// Candidate thresholds (or categories) cached per sampled attribute.
    pub k_thresholds: usize,
    pub feature_sample: FeatureSample,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            d_rand: 2,
            k_thresholds: 5,
            feature_sample: FeatureSample::Sqrt,
            min_leaf: 1,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), ForestError> {
        let bad = |m: String| Err(ForestError::InvalidParams(m));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1".into());
        }
        if self.d_rand > self.max_depth {
            return bad(format!("d_rand ({}) exceeds max_depth ({})", self.d_rand, self.max_depth));
        }
        if self.k_thresholds == 0 {
            return bad("k_thresholds must be at least 1".into());
        }
        if self.min_leaf == 0 {
            return bad("min_leaf must be at least 1".into());
        }
        if let FeatureSample::Fraction(f) = self.feature_sample {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("feature fraction must lie in (0, 1], got {f}"));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// One tree plus the generator its future random draws come from. The draws
/// already made are recorded in the nodes (random splits and sampled
/// candidates), so cloning a tree replays it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DareTree {
    pub root: Node,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub labels: Vec<u8>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DareForest {
    params: ForestParams,
    schema: Schema,
    data: Arc<TrainingData>,
    trees: Vec<DareTree>,
    /// Training-row registry: liveness by position.
    live: Vec<bool>,
    n_live: usize,
    /// `(row id, position)` sorted by row id.
    id_index: Vec<(u32, u32)>,
}

/// A frozen copy of a forest; restoring yields an independent forest.
#[derive(Debug, Clone)]
pub struct ForestSnapshot(DareForest);

impl ForestSnapshot {
    pub fn restore(&self) -> DareForest {
        self.0.clone()
    }
}

#[derive(Serialize, Deserialize)]
struct ForestFile {
    format: String,
    version: u32,
    forest: DareForest,
}

impl DareForest {
    pub fn fit(d: &Dataset, params: &ForestParams) -> Result<Self, ForestError> {
        params.validate()?;
        if d.n_rows() == 0 {
            return Err(ForestError::EmptyTraining);
        }
        let positives = d.labels().iter().filter(|&&y| y == 1).count();
        if positives == 0 || positives == d.n_rows() {
            log::warn!("training labels are single-class; the forest predicts a constant");
        }
        let data = Arc::new(TrainingData::from_dataset(d));
        let n = data.len();
        let builder = Builder {
            data: &data,
            cfg: build_config(params, data.features.len()),
        };
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(t as u64);
                let root = builder.build((0..n as u32).collect(), 0, &mut rng);
                DareTree { root, rng }
            })
            .collect();
        let mut id_index: Vec<(u32, u32)> = data.row_ids.iter().enumerate().map(|(p, &id)| (id, p as u32)).collect();
        id_index.sort_unstable();
        Ok(Self {
            params: params.clone(),
            schema: d.schema().clone(),
            data,
            trees,
            live: vec![true; n],
            n_live: n,
            id_index,
        })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn trees(&self) -> &[DareTree] {
        &self.trees
    }

    pub fn n_live(&self) -> usize {
        self.n_live
    }

    /// Row ids still in the training sample, ascending.
    pub fn live_ids(&self) -> Vec<u32> {
        self.id_index
            .iter()
            .filter(|(_, p)| self.live[*p as usize])
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn is_live(&self, id: u32) -> bool {
        self.position(id).map(|p| self.live[p as usize]).unwrap_or(false)
    }

    fn position(&self, id: u32) -> Option<u32> {
        self.id_index
            .binary_search_by_key(&id, |(i, _)| *i)
            .ok()
            .map(|k| self.id_index[k].1)
    }

    /// Mean leaf positive fraction over trees; label 1 iff probability >= 0.5.
    pub fn predict(&self, d: &Dataset) -> Result<Predictions, ForestError> {
        if !self.schema.same_features(d.schema()) {
            return Err(ForestError::SchemaMismatch);
        }
        let features = encode_features(d);
        let n_trees = self.trees.len() as f64;
        let probabilities: Vec<f64> = (0..d.n_rows())
            .into_par_iter()
            .map(|row| {
                let total: f64 = self
                    .trees
                    .iter()
                    .map(|t| t.root.leaf_for(&features, row).positive_fraction())
                    .sum();
                total / n_trees
            })
            .collect();
        let labels = probabilities.iter().map(|&p| u8::from(p >= 0.5)).collect();
        Ok(Predictions { labels, probabilities })
    }

    /// Unlearns the given training rows from every tree.
    pub fn delete(&mut self, ids: &[u32]) -> Result<DeleteReport, ForestError> {
        let mut positions = Vec::with_capacity(ids.len());
        let mut seen = BTreeSet::new();
        for &id in ids {
            let pos = self.position(id).ok_or(ForestError::UnknownId(id))?;
            if !self.live[pos as usize] || !seen.insert(pos) {
                return Err(ForestError::AlreadyDeleted(id));
            }
            positions.push(pos);
        }
        if positions.is_empty() {
            return Ok(DeleteReport::default());
        }
        if positions.len() >= self.n_live {
            return Err(ForestError::WouldDeleteAll);
        }
        positions.sort_unstable();
        let builder = Builder {
            data: &self.data,
            cfg: build_config(&self.params, self.data.features.len()),
        };
        let reports: Vec<DeleteReport> = self
            .trees
            .par_iter_mut()
            .map(|tree| {
                let mut report = DeleteReport::default();
                builder.delete(&mut tree.root, &positions, 0, &mut tree.rng, &mut report);
                report
            })
            .collect();
        let mut report = DeleteReport {
            deleted: positions.len(),
            ..Default::default()
        };
        for r in &reports {
            report.merge(r);
        }
        for &p in &positions {
            self.live[p as usize] = false;
        }
        self.n_live -= positions.len();
        Ok(report)
    }

    pub fn snapshot(&self) -> ForestSnapshot {
        ForestSnapshot(self.clone())
    }

    /// Normalized mean decrease in Gini impurity per attribute, weighted by
    /// node sample counts and summed over trees. All zeros when no tree splits.
    pub fn feature_importances(&self) -> BTreeMap<String, f64> {
        let mut raw = vec![0.0f64; self.schema.attributes.len()];
        for tree in &self.trees {
            accumulate_importance(&tree.root, &mut raw);
        }
        let total: f64 = raw.iter().sum();
        self.schema
            .attributes
            .iter()
            .zip(raw)
            .map(|(a, v)| (a.name.clone(), if total > 0.0 { v / total } else { 0.0 }))
            .collect()
    }

    /// Recounts every cached statistic and leaf list by routing the rows of
    /// `d` (the live training data) through each tree.
    pub fn audit_recount(&self, d: &Dataset) -> Result<(), AuditDiscrepancy> {
        audit::audit_recount(self, d)
    }

    /// Checks that each greedy node's chosen split is valid and has a Gini
    /// gain at least that of every other valid cached candidate.
    pub fn check_split_optimality(&self) -> Result<(), AuditDiscrepancy> {
        audit::check_split_optimality(self)
    }

    pub fn to_json(&self) -> Result<String, ForestError> {
        let file = ForestFile {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            forest: self.clone(),
        };
        serde_json::to_string(&file).map_err(|e| ForestError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, ForestError> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| ForestError::Serialization(e.to_string()))?;
        if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
            return Err(ForestError::UnsupportedFormat {
                format: header.format,
                version: header.version,
            });
        }
        let file: ForestFile = serde_json::from_str(text).map_err(|e| ForestError::Serialization(e.to_string()))?;
        Ok(file.forest)
    }

    pub fn save(&self, path: &Path) -> Result<(), ForestError> {
        std::fs::write(path, self.to_json()?).map_err(|e| ForestError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ForestError> {
        let text = std::fs::read_to_string(path).map_err(|e| ForestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    #[cfg(test)]
    pub(crate) fn data(&self) -> &TrainingData {
        &self.data
    }

    pub(crate) fn min_leaf(&self) -> u32 {
        self.params.min_leaf as u32
    }

    #[cfg(test)]
    pub(crate) fn trees_mut(&mut self) -> &mut [DareTree] {
        &mut self.trees
    }
}

fn build_config(params: &ForestParams, p: usize) -> BuildConfig {
    BuildConfig {
        max_depth: params.max_depth,
        d_rand: params.d_rand,
        k_thresholds: params.k_thresholds,
        features_per_node: params.feature_sample.count(p),
        min_leaf: params.min_leaf as u32,
    }
}

fn accumulate_importance(node: &Node, raw: &mut [f64]) {
    if let Node::Split(s) = node {
        raw[s.split().feature] += s.chosen_counts().impurity_decrease();
        accumulate_importance(&s.left, raw);
        accumulate_importance(&s.right, raw);
    }
}
