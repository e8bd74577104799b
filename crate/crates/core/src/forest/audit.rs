use std::fmt;

use serde::{Deserialize, Serialize};

use super::data::{encode_features, FeatureColumn};
use super::tree::{Node, SplitKind};
use super::DareForest;
use crate::dataset::Dataset;

/// First mismatch found by an audit. `path` names the node as a walk from
/// the root, e.g. `root/L/R`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditDiscrepancy {
    pub tree: Option<usize>,
    pub path: String,
    pub detail: String,
}

impl fmt::Display for AuditDiscrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tree {
            Some(t) => write!(f, "tree {t} node {}: {}", self.path, self.detail),
            None => write!(f, "{}", self.detail),
        }
    }
}

impl std::error::Error for AuditDiscrepancy {}

struct Recount<'a> {
    features: Vec<FeatureColumn>,
    labels: &'a [u8],
    row_ids: &'a [u32],
    forest: &'a DareForest,
}

pub(super) fn audit_recount(forest: &DareForest, d: &Dataset) -> Result<(), AuditDiscrepancy> {
    if !forest.schema.same_features(d.schema()) {
        return Err(AuditDiscrepancy {
            tree: None,
            path: String::new(),
            detail: "dataset schema does not match the forest".into(),
        });
    }
    let mut ids: Vec<u32> = d.row_ids().to_vec();
    ids.sort_unstable();
    if ids != forest.live_ids() {
        return Err(AuditDiscrepancy {
            tree: None,
            path: String::new(),
            detail: format!(
                "registry holds {} live rows but the dataset has {}",
                forest.n_live(),
                d.n_rows()
            ),
        });
    }
    let ctx = Recount {
        features: encode_features(d),
        labels: d.labels(),
        row_ids: d.row_ids(),
        forest,
    };
    for (t, tree) in forest.trees.iter().enumerate() {
        let rows: Vec<usize> = (0..d.n_rows()).collect();
        ctx.check(&tree.root, rows, "root".to_string()).map_err(|(path, detail)| AuditDiscrepancy {
            tree: Some(t),
            path,
            detail,
        })?;
    }
    Ok(())
}

impl Recount<'_> {
    fn check(&self, node: &Node, rows: Vec<usize>, path: String) -> Result<(), (String, String)> {
        let n = rows.len() as u32;
        let n_pos: u32 = rows.iter().map(|&r| self.labels[r] as u32).sum();
        let mismatch = |what: &str, cached: u32, actual: u32| {
            Err((path.clone(), format!("{what}: cached {cached}, recount {actual}")))
        };
        match node {
            Node::Leaf(leaf) => {
                if leaf.ids.len() as u32 != n {
                    return mismatch("leaf size", leaf.ids.len() as u32, n);
                }
                if leaf.n_pos != n_pos {
                    return mismatch("leaf positives", leaf.n_pos, n_pos);
                }
                let mut cached: Vec<u32> = leaf.ids.iter().map(|&p| self.forest.data.row_ids[p as usize]).collect();
                let mut actual: Vec<u32> = rows.iter().map(|&r| self.row_ids[r]).collect();
                cached.sort_unstable();
                actual.sort_unstable();
                if cached != actual {
                    return Err((path, "leaf instance list differs from routed rows".into()));
                }
                Ok(())
            }
            Node::Split(s) => {
                if s.n != n {
                    return mismatch("node size", s.n, n);
                }
                if s.n_pos != n_pos {
                    return mismatch("node positives", s.n_pos, n_pos);
                }
                for (i, cand) in s.candidates.iter().enumerate() {
                    let column = &self.features[cand.split.feature];
                    let (mut nl, mut nlp) = (0u32, 0u32);
                    for &r in &rows {
                        if cand.split.goes_left(column, r) {
                            nl += 1;
                            nlp += self.labels[r] as u32;
                        }
                    }
                    if cand.n_left != nl {
                        return mismatch(&format!("candidate {i} n_left"), cand.n_left, nl);
                    }
                    if cand.n_left_pos != nlp {
                        return mismatch(&format!("candidate {i} n_left_pos"), cand.n_left_pos, nlp);
                    }
                    let counts = s.candidate_counts(i);
                    if counts.n_left + counts.n_right != s.n {
                        return Err((path.clone(), format!("candidate {i} sides do not add up")));
                    }
                }
                let split = *s.split();
                let column = &self.features[split.feature];
                let (left, right): (Vec<usize>, Vec<usize>) = rows.into_iter().partition(|&r| split.goes_left(column, r));
                self.check(&s.left, left, format!("{path}/L"))?;
                self.check(&s.right, right, format!("{path}/R"))
            }
        }
    }
}

pub(super) fn check_split_optimality(forest: &DareForest) -> Result<(), AuditDiscrepancy> {
    fn walk(node: &Node, min_leaf: u32, path: String) -> Result<(), (String, String)> {
        let Node::Split(s) = node else { return Ok(()) };
        if s.kind == SplitKind::Greedy {
            let chosen = s.chosen_counts();
            if !chosen.is_valid(min_leaf) {
                return Err((path, "chosen split is invalid".into()));
            }
            let best = chosen.purity();
            for i in 0..s.candidates.len() {
                let counts = s.candidate_counts(i);
                if counts.is_valid(min_leaf) && counts.purity().cmp(&best).is_gt() {
                    return Err((path, format!("candidate {i} beats chosen candidate {}", s.chosen)));
                }
            }
        } else {
            let c = s.chosen_counts();
            if c.n_left == 0 || c.n_right == 0 {
                return Err((path, "random split has an empty side".into()));
            }
        }
        walk(&s.left, min_leaf, format!("{path}/L"))?;
        walk(&s.right, min_leaf, format!("{path}/R"))
    }
    for (t, tree) in forest.trees.iter().enumerate() {
        walk(&tree.root, forest.min_leaf(), "root".into()).map_err(|(path, detail)| AuditDiscrepancy {
            tree: Some(t),
            path,
            detail,
        })?;
    }
    Ok(())
}
