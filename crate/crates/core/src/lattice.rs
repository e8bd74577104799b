//! Level-wise apriori search over conjunctions of `attribute = value`
//! literals, ranking training subsets by how much unlearning them reduces
//! the model's bias.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{evaluate_predicate, Column, Dataset, DatasetError, Literal, Predicate, SubsetSelection};
use crate::fairness::{
    Baseline, BiasReport, ContributionMethod, ContributionResult, FairnessError, FairnessMetric, RetrainOracle,
};
use crate::forest::DareForest;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("attribute `{0}` is continuous; discretize the data before searching")]
    ContinuousAttribute(String),
    #[error("nothing to debug: the model is unbiased under {0}")]
    NothingToDebug(FairnessMetric),
    #[error(transparent)]
    Fairness(#[from] FairnessError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("failed to write search trace: {0}")]
    Trace(#[from] std::io::Error),
}

/// How a child's contribution is compared with its parents'.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CompareStrategy {
    #[default]
    #[serde(rename = "normal")]
    Normal,
    /// Bias reduction divided by subset size.
    #[serde(rename = "perInstance")]
    PerInstance,
}

impl FromStr for CompareStrategy {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" => Ok(CompareStrategy::Normal),
            "perInstance" | "per-instance" | "per_instance" => Ok(CompareStrategy::PerInstance),
            _ => Err(LatticeError::InvalidConfig(format!("unknown compare strategy `{s}`"))),
        }
    }
}

impl fmt::Display for CompareStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompareStrategy::Normal => "normal",
            CompareStrategy::PerInstance => "perInstance",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub max_literals: usize,
    pub support_min: f64,
    pub support_max: f64,
    pub compare_strategy: CompareStrategy,
    /// Drop subsets whose removal does not reduce bias.
    pub compare_original_parity: bool,
    /// Drop subsets that do worse than one of their parents.
    pub prune_quality: bool,
    pub k: usize,
    pub metric: FairnessMetric,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_literals: 2,
            support_min: 0.05,
            support_max: 0.15,
            compare_strategy: CompareStrategy::Normal,
            compare_original_parity: true,
            prune_quality: true,
            k: 5,
            metric: FairnessMetric::StatisticalParity,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), LatticeError> {
        let bad = |m: String| Err(LatticeError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.support_min)
            || !(0.0..=1.0).contains(&self.support_max)
            || self.support_min > self.support_max
        {
            return bad(format!(
                "support range [{}, {}] must satisfy 0 <= min <= max <= 1",
                self.support_min, self.support_max
            ));
        }
        if self.max_literals == 0 {
            return bad("max_literals must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        Ok(())
    }

    /// Search with only support pruning, which enumerates every frequent
    /// conjunction.
    pub fn without_quality_rules(&self) -> Self {
        Self {
            compare_original_parity: false,
            prune_quality: false,
            ..self.clone()
        }
    }

    fn in_range(&self, support: f64) -> bool {
        support >= self.support_min && support <= self.support_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Expanded,
    PrunedSupport,
    PrunedQuality,
    PrunedNotResponsible,
    OversupportCarryover,
}

impl NodeStatus {
    /// Whether the node takes part in generating the next level.
    pub fn expands(self) -> bool {
        matches!(self, NodeStatus::Expanded | NodeStatus::OversupportCarryover)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeNode {
    pub predicate: Predicate,
    pub level: usize,
    #[serde(skip)]
    pub member_ids: Vec<u32>,
    pub count: usize,
    pub support: f64,
    pub parents: Option<(String, String)>,
    pub contribution: Option<ContributionResult>,
    pub status: NodeStatus,
}

impl LatticeNode {
    fn new(predicate: Predicate, member_ids: Vec<u32>, n_train: usize, parents: Option<(String, String)>) -> Self {
        let count = member_ids.len();
        Self {
            level: predicate.len(),
            predicate,
            member_ids,
            count,
            support: count as f64 / n_train as f64,
            parents,
            contribution: None,
            status: NodeStatus::PrunedSupport,
        }
    }

    pub fn selection(&self, n_train: usize) -> SubsetSelection {
        SubsetSelection::new(self.predicate.clone(), self.member_ids.clone(), n_train)
    }

    fn quality(&self, strategy: CompareStrategy) -> Option<f64> {
        let c = self.contribution.as_ref()?;
        let r = c.bias_reduction?;
        Some(match strategy {
            CompareStrategy::Normal => r,
            CompareStrategy::PerInstance => r / c.count as f64,
        })
    }
}

/// Retrain check attached to an explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub bias_reduction: Option<f64>,
    pub accuracy_reduction: f64,
    /// Retraining without the subset did not reduce bias.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub rank: usize,
    pub predicate: Predicate,
    pub support: f64,
    pub count: usize,
    pub bias_reduction: f64,
    pub accuracy_reduction: f64,
    pub method: ContributionMethod,
    pub verification: Option<Verification>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub original_bias: BiasReport,
    pub original_accuracy: f64,
    pub explanations: Vec<Explanation>,
    /// Every generated node, level by level in canonical order.
    pub nodes: Vec<LatticeNode>,
    pub levels: usize,
    pub notice: Option<String>,
}

impl SearchOutcome {
    /// Writes one JSON object per generated node.
    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<(), LatticeError> {
        for node in &self.nodes {
            let line = serde_json::to_string(node).map_err(std::io::Error::other)?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

fn categorical_codes(train: &Dataset, attribute: usize) -> Result<&[u32], LatticeError> {
    match train.column(attribute) {
        Column::Categorical(codes) => Ok(codes),
        Column::Continuous(_) => Err(LatticeError::ContinuousAttribute(
            train.schema().attributes[attribute].name.clone(),
        )),
    }
}

/// One node per `attribute = value` over every domain value, the sensitive
/// attribute included. Statuses are left for pruning to decide.
pub fn seed_level1(train: &Dataset) -> Result<Vec<LatticeNode>, LatticeError> {
    let n = train.n_rows();
    let mut nodes = Vec::new();
    for (j, attr) in train.schema().attributes.iter().enumerate() {
        let codes = categorical_codes(train, j)?;
        let mut members: Vec<Vec<u32>> = vec![Vec::new(); attr.categories().len()];
        for (row, &c) in codes.iter().enumerate() {
            members[c as usize].push(train.row_ids()[row]);
        }
        for (value, mut ids) in attr.categories().iter().zip(members) {
            ids.sort_unstable();
            let p = Predicate::new(vec![Literal::eq(&attr.name, value)])?;
            nodes.push(LatticeNode::new(p, ids, n, None));
        }
    }
    nodes.sort_by(|a, b| a.predicate.canonical_key().cmp(b.predicate.canonical_key()));
    Ok(nodes)
}

/// Apriori join: the union of two same-level predicates that share all but
/// one literal each, provided no attribute appears twice.
pub fn merge(a: &Predicate, b: &Predicate) -> Option<Predicate> {
    if a.len() != b.len() || a == b {
        return None;
    }
    let extra: Vec<&Literal> = b.literals().iter().filter(|l| !a.literals().contains(l)).collect();
    if extra.len() != 1 || a.mentions(&extra[0].attribute) {
        return None;
    }
    let mut lits = a.literals().to_vec();
    lits.push(extra[0].clone());
    Predicate::new(lits).ok()
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Candidates of the next level from the expandable nodes of `level`.
/// Parents recorded are the first joining pair in canonical order.
fn next_level(level: &[LatticeNode], seen: &mut HashSet<String>, n_train: usize) -> Vec<LatticeNode> {
    let frontier: Vec<&LatticeNode> = level.iter().filter(|n| n.status.expands()).collect();
    // Nodes sharing a (l-1)-literal core land in the same bucket.
    let mut buckets: BTreeMap<Vec<&Literal>, Vec<usize>> = BTreeMap::new();
    for (i, node) in frontier.iter().enumerate() {
        let lits = node.predicate.literals();
        for skip in 0..lits.len() {
            let core: Vec<&Literal> = lits.iter().enumerate().filter(|&(k, _)| k != skip).map(|(_, l)| l).collect();
            buckets.entry(core).or_default().push(i);
        }
    }
    let mut found: BTreeMap<String, (usize, usize, Predicate)> = BTreeMap::new();
    for members in buckets.values() {
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                let Some(p) = merge(&frontier[i].predicate, &frontier[j].predicate) else { continue };
                let key = p.canonical_key().to_string();
                if seen.contains(&key) {
                    continue;
                }
                let pair = (i.min(j), i.max(j));
                found
                    .entry(key)
                    .and_modify(|e| {
                        if pair < (e.0, e.1) {
                            *e = (pair.0, pair.1, p.clone());
                        }
                    })
                    .or_insert((pair.0, pair.1, p));
            }
        }
    }
    found
        .into_iter()
        .map(|(key, (i, j, p))| {
            seen.insert(key);
            let (a, b) = (frontier[i], frontier[j]);
            let ids = intersect(&a.member_ids, &b.member_ids);
            let parents = Some((a.predicate.canonical_key().to_string(), b.predicate.canonical_key().to_string()));
            LatticeNode::new(p, ids, n_train, parents)
        })
        .collect()
}

/// Decides a node's status once its support, and contribution when needed,
/// are known. `parent_quality` yields the quality of a parent by key.
pub fn apply_pruning(
    node: &LatticeNode,
    cfg: &SearchConfig,
    parent_quality: impl Fn(&str) -> Option<f64>,
) -> NodeStatus {
    if node.support < cfg.support_min || node.count == 0 {
        return NodeStatus::PrunedSupport;
    }
    if node.support > cfg.support_max {
        return NodeStatus::OversupportCarryover;
    }
    // Level-1 nodes always expand so level 2 is generated in full.
    if node.level <= 1 {
        return NodeStatus::Expanded;
    }
    let Some(quality) = node.quality(cfg.compare_strategy) else {
        return if cfg.compare_original_parity {
            NodeStatus::PrunedNotResponsible
        } else {
            NodeStatus::Expanded
        };
    };
    if cfg.prune_quality {
        if let Some((a, b)) = &node.parents {
            let beaten = [a, b]
                .into_iter()
                .any(|p| quality < parent_quality(p).unwrap_or(f64::NEG_INFINITY));
            if beaten {
                return NodeStatus::PrunedQuality;
            }
        }
    }
    if cfg.compare_original_parity && node.contribution.as_ref().and_then(|c| c.bias_reduction).is_some_and(|r| r <= 0.0)
    {
        return NodeStatus::PrunedNotResponsible;
    }
    NodeStatus::Expanded
}

/// Runs the level-wise search and returns the top-k explanations together
/// with every node visited.
pub fn run_search(
    train: &Dataset,
    test: &Dataset,
    forest: &DareForest,
    cfg: &SearchConfig,
) -> Result<SearchOutcome, LatticeError> {
    cfg.validate()?;
    let baseline = match Baseline::measure(forest, cfg.metric, test) {
        Err(FairnessError::OriginalUnbiased(m)) => return Err(LatticeError::NothingToDebug(m)),
        other => other?,
    };
    let n_train = train.n_rows();
    let mut level = seed_level1(train)?;
    let mut seen: HashSet<String> = level.iter().map(|n| n.predicate.canonical_key().to_string()).collect();
    let mut all: Vec<LatticeNode> = Vec::new();
    let mut quality: BTreeMap<String, Option<f64>> = BTreeMap::new();
    let mut levels = 0;
    loop {
        levels += 1;
        let contributions: Vec<Option<Result<ContributionResult, FairnessError>>> = level
            .par_iter()
            .map(|node| {
                (node.count > 0 && node.count < n_train && cfg.in_range(node.support))
                    .then(|| baseline.unlearning_contribution(forest, &node.selection(n_train), test))
            })
            .collect();
        for (node, c) in level.iter_mut().zip(contributions) {
            node.contribution = c.transpose()?;
        }
        for node in level.iter_mut() {
            node.status = apply_pruning(node, cfg, |key| quality.get(key).copied().flatten());
        }
        for node in &level {
            quality.insert(node.predicate.canonical_key().to_string(), node.quality(cfg.compare_strategy));
        }
        log::info!(
            "level {levels}: {} nodes, {} expandable",
            level.len(),
            level.iter().filter(|n| n.status.expands()).count()
        );
        let next = if levels < cfg.max_literals {
            next_level(&level, &mut seen, n_train)
        } else {
            Vec::new()
        };
        all.append(&mut level);
        if next.is_empty() {
            break;
        }
        level = next;
    }

    let mut ranked: Vec<&LatticeNode> = all
        .iter()
        .filter(|n| n.status == NodeStatus::Expanded && cfg.in_range(n.support))
        .filter(|n| n.contribution.as_ref().and_then(|c| c.bias_reduction).is_some_and(|r| r > 0.0))
        .collect();
    ranked.sort_by(|a, b| {
        let ra = a.contribution.as_ref().and_then(|c| c.bias_reduction).unwrap_or(f64::NEG_INFINITY);
        let rb = b.contribution.as_ref().and_then(|c| c.bias_reduction).unwrap_or(f64::NEG_INFINITY);
        rb.total_cmp(&ra)
            .then(a.count.cmp(&b.count))
            .then(a.predicate.canonical_key().cmp(b.predicate.canonical_key()))
    });
    let explanations: Vec<Explanation> = ranked
        .into_iter()
        .take(cfg.k)
        .enumerate()
        .map(|(i, n)| {
            let c = n.contribution.as_ref().expect("ranked nodes carry a contribution");
            Explanation {
                rank: i + 1,
                predicate: n.predicate.clone(),
                support: n.support,
                count: n.count,
                bias_reduction: c.bias_reduction.expect("filtered on defined reduction"),
                accuracy_reduction: c.accuracy_reduction,
                method: c.method,
                verification: None,
            }
        })
        .collect();
    let notice = explanations
        .is_empty()
        .then(|| "no subset in the support range reduces the bias".to_string());
    Ok(SearchOutcome {
        original_bias: baseline.report,
        original_accuracy: baseline.accuracy,
        explanations,
        nodes: all,
        levels,
        notice,
    })
}

/// Retrains without each explanation's subset and attaches the measured
/// effect. Explanations whose retrained bias does not drop are flagged.
pub fn verify_top_k(
    explanations: &mut [Explanation],
    train: &Dataset,
    oracle: &RetrainOracle<'_>,
) -> Result<(), LatticeError> {
    let results: Vec<Result<ContributionResult, LatticeError>> = explanations
        .par_iter()
        .map(|e| {
            let sel = evaluate_predicate(&e.predicate, train)?;
            Ok(oracle.contribution(&sel)?)
        })
        .collect();
    for (e, r) in explanations.iter_mut().zip(results) {
        let c = r?;
        let flagged = !c.bias_reduction.is_some_and(|r| r > 0.0);
        if flagged {
            log::warn!("explanation {} ({}) did not reduce bias after retraining", e.rank, e.predicate);
        }
        e.verification = Some(Verification {
            bias_reduction: c.bias_reduction,
            accuracy_reduction: c.accuracy_reduction,
            flagged,
        });
    }
    Ok(())
}
