use std::cmp::Ordering;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{FeatureColumn, TrainingData};

/// Which way a split sends an instance: `x <= threshold`, or `code == category`, goes left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    Threshold(f64),
    Category(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub test: SplitTest,
}

impl Split {
    #[inline]
    pub(crate) fn goes_left(&self, column: &FeatureColumn, row: usize) -> bool {
        match (self.test, column) {
            (SplitTest::Threshold(t), FeatureColumn::Numeric(values)) => values[row] <= t,
            (SplitTest::Category(c), FeatureColumn::Nominal { codes, .. }) => codes[row] == c,
            _ => unreachable!("split test does not match the column type"),
        }
    }
}

/// A cached candidate split with the label counts on its left side. Right
/// side counts follow from the node totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub split: Split,
    pub n_left: u32,
    pub n_left_pos: u32,
}

impl Candidate {
    fn counts(&self, n: u32, n_pos: u32) -> SideCounts {
        SideCounts {
            n_left: self.n_left,
            n_left_pos: self.n_left_pos,
            n_right: n - self.n_left,
            n_right_pos: n_pos - self.n_left_pos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideCounts {
    pub n_left: u32,
    pub n_left_pos: u32,
    pub n_right: u32,
    pub n_right_pos: u32,
}

impl SideCounts {
    pub fn is_valid(&self, min_leaf: u32) -> bool {
        self.n_left >= min_leaf.max(1) && self.n_right >= min_leaf.max(1)
    }

    /// Sum of `(pos^2 + neg^2) / size` over both sides, as an exact fraction.
    /// Maximizing it is the same as maximizing Gini gain at a fixed node.
    pub fn purity(&self) -> Fraction {
        let sq = |n: u32, p: u32| {
            let (n, p) = (n as u128, p as u128);
            p * p + (n - p) * (n - p)
        };
        let (nl, nr) = (self.n_left as u128, self.n_right as u128);
        Fraction {
            num: sq(self.n_left, self.n_left_pos) * nr + sq(self.n_right, self.n_right_pos) * nl,
            den: nl * nr,
        }
    }

    /// Weighted impurity decrease `n*gini(node) - n_l*gini(left) - n_r*gini(right)`.
    pub fn impurity_decrease(&self) -> f64 {
        let n = (self.n_left + self.n_right) as f64;
        let p = (self.n_left_pos + self.n_right_pos) as f64;
        let parent = (p * p + (n - p) * (n - p)) / n;
        let Fraction { num, den } = self.purity();
        num as f64 / den as f64 - parent
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Fraction {
    num: u128,
    den: u128,
}

impl Fraction {
    pub fn cmp(&self, other: &Fraction) -> Ordering {
        match (self.num.checked_mul(other.den), other.num.checked_mul(self.den)) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => (self.num as f64 / self.den as f64).total_cmp(&(other.num as f64 / other.den as f64)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Random,
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafNode {
    /// Training positions routed here, sorted ascending.
    pub ids: Vec<u32>,
    pub n_pos: u32,
}

impl LeafNode {
    pub fn positive_fraction(&self) -> f64 {
        if self.ids.is_empty() {
            0.5
        } else {
            self.n_pos as f64 / self.ids.len() as f64
        }
    }
}

/// Internal node. Random nodes keep their single drawn split as their only
/// candidate; greedy nodes keep every sampled candidate and the index of the
/// chosen one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitNode {
    pub kind: SplitKind,
    pub n: u32,
    pub n_pos: u32,
    pub candidates: Vec<Candidate>,
    pub chosen: usize,
    pub left: Node,
    pub right: Node,
}

impl SplitNode {
    pub fn split(&self) -> &Split {
        &self.candidates[self.chosen].split
    }

    pub fn chosen_counts(&self) -> SideCounts {
        self.candidates[self.chosen].counts(self.n, self.n_pos)
    }

    pub fn candidate_counts(&self, i: usize) -> SideCounts {
        self.candidates[i].counts(self.n, self.n_pos)
    }

    /// First candidate with the highest purity among valid ones.
    pub fn best_valid(&self, min_leaf: u32) -> Option<usize> {
        best_candidate(&self.candidates, self.n, self.n_pos, min_leaf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf(LeafNode),
    Split(Box<SplitNode>),
}

impl Node {
    pub fn n(&self) -> u32 {
        match self {
            Node::Leaf(l) => l.ids.len() as u32,
            Node::Split(s) => s.n,
        }
    }

    pub(crate) fn collect_ids(&self, out: &mut Vec<u32>) {
        match self {
            Node::Leaf(l) => out.extend_from_slice(&l.ids),
            Node::Split(s) => {
                s.left.collect_ids(out);
                s.right.collect_ids(out);
            }
        }
    }

    pub(crate) fn leaf_for(&self, features: &[FeatureColumn], row: usize) -> &LeafNode {
        let mut node = self;
        loop {
            match node {
                Node::Leaf(l) => return l,
                Node::Split(s) => {
                    let split = s.split();
                    node = if split.goes_left(&features[split.feature], row) {
                        &s.left
                    } else {
                        &s.right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split(s) => 1 + s.left.depth().max(s.right.depth()),
        }
    }

    pub fn count_nodes(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split(s) => 1 + s.left.count_nodes() + s.right.count_nodes(),
        }
    }
}

pub(crate) fn best_candidate(candidates: &[Candidate], n: u32, n_pos: u32, min_leaf: u32) -> Option<usize> {
    let mut best: Option<(usize, Fraction)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let counts = c.counts(n, n_pos);
        if !counts.is_valid(min_leaf) {
            continue;
        }
        let score = counts.purity();
        match &best {
            Some((_, b)) if score.cmp(b) != Ordering::Greater => {}
            _ => best = Some((i, score)),
        }
    }
    best.map(|(i, _)| i)
}

/// Fixed build settings shared by every node of a tree.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BuildConfig {
    pub max_depth: usize,
    pub d_rand: usize,
    pub k_thresholds: usize,
    pub features_per_node: usize,
    pub min_leaf: u32,
}

impl BuildConfig {
    fn is_terminal(&self, depth: usize, n: u32, n_pos: u32) -> bool {
        depth >= self.max_depth || n_pos == 0 || n_pos == n || n < 2 * self.min_leaf.max(1)
    }
}

pub(crate) struct Builder<'a> {
    pub data: &'a TrainingData,
    pub cfg: BuildConfig,
}

impl Builder<'_> {
    /// Grows a subtree over `ids` (training positions, sorted) at `depth`.
    pub fn build(&self, ids: Vec<u32>, depth: usize, rng: &mut ChaCha8Rng) -> Node {
        let n = ids.len() as u32;
        let n_pos = ids.iter().map(|&i| self.data.labels[i as usize] as u32).sum();
        if self.cfg.is_terminal(depth, n, n_pos) {
            return Node::Leaf(LeafNode { ids, n_pos });
        }
        let drawn = if depth < self.cfg.d_rand {
            self.random_split(&ids, rng).map(|split| (SplitKind::Random, vec![split], 0))
        } else {
            self.greedy_candidates(&ids, n, n_pos, rng)
                .map(|(cands, chosen)| (SplitKind::Greedy, cands, chosen))
        };
        let Some((kind, candidates, chosen)) = drawn else {
            return Node::Leaf(LeafNode { ids, n_pos });
        };
        let split = candidates[chosen].split;
        let column = &self.data.features[split.feature];
        let (left_ids, right_ids): (Vec<u32>, Vec<u32>) =
            ids.iter().partition(|&&i| split.goes_left(column, i as usize));
        let candidates = match kind {
            SplitKind::Random => vec![Candidate {
                split,
                n_left: left_ids.len() as u32,
                n_left_pos: left_ids.iter().map(|&i| self.data.labels[i as usize] as u32).sum(),
            }],
            SplitKind::Greedy => candidates,
        };
        let left = self.build(left_ids, depth + 1, rng);
        let right = self.build(right_ids, depth + 1, rng);
        Node::Split(Box::new(SplitNode {
            kind,
            n,
            n_pos,
            candidates,
            chosen,
            left,
            right,
        }))
    }

    /// Uniform attribute among non-constant ones, then a uniform threshold in
    /// `[min, max)` or a uniform present category.
    fn random_split(&self, ids: &[u32], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let usable: Vec<usize> = (0..self.data.features.len())
            .filter(|&f| !self.data.features[f].is_constant_on(ids))
            .collect();
        let &feature = usable.choose(rng)?;
        let test = match &self.data.features[feature] {
            FeatureColumn::Numeric(values) => {
                let (lo, hi) = ids.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = values[i as usize];
                    (lo.min(v), hi.max(v))
                });
                let t = rng.gen_range(lo..hi);
                SplitTest::Threshold(t)
            }
            FeatureColumn::Nominal { codes, n_categories } => {
                let mut present = vec![false; *n_categories as usize];
                for &i in ids {
                    present[codes[i as usize] as usize] = true;
                }
                let cats: Vec<u32> = (0..*n_categories).filter(|&c| present[c as usize]).collect();
                SplitTest::Category(*cats.choose(rng).expect("non-constant feature"))
            }
        };
        Some(Candidate {
            split: Split { feature, test },
            n_left: 0,
            n_left_pos: 0,
        })
    }

    /// Samples attributes in random order until `features_per_node` of them
    /// offer a valid split, drawing up to `k_thresholds` candidates from each.
    /// Candidates are ordered by attribute index, then by threshold or code.
    fn greedy_candidates(&self, ids: &[u32], n: u32, n_pos: u32, rng: &mut ChaCha8Rng) -> Option<(Vec<Candidate>, usize)> {
        let mut order: Vec<usize> = (0..self.data.features.len()).collect();
        order.shuffle(rng);
        let mut per_feature: Vec<(usize, Vec<Candidate>)> = Vec::new();
        for feature in order {
            if per_feature.len() >= self.cfg.features_per_node {
                break;
            }
            let cands = self.feature_candidates(feature, ids, n, rng);
            if !cands.is_empty() {
                per_feature.push((feature, cands));
            }
        }
        per_feature.sort_by_key(|(f, _)| *f);
        let candidates: Vec<Candidate> = per_feature.into_iter().flat_map(|(_, c)| c).collect();
        let chosen = best_candidate(&candidates, n, n_pos, self.cfg.min_leaf)?;
        Some((candidates, chosen))
    }

    fn feature_candidates(&self, feature: usize, ids: &[u32], n: u32, rng: &mut ChaCha8Rng) -> Vec<Candidate> {
        let min_leaf = self.cfg.min_leaf.max(1);
        let labels = &self.data.labels;
        // (split test, n_left, n_left_pos) for every valid split on this attribute.
        let valid: Vec<(SplitTest, u32, u32)> = match &self.data.features[feature] {
            FeatureColumn::Numeric(values) => {
                let mut pairs: Vec<(f64, u8)> = ids.iter().map(|&i| (values[i as usize], labels[i as usize])).collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut out = Vec::new();
                let (mut n_left, mut n_left_pos) = (0u32, 0u32);
                for w in 0..pairs.len() {
                    n_left += 1;
                    n_left_pos += pairs[w].1 as u32;
                    if w + 1 < pairs.len() && pairs[w + 1].0 > pairs[w].0 {
                        let n_right = n - n_left;
                        if n_left >= min_leaf && n_right >= min_leaf {
                            let t = midpoint(pairs[w].0, pairs[w + 1].0);
                            out.push((SplitTest::Threshold(t), n_left, n_left_pos));
                        }
                    }
                }
                out
            }
            FeatureColumn::Nominal { codes, n_categories } => {
                let mut counts = vec![(0u32, 0u32); *n_categories as usize];
                for &i in ids {
                    let c = &mut counts[codes[i as usize] as usize];
                    c.0 += 1;
                    c.1 += labels[i as usize] as u32;
                }
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, &(cnt, _))| cnt >= min_leaf && n - cnt >= min_leaf)
                    .map(|(code, &(cnt, pos))| (SplitTest::Category(code as u32), cnt, pos))
                    .collect()
            }
        };
        let k = self.cfg.k_thresholds.min(valid.len());
        let mut picked = index::sample(rng, valid.len(), k).into_vec();
        picked.sort_unstable();
        picked
            .into_iter()
            .map(|i| {
                let (test, n_left, n_left_pos) = valid[i];
                Candidate {
                    split: Split { feature, test },
                    n_left,
                    n_left_pos,
                }
            })
            .collect()
    }
}

// Midpoint that stays strictly below `hi` even when the two values are adjacent floats.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Tallies from one `delete` call.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeleteReport {
    pub deleted: usize,
    /// Internal nodes whose cached statistics were decremented in place.
    pub nodes_updated: usize,
    pub leaves_updated: usize,
    pub subtrees_retrained: usize,
    /// Instances the retrained subtrees were rebuilt from.
    pub retrained_instances: usize,
}

impl DeleteReport {
    pub(crate) fn merge(&mut self, other: &DeleteReport) {
        self.nodes_updated += other.nodes_updated;
        self.leaves_updated += other.leaves_updated;
        self.subtrees_retrained += other.subtrees_retrained;
        self.retrained_instances += other.retrained_instances;
    }
}

impl Builder<'_> {
    /// Removes `del` (sorted positions, all present under `node`) from the
    /// subtree. Statistics are decremented along the way; a node is rebuilt
    /// from its surviving instances when its split stops being the best valid
    /// one, when any cached candidate becomes invalid, or when the node would
    /// now be a leaf.
    pub fn delete(&self, node: &mut Node, del: &[u32], depth: usize, rng: &mut ChaCha8Rng, report: &mut DeleteReport) {
        if del.is_empty() {
            return;
        }
        let labels = &self.data.labels;
        match node {
            Node::Leaf(leaf) => {
                leaf.ids.retain(|id| del.binary_search(id).is_err());
                leaf.n_pos -= del.iter().map(|&i| labels[i as usize] as u32).sum::<u32>();
                report.leaves_updated += 1;
            }
            Node::Split(s) => {
                s.n -= del.len() as u32;
                s.n_pos -= del.iter().map(|&i| labels[i as usize] as u32).sum::<u32>();
                for cand in &mut s.candidates {
                    let column = &self.data.features[cand.split.feature];
                    for &i in del {
                        if cand.split.goes_left(column, i as usize) {
                            cand.n_left -= 1;
                            cand.n_left_pos -= labels[i as usize] as u32;
                        }
                    }
                }
                let min_leaf = self.cfg.min_leaf;
                let retrain = self.cfg.is_terminal(depth, s.n, s.n_pos)
                    || match s.kind {
                        SplitKind::Random => {
                            let c = &s.candidates[0];
                            c.n_left == 0 || c.n_left == s.n
                        }
                        SplitKind::Greedy => {
                            (0..s.candidates.len()).any(|i| !s.candidate_counts(i).is_valid(min_leaf))
                                || s.best_valid(min_leaf) != Some(s.chosen)
                        }
                    };
                if retrain {
                    let mut survivors = Vec::with_capacity(s.n as usize + del.len());
                    node.collect_ids(&mut survivors);
                    survivors.retain(|id| del.binary_search(id).is_err());
                    survivors.sort_unstable();
                    report.subtrees_retrained += 1;
                    report.retrained_instances += survivors.len();
                    *node = self.build(survivors, depth, rng);
                    return;
                }
                report.nodes_updated += 1;
                let split = *s.split();
                let column = &self.data.features[split.feature];
                let (left_del, right_del): (Vec<u32>, Vec<u32>) =
                    del.iter().partition(|&&i| split.goes_left(column, i as usize));
                self.delete(&mut s.left, &left_del, depth + 1, rng, report);
                self.delete(&mut s.right, &right_del, depth + 1, rng, report);
            }
        }
    }
}
