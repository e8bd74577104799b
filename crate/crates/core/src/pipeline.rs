//! End-to-end runs: ingest, discretize, split, fit, measure, search, verify
//! and report, plus the fidelity and timing harnesses.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{
    apply_discretization, discretize, evaluate_predicate, load_dataset_with_schema, stratified_split, Column,
    Dataset, DatasetError, Literal, Predicate, Role, Schema, SubsetSelection,
};
use crate::fairness::{compute_bias, phi, Baseline, BiasReport, FairnessError, FairnessMetric, RetrainOracle};
use crate::forest::{DareForest, ForestError, ForestParams};
use crate::lattice::{run_search, verify_top_k, Explanation, LatticeError, SearchConfig};
use crate::report::{diagnose, render_tables, DiagnosticReport, Format, ReportError};
use crate::synth;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("load: {0}")]
    Load(DatasetError),
    #[error("discretize: {0}")]
    Discretize(DatasetError),
    #[error("split: {0}")]
    Split(DatasetError),
    #[error("fit: {0}")]
    Fit(ForestError),
    #[error("bias: {0}")]
    Bias(FairnessError),
    #[error("search: {0}")]
    Search(LatticeError),
    #[error("verify: {0}")]
    Verify(LatticeError),
    #[error("report: {0}")]
    Report(ReportError),
    #[error("fidelity: {0}")]
    Fidelity(String),
    #[error("write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    pub schema: PathBuf,
    pub out: PathBuf,
    /// Fraction held out for testing when no test file is given.
    pub test_split: Option<f64>,
    pub bins: usize,
    pub forest: ForestParams,
    pub search: SearchConfig,
    pub verify: bool,
    pub trace: bool,
    pub diagnostics: bool,
    /// Diagnostics retrain instead of unlearning.
    pub retrain_diagnostics: bool,
    pub format: Format,
}

impl RunConfig {
    pub fn new(train: PathBuf, schema: PathBuf, out: PathBuf) -> Self {
        Self {
            train,
            test: None,
            schema,
            out,
            test_split: Some(0.2),
            bins: crate::dataset::DEFAULT_BINS,
            forest: ForestParams::default(),
            search: SearchConfig::default(),
            verify: true,
            trace: false,
            diagnostics: true,
            retrain_diagnostics: false,
            format: Format::Markdown,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        match (&self.test, self.test_split) {
            (Some(_), Some(_)) => return Err(PipelineError::Config("give either a test file or a test split, not both".into())),
            (None, None) => return Err(PipelineError::Config("a test file or a test split is required".into())),
            (None, Some(f)) if !(f > 0.0 && f < 1.0) => {
                return Err(PipelineError::Config(format!("test split {f} must lie strictly between 0 and 1")))
            }
            _ => {}
        }
        if self.bins < 2 {
            return Err(PipelineError::Config("bins must be at least 2".into()));
        }
        self.forest.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.search.validate().map_err(|e| PipelineError::Config(e.to_string()))
    }
}

/// Discretized train and test splits sharing one schema.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub test: Dataset,
    pub warnings: Vec<String>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, PipelineError> {
    let schema = Schema::from_path(&cfg.schema).map_err(PipelineError::Load)?;
    let data = load_dataset_with_schema(&cfg.train, &schema, Role::Train).map_err(PipelineError::Load)?;
    if data.dropped_rows() > 0 {
        log::warn!("dropped {} malformed rows from {}", data.dropped_rows(), cfg.train.display());
    }
    let (train, test) = match (&cfg.test, cfg.test_split) {
        (Some(path), _) => {
            let test = load_dataset_with_schema(path, &schema, Role::Test).map_err(PipelineError::Load)?;
            if test.dropped_rows() > 0 {
                log::warn!("dropped {} malformed rows from {}", test.dropped_rows(), path.display());
            }
            (data, test)
        }
        (None, Some(fraction)) => stratified_split(&data, fraction, cfg.forest.seed).map_err(PipelineError::Split)?,
        (None, None) => return Err(PipelineError::Config("a test file or a test split is required".into())),
    };
    prepare_split(train, test, cfg.bins)
}

pub fn prepare_split(train: Dataset, test: Dataset, bins: usize) -> Result<Prepared, PipelineError> {
    let binned = discretize(&train, bins).map_err(PipelineError::Discretize)?;
    for w in &binned.warnings {
        log::warn!("{w}");
    }
    let test = apply_discretization(&test, binned.dataset.schema()).map_err(PipelineError::Discretize)?;
    Ok(Prepared {
        train: binned.dataset,
        test: test.with_role(Role::Test),
        warnings: binned.warnings,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DebugArtifacts {
    pub bias: BiasReport,
    pub accuracy: f64,
    pub explanations: Vec<Explanation>,
    pub diagnostics: Option<DiagnosticReport>,
    pub notice: Option<String>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum DebugOutcome {
    Explained(Box<DebugArtifacts>),
    /// The fitted model shows no bias under the chosen metric.
    NothingToDebug { bias: BiasReport, files: Vec<PathBuf> },
}

impl DebugOutcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            DebugOutcome::Explained(_) => 0,
            DebugOutcome::NothingToDebug { .. } => 2,
        }
    }
}

fn write_file(path: PathBuf, contents: &[u8], files: &mut Vec<PathBuf>) -> Result<(), PipelineError> {
    fs::write(&path, contents).map_err(|source| PipelineError::Write { path: path.clone(), source })?;
    files.push(path);
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

/// Full pipeline. Artifacts land in `cfg.out`; nothing in them depends on
/// wall-clock time, so identical configs give identical files.
pub fn cmd_debug(cfg: &RunConfig) -> Result<DebugOutcome, PipelineError> {
    cfg.validate()?;
    let prepared = prepare(cfg)?;
    fs::create_dir_all(&cfg.out).map_err(|source| PipelineError::Write { path: cfg.out.clone(), source })?;
    let mut files = Vec::new();
    write_file(cfg.out.join("resolved_config.json"), &json_bytes(cfg), &mut files)?;
    write_file(
        cfg.out.join("binned_schema.json"),
        (prepared.train.schema().to_json_pretty() + "\n").as_bytes(),
        &mut files,
    )?;
    debug_prepared(cfg, &prepared, files)
}

/// The pipeline from fitting onwards, for callers that already hold the
/// discretized splits.
pub fn debug_prepared(cfg: &RunConfig, prepared: &Prepared, mut files: Vec<PathBuf>) -> Result<DebugOutcome, PipelineError> {
    let (train, test) = (&prepared.train, &prepared.test);
    let forest = DareForest::fit(train, &cfg.forest).map_err(PipelineError::Fit)?;
    let pred = forest.predict(test).map_err(PipelineError::Fit)?;
    let bias = compute_bias(cfg.search.metric, &pred.labels, test.labels(), test.sensitive()).map_err(PipelineError::Bias)?;
    fs::create_dir_all(&cfg.out).map_err(|source| PipelineError::Write { path: cfg.out.clone(), source })?;
    write_file(cfg.out.join("bias_report.json"), &json_bytes(&bias), &mut files)?;
    if bias.is_unbiased() {
        return Ok(DebugOutcome::NothingToDebug { bias, files });
    }

    let mut outcome = run_search(train, test, &forest, &cfg.search).map_err(PipelineError::Search)?;
    if let Some(n) = &outcome.notice {
        log::warn!("{n}");
    }
    if cfg.verify && !outcome.explanations.is_empty() {
        let oracle = RetrainOracle::with_reference(train, test, cfg.search.metric, &cfg.forest, &forest)
            .map_err(|e| PipelineError::Verify(e.into()))?;
        verify_top_k(&mut outcome.explanations, train, &oracle).map_err(PipelineError::Verify)?;
    }
    let diagnostics = if cfg.diagnostics {
        Some(
            diagnose(&outcome.explanations, &forest, train, &cfg.forest, cfg.retrain_diagnostics)
                .map_err(PipelineError::Report)?,
        )
    } else {
        None
    };

    let table = render_tables(&outcome.explanations, None, cfg.format).map_err(PipelineError::Report)?;
    write_file(
        cfg.out.join(format!("explanations.{}", cfg.format.extension())),
        table.as_bytes(),
        &mut files,
    )?;
    if let Some(d) = &diagnostics {
        write_file(cfg.out.join("diagnostics.json"), &json_bytes(d), &mut files)?;
    }
    if cfg.trace {
        let mut buf = Vec::new();
        outcome.write_trace(&mut buf).map_err(PipelineError::Search)?;
        write_file(cfg.out.join("trace.jsonl"), &buf, &mut files)?;
    }
    Ok(DebugOutcome::Explained(Box::new(DebugArtifacts {
        bias: outcome.original_bias,
        accuracy: outcome.original_accuracy,
        explanations: outcome.explanations,
        diagnostics,
        notice: outcome.notice,
        files,
    })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetKind {
    Random,
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityConfig {
    pub n_random: usize,
    pub n_coherent: usize,
    pub support_band: [f64; 2],
    pub max_literals: usize,
    pub metrics: Vec<FairnessMetric>,
    pub seed: u64,
}

impl Default for FidelityConfig {
    fn default() -> Self {
        Self {
            n_random: 100,
            n_coherent: 100,
            support_band: [0.0, 0.05],
            max_literals: 3,
            metrics: FairnessMetric::ALL.to_vec(),
            seed: 0,
        }
    }
}

/// One subset scored two ways under one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityPair {
    pub kind: SubsetKind,
    pub subset: usize,
    pub pattern: Option<String>,
    pub count: usize,
    pub support: f64,
    pub metric: FairnessMetric,
    pub original: f64,
    pub unlearned: f64,
    pub retrained: f64,
    pub abs_diff: f64,
    /// Relative change of bias magnitude; `None` when the original model
    /// is unbiased under the metric.
    pub phi_unlearned: Option<f64>,
    pub phi_retrained: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelitySummary {
    pub pairs: usize,
    pub undefined: usize,
    pub mean_abs_diff: f64,
    pub p95_abs_diff: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FidelityReport {
    pub config: FidelityConfig,
    pub pairs: Vec<FidelityPair>,
    /// Keyed by `kind/metric` and `all/metric`.
    pub summary: BTreeMap<String, FidelitySummary>,
}

/// Nearest-rank 95th percentile.
pub fn percentile_95(sorted: &[f64]) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (0.95 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn summarize(diffs: &mut [f64], undefined: usize) -> FidelitySummary {
    diffs.sort_by(f64::total_cmp);
    FidelitySummary {
        pairs: diffs.len(),
        undefined,
        mean_abs_diff: if diffs.is_empty() { 0.0 } else { diffs.iter().sum::<f64>() / diffs.len() as f64 },
        p95_abs_diff: percentile_95(diffs),
        max_abs_diff: diffs.last().copied().unwrap_or(0.0),
    }
}

fn band_sizes(band: [f64; 2], n: usize) -> (usize, usize) {
    let lo = ((band[0] * n as f64).ceil() as usize).max(1);
    let hi = (band[1] * n as f64).floor() as usize;
    (lo, hi.min(n - 1))
}

/// Uniform random row subsets whose size falls in the band.
pub fn sample_random_subsets(train: &Dataset, band: [f64; 2], count: usize, rng: &mut impl Rng) -> Vec<SubsetSelection> {
    let n = train.n_rows();
    let (lo, hi) = band_sizes(band, n);
    if lo > hi {
        return Vec::new();
    }
    (0..count)
        .map(|_| {
            let k = rng.gen_range(lo..=hi);
            let ids = index::sample(rng, n, k).into_iter().map(|r| train.row_ids()[r]).collect();
            SubsetSelection::new(Predicate::all(), ids, n)
        })
        .collect()
}

/// Distinct random equality conjunctions with support in the band. Each is
/// anchored on a random row so it is never empty.
pub fn sample_coherent_subsets(
    train: &Dataset,
    band: [f64; 2],
    count: usize,
    max_literals: usize,
    rng: &mut impl Rng,
) -> Vec<SubsetSelection> {
    let n = train.n_rows();
    let (lo, hi) = band_sizes(band, n);
    let attrs = &train.schema().attributes;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let max_literals = max_literals.clamp(1, attrs.len());
    let mut attempts = 0;
    while out.len() < count && attempts < 1000 * count.max(1) && lo <= hi {
        attempts += 1;
        let row = rng.gen_range(0..n);
        let len = rng.gen_range(1..=max_literals);
        let lits: Vec<Literal> = index::sample(rng, attrs.len(), len)
            .into_iter()
            .filter_map(|j| match train.column(j) {
                Column::Categorical(_) => Some(Literal::eq(&attrs[j].name, train.value_label(j, row))),
                Column::Continuous(_) => None,
            })
            .collect();
        let Ok(p) = Predicate::new(lits) else { continue };
        if p.is_empty() || !seen.insert(p.canonical_key().to_string()) {
            continue;
        }
        let sel = evaluate_predicate(&p, train).expect("literals come from the data");
        if (lo..=hi).contains(&sel.count) {
            out.push(sel);
        }
    }
    if out.len() < count {
        log::warn!("found only {} of {count} coherent subsets in the support band", out.len());
    }
    out
}

/// Scores each sampled subset by unlearning it from `forest` and by fitting
/// a new forest without it. Retrains use a fresh seed per subset.
pub fn cmd_fidelity(
    train: &Dataset,
    test: &Dataset,
    forest: &DareForest,
    cfg: &FidelityConfig,
) -> Result<FidelityReport, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut subsets: Vec<(SubsetKind, SubsetSelection)> = Vec::new();
    for sel in sample_random_subsets(train, cfg.support_band, cfg.n_random, &mut rng) {
        subsets.push((SubsetKind::Random, sel));
    }
    for sel in sample_coherent_subsets(train, cfg.support_band, cfg.n_coherent, cfg.max_literals, &mut rng) {
        subsets.push((SubsetKind::Coherent, sel));
    }
    let original = forest.predict(test).map_err(PipelineError::Fit)?.labels;
    let params = forest.params().clone();
    let scored: Vec<Vec<Option<FidelityPair>>> = subsets
        .par_iter()
        .enumerate()
        .map(|(i, (kind, sel))| {
            let mut unlearned = forest.snapshot().restore();
            unlearned.delete(&sel.member_ids).map_err(PipelineError::Fit)?;
            let rest = train.without_rows(&sel.member_ids).map_err(PipelineError::Split)?;
            let fresh = params.with_seed(cfg.seed.wrapping_mul(1_000_003).wrapping_add(i as u64 + 1));
            let retrained = DareForest::fit(&rest, &fresh).map_err(PipelineError::Fit)?;
            let pu = unlearned.predict(test).map_err(PipelineError::Fit)?.labels;
            let pr = retrained.predict(test).map_err(PipelineError::Fit)?.labels;
            Ok(cfg
                .metrics
                .iter()
                .map(|&m| {
                    let score = |p: &[u8]| compute_bias(m, p, test.labels(), test.sensitive()).ok();
                    let (o, u, r) = (score(&original)?, score(&pu)?, score(&pr)?);
                    let phi_of = |after: &BiasReport| (o.magnitude > 0.0).then(|| phi(o.magnitude, after.magnitude));
                    Some(FidelityPair {
                        kind: *kind,
                        subset: i,
                        pattern: (!sel.predicate.is_empty()).then(|| sel.predicate.to_string()),
                        count: sel.count,
                        support: sel.support,
                        metric: m,
                        original: o.value,
                        unlearned: u.value,
                        retrained: r.value,
                        abs_diff: (u.value - r.value).abs(),
                        phi_unlearned: phi_of(&u),
                        phi_retrained: phi_of(&r),
                    })
                })
                .collect())
        })
        .collect::<Result<_, PipelineError>>()?;

    let mut pairs = Vec::new();
    let mut diffs: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for (i, per_metric) in scored.into_iter().enumerate() {
        let kind = subsets[i].0;
        for (m, pair) in cfg.metrics.iter().zip(per_metric) {
            for key in [format!("{}/{}", kind_name(kind), m.short_name()), format!("all/{}", m.short_name())] {
                let e = diffs.entry(key).or_default();
                match &pair {
                    Some(p) => e.0.push(p.abs_diff),
                    None => e.1 += 1,
                }
            }
            pairs.extend(pair);
        }
    }
    let summary = diffs
        .into_iter()
        .map(|(k, (mut d, undefined))| (k, summarize(&mut d, undefined)))
        .collect();
    Ok(FidelityReport {
        config: cfg.clone(),
        pairs,
        summary,
    })
}

fn kind_name(kind: SubsetKind) -> &'static str {
    match kind {
        SubsetKind::Random => "random",
        SubsetKind::Coherent => "coherent",
    }
}

/// Fits the reference forest and runs the harness on prepared splits.
pub fn fidelity_on(prepared: &Prepared, params: &ForestParams, cfg: &FidelityConfig) -> Result<FidelityReport, PipelineError> {
    let forest = DareForest::fit(&prepared.train, params).map_err(PipelineError::Fit)?;
    // Fail early with a clear stage if the reference bias is undefined.
    for &m in &cfg.metrics {
        if let Err(e) = Baseline::measure(&forest, m, &prepared.test) {
            if !matches!(e, FairnessError::OriginalUnbiased(_)) {
                return Err(PipelineError::Bias(e));
            }
        }
    }
    cmd_fidelity(&prepared.train, &prepared.test, &forest, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub continuous_attributes: usize,
    pub delete_fraction: f64,
    pub forest: ForestParams,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![2_500, 5_000, 10_000],
            continuous_attributes: 10,
            delete_fraction: 0.05,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub attributes: usize,
    pub trees: usize,
    pub deleted: usize,
    pub fit_secs: f64,
    pub delete_secs: f64,
    pub retrain_secs: f64,
    /// Retrain time over delete time.
    pub speedup: f64,
    pub subtrees_retrained: usize,
}

/// Times fitting, deleting a random `delete_fraction` of rows, and fitting
/// again from scratch without them, for each size.
pub fn cmd_bench(cfg: &BenchConfig) -> Result<Vec<BenchRow>, PipelineError> {
    cfg.forest.validate().map_err(PipelineError::Fit)?;
    let mut rows = Vec::new();
    for &n in &cfg.sizes {
        let d = synth::benchmark_dataset(n, cfg.continuous_attributes, cfg.forest.seed);
        let t = Instant::now();
        let mut forest = DareForest::fit(&d, &cfg.forest).map_err(PipelineError::Fit)?;
        let fit_secs = t.elapsed().as_secs_f64();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.forest.seed ^ n as u64);
        let k = ((cfg.delete_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let ids: Vec<u32> = index::sample(&mut rng, n, k).into_iter().map(|r| r as u32).collect();
        let t = Instant::now();
        let report = forest.delete(&ids).map_err(PipelineError::Fit)?;
        let delete_secs = t.elapsed().as_secs_f64();
        let rest = d.without_rows(&ids).map_err(PipelineError::Split)?;
        let t = Instant::now();
        DareForest::fit(&rest, &cfg.forest).map_err(PipelineError::Fit)?;
        let retrain_secs = t.elapsed().as_secs_f64();
        log::info!("n={n}: fit {fit_secs:.3}s, delete {delete_secs:.3}s, retrain {retrain_secs:.3}s");
        rows.push(BenchRow {
            n,
            attributes: d.n_attributes(),
            trees: cfg.forest.n_trees,
            deleted: k,
            fit_secs,
            delete_secs,
            retrain_secs,
            speedup: retrain_secs / delete_secs.max(1e-9),
            subtrees_retrained: report.subtrees_retrained,
        });
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("bench rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

/// Writes a value as pretty JSON, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| PipelineError::Write { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, json_bytes(value)).map_err(|source| PipelineError::Write { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_uses_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile_95(&v), 95.0);
        assert_eq!(percentile_95(&[3.0]), 3.0);
        assert_eq!(percentile_95(&[]), 0.0);
    }

    #[test]
    fn samplers_stay_in_band() {
        let d = synth::planted_bias(400, 10, 1).train;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for sel in sample_random_subsets(&d, [0.0, 0.05], 20, &mut rng) {
            assert!(sel.count >= 1 && sel.count <= 20);
        }
        let coherent = sample_coherent_subsets(&d, [0.02, 0.1], 15, 3, &mut rng);
        assert!(!coherent.is_empty());
        let mut keys = HashSet::new();
        for sel in coherent {
            assert!(sel.support >= 0.02 && sel.support <= 0.1, "{}", sel.support);
            assert!(keys.insert(sel.predicate.canonical_key().to_string()));
        }
    }

    #[test]
    fn zero_subsets_give_an_empty_report() {
        let p = synth::planted_bias(200, 200, 1);
        let params = ForestParams { n_trees: 5, ..ForestParams::default() };
        let f = DareForest::fit(&p.train, &params).unwrap();
        let cfg = FidelityConfig { n_random: 0, n_coherent: 0, ..FidelityConfig::default() };
        let r = cmd_fidelity(&p.train, &p.test, &f, &cfg).unwrap();
        assert!(r.pairs.is_empty());
        assert!(r.summary.is_empty());
    }

    #[test]
    fn config_needs_exactly_one_test_source() {
        let mut cfg = RunConfig::new("a.csv".into(), "s.json".into(), "out".into());
        cfg.validate().unwrap();
        cfg.test = Some("t.csv".into());
        assert!(cfg.validate().is_err());
        cfg.test_split = None;
        cfg.validate().unwrap();
        cfg.test = None;
        assert!(cfg.validate().is_err());
        cfg.test_split = Some(1.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bench_reports_each_size() {
        let cfg = BenchConfig {
            sizes: vec![200, 400, 800],
            continuous_attributes: 3,
            forest: ForestParams { n_trees: 5, ..ForestParams::default() },
            ..BenchConfig::default()
        };
        let rows = cmd_bench(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        let csv = bench_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().next().unwrap().contains("speedup"));
    }
}
