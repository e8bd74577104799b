//! Group-fairness metrics and subset contributions to model bias.
//!
//! Every metric is signed protected-minus-privileged, so a negative value
//! means the model is biased against the protected group (`S = 0`). Values
//! are computed exactly from integer counts and exposed both as rationals and
//! as `f64`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, SubsetSelection};
use crate::forest::{DareForest, ForestError, ForestParams};

#[derive(Debug, Error)]
pub enum FairnessError {
    #[error("predictions, labels and sensitive vectors differ in length ({predictions}, {labels}, {sensitive})")]
    LengthMismatch {
        predictions: usize,
        labels: usize,
        sensitive: usize,
    },
    #[error("the {0} group is empty")]
    EmptyGroup(Group),
    #[error("undefined metric: {metric} needs {denominator} in the {group} group, but there are none")]
    UndefinedMetric {
        metric: FairnessMetric,
        group: Group,
        denominator: &'static str,
    },
    #[error("original model unbiased under {0}; contribution is undefined")]
    OriginalUnbiased(FairnessMetric),
    #[error("unknown fairness metric `{0}` (expected sp, pp or eo)")]
    UnknownMetric(String),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Protected,
    Privileged,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Protected => "protected",
            Group::Privileged => "privileged",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMetric {
    StatisticalParity,
    PredictiveParity,
    EqualizedOdds,
}

impl FairnessMetric {
    pub const ALL: [FairnessMetric; 3] = [
        FairnessMetric::StatisticalParity,
        FairnessMetric::PredictiveParity,
        FairnessMetric::EqualizedOdds,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            FairnessMetric::StatisticalParity => "sp",
            FairnessMetric::PredictiveParity => "pp",
            FairnessMetric::EqualizedOdds => "eo",
        }
    }
}

impl fmt::Display for FairnessMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FairnessMetric::StatisticalParity => "statistical_parity",
            FairnessMetric::PredictiveParity => "predictive_parity",
            FairnessMetric::EqualizedOdds => "equalized_odds",
        })
    }
}

impl FromStr for FairnessMetric {
    type Err = FairnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sp" | "statistical_parity" => Ok(FairnessMetric::StatisticalParity),
            "pp" | "predictive_parity" => Ok(FairnessMetric::PredictiveParity),
            "eo" | "equalized_odds" => Ok(FairnessMetric::EqualizedOdds),
            _ => Err(FairnessError::UnknownMetric(s.to_string())),
        }
    }
}

/// Confusion counts for one sensitive group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub n: u64,
    pub predicted_positive: u64,
    pub actual_positive: u64,
    pub true_positive: u64,
    pub false_positive: u64,
}

impl GroupCounts {
    pub fn actual_negative(&self) -> u64 {
        self.n - self.actual_positive
    }
}

/// Rates that enter the metric formula for one group. Only the ones the
/// metric uses are filled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupRates {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_positive_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub false_positive_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub metric: FairnessMetric,
    pub value: f64,
    pub magnitude: f64,
    /// Exact signed value as `[numerator, denominator]`.
    pub exact_value: Ratio<i64>,
    pub exact_magnitude: Ratio<i64>,
    pub protected_rates: GroupRates,
    pub privileged_rates: GroupRates,
    pub protected_counts: GroupCounts,
    pub privileged_counts: GroupCounts,
}

impl BiasReport {
    pub fn is_unbiased(&self) -> bool {
        self.exact_magnitude == Ratio::from_integer(0)
    }
}

fn abs(r: Ratio<i64>) -> Ratio<i64> {
    if r < Ratio::from_integer(0) {
        -r
    } else {
        r
    }
}

fn to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn rate(
    num: u64,
    den: u64,
    metric: FairnessMetric,
    group: Group,
    denominator: &'static str,
) -> Result<Ratio<i64>, FairnessError> {
    if den == 0 {
        return Err(FairnessError::UndefinedMetric { metric, group, denominator });
    }
    Ok(Ratio::new(num as i64, den as i64))
}

pub fn group_counts(predictions: &[u8], labels: &[u8], sensitive: &[u8]) -> Result<[GroupCounts; 2], FairnessError> {
    if predictions.len() != labels.len() || labels.len() != sensitive.len() {
        return Err(FairnessError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
            sensitive: sensitive.len(),
        });
    }
    let mut counts = [GroupCounts::default(); 2];
    for ((&p, &y), &s) in predictions.iter().zip(labels).zip(sensitive) {
        let c = &mut counts[usize::from(s == 1)];
        c.n += 1;
        c.predicted_positive += u64::from(p == 1);
        c.actual_positive += u64::from(y == 1);
        c.true_positive += u64::from(p == 1 && y == 1);
        c.false_positive += u64::from(p == 1 && y == 0);
    }
    Ok(counts)
}

/// Scores binary predictions against labels. `sensitive[i] == 1` marks the
/// privileged group.
pub fn compute_bias(
    metric: FairnessMetric,
    predictions: &[u8],
    labels: &[u8],
    sensitive: &[u8],
) -> Result<BiasReport, FairnessError> {
    let [prot, priv_] = group_counts(predictions, labels, sensitive)?;
    if prot.n == 0 {
        return Err(FairnessError::EmptyGroup(Group::Protected));
    }
    if priv_.n == 0 {
        return Err(FairnessError::EmptyGroup(Group::Privileged));
    }
    let mut rates = [GroupRates::default(); 2];
    let (value, magnitude) = match metric {
        FairnessMetric::StatisticalParity => {
            let mut r = [Ratio::from_integer(0); 2];
            for (i, (c, g)) in [(prot, Group::Protected), (priv_, Group::Privileged)].into_iter().enumerate() {
                r[i] = rate(c.predicted_positive, c.n, metric, g, "rows")?;
                rates[i].positive_rate = Some(to_f64(r[i]));
            }
            let v = r[0] - r[1];
            (v, abs(v))
        }
        FairnessMetric::PredictiveParity => {
            let mut r = [Ratio::from_integer(0); 2];
            for (i, (c, g)) in [(prot, Group::Protected), (priv_, Group::Privileged)].into_iter().enumerate() {
                r[i] = rate(c.true_positive, c.predicted_positive, metric, g, "predicted positives")?;
                rates[i].precision = Some(to_f64(r[i]));
            }
            let v = r[0] - r[1];
            (v, abs(v))
        }
        FairnessMetric::EqualizedOdds => {
            let mut tpr = [Ratio::from_integer(0); 2];
            let mut fpr = [Ratio::from_integer(0); 2];
            for (i, (c, g)) in [(prot, Group::Protected), (priv_, Group::Privileged)].into_iter().enumerate() {
                tpr[i] = rate(c.true_positive, c.actual_positive, metric, g, "actual positives")?;
                fpr[i] = rate(c.false_positive, c.actual_negative(), metric, g, "actual negatives")?;
                rates[i].true_positive_rate = Some(to_f64(tpr[i]));
                rates[i].false_positive_rate = Some(to_f64(fpr[i]));
            }
            let half = Ratio::new(1, 2);
            let (dt, df) = (tpr[0] - tpr[1], fpr[0] - fpr[1]);
            ((dt + df) * half, (abs(dt) + abs(df)) * half)
        }
    };
    Ok(BiasReport {
        metric,
        value: to_f64(value),
        magnitude: to_f64(magnitude),
        exact_value: value,
        exact_magnitude: magnitude,
        protected_rates: rates[0],
        privileged_rates: rates[1],
        protected_counts: prot,
        privileged_counts: priv_,
    })
}

pub fn accuracy(predictions: &[u8], labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    correct as f64 / labels.len() as f64
}

/// Accuracy drop in percentage points; negative when accuracy improved.
pub fn accuracy_reduction(before: f64, after: f64) -> f64 {
    100.0 * (before - after)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContributionMethod {
    Unlearning,
    Retrain,
}

/// Effect on bias and accuracy of removing one training subset.
///
/// `phi`, `bias_reduction` and `bias_after` are `None` when the metric is
/// undefined on the model trained without the subset; `undefined_reason`
/// then says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionResult {
    pub predicate: String,
    pub support: f64,
    pub count: usize,
    pub method: ContributionMethod,
    pub bias_before: f64,
    pub bias_after: Option<f64>,
    pub phi: Option<f64>,
    pub bias_reduction: Option<f64>,
    pub accuracy_before: f64,
    pub accuracy_after: f64,
    pub accuracy_reduction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undefined_reason: Option<String>,
}

impl ContributionResult {
    pub fn is_defined(&self) -> bool {
        self.phi.is_some()
    }

    /// Def. of responsibility: removing the subset lowers the bias.
    pub fn is_responsible(&self) -> bool {
        self.phi.is_some_and(|p| p < 0.0)
    }
}

/// Relative change of bias magnitude.
pub fn phi(bias_before: f64, bias_after: f64) -> f64 {
    (bias_after - bias_before) / bias_before
}

/// Bias and accuracy of a reference model on the test split, shared by every
/// contribution computed against it.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub metric: FairnessMetric,
    pub report: BiasReport,
    pub accuracy: f64,
}

impl Baseline {
    pub fn measure(forest: &DareForest, metric: FairnessMetric, test: &Dataset) -> Result<Self, FairnessError> {
        let pred = forest.predict(test)?;
        let report = compute_bias(metric, &pred.labels, test.labels(), test.sensitive())?;
        if report.is_unbiased() {
            return Err(FairnessError::OriginalUnbiased(metric));
        }
        Ok(Self {
            metric,
            report,
            accuracy: accuracy(&pred.labels, test.labels()),
        })
    }

    /// Scores a model trained (or unlearned) without `sel`.
    pub fn compare(
        &self,
        model: &DareForest,
        sel: &SubsetSelection,
        test: &Dataset,
        method: ContributionMethod,
    ) -> Result<ContributionResult, FairnessError> {
        let pred = model.predict(test)?;
        let acc = accuracy(&pred.labels, test.labels());
        let before = self.report.magnitude;
        let mut result = ContributionResult {
            predicate: sel.predicate.to_string(),
            support: sel.support,
            count: sel.count,
            method,
            bias_before: before,
            bias_after: None,
            phi: None,
            bias_reduction: None,
            accuracy_before: self.accuracy,
            accuracy_after: acc,
            accuracy_reduction: accuracy_reduction(self.accuracy, acc),
            undefined_reason: None,
        };
        match compute_bias(self.metric, &pred.labels, test.labels(), test.sensitive()) {
            Ok(after) => {
                let p = phi(before, after.magnitude);
                result.bias_after = Some(after.magnitude);
                result.phi = Some(p);
                result.bias_reduction = Some(-100.0 * p);
            }
            Err(e @ (FairnessError::UndefinedMetric { .. } | FairnessError::EmptyGroup(_))) => {
                log::warn!("contribution of {} is undefined: {e}", sel.predicate);
                result.undefined_reason = Some(e.to_string());
            }
            Err(e) => return Err(e),
        }
        Ok(result)
    }

    /// Unlearns `sel` from a private copy of `forest`; the caller's forest is
    /// never mutated.
    pub fn unlearning_contribution(
        &self,
        forest: &DareForest,
        sel: &SubsetSelection,
        test: &Dataset,
    ) -> Result<ContributionResult, FairnessError> {
        let snapshot = forest.snapshot();
        let mut copy = snapshot.restore();
        copy.delete(&sel.member_ids)?;
        self.compare(&copy, sel, test, ContributionMethod::Unlearning)
    }
}

/// Contribution of `sel` estimated by deleting it from `forest`.
pub fn subset_contribution(
    forest: &DareForest,
    sel: &SubsetSelection,
    metric: FairnessMetric,
    test: &Dataset,
) -> Result<ContributionResult, FairnessError> {
    Baseline::measure(forest, metric, test)?.unlearning_contribution(forest, sel, test)
}

/// Ground-truth contributions: each subset is removed from the training data
/// and a new forest is fitted from scratch with `params`.
pub struct RetrainOracle<'a> {
    train: &'a Dataset,
    test: &'a Dataset,
    params: ForestParams,
    baseline: Baseline,
}

impl<'a> RetrainOracle<'a> {
    /// Fits the reference forest on all of `train`.
    pub fn new(
        train: &'a Dataset,
        test: &'a Dataset,
        metric: FairnessMetric,
        params: &ForestParams,
    ) -> Result<Self, FairnessError> {
        let reference = DareForest::fit(train, params)?;
        Self::with_reference(train, test, metric, params, &reference)
    }

    /// Uses an already fitted forest as the reference model.
    pub fn with_reference(
        train: &'a Dataset,
        test: &'a Dataset,
        metric: FairnessMetric,
        params: &ForestParams,
        reference: &DareForest,
    ) -> Result<Self, FairnessError> {
        Ok(Self {
            train,
            test,
            params: params.clone(),
            baseline: Baseline::measure(reference, metric, test)?,
        })
    }

    pub fn baseline(&self) -> &Baseline {
        &self.baseline
    }

    /// Fits a forest on `train` minus `sel`.
    pub fn retrain_without(&self, sel: &SubsetSelection) -> Result<DareForest, FairnessError> {
        let rest = self.train.without_rows(&sel.member_ids)?;
        Ok(DareForest::fit(&rest, &self.params)?)
    }

    pub fn contribution(&self, sel: &SubsetSelection) -> Result<ContributionResult, FairnessError> {
        let model = self.retrain_without(sel)?;
        self.baseline.compare(&model, sel, self.test, ContributionMethod::Retrain)
    }
}

/// Contribution of `sel` measured by retraining without it.
pub fn retrain_contribution(
    train: &Dataset,
    sel: &SubsetSelection,
    metric: FairnessMetric,
    test: &Dataset,
    params: &ForestParams,
) -> Result<ContributionResult, FairnessError> {
    RetrainOracle::new(train, test, metric, params)?.contribution(sel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Ratio<i64> {
        Ratio::new(n, d)
    }

    // 12 rows: protected = first 6, privileged = last 6.
    //   protected:  y = 1 1 1 0 0 0   pred = 1 0 0 1 0 0
    //   privileged: y = 1 1 0 0 0 0   pred = 1 1 1 1 0 0
    fn fixture() -> (Vec<u8>, Vec<u8>, Vec<u8>) {
        let labels = vec![1, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 0];
        let preds = vec![1, 0, 0, 1, 0, 0, 1, 1, 1, 1, 0, 0];
        let sens = vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1];
        (preds, labels, sens)
    }

    #[test]
    fn twelve_row_fixture() {
        let (p, y, s) = fixture();
        let sp = compute_bias(FairnessMetric::StatisticalParity, &p, &y, &s).unwrap();
        // 2/6 - 4/6
        assert_eq!(sp.exact_value, r(-1, 3));
        assert_eq!(sp.exact_magnitude, r(1, 3));
        let pp = compute_bias(FairnessMetric::PredictiveParity, &p, &y, &s).unwrap();
        // 1/2 - 2/4
        assert_eq!(pp.exact_value, r(0, 1));
        let eo = compute_bias(FairnessMetric::EqualizedOdds, &p, &y, &s).unwrap();
        // TPR 1/3 vs 2/2, FPR 1/3 vs 2/4
        assert_eq!(eo.exact_value, r(1, 2) * (r(1, 3) - r(1, 1) + r(1, 3) - r(1, 2)));
        assert_eq!(eo.exact_magnitude, r(1, 2) * (r(2, 3) + r(1, 6)));
        assert_eq!(eo.protected_counts.true_positive, 1);
        assert_eq!(eo.privileged_counts.false_positive, 2);
        assert_eq!(eo.privileged_rates.false_positive_rate, Some(0.5));
    }

    #[test]
    fn sp_rates_point_three_and_point_four() {
        let mut p = vec![0u8; 20];
        let s: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        p[..3].fill(1);
        p[10..14].fill(1);
        let rep = compute_bias(FairnessMetric::StatisticalParity, &p, &[0; 20], &s).unwrap();
        assert_eq!(rep.exact_value, r(-1, 10));
        assert!((rep.value + 0.1).abs() < 1e-15);
        assert!((rep.magnitude - 0.1).abs() < 1e-15);
    }

    #[test]
    fn undefined_metrics_name_the_denominator() {
        let (mut p, y, s) = fixture();
        p[..6].fill(0);
        let err = compute_bias(FairnessMetric::PredictiveParity, &p, &y, &s).unwrap_err();
        assert!(matches!(
            err,
            FairnessError::UndefinedMetric { group: Group::Protected, denominator: "predicted positives", .. }
        ));
        let y1 = vec![1u8; 12];
        let err = compute_bias(FairnessMetric::EqualizedOdds, &p, &y1, &s).unwrap_err();
        assert!(err.to_string().contains("actual negatives"), "{err}");
        let err = compute_bias(FairnessMetric::StatisticalParity, &p, &y, &[0; 12]).unwrap_err();
        assert!(matches!(err, FairnessError::EmptyGroup(Group::Privileged)));
        assert!(matches!(
            compute_bias(FairnessMetric::StatisticalParity, &p, &y, &s[..3]),
            Err(FairnessError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn metric_names_parse() {
        for m in FairnessMetric::ALL {
            assert_eq!(m.short_name().parse::<FairnessMetric>().unwrap(), m);
            assert_eq!(m.to_string().parse::<FairnessMetric>().unwrap(), m);
        }
        assert!("xx".parse::<FairnessMetric>().is_err());
    }

    #[test]
    fn accuracy_arithmetic() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]), 1.0);
        assert!((accuracy_reduction(0.91, 0.88) - 3.0).abs() < 1e-9);
        assert!(accuracy_reduction(0.88, 0.90) < 0.0);
        assert_eq!(phi(0.10, 0.05), -0.5);
        assert_eq!(phi(0.10, 0.10), 0.0);
    }

    fn rows() -> impl Strategy<Value = Vec<(u8, u8, u8)>> {
        proptest::collection::vec((0u8..2, 0u8..2, 0u8..2), 1..60)
    }

    proptest! {
        #[test]
        fn group_swap_negates(rows in rows()) {
            let p: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let y: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let s: Vec<u8> = rows.iter().map(|r| r.2).collect();
            let swapped: Vec<u8> = s.iter().map(|v| 1 - v).collect();
            for m in FairnessMetric::ALL {
                let (Ok(a), Ok(b)) = (compute_bias(m, &p, &y, &s), compute_bias(m, &p, &y, &swapped)) else { continue };
                prop_assert_eq!(a.exact_value, -b.exact_value);
                prop_assert_eq!(a.exact_magnitude, b.exact_magnitude);
                prop_assert!(abs(a.exact_value) <= a.exact_magnitude);
            }
        }

        #[test]
        fn identical_groups_have_zero_bias(rows in proptest::collection::vec((0u8..2, 0u8..2), 1..30)) {
            let mut p = Vec::new();
            let mut y = Vec::new();
            let mut s = Vec::new();
            for g in 0..2u8 {
                for &(pi, yi) in &rows {
                    p.push(pi);
                    y.push(yi);
                    s.push(g);
                }
            }
            for m in FairnessMetric::ALL {
                if let Ok(rep) = compute_bias(m, &p, &y, &s) {
                    prop_assert!(rep.is_unbiased());
                    prop_assert_eq!(rep.value, 0.0);
                }
            }
        }
    }
}
