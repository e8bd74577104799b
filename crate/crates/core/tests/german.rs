//! German Credit loading and preparation against the published table stats.

use std::path::{Path, PathBuf};

use biasslice::dataset::{evaluate_predicate, load_dataset, Dataset, Literal, Predicate, Role};
use biasslice::fairness::{subset_contribution, FairnessMetric};
use biasslice::forest::{DareForest, ForestParams};
use biasslice::pipeline::{prepare, RunConfig};
use biasslice::report::label_proportions;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn german() -> Dataset {
    let dir = data_dir();
    load_dataset(&dir.join("german_credit.csv"), &dir.join("german_credit.schema.json"), Role::Train).unwrap()
}

#[test]
fn shape_and_group_sizes() {
    let d = german();
    assert_eq!(d.n_rows(), 1000);
    assert_eq!(d.n_attributes(), 21);
    assert_eq!(d.dropped_rows(), 0);
    let privileged = d.sensitive().iter().filter(|&&s| s == 1).count();
    assert_eq!(privileged, 589);
}

#[test]
fn positive_rates_per_group() {
    let d = german();
    let everyone = evaluate_predicate(&Predicate::all(), &d).unwrap();
    let p = label_proportions(&d, &everyone);
    assert_eq!((p.protected.rows, p.protected.positives), (411, 263));
    assert_eq!((p.privileged.rows, p.privileged.positives), (589, 437));
    assert!((p.protected.rate.unwrap() - 0.6399).abs() < 5e-5);
    assert!((p.privileged.rate.unwrap() - 0.7419).abs() < 5e-5);
}

#[test]
fn gs1_pattern_on_training_split() {
    let dir = data_dir();
    let cfg = RunConfig::new(dir.join("german_credit.csv"), dir.join("german_credit.schema.json"), PathBuf::new());
    let prepared = prepare(&cfg).unwrap();
    let schema = prepared.train.schema();
    let liable = schema.attribute("num_people_liable_to_maint").unwrap();
    // The two-valued attribute bins into {<= 1, > 1}; "high" is the upper bin.
    let high = liable.categories().last().unwrap().clone();
    assert_eq!(liable.categories().len(), 2);
    let gs1 = Predicate::new(vec![
        Literal::eq("status_chec_acc", "<0 DM"),
        Literal::eq("num_people_liable_to_maint", high),
    ])
    .unwrap();
    let sel = evaluate_predicate(&gs1, &prepared.train).unwrap();
    println!("GS1 on the training split: {} rows, support {:.4}", sel.count, sel.support);
    assert!(sel.support > 0.03 && sel.support < 0.07, "{}", sel.support);

    let forest = DareForest::fit(&prepared.train, &ForestParams::default()).unwrap();
    let c = subset_contribution(&forest, &sel, FairnessMetric::StatisticalParity, &prepared.test).unwrap();
    println!("GS1 unlearning bias reduction: {:?}", c.bias_reduction);
    assert!(c.bias_reduction.is_some_and(|r| r > 0.0));
}
