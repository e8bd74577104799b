//! Fairness debugging for random forests through machine unlearning.
//!
//! A removal-enabled random forest ([`forest::DareForest`]) is trained on
//! tabular data, its test predictions are scored with group-fairness metrics
//! ([`fairness`]), and a pruned apriori lattice search ([`lattice`]) ranks
//! conjunctive training subsets by how much unlearning them reduces the bias.

pub mod dataset;
pub mod fairness;
pub mod forest;
pub mod lattice;
pub mod pipeline;
pub mod report;
pub mod synth;
