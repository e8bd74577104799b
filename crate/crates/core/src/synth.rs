//! Seeded synthetic datasets for tests, fidelity runs and benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{AttributeSpec, Column, Dataset, Literal, Predicate, Role, Schema};

pub const PROTECTED: &str = "protected";
pub const PRIVILEGED: &str = "privileged";

fn labels_of(prefix: &str, k: usize) -> Vec<String> {
    (0..k).map(|i| format!("{prefix}{i}")).collect()
}

fn group_spec() -> AttributeSpec {
    AttributeSpec::categorical("group", vec![PROTECTED.into(), PRIVILEGED.into()])
}

fn schema(attributes: Vec<AttributeSpec>) -> Schema {
    Schema {
        attributes,
        sensitive_attribute: "group".into(),
        privileged_value: PRIVILEGED.into(),
        positive_label: "1".into(),
        label_column: "y".into(),
        negative_label: Some("0".into()),
    }
}

/// Two uniform continuous attributes with xor labels (10% label noise) and
/// a sensitive group independent of everything else.
pub fn xor_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut group = Vec::with_capacity(n);
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        let mut label = (a > 0.5) ^ (b > 0.5);
        if rng.gen_bool(0.1) {
            label = !label;
        }
        group.push(u32::from(rng.gen_bool(0.5)));
        x1.push(a);
        x2.push(b);
        y.push(u8::from(label));
    }
    Dataset::new(
        schema(vec![group_spec(), AttributeSpec::continuous("x1"), AttributeSpec::continuous("x2")]),
        vec![Column::Categorical(group), Column::Continuous(x1), Column::Continuous(x2)],
        y,
        Role::Train,
    )
    .expect("well-formed synthetic data")
}

/// Categorical data whose positive rate is lower for the protected group.
///
/// `attributes` extra attributes `a0..` with `values` categories each; the
/// label depends on `a0` and, with strength `bias`, on the group.
pub fn biased_categorical(n: usize, attributes: usize, values: usize, bias: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = vec![group_spec()];
    for j in 0..attributes {
        specs.push(AttributeSpec::categorical(format!("a{j}"), labels_of(&format!("v{j}_"), values)));
    }
    let mut cols: Vec<Vec<u32>> = vec![Vec::with_capacity(n); attributes + 1];
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let g = u32::from(rng.gen_bool(0.5));
        cols[0].push(g);
        for col in cols.iter_mut().skip(1) {
            col.push(rng.gen_range(0..values as u32));
        }
        let base = 0.3 + 0.4 * (cols[1].last().copied().unwrap_or(0) as f64 / (values.max(2) - 1) as f64);
        let p = if g == 1 { base + bias / 2.0 } else { base - bias / 2.0 };
        y.push(u8::from(rng.gen_bool(p.clamp(0.0, 1.0))));
    }
    Dataset::new(schema(specs), cols.into_iter().map(Column::Categorical).collect(), y, Role::Train)
        .expect("well-formed synthetic data")
}

/// A dataset with a planted biased subset, and the predicate describing it.
pub struct Planted {
    pub train: Dataset,
    pub test: Dataset,
    pub predicate: Predicate,
}

/// Labels follow a three-level `signal` attribute independently of the group,
/// except inside `a = 'a2' AND b = 'b1'` in the training split, where
/// protected rows are labelled 0 and privileged rows 1. The test split is
/// drawn from the clean distribution.
pub fn planted_bias(n_train: usize, n_test: usize, seed: u64) -> Planted {
    let specs = vec![
        group_spec(),
        AttributeSpec::categorical("a", labels_of("a", 3)),
        AttributeSpec::categorical("b", labels_of("b", 3)),
        AttributeSpec::categorical("c", labels_of("c", 2)),
        AttributeSpec::categorical("d", labels_of("d", 3)),
        AttributeSpec::categorical("signal", vec!["low".into(), "mid".into(), "high".into()]),
    ];
    let draw = |n: usize, seed: u64, planted: bool| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<u32>> = vec![Vec::with_capacity(n); specs.len()];
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let g = u32::from(rng.gen_bool(0.5));
            let a = rng.gen_range(0..3u32);
            let b = rng.gen_range(0..3u32);
            let c = rng.gen_range(0..2u32);
            let d = rng.gen_range(0..3u32);
            let signal = rng.gen_range(0..3u32);
            let p = [0.15, 0.3, 0.85][signal as usize];
            let mut label = rng.gen_bool(p);
            if planted && a == 2 && b == 1 {
                label = g == 1;
            }
            for (col, v) in cols.iter_mut().zip([g, a, b, c, d, signal]) {
                col.push(v);
            }
            y.push(u8::from(label));
        }
        Dataset::new(schema(specs.clone()), cols.into_iter().map(Column::Categorical).collect(), y, Role::Train)
            .expect("well-formed synthetic data")
    };
    let train = draw(n_train, seed, true);
    let test = draw(n_test, seed.wrapping_add(0x9e37_79b9), false).with_role(Role::Test);
    let predicate = Predicate::new(vec![Literal::eq("a", "a2"), Literal::eq("b", "b1")]).expect("consistent");
    Planted { train, test, predicate }
}

/// Labels equal a binary `x` attribute; every (x, group) cell has the same
/// count, so a perfect classifier has zero disparity under every metric.
pub fn fair_dataset(copies: usize) -> Dataset {
    let specs = vec![
        group_spec(),
        AttributeSpec::categorical("x", vec!["no".into(), "yes".into()]),
    ];
    let mut group = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..copies {
        for g in 0..2u32 {
            for v in 0..2u32 {
                group.push(g);
                x.push(v);
                y.push(v as u8);
            }
        }
    }
    Dataset::new(schema(specs), vec![Column::Categorical(group), Column::Categorical(x)], y, Role::Train)
        .expect("well-formed synthetic data")
}

/// Mixed continuous/categorical data for timing runs: `p_continuous`
/// uniform attributes, a few categorical ones, labels from a noisy linear rule
/// that also leans on the group.
pub fn benchmark_dataset(n: usize, p_continuous: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = vec![group_spec()];
    for j in 0..p_continuous {
        specs.push(AttributeSpec::continuous(format!("x{j}")));
    }
    for j in 0..3 {
        specs.push(AttributeSpec::categorical(format!("c{j}"), labels_of(&format!("c{j}_"), 4)));
    }
    let mut group = Vec::with_capacity(n);
    let mut cont: Vec<Vec<f64>> = vec![Vec::with_capacity(n); p_continuous];
    let mut cats: Vec<Vec<u32>> = (0..3).map(|_| Vec::with_capacity(n)).collect();
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let g = u32::from(rng.gen_bool(0.6));
        let mut score = if g == 1 { 0.3 } else { -0.3 };
        for (j, col) in cont.iter_mut().enumerate() {
            let v: f64 = rng.gen();
            score += if j % 2 == 0 { v - 0.5 } else { 0.5 - v } / (1.0 + j as f64 / 2.0);
            col.push(v);
        }
        for col in cats.iter_mut() {
            let c = rng.gen_range(0..4u32);
            score += (c as f64 - 1.5) * 0.1;
            col.push(c);
        }
        score += rng.gen_range(-0.5..0.5);
        group.push(g);
        y.push(u8::from(score > 0.0));
    }
    let mut columns = vec![Column::Categorical(group)];
    columns.extend(cont.into_iter().map(Column::Continuous));
    columns.extend(cats.into_iter().map(Column::Categorical));
    Dataset::new(schema(specs), columns, y, Role::Train).expect("well-formed synthetic data")
}
