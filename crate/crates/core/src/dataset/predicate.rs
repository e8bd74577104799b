use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Column, Dataset, DatasetError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Op {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Ne => "!=",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Ge => ">=",
            Op::Gt => ">",
        }
    }

    fn is_ordered(self) -> bool {
        !matches!(self, Op::Eq | Op::Ne)
    }

    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Op::Eq => lhs == rhs,
            Op::Ne => lhs != rhs,
            Op::Lt => lhs < rhs,
            Op::Le => lhs <= rhs,
            Op::Ge => lhs >= rhs,
            Op::Gt => lhs > rhs,
        }
    }
}

/// `attribute op value`. Values are written as their text form: a category
/// label for categorical attributes, a number for continuous ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub attribute: String,
    pub op: Op,
    pub value: String,
}

impl Literal {
    pub fn new(attribute: impl Into<String>, op: Op, value: impl Into<String>) -> Self {
        Self {
            attribute: attribute.into(),
            op,
            value: value.into(),
        }
    }

    pub fn eq(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Self::new(attribute, Op::Eq, value)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} '{}'", self.attribute, self.op.symbol(), self.value)
    }
}

/// Conjunction of literals. Literals are kept sorted and deduplicated, so
/// two predicates over the same literal set compare equal and share one
/// `canonical_key`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    canonical_key: String,
    literals: Vec<Literal>,
}

impl Predicate {
    pub fn new(mut literals: Vec<Literal>) -> Result<Self, DatasetError> {
        literals.sort();
        literals.dedup();
        check_consistency(&literals)?;
        let canonical_key = literals
            .iter()
            .map(|l| format!("{}{}{:?}", l.attribute, l.op.symbol(), l.value))
            .collect::<Vec<_>>()
            .join(" & ");
        Ok(Self { canonical_key, literals })
    }

    /// The vacuous conjunction, matching every row.
    pub fn all() -> Self {
        Self {
            canonical_key: String::new(),
            literals: Vec::new(),
        }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn canonical_key(&self) -> &str {
        &self.canonical_key
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn mentions(&self, attribute: &str) -> bool {
        self.literals.iter().any(|l| l.attribute == attribute)
    }

    /// Literal-set inclusion.
    pub fn is_subset_of(&self, other: &Predicate) -> bool {
        self.literals.iter().all(|l| other.literals.binary_search(l).is_ok())
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literals.is_empty() {
            return f.write_str("(all rows)");
        }
        for (i, lit) in self.literals.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{lit}")?;
        }
        Ok(())
    }
}

// Schema-free satisfiability check per attribute: equalities must agree and
// numeric bounds must leave a non-empty interval.
fn check_consistency(literals: &[Literal]) -> Result<(), DatasetError> {
    let mut by_attr: BTreeMap<&str, Vec<&Literal>> = BTreeMap::new();
    for lit in literals {
        by_attr.entry(&lit.attribute).or_default().push(lit);
    }
    for (attr, lits) in by_attr {
        let contradiction = || DatasetError::Contradiction(attr.to_string());
        let equals: Vec<&str> = lits.iter().filter(|l| l.op == Op::Eq).map(|l| l.value.as_str()).collect();
        if equals.windows(2).any(|w| w[0] != w[1]) {
            return Err(contradiction());
        }
        if let Some(v) = equals.first() {
            if lits.iter().any(|l| l.op == Op::Ne && l.value == *v) {
                return Err(contradiction());
            }
        }
        let numeric: Option<Vec<(Op, f64)>> = lits
            .iter()
            .filter(|l| l.op.is_ordered() || l.op == Op::Eq)
            .map(|l| l.value.parse::<f64>().ok().map(|v| (l.op, v)))
            .collect();
        let Some(numeric) = numeric else { continue };
        let (mut lo, mut lo_strict) = (f64::NEG_INFINITY, false);
        let (mut hi, mut hi_strict) = (f64::INFINITY, false);
        for &(op, v) in &numeric {
            match op {
                Op::Gt | Op::Ge if v > lo || (v == lo && op == Op::Gt) => {
                    lo = v;
                    lo_strict = op == Op::Gt;
                }
                Op::Lt | Op::Le if v < hi || (v == hi && op == Op::Lt) => {
                    hi = v;
                    hi_strict = op == Op::Lt;
                }
                _ => {}
            }
        }
        if lo > hi || (lo == hi && (lo_strict || hi_strict)) {
            return Err(contradiction());
        }
        for &(op, v) in &numeric {
            if op == Op::Eq && (v < lo || v > hi || (v == lo && lo_strict) || (v == hi && hi_strict)) {
                return Err(contradiction());
            }
        }
    }
    Ok(())
}

/// Rows matched by a predicate. `member_ids` are row ids of the evaluated
/// dataset, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetSelection {
    pub predicate: Predicate,
    pub member_ids: Vec<u32>,
    pub count: usize,
    pub total: usize,
    pub support: f64,
}

impl SubsetSelection {
    pub fn new(predicate: Predicate, mut member_ids: Vec<u32>, total: usize) -> Self {
        member_ids.sort_unstable();
        let count = member_ids.len();
        Self {
            predicate,
            member_ids,
            count,
            total,
            support: count as f64 / total as f64,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }
}

enum Matcher {
    Category { column: usize, code: u32, equal: bool },
    Numeric { column: usize, op: Op, value: f64 },
}

impl Matcher {
    fn compile(lit: &Literal, d: &Dataset) -> Result<Matcher, DatasetError> {
        let schema = d.schema();
        let column = schema
            .attribute_index(&lit.attribute)
            .ok_or_else(|| DatasetError::UnknownAttribute(lit.attribute.clone()))?;
        let attr = &schema.attributes[column];
        let out_of_domain = || DatasetError::OutOfDomain {
            attribute: lit.attribute.clone(),
            value: lit.value.clone(),
        };
        if lit.op.is_ordered() && !attr.is_ordered() {
            return Err(DatasetError::UnorderedOperator {
                attribute: lit.attribute.clone(),
                op: lit.op.symbol().to_string(),
            });
        }
        if attr.is_categorical() {
            let code = attr.category_index(&lit.value).ok_or_else(out_of_domain)?;
            Ok(match lit.op {
                Op::Eq => Matcher::Category { column, code, equal: true },
                Op::Ne => Matcher::Category { column, code, equal: false },
                op => Matcher::Numeric { column, op, value: code as f64 },
            })
        } else {
            let value: f64 = lit.value.parse().map_err(|_| out_of_domain())?;
            if let Some([lo, hi]) = attr.range {
                if value < lo || value > hi {
                    return Err(out_of_domain());
                }
            }
            Ok(Matcher::Numeric { column, op: lit.op, value })
        }
    }

    fn matches(&self, d: &Dataset, row: usize) -> bool {
        match *self {
            Matcher::Category { column, code, equal } => match d.column(column) {
                Column::Categorical(codes) => (codes[row] == code) == equal,
                Column::Continuous(_) => unreachable!(),
            },
            Matcher::Numeric { column, op, value } => op.holds(d.column(column).numeric(row), value),
        }
    }
}

/// Rows of `d` satisfying every literal of `p`.
pub fn evaluate_predicate(p: &Predicate, d: &Dataset) -> Result<SubsetSelection, DatasetError> {
    let matchers = p
        .literals()
        .iter()
        .map(|lit| Matcher::compile(lit, d))
        .collect::<Result<Vec<_>, _>>()?;
    let members = (0..d.n_rows())
        .filter(|&row| matchers.iter().all(|m| m.matches(d, row)))
        .map(|row| d.row_ids()[row])
        .collect();
    Ok(SubsetSelection::new(p.clone(), members, d.n_rows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AttributeSpec, Role, Schema};
    use proptest::prelude::*;

    fn people() -> Dataset {
        let schema = Schema {
            attributes: vec![
                AttributeSpec::categorical("Gender", vec!["Male".into(), "Female".into()]),
                AttributeSpec::categorical("city", vec!["a".into(), "b".into(), "c".into()]),
                AttributeSpec::continuous("age"),
            ],
            sensitive_attribute: "Gender".into(),
            privileged_value: "Male".into(),
            positive_label: "1".into(),
            label_column: "y".into(),
            negative_label: None,
        };
        Dataset::new(
            schema,
            vec![
                Column::Categorical(vec![0; 6]),
                Column::Categorical(vec![0, 1, 2, 0, 1, 2]),
                Column::Continuous(vec![20.0, 30.0, 40.0, 50.0, 60.0, 70.0]),
            ],
            vec![0, 1, 0, 1, 0, 1],
            Role::Train,
        )
        .unwrap()
    }

    #[test]
    fn empty_predicate_selects_everything() {
        let d = people();
        let sel = evaluate_predicate(&Predicate::all(), &d).unwrap();
        assert_eq!(sel.member_ids, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(sel.support, 1.0);
    }

    #[test]
    fn absent_category_selects_nothing() {
        let d = people();
        let p = Predicate::new(vec![Literal::eq("Gender", "Female")]).unwrap();
        let sel = evaluate_predicate(&p, &d).unwrap();
        assert!(sel.member_ids.is_empty());
        assert_eq!(sel.support, 0.0);
    }

    #[test]
    fn ordered_ops_on_continuous() {
        let d = people();
        let p = Predicate::new(vec![
            Literal::new("age", Op::Gt, "30"),
            Literal::new("age", Op::Le, "60"),
            Literal::new("city", Op::Ne, "a"),
        ])
        .unwrap();
        let sel = evaluate_predicate(&p, &d).unwrap();
        assert_eq!(sel.member_ids, vec![2, 4]);
        assert_eq!(sel.count, 2);
    }

    #[test]
    fn rejects_unknown_attribute_and_domain() {
        let d = people();
        let p = Predicate::new(vec![Literal::eq("zip", "1")]).unwrap();
        assert!(matches!(evaluate_predicate(&p, &d), Err(DatasetError::UnknownAttribute(_))));
        let p = Predicate::new(vec![Literal::eq("city", "z")]).unwrap();
        assert!(matches!(evaluate_predicate(&p, &d), Err(DatasetError::OutOfDomain { .. })));
        let p = Predicate::new(vec![Literal::new("city", Op::Lt, "b")]).unwrap();
        assert!(matches!(evaluate_predicate(&p, &d), Err(DatasetError::UnorderedOperator { .. })));
    }

    #[test]
    fn contradictions_are_rejected() {
        assert!(Predicate::new(vec![Literal::eq("A", "1"), Literal::eq("A", "2")]).is_err());
        assert!(Predicate::new(vec![Literal::eq("A", "1"), Literal::new("A", Op::Ne, "1")]).is_err());
        assert!(Predicate::new(vec![Literal::new("Age", Op::Lt, "50"), Literal::new("Age", Op::Gt, "70")]).is_err());
        assert!(Predicate::new(vec![Literal::new("Age", Op::Lt, "50"), Literal::new("Age", Op::Ge, "50")]).is_err());
        assert!(Predicate::new(vec![Literal::new("Age", Op::Le, "50"), Literal::new("Age", Op::Ge, "50")]).is_ok());
        assert!(Predicate::new(vec![Literal::new("Age", Op::Gt, "30"), Literal::new("Age", Op::Lt, "50")]).is_ok());
    }

    #[test]
    fn display_matches_table_pattern_format() {
        let p = Predicate::new(vec![
            Literal::eq("status_chec_acc", "<0 DM"),
            Literal::eq("num_people_liable_to_maint", "high"),
        ])
        .unwrap();
        assert_eq!(p.to_string(), "num_people_liable_to_maint = 'high', status_chec_acc = '<0 DM'");
    }

    proptest! {
        #[test]
        fn canonical_key_ignores_literal_order(perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle()) {
            let lits = [
                Literal::eq("a", "1"),
                Literal::eq("b", "x y"),
                Literal::new("c", Op::Ge, "3"),
                Literal::new("d", Op::Ne, "q"),
            ];
            let shuffled: Vec<Literal> = perm.iter().map(|&i| lits[i].clone()).collect();
            let p = Predicate::new(shuffled).unwrap();
            let q = Predicate::new(lits.to_vec()).unwrap();
            prop_assert_eq!(p.canonical_key(), q.canonical_key());
            prop_assert_eq!(p, q);
        }

        #[test]
        fn keys_differ_for_different_literal_sets(a in 0u8..3, b in 0u8..3) {
            let p = Predicate::new(vec![Literal::eq("x", a.to_string())]).unwrap();
            let q = Predicate::new(vec![Literal::eq("x", b.to_string())]).unwrap();
            prop_assert_eq!(p.canonical_key() == q.canonical_key(), a == b);
        }

        #[test]
        fn more_literals_select_fewer_rows(city in 0usize..3, bound in 0u32..8) {
            let d = people();
            let cities = ["a", "b", "c"];
            let p = Predicate::new(vec![Literal::eq("city", cities[city])]).unwrap();
            let q = Predicate::new(vec![
                Literal::eq("city", cities[city]),
                Literal::new("age", Op::Le, (bound * 10).to_string()),
            ]).unwrap();
            prop_assert!(p.is_subset_of(&q));
            let sp = evaluate_predicate(&p, &d).unwrap();
            let sq = evaluate_predicate(&q, &d).unwrap();
            prop_assert!(sq.member_ids.iter().all(|id| sp.member_ids.contains(id)));
            prop_assert!(sq.support <= sp.support);
            prop_assert_eq!(sq.support, sq.member_ids.len() as f64 / d.n_rows() as f64);
        }
    }
}
