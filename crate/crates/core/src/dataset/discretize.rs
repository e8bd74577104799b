use super::{AttributeKind, AttributeSpec, Column, Dataset, DatasetError, Schema};

pub const DEFAULT_BINS: usize = 4;

#[derive(Debug, Clone)]
pub struct Discretized {
    pub dataset: Dataset,
    pub warnings: Vec<String>,
}

/// Quantile-bins every continuous attribute into an ordinal categorical one.
///
/// Cut-point `j` of `b` bins is the sorted value at position
/// `ceil(j * n / b) - 1`; a value `v` falls into the first bin whose upper
/// cut is `>= v`. Duplicate cuts and cuts at the maximum are dropped, so a
/// constant column ends up with a single bin. Categorical attributes pass
/// through untouched, which makes the operation idempotent.
pub fn discretize(d: &Dataset, bins_per_attribute: usize) -> Result<Discretized, DatasetError> {
    if bins_per_attribute < 2 {
        return Err(DatasetError::TooFewBins(bins_per_attribute));
    }
    let mut schema = d.schema().clone();
    let mut columns = Vec::with_capacity(d.n_attributes());
    let mut warnings = Vec::new();
    for (attr, column) in schema.attributes.iter_mut().zip(d.columns()) {
        match column {
            Column::Continuous(values) => {
                let cuts = quantile_cuts(values, bins_per_attribute);
                if cuts.is_empty() {
                    let msg = format!("attribute `{}` is constant; emitted a single bin", attr.name);
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                *attr = binned_spec(attr, cuts);
                columns.push(bin_column(values, attr.cut_points.as_deref().unwrap_or(&[])));
            }
            Column::Categorical(_) => columns.push(column.clone()),
        }
    }
    Ok(Discretized {
        dataset: d.replace_schema_and_columns(schema, columns),
        warnings,
    })
}

/// Bins `d`'s continuous attributes with the cut-points recorded in
/// `binned` (typically the training split's discretized schema).
pub fn apply_discretization(d: &Dataset, binned: &Schema) -> Result<Dataset, DatasetError> {
    let mut schema = d.schema().clone();
    let mut columns = Vec::with_capacity(d.n_attributes());
    for (attr, column) in schema.attributes.iter_mut().zip(d.columns()) {
        let reference = binned
            .attribute(&attr.name)
            .ok_or_else(|| DatasetError::UnknownAttribute(attr.name.clone()))?;
        match column {
            Column::Continuous(values) => {
                let cuts = reference.cut_points.clone().ok_or_else(|| {
                    DatasetError::InvalidSchema(format!("attribute `{}` has no recorded cut-points", attr.name))
                })?;
                *attr = reference.clone();
                columns.push(bin_column(values, &cuts));
            }
            Column::Categorical(_) => columns.push(column.clone()),
        }
    }
    Ok(d.replace_schema_and_columns(schema, columns))
}

fn quantile_cuts(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let max = sorted[n - 1];
    let mut cuts: Vec<f64> = (1..bins)
        .map(|j| sorted[(j * n).div_ceil(bins) - 1])
        .filter(|&c| c < max)
        .collect();
    cuts.dedup();
    cuts
}

fn bin_column(values: &[f64], cuts: &[f64]) -> Column {
    Column::Categorical(
        values
            .iter()
            .map(|&v| cuts.partition_point(|&c| c < v) as u32)
            .collect(),
    )
}

fn binned_spec(original: &AttributeSpec, cuts: Vec<f64>) -> AttributeSpec {
    AttributeSpec {
        name: original.name.clone(),
        kind: AttributeKind::Categorical,
        domain: Some(bin_labels(&cuts)),
        range: original.range,
        ordinal: true,
        cut_points: Some(cuts),
    }
}

fn bin_labels(cuts: &[f64]) -> Vec<String> {
    if cuts.is_empty() {
        return vec!["all".to_string()];
    }
    let mut labels = Vec::with_capacity(cuts.len() + 1);
    labels.push(format!("<= {}", cuts[0]));
    for w in cuts.windows(2) {
        labels.push(format!("({}, {}]", w[0], w[1]));
    }
    labels.push(format!("> {}", cuts[cuts.len() - 1]));
    labels
}
