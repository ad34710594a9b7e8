//! Feature statistics, feature inclusion, representation changes and
//! normalization.
//!
//! Transforms are expressed as a [`PreprocessPlan`]. Fitting a plan on a
//! table yields a [`FittedPlan`] holding every learned parameter (ranges,
//! moments, categories), which replays the exact same transform on unseen
//! objects. Cross-validation fits on training objects only.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataset::{DataTable, Feature, FeatureKind, FeatureSchema, Row, Value};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatSummary {
    Numeric { min: f64, max: f64, mean: f64, std: f64 },
    Nominal { frequencies: Vec<(String, usize)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStat {
    pub name: String,
    pub distinct: usize,
    pub summary: StatSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub rows: usize,
    pub features: Vec<FeatureStat>,
}

/// Population mean and standard deviation (divides by `n`).
pub(crate) fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn numeric_column(table: &DataTable, feature: &str) -> Result<(usize, Vec<f64>)> {
    let idx = table.schema().require(feature)?;
    let f = &table.schema().features()[idx];
    if f.kind != FeatureKind::Numeric {
        return Err(Error::FeatureKind {
            feature: feature.to_string(),
            expected: "numeric",
            actual: "nominal",
        });
    }
    let values = table.column(idx).map(|v| v.as_num().unwrap_or(f64::NAN)).collect();
    Ok((idx, values))
}

fn range(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub fn compute_stats(table: &DataTable) -> Result<FeatureStats> {
    if table.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = table
        .schema()
        .features()
        .iter()
        .enumerate()
        .map(|(i, f)| match &f.kind {
            FeatureKind::Numeric => {
                let values: Vec<f64> = table.column(i).filter_map(Value::as_num).collect();
                let (min, max) = range(&values);
                let (mean, std) = moments(&values);
                let mut bits: Vec<u64> = values.iter().map(|v| (v + 0.0).to_bits()).collect();
                bits.sort_unstable();
                bits.dedup();
                FeatureStat {
                    name: f.name.clone(),
                    distinct: bits.len(),
                    // Rounding can push the mean a hair outside [min, max] on
                    // near-constant columns.
                    summary: StatSummary::Numeric {
                        min,
                        max,
                        mean: mean.clamp(min, max),
                        std,
                    },
                }
            }
            FeatureKind::Nominal(cats) => {
                let mut counts = vec![0usize; cats.len()];
                for v in table.column(i) {
                    if let Value::Cat(c) = v {
                        counts[c] += 1;
                    }
                }
                FeatureStat {
                    name: f.name.clone(),
                    distinct: counts.iter().filter(|&&c| c > 0).count(),
                    summary: StatSummary::Nominal {
                        frequencies: cats.iter().cloned().zip(counts).collect(),
                    },
                }
            }
        })
        .collect();
    Ok(FeatureStats {
        rows: table.len(),
        features,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessStep {
    /// Keep only these features (schema order is preserved).
    Include(Vec<String>),
    MinMax(String),
    ZScore(String),
    NominalToBinary(String),
    NumericToNominal { feature: String, bins: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PreprocessPlan {
    pub steps: Vec<PreprocessStep>,
}

impl PreprocessPlan {
    pub fn new(steps: Vec<PreprocessStep>) -> Self {
        PreprocessPlan { steps }
    }

    /// This plan followed by a feature-inclusion step.
    pub fn then_include(&self, features: &[String]) -> Self {
        let mut steps = self.steps.clone();
        steps.push(PreprocessStep::Include(features.to_vec()));
        PreprocessPlan { steps }
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FittedStep {
    Include(Vec<String>),
    MinMax { feature: String, min: f64, max: f64 },
    ZScore { feature: String, mean: f64, std: f64 },
    NominalToBinary { feature: String, categories: Vec<String> },
    NumericToNominal { feature: String, min: f64, max: f64, bins: usize },
}

impl PreprocessStep {
    fn fit(&self, table: &DataTable) -> Result<FittedStep> {
        Ok(match self {
            PreprocessStep::Include(names) => {
                for n in names {
                    table.schema().require(n)?;
                }
                FittedStep::Include(names.clone())
            }
            PreprocessStep::MinMax(feature) => {
                let (_, values) = numeric_column(table, feature)?;
                let (min, max) = range(&values);
                if max <= min {
                    return Err(Error::ConstantFeature(feature.clone()));
                }
                FittedStep::MinMax {
                    feature: feature.clone(),
                    min,
                    max,
                }
            }
            PreprocessStep::ZScore(feature) => {
                let (_, values) = numeric_column(table, feature)?;
                let (mean, std) = moments(&values);
                if std <= 0.0 {
                    return Err(Error::ConstantFeature(feature.clone()));
                }
                FittedStep::ZScore {
                    feature: feature.clone(),
                    mean,
                    std,
                }
            }
            PreprocessStep::NominalToBinary(feature) => {
                let idx = table.schema().require(feature)?;
                match &table.schema().features()[idx].kind {
                    FeatureKind::Nominal(cats) => FittedStep::NominalToBinary {
                        feature: feature.clone(),
                        categories: cats.clone(),
                    },
                    FeatureKind::Numeric => {
                        return Err(Error::FeatureKind {
                            feature: feature.clone(),
                            expected: "nominal",
                            actual: "numeric",
                        })
                    }
                }
            }
            PreprocessStep::NumericToNominal { feature, bins } => {
                if *bins < 2 {
                    return Err(Error::InvalidParam(format!("bin count must be at least 2, got {bins}")));
                }
                let (_, values) = numeric_column(table, feature)?;
                let (min, max) = range(&values);
                if max <= min {
                    return Err(Error::ConstantFeature(feature.clone()));
                }
                FittedStep::NumericToNominal {
                    feature: feature.clone(),
                    min,
                    max,
                    bins: *bins,
                }
            }
        })
    }
}

fn bin_of(v: f64, min: f64, max: f64, bins: usize) -> usize {
    let b = (bins as f64 * (v - min) / (max - min)).floor();
    if b.is_nan() || b < 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

fn map_numeric(table: &DataTable, feature: &str, f: impl Fn(f64) -> f64) -> Result<DataTable> {
    let (idx, _) = numeric_column(table, feature)?;
    let rows = table
        .rows()
        .iter()
        .map(|r| {
            let mut values = r.values.clone();
            if let Value::Num(v) = values[idx] {
                values[idx] = Value::Num(f(v));
            }
            Row { id: r.id.clone(), values }
        })
        .collect();
    DataTable::new(table.schema().clone(), rows)
}

impl FittedStep {
    pub fn apply(&self, table: &DataTable) -> Result<DataTable> {
        let schema = table.schema();
        match self {
            FittedStep::Include(names) => {
                let mut keep = Vec::new();
                let wanted: HashSet<&str> = names.iter().map(String::as_str).collect();
                for n in names {
                    schema.require(n)?;
                }
                for (i, f) in schema.features().iter().enumerate() {
                    if wanted.contains(f.name.as_str()) {
                        keep.push(i);
                    }
                }
                let out = FeatureSchema::new(keep.iter().map(|&i| schema.features()[i].clone()).collect())?;
                let rows = table
                    .rows()
                    .iter()
                    .map(|r| Row {
                        id: r.id.clone(),
                        values: keep.iter().map(|&i| r.values[i]).collect(),
                    })
                    .collect();
                DataTable::new(out, rows)
            }
            FittedStep::MinMax { feature, min, max } => {
                let (min, span) = (*min, max - min);
                map_numeric(table, feature, |v| (v - min) / span)
            }
            FittedStep::ZScore { feature, mean, std } => {
                let (mean, std) = (*mean, *std);
                map_numeric(table, feature, |v| (v - mean) / std)
            }
            FittedStep::NominalToBinary { feature, categories } => {
                let idx = schema.require(feature)?;
                let own = match &schema.features()[idx].kind {
                    FeatureKind::Nominal(c) => c,
                    FeatureKind::Numeric => {
                        return Err(Error::FeatureKind {
                            feature: feature.clone(),
                            expected: "nominal",
                            actual: "numeric",
                        })
                    }
                };
                // Map this table's category indices onto the fitted category order.
                let remap: Vec<Option<usize>> = own.iter().map(|c| categories.iter().position(|f| f == c)).collect();
                let mut features = Vec::with_capacity(schema.len() + categories.len());
                for (i, f) in schema.features().iter().enumerate() {
                    if i == idx {
                        features.extend(categories.iter().map(|c| Feature::numeric(format!("{feature}={c}"))));
                    } else {
                        features.push(f.clone());
                    }
                }
                let out = FeatureSchema::new(features)?;
                let mut rows = Vec::with_capacity(table.len());
                for r in table.rows() {
                    let Value::Cat(c) = r.values[idx] else {
                        unreachable!("validated nominal column")
                    };
                    let hot = remap[c].ok_or_else(|| {
                        Error::Schema(format!(
                            "object '{}': category '{}' of '{feature}' was not seen when fitting",
                            r.id, own[c]
                        ))
                    })?;
                    let mut values = Vec::with_capacity(out.len());
                    for (i, v) in r.values.iter().enumerate() {
                        if i == idx {
                            values.extend((0..categories.len()).map(|k| Value::Num(if k == hot { 1.0 } else { 0.0 })));
                        } else {
                            values.push(*v);
                        }
                    }
                    rows.push(Row { id: r.id.clone(), values });
                }
                DataTable::new(out, rows)
            }
            FittedStep::NumericToNominal { feature, min, max, bins } => {
                let (idx, _) = numeric_column(table, feature)?;
                let mut features = schema.features().to_vec();
                features[idx] = Feature::nominal(feature.clone(), (0..*bins).map(|b| format!("bin_{b}")));
                let out = FeatureSchema::new(features)?;
                let rows = table
                    .rows()
                    .iter()
                    .map(|r| {
                        let mut values = r.values.clone();
                        if let Value::Num(v) = values[idx] {
                            values[idx] = Value::Cat(bin_of(v, *min, *max, *bins));
                        }
                        Row { id: r.id.clone(), values }
                    })
                    .collect();
                DataTable::new(out, rows)
            }
        }
    }
}

/// A plan with all parameters learned; replays on any table whose schema
/// matches `input`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedPlan {
    pub input: FeatureSchema,
    pub steps: Vec<FittedStep>,
}

impl FittedPlan {
    /// Fit `plan` step by step on `table`, returning the parameters and the
    /// transformed table.
    pub fn fit(table: &DataTable, plan: &PreprocessPlan) -> Result<(FittedPlan, DataTable)> {
        let mut current = table.clone();
        let mut steps = Vec::with_capacity(plan.steps.len());
        for (i, step) in plan.steps.iter().enumerate() {
            let fitted = step.fit(&current).map_err(|e| e.in_step(i))?;
            current = fitted.apply(&current).map_err(|e| e.in_step(i))?;
            steps.push(fitted);
        }
        Ok((
            FittedPlan {
                input: table.schema().clone(),
                steps,
            },
            current,
        ))
    }

    pub fn replay(&self, table: &DataTable) -> Result<DataTable> {
        if table.schema().len() != self.input.len() {
            return Err(Error::Dimension {
                expected: self.input.len(),
                found: table.schema().len(),
            });
        }
        for (want, got) in self.input.features().iter().zip(table.schema().features()) {
            if want.name != got.name || want.kind.label() != got.kind.label() {
                return Err(Error::Schema(format!(
                    "expected {} feature '{}', found {} feature '{}'",
                    want.kind.label(),
                    want.name,
                    got.kind.label(),
                    got.name
                )));
            }
        }
        let mut current = table.clone();
        for (i, step) in self.steps.iter().enumerate() {
            current = step.apply(&current).map_err(|e| e.in_step(i))?;
        }
        Ok(current)
    }
}

/// Fit and apply `plan` on `table`.
pub fn apply_plan(table: &DataTable, plan: &PreprocessPlan) -> Result<(DataTable, FittedPlan)> {
    let (fitted, out) = FittedPlan::fit(table, plan)?;
    Ok((out, fitted))
}

fn single(table: &DataTable, step: PreprocessStep) -> Result<DataTable> {
    let fitted = step.fit(table)?;
    fitted.apply(table)
}

/// Rescale `feature` to `[0, 1]`.
pub fn min_max(table: &DataTable, feature: &str) -> Result<DataTable> {
    single(table, PreprocessStep::MinMax(feature.into()))
}

/// Standardize `feature` to zero mean and unit population variance.
pub fn z_score(table: &DataTable, feature: &str) -> Result<DataTable> {
    single(table, PreprocessStep::ZScore(feature.into()))
}

/// Replace a nominal feature with one 0/1 column per category.
pub fn nominal_to_binary(table: &DataTable, feature: &str) -> Result<DataTable> {
    single(table, PreprocessStep::NominalToBinary(feature.into()))
}

/// Equal-width binning of a numeric feature into `bins` categories.
pub fn numeric_to_nominal(table: &DataTable, feature: &str, bins: usize) -> Result<DataTable> {
    single(
        table,
        PreprocessStep::NumericToNominal {
            feature: feature.into(),
            bins,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(values: &[f64]) -> DataTable {
        DataTable::from_numeric(
            &["x".to_string()],
            (0..values.len()).map(|i| format!("o{i}")).collect(),
            &values.iter().map(|&v| vec![v]).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    fn col(table: &DataTable, f: usize) -> Vec<f64> {
        table.column(f).map(|v| v.as_num().unwrap()).collect()
    }

    fn colours(values: &[usize]) -> DataTable {
        let schema = FeatureSchema::new(vec![Feature::nominal("c", ["red", "green", "blue"])]).unwrap();
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &c)| Row {
                id: i.to_string(),
                values: vec![Value::Cat(c)],
            })
            .collect();
        DataTable::new(schema, rows).unwrap()
    }

    #[test]
    fn stats_numeric() {
        let s = compute_stats(&numeric(&[2.0, 4.0, 6.0])).unwrap();
        let StatSummary::Numeric { min, max, mean, std } = s.features[0].summary else {
            panic!()
        };
        assert_eq!((min, max, mean), (2.0, 6.0, 4.0));
        assert!((std - 1.632993161855452).abs() < 1e-12);
        assert_eq!(s.features[0].distinct, 3);

        let s = compute_stats(&numeric(&[5.0, 5.0])).unwrap();
        assert!(matches!(s.features[0].summary, StatSummary::Numeric { std, .. } if std == 0.0));
    }

    #[test]
    fn stats_nominal() {
        let s = compute_stats(&colours(&[0, 0, 2])).unwrap();
        let StatSummary::Nominal { frequencies } = &s.features[0].summary else {
            panic!()
        };
        assert_eq!(frequencies, &vec![("red".to_string(), 2), ("green".to_string(), 0), ("blue".to_string(), 1)]);
        assert_eq!(s.features[0].distinct, 2);
    }

    #[test]
    fn stats_empty_table() {
        assert!(matches!(compute_stats(&numeric(&[])), Err(Error::EmptyDataset)));
    }

    #[test]
    fn min_max_cases() {
        assert_eq!(col(&min_max(&numeric(&[2.0, 4.0, 6.0]), "x").unwrap(), 0), [0.0, 0.5, 1.0]);
        assert_eq!(col(&min_max(&numeric(&[0.0, 1.0]), "x").unwrap(), 0), [0.0, 1.0]);
        assert!(matches!(min_max(&numeric(&[5.0; 3]), "x"), Err(Error::ConstantFeature(_))));
    }

    #[test]
    fn z_score_cases() {
        let z = col(&z_score(&numeric(&[2.0, 4.0, 6.0]), "x").unwrap(), 0);
        for (got, want) in z.iter().zip([-1.224744871391589, 0.0, 1.224744871391589]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert_eq!(col(&z_score(&numeric(&[-1.0, 1.0]), "x").unwrap(), 0), [-1.0, 1.0]);
        assert!(z_score(&numeric(&[3.0; 4]), "x").is_err());
    }

    #[test]
    fn binary_encoding() {
        let t = nominal_to_binary(&colours(&[1, 0, 2]), "c").unwrap();
        assert_eq!(t.schema().names().collect::<Vec<_>>(), ["c=red", "c=green", "c=blue"]);
        assert_eq!(t.rows()[0].values, vec![Value::Num(0.0), Value::Num(1.0), Value::Num(0.0)]);
        assert_eq!(t.len(), 3);

        let schema = FeatureSchema::new(vec![Feature::nominal("k", ["only"])]).unwrap();
        let rows = (0..2)
            .map(|i| Row {
                id: i.to_string(),
                values: vec![Value::Cat(0)],
            })
            .collect();
        let t = nominal_to_binary(&DataTable::new(schema, rows).unwrap(), "k").unwrap();
        assert_eq!(col(&t, 0), [1.0, 1.0]);

        assert!(matches!(nominal_to_binary(&numeric(&[1.0]), "x"), Err(Error::FeatureKind { .. })));
    }

    #[test]
    fn binning() {
        let t = numeric_to_nominal(&numeric(&[0.0, 0.4, 1.0]), "x", 2).unwrap();
        let cats: Vec<_> = t.column(0).collect();
        assert_eq!(cats, [Value::Cat(0), Value::Cat(0), Value::Cat(1)]);
        assert_eq!(
            t.schema().features()[0].kind,
            FeatureKind::Nominal(vec!["bin_0".into(), "bin_1".into()])
        );
        assert!(matches!(
            numeric_to_nominal(&numeric(&[0.0, 1.0]), "x", 1),
            Err(Error::InvalidParam(_))
        ));
        assert!(numeric_to_nominal(&numeric(&[2.0, 2.0]), "x", 3).is_err());
    }

    #[test]
    fn plan_identity_and_replay() {
        let t = numeric(&[2.0, 4.0, 6.0]);
        let (out, fitted) = apply_plan(&t, &PreprocessPlan::default()).unwrap();
        assert_eq!(out, t);
        assert!(fitted.steps.is_empty());

        let plan = PreprocessPlan::new(vec![PreprocessStep::ZScore("x".into())]);
        let (out, fitted) = apply_plan(&t, &plan).unwrap();
        assert_eq!(out, z_score(&t, "x").unwrap());
        assert_eq!(fitted.replay(&t).unwrap(), out);

        // Replay uses the training moments, not the new object's.
        let fresh = numeric(&[4.0]);
        let replayed = fitted.replay(&fresh).unwrap();
        assert_eq!(col(&replayed, 0), [0.0]);
    }

    #[test]
    fn plan_errors_carry_step_index() {
        let plan = PreprocessPlan::new(vec![
            PreprocessStep::MinMax("x".into()),
            PreprocessStep::ZScore("missing".into()),
        ]);
        let err = apply_plan(&numeric(&[1.0, 2.0]), &plan).unwrap_err();
        assert!(matches!(err, Error::PlanStep { index: 1, .. }), "{err}");
    }

    #[test]
    fn include_keeps_schema_order() {
        let t = DataTable::from_numeric(
            &["a".into(), "b".into(), "c".into()],
            vec!["r".into()],
            &[vec![1.0, 2.0, 3.0]],
        )
        .unwrap();
        let plan = PreprocessPlan::default().then_include(&["c".into(), "a".into()]);
        let (out, _) = apply_plan(&t, &plan).unwrap();
        assert_eq!(out.schema().names().collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(out.rows()[0].values, vec![Value::Num(1.0), Value::Num(3.0)]);
    }
}
