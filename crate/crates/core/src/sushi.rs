//! Loader for the public SUSHI preference data (version 3, "B" item set):
//! an item file of per-sushi attributes and an order file of 10-item
//! rankings, one per respondent.
//!
//! Item lines are tab separated:
//! `id  name  style  major  minor  oiliness  eat_freq  price  sell_freq`.
//! Order files start with a header line; every following line reads
//! `0 <length> <id> <id> ...`, most preferred first.
//!
//! `minor_group` (12 categories) is nominal; one-hot encoding it gives the
//! 18 numeric features used for learning.

use crate::dataset::{DataTable, Dataset, Feature, FeatureSchema, Order, OrderKind, OrderSet, Row, Value};
use crate::error::{Error, Result};
use crate::preprocess::{PreprocessPlan, PreprocessStep};

pub const MINOR_GROUPS: usize = 12;

const COLUMNS: [&str; 9] = [
    "id", "name", "style", "major_group", "minor_group", "oiliness", "eat_frequency", "price", "sell_frequency",
];

const NUMERIC: [&str; 6] = ["style", "major_group", "oiliness", "eat_frequency", "price", "sell_frequency"];

fn schema() -> Result<FeatureSchema> {
    let categories: Vec<String> = (0..MINOR_GROUPS).map(|c| c.to_string()).collect();
    let mut features: Vec<Feature> = NUMERIC[..2].iter().map(|n| Feature::numeric(*n)).collect();
    features.push(Feature::nominal("minor_group", categories));
    features.extend(NUMERIC[2..].iter().map(|n| Feature::numeric(*n)));
    FeatureSchema::new(features)
}

fn text(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("not UTF-8: {e}"),
    })
}

pub fn parse_items(bytes: &[u8]) -> Result<DataTable> {
    let schema = schema()?;
    let mut rows = Vec::new();
    for (i, line) in text(bytes)?.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').map(str::trim).collect();
        if cells.len() != 9 {
            return Err(Error::Arity {
                line: line_no,
                expected: 9,
                found: cells.len(),
            });
        }
        let num = |col: usize| -> Result<f64> {
            cells[col].parse::<f64>().map_err(|_| Error::NumericCell {
                line: line_no,
                column: COLUMNS[col].to_string(),
                value: cells[col].to_string(),
            })
        };
        let minor = cells[4]
            .parse::<usize>()
            .ok()
            .filter(|&m| m < MINOR_GROUPS)
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("minor group must be an integer in 0..{MINOR_GROUPS}, got {:?}", cells[4]),
            })?;
        let values = vec![
            Value::Num(num(2)?),
            Value::Num(num(3)?),
            Value::Cat(minor),
            Value::Num(num(5)?),
            Value::Num(num(6)?),
            Value::Num(num(7)?),
            Value::Num(num(8)?),
        ];
        rows.push(Row {
            id: cells[0].to_string(),
            values,
        });
    }
    DataTable::new(schema, rows)
}

pub fn parse_rankings(bytes: &[u8], items: &DataTable) -> Result<OrderSet> {
    let mut orders = Vec::new();
    for (i, line) in text(bytes)?.lines().enumerate().skip(1) {
        let line_no = i + 1;
        let cells: Vec<&str> = line.split_whitespace().collect();
        if cells.is_empty() {
            continue;
        }
        let len: usize = cells
            .get(1)
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: "missing ranking length".into(),
            })?;
        if cells.len() != len + 2 {
            return Err(Error::Arity {
                line: line_no,
                expected: len + 2,
                found: cells.len(),
            });
        }
        let ids: Vec<String> = cells[2..].iter().map(|c| c.to_string()).collect();
        if let Some(id) = ids.iter().find(|id| !items.contains(id)) {
            return Err(Error::UnknownId {
                line: line_no,
                id: id.clone(),
            });
        }
        orders.push(Order {
            group: orders.len() as i64,
            kind: OrderKind::RankedList(ids),
        });
    }
    let set = OrderSet {
        orders,
        higher_is_better: true,
    };
    set.validate(items)?;
    Ok(set)
}

pub fn load(items: &[u8], rankings: &[u8]) -> Result<Dataset> {
    let table = parse_items(items)?;
    let orders = parse_rankings(rankings, &table)?;
    Dataset::new(table, orders)
}

/// One-hot `minor_group` and standardize the numeric attributes.
pub fn default_plan() -> PreprocessPlan {
    let mut steps = vec![PreprocessStep::NominalToBinary("minor_group".into())];
    steps.extend(NUMERIC.iter().map(|n| PreprocessStep::ZScore(n.to_string())));
    PreprocessPlan::new(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::apply_plan;

    const ITEMS: &str = "0\tebi\t1\t0\t0\t2.7\t2.1\t1.8\t0.8\n\
                         1\tanago\t0\t1\t1\t0.9\t1.9\t1.9\t0.5\n\
                         2\tmaguro\t1\t0\t11\t1.7\t2.3\t1.8\t0.8\n";
    const ORDERS: &str = "100 1\n0 3 2 0 1\n0 3 1 2 0\n";

    #[test]
    fn loads_and_expands_to_eighteen_features() {
        let d = load(ITEMS.as_bytes(), ORDERS.as_bytes()).unwrap();
        assert_eq!(d.table.len(), 3);
        assert_eq!(d.orders.orders.len(), 2);
        assert_eq!(d.orders.orders[0].ids(), ["2", "0", "1"]);
        assert_eq!(d.preferences().len(), 6);
        let (out, _) = apply_plan(&d.table, &default_plan()).unwrap();
        assert_eq!(out.schema().len(), 18);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(parse_items(b"0\tebi\t1\n").is_err());
        assert!(parse_items(b"0\tebi\t1\t0\t12\t2.7\t2.1\t1.8\t0.8\n").is_err());
        let t = parse_items(ITEMS.as_bytes()).unwrap();
        assert!(parse_rankings(b"h\n0 2 0 7\n", &t).is_err());
        assert!(parse_rankings(b"h\n0 3 0 1\n", &t).is_err());
    }
}
