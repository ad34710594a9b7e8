//! Dataset model and the delimited-text parsers.
//!
//! A preference dataset is a [`DataTable`] of objects plus an [`OrderSet`]
//! describing how those objects are ordered. Two on-disk layouts exist:
//!
//! * **single file**: one row per object carrying its features and a rating
//!   label (optionally a group column); each group becomes a `Ratings` order.
//! * **dual file**: an objects file (id + features) and an orders file with
//!   one ranked list of ids per line, most preferred first.
//!
//! Both layouts use the same [`ParserOptions`]. Lines starting with `#` after
//! the skipped prefix are comments; blank lines are ignored.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Numeric,
    Nominal(Vec<String>),
}

impl FeatureKind {
    pub fn label(&self) -> &'static str {
        match self {
            FeatureKind::Numeric => "numeric",
            FeatureKind::Nominal(_) => "nominal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

impl Feature {
    pub fn numeric(name: impl Into<String>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Numeric,
        }
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Nominal(categories.into_iter().map(Into::into).collect()),
        }
    }
}

/// Ordered feature list with unique, non-empty names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Feature>", into = "Vec<Feature>")]
pub struct FeatureSchema {
    features: Vec<Feature>,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        let mut seen = HashSet::new();
        for f in &features {
            if f.name.is_empty() {
                return Err(Error::Schema("feature names must be non-empty".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name '{}'", f.name)));
            }
            if let FeatureKind::Nominal(cats) = &f.kind {
                if cats.is_empty() {
                    return Err(Error::Schema(format!("nominal feature '{}' has no categories", f.name)));
                }
                let distinct: HashSet<_> = cats.iter().collect();
                if distinct.len() != cats.len() {
                    return Err(Error::Schema(format!("nominal feature '{}' repeats a category", f.name)));
                }
            }
        }
        Ok(FeatureSchema { features })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.index_of(name).ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }
}

impl TryFrom<Vec<Feature>> for FeatureSchema {
    type Error = Error;
    fn try_from(features: Vec<Feature>) -> Result<Self> {
        FeatureSchema::new(features)
    }
}

impl From<FeatureSchema> for Vec<Feature> {
    fn from(schema: FeatureSchema) -> Self {
        schema.features
    }
}

/// A cell value. Nominal values index into their feature's category list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(usize),
}

impl Value {
    pub fn as_num(self) -> Option<f64> {
        match self {
            Value::Num(v) => Some(v),
            Value::Cat(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub id: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Debug)]
pub struct DataTable {
    schema: FeatureSchema,
    rows: Vec<Row>,
    index: HashMap<String, usize>,
}

impl PartialEq for DataTable {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.rows == other.rows
    }
}

fn check_row(schema: &FeatureSchema, row: &Row) -> Result<()> {
    if row.values.len() != schema.len() {
        return Err(Error::Dimension {
            expected: schema.len(),
            found: row.values.len(),
        });
    }
    for (feature, value) in schema.features().iter().zip(&row.values) {
        let ok = match (&feature.kind, value) {
            (FeatureKind::Numeric, Value::Num(v)) => v.is_finite(),
            (FeatureKind::Nominal(cats), Value::Cat(c)) => *c < cats.len(),
            _ => false,
        };
        if !ok {
            return Err(Error::Schema(format!(
                "object '{}': value {:?} does not fit {} feature '{}'",
                row.id,
                value,
                feature.kind.label(),
                feature.name
            )));
        }
    }
    Ok(())
}

impl DataTable {
    pub fn new(schema: FeatureSchema, rows: Vec<Row>) -> Result<Self> {
        let mut index = HashMap::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            check_row(&schema, row)?;
            if index.insert(row.id.clone(), i).is_some() {
                return Err(Error::Schema(format!("duplicate object id '{}'", row.id)));
            }
        }
        Ok(DataTable { schema, rows, index })
    }

    /// Build an all-numeric table from row-major vectors.
    pub fn from_numeric(names: &[String], ids: Vec<String>, data: &[Vec<f64>]) -> Result<Self> {
        let schema = FeatureSchema::new(names.iter().map(Feature::numeric).collect())?;
        let rows = ids
            .into_iter()
            .zip(data)
            .map(|(id, v)| Row {
                id,
                values: v.iter().map(|&x| Value::Num(x)).collect(),
            })
            .collect();
        DataTable::new(schema, rows)
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    /// Values of one column, in row order.
    pub fn column(&self, feature: usize) -> impl Iterator<Item = Value> + '_ {
        self.rows.iter().map(move |r| r.values[feature])
    }

    /// Rows at the given positions, in the given order.
    pub fn subset(&self, positions: &[usize]) -> DataTable {
        let rows: Vec<Row> = positions.iter().map(|&p| self.rows[p].clone()).collect();
        let index = rows.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
        DataTable {
            schema: self.schema.clone(),
            rows,
            index,
        }
    }

    /// Row-major numeric matrix; fails if any feature is still nominal.
    pub fn numeric_matrix(&self) -> Result<Vec<Vec<f64>>> {
        if let Some(f) = self.schema.features().iter().find(|f| f.kind != FeatureKind::Numeric) {
            return Err(Error::FeatureKind {
                feature: f.name.clone(),
                expected: "numeric",
                actual: "nominal",
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r.values.iter().map(|v| v.as_num().unwrap_or(f64::NAN)).collect())
            .collect())
    }

    /// Serialize as an objects file (header `id,<features...>`) that
    /// [`parse_objects`] reads back into an identical table.
    pub fn to_delimited(&self, separator: char) -> String {
        let mut out = String::from("id");
        for f in self.schema.features() {
            out.push(separator);
            out.push_str(&f.name);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.id);
            for (f, v) in self.schema.features().iter().zip(&row.values) {
                out.push(separator);
                match (v, &f.kind) {
                    (Value::Num(x), _) => write!(out, "{x}").unwrap(),
                    (Value::Cat(c), FeatureKind::Nominal(cats)) => out.push_str(&cats[*c]),
                    (Value::Cat(c), FeatureKind::Numeric) => write!(out, "{c}").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Options that make [`parse_objects`] invert [`DataTable::to_delimited`].
    pub fn round_trip_options(&self, separator: char) -> ParserOptions {
        ParserOptions {
            separator,
            has_header: true,
            id_column: Some("id".into()),
            nominal_columns: self
                .schema
                .features()
                .iter()
                .filter(|f| matches!(f.kind, FeatureKind::Nominal(_)))
                .map(|f| f.name.clone())
                .collect(),
            ..ParserOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderKind {
    /// Object ids, most preferred first.
    RankedList(Vec<String>),
    Ratings(Vec<(String, f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub group: i64,
    pub kind: OrderKind,
}

impl Order {
    pub fn ids(&self) -> Vec<&str> {
        match &self.kind {
            OrderKind::RankedList(ids) => ids.iter().map(String::as_str).collect(),
            OrderKind::Ratings(r) => r.iter().map(|(id, _)| id.as_str()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderSet {
    pub orders: Vec<Order>,
    /// Direction of `Ratings` labels.
    pub higher_is_better: bool,
}

impl OrderSet {
    pub fn validate(&self, table: &DataTable) -> Result<()> {
        for (i, order) in self.orders.iter().enumerate() {
            if let OrderKind::RankedList(ids) = &order.kind {
                if ids.len() < 2 {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: "a ranked list needs at least two objects".into(),
                    });
                }
                let mut seen = HashSet::new();
                for id in ids {
                    if !seen.insert(id) {
                        return Err(Error::DuplicateId { line: i + 1, id: id.clone() });
                    }
                }
            }
            for id in order.ids() {
                if !table.contains(id) {
                    return Err(Error::UnknownId { line: i + 1, id: id.to_string() });
                }
            }
        }
        Ok(())
    }

    pub fn groups(&self) -> Vec<i64> {
        let mut seen = HashSet::new();
        self.orders.iter().map(|o| o.group).filter(|g| seen.insert(*g)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Preference {
    pub preferred: String,
    pub other: String,
    pub group: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PreferenceSet {
    pub pairs: Vec<Preference>,
}

impl PreferenceSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Resolve ids to row positions of `table`.
    pub fn indices(&self, table: &DataTable) -> Result<Vec<(usize, usize)>> {
        self.pairs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let a = table
                    .position(&p.preferred)
                    .ok_or_else(|| Error::UnknownId { line: i + 1, id: p.preferred.clone() })?;
                let b = table
                    .position(&p.other)
                    .ok_or_else(|| Error::UnknownId { line: i + 1, id: p.other.clone() })?;
                Ok((a, b))
            })
            .collect()
    }
}

/// Flatten every order into pairwise preferences.
///
/// A ranked list of `n` ids yields all `n(n-1)/2` pairs (earlier preferred);
/// ratings yield one pair per strictly unequal label pair and skip ties.
pub fn extract_pairs(orders: &OrderSet) -> PreferenceSet {
    let mut pairs = Vec::new();
    for order in &orders.orders {
        let group = order.group;
        match &order.kind {
            OrderKind::RankedList(ids) => {
                for (i, a) in ids.iter().enumerate() {
                    for b in &ids[i + 1..] {
                        pairs.push(Preference {
                            preferred: a.clone(),
                            other: b.clone(),
                            group,
                        });
                    }
                }
            }
            OrderKind::Ratings(ratings) => {
                for (i, (a, la)) in ratings.iter().enumerate() {
                    for (b, lb) in &ratings[i + 1..] {
                        if la == lb {
                            continue;
                        }
                        let a_wins = (la > lb) == orders.higher_is_better;
                        let (preferred, other) = if a_wins { (a, b) } else { (b, a) };
                        pairs.push(Preference {
                            preferred: preferred.clone(),
                            other: other.clone(),
                            group,
                        });
                    }
                }
            }
        }
    }
    PreferenceSet { pairs }
}

/// Objects plus the orders over them.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub table: DataTable,
    pub orders: OrderSet,
}

impl Dataset {
    pub fn new(table: DataTable, orders: OrderSet) -> Result<Self> {
        orders.validate(&table)?;
        Ok(Dataset { table, orders })
    }

    pub fn preferences(&self) -> PreferenceSet {
        extract_pairs(&self.orders)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParserOptions {
    pub separator: char,
    pub skip_lines: usize,
    pub has_header: bool,
    /// Rating column of a single file; defaults to the last column.
    pub label_column: Option<String>,
    /// Defaults to the row index (single file) or the first column (objects file).
    pub id_column: Option<String>,
    /// Optional grouping column of a single file; absent means one global order.
    pub group_column: Option<String>,
    /// Columns holding categories; every other feature column must be numeric.
    pub nominal_columns: Vec<String>,
    pub higher_is_better: bool,
}

impl Default for ParserOptions {
    fn default() -> Self {
        ParserOptions {
            separator: ',',
            skip_lines: 0,
            has_header: false,
            label_column: None,
            id_column: None,
            group_column: None,
            nominal_columns: Vec::new(),
            higher_is_better: true,
        }
    }
}

impl ParserOptions {
    pub fn validate(&self) -> Result<()> {
        if self.separator == '\n' || self.separator == '\r' {
            return Err(Error::InvalidParam("separator cannot be a line break".into()));
        }
        Ok(())
    }
}

/// Content lines (1-based physical line number, text) after skipping the
/// prefix, comments and blank lines.
fn content_lines(text: &str, skip: usize) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(skip)
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

fn split(line: &str, sep: char) -> Vec<&str> {
    line.split(sep).map(str::trim).collect()
}

fn decode(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "input is not valid UTF-8".into(),
    })
}

fn parse_num(cell: &str, line: usize, column: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NumericCell {
            line,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

/// Column layout resolved from the header (or synthesized names).
struct Layout {
    names: Vec<String>,
    id: Option<usize>,
    label: Option<usize>,
    group: Option<usize>,
    features: Vec<usize>,
}

fn find_column(names: &[String], wanted: &str, role: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == wanted)
        .ok_or_else(|| Error::Schema(format!("{role} column '{wanted}' not found")))
}

struct Collected {
    table: DataTable,
    /// (line, label, group) per row, when the layout has a label.
    labels: Vec<(f64, i64)>,
}

fn collect_rows(text: &str, opts: &ParserOptions, with_label: bool) -> Result<Collected> {
    opts.validate()?;
    let mut lines = content_lines(text, opts.skip_lines).peekable();
    let names: Vec<String> = if opts.has_header {
        let (_, header) = lines.next().ok_or(Error::EmptyDataset)?;
        split(header, opts.separator).into_iter().map(String::from).collect()
    } else {
        let width = lines
            .peek()
            .map(|(_, l)| split(l, opts.separator).len())
            .ok_or(Error::EmptyDataset)?;
        (0..width).map(|i| format!("c{i}")).collect()
    };
    if let Some(dup) = names.iter().enumerate().find(|(i, n)| names[..*i].contains(n)) {
        return Err(Error::Schema(format!("duplicate column name '{}'", dup.1)));
    }

    let id = match &opts.id_column {
        Some(name) => Some(find_column(&names, name, "id")?),
        None if with_label => None,
        None => Some(0),
    };
    let label = if with_label {
        Some(match &opts.label_column {
            Some(name) => find_column(&names, name, "label")?,
            None => names.len() - 1,
        })
    } else {
        None
    };
    let group = match (&opts.group_column, with_label) {
        (Some(name), true) => Some(find_column(&names, name, "group")?),
        _ => None,
    };
    let features: Vec<usize> = (0..names.len())
        .filter(|c| Some(*c) != id && Some(*c) != label && Some(*c) != group)
        .collect();
    for nominal in &opts.nominal_columns {
        let c = find_column(&names, nominal, "nominal")?;
        if !features.contains(&c) {
            return Err(Error::Schema(format!("nominal column '{nominal}' is not a feature column")));
        }
    }
    let layout = Layout {
        names,
        id,
        label,
        group,
        features,
    };
    let nominal: Vec<bool> = layout
        .features
        .iter()
        .map(|&c| opts.nominal_columns.contains(&layout.names[c]))
        .collect();

    let mut categories: Vec<Vec<String>> = vec![Vec::new(); layout.features.len()];
    let mut cat_index: Vec<HashMap<String, usize>> = vec![HashMap::new(); layout.features.len()];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut ids = HashSet::new();

    for (line, text) in lines {
        let cells = split(text, opts.separator);
        if cells.len() != layout.names.len() {
            return Err(Error::Arity {
                line,
                expected: layout.names.len(),
                found: cells.len(),
            });
        }
        let row_id = match layout.id {
            Some(c) => cells[c].to_string(),
            None => rows.len().to_string(),
        };
        if row_id.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty object id".into(),
            });
        }
        if !ids.insert(row_id.clone()) {
            return Err(Error::DuplicateId { line, id: row_id });
        }
        let mut values = Vec::with_capacity(layout.features.len());
        for (k, &c) in layout.features.iter().enumerate() {
            let cell = cells[c];
            if nominal[k] {
                if cell.is_empty() {
                    return Err(Error::Parse {
                        line,
                        message: format!("column '{}': missing value", layout.names[c]),
                    });
                }
                let next = categories[k].len();
                let idx = *cat_index[k].entry(cell.to_string()).or_insert_with(|| {
                    categories[k].push(cell.to_string());
                    next
                });
                values.push(Value::Cat(idx));
            } else {
                values.push(Value::Num(parse_num(cell, line, &layout.names[c])?));
            }
        }
        if let Some(lc) = layout.label {
            let label = parse_num(cells[lc], line, &layout.names[lc])?;
            let group = match layout.group {
                Some(gc) => cells[gc].parse::<i64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column '{}': '{}' is not an integer group id", layout.names[gc], cells[gc]),
                })?,
                None => 0,
            };
            labels.push((label, group));
        }
        rows.push(Row { id: row_id, values });
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let schema = FeatureSchema::new(
        layout
            .features
            .iter()
            .zip(categories)
            .zip(&nominal)
            .map(|((&c, cats), &is_nominal)| Feature {
                name: layout.names[c].clone(),
                kind: if is_nominal {
                    FeatureKind::Nominal(cats)
                } else {
                    FeatureKind::Numeric
                },
            })
            .collect(),
    )?;
    Ok(Collected {
        table: DataTable::new(schema, rows)?,
        labels,
    })
}

/// Parse a single-file dataset: objects with a rating label per row.
pub fn parse_single_file(bytes: &[u8], opts: &ParserOptions) -> Result<(DataTable, OrderSet)> {
    let Collected { table, labels } = collect_rows(decode(bytes)?, opts, true)?;
    let mut orders: Vec<Order> = Vec::new();
    let mut slot: HashMap<i64, usize> = HashMap::new();
    for (row, (label, group)) in table.rows().iter().zip(labels) {
        let i = *slot.entry(group).or_insert_with(|| {
            orders.push(Order {
                group,
                kind: OrderKind::Ratings(Vec::new()),
            });
            orders.len() - 1
        });
        if let OrderKind::Ratings(r) = &mut orders[i].kind {
            r.push((row.id.clone(), label));
        }
    }
    Ok((
        table,
        OrderSet {
            orders,
            higher_is_better: opts.higher_is_better,
        },
    ))
}

/// Parse an objects file (id column + features, no label).
pub fn parse_objects(bytes: &[u8], opts: &ParserOptions) -> Result<DataTable> {
    Ok(collect_rows(decode(bytes)?, opts, false)?.table)
}

/// Parse an orders file against `table`; group ids are order line indices.
pub fn parse_orders(bytes: &[u8], table: &DataTable, opts: &ParserOptions) -> Result<OrderSet> {
    opts.validate()?;
    let mut orders = Vec::new();
    for (index, (line, text)) in content_lines(decode(bytes)?, opts.skip_lines).enumerate() {
        let mut seen = HashSet::new();
        let mut ids = Vec::new();
        for id in split(text, opts.separator) {
            if id.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "empty id in order".into(),
                });
            }
            if !table.contains(id) {
                return Err(Error::UnknownId { line, id: id.into() });
            }
            if !seen.insert(id) {
                return Err(Error::DuplicateId { line, id: id.into() });
            }
            ids.push(id.to_string());
        }
        if ids.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "an order needs at least two objects".into(),
            });
        }
        orders.push(Order {
            group: index as i64,
            kind: OrderKind::RankedList(ids),
        });
    }
    if orders.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(OrderSet {
        orders,
        higher_is_better: opts.higher_is_better,
    })
}

/// Parse a dual-file dataset: objects file plus ranked-list orders file.
pub fn parse_dual_file(objects: &[u8], orders: &[u8], opts: &ParserOptions) -> Result<(DataTable, OrderSet)> {
    let table = parse_objects(objects, opts)?;
    let orders = parse_orders(orders, &table, opts)?;
    Ok((table, orders))
}

/// Serialize ranked-list orders in the dual-file orders format.
pub fn orders_to_delimited(orders: &OrderSet, separator: char) -> String {
    let mut out = String::new();
    for order in &orders.orders {
        let ids = order.ids();
        let sep = separator.to_string();
        out.push_str(&ids.join(&sep));
        out.push('\n');
    }
    out
}
