//! Synthetic preference benchmarks: uniform random objects compared by a
//! known utility (linear, quadratic or a random one-hidden-layer network).
//!
//! Pair `i` compares objects `2i` and `2i+1`; each pair is its own group, so
//! group-level cross-validation splits at the pair level.

use std::fmt::Write as _;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::ann::{Activation, MlpModel};
use crate::dataset::{
    orders_to_delimited, DataTable, Dataset, Order, OrderKind, OrderSet, ParserOptions, Preference, PreferenceSet,
};
use crate::error::{Error, Result};
use crate::evaluation::pairwise_accuracy;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SynthFunction {
    /// `w·x`; unset weights are drawn uniform in `[0, 1]`.
    Linear {
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// `xᵀQx + w·x`; unset `Q` is random symmetric with entries in `[−1, 1]`.
    /// Unset `w` is `u − Q·1` with `u` uniform in `[0, 1]`: the quadratic
    /// part is centred on the unit cube and only `u` contributes a linear
    /// trend.
    Quadratic {
        #[serde(default)]
        matrix: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// Fixed random `d-hidden-1` tanh network.
    RandomMlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
}

fn default_hidden() -> usize {
    5
}

/// Scale of the random network's weights: large enough that the tanh units
/// leave their linear regime over the unit cube.
const MLP_WEIGHT_SCALE: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub n_pairs: usize,
    pub n_features: usize,
    pub function: SynthFunction,
    /// Probability of flipping each generated preference.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_pairs: 10_000,
            n_features: 10,
            function: SynthFunction::Linear { weights: None },
            noise: 0.0,
            seed: 0,
        }
    }
}

/// The generating utility of a synthetic dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Utility {
    Linear { weights: Vec<f64> },
    Quadratic { matrix: Vec<Vec<f64>>, weights: Vec<f64> },
    Mlp { model: MlpModel },
}

impl Utility {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Utility::Linear { weights } => weights.iter().zip(x).map(|(w, x)| w * x).sum(),
            Utility::Quadratic { matrix, weights } => {
                let quad: f64 = matrix
                    .iter()
                    .zip(x)
                    .map(|(row, xi)| xi * row.iter().zip(x).map(|(q, xj)| q * xj).sum::<f64>())
                    .sum();
                quad + weights.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
            }
            Utility::Mlp { model } => model.forward_unchecked(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticData {
    pub table: DataTable,
    pub prefs: PreferenceSet,
    pub utility: Utility,
}

impl SyntheticData {
    /// The pairs as two-item ranked lists, one group per pair.
    pub fn orders(&self) -> OrderSet {
        OrderSet {
            orders: self
                .prefs
                .pairs
                .iter()
                .map(|p| Order {
                    group: p.group,
                    kind: OrderKind::RankedList(vec![p.preferred.clone(), p.other.clone()]),
                })
                .collect(),
            higher_is_better: true,
        }
    }

    pub fn dataset(&self) -> Dataset {
        Dataset {
            table: self.table.clone(),
            orders: self.orders(),
        }
    }

    /// Objects file, orders file (one `preferred,other` line per pair) and
    /// the options that read them back.
    pub fn to_dual_file(&self) -> (String, String, ParserOptions) {
        (
            self.table.to_delimited(','),
            orders_to_delimited(&self.orders(), ','),
            self.table.round_trip_options(','),
        )
    }

    /// One file with a row per object in each pair: features, the pair's
    /// group and a 1/0 rating for the preferred/other object.
    pub fn to_single_file(&self) -> (String, ParserOptions) {
        let mut out = String::from("id");
        for name in self.table.schema().names() {
            out.push(',');
            out.push_str(name);
        }
        out.push_str(",group,label\n");
        for p in &self.prefs.pairs {
            for (id, label) in [(&p.preferred, 1), (&p.other, 0)] {
                let row = &self.table.rows()[self.table.position(id).expect("generated id")];
                out.push_str(id);
                for v in &row.values {
                    let _ = write!(out, ",{}", v.as_num().expect("numeric feature"));
                }
                let _ = writeln!(out, ",{},{label}", p.group);
            }
        }
        let options = ParserOptions {
            has_header: true,
            id_column: Some("id".into()),
            group_column: Some("group".into()),
            label_column: Some("label".into()),
            ..ParserOptions::default()
        };
        (out, options)
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 || self.n_features == 0 {
            return Err(Error::InvalidParam("n_pairs and n_features must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidParam(format!("noise must lie in [0, 1), got {}", self.noise)));
        }
        let d = self.n_features;
        let check = |v: &Option<Vec<f64>>| match v {
            Some(w) if w.len() != d => Err(Error::Dimension {
                expected: d,
                found: w.len(),
            }),
            _ => Ok(()),
        };
        match &self.function {
            SynthFunction::Linear { weights } => check(weights),
            SynthFunction::Quadratic { matrix, weights } => {
                check(weights)?;
                match matrix {
                    Some(q) if q.len() != d || q.iter().any(|r| r.len() != d) => Err(Error::Dimension {
                        expected: d,
                        found: q.len(),
                    }),
                    _ => Ok(()),
                }
            }
            SynthFunction::RandomMlp { hidden, .. } => {
                if *hidden == 0 {
                    return Err(Error::InvalidParam("hidden must be at least 1".into()));
                }
                Ok(())
            }
        }
    }

    /// Resolve the generating utility, drawing unset parameters from the seed.
    pub fn utility(&self) -> Result<Utility> {
        self.validate()?;
        let d = self.n_features;
        let mut r = rng::rng(rng::derive_label(self.seed, "function"));
        let mut uniform = |lo: f64, hi: f64, n: usize| -> Vec<f64> { (0..n).map(|_| r.random_range(lo..=hi)).collect() };
        Ok(match &self.function {
            SynthFunction::Linear { weights } => Utility::Linear {
                weights: weights.clone().unwrap_or_else(|| uniform(0.0, 1.0, d)),
            },
            SynthFunction::Quadratic { matrix, weights } => {
                let matrix = matrix.clone().unwrap_or_else(|| {
                    let mut q = vec![vec![0.0; d]; d];
                    for i in 0..d {
                        let row = uniform(-1.0, 1.0, d - i);
                        for (k, j) in (i..d).enumerate() {
                            q[i][j] = row[k];
                            q[j][i] = row[k];
                        }
                    }
                    q
                });
                let weights = weights.clone().unwrap_or_else(|| {
                    let trend = uniform(0.0, 1.0, d);
                    matrix.iter().zip(trend).map(|(row, u)| u - row.iter().sum::<f64>()).collect()
                });
                Utility::Quadratic { matrix, weights }
            }
            SynthFunction::RandomMlp { hidden, seed } => {
                let mut r = rng::rng(seed.unwrap_or_else(|| rng::derive_label(self.seed, "mlp")));
                let sizes = [d, *hidden, 1];
                let mut model = MlpModel::zeros(&sizes, Activation::Tanh)?;
                // Hidden pre-activations centred on the cube's midpoint.
                for p in model.params_mut() {
                    *p = r.random_range(-MLP_WEIGHT_SCALE..=MLP_WEIGHT_SCALE);
                }
                let hidden_w: Vec<f64> = model.layer(0).0.to_vec();
                let offset = d * hidden;
                for h in 0..*hidden {
                    let centre: f64 = hidden_w[h * d..(h + 1) * d].iter().sum::<f64>() * 0.5;
                    let jitter = r.random_range(-1.0..=1.0);
                    model.params_mut()[offset + h] = jitter - centre;
                }
                Utility::Mlp { model }
            }
        })
    }
}

/// Generate `2·n_pairs` uniform objects and one preference per disjoint pair.
pub fn gen_dataset(spec: &SynthSpec) -> Result<SyntheticData> {
    let utility = spec.utility()?;
    let d = spec.n_features;
    let mut objects = rng::rng(rng::derive_label(spec.seed, "objects"));
    let mut noise = rng::rng(rng::derive_label(spec.seed, "noise"));
    let mut rows = Vec::with_capacity(2 * spec.n_pairs);
    let mut pairs = Vec::with_capacity(spec.n_pairs);
    for i in 0..spec.n_pairs {
        let (a, b) = loop {
            let a: Vec<f64> = (0..d).map(|_| objects.random::<f64>()).collect();
            let b: Vec<f64> = (0..d).map(|_| objects.random::<f64>()).collect();
            if utility.eval(&a) != utility.eval(&b) {
                break (a, b);
            }
        };
        let mut a_wins = utility.eval(&a) > utility.eval(&b);
        if spec.noise > 0.0 && noise.random::<f64>() < spec.noise {
            a_wins = !a_wins;
        }
        let (ia, ib) = (format!("o{}", 2 * i), format!("o{}", 2 * i + 1));
        let (preferred, other) = if a_wins { (ia.clone(), ib.clone()) } else { (ib.clone(), ia.clone()) };
        pairs.push(Preference {
            preferred,
            other,
            group: i as i64,
        });
        rows.push((ia, a));
        rows.push((ib, b));
    }
    let names: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    let (ids, data): (Vec<String>, Vec<Vec<f64>>) = rows.into_iter().unzip();
    let table = DataTable::from_numeric(&names, ids, &data)?;
    Ok(SyntheticData {
        table,
        prefs: PreferenceSet { pairs },
        utility,
    })
}

/// Pairwise accuracy of the generating utility itself.
pub fn oracle_accuracy(utility: &Utility, prefs: &PreferenceSet, table: &DataTable) -> Result<f64> {
    pairwise_accuracy(|x| utility.eval(x), prefs, table)
}
