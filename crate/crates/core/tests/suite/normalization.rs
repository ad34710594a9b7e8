use preflearn::dataset::DataTable;
use preflearn::preprocess::{min_max, z_score};
use proptest::prelude::*;

fn table(values: &[f64]) -> DataTable {
    let ids = (0..values.len()).map(|i| format!("r{i}")).collect();
    let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v, 1.0]).collect();
    DataTable::from_numeric(&["v".into(), "c".into()], ids, &rows).unwrap()
}

fn column(t: &DataTable) -> Vec<f64> {
    t.column(0).map(|v| v.as_num().unwrap()).collect()
}

pub fn invariants() -> Result<(), String> {
    let values = proptest::collection::vec(-1e3f64..1e3, 2..60)
        .prop_filter("non-constant", |v| v.iter().any(|&x| (x - v[0]).abs() > 1e-3));
    super::run(200, values, |values| {
        let t = table(&values);
        let mm = column(&min_max(&t, "v").unwrap());
        let lo = mm.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = mm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo.abs() <= 1e-9 && (hi - 1.0).abs() <= 1e-9, "range [{}, {}]", lo, hi);

        let z = column(&z_score(&t, "v").unwrap());
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        prop_assert!(mean.abs() <= 1e-9, "mean {}", mean);
        // Either population or sample variance convention gives 1 up to n/(n-1).
        let sample = var * n / (n - 1.0);
        prop_assert!((var - 1.0).abs() <= 1e-9 || (sample - 1.0).abs() <= 1e-9, "variance {}", var);

        // Other columns are untouched.
        let other: Vec<f64> = min_max(&t, "v").unwrap().column(1).map(|v| v.as_num().unwrap()).collect();
        prop_assert!(other.iter().all(|&v| v == 1.0));
        Ok(())
    })
}
