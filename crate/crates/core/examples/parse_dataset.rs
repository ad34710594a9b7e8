//! Read a single-file dataset (one rating column) and a dual-file dataset
//! (objects plus ranked lists), then print their schema and pair counts.

use preflearn::dataset::{parse_dual_file, parse_single_file, Dataset, ParserOptions};
use preflearn::preprocess::{compute_stats, StatSummary};

const RATINGS: &str = "\
id,size,colour,user,stars
a,1.0,red,1,5
b,2.5,blue,1,3
c,0.5,red,1,4
d,1.5,green,2,2
e,3.0,blue,2,4
";

const OBJECTS: &str = "id;x;y\np;0.1;0.9\nq;0.4;0.2\nr;0.8;0.5\n";
// One ranked list per line, most preferred first.
const ORDERS: &str = "r;p;q\nq;r\n";

fn main() -> preflearn::Result<()> {
    let opts = ParserOptions {
        has_header: true,
        id_column: Some("id".into()),
        group_column: Some("user".into()),
        label_column: Some("stars".into()),
        nominal_columns: vec!["colour".into()],
        ..ParserOptions::default()
    };
    let (table, orders) = parse_single_file(RATINGS.as_bytes(), &opts)?;
    let ratings = Dataset::new(table, orders)?;
    println!("single file: {} objects, {} pairs", ratings.table.len(), ratings.preferences().len());
    for stat in compute_stats(&ratings.table)?.features {
        match stat.summary {
            StatSummary::Numeric { min, max, mean, std } => {
                println!("  {:<8} numeric  min {min} max {max} mean {mean:.3} std {std:.3}", stat.name)
            }
            StatSummary::Nominal { frequencies } => println!("  {:<8} nominal  {frequencies:?}", stat.name),
        }
    }

    let opts = ParserOptions {
        separator: ';',
        has_header: true,
        ..ParserOptions::default()
    };
    let (table, orders) = parse_dual_file(OBJECTS.as_bytes(), ORDERS.as_bytes(), &opts)?;
    let lists = Dataset::new(table, orders)?;
    println!("dual file: {} objects, {} pairs", lists.table.len(), lists.preferences().len());
    for p in &lists.preferences().pairs {
        println!("  group {}: {} > {}", p.group, p.preferred, p.other);
    }

    // Errors carry the offending line.
    let bad = "id;x;y\np;0.1;oops\n";
    if let Err(e) = parse_dual_file(bad.as_bytes(), ORDERS.as_bytes(), &opts) {
        println!("rejected: {e}");
    }
    Ok(())
}
