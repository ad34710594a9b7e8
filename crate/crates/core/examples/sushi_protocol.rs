//! Spearman correlation under 5-fold cross-validation on the public sushi
//! preference data.
//!
//! ```text
//! cargo run --release --example sushi_protocol -- sushi3.idata sushi3b.5000.10.order
//! ```

use preflearn::learner::LearnerSpec;
use preflearn::monitor::Silent;
use preflearn::ranksvm::SvmParams;
use preflearn::{evaluation, sushi};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let [items, orders] = args.as_slice() else {
        eprintln!("usage: sushi_protocol <sushi3.idata> <sushi3b.5000.10.order>");
        std::process::exit(1);
    };
    let dataset = sushi::load(&std::fs::read(items)?, &std::fs::read(orders)?)?;
    println!("{} items, {} rankings", dataset.table.len(), dataset.orders.orders.len());
    let learner = LearnerSpec::RankSvm(SvmParams::default());
    let r = evaluation::sushi_protocol(&dataset, &learner, &sushi::default_plan(), 5, 1, &Silent)?;
    println!("spearman rho per fold {:?}", r.values);
    println!("mean {:.4}", r.mean);
    Ok(())
}
