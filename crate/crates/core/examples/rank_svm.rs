//! Train ranking SVMs with each kernel on a quadratic synthetic problem.

use preflearn::evaluation::accuracy_from_scores;
use preflearn::monitor::Silent;
use preflearn::ranksvm::{fit, KernelSpec, SvmParams};
use preflearn::synthetic::{gen_dataset, SynthFunction, SynthSpec};

fn main() -> preflearn::Result<()> {
    let data = gen_dataset(&SynthSpec {
        n_pairs: 600,
        n_features: 5,
        function: SynthFunction::Quadratic { matrix: None, weights: None },
        noise: 0.0,
        seed: 3,
    })?;
    let x = data.table.numeric_matrix()?;
    let pairs = data.prefs.indices(&data.table)?;
    let (train, test) = pairs.split_at(400);

    let kernels = [
        ("linear", KernelSpec::Linear),
        ("poly", KernelSpec::Polynomial { gamma: Some(1.0), coef0: 1.0, degree: 2 }),
        ("rbf", KernelSpec::Rbf { gamma: Some(0.5) }),
    ];
    for (name, kernel) in kernels {
        let params = SvmParams { c: 1.0, kernel, ..SvmParams::default() };
        let t = fit(&x, train, &params, &Silent)?;
        let scores: Vec<f64> = x.iter().map(|r| t.model.score(r)).collect::<Result<_, _>>()?;
        println!(
            "{name:<6} held-out accuracy {:.4}  support pairs {:>3}  epochs {:>4}  converged {}",
            accuracy_from_scores(&scores, test),
            t.report.support_pairs,
            t.report.epochs,
            t.report.converged
        );
    }
    Ok(())
}
