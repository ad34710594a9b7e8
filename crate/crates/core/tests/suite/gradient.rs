use preflearn::ann::backprop::{loss_gradient, mean_pair_loss};
use preflearn::ann::{Activation, MlpModel};
use preflearn::rng;
use proptest::prelude::*;

/// Analytic gradient of the mean pair loss against central differences
/// on an 8-10-1 network (101 parameters).
pub fn matches_finite_differences() -> Result<(), String> {
    let sizes = [8, 10, 1];
    let strategy = (
        any::<u64>(),
        prop_oneof![Just(Activation::Sigmoid), Just(Activation::Tanh)],
        0.5f64..2.0,
        proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 8), 6..12),
    );
    super::run(50, strategy, |(seed, act, sigma, x)| {
        let model = MlpModel::random(&sizes, act, 1.0, &mut rng::rng(seed)).unwrap();
        prop_assert!(model.params().len() >= 100);
        let pairs: Vec<(usize, usize)> = (0..x.len()).map(|i| (i, (i + 1) % x.len())).collect();
        let grad = loss_gradient(&model, &x, &pairs, sigma);
        let h = 1e-5;
        for i in 0..model.params().len() {
            let mut p = model.params().to_vec();
            p[i] += h;
            let up = mean_pair_loss(&MlpModel::from_params(&sizes, act, p.clone()).unwrap(), &x, &pairs, sigma);
            p[i] -= 2.0 * h;
            let down = mean_pair_loss(&MlpModel::from_params(&sizes, act, p).unwrap(), &x, &pairs, sigma);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
            prop_assert!(rel < 1e-4, "parameter {}: analytic {} numeric {}", i, grad[i], fd);
        }
        Ok(())
    })
}
