//! One client's local SGD, the decay-scaled step, and a gradient self-check.
//!
//! The effective step size is `lr * gamma`, folded in once before training,
//! so halving gamma is bit-identical to halving the learning rate. The last
//! section compares the analytic gradient against central finite differences.

use flamma::datasets::generate_synthetic;
use flamma::learner::{
    finite_diff_gradient, gradient, init_params, local_train, loss, ModelSpec,
};

fn main() -> flamma::Result<()> {
    let dataset = generate_synthetic(3, 5, 80, 0.4, 21)?;
    let batch = dataset.to_batch();
    let spec = ModelSpec::logistic(dataset.dim(), dataset.num_classes())?;
    let w0 = init_params(&spec, 21);

    println!("logistic model, {} parameters, {} training rows", w0.len(), batch.rows());
    println!("initial loss {:.6}", loss(&spec, &w0, &batch)?);

    let mut w = w0.clone();
    for epoch in 1..=5 {
        w = local_train(&spec, &w, &batch, 1, 0.2, 1.0, 16, 0.0, None, 100 + epoch)?;
        println!("after epoch {epoch}: loss {:.6}", loss(&spec, &w, &batch)?);
    }

    // gamma scales the step, nothing else: (lr, gamma) == (lr * gamma, 1).
    let half_gamma = local_train(&spec, &w0, &batch, 3, 0.2, 0.5, 16, 0.0, None, 7)?;
    let half_lr = local_train(&spec, &w0, &batch, 3, 0.1, 1.0, 16, 0.0, None, 7)?;
    assert_eq!(half_gamma.values(), half_lr.values());
    println!();
    println!("gamma 0.5 at lr 0.2 reproduces lr 0.1 bit for bit");

    let analytic = gradient(&spec, &w0, &batch)?;
    let numeric = finite_diff_gradient(&spec, &w0, &batch, 1e-5)?;
    let mut worst = 0.0f64;
    for (a, n) in analytic.values().iter().zip(numeric.values()) {
        worst = worst.max((a - n).abs() / (1.0 + a.abs()));
    }
    println!("worst gradient coordinate error vs finite differences: {worst:.3e}");
    assert!(worst < 1e-5);
    Ok(())
}
