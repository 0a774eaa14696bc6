//! Federation primitives one at a time: contribution scores, top-k
//! selection with caching, weighted averaging, and the q-fair update.

use std::collections::BTreeMap;

use flamma::federation::{aggregate, compute_contribution, qffl_aggregate, select_clients};
use flamma::learner::ParameterVector;

fn pv(values: &[f64]) -> ParameterVector {
    ParameterVector::new(values.to_vec()).expect("finite values")
}

fn main() -> flamma::Result<()> {
    // Contribution is closeness to the current global model.
    let global = pv(&[3.0, 4.0]);
    for (name, local) in [
        ("identical", pv(&[3.0, 4.0])),
        ("nearby", pv(&[3.0, 3.0])),
        ("far away", pv(&[-3.0, -4.0])),
    ] {
        println!("{name:<10} omega = {:.3}", compute_contribution(&local, &global)?);
    }

    // Selection takes the top k by contribution and then keeps that roster
    // until the next refresh round.
    let scores: BTreeMap<usize, f64> =
        [(0, 0.9), (1, 0.5), (2, 0.7), (3, 0.9)].into_iter().collect();
    let roster = select_clients(&scores, 2, 1, 10, None)?;
    println!();
    println!("round 1 roster: {roster:?} (ties go to the lower id)");
    let cached = select_clients(&scores, 2, 5, 10, Some(&roster))?;
    assert_eq!(cached, roster);
    println!("round 5 reuses it: {cached:?}");

    // Plain aggregation is the weighted mean of the local models.
    let locals = vec![pv(&[1.0, 0.0]), pv(&[3.0, 2.0])];
    let merged = aggregate(&locals, &[0.25, 0.75])?;
    println!();
    println!("weighted mean of locals: {:?}", merged.values());

    // The q-fair update instead reweights by loss: the struggling client
    // (higher loss) pulls the global model harder as q grows.
    let global = pv(&[0.0, 0.0]);
    let locals = vec![pv(&[1.0, 0.0]), pv(&[0.0, 1.0])];
    let losses = vec![0.2, 2.0];
    for q in [0.0, 1.0, 3.0] {
        let next = qffl_aggregate(&global, &locals, &losses, q, 0.1)?;
        println!(
            "q = {q}: next global [{:.4}, {:.4}]",
            next.values()[0],
            next.values()[1]
        );
    }
    println!("at q = 0 both clients count equally; raising q favors the high-loss one");
    Ok(())
}
