//! Leader side of the training game: the decay factor over time.
//!
//! After substituting the follower reply, the server's per-client optimum is
//! `omega * c / (2 t c - omega)`, clamped into `[gamma_min, 1]`. The round
//! index t sits in the denominator, so the schedule decays: aggressive
//! incentives early, cheap maintenance later.

use flamma::game::optimal_gamma;

fn main() -> flamma::Result<()> {
    let gamma_min = 0.01;

    println!("round   cheap client   costly client   low contributor");
    println!("        (c=0.05,w=1)   (c=0.50,w=1)    (c=0.05,w=0.3)");
    for round in [1, 2, 3, 5, 10, 20, 50, 100] {
        let cheap = optimal_gamma(1.0, 0.05, round, gamma_min)?;
        let costly = optimal_gamma(1.0, 0.5, round, gamma_min)?;
        let low = optimal_gamma(0.3, 0.05, round, gamma_min)?;
        println!("{round:>5}   {cheap:>12.4}   {costly:>13.4}   {low:>15.4}");
    }

    // Early rounds can hit the convex branch: with 2 t c <= omega the
    // substituted payoff has no interior maximum and the cap at 1 is optimal.
    let early = optimal_gamma(1.0, 0.05, 1, gamma_min)?;
    assert_eq!(early, 1.0);
    println!();
    println!("round 1 with c = 0.05: denominator 2tc - omega is negative, gamma pegs at 1");

    // Late rounds bottom out at the floor instead of decaying to zero.
    let late = optimal_gamma(1.0, 0.05, 10_000, gamma_min)?;
    assert_eq!(late, gamma_min);
    println!("round 10000: schedule rests on the floor gamma_min = {gamma_min}");
    Ok(())
}
