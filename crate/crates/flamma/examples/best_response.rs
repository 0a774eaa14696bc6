//! Follower side of the training game: how a client picks its epoch count.
//!
//! The payoff is `gamma * omega * tau - c * tau^2`, a downward parabola in
//! tau, so the unconstrained optimum is `gamma * omega / (2c)`. Feasible
//! epochs are integers in `[tau_min, tau_max]`, and the client abstains
//! entirely (tau = 0) whenever every feasible choice loses money.

use flamma::game::{best_response_tau, client_utility, ir_satisfied, quantize_tau};

fn main() -> flamma::Result<()> {
    let gamma = 0.8;
    let omega = 0.9;

    println!("decay gamma = {gamma}, contribution omega = {omega}");
    println!();
    println!("{:>8} {:>10} {:>6} {:>12} {:>5}", "cost", "tau*", "tau", "utility", "IR");

    for cost in [0.02, 0.05, 0.1, 0.2, 0.4, 2.0] {
        let tau_star = best_response_tau(gamma, omega, cost)?;
        let tau = quantize_tau(tau_star, 1, 10, gamma, omega, cost)?;
        let utility = client_utility(gamma, omega, cost, tau as f64)?;
        let rational = ir_satisfied(gamma, omega, cost, tau as f64)?;
        println!(
            "{cost:>8.2} {tau_star:>10.3} {tau:>6} {utility:>12.4} {:>5}",
            if rational { "yes" } else { "no" }
        );
    }

    // The real optimum at cost 0.2 is 1.8; the integer reply must be its
    // floor or ceiling, never anything further away.
    let tau_star = best_response_tau(gamma, omega, 0.2)?;
    let u_floor = client_utility(gamma, omega, 0.2, tau_star.floor())?;
    let u_ceil = client_utility(gamma, omega, 0.2, tau_star.ceil())?;
    println!();
    println!("cost 0.2: floor pays {u_floor:.4}, ceil pays {u_ceil:.4}");

    // An expensive client abstains rather than run at a loss.
    let tau = quantize_tau(best_response_tau(gamma, omega, 2.0)?, 1, 10, gamma, omega, 2.0)?;
    assert_eq!(tau, 0);
    println!("cost 2.0: training one epoch pays {:.4}, so the client sits out", client_utility(gamma, omega, 2.0, 1.0)?);
    Ok(())
}
