//! Convergence-theorem machinery: assembling the bound and checking it live.
//!
//! First the bound is evaluated symbolically from hand-picked constants to
//! show its shape (it shrinks like 1/T). Then the empirical harness runs the
//! full protocol on strongly convex quadratic clients, where the optimum and
//! every constant are known exactly, and verifies that the measured
//! optimality gap sits under the theorem at several horizons.

use flamma::analysis::{bound_B, bound_C, check_bound_quadratic, theorem_bound, ConvergenceConstants};

fn main() -> flamma::Result<()> {
    let constants = ConvergenceConstants::new(
        1.0,             // rho, strong convexity
        4.0,             // beta, smoothness
        2.0,             // G^2, gradient bound
        vec![0.5; 4],    // sigma_k^2, per-client noise
        5,               // K clients per round
        10,              // tau_max
        1.0,             // gamma_max
        3.0,             // M = ||w1 - w*||^2
        vec![0.25; 4],   // aggregation weights
    )?;
    println!(
        "derived: kappa = {}, xi = {}, eta = {:.4}",
        constants.kappa, constants.xi, constants.eta
    );
    println!("B = {:.4}, C = {:.4}", bound_B(&constants), bound_C(&constants));
    println!();
    println!("    T   theorem bound");
    for t in [10, 100, 1000, 10000] {
        println!("{t:>5}   {:.6}", theorem_bound(&constants, t)?);
    }

    println!();
    let report = check_bound_quadratic(8, 4, 40, 3, 5)?;
    println!("live check, 8 quadratic clients, 5 seeds, T = 40:");
    println!("  measured G^2 = {:.4} (with safety margin)", report.constants.g2);
    println!("  empirical gap  {:.6e}", report.empirical_gap);
    println!("  theorem bound  {:.6e}", report.bound);
    println!("  bound {}", if report.holds { "holds" } else { "FAILS" });
    for (i, gap) in report.per_seed_gaps.iter().enumerate() {
        println!("    seed {i}: gap {gap:.6e}");
    }
    assert!(report.holds);
    Ok(())
}
