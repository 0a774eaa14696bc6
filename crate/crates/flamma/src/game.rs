//! Stackelberg game between the server (leader) and clients (followers).
//!
//! Each round the server announces a decay factor `gamma`; client `i` answers
//! with a number of local epochs `tau_i`. The client payoff is
//!
//! ```text
//! U_i(tau) = gamma * omega_i * tau - c_i * tau^2
//! ```
//!
//! where `omega_i` is the client's recorded contribution and `c_i` its
//! per-epoch cost coefficient. The quadratic cost makes `U_i` strictly
//! concave, so the follower best response has the closed form
//! `tau_i* = gamma * omega_i / (2 c_i)`. The server anticipates that reply
//! and maximizes its own payoff `sum_i gamma (omega_i + tau_i) - t gamma^2`,
//! which yields `gamma_i* = omega_i c_i / (2 t c_i - omega_i)` whenever that
//! denominator is positive (the concavity guard).

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Slack used when auditing equilibria: a deviation must beat the proposed
/// strategy by more than this to count as an improvement.
pub const EQUILIBRIUM_EPSILON: f64 = 1e-9;

/// Per-client game inputs for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientGameParams {
    pub client_id: usize,
    /// Cost per squared epoch; strictly positive.
    pub cost_coeff: f64,
    /// Recorded contribution, clamped into [0, 1].
    pub contribution: f64,
    pub tau_min: u32,
    pub tau_max: u32,
}

impl ClientGameParams {
    /// Out-of-range contributions are clamped rather than rejected; cost and
    /// epoch bounds must be valid.
    pub fn new(
        client_id: usize,
        cost_coeff: f64,
        contribution: f64,
        tau_min: u32,
        tau_max: u32,
    ) -> Result<Self> {
        if !cost_coeff.is_finite() || cost_coeff <= 0.0 {
            return Err(Error::invalid(format!(
                "cost_coeff must be finite and positive, got {cost_coeff}"
            )));
        }
        if !contribution.is_finite() {
            return Err(Error::invalid("contribution must be finite"));
        }
        if tau_min < 1 || tau_min > tau_max {
            return Err(Error::invalid(format!(
                "epoch bounds must satisfy 1 <= tau_min <= tau_max, got [{tau_min}, {tau_max}]"
            )));
        }
        Ok(Self {
            client_id,
            cost_coeff,
            contribution: contribution.clamp(0.0, 1.0),
            tau_min,
            tau_max,
        })
    }
}

/// Mutable game state carried across rounds by the federation loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    /// 1-based round counter.
    pub round: u32,
    /// Decay factor currently in force.
    pub gamma: f64,
    /// Epochs chosen by each selected client in the last round.
    pub epochs: BTreeMap<usize, u32>,
    /// Last-known contribution per client.
    pub contributions: BTreeMap<usize, f64>,
}

impl GameState {
    /// Round-1 state: gamma at 1 and every contribution at 1.
    pub fn initial(num_clients: usize) -> Self {
        Self {
            round: 1,
            gamma: 1.0,
            epochs: BTreeMap::new(),
            contributions: (0..num_clients).map(|id| (id, 1.0)).collect(),
        }
    }
}

fn check_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}

/// Client payoff `gamma * contribution * tau - cost_coeff * tau^2`.
pub fn client_utility(gamma: f64, contribution: f64, cost_coeff: f64, tau: f64) -> Result<f64> {
    check_finite("gamma", gamma)?;
    check_finite("contribution", contribution)?;
    check_finite("tau", tau)?;
    if !cost_coeff.is_finite() || cost_coeff <= 0.0 {
        return Err(Error::invalid(format!(
            "cost_coeff must be finite and positive, got {cost_coeff}"
        )));
    }
    Ok(gamma * contribution * tau - cost_coeff * tau * tau)
}

/// Unconstrained maximizer of the client payoff: `gamma * contribution / (2 cost)`.
pub fn best_response_tau(gamma: f64, contribution: f64, cost_coeff: f64) -> Result<f64> {
    check_finite("gamma", gamma)?;
    check_finite("contribution", contribution)?;
    if !cost_coeff.is_finite() || cost_coeff <= 0.0 {
        return Err(Error::invalid(format!(
            "cost_coeff must be finite and positive, got {cost_coeff}"
        )));
    }
    Ok(gamma * contribution / (2.0 * cost_coeff))
}

/// Rounds a real best response onto the feasible integer epochs.
///
/// The real maximizer is clamped into `[tau_min, tau_max]`; because the
/// payoff is concave, the best feasible integer is the floor or ceiling of
/// that clamped point (ties go to the smaller epoch count). If even the best
/// integer yields negative utility the client abstains and trains 0 epochs,
/// which keeps individual rationality intact.
pub fn quantize_tau(
    tau_star: f64,
    tau_min: u32,
    tau_max: u32,
    gamma: f64,
    contribution: f64,
    cost_coeff: f64,
) -> Result<u32> {
    check_finite("tau_star", tau_star)?;
    if tau_min < 1 || tau_min > tau_max {
        return Err(Error::invalid(format!(
            "epoch bounds must satisfy 1 <= tau_min <= tau_max, got [{tau_min}, {tau_max}]"
        )));
    }
    let clamped = tau_star.clamp(tau_min as f64, tau_max as f64);
    let lo = clamped.floor() as u32;
    let hi = clamped.ceil() as u32;
    let u_lo = client_utility(gamma, contribution, cost_coeff, lo as f64)?;
    let u_hi = client_utility(gamma, contribution, cost_coeff, hi as f64)?;
    // Ties prefer the smaller epoch count.
    let (best, u_best) = if u_hi > u_lo { (hi, u_hi) } else { (lo, u_lo) };
    if u_best < 0.0 {
        Ok(0)
    } else {
        Ok(best)
    }
}

/// Server payoff `sum_i gamma (omega_i + tau_i) - round * gamma^2`.
///
/// The quadratic penalty is applied once for the whole round, not per client.
pub fn server_utility(
    gamma: f64,
    params: &[ClientGameParams],
    epochs: &[u32],
    round: u32,
) -> Result<f64> {
    check_finite("gamma", gamma)?;
    if params.len() != epochs.len() {
        return Err(Error::invalid(format!(
            "params and epochs lengths differ: {} vs {}",
            params.len(),
            epochs.len()
        )));
    }
    if round < 1 {
        return Err(Error::invalid("round must be at least 1"));
    }
    let reward: f64 = params
        .iter()
        .zip(epochs)
        .map(|(p, &tau)| gamma * (p.contribution + tau as f64))
        .sum();
    Ok(reward - round as f64 * gamma * gamma)
}

/// Leader solution for one client after substituting the follower reply.
///
/// Returns `clamp(omega * c / (2 t c - omega), gamma_min, 1)` when the
/// denominator is positive; otherwise the substituted payoff is convex in
/// gamma and the boundary maximum at 1 is used.
pub fn optimal_gamma(contribution: f64, cost_coeff: f64, round: u32, gamma_min: f64) -> Result<f64> {
    check_finite("contribution", contribution)?;
    if !(0.0..=1.0).contains(&contribution) {
        return Err(Error::invalid(format!(
            "contribution must lie in [0, 1], got {contribution}"
        )));
    }
    if !cost_coeff.is_finite() || cost_coeff <= 0.0 {
        return Err(Error::invalid(format!(
            "cost_coeff must be finite and positive, got {cost_coeff}"
        )));
    }
    if round < 1 {
        return Err(Error::invalid("round must be at least 1"));
    }
    if !gamma_min.is_finite() || !(0.0..=1.0).contains(&gamma_min) {
        return Err(Error::invalid(format!(
            "gamma_min must lie in [0, 1], got {gamma_min}"
        )));
    }
    let denom = 2.0 * round as f64 * cost_coeff - contribution;
    if denom > 0.0 {
        Ok((contribution * cost_coeff / denom).clamp(gamma_min, 1.0))
    } else {
        Ok(1.0)
    }
}

/// Individual rationality: the payoff at `tau` is non-negative.
pub fn ir_satisfied(gamma: f64, contribution: f64, cost_coeff: f64, tau: f64) -> Result<bool> {
    Ok(client_utility(gamma, contribution, cost_coeff, tau)? >= 0.0)
}

/// Audits a strategy profile: every client's proposed epochs must be within
/// [`EQUILIBRIUM_EPSILON`] of the best utility on the grid
/// `{0, step, 2 step, ..., tau_max}`. Clients are decoupled, so the check is
/// per client.
pub fn verify_equilibrium(
    params: &[ClientGameParams],
    gamma: f64,
    proposed: &[u32],
    grid_step: f64,
) -> Result<bool> {
    if params.len() != proposed.len() {
        return Err(Error::invalid(format!(
            "params and proposed lengths differ: {} vs {}",
            params.len(),
            proposed.len()
        )));
    }
    if !grid_step.is_finite() || grid_step <= 0.0 {
        return Err(Error::invalid(format!(
            "grid_step must be finite and positive, got {grid_step}"
        )));
    }
    for (p, &tau) in params.iter().zip(proposed) {
        let held = client_utility(gamma, p.contribution, p.cost_coeff, tau as f64)?;
        let steps = (p.tau_max as f64 / grid_step + 1e-12).floor() as u64;
        for m in 0..=steps {
            let candidate = m as f64 * grid_step;
            let u = client_utility(gamma, p.contribution, p.cost_coeff, candidate)?;
            if u > held + EQUILIBRIUM_EPSILON {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
