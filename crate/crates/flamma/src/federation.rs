//! Round orchestration: contribution scoring, selection, decay scheduling,
//! client epoch choice, local training dispatch, and aggregation.
//!
//! One [`Experiment`] owns the global model, the per-client data, and the
//! game state. Each round runs the leader-follower protocol: refresh
//! contribution scores from the clients' last-known local models, select the
//! top contributors, announce the decay factor, let each selected client
//! pick its utility-maximizing epoch count, train locally with decay-scaled
//! steps, and aggregate the returned models. FedAvg, FedProx, and q-FFL run
//! through the same loop with a fixed decay of 1, fixed epochs, and uniform
//! random selection.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{accuracy, accuracy_variance};
use crate::datasets::{client_weights, Dataset, Partition};
use crate::error::{Error, Result};
use crate::game::{
    best_response_tau, client_utility, optimal_gamma, quantize_tau, server_utility,
    ClientGameParams, GameState,
};
use crate::learner::{init_params, local_train, loss, Batch, ModelSpec, ParameterVector};
use crate::rng::{derive_seed, rng_from, stream};

/// Training protocol run by the experiment loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Flamma,
    FedAvg,
    FedProx,
    QFfl,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Flamma => "flamma",
            Algorithm::FedAvg => "fedavg",
            Algorithm::FedProx => "fedprox",
            Algorithm::QFfl => "qffl",
        };
        f.write_str(name)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flamma" => Ok(Algorithm::Flamma),
            "fedavg" => Ok(Algorithm::FedAvg),
            "fedprox" => Ok(Algorithm::FedProx),
            "qffl" => Ok(Algorithm::QFfl),
            other => Err(Error::invalid(format!(
                "unknown algorithm '{other}', expected flamma, fedavg, fedprox, or qffl"
            ))),
        }
    }
}

/// Everything the round loop needs besides data and models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationConfig {
    pub algorithm: Algorithm,
    pub num_clients: usize,
    /// K, the number of clients trained per round.
    pub clients_per_round: usize,
    /// T, the number of rounds.
    pub total_rounds: u32,
    /// Base learning rate; the effective step is `lr * gamma`.
    pub lr: f64,
    /// Epoch count used by the baselines; the leader-follower protocol
    /// derives its own per-client count.
    pub tau_fixed: u32,
    pub tau_min: u32,
    pub tau_max: u32,
    /// Per-client cost coefficients are drawn uniformly from this range.
    pub cost_coeff_range: (f64, f64),
    pub gamma_min: f64,
    /// Contribution scores refresh every this many rounds.
    pub refresh_interval: u32,
    pub qffl_q: f64,
    pub prox_mu: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Flamma,
            num_clients: 20,
            clients_per_round: 10,
            total_rounds: 100,
            lr: 0.05,
            tau_fixed: 5,
            tau_min: 1,
            tau_max: 10,
            cost_coeff_range: (0.05, 0.5),
            gamma_min: 0.01,
            refresh_interval: 10,
            qffl_q: 1.0,
            prox_mu: 0.01,
            batch_size: 32,
            seed: 42,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_clients == 0 {
            return Err(Error::invalid("num_clients must be positive"));
        }
        if self.clients_per_round == 0 || self.clients_per_round > self.num_clients {
            return Err(Error::invalid(format!(
                "clients_per_round must lie in [1, {}], got {}",
                self.num_clients, self.clients_per_round
            )));
        }
        if self.total_rounds == 0 {
            return Err(Error::invalid("total_rounds must be at least 1"));
        }
        if !self.lr.is_finite() || self.lr <= 0.0 {
            return Err(Error::invalid(format!("lr must be positive, got {}", self.lr)));
        }
        if self.tau_fixed == 0 {
            return Err(Error::invalid("tau_fixed must be at least 1"));
        }
        if self.tau_min < 1 || self.tau_min > self.tau_max {
            return Err(Error::invalid(format!(
                "epoch bounds must satisfy 1 <= tau_min <= tau_max, got [{}, {}]",
                self.tau_min, self.tau_max
            )));
        }
        let (lo, hi) = self.cost_coeff_range;
        if !lo.is_finite() || !hi.is_finite() || lo <= 0.0 || hi < lo {
            return Err(Error::invalid(format!(
                "cost_coeff_range must satisfy 0 < low <= high, got [{lo}, {hi}]"
            )));
        }
        if !self.gamma_min.is_finite() || !(0.0..=1.0).contains(&self.gamma_min) {
            return Err(Error::invalid(format!(
                "gamma_min must lie in [0, 1], got {}",
                self.gamma_min
            )));
        }
        if self.refresh_interval == 0 {
            return Err(Error::invalid("refresh_interval must be at least 1"));
        }
        if !self.qffl_q.is_finite() || self.qffl_q < 0.0 {
            return Err(Error::invalid(format!(
                "qffl_q must be non-negative, got {}",
                self.qffl_q
            )));
        }
        if !self.prox_mu.is_finite() || self.prox_mu < 0.0 {
            return Err(Error::invalid(format!(
                "prox_mu must be non-negative, got {}",
                self.prox_mu
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Everything recorded about one completed round.
///
/// `per_client_accuracy` is in percent so that `accuracy_variance` is its
/// population variance verbatim (percentage points squared);
/// `global_accuracy` is a fraction in [0, 1]. Runs without a classifier
/// record zero for all accuracy fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub algorithm: Algorithm,
    pub gamma: f64,
    pub selected: Vec<usize>,
    pub epochs_chosen: BTreeMap<usize, u32>,
    pub global_accuracy: f64,
    pub per_client_accuracy: BTreeMap<usize, f64>,
    pub accuracy_variance: f64,
    pub client_utilities: BTreeMap<usize, f64>,
    pub server_utility: f64,
    pub global_loss: f64,
    /// Contribution scores in force this round (after any refresh).
    pub contributions: BTreeMap<usize, f64>,
}

/// Closeness score `1 - ||local - global|| / ||global||`, clamped to [0, 1].
///
/// A zero global model makes the ratio undefined; by convention an exactly
/// unchanged local model scores 1 and anything else scores 0.
pub fn compute_contribution(local: &ParameterVector, global_w: &ParameterVector) -> Result<f64> {
    let gnorm = global_w.norm();
    if gnorm == 0.0 {
        return Ok(if local == global_w { 1.0 } else { 0.0 });
    }
    Ok((1.0 - local.distance(global_w)? / gnorm).clamp(0.0, 1.0))
}

/// Top-k selection by contribution, refreshed on a fixed cadence.
///
/// On refresh rounds (`(round - 1) % refresh_interval == 0`) returns the k
/// highest-contribution clients, ties broken toward the lower id; on other
/// rounds returns the cached selection unchanged. The returned ids are
/// sorted ascending.
pub fn select_clients(
    contributions: &BTreeMap<usize, f64>,
    k: usize,
    round: u32,
    refresh_interval: u32,
    cached: Option<&[usize]>,
) -> Result<Vec<usize>> {
    if contributions.is_empty() {
        return Err(Error::invalid("contribution map is empty"));
    }
    if k == 0 || k > contributions.len() {
        return Err(Error::invalid(format!(
            "k must lie in [1, {}], got {k}",
            contributions.len()
        )));
    }
    if round < 1 || refresh_interval < 1 {
        return Err(Error::invalid("round and refresh_interval must be at least 1"));
    }
    if (round - 1) % refresh_interval != 0 {
        let cached = cached.ok_or_else(|| {
            Error::invalid(format!("round {round} is not a refresh round and no selection is cached"))
        })?;
        if cached.len() != k {
            return Err(Error::invalid(format!(
                "cached selection holds {} clients, expected {k}",
                cached.len()
            )));
        }
        return Ok(cached.to_vec());
    }
    if let Some((id, bad)) = contributions.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "contribution for client {id} is not finite: {bad}"
        )));
    }
    let mut ids: Vec<usize> = contributions.keys().copied().collect();
    ids.sort_by(|&a, &b| {
        contributions[&b]
            .partial_cmp(&contributions[&a])
            .expect("finiteness checked above")
            .then(a.cmp(&b))
    });
    ids.truncate(k);
    ids.sort_unstable();
    Ok(ids)
}

/// Decay factor for the round: the mean of each selected client's optimal
/// value, clamped to `[gamma_min, 1]`. Round 1 always announces 1.
pub fn update_gamma(params: &[ClientGameParams], round: u32, gamma_min: f64) -> Result<f64> {
    if params.is_empty() {
        return Err(Error::invalid("update_gamma needs at least one selected client"));
    }
    if round < 1 {
        return Err(Error::invalid("round must be at least 1"));
    }
    if round == 1 {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    for p in params {
        sum += optimal_gamma(p.contribution, p.cost_coeff, round, gamma_min)?;
    }
    Ok((sum / params.len() as f64).clamp(gamma_min, 1.0))
}

/// Weighted mean of local models. Weights are renormalized over the given
/// subset, so any non-negative weighting with positive total is accepted.
pub fn aggregate(locals: &[ParameterVector], weights: &[f64]) -> Result<ParameterVector> {
    if locals.is_empty() {
        return Err(Error::invalid("aggregate needs at least one local model"));
    }
    if locals.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} local models but {} weights",
            locals.len(),
            weights.len()
        )));
    }
    if let Some(&bad) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(Error::invalid(format!(
            "weights must be finite and non-negative, got {bad}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::invalid("aggregation weights sum to zero"));
    }
    let dim = locals[0].len();
    let mut out = ParameterVector::zeros(dim);
    for (w, l) in weights.iter().zip(locals) {
        if l.len() != dim {
            return Err(Error::invalid(format!(
                "local model dimensions differ: {} vs {dim}",
                l.len()
            )));
        }
        out.axpy(w / total, l);
    }
    Ok(out)
}

/// Loss-weighted fair aggregation step.
///
/// With `delta_k = (global_w - local_k) / lr` the update is
/// `global_w - sum_k F_k^q delta_k / sum_k h_k` where
/// `h_k = q F_k^{q-1} ||delta_k||^2 + F_k^q / lr`. At `q = 0` this reduces
/// to the unweighted mean of the locals.
pub fn qffl_aggregate(
    global_w: &ParameterVector,
    locals: &[ParameterVector],
    losses: &[f64],
    q: f64,
    lr: f64,
) -> Result<ParameterVector> {
    if locals.is_empty() {
        return Err(Error::invalid("qffl_aggregate needs at least one local model"));
    }
    if locals.len() != losses.len() {
        return Err(Error::invalid(format!(
            "{} local models but {} losses",
            locals.len(),
            losses.len()
        )));
    }
    if !q.is_finite() || q < 0.0 {
        return Err(Error::invalid(format!("q must be non-negative, got {q}")));
    }
    if !lr.is_finite() || lr <= 0.0 {
        return Err(Error::invalid(format!("lr must be positive, got {lr}")));
    }
    if let Some(&bad) = losses.iter().find(|l| !l.is_finite() || **l <= 0.0) {
        return Err(Error::invalid(format!(
            "q-ffl losses must be finite and positive, got {bad}"
        )));
    }
    let dim = global_w.len();
    let mut numerator = ParameterVector::zeros(dim);
    let mut h_total = 0.0;
    for (local, &fk) in locals.iter().zip(losses) {
        if local.len() != dim {
            return Err(Error::invalid(format!(
                "local model dimensions differ: {} vs {dim}",
                local.len()
            )));
        }
        let mut delta = global_w.clone();
        delta.axpy(-1.0, local);
        let scale = 1.0 / lr;
        let delta_sq = scale * scale * {
            let mut s = 0.0;
            for v in delta.values() {
                s += v * v;
            }
            s
        };
        let fq = fk.powf(q);
        numerator.axpy(fq * scale, &delta);
        // fk > 0 keeps the q = 0 case finite: 0 * fk^{-1} = 0.
        h_total += q * fk.powf(q - 1.0) * delta_sq + fq / lr;
    }
    let mut out = global_w.clone();
    out.axpy(-1.0 / h_total, &numerator);
    Ok(out)
}

struct ClientData {
    train: Batch,
    eval: Batch,
}

/// A fully materialized run: global model, per-client data and specs, game
/// state, and the records of every completed round.
pub struct Experiment {
    config: FederationConfig,
    specs: Vec<ModelSpec>,
    clients: Vec<ClientData>,
    test: Option<Batch>,
    weights: Vec<f64>,
    costs: Vec<f64>,
    global: ParameterVector,
    state: GameState,
    last_locals: BTreeMap<usize, ParameterVector>,
    cached_selection: Option<Vec<usize>>,
    records: Vec<RoundRecord>,
}

impl Experiment {
    /// Builds a run in which every client trains the same model family.
    pub fn new(
        config: FederationConfig,
        spec: ModelSpec,
        dataset: &Dataset,
        partition: &Partition,
        test: Option<&Dataset>,
    ) -> Result<Self> {
        let specs = vec![spec; config.num_clients];
        Self::with_client_specs(config, specs, dataset, partition, test)
    }

    /// Builds a run with one model spec per client. All specs must share a
    /// parameter count; this is how per-client quadratic objectives reuse
    /// the same round loop.
    pub fn with_client_specs(
        config: FederationConfig,
        specs: Vec<ModelSpec>,
        dataset: &Dataset,
        partition: &Partition,
        test: Option<&Dataset>,
    ) -> Result<Self> {
        config.validate()?;
        if specs.len() != config.num_clients {
            return Err(Error::invalid(format!(
                "{} model specs for {} clients",
                specs.len(),
                config.num_clients
            )));
        }
        if partition.num_clients() != config.num_clients {
            return Err(Error::invalid(format!(
                "partition covers {} clients, config says {}",
                partition.num_clients(),
                config.num_clients
            )));
        }
        let dim = specs[0].param_count();
        if specs.iter().any(|s| s.param_count() != dim) {
            return Err(Error::invalid("all client specs must share a parameter count"));
        }
        let weights = client_weights(partition)?;
        let mut clients = Vec::with_capacity(config.num_clients);
        for c in 0..config.num_clients {
            let rows = partition.client_rows(c);
            if rows.is_empty() {
                return Err(Error::invalid(format!("client {c} has no data")));
            }
            // A fifth of each client's rows (rounded up) is held out for
            // its own accuracy metric; a single-row client shares the row.
            let (train_rows, eval_rows) = if rows.len() == 1 {
                (rows.to_vec(), rows.to_vec())
            } else {
                let mut order = rows.to_vec();
                let mut rng = rng_from(config.seed, &[stream::SPLIT, c as u64]);
                use rand::seq::SliceRandom;
                order.shuffle(&mut rng);
                let eval_count = rows.len().div_ceil(5);
                let mut eval: Vec<usize> = order[..eval_count].to_vec();
                let mut train: Vec<usize> = order[eval_count..].to_vec();
                eval.sort_unstable();
                train.sort_unstable();
                (train, eval)
            };
            clients.push(ClientData {
                train: dataset.batch_of(&train_rows),
                eval: dataset.batch_of(&eval_rows),
            });
        }
        let mut cost_rng = rng_from(config.seed, &[stream::COSTS]);
        let (lo, hi) = config.cost_coeff_range;
        let costs: Vec<f64> = (0..config.num_clients)
            .map(|_| {
                use rand::Rng;
                cost_rng.gen_range(lo..=hi)
            })
            .collect();
        let global = init_params(&specs[0], config.seed);
        let state = GameState::initial(config.num_clients);
        Ok(Self {
            config,
            specs,
            clients,
            test: test.map(Dataset::to_batch),
            weights,
            costs,
            global,
            state,
            last_locals: BTreeMap::new(),
            cached_selection: None,
            records: Vec::new(),
        })
    }

    pub fn config(&self) -> &FederationConfig {
        &self.config
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn global(&self) -> &ParameterVector {
        &self.global
    }

    pub fn records(&self) -> &[RoundRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<RoundRecord> {
        self.records
    }

    /// Replaces the initial global model. Only valid before the first round.
    pub fn set_global(&mut self, w: ParameterVector) -> Result<()> {
        if !self.records.is_empty() {
            return Err(Error::invalid("cannot replace the model after training started"));
        }
        if w.len() != self.global.len() {
            return Err(Error::invalid(format!(
                "replacement model has {} parameters, expected {}",
                w.len(),
                self.global.len()
            )));
        }
        self.global = w;
        Ok(())
    }

    /// Weighted loss of the current global model over all client training
    /// data; this is the objective the protocol minimizes.
    pub fn global_loss(&self) -> Result<f64> {
        let mut total = 0.0;
        for c in 0..self.config.num_clients {
            total += self.weights[c] * loss(&self.specs[c], &self.global, &self.clients[c].train)?;
        }
        Ok(total)
    }

    /// Largest squared gradient norm of any client's objective at the
    /// current global model. Used by the bound checker.
    pub fn max_client_gradient_sq(&self) -> Result<f64> {
        let mut best: f64 = 0.0;
        for c in 0..self.config.num_clients {
            let g = crate::learner::gradient(&self.specs[c], &self.global, &self.clients[c].train)?;
            best = best.max(g.norm().powi(2));
        }
        Ok(best)
    }

    /// Runs one round and returns its record.
    pub fn run_round(&mut self) -> Result<RoundRecord> {
        let round = self.state.round;
        if round > self.config.total_rounds {
            return Err(Error::invalid(format!(
                "experiment already ran its {} rounds",
                self.config.total_rounds
            )));
        }
        let cfg = &self.config;
        let algorithm = cfg.algorithm;
        let is_refresh = (round - 1) % cfg.refresh_interval == 0;

        // Contribution refresh from each client's last-known local model;
        // clients never heard from keep their current score.
        if is_refresh {
            for (&id, local) in &self.last_locals {
                let omega = compute_contribution(local, &self.global)?;
                self.state.contributions.insert(id, omega);
            }
        }

        let selected = match algorithm {
            Algorithm::Flamma => {
                let sel = select_clients(
                    &self.state.contributions,
                    cfg.clients_per_round,
                    round,
                    cfg.refresh_interval,
                    self.cached_selection.as_deref(),
                )?;
                self.cached_selection = Some(sel.clone());
                sel
            }
            _ => {
                let mut rng = rng_from(cfg.seed, &[stream::SELECTION, round as u64]);
                let mut sel =
                    rand::seq::index::sample(&mut rng, cfg.num_clients, cfg.clients_per_round)
                        .into_vec();
                sel.sort_unstable();
                sel
            }
        };

        let sel_params: Vec<ClientGameParams> = selected
            .iter()
            .map(|&i| {
                ClientGameParams::new(
                    i,
                    self.costs[i],
                    self.state.contributions[&i],
                    cfg.tau_min,
                    cfg.tau_max,
                )
            })
            .collect::<Result<_>>()?;

        let gamma = match algorithm {
            Algorithm::Flamma => update_gamma(&sel_params, round, cfg.gamma_min)?,
            _ => 1.0,
        };

        let mut epochs_chosen = BTreeMap::new();
        let mut client_utilities = BTreeMap::new();
        for p in &sel_params {
            let tau = match algorithm {
                Algorithm::Flamma => {
                    let tau_star = best_response_tau(gamma, p.contribution, p.cost_coeff)?;
                    quantize_tau(tau_star, cfg.tau_min, cfg.tau_max, gamma, p.contribution, p.cost_coeff)?
                }
                _ => cfg.tau_fixed,
            };
            let util = client_utility(gamma, p.contribution, p.cost_coeff, f64::from(tau))?;
            epochs_chosen.insert(p.client_id, tau);
            client_utilities.insert(p.client_id, util);
        }

        // q-FFL weighs updates by the loss of the broadcast model.
        let start_losses = if algorithm == Algorithm::QFfl {
            let mut losses = Vec::with_capacity(selected.len());
            for &i in &selected {
                losses.push(loss(&self.specs[i], &self.global, &self.clients[i].train)?);
            }
            Some(losses)
        } else {
            None
        };

        let prox_mu = if algorithm == Algorithm::FedProx { cfg.prox_mu } else { 0.0 };
        let anchor = self.global.clone();
        let global = &self.global;
        let specs = &self.specs;
        let clients = &self.clients;
        let locals: Vec<ParameterVector> = selected
            .par_iter()
            .map(|&i| {
                local_train(
                    &specs[i],
                    global,
                    &clients[i].train,
                    epochs_chosen[&i],
                    cfg.lr,
                    gamma,
                    cfg.batch_size,
                    prox_mu,
                    if prox_mu > 0.0 { Some(&anchor) } else { None },
                    derive_seed(cfg.seed, &[stream::LOCAL, u64::from(round), i as u64]),
                )
            })
            .collect::<Result<_>>()?;

        let new_global = match algorithm {
            Algorithm::QFfl => qffl_aggregate(
                &self.global,
                &locals,
                start_losses.as_deref().expect("losses computed for qffl"),
                cfg.qffl_q,
                cfg.lr,
            )?,
            _ => {
                let subset: Vec<f64> = selected.iter().map(|&i| self.weights[i]).collect();
                aggregate(&locals, &subset)?
            }
        };

        let epochs_vec: Vec<u32> = selected.iter().map(|i| epochs_chosen[i]).collect();
        let server_u = server_utility(gamma, &sel_params, &epochs_vec, round)?;

        for (slot, &i) in selected.iter().enumerate() {
            self.last_locals.insert(i, locals[slot].clone());
        }
        self.global = new_global;

        // End-of-round evaluation on the updated model.
        let classifier = self.specs[0].is_classifier();
        let mut per_client_accuracy = BTreeMap::new();
        for c in 0..cfg.num_clients {
            let acc = if classifier {
                100.0 * accuracy(&self.specs[c], &self.global, &self.clients[c].eval)?
            } else {
                0.0
            };
            per_client_accuracy.insert(c, acc);
        }
        let acc_variance = accuracy_variance(&per_client_accuracy)?;
        let global_accuracy = match (&self.test, classifier) {
            (Some(test), true) => accuracy(&self.specs[0], &self.global, test)?,
            _ => 0.0,
        };
        let global_loss = self.global_loss()?;

        let record = RoundRecord {
            round,
            algorithm,
            gamma,
            selected,
            epochs_chosen: epochs_chosen.clone(),
            global_accuracy,
            per_client_accuracy,
            accuracy_variance: acc_variance,
            client_utilities,
            server_utility: server_u,
            global_loss,
            contributions: self.state.contributions.clone(),
        };
        self.state.round += 1;
        self.state.gamma = gamma;
        self.state.epochs = epochs_chosen;
        self.records.push(record.clone());
        Ok(record)
    }

    /// Runs every remaining round.
    pub fn run_to_end(&mut self) -> Result<&[RoundRecord]> {
        while self.state.round <= self.config.total_rounds {
            self.run_round()?;
        }
        Ok(&self.records)
    }
}

/// Convenience wrapper: build an [`Experiment`], run all rounds, return the
/// records.
pub fn run_experiment(
    config: FederationConfig,
    spec: ModelSpec,
    dataset: &Dataset,
    partition: &Partition,
    test: Option<&Dataset>,
) -> Result<Vec<RoundRecord>> {
    let mut experiment = Experiment::new(config, spec, dataset, partition, test)?;
    experiment.run_to_end()?;
    Ok(experiment.into_records())
}
