//! Metrics, the convergence-bound verifier, and report export.
//!
//! The bound verifier builds a strongly convex toy problem (one quadratic
//! objective per client), runs the decay protocol with the theory-prescribed
//! learning rate, measures the constants the theorem takes as given, and
//! compares the empirical optimality gap against the evaluated bound.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{Dataset, Partition};
use crate::error::{Error, Result};
use crate::federation::{Algorithm, Experiment, FederationConfig, RoundRecord};
use crate::learner::{predict, Batch, ModelSpec, ParameterVector};
use crate::rng::{derive_seed, rng_from, standard_normal, stream};

/// Inputs to the convergence bound.
///
/// `kappa`, `xi`, and `eta` are derived: `kappa = beta / rho`,
/// `xi = max(8 kappa, tau_max)`, `eta = 2 / (rho xi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConstants {
    /// Strong convexity modulus.
    pub rho: f64,
    /// Smoothness modulus; at least `rho`.
    pub beta: f64,
    /// Condition number `beta / rho`.
    pub kappa: f64,
    /// Step-size schedule constant `max(8 kappa, tau_max)`.
    pub xi: f64,
    /// Learning rate `2 / (rho xi)`.
    pub eta: f64,
    /// Uniform bound on squared gradient norms.
    pub g2: f64,
    /// Per-client stochastic gradient variances.
    pub sigma2: Vec<f64>,
    /// Clients selected per round.
    pub k: usize,
    pub tau_max: u32,
    /// Largest decay factor over the run.
    pub gamma_max: f64,
    /// Squared distance from the initial model to the optimum.
    pub m: f64,
    /// Client weights; must sum to 1.
    pub p: Vec<f64>,
}

impl ConvergenceConstants {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rho: f64,
        beta: f64,
        g2: f64,
        sigma2: Vec<f64>,
        k: usize,
        tau_max: u32,
        gamma_max: f64,
        m: f64,
        p: Vec<f64>,
    ) -> Result<Self> {
        if !rho.is_finite() || rho <= 0.0 {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        if !beta.is_finite() || beta < rho {
            return Err(Error::invalid(format!(
                "beta must be finite and at least rho = {rho}, got {beta}"
            )));
        }
        if !g2.is_finite() || g2 < 0.0 {
            return Err(Error::invalid(format!("G^2 must be non-negative, got {g2}")));
        }
        if sigma2.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::invalid("every sigma_k^2 must be finite and non-negative"));
        }
        if k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if tau_max == 0 {
            return Err(Error::invalid("tau_max must be at least 1"));
        }
        if !gamma_max.is_finite() || gamma_max <= 0.0 || gamma_max > 1.0 {
            return Err(Error::invalid(format!(
                "gamma_max must lie in (0, 1], got {gamma_max}"
            )));
        }
        if !m.is_finite() || m < 0.0 {
            return Err(Error::invalid(format!("M must be non-negative, got {m}")));
        }
        if p.len() != sigma2.len() {
            return Err(Error::invalid(format!(
                "{} weights for {} variance entries",
                p.len(),
                sigma2.len()
            )));
        }
        if p.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("client weights must be finite and non-negative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("client weights sum to {total}, expected 1")));
        }
        let kappa = beta / rho;
        let xi = (8.0 * kappa).max(f64::from(tau_max));
        let eta = 2.0 / (rho * xi);
        Ok(Self {
            rho,
            beta,
            kappa,
            xi,
            eta,
            g2,
            sigma2,
            k,
            tau_max,
            gamma_max,
            m,
            p,
        })
    }
}

/// `B = (1/rho) sum_k p_k^2 gamma_max sigma_k^2 + 6 beta eta^2
///      + 8 (tau_max - 1)^2 G^2`.
#[allow(non_snake_case)]
pub fn bound_B(c: &ConvergenceConstants) -> f64 {
    let variance_term: f64 = c
        .p
        .iter()
        .zip(&c.sigma2)
        .map(|(pk, s2)| pk * pk * c.gamma_max * s2)
        .sum::<f64>()
        / c.rho;
    let tau_term = f64::from(c.tau_max - 1).powi(2);
    variance_term + 6.0 * c.beta * c.eta * c.eta + 8.0 * tau_term * c.g2
}

/// `C = (4/K) tau_max^2 G^2`.
#[allow(non_snake_case)]
pub fn bound_C(c: &ConvergenceConstants) -> f64 {
    4.0 / c.k as f64 * f64::from(c.tau_max).powi(2) * c.g2
}

/// The bound with explicit B and C terms:
/// `(kappa/T) (2 (B + C) / rho + (rho xi gamma_max / 2) M)`.
pub fn theorem_bound_parts(c: &ConvergenceConstants, b: f64, c_term: f64, t: u32) -> Result<f64> {
    if t == 0 {
        return Err(Error::invalid("T must be at least 1"));
    }
    Ok(c.kappa / f64::from(t)
        * (2.0 * (b + c_term) / c.rho + c.rho * c.xi * c.gamma_max / 2.0 * c.m))
}

/// Expected optimality gap bound after `t` rounds.
pub fn theorem_bound(c: &ConvergenceConstants, t: u32) -> Result<f64> {
    theorem_bound_parts(c, bound_B(c), bound_C(c), t)
}

/// Outcome of one empirical bound check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    /// Mean optimality gap `F(w_T) - F*` over the repetitions.
    pub empirical_gap: f64,
    /// Evaluated theorem bound.
    pub bound: f64,
    /// True iff `empirical_gap <= bound`.
    pub holds: bool,
    /// Gap of each seeded repetition, in seed order.
    pub per_seed_gaps: Vec<f64>,
    /// Constants the bound was evaluated with.
    pub constants: ConvergenceConstants,
}

const BOUND_CHECK_DIM: usize = 4;
const BOUND_CHECK_TAU_MAX: u32 = 10;
/// Measured constants are inflated by this factor to guard against
/// underestimating a supremum from finitely many observations.
const MEASUREMENT_INFLATION: f64 = 1.1;

struct QuadraticRep {
    gap: f64,
    g2_max: f64,
    gamma_max: f64,
}

/// Runs the decay protocol once on per-client quadratics `F_k(w) =
/// 0.5 ||w - b_k||^2` and measures what the bound needs.
fn run_quadratic_rep(
    anchors: &[ParameterVector],
    k: usize,
    rounds: u32,
    rep_seed: u64,
) -> Result<QuadraticRep> {
    let n = anchors.len();
    let dim = anchors[0].len();
    let config = FederationConfig {
        algorithm: Algorithm::Flamma,
        num_clients: n,
        clients_per_round: k,
        total_rounds: rounds,
        // The theorem prescribes eta = 2 / (rho xi); rho = beta = 1 here.
        lr: 2.0 / (8.0f64).max(f64::from(BOUND_CHECK_TAU_MAX)),
        tau_fixed: 1,
        tau_min: 1,
        tau_max: BOUND_CHECK_TAU_MAX,
        batch_size: 1,
        seed: rep_seed,
        ..FederationConfig::default()
    };
    // One dummy row per client: the quadratic gradient ignores features, and
    // a single row means one SGD step per local epoch.
    let ds = Dataset::new(vec![0.0; n], vec![0; n], 1, 1)?;
    let partition = Partition::new((0..n).map(|i| vec![i]).collect(), n)?;
    let specs: Vec<ModelSpec> = anchors
        .iter()
        .map(|b| ModelSpec::quadratic(b.clone()))
        .collect::<Result<_>>()?;
    let mut experiment = Experiment::with_client_specs(config, specs, &ds, &partition, None)?;

    let weights = experiment.weights().to_vec();
    let mut w_star = ParameterVector::zeros(dim);
    for (b, &pk) in anchors.iter().zip(&weights) {
        w_star.axpy(pk, b);
    }
    let mut f_star = 0.0;
    for (b, &pk) in anchors.iter().zip(&weights) {
        f_star += pk * 0.5 * w_star.squared_distance(b)?;
    }

    let mut g2_max: f64 = 0.0;
    for _ in 0..rounds {
        // Gradient norms are probed on the broadcast model of each round.
        g2_max = g2_max.max(experiment.max_client_gradient_sq()?);
        experiment.run_round()?;
    }
    let gamma_max = experiment
        .records()
        .iter()
        .map(|r| r.gamma)
        .fold(0.0, f64::max);
    let gap = experiment.global_loss()? - f_star;
    Ok(QuadraticRep {
        gap,
        g2_max,
        gamma_max,
    })
}

/// Empirically checks the convergence bound on seeded quadratic toys.
///
/// Anchors `b_k` are drawn once from `seed`; each repetition reruns the
/// protocol with fresh costs and selection randomness. `G^2` is the largest
/// squared client-gradient norm observed at any round start (inflated by
/// 10%), the stochastic gradient variance is identically zero because the
/// quadratic gradient does not depend on the minibatch, and `M` is the exact
/// squared distance from the zero initial model to `w* = sum p_k b_k`.
pub fn check_bound_quadratic(
    num_clients: usize,
    k: usize,
    rounds: u32,
    seed: u64,
    num_seeds: usize,
) -> Result<BoundCheckReport> {
    if num_clients == 0 {
        return Err(Error::invalid("num_clients must be positive"));
    }
    if k == 0 || k > num_clients {
        return Err(Error::invalid(format!(
            "k must lie in [1, {num_clients}], got {k}"
        )));
    }
    if rounds == 0 {
        return Err(Error::invalid("rounds must be at least 1"));
    }
    if num_seeds == 0 {
        return Err(Error::invalid("num_seeds must be at least 1"));
    }
    let mut rng = rng_from(seed, &[stream::ANCHORS]);
    let anchors: Vec<ParameterVector> = (0..num_clients)
        .map(|_| {
            ParameterVector::new((0..BOUND_CHECK_DIM).map(|_| standard_normal(&mut rng)).collect())
        })
        .collect::<Result<_>>()?;

    let reps: Vec<QuadraticRep> = (0..num_seeds)
        .into_par_iter()
        .map(|rep| run_quadratic_rep(&anchors, k, rounds, derive_seed(seed, &[rep as u64])))
        .collect::<Result<_>>()?;

    let per_seed_gaps: Vec<f64> = reps.iter().map(|r| r.gap).collect();
    let empirical_gap = per_seed_gaps.iter().sum::<f64>() / num_seeds as f64;
    let g2 = reps.iter().map(|r| r.g2_max).fold(0.0, f64::max) * MEASUREMENT_INFLATION;
    let gamma_max = reps.iter().map(|r| r.gamma_max).fold(0.0, f64::max);

    let weights = vec![1.0 / num_clients as f64; num_clients];
    let mut w_star = ParameterVector::zeros(BOUND_CHECK_DIM);
    for (b, &pk) in anchors.iter().zip(&weights) {
        w_star.axpy(pk, b);
    }
    // w_1 is the zero vector, so M = ||w*||^2 exactly.
    let m = w_star.norm().powi(2);
    let constants = ConvergenceConstants::new(
        1.0,
        1.0,
        g2,
        vec![0.0; num_clients],
        k,
        BOUND_CHECK_TAU_MAX,
        gamma_max,
        m,
        weights,
    )?;
    let bound = theorem_bound(&constants, rounds)?;
    Ok(BoundCheckReport {
        empirical_gap,
        bound,
        holds: empirical_gap <= bound,
        per_seed_gaps,
        constants,
    })
}

/// Fraction of rows whose predicted class matches the label.
pub fn accuracy(spec: &ModelSpec, w: &ParameterVector, test: &Batch) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::invalid("accuracy needs a non-empty test set"));
    }
    let predictions = predict(spec, w, test)?;
    let correct = predictions
        .iter()
        .enumerate()
        .filter(|&(i, &p)| p == test.label(i))
        .count();
    Ok(correct as f64 / test.rows() as f64)
}

/// Population variance of the per-client values. Callers feeding accuracies
/// in percent get percentage points squared, the scale fairness tables use.
pub fn accuracy_variance(per_client: &BTreeMap<usize, f64>) -> Result<f64> {
    if per_client.is_empty() {
        return Err(Error::invalid("accuracy_variance needs at least one client"));
    }
    if let Some((id, bad)) = per_client.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "accuracy for client {id} is not finite: {bad}"
        )));
    }
    let n = per_client.len() as f64;
    let mean: f64 = per_client.values().sum::<f64>() / n;
    Ok(per_client.values().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
}

/// On-disk report format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExportFormat::Csv => "csv",
            ExportFormat::Json => "json",
        })
    }
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::invalid(format!(
                "unknown format '{other}', expected csv or json"
            ))),
        }
    }
}

fn client_columns(records: &[RoundRecord]) -> Vec<usize> {
    let mut ids: Vec<usize> = records
        .iter()
        .flat_map(|r| r.per_client_accuracy.keys().copied())
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// CSV floats carry 10 significant digits.
fn fmt_float(x: f64) -> String {
    format!("{x:.9e}")
}

fn write_csv_body(out: &mut impl Write, records: &[RoundRecord]) -> std::io::Result<()> {
    let ids = client_columns(records);
    let mut header = String::from(
        "round,algorithm,gamma,global_accuracy,accuracy_variance,global_loss,server_utility,selected_ids",
    );
    for id in &ids {
        header.push_str(&format!(",acc_{id},tau_{id},util_{id}"));
    }
    writeln!(out, "{header}")?;
    for r in records {
        let selected: Vec<String> = r.selected.iter().map(usize::to_string).collect();
        let mut line = format!(
            "{},{},{},{},{},{},{},{}",
            r.round,
            r.algorithm,
            fmt_float(r.gamma),
            fmt_float(r.global_accuracy),
            fmt_float(r.accuracy_variance),
            fmt_float(r.global_loss),
            fmt_float(r.server_utility),
            selected.join(";"),
        );
        for id in &ids {
            let acc = r.per_client_accuracy.get(id).copied().unwrap_or(0.0);
            let tau = r.epochs_chosen.get(id).copied().unwrap_or(0);
            let util = r.client_utilities.get(id).copied().unwrap_or(0.0);
            line.push_str(&format!(",{},{tau},{}", fmt_float(acc), fmt_float(util)));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn export_to(
    records: &[RoundRecord],
    path: &Path,
    format: ExportFormat,
    meta: Option<&[(String, String)]>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path, e);
    match format {
        ExportFormat::Csv => {
            if let Some(meta) = meta {
                for (key, value) in meta {
                    writeln!(out, "# {key} = {value}").map_err(io_err)?;
                }
            }
            write_csv_body(&mut out, records).map_err(io_err)?;
        }
        ExportFormat::Json => {
            if let Some(meta) = meta {
                let meta_map: BTreeMap<&str, &str> =
                    meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
                let doc = serde_json::json!({ "meta": meta_map, "records": records });
                serde_json::to_writer_pretty(&mut out, &doc)
                    .map_err(|e| Error::format(path, e.to_string()))?;
            } else {
                serde_json::to_writer_pretty(&mut out, records)
                    .map_err(|e| Error::format(path, e.to_string()))?;
            }
            writeln!(out).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Writes records as CSV (fixed columns, then `acc_<id>, tau_<id>,
/// util_<id>` per client) or as a JSON array mirroring [`RoundRecord`].
/// JSON keeps full float precision so a round-trip is exact.
pub fn export_records(records: &[RoundRecord], path: &Path, format: ExportFormat) -> Result<()> {
    export_to(records, path, format, None)
}

/// Like [`export_records`] but with a run-description preamble: `# key =
/// value` comment lines ahead of the CSV header, or a `{meta, records}`
/// object in JSON.
pub fn export_records_with_meta(
    records: &[RoundRecord],
    path: &Path,
    format: ExportFormat,
    meta: &[(String, String)],
) -> Result<()> {
    export_to(records, path, format, Some(meta))
}

/// Reads back a JSON report written by [`export_records`] or
/// [`export_records_with_meta`]; the metadata object, if present, is skipped.
pub fn read_records_json(path: &Path) -> Result<Vec<RoundRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let doc: serde_json::Value = serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::format(path, e.to_string()))?;
    let body = match doc {
        serde_json::Value::Object(mut map) => map
            .remove("records")
            .ok_or_else(|| Error::format(path, "JSON object has no \"records\" field"))?,
        other => other,
    };
    serde_json::from_value(body).map_err(|e| Error::format(path, e.to_string()))
}
