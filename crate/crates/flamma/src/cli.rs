//! Command implementations behind the `flamma` binary.
//!
//! Each command takes a resolved manifest (or explicit parameters) plus a
//! writer for its human-readable output, and returns the data it produced so
//! callers and tests can inspect it. Exit-code policy lives in the binary:
//! 0 success, 1 runtime failure or a failed bound check, 2 usage or config
//! errors.

use std::io::Write;
use std::path::Path;

use crate::analysis::{
    check_bound_quadratic, export_records_with_meta, BoundCheckReport,
};
use crate::config::RunManifest;
use crate::datasets::{train_test_split, Dataset, Partition};
use crate::error::{Error, Result};
use crate::federation::{run_experiment, Algorithm, RoundRecord};
use crate::learner::ModelSpec;

fn say(out: &mut dyn Write, line: &str) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io(Path::new("<stdout>"), e))
}

struct Prepared {
    train: Dataset,
    test: Option<Dataset>,
    partition: Partition,
    spec: ModelSpec,
}

fn prepare(manifest: &RunManifest) -> Result<Prepared> {
    let full = manifest.build_dataset()?;
    let (train, test) = if manifest.test_fraction > 0.0 {
        let (train, test) = train_test_split(&full, manifest.test_fraction, manifest.config.seed)?;
        (train, Some(test))
    } else {
        (full, None)
    };
    let partition = manifest.build_partition(&train)?;
    let spec = manifest.model_spec(&train)?;
    Ok(Prepared {
        train,
        test,
        partition,
        spec,
    })
}

fn final_summary(records: &[RoundRecord]) -> String {
    let last = records.last().expect("a run has at least one round");
    format!(
        "final round {}: accuracy {:.2}%, variance {:.2} pp^2, gamma {:.6}",
        last.round,
        100.0 * last.global_accuracy,
        last.accuracy_variance,
        last.gamma
    )
}

/// Runs one experiment and writes its report.
pub fn cmd_run(manifest: &RunManifest, out: &mut dyn Write) -> Result<Vec<RoundRecord>> {
    manifest.validate()?;
    let prepared = prepare(manifest)?;
    let records = run_experiment(
        manifest.config.clone(),
        prepared.spec,
        &prepared.train,
        &prepared.partition,
        prepared.test.as_ref(),
    )?;
    export_records_with_meta(
        &records,
        &manifest.output_path,
        manifest.output_format,
        &manifest.to_key_values(),
    )?;
    say(
        out,
        &format!(
            "{}: {} rounds written to {}",
            manifest.config.algorithm,
            records.len(),
            manifest.output_path.display()
        ),
    )?;
    say(out, &final_summary(&records))?;
    Ok(records)
}

/// Runs each algorithm on the same dataset, partition, and seed, writes one
/// combined report, and prints a final-round comparison table.
pub fn cmd_compare(
    manifest: &RunManifest,
    algorithms: &[Algorithm],
    out: &mut dyn Write,
) -> Result<Vec<RoundRecord>> {
    if algorithms.len() < 2 {
        return Err(Error::invalid("compare needs at least two algorithms"));
    }
    for (i, a) in algorithms.iter().enumerate() {
        if algorithms[..i].contains(a) {
            return Err(Error::invalid(format!("algorithm {a} listed twice")));
        }
    }
    manifest.validate()?;
    let prepared = prepare(manifest)?;
    let mut combined = Vec::new();
    let mut finals = Vec::new();
    for &algorithm in algorithms {
        let mut config = manifest.config.clone();
        config.algorithm = algorithm;
        let records = run_experiment(
            config,
            prepared.spec.clone(),
            &prepared.train,
            &prepared.partition,
            prepared.test.as_ref(),
        )?;
        let last = records.last().expect("total_rounds >= 1").clone();
        finals.push(last);
        combined.extend(records);
    }

    let mut meta = manifest.to_key_values();
    let joined = algorithms
        .iter()
        .map(Algorithm::to_string)
        .collect::<Vec<_>>()
        .join(",");
    for entry in &mut meta {
        if entry.0 == "algorithm" {
            entry.1 = joined.clone();
        }
    }
    export_records_with_meta(&combined, &manifest.output_path, manifest.output_format, &meta)?;

    say(
        out,
        &format!(
            "{} algorithms, {} rounds each, written to {}",
            algorithms.len(),
            manifest.config.total_rounds,
            manifest.output_path.display()
        ),
    )?;
    say(out, "algorithm   accuracy   variance(pp^2)")?;
    for record in &finals {
        say(
            out,
            &format!(
                "{:<11} {:>7.2}%   {:>12.2}",
                record.algorithm.to_string(),
                100.0 * record.global_accuracy,
                record.accuracy_variance
            ),
        )?;
    }
    Ok(combined)
}

/// Evaluates the convergence bound on the quadratic toy problem and prints
/// the verdict.
pub fn cmd_check_bound(
    num_clients: usize,
    k: usize,
    rounds: u32,
    num_seeds: usize,
    seed: u64,
    out: &mut dyn Write,
) -> Result<BoundCheckReport> {
    let report = check_bound_quadratic(num_clients, k, rounds, seed, num_seeds)?;
    say(
        out,
        &format!(
            "quadratic bound check: {num_clients} clients, k = {k}, T = {rounds}, {num_seeds} seeds, base seed {seed}"
        ),
    )?;
    say(
        out,
        &format!(
            "measured: G^2 = {:.6}, gamma_max = {:.6}, M = {:.6}, eta = {:.6}",
            report.constants.g2, report.constants.gamma_max, report.constants.m, report.constants.eta
        ),
    )?;
    say(out, &format!("empirical gap = {:.6e}", report.empirical_gap))?;
    say(out, &format!("theorem bound = {:.6e}", report.bound))?;
    say(out, if report.holds { "PASS" } else { "FAIL" })?;
    Ok(report)
}
