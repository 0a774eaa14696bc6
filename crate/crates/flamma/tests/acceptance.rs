//! Release checklist, one test per shipped guarantee.
//!
//! Every test prints exactly one verdict line, so `cargo test --test
//! acceptance -- --nocapture` reads as a checklist. Failures keep the line
//! (marked FAIL) and the assertion message carries the numbers.

use std::time::{Duration, Instant};

use flamma::analysis::check_bound_quadratic;
use flamma::cli::cmd_run;
use flamma::config::parse_config_str;
use flamma::datasets::{
    generate_synthetic, load_idx, partition_iid, partition_shards, train_test_split,
    write_idx_images, write_idx_labels, Dataset, Partition,
};
use flamma::federation::{
    run_experiment, Algorithm, Experiment, FederationConfig, RoundRecord,
};
use flamma::game::{best_response_tau, client_utility, verify_equilibrium, ClientGameParams};
use flamma::learner::{finite_diff_gradient, gradient, Batch, ModelSpec, ParameterVector};
use flamma::rng::{rng_from, standard_normal};
use flamma::{Error, Result};
use rand::Rng;

fn verdict(idx: usize, name: &str, ok: bool) {
    println!("acceptance [{idx}/9] {name}: {}", if ok { "PASS" } else { "FAIL" });
}

/// The fairness benchmark: 10-class blobs, 20 clients on two shards each,
/// full participation, a narrow cost band so the cohort anneals together,
/// and a step size large enough that constant-rate training keeps wobbling.
fn fairness_data(seed: u64) -> Result<(Dataset, Dataset, Partition, ModelSpec)> {
    let full = generate_synthetic(10, 16, 400, 1.0, seed)?;
    let (train, test) = train_test_split(&full, 0.2, seed)?;
    let partition = partition_shards(&train, 20, 2, seed)?;
    let spec = ModelSpec::logistic(train.dim(), train.num_classes())?;
    Ok((train, test, partition, spec))
}

fn fairness_config(algorithm: Algorithm, seed: u64) -> FederationConfig {
    FederationConfig {
        algorithm,
        num_clients: 20,
        clients_per_round: 20,
        total_rounds: 100,
        lr: 0.3,
        tau_fixed: 5,
        cost_coeff_range: (0.04, 0.05),
        gamma_min: 0.1,
        batch_size: 4,
        seed,
        ..FederationConfig::default()
    }
}

/// γ invariants every decay-protocol run must satisfy: starts at exactly 1,
/// never leaves [gamma_min, 1], and never rises while the contribution
/// scores (and with them the selected roster) are held fixed.
fn assert_gamma_schedule(records: &[RoundRecord], gamma_min: f64, refresh_interval: u32) {
    assert_eq!(records[0].round, 1);
    assert_eq!(records[0].gamma, 1.0, "round 1 must open at gamma = 1");
    for r in records {
        assert!(
            r.gamma >= gamma_min && r.gamma <= 1.0,
            "round {}: gamma {} outside [{gamma_min}, 1]",
            r.round,
            r.gamma
        );
    }
    for pair in records.windows(2) {
        let same_window = (pair[1].round - 1) % refresh_interval != 0;
        if same_window {
            assert!(
                pair[1].gamma <= pair[0].gamma + 1e-12,
                "gamma rose {} -> {} between rounds {} and {} inside one window",
                pair[0].gamma,
                pair[1].gamma,
                pair[0].round,
                pair[1].round
            );
        }
    }
}

#[test]
fn c1_best_response_matches_grid_search() -> Result<()> {
    let t0 = Instant::now();
    let mut rng = rng_from(20240814, &[]);
    const STEP: f64 = 1e-3;
    const POINTS: usize = 100_000;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let gamma: f64 = rng.gen();
        let omega: f64 = rng.gen();
        let cost = 0.01 + 0.99 * rng.gen::<f64>();
        let mut grid_best = 0.0;
        let mut best_u = f64::NEG_INFINITY;
        for i in 0..=POINTS {
            let tau = i as f64 * STEP;
            let u = client_utility(gamma, omega, cost, tau)?;
            if u > best_u {
                best_u = u;
                grid_best = tau;
            }
        }
        let analytic = best_response_tau(gamma, omega, cost)?;
        worst = worst.max((analytic - grid_best).abs());
    }
    let in_budget = t0.elapsed() < Duration::from_secs(60);
    let ok = worst <= STEP && in_budget;
    verdict(1, "best response matches exhaustive grid search", ok);
    assert!(worst <= STEP, "worst disagreement {worst} exceeds one grid step");
    assert!(in_budget, "grid search took {:?}", t0.elapsed());
    Ok(())
}

#[test]
fn c2_recorded_client_utilities_are_never_negative() -> Result<()> {
    // Three regimes: wide costs where late rounds drive clients to abstain,
    // the narrow-cost fairness benchmark, and a coarse-refresh small run.
    let mut runs = Vec::new();
    let wide = FederationConfig {
        num_clients: 12,
        clients_per_round: 6,
        total_rounds: 40,
        batch_size: 16,
        seed: 9,
        ..FederationConfig::default()
    };
    let data = generate_synthetic(5, 8, 60, 0.8, 9)?;
    let partition = partition_iid(&data, 12, 9)?;
    let spec = ModelSpec::logistic(data.dim(), data.num_classes())?;
    runs.push(run_experiment(wide, spec, &data, &partition, None)?);

    let (train, test, partition, spec) = fairness_data(1)?;
    let config = fairness_config(Algorithm::Flamma, 1);
    runs.push(run_experiment(config, spec, &train, &partition, Some(&test))?);

    let coarse = FederationConfig {
        num_clients: 6,
        clients_per_round: 3,
        total_rounds: 25,
        refresh_interval: 4,
        batch_size: 8,
        seed: 77,
        ..FederationConfig::default()
    };
    let data = generate_synthetic(3, 6, 40, 0.5, 77)?;
    let partition = partition_iid(&data, 6, 77)?;
    let spec = ModelSpec::logistic(data.dim(), data.num_classes())?;
    runs.push(run_experiment(coarse, spec, &data, &partition, None)?);

    let mut recorded = 0usize;
    let mut violations = 0usize;
    for records in &runs {
        for record in records {
            for (&client, &utility) in &record.client_utilities {
                recorded += 1;
                if utility < 0.0 {
                    violations += 1;
                    eprintln!(
                        "round {} client {client}: utility {utility}",
                        record.round
                    );
                }
            }
        }
    }
    let ok = violations == 0 && recorded > 0;
    verdict(2, "recorded client utilities are never negative", ok);
    assert!(ok, "{violations} of {recorded} recorded utilities are negative");
    Ok(())
}

#[test]
fn c3_every_round_is_an_equilibrium() -> Result<()> {
    let t0 = Instant::now();
    let config = FederationConfig {
        num_clients: 20,
        clients_per_round: 10,
        total_rounds: 50,
        batch_size: 16,
        seed: 123,
        ..FederationConfig::default()
    };
    let data = generate_synthetic(6, 10, 80, 0.7, config.seed)?;
    let partition = partition_iid(&data, config.num_clients, config.seed)?;
    let spec = ModelSpec::logistic(data.dim(), data.num_classes())?;
    let mut experiment = Experiment::new(config.clone(), spec, &data, &partition, None)?;
    experiment.run_to_end()?;
    let costs = experiment.costs().to_vec();

    let mut audited = 0usize;
    for record in experiment.records() {
        let mut params = Vec::new();
        let mut proposed = Vec::new();
        for (&client, &tau) in &record.epochs_chosen {
            params.push(ClientGameParams::new(
                client,
                costs[client],
                record.contributions[&client],
                config.tau_min,
                config.tau_max,
            )?);
            proposed.push(tau);
        }
        assert!(
            verify_equilibrium(&params, record.gamma, &proposed, 1.0)?,
            "round {} profile is not an equilibrium",
            record.round
        );
        audited += 1;
    }
    let in_budget = t0.elapsed() < Duration::from_secs(120);
    let ok = audited == 50 && in_budget;
    verdict(3, "every round's strategy profile is an equilibrium", ok);
    assert_eq!(audited, 50);
    assert!(in_budget, "audit took {:?}", t0.elapsed());
    Ok(())
}

#[test]
fn c4_gradients_match_finite_differences() -> Result<()> {
    let mut rng = rng_from(31337, &[]);
    let mut random_batch = |dim: usize, classes: usize, rows: usize| -> Result<Batch> {
        let features = (0..rows * dim).map(|_| standard_normal(&mut rng)).collect();
        let labels = (0..rows).map(|_| rng.gen_range(0..classes)).collect();
        Batch::new(features, labels, dim)
    };
    let mut worst = 0.0f64;
    {
        let check = |spec: &ModelSpec, batch: &Batch, rng: &mut rand_chacha::ChaCha8Rng| -> Result<f64> {
            let w = ParameterVector::new(
                (0..spec.param_count()).map(|_| 0.6 * standard_normal(rng)).collect(),
            )?;
            let analytic = gradient(spec, &w, batch)?;
            let numeric = finite_diff_gradient(spec, &w, batch, 1e-5)?;
            let mut err = 0.0f64;
            for (a, n) in analytic.values().iter().zip(numeric.values()) {
                err = err.max((a - n).abs() / (1.0 + a.abs()));
            }
            Ok(err)
        };
        for case in 0..100 {
            let dim = 2 + (case % 5);
            let classes = 2 + (case % 4);
            let rows = 1 + (case % 9);
            let batch = random_batch(dim, classes, rows)?;
            let spec = ModelSpec::logistic(dim, classes)?;
            let mut wrng = rng_from(31337, &[1, case as u64]);
            worst = worst.max(check(&spec, &batch, &mut wrng)?);
        }
        for case in 0..100 {
            let dim = 2 + (case % 4);
            let classes = 2 + (case % 3);
            let rows = 1 + (case % 6);
            let batch = random_batch(dim, classes, rows)?;
            let spec = ModelSpec::mlp(dim, 3 + (case % 3), classes)?;
            let mut wrng = rng_from(31337, &[2, case as u64]);
            worst = worst.max(check(&spec, &batch, &mut wrng)?);
        }
        for case in 0..100 {
            let dim = 2 + (case % 6);
            let mut trng = rng_from(31337, &[3, case as u64]);
            let target =
                ParameterVector::new((0..dim).map(|_| standard_normal(&mut trng)).collect())?;
            let spec = ModelSpec::quadratic(target)?;
            let batch = Batch::empty(dim);
            let mut wrng = rng_from(31337, &[4, case as u64]);
            worst = worst.max(check(&spec, &batch, &mut wrng)?);
        }
    }
    let ok = worst < 1e-5;
    verdict(4, "analytic gradients match finite differences", ok);
    assert!(ok, "worst relative error {worst:.3e} reaches 1e-5");
    Ok(())
}

#[test]
fn c5_optimality_gap_stays_under_the_theorem_bound() -> Result<()> {
    let t0 = Instant::now();
    let mut all_hold = true;
    for rounds in [10u32, 50, 100] {
        let report = check_bound_quadratic(10, 5, rounds, 42, 10)?;
        println!(
            "  T = {rounds:>3}: gap {:.3e} vs bound {:.3e}",
            report.empirical_gap, report.bound
        );
        all_hold &= report.holds;
    }
    let in_budget = t0.elapsed() < Duration::from_secs(120);
    let ok = all_hold && in_budget;
    verdict(5, "optimality gap stays under the theorem bound", ok);
    assert!(all_hold, "bound violated at some horizon");
    assert!(in_budget, "bound check took {:?}", t0.elapsed());
    Ok(())
}

#[test]
fn c6_decayed_training_wins_the_fairness_comparison() -> Result<()> {
    let t0 = Instant::now();
    let mut wins = 0u32;
    for seed in 1..=5u64 {
        let (train, test, partition, spec) = fairness_data(seed)?;
        let flamma = run_experiment(
            fairness_config(Algorithm::Flamma, seed),
            spec.clone(),
            &train,
            &partition,
            Some(&test),
        )?;
        let fedavg = run_experiment(
            fairness_config(Algorithm::FedAvg, seed),
            spec,
            &train,
            &partition,
            Some(&test),
        )?;
        let (fl, fa) = (flamma.last().unwrap(), fedavg.last().unwrap());
        let win = fl.accuracy_variance < fa.accuracy_variance
            && fl.global_accuracy >= fa.global_accuracy - 0.02;
        println!(
            "  seed {seed}: variance {:6.2} vs {:6.2} pp^2, accuracy {:.2}% vs {:.2}% -> {}",
            fl.accuracy_variance,
            fa.accuracy_variance,
            100.0 * fl.global_accuracy,
            100.0 * fa.global_accuracy,
            if win { "win" } else { "loss" }
        );
        wins += win as u32;
    }
    let in_budget = t0.elapsed() < Duration::from_secs(600);
    let ok = wins >= 4 && in_budget;
    verdict(6, "decayed local training wins the fairness comparison", ok);
    assert!(wins >= 4, "won only {wins} of 5 seeds");
    assert!(in_budget, "comparison took {:?}", t0.elapsed());
    Ok(())
}

#[test]
fn c7_decay_factor_starts_at_one_and_anneals() -> Result<()> {
    let config = FederationConfig {
        num_clients: 15,
        clients_per_round: 6,
        total_rounds: 60,
        gamma_min: 0.05,
        batch_size: 16,
        seed: 5,
        ..FederationConfig::default()
    };
    let data = generate_synthetic(4, 8, 60, 0.6, config.seed)?;
    let partition = partition_iid(&data, config.num_clients, config.seed)?;
    let spec = ModelSpec::logistic(data.dim(), data.num_classes())?;
    let records =
        run_experiment(config.clone(), spec.clone(), &data, &partition, None)?;
    assert_gamma_schedule(&records, config.gamma_min, config.refresh_interval);

    // A refresh cadence that does not divide T exercises ragged windows.
    let odd = FederationConfig {
        refresh_interval: 7,
        total_rounds: 45,
        seed: 6,
        ..config
    };
    let records = run_experiment(odd.clone(), spec, &data, &partition, None)?;
    assert_gamma_schedule(&records, odd.gamma_min, odd.refresh_interval);

    verdict(7, "decay factor starts at one and anneals", true);
    Ok(())
}

#[test]
fn c8_identical_manifests_produce_byte_identical_reports() -> Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::io("tempdir", e))?;
    let text = "algorithm = flamma\n\
                seed = 42\n\
                num_clients = 6\n\
                clients_per_round = 3\n\
                total_rounds = 8\n\
                num_classes = 4\n\
                dim = 6\n\
                per_class = 40\n\
                partition = shards\n\
                shards_per_client = 2\n\
                batch_size = 16\n\
                test_fraction = 0.2\n";
    let mut ok = true;
    for format in ["report.csv", "report.json"] {
        let mut manifest = parse_config_str(text)?;
        manifest.output_path = dir.path().join(format);
        cmd_run(&manifest, &mut std::io::sink())?;
        let first = std::fs::read(&manifest.output_path)
            .map_err(|e| Error::io(&manifest.output_path, e))?;
        cmd_run(&manifest, &mut std::io::sink())?;
        let second = std::fs::read(&manifest.output_path)
            .map_err(|e| Error::io(&manifest.output_path, e))?;
        ok &= first == second;
        assert_eq!(first, second, "{format} differs between reruns");
    }
    verdict(8, "identical manifests produce byte-identical reports", ok);
    Ok(())
}

#[test]
fn c9_idx_fixtures_decode_exactly_and_fail_loudly() -> Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::io("tempdir", e))?;
    let images_path = dir.path().join("fixture-images.idx");
    let labels_path = dir.path().join("fixture-labels.idx");
    let images: Vec<Vec<u8>> = vec![
        vec![0, 64, 128, 255],
        vec![1, 2, 3, 4],
        vec![250, 251, 252, 253],
        vec![9, 8, 7, 6],
    ];
    let labels = [3u8, 0, 2, 1];
    write_idx_images(&images_path, 2, 2, &images)?;
    write_idx_labels(&labels_path, &labels)?;

    let dataset = load_idx(&images_path, &labels_path)?;
    assert_eq!(dataset.rows(), 4);
    assert_eq!(dataset.dim(), 4);
    assert_eq!(dataset.num_classes(), 4);
    for (i, image) in images.iter().enumerate() {
        let expected: Vec<f64> = image.iter().map(|&p| p as f64 / 255.0).collect();
        assert_eq!(dataset.row(i), expected.as_slice(), "image {i} decoded wrong");
        assert_eq!(dataset.label(i), labels[i] as usize, "label {i} decoded wrong");
    }

    let corrupt_path = dir.path().join("bad-magic.idx");
    let mut bytes = std::fs::read(&images_path).map_err(|e| Error::io(&images_path, e))?;
    bytes[2] ^= 0xff;
    std::fs::write(&corrupt_path, bytes).map_err(|e| Error::io(&corrupt_path, e))?;
    let err = load_idx(&corrupt_path, &labels_path).unwrap_err();
    assert!(matches!(err, Error::Format { .. }), "got {err}");
    assert!(err.to_string().contains("bad magic"), "got {err}");

    let short_path = dir.path().join("short-labels.idx");
    write_idx_labels(&short_path, &[1, 2, 0])?;
    let err = load_idx(&images_path, &short_path).unwrap_err();
    assert!(matches!(err, Error::Format { .. }), "got {err}");
    assert!(err.to_string().contains("3 labels for 4 images"), "got {err}");

    verdict(9, "idx fixtures decode exactly and corrupt files fail loudly", true);
    Ok(())
}
