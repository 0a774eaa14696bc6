//! Synthetic data generation and the two partition schemes.
//!
//! The iid scheme shuffles rows and deals them out evenly. The shard scheme
//! sorts by label, slices the sorted order into shards, and deals each client
//! a couple of shards, so most clients end up seeing only a few labels. That
//! label skew is what makes fairness interesting downstream.

use flamma::datasets::{client_weights, generate_synthetic, partition_iid, partition_shards, Dataset, Partition};

fn label_histogram(dataset: &Dataset, rows: &[usize], num_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; num_classes];
    for &r in rows {
        counts[dataset.label(r)] += 1;
    }
    counts
}

fn show(name: &str, dataset: &Dataset, partition: &Partition) {
    println!("{name}:");
    for client in 0..partition.num_clients() {
        let rows = partition.client_rows(client);
        let hist = label_histogram(dataset, rows, dataset.num_classes());
        let labels_seen = hist.iter().filter(|&&c| c > 0).count();
        println!(
            "  client {client}: {:>3} rows, {labels_seen} distinct labels, histogram {:?}",
            rows.len(),
            hist
        );
    }
}

fn main() -> flamma::Result<()> {
    let dataset = generate_synthetic(5, 8, 40, 0.6, 9)?;
    println!(
        "{} rows, {} features, {} classes",
        dataset.rows(),
        dataset.dim(),
        dataset.num_classes()
    );
    println!();

    let iid = partition_iid(&dataset, 5, 9)?;
    show("iid partition", &dataset, &iid);
    println!();

    let shards = partition_shards(&dataset, 5, 2, 9)?;
    show("shard partition (2 shards per client)", &dataset, &shards);

    let weights = client_weights(&shards)?;
    println!();
    println!("aggregation weights: {weights:?}");
    println!("weights sum to {}", weights.iter().sum::<f64>());
    Ok(())
}
