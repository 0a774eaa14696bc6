//! Run manifests and the flat `key = value` config format.
//!
//! A manifest fully describes one experiment: the federation parameters, the
//! data source, how data is split across clients, the model family, and
//! where the report goes. Every key has a documented default, unknown keys
//! are rejected with their line number, and a resolved manifest dumps back
//! to text that re-parses to the same manifest.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::ExportFormat;
use crate::datasets::{
    generate_synthetic, load_idx, partition_iid, partition_shards, Dataset, Partition,
};
use crate::error::{Error, Result};
use crate::federation::FederationConfig;
use crate::learner::ModelSpec;

/// Where training data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Synthetic {
        num_classes: usize,
        dim: usize,
        per_class: usize,
        spread: f64,
    },
    Idx {
        images: PathBuf,
        labels: PathBuf,
    },
}

/// How rows are assigned to clients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Iid,
    Shards,
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionKind::Iid => "iid",
            PartitionKind::Shards => "shards",
        })
    }
}

impl FromStr for PartitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(PartitionKind::Iid),
            "shards" => Ok(PartitionKind::Shards),
            other => Err(Error::invalid(format!(
                "unknown partition '{other}', expected iid or shards"
            ))),
        }
    }
}

/// Model family trained by every client.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Logistic,
    Mlp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Mlp => "mlp",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(ModelKind::Logistic),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::invalid(format!(
                "unknown model '{other}', expected logistic or mlp"
            ))),
        }
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: FederationConfig,
    pub dataset_source: DatasetSource,
    pub partition_kind: PartitionKind,
    pub shards_per_client: usize,
    pub model: ModelKind,
    pub hidden_dim: usize,
    /// Fraction of rows held out as the global test set.
    pub test_fraction: f64,
    pub output_path: PathBuf,
    pub output_format: ExportFormat,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            config: FederationConfig::default(),
            dataset_source: DatasetSource::Synthetic {
                num_classes: 10,
                dim: 16,
                per_class: 100,
                spread: 0.5,
            },
            partition_kind: PartitionKind::Iid,
            shards_per_client: 2,
            model: ModelKind::Logistic,
            hidden_dim: 32,
            test_fraction: 0.2,
            output_path: PathBuf::from("flamma_report.csv"),
            output_format: ExportFormat::Csv,
        }
    }
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        match &self.dataset_source {
            DatasetSource::Synthetic {
                num_classes,
                dim,
                per_class,
                spread,
            } => {
                if *num_classes < 2 {
                    return Err(Error::invalid("num_classes must be at least 2"));
                }
                if *dim == 0 || *per_class == 0 {
                    return Err(Error::invalid("dim and per_class must be positive"));
                }
                if !spread.is_finite() || *spread < 0.0 {
                    return Err(Error::invalid(format!(
                        "spread must be finite and non-negative, got {spread}"
                    )));
                }
            }
            DatasetSource::Idx { images, labels } => {
                for path in [images, labels] {
                    if !path.exists() {
                        return Err(Error::invalid(format!(
                            "idx file does not exist: {}",
                            path.display()
                        )));
                    }
                }
            }
        }
        if self.shards_per_client == 0 {
            return Err(Error::invalid("shards_per_client must be positive"));
        }
        if self.hidden_dim == 0 {
            return Err(Error::invalid("hidden_dim must be positive"));
        }
        if !(0.0..1.0).contains(&self.test_fraction) {
            return Err(Error::invalid(format!(
                "test_fraction must lie in [0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }

    /// Materializes the configured dataset.
    pub fn build_dataset(&self) -> Result<Dataset> {
        match &self.dataset_source {
            DatasetSource::Synthetic {
                num_classes,
                dim,
                per_class,
                spread,
            } => generate_synthetic(*num_classes, *dim, *per_class, *spread, self.config.seed),
            DatasetSource::Idx { images, labels } => load_idx(images, labels),
        }
    }

    /// Splits the training rows across clients.
    pub fn build_partition(&self, train: &Dataset) -> Result<Partition> {
        match self.partition_kind {
            PartitionKind::Iid => partition_iid(train, self.config.num_clients, self.config.seed),
            PartitionKind::Shards => partition_shards(
                train,
                self.config.num_clients,
                self.shards_per_client,
                self.config.seed,
            ),
        }
    }

    /// The model spec every client trains, shaped to the dataset.
    pub fn model_spec(&self, dataset: &Dataset) -> Result<ModelSpec> {
        match self.model {
            ModelKind::Logistic => ModelSpec::logistic(dataset.dim(), dataset.num_classes()),
            ModelKind::Mlp => {
                ModelSpec::mlp(dataset.dim(), self.hidden_dim, dataset.num_classes())
            }
        }
    }

    /// All resolved keys in documented order; the inverse of parsing.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let c = &self.config;
        let mut kv: Vec<(String, String)> = vec![
            ("algorithm".into(), c.algorithm.to_string()),
            ("seed".into(), c.seed.to_string()),
            ("num_clients".into(), c.num_clients.to_string()),
            ("clients_per_round".into(), c.clients_per_round.to_string()),
            ("total_rounds".into(), c.total_rounds.to_string()),
            ("lr".into(), c.lr.to_string()),
            ("batch_size".into(), c.batch_size.to_string()),
            ("tau_fixed".into(), c.tau_fixed.to_string()),
            ("tau_min".into(), c.tau_min.to_string()),
            ("tau_max".into(), c.tau_max.to_string()),
            ("cost_min".into(), c.cost_coeff_range.0.to_string()),
            ("cost_max".into(), c.cost_coeff_range.1.to_string()),
            ("gamma_min".into(), c.gamma_min.to_string()),
            ("refresh_interval".into(), c.refresh_interval.to_string()),
            ("prox_mu".into(), c.prox_mu.to_string()),
            ("qffl_q".into(), c.qffl_q.to_string()),
        ];
        match &self.dataset_source {
            DatasetSource::Synthetic {
                num_classes,
                dim,
                per_class,
                spread,
            } => {
                kv.push(("dataset".into(), "synthetic".into()));
                kv.push(("num_classes".into(), num_classes.to_string()));
                kv.push(("dim".into(), dim.to_string()));
                kv.push(("per_class".into(), per_class.to_string()));
                kv.push(("spread".into(), spread.to_string()));
            }
            DatasetSource::Idx { images, labels } => {
                kv.push(("dataset".into(), "idx".into()));
                kv.push(("idx_images".into(), images.display().to_string()));
                kv.push(("idx_labels".into(), labels.display().to_string()));
            }
        }
        kv.push(("partition".into(), self.partition_kind.to_string()));
        kv.push(("shards_per_client".into(), self.shards_per_client.to_string()));
        kv.push(("model".into(), self.model.to_string()));
        kv.push(("hidden_dim".into(), self.hidden_dim.to_string()));
        kv.push(("test_fraction".into(), self.test_fraction.to_string()));
        kv.push(("output".into(), self.output_path.display().to_string()));
        kv.push(("format".into(), self.output_format.to_string()));
        kv
    }

    /// Serializes the resolved manifest back to config text.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.to_key_values() {
            out.push_str(&key);
            out.push_str(" = ");
            out.push_str(&value);
            out.push('\n');
        }
        out
    }
}

fn parse_as<T: FromStr>(line: usize, key: &str, value: &str, what: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(line, format!("key {key}: cannot parse '{value}' as {what}")))
}

/// Parses config text: one `key = value` per line, `#` comments, blank lines
/// ignored. Unknown or repeated keys are errors naming the line. The result
/// is not yet validated; [`parse_config`] validates after applying it.
pub fn parse_config_str(text: &str) -> Result<RunManifest> {
    let mut manifest = RunManifest::default();
    // Raw dataset fields are collected first because the source is an enum.
    let mut dataset_kind = String::from("synthetic");
    let (mut num_classes, mut dim, mut per_class, mut spread) = (10usize, 16usize, 100usize, 0.5f64);
    let (mut idx_images, mut idx_labels): (Option<PathBuf>, Option<PathBuf>) = (None, None);
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| Error::config(line, format!("expected key = value, got '{trimmed}'")))?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(Error::config(line, format!("duplicate key {key}")));
        }
        seen.push(key.to_string());
        let c = &mut manifest.config;
        match key {
            "algorithm" => {
                c.algorithm = value
                    .parse()
                    .map_err(|e: Error| Error::config(line, e.to_string()))?;
            }
            "seed" => c.seed = parse_as(line, key, value, "an unsigned integer")?,
            "num_clients" => c.num_clients = parse_as(line, key, value, "a positive integer")?,
            "clients_per_round" => {
                c.clients_per_round = parse_as(line, key, value, "a positive integer")?;
            }
            "total_rounds" => c.total_rounds = parse_as(line, key, value, "a positive integer")?,
            "lr" => c.lr = parse_as(line, key, value, "a number")?,
            "batch_size" => c.batch_size = parse_as(line, key, value, "a positive integer")?,
            "tau_fixed" => c.tau_fixed = parse_as(line, key, value, "a positive integer")?,
            "tau_min" => c.tau_min = parse_as(line, key, value, "a positive integer")?,
            "tau_max" => c.tau_max = parse_as(line, key, value, "a positive integer")?,
            "cost_min" => c.cost_coeff_range.0 = parse_as(line, key, value, "a number")?,
            "cost_max" => c.cost_coeff_range.1 = parse_as(line, key, value, "a number")?,
            "gamma_min" => c.gamma_min = parse_as(line, key, value, "a number")?,
            "refresh_interval" => {
                c.refresh_interval = parse_as(line, key, value, "a positive integer")?;
            }
            "prox_mu" => c.prox_mu = parse_as(line, key, value, "a number")?,
            "qffl_q" => c.qffl_q = parse_as(line, key, value, "a number")?,
            "dataset" => {
                if value != "synthetic" && value != "idx" {
                    return Err(Error::config(
                        line,
                        format!("unknown dataset '{value}', expected synthetic or idx"),
                    ));
                }
                dataset_kind = value.to_string();
            }
            "num_classes" => num_classes = parse_as(line, key, value, "a positive integer")?,
            "dim" => dim = parse_as(line, key, value, "a positive integer")?,
            "per_class" => per_class = parse_as(line, key, value, "a positive integer")?,
            "spread" => spread = parse_as(line, key, value, "a number")?,
            "idx_images" => idx_images = Some(PathBuf::from(value)),
            "idx_labels" => idx_labels = Some(PathBuf::from(value)),
            "partition" => {
                manifest.partition_kind = value
                    .parse()
                    .map_err(|e: Error| Error::config(line, e.to_string()))?;
            }
            "shards_per_client" => {
                manifest.shards_per_client = parse_as(line, key, value, "a positive integer")?;
            }
            "model" => {
                manifest.model = value
                    .parse()
                    .map_err(|e: Error| Error::config(line, e.to_string()))?;
            }
            "hidden_dim" => manifest.hidden_dim = parse_as(line, key, value, "a positive integer")?,
            "test_fraction" => manifest.test_fraction = parse_as(line, key, value, "a number")?,
            "output" => manifest.output_path = PathBuf::from(value),
            "format" => {
                manifest.output_format = value
                    .parse()
                    .map_err(|e: Error| Error::config(line, e.to_string()))?;
            }
            other => return Err(Error::config(line, format!("unknown key {other}"))),
        }
    }

    manifest.dataset_source = if dataset_kind == "idx" {
        let images = idx_images
            .ok_or_else(|| Error::invalid("dataset = idx requires idx_images"))?;
        let labels = idx_labels
            .ok_or_else(|| Error::invalid("dataset = idx requires idx_labels"))?;
        DatasetSource::Idx { images, labels }
    } else {
        DatasetSource::Synthetic {
            num_classes,
            dim,
            per_class,
            spread,
        }
    };
    Ok(manifest)
}

/// Reads and validates a manifest file.
pub fn parse_config(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = parse_config_str(&text)?;
    manifest.validate()?;
    Ok(manifest)
}

/// Seed precedence: command-line flag, then environment, then config file.
pub fn resolve_seed(flag: Option<u64>, env: Option<u64>, file: u64) -> u64 {
    flag.or(env).unwrap_or(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::federation::Algorithm;

    #[test]
    fn minimal_config_fills_defaults() {
        let m = parse_config_str("algorithm = flamma\nseed = 1\n").unwrap();
        assert_eq!(m.config.algorithm, Algorithm::Flamma);
        assert_eq!(m.config.seed, 1);
        assert_eq!(m.config.num_clients, 20);
        assert_eq!(m.config.clients_per_round, 10);
        assert_eq!(m.config.total_rounds, 100);
        assert_eq!(m.config.lr, 0.05);
        assert_eq!(m.config.tau_fixed, 5);
        assert_eq!(m.config.prox_mu, 0.01);
        assert_eq!(m.config.refresh_interval, 10);
        assert_eq!(m.partition_kind, PartitionKind::Iid);
        assert_eq!(m.model, ModelKind::Logistic);
        assert_eq!(m.output_format, ExportFormat::Csv);
        assert_eq!(m.output_path, PathBuf::from("flamma_report.csv"));
        m.validate().unwrap();
    }

    #[test]
    fn unknown_key_cites_its_line() {
        let err = parse_config_str("algrithm = flamma\n").unwrap_err();
        match err {
            Error::Config { line, ref message } => {
                assert_eq!(line, 1);
                assert!(message.contains("algrithm"), "{message}");
            }
            other => panic!("expected a config error, got {other}"),
        }

        let err = parse_config_str("seed = 1\n\n# comment\nbogus = 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 4, .. }), "{err}");
    }

    #[test]
    fn inverted_tau_bounds_fail_validation() {
        let m = parse_config_str("tau_min = 5\ntau_max = 3\n").unwrap();
        assert!(m.validate().is_err());
    }

    #[test]
    fn malformed_values_cite_their_line() {
        let err = parse_config_str("seed = banana\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }), "{err}");
        let err = parse_config_str("# ok\nlr = fast\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
        let err = parse_config_str("just a line\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let err = parse_config_str("seed = 1\nseed = 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err}");
    }

    #[test]
    fn comments_blanks_and_spacing_are_tolerated() {
        let m = parse_config_str("# a run\n\n  algorithm=fedprox  \n seed =  9 \n").unwrap();
        assert_eq!(m.config.algorithm, Algorithm::FedProx);
        assert_eq!(m.config.seed, 9);
    }

    #[test]
    fn idx_source_requires_both_paths() {
        assert!(parse_config_str("dataset = idx\n").is_err());
        assert!(parse_config_str("dataset = idx\nidx_images = a.idx\n").is_err());
        let m = parse_config_str("dataset = idx\nidx_images = a.idx\nidx_labels = b.idx\n").unwrap();
        // Parsing succeeds; validation then requires the files to exist.
        assert!(m.validate().is_err());
    }

    #[test]
    fn synthetic_round_trip() {
        let mut m = RunManifest::default();
        m.config.algorithm = Algorithm::QFfl;
        m.config.seed = 7;
        m.config.qffl_q = 2.5;
        m.partition_kind = PartitionKind::Shards;
        m.model = ModelKind::Mlp;
        m.hidden_dim = 8;
        m.output_format = ExportFormat::Json;
        m.output_path = PathBuf::from("out/run.json");
        let back = parse_config_str(&m.to_config_string()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn idx_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let images = dir.path().join("img.idx");
        let labels = dir.path().join("lbl.idx");
        std::fs::write(&images, b"").unwrap();
        std::fs::write(&labels, b"").unwrap();
        let m = RunManifest {
            dataset_source: DatasetSource::Idx {
                images: images.clone(),
                labels: labels.clone(),
            },
            ..RunManifest::default()
        };
        m.validate().unwrap();
        let back = parse_config_str(&m.to_config_string()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn manifest_builds_its_pieces() {
        let m = parse_config_str(
            "num_clients = 4\nclients_per_round = 2\nnum_classes = 3\ndim = 2\nper_class = 40\n",
        )
        .unwrap();
        let ds = m.build_dataset().unwrap();
        assert_eq!(ds.rows(), 120);
        assert_eq!(ds.num_classes(), 3);
        let p = m.build_partition(&ds).unwrap();
        assert_eq!(p.num_clients(), 4);
        let spec = m.model_spec(&ds).unwrap();
        assert_eq!(spec.param_count(), 3 * (2 + 1));
    }

    #[test]
    fn seed_precedence_is_flag_env_file() {
        assert_eq!(resolve_seed(Some(1), Some(2), 3), 1);
        assert_eq!(resolve_seed(None, Some(2), 3), 2);
        assert_eq!(resolve_seed(None, None, 3), 3);
    }

    #[test]
    fn parse_config_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "algorithm = fedavg\nseed = 3\n").unwrap();
        let m = parse_config(&path).unwrap();
        assert_eq!(m.config.algorithm, Algorithm::FedAvg);
        assert!(matches!(
            parse_config(&dir.path().join("missing.conf")).unwrap_err(),
            Error::Io { .. }
        ));
    }

    #[test]
    fn validation_rejects_bad_manifest_fields() {
        let mut m = RunManifest::default();
        m.test_fraction = 1.0;
        assert!(m.validate().is_err());
        let mut m = RunManifest::default();
        m.shards_per_client = 0;
        assert!(m.validate().is_err());
        let mut m = RunManifest::default();
        m.dataset_source = DatasetSource::Synthetic {
            num_classes: 1,
            dim: 2,
            per_class: 10,
            spread: 0.5,
        };
        assert!(m.validate().is_err());
    }
}
