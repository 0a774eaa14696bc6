//! Data sources and client partitioning.
//!
//! Two sources are supported: seeded synthetic Gaussian blobs (one blob per
//! class, means drawn from the seed) and IDX image/label file pairs in the
//! classic big-endian layout. Partitioners split a dataset across clients
//! either uniformly (IID) or by label-sorted shards, which concentrates a
//! small number of classes on each client and is the standard way to
//! manufacture label skew.

use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{BigEndian, ReadBytesExt};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::learner::Batch;
use crate::rng::{rng_from, standard_normal, stream};

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// A labeled dataset with dense row-major features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, num_classes: usize) -> Result<Self> {
        if dim == 0 || num_classes == 0 {
            return Err(Error::invalid("dataset dim and num_classes must be positive"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::invalid(format!(
                "feature buffer holds {} values but {} rows of dim {} need {}",
                features.len(),
                labels.len(),
                dim,
                labels.len() * dim
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
            num_classes,
        })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// All rows as a training batch.
    pub fn to_batch(&self) -> Batch {
        Batch::new(self.features.clone(), self.labels.clone(), self.dim)
            .expect("dataset invariants imply a valid batch")
    }

    /// The given rows as a batch. Indices must be in range.
    pub fn batch_of(&self, indices: &[usize]) -> Batch {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Batch::new(features, labels, self.dim).expect("dataset invariants imply a valid batch")
    }

    /// Copies the given rows into a standalone dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            dim: self.dim,
            num_classes: self.num_classes,
        }
    }
}

/// Assignment of dataset rows to clients; client ids are vector positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    assignments: Vec<Vec<usize>>,
}

impl Partition {
    /// Validates that the per-client lists are disjoint and within range.
    pub fn new(assignments: Vec<Vec<usize>>, dataset_rows: usize) -> Result<Self> {
        let mut seen = vec![false; dataset_rows];
        for rows in &assignments {
            for &r in rows {
                if r >= dataset_rows {
                    return Err(Error::invalid(format!(
                        "row index {r} out of range for {dataset_rows} rows"
                    )));
                }
                if seen[r] {
                    return Err(Error::invalid(format!("row {r} assigned to two clients")));
                }
                seen[r] = true;
            }
        }
        Ok(Self { assignments })
    }

    pub fn num_clients(&self) -> usize {
        self.assignments.len()
    }

    pub fn client_rows(&self, client: usize) -> &[usize] {
        &self.assignments[client]
    }

    pub fn total_rows(&self) -> usize {
        self.assignments.iter().map(Vec::len).sum()
    }
}

/// Draws `per_class` points around one Gaussian blob per class.
///
/// Class means are standard normal in each coordinate; points are
/// `mean + spread * z`. With `spread = 0` every row of a class equals its
/// mean exactly.
pub fn generate_synthetic(
    num_classes: usize,
    dim: usize,
    per_class: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes == 0 || dim == 0 || per_class == 0 {
        return Err(Error::invalid(
            "num_classes, dim, and per_class must all be positive",
        ));
    }
    if !spread.is_finite() || spread < 0.0 {
        return Err(Error::invalid(format!(
            "spread must be finite and non-negative, got {spread}"
        )));
    }
    let mut rng = rng_from(seed, &[stream::DATA]);
    let mut features = Vec::with_capacity(num_classes * per_class * dim);
    let mut labels = Vec::with_capacity(num_classes * per_class);
    for class in 0..num_classes {
        let mean: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
        for _ in 0..per_class {
            for m in &mean {
                features.push(m + spread * standard_normal(&mut rng));
            }
            labels.push(class);
        }
    }
    Dataset::new(features, labels, dim, num_classes)
}

fn read_idx_header(
    cursor: &mut Cursor<&[u8]>,
    path: &Path,
    expected_magic: u32,
    what: &str,
) -> Result<u32> {
    let magic = cursor
        .read_u32::<BigEndian>()
        .map_err(|_| Error::format(path, format!("file too short for an {what} header")))?;
    if magic != expected_magic {
        return Err(Error::format(
            path,
            format!("bad magic 0x{magic:08x}, expected 0x{expected_magic:08x} for {what} data"),
        ));
    }
    cursor
        .read_u32::<BigEndian>()
        .map_err(|_| Error::format(path, format!("file too short for an {what} header")))
}

/// Loads an IDX image/label file pair into a dataset.
///
/// Images use magic 0x00000803 followed by count, rows, cols (all big-endian
/// u32) and one byte per pixel; labels use magic 0x00000801 followed by count
/// and one byte per item. Pixels are scaled to `[0, 1]` and flattened
/// row-major; the number of classes is taken as `max label + 1`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let image_bytes =
        std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let label_bytes =
        std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;

    let mut cursor = Cursor::new(image_bytes.as_slice());
    let count = read_idx_header(&mut cursor, images_path, IDX_IMAGE_MAGIC, "image")? as usize;
    let rows = cursor
        .read_u32::<BigEndian>()
        .map_err(|_| Error::format(images_path, "file too short for an image header"))?
        as usize;
    let cols = cursor
        .read_u32::<BigEndian>()
        .map_err(|_| Error::format(images_path, "file too short for an image header"))?
        as usize;
    let dim = rows * cols;
    if count == 0 || dim == 0 {
        return Err(Error::format(
            images_path,
            format!("degenerate image dimensions: {count} items of {rows}x{cols}"),
        ));
    }
    let mut pixels = vec![0u8; count * dim];
    cursor
        .read_exact(&mut pixels)
        .map_err(|_| Error::format(images_path, "pixel data truncated"))?;
    let mut trailing = [0u8; 1];
    if cursor.read(&mut trailing).unwrap_or(0) != 0 {
        return Err(Error::format(images_path, "trailing bytes after pixel data"));
    }

    let mut cursor = Cursor::new(label_bytes.as_slice());
    let label_count =
        read_idx_header(&mut cursor, labels_path, IDX_LABEL_MAGIC, "label")? as usize;
    if label_count != count {
        return Err(Error::format(
            labels_path,
            format!("{label_count} labels for {count} images"),
        ));
    }
    let mut raw_labels = vec![0u8; label_count];
    cursor
        .read_exact(&mut raw_labels)
        .map_err(|_| Error::format(labels_path, "label data truncated"))?;

    let features: Vec<f64> = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|&l| l as usize).collect();
    let num_classes = labels.iter().max().copied().unwrap_or(0) + 1;
    Dataset::new(features, labels, dim, num_classes)
}

/// Uniform random split into `num_clients` chunks whose sizes differ by at
/// most one (lower client ids take the remainder).
pub fn partition_iid(dataset: &Dataset, num_clients: usize, seed: u64) -> Result<Partition> {
    if num_clients == 0 {
        return Err(Error::invalid("num_clients must be positive"));
    }
    if dataset.rows() == 0 {
        return Err(Error::invalid("cannot partition an empty dataset"));
    }
    let mut order: Vec<usize> = (0..dataset.rows()).collect();
    let mut rng = rng_from(seed, &[stream::PARTITION, 0]);
    order.shuffle(&mut rng);
    let base = dataset.rows() / num_clients;
    let extra = dataset.rows() % num_clients;
    let mut assignments = Vec::with_capacity(num_clients);
    let mut at = 0;
    for client in 0..num_clients {
        let take = base + usize::from(client < extra);
        let mut rows: Vec<usize> = order[at..at + take].to_vec();
        rows.sort_unstable();
        assignments.push(rows);
        at += take;
    }
    Partition::new(assignments, dataset.rows())
}

/// Label-skewed split: rows are sorted by label, cut into
/// `num_clients * shards_per_client` equal shards, and the shards are dealt
/// to clients at random without replacement.
///
/// Rows that do not fill a whole shard are dropped. When shard boundaries
/// line up with class boundaries each client sees at most
/// `shards_per_client` distinct labels.
pub fn partition_shards(
    dataset: &Dataset,
    num_clients: usize,
    shards_per_client: usize,
    seed: u64,
) -> Result<Partition> {
    if num_clients == 0 || shards_per_client == 0 {
        return Err(Error::invalid(
            "num_clients and shards_per_client must be positive",
        ));
    }
    let total_shards = num_clients * shards_per_client;
    let shard_size = dataset.rows() / total_shards;
    if shard_size == 0 {
        return Err(Error::invalid(format!(
            "insufficient data: {} rows cannot fill {} shards",
            dataset.rows(),
            total_shards
        )));
    }
    // Stable order: by label, then original position.
    let mut order: Vec<usize> = (0..dataset.rows()).collect();
    order.sort_by_key(|&i| (dataset.label(i), i));

    let mut shard_ids: Vec<usize> = (0..total_shards).collect();
    let mut rng = rng_from(seed, &[stream::PARTITION, 1]);
    shard_ids.shuffle(&mut rng);

    let mut assignments = Vec::with_capacity(num_clients);
    for client in 0..num_clients {
        let mut rows = Vec::with_capacity(shards_per_client * shard_size);
        for &shard in &shard_ids[client * shards_per_client..(client + 1) * shards_per_client] {
            rows.extend_from_slice(&order[shard * shard_size..(shard + 1) * shard_size]);
        }
        rows.sort_unstable();
        assignments.push(rows);
    }
    Partition::new(assignments, dataset.rows())
}

/// Aggregation weights proportional to per-client row counts; sums to 1.
pub fn client_weights(partition: &Partition) -> Result<Vec<f64>> {
    if partition.num_clients() == 0 {
        return Err(Error::invalid("partition has no clients"));
    }
    let total = partition.total_rows();
    if total == 0 {
        return Err(Error::invalid("partition holds no rows"));
    }
    Ok((0..partition.num_clients())
        .map(|c| partition.client_rows(c).len() as f64 / total as f64)
        .collect())
}

/// Seeded holdout split; the test side gets `floor(fraction * rows)` rows.
/// Both sides keep their rows in original dataset order.
pub fn train_test_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::invalid(format!(
            "test_fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    if dataset.rows() == 0 {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    let mut order: Vec<usize> = (0..dataset.rows()).collect();
    let mut rng = rng_from(seed, &[stream::SPLIT]);
    order.shuffle(&mut rng);
    let test_count = (test_fraction * dataset.rows() as f64).floor() as usize;
    let mut test_rows: Vec<usize> = order[..test_count].to_vec();
    let mut train_rows: Vec<usize> = order[test_count..].to_vec();
    test_rows.sort_unstable();
    train_rows.sort_unstable();
    Ok((dataset.subset(&train_rows), dataset.subset(&test_rows)))
}

/// Writes a `u8` image set in the big-endian IDX3 layout read by [`load_idx`].
///
/// Every image must hold exactly `rows * cols` pixels. Useful for fixtures
/// and for exporting small derived datasets.
pub fn write_idx_images(path: &Path, rows: u32, cols: u32, images: &[Vec<u8>]) -> Result<()> {
    let pixels = rows as usize * cols as usize;
    for (i, img) in images.iter().enumerate() {
        if img.len() != pixels {
            return Err(Error::invalid(format!(
                "image {i} has {} pixels, expected {pixels}",
                img.len()
            )));
        }
    }
    let mut bytes = Vec::with_capacity(16 + images.len() * pixels);
    bytes.extend_from_slice(&IDX_IMAGE_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(images.len() as u32).to_be_bytes());
    bytes.extend_from_slice(&rows.to_be_bytes());
    bytes.extend_from_slice(&cols.to_be_bytes());
    for img in images {
        bytes.extend_from_slice(img);
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes class labels in the big-endian IDX1 layout read by [`load_idx`].
pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    bytes.extend_from_slice(&IDX_LABEL_MAGIC.to_be_bytes());
    bytes.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    bytes.extend_from_slice(labels);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
