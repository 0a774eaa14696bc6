//! Models, losses, gradients, and the local SGD routine clients run.
//!
//! Three model kinds are supported: multinomial logistic regression, a
//! one-hidden-layer ReLU MLP, and a quadratic toy objective
//! `F(w) = 0.5 * ||w - b||^2` used by the convergence-bound checker. All
//! parameters live in a flat [`ParameterVector`]; the [`ModelSpec`] carries
//! the shape information needed to slice it into weight matrices.
//!
//! Classifier losses are mean cross-entropy over the batch. Gradients are
//! exact analytic expressions; [`finite_diff_gradient`] exists as an
//! independent numerical check, not as a training path.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{rng_from, stream};

/// Flat parameter storage shared by every model kind.
///
/// Entries are validated finite on construction; arithmetic helpers assume
/// the caller keeps them finite (step sizes in this crate are small).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    values: Vec<f64>,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "parameter vector entries must be finite, found {bad}"
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &ParameterVector) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    /// `self += s * (a - b)`, the proximal-term shape.
    pub fn add_scaled_diff(&mut self, s: f64, a: &ParameterVector, b: &ParameterVector) {
        debug_assert_eq!(self.len(), a.len());
        debug_assert_eq!(self.len(), b.len());
        for ((g, x), y) in self.values.iter_mut().zip(&a.values).zip(&b.values) {
            *g += s * (x - y);
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn squared_distance(&self, other: &ParameterVector) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "parameter dimensions differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn distance(&self, other: &ParameterVector) -> Result<f64> {
        Ok(self.squared_distance(other)?.sqrt())
    }
}

/// A set of labeled rows, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
}

impl Batch {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("feature dimension must be positive"));
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
        if let Some(bad) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "features must be finite, found {bad}"
            )));
        }
        Ok(Self {
            features,
            labels,
            dim,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            features: Vec::new(),
            labels: Vec::new(),
            dim,
        }
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Gathers the given rows into a new batch. Indices must be in range.
    pub fn select(&self, indices: &[usize]) -> Batch {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Batch {
            features,
            labels,
            dim: self.dim,
        }
    }
}

/// Model architecture plus the shape metadata for its flat parameters.
///
/// Parameter layout:
/// - logistic: `[W (classes x dim), b (classes)]`
/// - mlp: `[W1 (hidden x dim), b1 (hidden), W2 (classes x hidden), b2 (classes)]`
/// - quadratic: the parameter vector itself, same length as the target
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Logistic {
        input_dim: usize,
        num_classes: usize,
    },
    Mlp {
        input_dim: usize,
        hidden_dim: usize,
        num_classes: usize,
    },
    /// `F(w) = 0.5 * ||w - target||^2`; batches are carried along for API
    /// uniformity but do not enter the objective.
    Quadratic { target: ParameterVector },
}

impl ModelSpec {
    pub fn logistic(input_dim: usize, num_classes: usize) -> Result<Self> {
        if input_dim == 0 || num_classes == 0 {
            return Err(Error::invalid("logistic dimensions must be positive"));
        }
        Ok(ModelSpec::Logistic {
            input_dim,
            num_classes,
        })
    }

    pub fn mlp(input_dim: usize, hidden_dim: usize, num_classes: usize) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 || num_classes == 0 {
            return Err(Error::invalid("mlp dimensions must be positive"));
        }
        Ok(ModelSpec::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        })
    }

    pub fn quadratic(target: ParameterVector) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::invalid("quadratic target must be non-empty"));
        }
        Ok(ModelSpec::Quadratic { target })
    }

    pub fn param_count(&self) -> usize {
        match self {
            ModelSpec::Logistic {
                input_dim,
                num_classes,
            } => num_classes * (input_dim + 1),
            ModelSpec::Mlp {
                input_dim,
                hidden_dim,
                num_classes,
            } => hidden_dim * (input_dim + 1) + num_classes * (hidden_dim + 1),
            ModelSpec::Quadratic { target } => target.len(),
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match self {
            ModelSpec::Logistic { num_classes, .. } | ModelSpec::Mlp { num_classes, .. } => {
                Some(*num_classes)
            }
            ModelSpec::Quadratic { .. } => None,
        }
    }

    pub fn is_classifier(&self) -> bool {
        self.num_classes().is_some()
    }
}

fn check_params(spec: &ModelSpec, w: &ParameterVector) -> Result<()> {
    if w.len() != spec.param_count() {
        return Err(Error::invalid(format!(
            "parameter vector has {} entries, spec needs {}",
            w.len(),
            spec.param_count()
        )));
    }
    Ok(())
}

fn check_batch(batch: &Batch, input_dim: usize, num_classes: usize) -> Result<()> {
    if batch.dim() != input_dim {
        return Err(Error::invalid(format!(
            "batch dim {} does not match model input dim {}",
            batch.dim(),
            input_dim
        )));
    }
    if batch.is_empty() {
        return Err(Error::invalid("classifiers need a non-empty batch"));
    }
    if let Some(&bad) = batch.labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::invalid(format!(
            "label {bad} out of range for {num_classes} classes"
        )));
    }
    Ok(())
}

/// `log(sum exp(z))` with the usual max-shift for stability.
fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn logistic_logits(w: &[f64], x: &[f64], dim: usize, classes: usize, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate().take(classes) {
        let row = &w[j * dim..(j + 1) * dim];
        let mut z = w[classes * dim + j];
        for (wk, xk) in row.iter().zip(x) {
            z += wk * xk;
        }
        *o = z;
    }
}

struct MlpForward {
    pre_hidden: Vec<f64>,
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

fn mlp_forward(w: &[f64], x: &[f64], d: usize, h: usize, c: usize) -> MlpForward {
    let b1 = &w[h * d..h * d + h];
    let w2_off = h * d + h;
    let b2 = &w[w2_off + c * h..];
    let mut pre_hidden = vec![0.0; h];
    for j in 0..h {
        let row = &w[j * d..(j + 1) * d];
        let mut z = b1[j];
        for (wk, xk) in row.iter().zip(x) {
            z += wk * xk;
        }
        pre_hidden[j] = z;
    }
    let hidden: Vec<f64> = pre_hidden.iter().map(|&z| z.max(0.0)).collect();
    let mut logits = vec![0.0; c];
    for j in 0..c {
        let row = &w[w2_off + j * h..w2_off + (j + 1) * h];
        let mut z = b2[j];
        for (wk, ak) in row.iter().zip(&hidden) {
            z += wk * ak;
        }
        logits[j] = z;
    }
    MlpForward {
        pre_hidden,
        hidden,
        logits,
    }
}

/// Objective value at `w` on `batch`: mean cross-entropy for classifiers,
/// half squared distance to the target for the quadratic model.
pub fn loss(spec: &ModelSpec, w: &ParameterVector, batch: &Batch) -> Result<f64> {
    check_params(spec, w)?;
    match spec {
        ModelSpec::Logistic {
            input_dim,
            num_classes,
        } => {
            check_batch(batch, *input_dim, *num_classes)?;
            let mut total = 0.0;
            let mut logits = vec![0.0; *num_classes];
            for i in 0..batch.rows() {
                logistic_logits(w.values(), batch.row(i), *input_dim, *num_classes, &mut logits);
                total += log_sum_exp(&logits) - logits[batch.label(i)];
            }
            Ok(total / batch.rows() as f64)
        }
        ModelSpec::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        } => {
            check_batch(batch, *input_dim, *num_classes)?;
            let mut total = 0.0;
            for i in 0..batch.rows() {
                let fwd = mlp_forward(
                    w.values(),
                    batch.row(i),
                    *input_dim,
                    *hidden_dim,
                    *num_classes,
                );
                total += log_sum_exp(&fwd.logits) - fwd.logits[batch.label(i)];
            }
            Ok(total / batch.rows() as f64)
        }
        ModelSpec::Quadratic { target } => Ok(0.5 * w.squared_distance(target)?),
    }
}

/// Index of the largest logit; ties resolve to the lower class.
fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (j, &z) in logits.iter().enumerate().skip(1) {
        if z > logits[best] {
            best = j;
        }
    }
    best
}

/// Argmax class prediction per row. Only classifiers predict.
pub fn predict(spec: &ModelSpec, w: &ParameterVector, batch: &Batch) -> Result<Vec<usize>> {
    check_params(spec, w)?;
    match spec {
        ModelSpec::Logistic {
            input_dim,
            num_classes,
        } => {
            check_batch(batch, *input_dim, *num_classes)?;
            let mut logits = vec![0.0; *num_classes];
            Ok((0..batch.rows())
                .map(|i| {
                    logistic_logits(w.values(), batch.row(i), *input_dim, *num_classes, &mut logits);
                    argmax(&logits)
                })
                .collect())
        }
        ModelSpec::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        } => {
            check_batch(batch, *input_dim, *num_classes)?;
            Ok((0..batch.rows())
                .map(|i| {
                    let fwd =
                        mlp_forward(w.values(), batch.row(i), *input_dim, *hidden_dim, *num_classes);
                    argmax(&fwd.logits)
                })
                .collect())
        }
        ModelSpec::Quadratic { .. } => {
            Err(Error::invalid("the quadratic objective has no classes to predict"))
        }
    }
}

/// Exact gradient of [`loss`] with respect to `w`.
pub fn gradient(spec: &ModelSpec, w: &ParameterVector, batch: &Batch) -> Result<ParameterVector> {
    check_params(spec, w)?;
    match spec {
        ModelSpec::Logistic {
            input_dim,
            num_classes,
        } => {
            check_batch(batch, *input_dim, *num_classes)?;
            let (d, c) = (*input_dim, *num_classes);
            let inv_n = 1.0 / batch.rows() as f64;
            let mut g = vec![0.0; w.len()];
            let mut logits = vec![0.0; c];
            for i in 0..batch.rows() {
                let x = batch.row(i);
                logistic_logits(w.values(), x, d, c, &mut logits);
                let lse = log_sum_exp(&logits);
                for j in 0..c {
                    let p = (logits[j] - lse).exp();
                    let delta = (p - if j == batch.label(i) { 1.0 } else { 0.0 }) * inv_n;
                    for (gk, xk) in g[j * d..(j + 1) * d].iter_mut().zip(x) {
                        *gk += delta * xk;
                    }
                    g[c * d + j] += delta;
                }
            }
            ParameterVector::new(g)
        }
        ModelSpec::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        } => {
            check_batch(batch, *input_dim, *num_classes)?;
            let (d, h, c) = (*input_dim, *hidden_dim, *num_classes);
            let w2_off = h * d + h;
            let inv_n = 1.0 / batch.rows() as f64;
            let mut g = vec![0.0; w.len()];
            let mut delta2 = vec![0.0; c];
            for i in 0..batch.rows() {
                let x = batch.row(i);
                let fwd = mlp_forward(w.values(), x, d, h, c);
                let lse = log_sum_exp(&fwd.logits);
                for j in 0..c {
                    let p = (fwd.logits[j] - lse).exp();
                    delta2[j] = (p - if j == batch.label(i) { 1.0 } else { 0.0 }) * inv_n;
                    for (gk, ak) in g[w2_off + j * h..w2_off + (j + 1) * h]
                        .iter_mut()
                        .zip(&fwd.hidden)
                    {
                        *gk += delta2[j] * ak;
                    }
                    g[w2_off + c * h + j] += delta2[j];
                }
                for k in 0..h {
                    // ReLU subgradient: zero at and below the kink.
                    if fwd.pre_hidden[k] <= 0.0 {
                        continue;
                    }
                    let mut back = 0.0;
                    for j in 0..c {
                        back += delta2[j] * w.values()[w2_off + j * h + k];
                    }
                    for (gk, xk) in g[k * d..(k + 1) * d].iter_mut().zip(x) {
                        *gk += back * xk;
                    }
                    g[h * d + k] += back;
                }
            }
            ParameterVector::new(g)
        }
        ModelSpec::Quadratic { target } => {
            let mut g = w.clone();
            g.axpy(-1.0, target);
            Ok(g)
        }
    }
}

/// Central-difference approximation of the gradient, used to audit
/// [`gradient`]. `h` must be positive.
pub fn finite_diff_gradient(
    spec: &ModelSpec,
    w: &ParameterVector,
    batch: &Batch,
    h: f64,
) -> Result<ParameterVector> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::invalid(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    check_params(spec, w)?;
    let mut probe = w.clone();
    let mut g = vec![0.0; w.len()];
    for i in 0..w.len() {
        let orig = probe.values[i];
        probe.values[i] = orig + h;
        let up = loss(spec, &probe, batch)?;
        probe.values[i] = orig - h;
        let down = loss(spec, &probe, batch)?;
        probe.values[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    ParameterVector::new(g)
}

/// Initial parameters: zeros for logistic and quadratic, Glorot-uniform
/// hidden and output weights (zero biases) for the MLP.
pub fn init_params(spec: &ModelSpec, seed: u64) -> ParameterVector {
    match spec {
        ModelSpec::Logistic { .. } | ModelSpec::Quadratic { .. } => {
            ParameterVector::zeros(spec.param_count())
        }
        ModelSpec::Mlp {
            input_dim,
            hidden_dim,
            num_classes,
        } => {
            let (d, h, c) = (*input_dim, *hidden_dim, *num_classes);
            let mut rng = rng_from(seed, &[stream::INIT]);
            let mut values = vec![0.0; spec.param_count()];
            let a1 = (6.0 / (d + h) as f64).sqrt();
            for v in values.iter_mut().take(h * d) {
                *v = rng.gen_range(-a1..=a1);
            }
            let a2 = (6.0 / (h + c) as f64).sqrt();
            let w2_off = h * d + h;
            for v in values.iter_mut().skip(w2_off).take(c * h) {
                *v = rng.gen_range(-a2..=a2);
            }
            ParameterVector { values }
        }
    }
}

/// Runs `epochs` passes of mini-batch SGD and returns the updated parameters.
///
/// Each step is `w <- w - lr * gamma * (grad + prox_mu * (w - anchor))`; the
/// two learning-rate factors are multiplied once up front, so a run at
/// `(lr, gamma)` is bit-identical to one at `(lr * gamma, 1)`. Row order is
/// reshuffled every epoch from `(seed, epoch)`, and a trailing partial batch
/// is kept. `epochs = 0` or an empty batch returns `w0` unchanged.
#[allow(clippy::too_many_arguments)]
pub fn local_train(
    spec: &ModelSpec,
    w0: &ParameterVector,
    data: &Batch,
    epochs: u32,
    lr: f64,
    gamma: f64,
    batch_size: usize,
    prox_mu: f64,
    prox_anchor: Option<&ParameterVector>,
    seed: u64,
) -> Result<ParameterVector> {
    check_params(spec, w0)?;
    if !lr.is_finite() || lr <= 0.0 {
        return Err(Error::invalid(format!("lr must be positive, got {lr}")));
    }
    if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0, 1], got {gamma}")));
    }
    if batch_size == 0 {
        return Err(Error::invalid("batch_size must be at least 1"));
    }
    if !prox_mu.is_finite() || prox_mu < 0.0 {
        return Err(Error::invalid(format!(
            "prox_mu must be non-negative, got {prox_mu}"
        )));
    }
    let anchor = if prox_mu > 0.0 {
        let a = prox_anchor
            .ok_or_else(|| Error::invalid("prox_mu > 0 requires a prox anchor"))?;
        if a.len() != w0.len() {
            return Err(Error::invalid(format!(
                "prox anchor has {} entries, parameters have {}",
                a.len(),
                w0.len()
            )));
        }
        Some(a)
    } else {
        None
    };

    let mut w = w0.clone();
    if epochs == 0 || data.rows() == 0 {
        return Ok(w);
    }
    // Single product keeps (lr, gamma) and (lr * gamma, 1) bit-identical.
    let step = lr * gamma;
    let mut order: Vec<usize> = (0..data.rows()).collect();
    for epoch in 0..epochs {
        let mut rng = rng_from(seed, &[stream::SHUFFLE, epoch as u64]);
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let mini = data.select(chunk);
            let mut g = gradient(spec, &w, &mini)?;
            if let Some(a) = anchor {
                g.add_scaled_diff(prox_mu, &w, a);
            }
            w.axpy(-step, &g);
        }
    }
    Ok(w)
}
