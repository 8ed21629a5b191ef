//! Elementary models `θ ↦ predictions`: a linear classifier/regressor and
//! ReLU MLPs, with their validation loss and the `exp(λ)`-weighted L2
//! training loss.
//!
//! Parameters are stored flat, layer by layer: the weight matrix (row-major,
//! `out × in`) followed by the bias vector when the model has biases. The
//! regularizer applies to every entry of that vector, biases included, and
//! has no ½ factor:
//!
//! ```text
//! global:      R(θ, λ) = exp(λ) · Σᵢ θᵢ²
//! per-weight:  R(θ, λ) = Σᵢ exp(λᵢ) · θᵢ²
//! ```

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Targets};
use crate::diff::DiffScalarFn;
use crate::error::{ensure_finite, ensure_finite_scalar, Error, Result};
use crate::linalg::{axpy, dot, DenseMatrix, DenseVector};
use crate::rng::SeededRng;

/// Default cap on the elementary dimension for exact Hessians.
pub const DEFAULT_HESSIAN_CAP: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    #[default]
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    SoftmaxCrossEntropy,
    MeanSquaredError,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Input, hidden..., output widths.
    pub layer_sizes: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
    pub task: Task,
    #[serde(default = "default_true")]
    pub bias: bool,
}

impl ModelSpec {
    pub fn linear(inputs: usize, outputs: usize, task: Task) -> Self {
        Self { layer_sizes: vec![inputs, outputs], activation: Activation::Relu, task, bias: true }
    }

    pub fn mlp(layer_sizes: Vec<usize>, task: Task) -> Self {
        Self { layer_sizes, activation: Activation::Relu, task, bias: true }
    }

    pub fn without_bias(mut self) -> Self {
        self.bias = false;
        self
    }
}

/// Placement of one layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerBlock {
    pub weight_offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub bias_offset: Option<usize>,
}

impl LayerBlock {
    fn end(&self) -> usize {
        match self.bias_offset {
            Some(b) => b + self.rows,
            None => self.weight_offset + self.rows * self.cols,
        }
    }
}

pub type Layout = Vec<LayerBlock>;

/// Elementary weights θ with their layer layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ElemParams {
    pub flat: DenseVector,
    pub layout: Layout,
}

impl Deref for ElemParams {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.flat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegMode {
    Global,
    PerWeight,
}

/// Shape of the regularization hyperparameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegSpec {
    pub mode: RegMode,
    pub dimension: usize,
}

impl RegSpec {
    pub fn global() -> Self {
        Self { mode: RegMode::Global, dimension: 1 }
    }

    pub fn per_weight(n_params: usize) -> Self {
        Self { mode: RegMode::PerWeight, dimension: n_params }
    }

    pub fn for_model(mode: RegMode, model: &Model) -> Self {
        match mode {
            RegMode::Global => Self::global(),
            RegMode::PerWeight => Self::per_weight(model.n_params()),
        }
    }

    fn check(&self, theta_len: usize, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.dimension {
            return Err(Error::shape("regularizer: lambda", self.dimension, lambda.len()));
        }
        if self.mode == RegMode::PerWeight && self.dimension != theta_len {
            return Err(Error::shape("regularizer: per-weight dimension", theta_len, self.dimension));
        }
        Ok(())
    }

    /// `R(θ, λ)`.
    pub fn penalty(&self, theta: &[f64], lambda: &[f64]) -> Result<f64> {
        self.check(theta.len(), lambda)?;
        let v = match self.mode {
            RegMode::Global => libm::exp(lambda[0]) * theta.iter().map(|t| t * t).sum::<f64>(),
            RegMode::PerWeight => theta.iter().zip(lambda).map(|(t, l)| libm::exp(*l) * t * t).sum(),
        };
        ensure_finite_scalar("regularizer", v)
    }

    /// Adds `∂R/∂θ = 2·exp(λ)·θ` into `grad`.
    pub fn add_gradient(&self, theta: &[f64], lambda: &[f64], grad: &mut [f64]) -> Result<()> {
        self.check(theta.len(), lambda)?;
        match self.mode {
            RegMode::Global => axpy(2.0 * libm::exp(lambda[0]), theta, grad),
            RegMode::PerWeight => {
                for ((g, t), l) in grad.iter_mut().zip(theta).zip(lambda) {
                    *g += 2.0 * libm::exp(*l) * t;
                }
            }
        }
        Ok(())
    }
}

/// A validated [`ModelSpec`] together with its parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    layout: Layout,
    n_params: usize,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        if spec.layer_sizes.len() < 2 {
            return Err(Error::config("model.layer_sizes", "need at least input and output sizes"));
        }
        if spec.layer_sizes.contains(&0) {
            return Err(Error::config("model.layer_sizes", "sizes must be positive"));
        }
        if spec.task == Task::MeanSquaredError && *spec.layer_sizes.last().unwrap() != 1 {
            return Err(Error::config("model.layer_sizes", "regression models have a single output"));
        }
        let mut layout = Vec::with_capacity(spec.layer_sizes.len() - 1);
        let mut offset = 0;
        for w in spec.layer_sizes.windows(2) {
            let (cols, rows) = (w[0], w[1]);
            let bias_offset = spec.bias.then_some(offset + rows * cols);
            let block = LayerBlock { weight_offset: offset, rows, cols, bias_offset };
            offset = block.end();
            layout.push(block);
        }
        Ok(Self { spec, layout, n_params: offset })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn n_inputs(&self) -> usize {
        self.spec.layer_sizes[0]
    }

    pub fn n_outputs(&self) -> usize {
        *self.spec.layer_sizes.last().unwrap()
    }

    pub fn is_single_layer(&self) -> bool {
        self.layout.len() == 1
    }

    /// Gaussian weights scaled by `1/√fan_in`, zero biases.
    pub fn init_params(&self, seed: u64) -> ElemParams {
        let mut rng = SeededRng::new(seed);
        let mut flat = vec![0.0; self.n_params];
        for block in &self.layout {
            let scale = 1.0 / libm::sqrt(block.cols as f64);
            for w in &mut flat[block.weight_offset..block.weight_offset + block.rows * block.cols] {
                *w = scale * rng.normal();
            }
        }
        self.wrap(flat)
    }

    pub fn wrap(&self, flat: Vec<f64>) -> ElemParams {
        ElemParams { flat: DenseVector::from_vec_unchecked(flat), layout: self.layout.clone() }
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(Error::shape("model: theta", self.n_params, theta.len()));
        }
        Ok(())
    }

    fn check_batch(&self, batch: &Dataset) -> Result<()> {
        if batch.n_features() != self.n_inputs() {
            return Err(Error::shape("model: input features", self.n_inputs(), batch.n_features()));
        }
        if batch.is_empty() {
            return Err(Error::config("batch", "batch is empty"));
        }
        match (batch.targets(), self.spec.task) {
            (Targets::Classes { n_classes, .. }, Task::SoftmaxCrossEntropy) => {
                if *n_classes != self.n_outputs() {
                    return Err(Error::shape("model: classes", self.n_outputs(), *n_classes));
                }
            }
            (Targets::Regression(_), Task::MeanSquaredError) => {}
            _ => return Err(Error::config("model.task", "task does not match dataset kind")),
        }
        Ok(())
    }

    /// Pre-activations of every layer; the last entry holds the outputs.
    fn forward_all(&self, theta: &[f64], x: &DenseMatrix) -> Result<Vec<DenseMatrix>> {
        let n = x.rows();
        let mut outs: Vec<DenseMatrix> = Vec::with_capacity(self.layout.len());
        for (l, block) in self.layout.iter().enumerate() {
            let w = &theta[block.weight_offset..block.weight_offset + block.rows * block.cols];
            let mut z = DenseMatrix::zeros(n, block.rows);
            for i in 0..n {
                let input: &[f64] = if l == 0 { x.row(i) } else { outs[l - 1].row(i) };
                let zr = &mut z.as_mut_slice()[i * block.rows..(i + 1) * block.rows];
                for (k, zk) in zr.iter_mut().enumerate() {
                    let mut v = dot(&w[k * block.cols..(k + 1) * block.cols], input);
                    if let Some(b) = block.bias_offset {
                        v += theta[b + k];
                    }
                    *zk = v;
                }
            }
            ensure_finite("forward: affine layer", z.as_slice())?;
            let last = l + 1 == self.layout.len();
            if !last {
                // Hidden layers store post-activation values.
                z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
            outs.push(z);
        }
        Ok(outs)
    }

    /// Logits (classification) or predictions (regression), one row per example.
    pub fn forward(&self, theta: &[f64], x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_theta(theta)?;
        if x.cols() != self.n_inputs() {
            return Err(Error::shape("forward: input features", self.n_inputs(), x.cols()));
        }
        Ok(self.forward_all(theta, x)?.pop().unwrap())
    }

    /// Mean loss and `∂loss/∂outputs` (already divided by batch size).
    fn output_loss(
        &self,
        outputs: &DenseMatrix,
        targets: &Targets,
        want_grad: bool,
    ) -> Result<(f64, Option<DenseMatrix>)> {
        let n = outputs.rows();
        let inv_n = 1.0 / n as f64;
        let mut grad = want_grad.then(|| DenseMatrix::zeros(n, outputs.cols()));
        let mut total = 0.0;
        match targets {
            Targets::Classes { labels, .. } => {
                for (i, &label) in labels.iter().enumerate() {
                    let z = outputs.row(i);
                    let max = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                    let sum: f64 = z.iter().map(|&v| libm::exp(v - max)).sum();
                    let lse = max + libm::log(sum);
                    total += lse - z[label];
                    if let Some(g) = grad.as_mut() {
                        let gr = &mut g.as_mut_slice()[i * z.len()..(i + 1) * z.len()];
                        for (k, gk) in gr.iter_mut().enumerate() {
                            let p = libm::exp(z[k] - lse);
                            *gk = inv_n * (p - if k == label { 1.0 } else { 0.0 });
                        }
                    }
                }
            }
            Targets::Regression(y) => {
                for (i, &yi) in y.iter().enumerate() {
                    let r = outputs.get(i, 0) - yi;
                    total += r * r;
                    if let Some(g) = grad.as_mut() {
                        g.set(i, 0, 2.0 * inv_n * r);
                    }
                }
            }
        }
        let loss = ensure_finite_scalar("loss: log-softmax / squared error", total * inv_n)?;
        Ok((loss, grad))
    }

    /// Mean cross-entropy (natural log) or mean squared error over the batch.
    pub fn pred_loss(&self, theta: &[f64], batch: &Dataset) -> Result<f64> {
        self.check_theta(theta)?;
        self.check_batch(batch)?;
        let outs = self.forward_all(theta, batch.features())?;
        Ok(self.output_loss(outs.last().unwrap(), batch.targets(), false)?.0)
    }

    /// `pred_loss` and its gradient in θ by reverse-mode backpropagation.
    pub fn pred_loss_grad(&self, theta: &[f64], batch: &Dataset) -> Result<(f64, Vec<f64>)> {
        self.check_theta(theta)?;
        self.check_batch(batch)?;
        let x = batch.features();
        let outs = self.forward_all(theta, x)?;
        let (loss, dz) = self.output_loss(outs.last().unwrap(), batch.targets(), true)?;
        let mut dz = dz.unwrap();
        let mut grad = vec![0.0; self.n_params];
        let n = x.rows();
        for l in (0..self.layout.len()).rev() {
            let block = self.layout[l];
            let input = if l == 0 { x } else { &outs[l - 1] };
            let w_range = block.weight_offset..block.weight_offset + block.rows * block.cols;
            for i in 0..n {
                let dzr = dz.row(i);
                let a = input.row(i);
                let gw = &mut grad[w_range.clone()];
                for (k, &d) in dzr.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, a, &mut gw[k * block.cols..(k + 1) * block.cols]);
                    }
                }
                if let Some(b) = block.bias_offset {
                    for (k, &d) in dzr.iter().enumerate() {
                        grad[b + k] += d;
                    }
                }
            }
            if l > 0 {
                // Propagate through the weights, then through the ReLU of layer l-1.
                let w = &theta[w_range];
                let mut da = DenseMatrix::zeros(n, block.cols);
                for i in 0..n {
                    let dar = &mut da.as_mut_slice()[i * block.cols..(i + 1) * block.cols];
                    for (k, &d) in dz.row(i).iter().enumerate() {
                        if d != 0.0 {
                            axpy(d, &w[k * block.cols..(k + 1) * block.cols], dar);
                        }
                    }
                }
                for (g, &a) in da.as_mut_slice().iter_mut().zip(outs[l - 1].as_slice()) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
                dz = da;
            }
        }
        ensure_finite("backprop: parameter gradient", &grad)?;
        Ok((loss, grad))
    }

    /// `pred_loss + R(θ, λ)`.
    pub fn train_loss(&self, theta: &[f64], lambda: &[f64], reg: &RegSpec, batch: &Dataset) -> Result<f64> {
        let pred = self.pred_loss(theta, batch)?;
        Ok(pred + reg.penalty(theta, lambda)?)
    }

    /// Training loss and its gradient in θ.
    pub fn train_loss_grad(
        &self,
        theta: &[f64],
        lambda: &[f64],
        reg: &RegSpec,
        batch: &Dataset,
    ) -> Result<(f64, Vec<f64>)> {
        let (pred, mut grad) = self.pred_loss_grad(theta, batch)?;
        let penalty = reg.penalty(theta, lambda)?;
        reg.add_gradient(theta, lambda, &mut grad)?;
        Ok((pred + penalty, grad))
    }

    pub fn train_grad_theta(
        &self,
        theta: &[f64],
        lambda: &[f64],
        reg: &RegSpec,
        batch: &Dataset,
    ) -> Result<DenseVector> {
        let (_, g) = self.train_loss_grad(theta, lambda, reg, batch)?;
        Ok(DenseVector::from_vec_unchecked(g))
    }

    fn check_hessian_cap(&self, cap: usize) -> Result<()> {
        if !self.is_single_layer() {
            return Err(Error::Capability {
                what: "exact Hessian (layers; only single-layer models are supported)",
                limit: 1,
                requested: self.layout.len(),
            });
        }
        if self.n_params > cap {
            return Err(Error::Capability { what: "exact Hessian dimension", limit: cap, requested: self.n_params });
        }
        Ok(())
    }

    /// Exact `∂²L_train/∂θ²` for single-layer models with at most `cap` parameters.
    pub fn train_hessian_theta(
        &self,
        theta: &[f64],
        lambda: &[f64],
        reg: &RegSpec,
        batch: &Dataset,
        cap: usize,
    ) -> Result<DenseMatrix> {
        self.check_hessian_cap(cap)?;
        self.check_theta(theta)?;
        self.check_batch(batch)?;
        reg.check(theta.len(), lambda)?;
        let block = self.layout[0];
        let (outs, ins) = (block.rows, block.cols);
        let d = self.n_params;
        // Parameter index of (output k, augmented input j); j == ins is the bias.
        let index = |k: usize, j: usize| -> usize {
            if j < ins {
                block.weight_offset + k * ins + j
            } else {
                block.bias_offset.unwrap() + k
            }
        };
        let aug = ins + usize::from(block.bias_offset.is_some());
        let x = batch.features();
        let n = x.rows();
        let inv_n = 1.0 / n as f64;
        let mut h = DenseMatrix::zeros(d, d);
        let mut xt = vec![0.0; aug];
        match batch.targets() {
            Targets::Regression(_) => {
                for i in 0..n {
                    xt[..ins].copy_from_slice(x.row(i));
                    if aug > ins {
                        xt[ins] = 1.0;
                    }
                    for a in 0..aug {
                        for b in 0..aug {
                            let (p, q) = (index(0, a), index(0, b));
                            h.set(p, q, h.get(p, q) + 2.0 * inv_n * xt[a] * xt[b]);
                        }
                    }
                }
            }
            Targets::Classes { .. } => {
                let logits = self.forward_all(theta, x)?.pop().unwrap();
                let mut prob = vec![0.0; outs];
                for i in 0..n {
                    xt[..ins].copy_from_slice(x.row(i));
                    if aug > ins {
                        xt[ins] = 1.0;
                    }
                    let z = logits.row(i);
                    let max = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                    let s: f64 = z.iter().map(|&v| libm::exp(v - max)).sum();
                    for (p, &zk) in prob.iter_mut().zip(z) {
                        *p = libm::exp(zk - max) / s;
                    }
                    for k in 0..outs {
                        for k2 in 0..outs {
                            let c = prob[k] * (if k == k2 { 1.0 } else { 0.0 } - prob[k2]) * inv_n;
                            if c == 0.0 {
                                continue;
                            }
                            for a in 0..aug {
                                for b in 0..aug {
                                    let (p, q) = (index(k, a), index(k2, b));
                                    h.set(p, q, h.get(p, q) + c * xt[a] * xt[b]);
                                }
                            }
                        }
                    }
                }
            }
        }
        // Products accumulate in different orders above; average so H is exactly symmetric.
        for p in 0..d {
            for q in p + 1..d {
                let v = 0.5 * (h.get(p, q) + h.get(q, p));
                h.set(p, q, v);
                h.set(q, p, v);
            }
        }
        for p in 0..d {
            let decay = match reg.mode {
                RegMode::Global => libm::exp(lambda[0]),
                RegMode::PerWeight => libm::exp(lambda[p]),
            };
            h.set(p, p, h.get(p, p) + 2.0 * decay);
        }
        ensure_finite("train_hessian_theta", h.as_slice())?;
        Ok(h)
    }

    /// `∂²L_train/∂θ∂λ`: `diag(2·exp(λᵢ)·θᵢ)` per-weight, the column `2·exp(λ)·θ` global.
    pub fn train_mixed_partials(
        &self,
        theta: &[f64],
        lambda: &[f64],
        reg: &RegSpec,
        cap: usize,
    ) -> Result<DenseMatrix> {
        self.check_theta(theta)?;
        reg.check(theta.len(), lambda)?;
        if self.n_params > cap {
            return Err(Error::Capability { what: "mixed partials dimension", limit: cap, requested: self.n_params });
        }
        let m = match reg.mode {
            RegMode::Global => {
                let s = 2.0 * libm::exp(lambda[0]);
                DenseMatrix::from_vec_unchecked(theta.len(), 1, theta.iter().map(|t| s * t).collect())
            }
            RegMode::PerWeight => {
                let diag: Vec<f64> = theta.iter().zip(lambda).map(|(t, l)| 2.0 * libm::exp(*l) * t).collect();
                DenseMatrix::from_diagonal(&diag)
            }
        };
        ensure_finite("train_mixed_partials", m.as_slice())?;
        Ok(m)
    }
}

/// `θ ↦ pred_loss(θ; batch)` as a [`DiffScalarFn`].
pub struct PredLoss<'a> {
    pub model: &'a Model,
    pub batch: &'a Dataset,
}

impl DiffScalarFn for PredLoss<'_> {
    fn dim(&self) -> usize {
        self.model.n_params()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.model.pred_loss(x, self.batch)
    }
    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.model.pred_loss_grad(x, self.batch)
    }
}

/// `θ ↦ train_loss(θ; λ, batch)` as a [`DiffScalarFn`].
pub struct TrainLoss<'a> {
    pub model: &'a Model,
    pub lambda: &'a [f64],
    pub reg: RegSpec,
    pub batch: &'a Dataset,
}

impl DiffScalarFn for TrainLoss<'_> {
    fn dim(&self) -> usize {
        self.model.n_params()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.model.train_loss(x, self.lambda, &self.reg, self.batch)
    }
    fn value_and_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.model.train_loss_grad(x, self.lambda, &self.reg, self.batch)
    }
}

/// Checks that a model and dataset agree before a long run starts.
pub fn check_compatible(model: &Model, data: &Dataset) -> Result<()> {
    if data.n_features() != model.n_inputs() {
        return Err(Error::config(
            "model.layer_sizes",
            format!("input size {} but dataset has {} features", model.n_inputs(), data.n_features()),
        ));
    }
    if data.is_empty() {
        return Ok(());
    }
    model.check_batch(data)
}
