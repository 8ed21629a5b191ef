//! Cross-validation and the two hyper-training procedures.
//!
//! * [`cross_validate`]: train θ from scratch for each proposed λ, keep the
//!   proposal with the lowest validation loss.
//! * [`hyper_train_global`]: fit the hypernetwork to `E_{λ∼p(λ)} L_train(λ, θ_φ(λ))`,
//!   then freeze φ and descend `λ̂ ↦ L_valid(θ_φ(λ̂))`.
//! * [`hyper_train_joint`]: interleave one φ step on λ sampled near λ̂ with one
//!   λ̂ step on the validation loss.
//!
//! The validation loss never sees λ directly, so the hypergradient is only the
//! response term `(∂L_valid/∂θ) · (∂θ_φ/∂λ)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{BatchStream, Dataset};
use crate::error::{ensure_finite, Error, Result};
use crate::hypernets::{HyperNet, HyperNetFamily, HyperNetParams, HyperNetSpec, HyperVector};
use crate::linalg::{norm2, DenseVector};
use crate::models::{check_compatible, ElemParams, Model, RegSpec};
use crate::optim::{AdamState, Optimizer, OptimizerSpec};
use crate::rng::{derive_seed, SeededRng};

/// Variance of the narrow local sampler `N(λ̂, 1e-5·I)` selected by `--paper-sigma`.
pub const NARROW_LOCAL_VARIANCE: f64 = 1e-5;
pub const DEFAULT_LOCAL_SD: f64 = 1e-2;
pub const DEFAULT_LAMBDA_BATCH: usize = 8;
pub const DEFAULT_STEP_SIZE: f64 = 3e-4;

// Sub-stream identifiers; one per independent source of randomness.
const STREAM_THETA_INIT: u64 = 1;
const STREAM_PHI_INIT: u64 = 2;
const STREAM_TRAIN_BATCHES: u64 = 3;
const STREAM_VALID_BATCHES: u64 = 4;
const STREAM_LAMBDA_SAMPLES: u64 = 5;
const STREAM_PROPOSALS: u64 = 6;

/// Model, regularizer and data splits shared by every procedure.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: Model,
    pub reg: RegSpec,
    pub train: Dataset,
    pub valid: Dataset,
}

impl Problem {
    pub fn new(model: Model, reg: RegSpec, train: Dataset, valid: Dataset) -> Result<Self> {
        check_compatible(&model, &train)?;
        check_compatible(&model, &valid)?;
        if train.is_empty() {
            return Err(Error::config("split.n_train", "training split is empty"));
        }
        if valid.is_empty() {
            return Err(Error::config("split.n_valid", "validation split is empty"));
        }
        if reg.mode == crate::models::RegMode::PerWeight && reg.dimension != model.n_params() {
            return Err(Error::shape("problem: per-weight dimension", model.n_params(), reg.dimension));
        }
        Ok(Self { model, reg, train, valid })
    }

    pub fn lambda_dim(&self) -> usize {
        self.reg.dimension
    }

    pub fn valid_loss(&self, theta: &[f64]) -> Result<f64> {
        self.model.pred_loss(theta, &self.valid)
    }
}

/// Counts elementary-gradient evaluations: one unit is one θ-gradient of the
/// training loss on one mini-batch at one λ.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GradCounter(pub u64);

impl GradCounter {
    pub fn add(&mut self, n: u64) {
        self.0 += n;
    }
}

/// Source of wall-clock time for run records.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Always reports zero, which keeps run records bit-reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

/// Distribution of hyperparameters used to train the hypernetwork.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SamplerSpec {
    /// `N(mean, diag(sd²))`; length-1 vectors broadcast over every dimension.
    GlobalGaussian { mean: Vec<f64>, sd: Vec<f64> },
    /// `N(λ̂, σ²I)` around the current hyperparameters.
    LocalGaussian { sd: f64 },
}

impl SamplerSpec {
    pub fn narrow_local() -> Self {
        SamplerSpec::LocalGaussian { sd: libm::sqrt(NARROW_LOCAL_VARIANCE) }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let ok_len = |v: &[f64]| v.len() == 1 || v.len() == dim;
        match self {
            SamplerSpec::GlobalGaussian { mean, sd } => {
                if !ok_len(mean) {
                    return Err(Error::config("sampler.mean", format!("length must be 1 or {dim}")));
                }
                if !ok_len(sd) {
                    return Err(Error::config("sampler.sd", format!("length must be 1 or {dim}")));
                }
                if sd.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::config("sampler.sd", "entries must be positive"));
                }
            }
            SamplerSpec::LocalGaussian { sd } => {
                if !(*sd > 0.0) {
                    return Err(Error::config("sampler.sd", "must be positive"));
                }
            }
        }
        Ok(())
    }

    fn pick(v: &[f64], i: usize) -> f64 {
        if v.len() == 1 {
            v[0]
        } else {
            v[i]
        }
    }

    /// Mean of the global sampler, expanded to `dim` entries.
    pub fn global_mean(&self, dim: usize) -> Option<HyperVector> {
        match self {
            SamplerSpec::GlobalGaussian { mean, .. } => {
                Some(HyperVector::filled(dim, 0.0).map_with(|i| Self::pick(mean, i)))
            }
            SamplerSpec::LocalGaussian { .. } => None,
        }
    }

    /// Draws one λ. `centre` is λ̂ for the local sampler and ignored otherwise.
    pub fn sample(&self, centre: &[f64], rng: &mut SeededRng) -> HyperVector {
        let dim = centre.len();
        let values = match self {
            SamplerSpec::GlobalGaussian { mean, sd } => {
                (0..dim).map(|i| Self::pick(mean, i) + Self::pick(sd, i) * rng.normal()).collect()
            }
            SamplerSpec::LocalGaussian { sd } => centre.iter().map(|c| c + sd * rng.normal()).collect(),
        };
        HyperVector::new(values).expect("sampler parameters are finite")
    }
}

impl HyperVector {
    fn map_with(mut self, f: impl Fn(usize) -> f64) -> Self {
        for (i, v) in self.iter_mut().enumerate() {
            *v = f(i);
        }
        self
    }
}

fn default_lambda_batch() -> usize {
    DEFAULT_LAMBDA_BATCH
}
fn default_step() -> f64 {
    DEFAULT_STEP_SIZE
}
fn default_one() -> usize {
    1
}

/// Settings shared by both hyper-training procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub hypernet: HyperNetFamily,
    pub sampler: SamplerSpec,
    /// Training examples per φ step.
    pub data_batch: usize,
    /// Validation examples per λ̂ step.
    pub valid_batch: usize,
    /// Sampled hyperparameters averaged per φ step.
    #[serde(default = "default_lambda_batch")]
    pub lambda_batch: usize,
    /// `T_hypernetwork` (global) phase length.
    #[serde(default)]
    pub hypernet_steps: usize,
    /// `T_hyperparameter` (global) phase length.
    #[serde(default)]
    pub hyper_steps: usize,
    /// Loop count for joint training.
    #[serde(default)]
    pub joint_steps: usize,
    /// Adam step size for φ.
    #[serde(default = "default_step")]
    pub phi_lr: f64,
    /// Adam step size for λ̂.
    #[serde(default = "default_step")]
    pub lambda_lr: f64,
    /// Initial λ̂, broadcast over all dimensions.
    #[serde(default)]
    pub lambda_init: f64,
    /// A run-record row is written every this many steps (and at the last step).
    #[serde(default = "default_one")]
    pub record_every: usize,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.data_batch == 0 {
            return Err(Error::config("data_batch", "must be at least 1"));
        }
        if self.valid_batch == 0 {
            return Err(Error::config("valid_batch", "must be at least 1"));
        }
        if self.lambda_batch == 0 {
            return Err(Error::config("lambda_batch", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every", "must be at least 1"));
        }
        if !(self.phi_lr >= 0.0) || !(self.lambda_lr >= 0.0) {
            return Err(Error::config("phi_lr", "step sizes must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub step: u64,
    pub train_loss: f64,
    pub valid_loss: f64,
    pub lambda_norm: f64,
    pub lambda_0: f64,
    pub seconds: f64,
}

/// Per-step metrics; steps are strictly increasing.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    rows: Vec<RunRow>,
}

impl RunRecord {
    pub fn push(&mut self, row: RunRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.step <= last.step {
                return Err(Error::config("run_record", format!("step {} after {}", row.step, last.step)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[RunRow] {
        &self.rows
    }

    pub fn last(&self) -> Option<&RunRow> {
        self.rows.last()
    }
}

/// Result of a hyper-training run.
#[derive(Debug, Clone)]
pub struct HyperTrainOutcome {
    pub hypernet: HyperNet,
    pub phi: HyperNetParams,
    pub lambda: HyperVector,
    pub record: RunRecord,
    pub grad_evals: GradCounter,
}

impl HyperTrainOutcome {
    /// `θ_φ(λ̂)` for the final hyperparameters.
    pub fn theta(&self) -> Result<DenseVector> {
        self.hypernet.predict(self.phi.as_slice(), &self.lambda)
    }
}

/// `(∂L_valid/∂θ)|_{θ_φ(λ̂)} · ∂θ_φ/∂λ` on `valid_batch`.
pub fn hypergradient(
    problem: &Problem,
    hypernet: &HyperNet,
    phi: &[f64],
    lambda: &[f64],
    valid_batch: &Dataset,
) -> Result<Vec<f64>> {
    Ok(hypergradient_with_loss(problem, hypernet, phi, lambda, valid_batch)?.1)
}

fn hypergradient_with_loss(
    problem: &Problem,
    hypernet: &HyperNet,
    phi: &[f64],
    lambda: &[f64],
    valid_batch: &Dataset,
) -> Result<(f64, Vec<f64>)> {
    if lambda.len() != problem.lambda_dim() {
        return Err(Error::shape("hypergradient: lambda", problem.lambda_dim(), lambda.len()));
    }
    let theta = hypernet.predict(phi, lambda)?;
    let (loss, g_theta) = problem.model.pred_loss_grad(&theta, valid_batch)?;
    Ok((loss, hypernet.vjp_lambda(phi, lambda, &g_theta)?))
}

/// `λ ↦ L_valid(θ_φ(λ))`, the surrogate validation loss.
pub fn surrogate_valid_loss(
    problem: &Problem,
    hypernet: &HyperNet,
    phi: &[f64],
    lambda: &[f64],
    batch: &Dataset,
) -> Result<f64> {
    let theta = hypernet.predict(phi, lambda)?;
    problem.model.pred_loss(&theta, batch)
}

/// Training loss at one sampled λ and its gradient in φ via the chain rule.
pub fn phi_loss_grad(
    problem: &Problem,
    hypernet: &HyperNet,
    phi: &[f64],
    lambda: &[f64],
    batch: &Dataset,
) -> Result<(f64, Vec<f64>)> {
    let theta = hypernet.predict(phi, lambda)?;
    let (loss, g_theta) = problem.model.train_loss_grad(&theta, lambda, &problem.reg, batch)?;
    Ok((loss, hypernet.vjp_phi(phi, lambda, &g_theta)?))
}

/// Averages [`phi_loss_grad`] over `lambdas`, summing in index order.
pub fn phi_batch_loss_grad(
    problem: &Problem,
    hypernet: &HyperNet,
    phi: &[f64],
    lambdas: &[HyperVector],
    batch: &Dataset,
    counter: &mut GradCounter,
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; hypernet.n_params()];
    let mut loss = 0.0;
    let scale = 1.0 / lambdas.len() as f64;
    for lambda in lambdas {
        let theta = hypernet.predict(phi, lambda)?;
        let (l, g_theta) = problem.model.train_loss_grad(&theta, lambda, &problem.reg, batch)?;
        loss += scale * l;
        hypernet.accumulate_vjp_phi(phi, lambda, &g_theta, scale, &mut grad)?;
    }
    counter.add(lambdas.len() as u64);
    ensure_finite("hyper-training: phi gradient", &grad)?;
    Ok((loss, grad))
}

fn build_hypernet(problem: &Problem, family: HyperNetFamily) -> Result<HyperNet> {
    HyperNet::new(HyperNetSpec { family, lambda_dim: problem.lambda_dim(), theta_dim: problem.model.n_params() })
}

/// Records a row at `step` if it is due.
struct Recorder<'a> {
    problem: &'a Problem,
    clock: &'a dyn Clock,
    every: usize,
    record: RunRecord,
}

impl Recorder<'_> {
    fn due(&self, step: usize, last: usize) -> bool {
        step % self.every == 0 || step == last
    }

    fn row(&mut self, step: usize, train_loss: f64, hypernet: &HyperNet, phi: &[f64], lambda: &[f64]) -> Result<()> {
        let valid_loss = surrogate_valid_loss(self.problem, hypernet, phi, lambda, &self.problem.valid)?;
        self.record.push(RunRow {
            step: step as u64,
            train_loss,
            valid_loss,
            lambda_norm: norm2(lambda),
            lambda_0: lambda[0],
            seconds: self.clock.seconds(),
        })
    }
}

/// Phase 1 (fit φ over `p(λ)`) then phase 2 (descend λ̂ with φ frozen).
pub fn hyper_train_global(problem: &Problem, cfg: &RunConfig, clock: &dyn Clock) -> Result<HyperTrainOutcome> {
    cfg.validate()?;
    let SamplerSpec::GlobalGaussian { .. } = cfg.sampler else {
        return Err(Error::config("sampler.kind", "global training needs a global-gaussian sampler"));
    };
    let dim = problem.lambda_dim();
    cfg.sampler.validate(dim)?;
    let lambda = HyperVector::filled(dim, cfg.lambda_init);
    let hypernet = build_hypernet(problem, cfg.hypernet)?;
    let theta0 = problem.model.init_params(derive_seed(cfg.seed, STREAM_THETA_INIT));
    // Centre the initial fit on the sampler mean, where most samples land.
    let centre = cfg.sampler.global_mean(dim).unwrap();
    let phi = hypernet.init(&theta0, &centre, derive_seed(cfg.seed, STREAM_PHI_INIT))?;
    let mut state = TrainingState::new(problem, cfg, hypernet, phi, lambda)?;
    let mut rec = Recorder { problem, clock, every: cfg.record_every, record: RunRecord::default() };

    let total = cfg.hypernet_steps + cfg.hyper_steps;
    for step in 1..=cfg.hypernet_steps {
        let loss = state.phi_step(problem, cfg, cfg.lambda_batch).map_err(|e| e.at_step(step))?;
        if rec.due(step, total) {
            rec.row(step, loss, &state.hypernet, state.phi.as_slice(), &state.lambda).map_err(|e| e.at_step(step))?;
        }
    }
    for k in 1..=cfg.hyper_steps {
        let step = cfg.hypernet_steps + k;
        state.lambda_step(problem).map_err(|e| e.at_step(step))?;
        if rec.due(step, total) {
            let theta = state.hypernet.predict(state.phi.as_slice(), &state.lambda)?;
            let train = problem.model.train_loss(&theta, &state.lambda, &problem.reg, &problem.train)?;
            rec.row(step, train, &state.hypernet, state.phi.as_slice(), &state.lambda).map_err(|e| e.at_step(step))?;
        }
    }
    Ok(state.finish(rec.record))
}

/// Alternating φ and λ̂ updates with λ sampled near λ̂.
pub fn hyper_train_joint(problem: &Problem, cfg: &RunConfig, clock: &dyn Clock) -> Result<HyperTrainOutcome> {
    cfg.validate()?;
    let SamplerSpec::LocalGaussian { .. } = cfg.sampler else {
        return Err(Error::config("sampler.kind", "joint training needs a local-gaussian sampler"));
    };
    let dim = problem.lambda_dim();
    cfg.sampler.validate(dim)?;
    let lambda = HyperVector::filled(dim, cfg.lambda_init);
    let hypernet = build_hypernet(problem, cfg.hypernet)?;
    let theta0 = problem.model.init_params(derive_seed(cfg.seed, STREAM_THETA_INIT));
    let phi = hypernet.init(&theta0, &lambda, derive_seed(cfg.seed, STREAM_PHI_INIT))?;
    let mut state = TrainingState::new(problem, cfg, hypernet, phi, lambda)?;
    let mut rec = Recorder { problem, clock, every: cfg.record_every, record: RunRecord::default() };

    for step in 1..=cfg.joint_steps {
        let loss = state.phi_step(problem, cfg, cfg.lambda_batch).map_err(|e| e.at_step(step))?;
        state.lambda_step(problem).map_err(|e| e.at_step(step))?;
        if rec.due(step, cfg.joint_steps) {
            rec.row(step, loss, &state.hypernet, state.phi.as_slice(), &state.lambda).map_err(|e| e.at_step(step))?;
        }
    }
    Ok(state.finish(rec.record))
}

/// Mutable state of a hyper-training run.
struct TrainingState {
    hypernet: HyperNet,
    phi: HyperNetParams,
    lambda: HyperVector,
    phi_opt: AdamState,
    lambda_opt: AdamState,
    train_stream: BatchStream,
    valid_stream: BatchStream,
    lambda_rng: SeededRng,
    sampler: SamplerSpec,
    counter: GradCounter,
}

impl TrainingState {
    fn new(
        problem: &Problem,
        cfg: &RunConfig,
        hypernet: HyperNet,
        phi: HyperNetParams,
        lambda: HyperVector,
    ) -> Result<Self> {
        let train_stream =
            BatchStream::new(problem.train.len(), cfg.data_batch, derive_seed(cfg.seed, STREAM_TRAIN_BATCHES))?;
        let valid_stream =
            BatchStream::new(problem.valid.len(), cfg.valid_batch, derive_seed(cfg.seed, STREAM_VALID_BATCHES))?;
        Ok(Self {
            phi_opt: AdamState::new(hypernet.n_params(), cfg.phi_lr),
            lambda_opt: AdamState::new(lambda.len(), cfg.lambda_lr),
            hypernet,
            phi,
            lambda,
            train_stream,
            valid_stream,
            lambda_rng: SeededRng::new(derive_seed(cfg.seed, STREAM_LAMBDA_SAMPLES)),
            sampler: cfg.sampler.clone(),
            counter: GradCounter::default(),
        })
    }

    /// One Adam step on φ using `n_lambda` sampled hyperparameters; returns the mean sampled training loss.
    fn phi_step(&mut self, problem: &Problem, _cfg: &RunConfig, n_lambda: usize) -> Result<f64> {
        let batch = self.train_stream.next_batch(&problem.train)?;
        let lambdas: Vec<HyperVector> =
            (0..n_lambda).map(|_| self.sampler.sample(&self.lambda, &mut self.lambda_rng)).collect();
        let (loss, grad) =
            phi_batch_loss_grad(problem, &self.hypernet, self.phi.as_slice(), &lambdas, &batch, &mut self.counter)?;
        self.phi_opt.step(self.phi.as_mut_slice(), &grad)?;
        Ok(loss)
    }

    fn lambda_step(&mut self, problem: &Problem) -> Result<()> {
        let batch = self.valid_stream.next_batch(&problem.valid)?;
        let g = hypergradient(problem, &self.hypernet, self.phi.as_slice(), &self.lambda, &batch)?;
        self.lambda_opt.step(&mut self.lambda, &g)
    }

    fn finish(self, record: RunRecord) -> HyperTrainOutcome {
        HyperTrainOutcome {
            hypernet: self.hypernet,
            phi: self.phi,
            lambda: self.lambda,
            record,
            grad_evals: self.counter,
        }
    }
}

/// Budget for training one set of elementary weights from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerTraining {
    pub steps: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
}

impl InnerTraining {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::config("inner.steps", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("inner.batch_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Trains θ from a fresh initialization at fixed λ; `seed` fixes both the
/// initialization and the batch order.
pub fn train_elementary(
    problem: &Problem,
    lambda: &[f64],
    inner: &InnerTraining,
    seed: u64,
    counter: &mut GradCounter,
) -> Result<ElemParams> {
    inner.validate()?;
    if lambda.len() != problem.lambda_dim() {
        return Err(Error::shape("train_elementary: lambda", problem.lambda_dim(), lambda.len()));
    }
    let mut theta = problem.model.init_params(derive_seed(seed, STREAM_THETA_INIT));
    let mut opt = inner.optimizer.build(theta.len());
    let mut stream = BatchStream::new(problem.train.len(), inner.batch_size, derive_seed(seed, STREAM_TRAIN_BATCHES))?;
    for step in 1..=inner.steps {
        let batch = stream.next_batch(&problem.train)?;
        let (_, g) =
            problem.model.train_loss_grad(&theta, lambda, &problem.reg, &batch).map_err(|e| e.at_step(step))?;
        opt.step(&mut theta.flat, &g).map_err(|e| e.at_step(step))?;
    }
    counter.add(inner.steps as u64);
    Ok(theta)
}

/// Validation loss after retraining θ from scratch at `lambda`.
pub fn retrained_valid_loss(problem: &Problem, lambda: &[f64], inner: &InnerTraining, seed: u64) -> Result<f64> {
    let theta = train_elementary(problem, lambda, inner, seed, &mut GradCounter::default())?;
    problem.valid_loss(&theta)
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub best_index: usize,
    pub best_lambda: HyperVector,
    pub best_theta: ElemParams,
    pub valid_losses: Vec<f64>,
    pub grad_evals: GradCounter,
}

/// Trains θ for every proposal with the same initialization and batch order,
/// and returns the proposal with the lowest validation loss (lowest index on ties).
pub fn cross_validate(
    problem: &Problem,
    inner: &InnerTraining,
    proposals: &[HyperVector],
    seed: u64,
) -> Result<CvResult> {
    if proposals.is_empty() {
        return Err(Error::config("proposals", "need at least one proposal"));
    }
    let mut counter = GradCounter::default();
    let mut losses = Vec::with_capacity(proposals.len());
    let mut best: Option<(usize, ElemParams)> = None;
    for (i, lambda) in proposals.iter().enumerate() {
        let theta = train_elementary(problem, lambda, inner, seed, &mut counter)?;
        let loss = problem.valid_loss(&theta)?;
        let better = match &best {
            None => true,
            Some((j, _)) => loss < losses[*j],
        };
        losses.push(loss);
        if better {
            best = Some((i, theta));
        }
    }
    let (best_index, best_theta) = best.unwrap();
    Ok(CvResult {
        best_index,
        best_lambda: proposals[best_index].clone(),
        best_theta,
        valid_losses: losses,
        grad_evals: counter,
    })
}

/// `n` evenly spaced 1-D proposals covering `[low, high]`.
pub fn grid_proposals(low: f64, high: f64, n: usize) -> Vec<HyperVector> {
    match n {
        0 => Vec::new(),
        1 => vec![HyperVector::filled(1, 0.5 * (low + high))],
        _ => (0..n).map(|i| HyperVector::filled(1, low + (high - low) * i as f64 / (n - 1) as f64)).collect(),
    }
}

/// Uniform proposals in the box `[low, high]^dim`.
pub fn uniform_proposals(dim: usize, low: f64, high: f64, n: usize, seed: u64) -> Vec<HyperVector> {
    let mut rng = SeededRng::new(derive_seed(seed, STREAM_PROPOSALS));
    (0..n)
        .map(|_| {
            let v = (0..dim).map(|_| low + (high - low) * rng.uniform()).collect();
            HyperVector::new(v).expect("finite box")
        })
        .collect()
}
