//! Reference methods: a Gaussian-process surrogate, unrolled differentiation
//! through SGD, random search, and the compute-matched surrogate comparison.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    cross_validate, phi_batch_loss_grad, surrogate_valid_loss, train_elementary, uniform_proposals, CvResult,
    GradCounter, InnerTraining, Problem, SamplerSpec,
};
use crate::data::{BatchStream, Dataset};
use crate::error::{ensure_finite, Error, Result};
use crate::hypernets::{HyperNet, HyperNetFamily, HyperNetParams, HyperNetSpec, HyperVector};
use crate::linalg::{cholesky, cholesky_solve, dot, forward_substitute, matmul, spectral_norm_symmetric, DenseMatrix};
use crate::models::{Model, RegSpec};
use crate::optim::{AdamState, Optimizer};
use crate::rng::{derive_seed, SeededRng};

const STREAM_FIT_LAMBDAS: u64 = 11;
const STREAM_EVAL_LAMBDAS: u64 = 12;
const STREAM_FIT_TRAINING: u64 = 13;
const STREAM_EVAL_TRAINING: u64 = 14;
const STREAM_FIXED_ARM: u64 = 15;
const STREAM_SAMPLED_ARM: u64 = 16;

/// Maps `f` over `0..n` and returns results in index order.
pub trait ParallelMap: Sync {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ParallelMap for Sequential {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        (0..n).map(f).collect()
    }
}

// ---------------------------------------------------------------------------
// Gaussian process

/// Squared-exponential kernel `s² exp(−‖a−b‖² / 2ℓ²)` plus `noise²` on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpKernel {
    pub lengthscale: f64,
    pub signal_sd: f64,
    pub noise_sd: f64,
}

impl GpKernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal_sd * self.signal_sd * libm::exp(-0.5 * d2 / (self.lengthscale * self.lengthscale))
    }

    fn validate(&self) -> Result<()> {
        if !(self.lengthscale > 0.0) || !(self.signal_sd > 0.0) || !(self.noise_sd >= 0.0) {
            return Err(Error::config(
                "gp.kernel",
                "lengthscale and signal_sd must be positive, noise_sd non-negative",
            ));
        }
        Ok(())
    }
}

/// Fitted zero-mean GP regressor.
#[derive(Debug, Clone)]
pub struct GpModel {
    pub kernel: GpKernel,
    inputs: Vec<HyperVector>,
    chol: DenseMatrix,
    alpha: Vec<f64>,
    /// Diagonal jitter that was added beyond `noise²` to factorize.
    pub jitter: f64,
    log_ml: f64,
}

const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4];

pub fn gp_fit(inputs: &[HyperVector], targets: &[f64], kernel: GpKernel) -> Result<GpModel> {
    kernel.validate()?;
    let n = inputs.len();
    if n == 0 {
        return Err(Error::config("gp.inputs", "need at least one observation"));
    }
    if targets.len() != n {
        return Err(Error::shape("gp_fit: targets", n, targets.len()));
    }
    let dim = inputs[0].len();
    if let Some(bad) = inputs.iter().find(|x| x.len() != dim) {
        return Err(Error::shape("gp_fit: input dimension", dim, bad.len()));
    }
    ensure_finite("gp_fit: targets", targets)?;
    let gram = DenseMatrix::from_fn(n, n, |i, j| kernel.eval(&inputs[i], &inputs[j]));
    let scale = kernel.signal_sd * kernel.signal_sd;
    let mut last = 0.0;
    for rel in JITTER_LADDER {
        let jitter = rel * scale;
        last = jitter;
        let mut k = gram.clone();
        for i in 0..n {
            k.set(i, i, k.get(i, i) + kernel.noise_sd * kernel.noise_sd + jitter);
        }
        if let Some(chol) = cholesky(&k) {
            let alpha = cholesky_solve(&chol, targets);
            let log_det: f64 = (0..n).map(|i| libm::log(chol.get(i, i))).sum::<f64>() * 2.0;
            let log_ml =
                -0.5 * dot(targets, &alpha) - 0.5 * log_det - 0.5 * n as f64 * libm::log(2.0 * core::f64::consts::PI);
            return Ok(GpModel { kernel, inputs: inputs.to_vec(), chol, alpha, jitter, log_ml });
        }
    }
    Err(Error::Factorization { jitter: last, suggested: last * 100.0 })
}

impl GpModel {
    /// Posterior mean and variance of the latent function at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.inputs[0].len() {
            return Err(Error::shape("gp_predict", self.inputs[0].len(), x.len()));
        }
        let kx: Vec<f64> = self.inputs.iter().map(|xi| self.kernel.eval(xi, x)).collect();
        let mean = dot(&kx, &self.alpha);
        let v = forward_substitute(&self.chol, &kx);
        let var = (self.kernel.eval(x, x) - dot(&v, &v)).max(0.0);
        Ok((mean, var))
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_ml
    }

    pub fn n_observations(&self) -> usize {
        self.inputs.len()
    }
}

pub fn gp_predict(model: &GpModel, x: &[f64]) -> Result<(f64, f64)> {
    model.predict(x)
}

/// Kernel hyperparameter grid searched by log marginal likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpGrid {
    pub lengthscales: Vec<f64>,
    pub noise_sds: Vec<f64>,
    /// Signal scales; empty means "use the sample sd of the targets".
    #[serde(default)]
    pub signal_sds: Vec<f64>,
}

impl Default for GpGrid {
    fn default() -> Self {
        Self {
            lengthscales: vec![0.1, 0.2, 0.5, 1.0, 2.0, 5.0],
            noise_sds: vec![1e-3, 1e-2, 3e-2, 1e-1],
            signal_sds: Vec::new(),
        }
    }
}

/// Fits every grid kernel and keeps the one with the highest marginal
/// likelihood (first in grid order on ties).
pub fn gp_fit_grid(inputs: &[HyperVector], targets: &[f64], grid: &GpGrid) -> Result<GpModel> {
    if grid.lengthscales.is_empty() || grid.noise_sds.is_empty() {
        return Err(Error::config("gp.grid", "lengthscales and noise_sds must be non-empty"));
    }
    let signals = if grid.signal_sds.is_empty() {
        let n = targets.len().max(1) as f64;
        let mean = targets.iter().sum::<f64>() / n;
        let var = targets.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
        vec![libm::sqrt(var).max(1e-6)]
    } else {
        grid.signal_sds.clone()
    };
    let mut best: Option<GpModel> = None;
    for &signal_sd in &signals {
        for &lengthscale in &grid.lengthscales {
            for &noise_sd in &grid.noise_sds {
                let model = match gp_fit(inputs, targets, GpKernel { lengthscale, signal_sd, noise_sd }) {
                    Ok(m) => m,
                    Err(Error::Factorization { .. }) => continue,
                    Err(e) => return Err(e),
                };
                if best.as_ref().map_or(true, |b| model.log_ml > b.log_ml) {
                    best = Some(model);
                }
            }
        }
    }
    best.ok_or(Error::Factorization { jitter: JITTER_LADDER[5], suggested: 1e-2 })
}

/// GP on mean-centred targets; predictions add the mean back.
#[derive(Debug, Clone)]
pub struct CentredGp {
    pub gp: GpModel,
    pub offset: f64,
}

impl CentredGp {
    pub fn fit(inputs: &[HyperVector], targets: &[f64], grid: &GpGrid) -> Result<Self> {
        let offset = targets.iter().sum::<f64>() / targets.len().max(1) as f64;
        let centred: Vec<f64> = targets.iter().map(|t| t - offset).collect();
        Ok(Self { gp: gp_fit_grid(inputs, &centred, grid)?, offset })
    }

    pub fn predict_mean(&self, x: &[f64]) -> Result<f64> {
        Ok(self.gp.predict(x)?.0 + self.offset)
    }
}

// ---------------------------------------------------------------------------
// Unrolled differentiation

/// `K` steps of full-batch gradient descent with step size `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnrollSpec {
    pub steps: usize,
    pub lr: f64,
}

/// Differentiates the validation loss through `K` SGD steps started at `theta0`:
/// `J₀ = 0`, `J_{i+1} = (I − αH(θᵢ)) Jᵢ − α M(θᵢ)`, result `(∂L_valid/∂θ)|_{θ_K} J_K`.
#[allow(clippy::too_many_arguments)]
pub fn unrolled_hypergradient(
    model: &Model,
    reg: &RegSpec,
    lambda: &[f64],
    theta0: &[f64],
    spec: UnrollSpec,
    train: &Dataset,
    valid: &Dataset,
    cap: usize,
) -> Result<Vec<f64>> {
    if spec.steps == 0 {
        return Err(Error::config("unroll.steps", "must be at least 1"));
    }
    if !(spec.lr > 0.0) {
        return Err(Error::config("unroll.lr", "must be positive"));
    }
    let d = model.n_params();
    if theta0.len() != d {
        return Err(Error::shape("unrolled_hypergradient: theta", d, theta0.len()));
    }
    let mut theta = theta0.to_vec();
    let mut jac = DenseMatrix::zeros(d, lambda.len());
    for step in 1..=spec.steps {
        let h = model.train_hessian_theta(&theta, lambda, reg, train, cap).map_err(|e| e.at_step(step))?;
        let m = model.train_mixed_partials(&theta, lambda, reg, cap).map_err(|e| e.at_step(step))?;
        let hj = matmul(&h, &jac)?;
        let g = model.train_grad_theta(&theta, lambda, reg, train).map_err(|e| e.at_step(step))?;
        for (j, (hj, m)) in jac.as_mut_slice().iter_mut().zip(hj.as_slice().iter().zip(m.as_slice())) {
            *j -= spec.lr * (hj + m);
        }
        for (t, gi) in theta.iter_mut().zip(g.iter()) {
            *t -= spec.lr * gi;
        }
        ensure_finite("unrolled_hypergradient: theta", &theta).map_err(|e| e.at_step(step))?;
        ensure_finite("unrolled_hypergradient: jacobian", jac.as_slice()).map_err(|e| e.at_step(step))?;
    }
    let (_, g_valid) = model.pred_loss_grad(&theta, valid)?;
    Ok(crate::linalg::matvec_transposed(&jac, &g_valid)?.into_vec())
}

/// `fraction / ‖H(θ)‖₂`, a step size inside the stability region of gradient descent.
pub fn stable_step_size(
    model: &Model,
    reg: &RegSpec,
    lambda: &[f64],
    theta: &[f64],
    train: &Dataset,
    fraction: f64,
    cap: usize,
) -> Result<f64> {
    let h = model.train_hessian_theta(theta, lambda, reg, train, cap)?;
    Ok(fraction / spectral_norm_symmetric(&h, 500))
}

// ---------------------------------------------------------------------------
// Random search

/// Cross-validation over `n` proposals drawn uniformly from `[low, high]^dim`.
pub fn random_search(
    problem: &Problem,
    inner: &InnerTraining,
    low: f64,
    high: f64,
    n: usize,
    seed: u64,
) -> Result<(Vec<HyperVector>, CvResult)> {
    if !(low < high) {
        return Err(Error::config("random_search.low", "low must be below high"));
    }
    let proposals = uniform_proposals(problem.lambda_dim(), low, high, n, seed);
    let cv = cross_validate(problem, inner, &proposals, seed)?;
    Ok((proposals, cv))
}

// ---------------------------------------------------------------------------
// Surrogate comparison

fn default_threshold() -> f64 {
    0.05
}
fn default_lambda_batch() -> usize {
    crate::algorithms::DEFAULT_LAMBDA_BATCH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateCompareSpec {
    pub n_fit: usize,
    pub n_eval: usize,
    pub inner: InnerTraining,
    /// Where fit and evaluation hyperparameters are drawn from; must be global.
    pub sampler: SamplerSpec,
    pub hypernet: HyperNetFamily,
    pub phi_lr: f64,
    #[serde(default = "default_lambda_batch")]
    pub lambda_batch: usize,
    #[serde(default)]
    pub gp_grid: GpGrid,
    #[serde(default = "default_threshold")]
    pub error_threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub sd: f64,
    pub frac_below: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodErrors {
    pub method: String,
    pub predicted: Vec<f64>,
    /// `predicted − true`.
    pub errors: Vec<f64>,
    pub grad_evals: u64,
}

impl MethodErrors {
    pub fn stats(&self, threshold: f64) -> ErrorStats {
        let n = self.errors.len().max(1) as f64;
        let mean = self.errors.iter().sum::<f64>() / n;
        let var = self.errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        let below = self.errors.iter().filter(|e| e.abs() < threshold).count() as f64;
        ErrorStats { mean, sd: libm::sqrt(var), frac_below: below / n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateComparison {
    pub fit_lambdas: Vec<HyperVector>,
    pub eval_lambdas: Vec<HyperVector>,
    pub true_losses: Vec<f64>,
    /// GP, fixed-λ hypernet, sampled-λ hypernet, in that order.
    pub methods: Vec<MethodErrors>,
}

pub const METHOD_GP: &str = "gp";
pub const METHOD_FIXED: &str = "hypernet-fixed";
pub const METHOD_SAMPLED: &str = "hypernet-sampled";

/// Per-step λ counts that spend exactly `budget` gradient units in batches of `per_step`.
pub fn matched_schedule(budget: u64, per_step: usize) -> Vec<usize> {
    let per = per_step as u64;
    let mut counts = vec![per_step; (budget / per) as usize];
    if budget % per != 0 {
        counts.push((budget % per) as usize);
    }
    counts
}

/// Trains φ with Adam, drawing `counts[k]` hyperparameters at step `k`.
#[allow(clippy::too_many_arguments)]
pub fn fit_hypernet(
    problem: &Problem,
    family: HyperNetFamily,
    centre: &[f64],
    phi_lr: f64,
    data_batch: usize,
    counts: &[usize],
    draw: &mut dyn FnMut(&mut SeededRng) -> HyperVector,
    seed: u64,
) -> Result<(HyperNet, HyperNetParams, GradCounter)> {
    let hypernet =
        HyperNet::new(HyperNetSpec { family, lambda_dim: problem.lambda_dim(), theta_dim: problem.model.n_params() })?;
    let theta0 = problem.model.init_params(derive_seed(seed, 1));
    let mut phi = hypernet.init(&theta0, centre, derive_seed(seed, 2))?;
    let mut opt = AdamState::new(hypernet.n_params(), phi_lr);
    let mut stream = BatchStream::new(problem.train.len(), data_batch, derive_seed(seed, 3))?;
    let mut rng = SeededRng::new(derive_seed(seed, 5));
    let mut counter = GradCounter::default();
    for (k, &n) in counts.iter().enumerate() {
        let step = k + 1;
        let batch = stream.next_batch(&problem.train)?;
        let lambdas: Vec<HyperVector> = (0..n).map(|_| draw(&mut rng)).collect();
        let (_, grad) = phi_batch_loss_grad(problem, &hypernet, phi.as_slice(), &lambdas, &batch, &mut counter)
            .map_err(|e| e.at_step(step))?;
        opt.step(phi.as_mut_slice(), &grad).map_err(|e| e.at_step(step))?;
    }
    Ok((hypernet, phi, counter))
}

/// Fits three surrogates of `λ ↦ L_valid(θ*(λ))` under the same gradient
/// budget and scores them on held-out hyperparameters against freshly trained θ.
pub fn surrogate_comparison<P: ParallelMap>(
    problem: &Problem,
    spec: &SurrogateCompareSpec,
    par: &P,
) -> Result<SurrogateComparison> {
    spec.inner.validate()?;
    if spec.n_fit < 2 {
        return Err(Error::config("n_fit", "need at least 2 fit points"));
    }
    if spec.lambda_batch == 0 {
        return Err(Error::config("lambda_batch", "must be at least 1"));
    }
    let dim = problem.lambda_dim();
    spec.sampler.validate(dim)?;
    let centre = spec
        .sampler
        .global_mean(dim)
        .ok_or_else(|| Error::config("sampler.kind", "surrogate comparison needs a global-gaussian sampler"))?;

    let draw_n = |stream: u64, n: usize| {
        let mut rng = SeededRng::new(derive_seed(spec.seed, stream));
        (0..n).map(|_| spec.sampler.sample(&centre, &mut rng)).collect::<Vec<_>>()
    };
    let fit_lambdas = draw_n(STREAM_FIT_LAMBDAS, spec.n_fit);
    let eval_lambdas = draw_n(STREAM_EVAL_LAMBDAS, spec.n_eval);

    let trained_losses = |lambdas: &[HyperVector], stream: u64| -> Result<Vec<f64>> {
        let base = derive_seed(spec.seed, stream);
        par.map(lambdas.len(), |i| {
            let theta = train_elementary(
                problem,
                &lambdas[i],
                &spec.inner,
                derive_seed(base, i as u64),
                &mut GradCounter::default(),
            )?;
            problem.valid_loss(&theta)
        })
        .into_iter()
        .collect()
    };
    let fit_losses = trained_losses(&fit_lambdas, STREAM_FIT_TRAINING)?;
    let true_losses = trained_losses(&eval_lambdas, STREAM_EVAL_TRAINING)?;
    let budget = (spec.n_fit * spec.inner.steps) as u64;

    let gp = CentredGp::fit(&fit_lambdas, &fit_losses, &spec.gp_grid)?;
    let gp_pred = eval_lambdas.iter().map(|l| gp.predict_mean(l)).collect::<Result<Vec<_>>>()?;

    let counts = matched_schedule(budget, spec.lambda_batch);
    let mut pick_fixed = |rng: &mut SeededRng| {
        let i = (rng.next_u64() % fit_lambdas.len() as u64) as usize;
        fit_lambdas[i].clone()
    };
    let fixed = fit_hypernet(
        problem,
        spec.hypernet,
        &centre,
        spec.phi_lr,
        spec.inner.batch_size,
        &counts,
        &mut pick_fixed,
        derive_seed(spec.seed, STREAM_FIXED_ARM),
    )?;
    let mut sample = |rng: &mut SeededRng| spec.sampler.sample(&centre, rng);
    let sampled = fit_hypernet(
        problem,
        spec.hypernet,
        &centre,
        spec.phi_lr,
        spec.inner.batch_size,
        &counts,
        &mut sample,
        derive_seed(spec.seed, STREAM_SAMPLED_ARM),
    )?;

    let hyper_pred = |(net, phi, _): &(HyperNet, HyperNetParams, GradCounter)| -> Result<Vec<f64>> {
        eval_lambdas.iter().map(|l| surrogate_valid_loss(problem, net, phi.as_slice(), l, &problem.valid)).collect()
    };
    let errors = |pred: &[f64]| pred.iter().zip(&true_losses).map(|(p, t)| p - t).collect::<Vec<_>>();
    let method = |name: &str, predicted: Vec<f64>, grad_evals: u64| MethodErrors {
        method: String::from(name),
        errors: errors(&predicted),
        predicted,
        grad_evals,
    };
    let methods = vec![
        method(METHOD_GP, gp_pred, budget),
        method(METHOD_FIXED, hyper_pred(&fixed)?, fixed.2 .0),
        method(METHOD_SAMPLED, hyper_pred(&sampled)?, sampled.2 .0),
    ];
    for m in &methods {
        if m.grad_evals != budget {
            return Err(Error::config(
                "surrogate_compare",
                format!("{} spent {} of {budget} gradient units", m.method, m.grad_evals),
            ));
        }
    }
    Ok(SurrogateComparison { fit_lambdas, eval_lambdas, true_losses, methods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelSpec, Task};

    fn hv(x: f64) -> HyperVector {
        HyperVector::filled(1, x)
    }

    #[test]
    fn gp_interpolates_noise_free_data() {
        let xs = [hv(-1.0), hv(0.0), hv(1.5)];
        let ys = [0.3, -0.2, 0.9];
        let k = GpKernel { lengthscale: 0.7, signal_sd: 1.0, noise_sd: 0.0 };
        let gp = gp_fit(&xs, &ys, k).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            let (m, v) = gp.predict(x).unwrap();
            assert!((m - y).abs() < 1e-6);
            assert!(v < 1e-6);
        }
    }

    #[test]
    fn gp_reverts_to_zero_far_away() {
        let gp = gp_fit(&[hv(0.0)], &[5.0], GpKernel { lengthscale: 0.5, signal_sd: 1.0, noise_sd: 0.1 }).unwrap();
        let (m, v) = gp.predict(&[40.0]).unwrap();
        assert!(m.abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_inputs_need_jitter() {
        let xs = [hv(0.25), hv(0.25)];
        let gp = gp_fit(&xs, &[1.0, 1.0], GpKernel { lengthscale: 1.0, signal_sd: 1.0, noise_sd: 0.0 }).unwrap();
        assert!(gp.jitter > 0.0);
    }

    #[test]
    fn matched_schedule_spends_exact_budget() {
        assert_eq!(matched_schedule(20, 8), vec![8, 8, 4]);
        assert_eq!(matched_schedule(16, 8), vec![8, 8]);
        assert_eq!(matched_schedule(3, 8), vec![3]);
        assert!(matched_schedule(0, 8).is_empty());
    }

    #[test]
    fn one_step_unroll_is_minus_lr_times_mixed_term() {
        let model = Model::new(ModelSpec::linear(2, 1, Task::MeanSquaredError).without_bias()).unwrap();
        let x = DenseMatrix::new(3, 2, vec![1.0, 0.5, -0.3, 2.0, 0.7, -1.1]).unwrap();
        let y = crate::linalg::DenseVector::new(vec![0.2, -0.4, 1.0]).unwrap();
        let data = Dataset::new(x, crate::data::Targets::Regression(y)).unwrap();
        let reg = RegSpec::global();
        let theta0 = [0.4, -0.8];
        let lam = [-0.5];
        let lr = 0.05;
        let hg =
            unrolled_hypergradient(&model, &reg, &lam, &theta0, UnrollSpec { steps: 1, lr }, &data, &data, 10).unwrap();
        let g = model.train_grad_theta(&theta0, &lam, &reg, &data).unwrap();
        let theta1: Vec<f64> = theta0.iter().zip(g.iter()).map(|(t, g)| t - lr * g).collect();
        let (_, gv) = model.pred_loss_grad(&theta1, &data).unwrap();
        let m = model.train_mixed_partials(&theta0, &lam, &reg, 10).unwrap();
        let expected = -lr * (gv[0] * m.get(0, 0) + gv[1] * m.get(1, 0));
        assert!((hg[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn error_stats_by_hand() {
        let m =
            MethodErrors { method: "x".into(), predicted: vec![], errors: vec![0.01, -0.03, 0.2, -0.1], grad_evals: 0 };
        let s = m.stats(0.05);
        assert!((s.mean - 0.02).abs() < 1e-15);
        assert_eq!(s.frac_below, 0.5);
    }
}
