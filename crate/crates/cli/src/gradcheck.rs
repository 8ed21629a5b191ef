//! Finite-difference audit of every analytic gradient in the core crate.
//!
//! Each case is a scalar function with a hand-written gradient; it is checked
//! at `points` seeded random inputs. Inputs that put a ReLU pre-activation
//! within [`KINK_MARGIN`] of zero are redrawn, since central differences are
//! meaningless across a kink.
//!
//! Points are drawn at init-like scale so every loss is O(1). With the `1e-8`
//! denominator floor, a coordinate whose gradient is below `1e-8` needs an
//! absolute accuracy of about `1e-12`, while central-difference roundoff is
//! about `1e-16·|f| / eps`. That is why `eps` is `1e-4` and not smaller.

use serde::Serialize;

use hypertrain_core::algorithms::{hypergradient, phi_loss_grad, surrogate_valid_loss, Problem};
use hypertrain_core::data::{Dataset, Targets};
use hypertrain_core::diff::{grad_check, FnDiff};
use hypertrain_core::hypernets::{HyperNet, HyperNetFamily, HyperNetSpec};
use hypertrain_core::linalg::{DenseMatrix, DenseVector};
use hypertrain_core::models::{Model, ModelSpec, PredLoss, RegMode, RegSpec, Task, TrainLoss};
use hypertrain_core::rng::{derive_seed, SeededRng};
use hypertrain_core::{Error, Result};

pub const DEFAULT_POINTS: usize = 20;
pub const DEFAULT_EPS: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-4;
pub const KINK_MARGIN: f64 = 1e-2;
const THETA_SCALE: f64 = 0.5;
const LAMBDA_MEAN: f64 = -1.0;
const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub points: usize,
    pub redraws: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub seed: u64,
    pub eps: f64,
    pub tolerance: f64,
    pub max_rel_error: f64,
    pub passed: bool,
    pub cases: Vec<CaseResult>,
}

struct Elementary {
    name: &'static str,
    model: Model,
    data: Dataset,
}

fn elementary_models(seed: u64) -> Vec<Elementary> {
    let mut rng = SeededRng::new(derive_seed(seed, 100));
    let n = 8;
    let x = DenseMatrix::from_fn(n, 6, |_, _| rng.normal());
    let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let classes = Dataset::new(x.clone(), Targets::Classes { labels, n_classes: 3 }).unwrap();
    let regression = Dataset::new(x, Targets::Regression(DenseVector::new(y).unwrap())).unwrap();
    let model = |spec| Model::new(spec).unwrap();
    vec![
        Elementary {
            name: "linear-softmax",
            model: model(ModelSpec::linear(6, 3, Task::SoftmaxCrossEntropy)),
            data: classes.clone(),
        },
        Elementary {
            name: "mlp-softmax",
            model: model(ModelSpec::mlp(vec![6, 5, 3], Task::SoftmaxCrossEntropy)),
            data: classes,
        },
        Elementary {
            name: "linear-mse",
            model: model(ModelSpec::linear(6, 1, Task::MeanSquaredError)),
            data: regression.clone(),
        },
        Elementary {
            name: "mlp-mse",
            model: model(ModelSpec::mlp(vec![6, 5, 1], Task::MeanSquaredError)),
            data: regression,
        },
    ]
}

/// Smallest |pre-activation| over the hidden ReLU units of `model` on `x`.
fn model_kink_distance(model: &Model, theta: &[f64], x: &DenseMatrix) -> f64 {
    let layout = model.layout();
    let mut best = f64::INFINITY;
    for r in 0..x.rows() {
        let mut h = x.row(r).to_vec();
        for block in &layout[..layout.len() - 1] {
            let mut z = vec![0.0; block.rows];
            for (o, zo) in z.iter_mut().enumerate() {
                let w = &theta[block.weight_offset + o * block.cols..block.weight_offset + (o + 1) * block.cols];
                *zo =
                    w.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() + block.bias_offset.map_or(0.0, |b| theta[b + o]);
            }
            best = z.iter().fold(best, |m, v| m.min(v.abs()));
            h = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    best
}

/// Smallest |pre-activation| of the hidden layer of an MLP hypernet.
fn hypernet_kink_distance(net: &HyperNet, phi: &[f64], lambda: &[f64]) -> f64 {
    let HyperNetFamily::Mlp { hidden } = net.spec().family else {
        return f64::INFINITY;
    };
    let mut copy = phi.to_vec();
    let blocks = net.blocks_mut(&mut copy);
    let (w1, b1) = (&blocks[0], &blocks[1]);
    let m = lambda.len();
    (0..hidden)
        .map(|j| (w1[j * m..(j + 1) * m].iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>() + b1[j]).abs())
        .fold(f64::INFINITY, f64::min)
}

fn normal_vec(rng: &mut SeededRng, n: usize, scale: f64, shift: f64) -> Vec<f64> {
    (0..n).map(|_| shift + scale * rng.normal()).collect()
}

/// Draws points until `accept` holds, then records the check at that point.
struct CaseRunner {
    eps: f64,
    points: usize,
    results: Vec<CaseResult>,
}

impl CaseRunner {
    fn case<P>(
        &mut self,
        name: String,
        seed: u64,
        mut draw: impl FnMut(&mut SeededRng) -> P,
        kink: impl Fn(&P) -> f64,
        check: impl Fn(&P, f64) -> Result<f64>,
    ) -> Result<()> {
        let mut rng = SeededRng::new(seed);
        let mut worst: f64 = 0.0;
        let mut redraws = 0;
        for _ in 0..self.points {
            let mut p = draw(&mut rng);
            while kink(&p) < KINK_MARGIN {
                redraws += 1;
                if redraws > MAX_REDRAWS * self.points {
                    return Err(Error::NonFinite { op: "gradcheck: no kink-free point found" });
                }
                p = draw(&mut rng);
            }
            worst = worst.max(check(&p, self.eps)?);
        }
        self.results.push(CaseResult { name, points: self.points, redraws, max_rel_error: worst });
        Ok(())
    }
}

/// Runs every case; `passed` is true when all errors are within [`TOLERANCE`].
pub fn run_suite(seed: u64, points: usize, eps: f64) -> Result<GradcheckReport> {
    let mut runner = CaseRunner { eps, points, results: Vec::new() };
    for (mi, el) in elementary_models(seed).into_iter().enumerate() {
        let d = el.model.n_params();
        let x = el.data.features().clone();
        let base = derive_seed(seed, mi as u64);
        let model = &el.model;
        let data = &el.data;

        runner.case(
            format!("{}/pred", el.name),
            derive_seed(base, 1),
            |rng| normal_vec(rng, d, THETA_SCALE, 0.0),
            |t| model_kink_distance(model, t, &x),
            |t, eps| grad_check(&PredLoss { model, batch: data }, t, eps),
        )?;

        for mode in [RegMode::Global, RegMode::PerWeight] {
            let reg = RegSpec::for_model(mode, model);
            let m = reg.dimension;
            let tag = match mode {
                RegMode::Global => "global",
                RegMode::PerWeight => "per-weight",
            };
            runner.case(
                format!("{}/train-{tag}", el.name),
                derive_seed(base, 2 + mode as u64),
                |rng| (normal_vec(rng, d, THETA_SCALE, 0.0), normal_vec(rng, m, 0.5, LAMBDA_MEAN)),
                |(t, _)| model_kink_distance(model, t, &x),
                |(t, lam), eps| grad_check(&TrainLoss { model, lambda: lam, reg, batch: data }, t, eps),
            )?;

            let problem = Problem::new(model.clone(), reg, data.clone(), data.clone())?;
            let families = [
                HyperNetFamily::Linear,
                HyperNetFamily::Factorized { bottleneck: m.min(2) },
                HyperNetFamily::Mlp { hidden: 4 },
            ];
            for (fi, family) in families.into_iter().enumerate() {
                let net = HyperNet::new(HyperNetSpec { family, lambda_dim: m, theta_dim: d })?;
                let np = net.n_params();
                // Init-like scale keeps θ and the loss O(1), so roundoff stays small.
                let scale = 0.5 / (m as f64).sqrt();
                let draw =
                    |rng: &mut SeededRng| (normal_vec(rng, np, scale, 0.0), normal_vec(rng, m, 0.5, LAMBDA_MEAN));
                let kink = |(phi, lam): &(Vec<f64>, Vec<f64>)| {
                    let theta = net.predict(phi, lam).map(|t| model_kink_distance(model, &t, &x)).unwrap_or(0.0);
                    theta.min(hypernet_kink_distance(&net, phi, lam))
                };
                let p = &problem;
                let n = &net;
                runner.case(
                    format!("{}/{}/{}/phi", el.name, family.name(), tag),
                    derive_seed(base, 10 + 3 * mode as u64 + fi as u64),
                    draw,
                    kink,
                    |(phi, lam), eps| {
                        let f = FnDiff::new(
                            np,
                            |ph: &[f64]| {
                                let theta = n.predict(ph, lam).unwrap();
                                model.train_loss(&theta, lam, &reg, data).unwrap()
                            },
                            |ph: &[f64]| phi_loss_grad(p, n, ph, lam, data).unwrap().1,
                        );
                        grad_check(&f, phi, eps)
                    },
                )?;
                runner.case(
                    format!("{}/{}/{}/lambda", el.name, family.name(), tag),
                    derive_seed(base, 30 + 3 * mode as u64 + fi as u64),
                    draw,
                    kink,
                    |(phi, lam), eps| {
                        let f = FnDiff::new(
                            m,
                            |l: &[f64]| surrogate_valid_loss(p, n, phi, l, data).unwrap(),
                            |l: &[f64]| hypergradient(p, n, phi, l, data).unwrap(),
                        );
                        grad_check(&f, lam, eps)
                    },
                )?;
            }
        }
    }
    let max_rel_error = runner.results.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    Ok(GradcheckReport {
        seed,
        eps,
        tolerance: TOLERANCE,
        max_rel_error,
        passed: max_rel_error <= TOLERANCE,
        cases: runner.results,
    })
}
