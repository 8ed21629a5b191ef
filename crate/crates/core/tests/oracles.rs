//! Closed-form and independent-reimplementation oracles. Dense linear algebra
//! on the oracle side goes through nalgebra, never through the crate's own
//! `linalg` module.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};

use hypertrain_core::algorithms::{cross_validate, hypergradient, InnerTraining, Problem};
use hypertrain_core::baselines::{gp_fit, gp_predict, unrolled_hypergradient, GpKernel, UnrollSpec};
use hypertrain_core::data::{make_ridge_synthetic, Dataset, SplitSpec, Targets};
use hypertrain_core::diff::{grad_check, value_and_grad, FnDiff};
use hypertrain_core::hypernets::{HyperNet, HyperNetFamily, HyperNetSpec, HyperVector};
use hypertrain_core::linalg::{DenseMatrix, DenseVector};
use hypertrain_core::models::{Model, ModelSpec, PredLoss, RegMode, RegSpec, Task, DEFAULT_HESSIAN_CAP};
use hypertrain_core::optim::OptimizerSpec;
use hypertrain_core::rng::SeededRng;

fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn targets(d: &Dataset) -> DVector<f64> {
    match d.targets() {
        Targets::Regression(y) => DVector::from_column_slice(y.as_slice()),
        Targets::Classes { .. } => panic!("regression data expected"),
    }
}

/// θ*(λ) = (XᵀX/n + e^λ I)⁻¹ Xᵀy/n.
fn ridge_theta(train: &Dataset, lambda: f64) -> DVector<f64> {
    let x = to_na(train.features());
    let n = train.len() as f64;
    let a = x.transpose() * &x / n + DMatrix::identity(x.ncols(), x.ncols()) * lambda.exp();
    let b = x.transpose() * targets(train) / n;
    a.lu().solve(&b).unwrap()
}

fn mse(data: &Dataset, theta: &DVector<f64>) -> f64 {
    let r = to_na(data.features()) * theta - targets(data);
    r.norm_squared() / data.len() as f64
}

struct Ridge {
    model: Model,
    train: Dataset,
    valid: Dataset,
}

fn ridge(seed: u64) -> Ridge {
    let data = make_ridge_synthetic(100, 10, 0.1, seed).unwrap().dataset;
    let s = SplitSpec { n_train: 50, n_valid: 50, n_test: 0, seed }.apply(&data).unwrap();
    let model = Model::new(ModelSpec::linear(10, 1, Task::MeanSquaredError).without_bias()).unwrap();
    Ridge { model, train: s.train, valid: s.valid }
}

#[test]
fn ridge_solution_zeroes_the_training_gradient() {
    let r = ridge(0);
    for lambda in [-6.0, -1.0, 2.0] {
        let theta = ridge_theta(&r.train, lambda);
        let g = r.model.train_grad_theta(theta.as_slice(), &[lambda], &RegSpec::global(), &r.train).unwrap();
        assert!(g.norm() < 1e-12, "λ={lambda}: ‖∇‖ = {}", g.norm());
    }
}

#[test]
fn noiseless_data_recovers_the_generating_weights() {
    let syn = make_ridge_synthetic(30, 5, 0.0, 3).unwrap();
    let x = to_na(syn.dataset.features());
    let w = (x.transpose() * &x).lu().solve(&(x.transpose() * targets(&syn.dataset))).unwrap();
    for (a, b) in w.iter().zip(syn.true_weights.as_slice()) {
        assert_relative_eq!(*a, *b, epsilon = 1e-10);
    }
}

#[test]
fn ridge_hessian_and_mixed_partials_match_closed_forms() {
    let r = ridge(1);
    let theta: Vec<f64> = (0..10).map(|i| 0.1 * i as f64 - 0.3).collect();
    let lambda = -0.7;
    let h = r.model.train_hessian_theta(&theta, &[lambda], &RegSpec::global(), &r.train, DEFAULT_HESSIAN_CAP).unwrap();
    let x = to_na(r.train.features());
    let want = x.transpose() * &x * (2.0 / 50.0) + DMatrix::identity(10, 10) * (2.0 * f64::exp(lambda));
    assert!((to_na(&h) - want).amax() < 1e-12);

    // Mixed partials against central differences of the θ-gradient in λ.
    let m = r.model.train_mixed_partials(&theta, &[lambda], &RegSpec::global(), DEFAULT_HESSIAN_CAP).unwrap();
    let eps = 1e-6;
    let g = |l: f64| r.model.train_grad_theta(&theta, &[l], &RegSpec::global(), &r.train).unwrap();
    let (gp, gm) = (g(lambda + eps), g(lambda - eps));
    for i in 0..10 {
        let fd = (gp.as_slice()[i] - gm.as_slice()[i]) / (2.0 * eps);
        assert_relative_eq!(m.get(i, 0), fd, max_relative = 1e-5);
    }
}

#[test]
fn per_weight_hessian_matches_finite_differences_of_the_gradient() {
    let r = ridge(2);
    let reg = RegSpec::per_weight(10);
    let theta: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
    let lambda: Vec<f64> = (0..10).map(|i| -1.0 + 0.2 * i as f64).collect();
    let h = r.model.train_hessian_theta(&theta, &lambda, &reg, &r.train, DEFAULT_HESSIAN_CAP).unwrap();
    let eps = 1e-6;
    for j in 0..10 {
        let mut tp = theta.clone();
        let mut tm = theta.clone();
        tp[j] += eps;
        tm[j] -= eps;
        let gp = r.model.train_grad_theta(&tp, &lambda, &reg, &r.train).unwrap();
        let gm = r.model.train_grad_theta(&tm, &lambda, &reg, &r.train).unwrap();
        for i in 0..10 {
            let fd = (gp.as_slice()[i] - gm.as_slice()[i]) / (2.0 * eps);
            assert!((h.get(i, j) - fd).abs() <= 1e-5 * fd.abs().max(1.0));
        }
    }
    assert_eq!(h.asymmetry(), 0.0);
}

/// Straightforward per-example reimplementation of a 2-layer ReLU network.
fn naive_mlp_logits(theta: &[f64], sizes: [usize; 3], x: &[f64]) -> Vec<f64> {
    let [i, h, o] = sizes;
    let (w1, rest) = theta.split_at(h * i);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(o * h);
    let w1 = DMatrix::from_row_slice(h, i, w1);
    let w2 = DMatrix::from_row_slice(o, h, w2);
    let hidden = (w1 * DVector::from_column_slice(x) + DVector::from_column_slice(b1)).map(|v| v.max(0.0));
    (w2 * hidden + DVector::from_column_slice(b2)).iter().copied().collect()
}

#[test]
fn mlp_forward_and_cross_entropy_match_naive_reimplementation() {
    let sizes = [4, 6, 3];
    let model = Model::new(ModelSpec::mlp(sizes.to_vec(), Task::SoftmaxCrossEntropy)).unwrap();
    let mut rng = SeededRng::new(17);
    let theta: Vec<f64> = (0..model.n_params()).map(|_| rng.normal()).collect();
    let x = DenseMatrix::from_fn(3, 4, |_, _| rng.normal());
    let labels = vec![2, 0, 1];
    let logits = model.forward(&theta, &x).unwrap();
    let mut ce = 0.0;
    for (r, &label) in labels.iter().enumerate() {
        let want = naive_mlp_logits(&theta, sizes, x.row(r));
        for (c, w) in want.iter().enumerate() {
            assert_relative_eq!(logits.get(r, c), *w, epsilon = 1e-12);
        }
        let lse = want.iter().map(|v| v.exp()).sum::<f64>().ln();
        ce += lse - want[label];
    }
    let data = Dataset::new(x, Targets::Classes { labels, n_classes: 3 }).unwrap();
    assert_relative_eq!(model.pred_loss(&theta, &data).unwrap(), ce / 3.0, epsilon = 1e-12);
}

#[test]
fn logistic_regression_gradient_matches_finite_differences() {
    let x = DenseMatrix::new(2, 2, vec![1.0, -0.5, 0.3, 2.0]).unwrap();
    let data = Dataset::new(x, Targets::Classes { labels: vec![0, 1], n_classes: 2 }).unwrap();
    let model = Model::new(ModelSpec::linear(2, 2, Task::SoftmaxCrossEntropy)).unwrap();
    let theta = [0.2, -0.1, 0.4, 0.3, 0.05, -0.2];
    let err = grad_check(&PredLoss { model: &model, batch: &data }, &theta, 1e-5).unwrap();
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn value_and_grad_is_bitwise_deterministic() {
    let r = ridge(4);
    let f = PredLoss { model: &r.model, batch: &r.train };
    let theta = vec![0.3; 10];
    let a = value_and_grad(&f, &theta).unwrap();
    let b = value_and_grad(&f, &theta).unwrap();
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert!(a.1.as_slice().iter().zip(b.1.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn gp_matches_dense_solve() {
    let xs = [-2.0, -0.5, 0.1, 1.3, 2.2];
    let ys = [0.4, -0.3, 0.2, 0.9, -0.1];
    let kernel = GpKernel { lengthscale: 0.8, signal_sd: 1.3, noise_sd: 0.05 };
    let inputs: Vec<HyperVector> = xs.iter().map(|&x| HyperVector::new(vec![x]).unwrap()).collect();
    let gp = gp_fit(&inputs, &ys, kernel).unwrap();

    let k = |a: f64, b: f64| 1.3f64.powi(2) * (-(a - b).powi(2) / (2.0 * 0.8f64.powi(2))).exp();
    let kxx = DMatrix::from_fn(5, 5, |i, j| k(xs[i], xs[j]) + if i == j { 0.05f64.powi(2) } else { 0.0 });
    let inv = kxx.try_inverse().unwrap();
    let y = DVector::from_column_slice(&ys);
    for q in [-3.0, -1.0, 0.0, 0.7, 4.0] {
        let ks = DVector::from_fn(5, |i, _| k(q, xs[i]));
        let mean = (ks.transpose() * &inv * &y)[0];
        let var = k(q, q) - (ks.transpose() * &inv * &ks)[0];
        let (m, v) = gp_predict(&gp, &[q]).unwrap();
        assert_relative_eq!(m, mean, epsilon = 1e-8);
        assert_relative_eq!(v, var, epsilon = 1e-8);
    }
}

#[test]
fn linear_hypernet_hypergradient_by_hand() {
    // θ = wλ + b, one validation point (x = 1, y = c): L = (θ − c)², dL/dλ = 2(wλ + b − c)·w.
    let model = Model::new(ModelSpec::linear(1, 1, Task::MeanSquaredError).without_bias()).unwrap();
    let one = |y: f64| {
        Dataset::new(
            DenseMatrix::new(1, 1, vec![1.0]).unwrap(),
            Targets::Regression(DenseVector::new(vec![y]).unwrap()),
        )
        .unwrap()
    };
    let c = 0.7;
    let problem = Problem::new(model, RegSpec::global(), one(0.0), one(c)).unwrap();
    let net = HyperNet::new(HyperNetSpec { family: HyperNetFamily::Linear, lambda_dim: 1, theta_dim: 1 }).unwrap();
    let (w, b, lambda) = (0.4, -0.2, 1.5);
    let g = hypergradient(&problem, &net, &[w, b], &[lambda], &problem.valid).unwrap();
    assert_relative_eq!(g[0], 2.0 * (w * lambda + b - c) * w, epsilon = 1e-14);
}

#[test]
fn hypergradient_matches_finite_differences_on_ridge() {
    let r = ridge(5);
    let problem = Problem::new(r.model, RegSpec::global(), r.train, r.valid).unwrap();
    for family in [HyperNetFamily::Linear, HyperNetFamily::Mlp { hidden: 5 }] {
        let net = HyperNet::new(HyperNetSpec { family, lambda_dim: 1, theta_dim: 10 }).unwrap();
        let mut rng = SeededRng::new(9);
        let phi: Vec<f64> = (0..net.n_params()).map(|_| 0.3 * rng.normal()).collect();
        let f = FnDiff::new(
            1,
            |l: &[f64]| problem.valid_loss(net.predict(&phi, l).unwrap().as_slice()).unwrap(),
            |l: &[f64]| hypergradient(&problem, &net, &phi, l, &problem.valid).unwrap(),
        );
        for lambda in [-2.0, 0.3, 1.7] {
            let err = grad_check(&f, &[lambda], 1e-5).unwrap();
            assert!(err <= 1e-4, "{}: λ={lambda} err {err}", family.name());
        }
    }
}

#[test]
fn cross_validation_picks_the_analytic_argmin() {
    let r = ridge(6);
    let problem = Problem::new(r.model.clone(), RegSpec::global(), r.train.clone(), r.valid.clone()).unwrap();
    // Full-batch gradient descent below 2/‖H‖ at λ = 4 (‖H‖ ≈ 2e⁴ + 4) converges to θ*(λ) for all three.
    let inner = InnerTraining { steps: 20000, batch_size: 50, optimizer: OptimizerSpec::Sgd { lr: 0.008 } };
    let proposals: Vec<HyperVector> = [-4.0, 0.0, 4.0].iter().map(|&l| HyperVector::new(vec![l]).unwrap()).collect();
    let cv = cross_validate(&problem, &inner, &proposals, 0).unwrap();
    let analytic: Vec<f64> = [-4.0, 0.0, 4.0].iter().map(|&l| mse(&r.valid, &ridge_theta(&r.train, l))).collect();
    let best = (0..3).min_by(|&a, &b| analytic[a].total_cmp(&analytic[b])).unwrap();
    assert_eq!(cv.best_index, best);
    for (got, want) in cv.valid_losses.iter().zip(&analytic) {
        assert_relative_eq!(*got, *want, max_relative = 1e-8);
    }
}

#[test]
fn unrolled_hypergradient_converges_to_the_implicit_one() {
    let r = ridge(7);
    let lambda = -1.0;
    let theta = ridge_theta(&r.train, lambda);
    let x = to_na(r.train.features());
    let h = x.transpose() * &x * (2.0 / 50.0) + DMatrix::identity(10, 10) * (2.0 * f64::exp(lambda));
    let m = &theta * (2.0 * f64::exp(lambda));
    let xv = to_na(r.valid.features());
    let g_valid = xv.transpose() * (&xv * &theta - targets(&r.valid)) * (2.0 / 50.0);
    let implicit = -(g_valid.transpose() * h.clone().lu().solve(&m).unwrap())[0];

    let alpha = 0.5 / h.symmetric_eigenvalues().amax();
    let got = unrolled_hypergradient(
        &r.model,
        &RegSpec::global(),
        &[lambda],
        theta.as_slice(),
        UnrollSpec { steps: 500, lr: alpha },
        &r.train,
        &r.valid,
        DEFAULT_HESSIAN_CAP,
    )
    .unwrap();
    assert_relative_eq!(got[0], implicit, max_relative = 1e-6);
}

#[test]
fn one_dimensional_unroll_follows_the_geometric_series() {
    // L_train = (θ − 1)² + e^λ θ² on a single point; at θ* = 1/(1 + e^λ) the
    // recurrence gives J_K = −(M/H)(1 − (1 − αH)^K) with H = 2(1 + e^λ), M = 2e^λ θ*.
    let model = Model::new(ModelSpec::linear(1, 1, Task::MeanSquaredError).without_bias()).unwrap();
    let point = |y: f64| {
        Dataset::new(
            DenseMatrix::new(1, 1, vec![1.0]).unwrap(),
            Targets::Regression(DenseVector::new(vec![y]).unwrap()),
        )
        .unwrap()
    };
    let (lambda, c, alpha) = (0.3, -0.4, 0.1);
    let e = f64::exp(lambda);
    let theta = 1.0 / (1.0 + e);
    let (h, m) = (2.0 * (1.0 + e), 2.0 * e * theta);
    let g_valid = 2.0 * (theta - c);
    for k in [1, 2, 5, 20, 200] {
        let want = g_valid * -(m / h) * (1.0 - (1.0 - alpha * h).powi(k as i32));
        let got = unrolled_hypergradient(
            &model,
            &RegSpec::global(),
            &[lambda],
            &[theta],
            UnrollSpec { steps: k, lr: alpha },
            &point(1.0),
            &point(c),
            DEFAULT_HESSIAN_CAP,
        )
        .unwrap();
        assert_relative_eq!(got[0], want, max_relative = 1e-12);
    }
}

#[test]
fn per_weight_regularizer_dimension_counts_biases() {
    let model = Model::new(ModelSpec::linear(784, 10, Task::SoftmaxCrossEntropy)).unwrap();
    assert_eq!(RegSpec::for_model(RegMode::PerWeight, &model).dimension, 7850);
}
