//! Hypernetworks `θ_φ(λ)` mapping hyperparameters to elementary weights.
//!
//! Three families:
//!
//! * `linear`      θ = W λ + b
//! * `factorized`  θ = U (V λ) + b, a rank-`k` bottleneck with linear activation
//! * `mlp`         θ = W₂ relu(W₁ λ + b₁) + b₂
//!
//! Besides the forward map, each family provides its Jacobian `∂θ/∂λ` and the
//! vector-Jacobian products `gᵀ ∂θ/∂λ` and `gᵀ ∂θ/∂φ`. The products never
//! materialize the `D × dim(λ)` Jacobian, which matters once `λ` has one entry
//! per elementary weight.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg::{axpy, dot, DenseMatrix, DenseVector};
use crate::rng::SeededRng;

/// Upper bound on `D·H` for the dense MLP family.
pub const MLP_PARAM_CAP: usize = 5_000_000;

/// Scale of the λ-sensitive output weights at initialization.
pub const INIT_SENSITIVITY: f64 = 1e-3;

/// Hyperparameter vector λ (log-scale regularization strengths).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperVector(DenseVector);

impl HyperVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        DenseVector::new(values).map(Self)
    }

    pub fn filled(len: usize, value: f64) -> Self {
        Self(DenseVector::filled(len, value))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0.into_vec()
    }
}

impl Deref for HyperVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for HyperVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HyperNetFamily {
    Linear,
    Factorized { bottleneck: usize },
    Mlp { hidden: usize },
}

impl HyperNetFamily {
    pub fn name(&self) -> &'static str {
        match self {
            HyperNetFamily::Linear => "linear",
            HyperNetFamily::Factorized { .. } => "factorized",
            HyperNetFamily::Mlp { .. } => "mlp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HyperNetSpec {
    pub family: HyperNetFamily,
    pub lambda_dim: usize,
    pub theta_dim: usize,
}

/// Flat hypernetwork weights φ; the layout is fixed by the [`HyperNetSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperNetParams(Vec<f64>);

impl HyperNetParams {
    pub fn from_vec(flat: Vec<f64>) -> Self {
        Self(flat)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Offsets of each block inside φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Blocks {
    /// W: D×m at 0, b: D.
    Linear { b: usize },
    /// U: D×k at 0, V: k×m, b: D.
    Factorized { k: usize, v: usize, b: usize },
    /// W1: H×m at 0, b1: H, W2: D×H, b2: D.
    Mlp { h: usize, b1: usize, w2: usize, b2: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperNet {
    spec: HyperNetSpec,
    blocks: Blocks,
    n_params: usize,
}

impl HyperNet {
    pub fn new(spec: HyperNetSpec) -> Result<Self> {
        let (m, d) = (spec.lambda_dim, spec.theta_dim);
        if m == 0 || d == 0 {
            return Err(Error::config("hypernet", "lambda_dim and theta_dim must be positive"));
        }
        let (blocks, n_params) = match spec.family {
            HyperNetFamily::Linear => (Blocks::Linear { b: d * m }, d * m + d),
            HyperNetFamily::Factorized { bottleneck: k } => {
                if k == 0 || k > m.min(d) {
                    return Err(Error::config("hypernet.bottleneck", format!("must be in 1..={}, got {k}", m.min(d))));
                }
                let v = d * k;
                let b = v + k * m;
                (Blocks::Factorized { k, v, b }, b + d)
            }
            HyperNetFamily::Mlp { hidden: h } => {
                if h == 0 {
                    return Err(Error::config("hypernet.hidden", "must be at least 1"));
                }
                if d.saturating_mul(h) > MLP_PARAM_CAP {
                    return Err(Error::config(
                        "hypernet.hidden",
                        format!("D·H = {} exceeds the dense MLP cap {MLP_PARAM_CAP}; use linear or factorized", d * h),
                    ));
                }
                let b1 = h * m;
                let w2 = b1 + h;
                let b2 = w2 + d * h;
                (Blocks::Mlp { h, b1, w2, b2 }, b2 + d)
            }
        };
        Ok(Self { spec, blocks, n_params })
    }

    pub fn spec(&self) -> &HyperNetSpec {
        &self.spec
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn check(&self, phi: &[f64], lambda: &[f64]) -> Result<()> {
        if phi.len() != self.n_params {
            return Err(Error::shape("hypernet: phi", self.n_params, phi.len()));
        }
        if lambda.len() != self.spec.lambda_dim {
            return Err(Error::shape("hypernet: lambda", self.spec.lambda_dim, lambda.len()));
        }
        Ok(())
    }

    /// Output bias is chosen so that `θ_φ(λ₀) = theta_init`; λ-sensitive
    /// output weights start at `1e-3 · N(0, 1)`. Hidden (input-side) weights of
    /// the factorized and MLP families use `N(0, 1/dim(λ))` so gradients can
    /// reach them, and MLP hidden biases centre the ReLU kinks around λ₀.
    pub fn init(&self, theta_init: &[f64], lambda0: &[f64], seed: u64) -> Result<HyperNetParams> {
        let (m, d) = (self.spec.lambda_dim, self.spec.theta_dim);
        if theta_init.len() != d {
            return Err(Error::shape("init_hypernet: theta_init", d, theta_init.len()));
        }
        if lambda0.len() != m {
            return Err(Error::shape("init_hypernet: lambda0", m, lambda0.len()));
        }
        let mut rng = SeededRng::new(seed);
        let mut phi = vec![0.0; self.n_params];
        let in_scale = 1.0 / libm::sqrt(m as f64);
        match self.blocks {
            Blocks::Linear { b } => {
                phi[..b].iter_mut().for_each(|w| *w = INIT_SENSITIVITY * rng.normal());
            }
            Blocks::Factorized { v, b, .. } => {
                phi[..v].iter_mut().for_each(|w| *w = INIT_SENSITIVITY * rng.normal());
                phi[v..b].iter_mut().for_each(|w| *w = in_scale * rng.normal());
            }
            Blocks::Mlp { h, b1, w2, b2 } => {
                phi[..b1].iter_mut().for_each(|w| *w = in_scale * rng.normal());
                for j in 0..h {
                    let centre = dot(&phi[j * m..(j + 1) * m], lambda0);
                    phi[b1 + j] = rng.normal() - centre;
                }
                phi[w2..b2].iter_mut().for_each(|w| *w = INIT_SENSITIVITY * rng.normal());
            }
        }
        // Zero output bias, then solve for it from the current prediction.
        let out_bias = self.output_bias_offset();
        let base = self.predict_raw(&phi, lambda0);
        for i in 0..d {
            phi[out_bias + i] = theta_init[i] - base[i];
        }
        Ok(HyperNetParams(phi))
    }

    fn output_bias_offset(&self) -> usize {
        match self.blocks {
            Blocks::Linear { b } => b,
            Blocks::Factorized { b, .. } => b,
            Blocks::Mlp { b2, .. } => b2,
        }
    }

    fn hidden(&self, phi: &[f64], lambda: &[f64]) -> Vec<f64> {
        let m = self.spec.lambda_dim;
        match self.blocks {
            Blocks::Linear { .. } => Vec::new(),
            Blocks::Factorized { k, v, .. } => (0..k).map(|j| dot(&phi[v + j * m..v + (j + 1) * m], lambda)).collect(),
            Blocks::Mlp { h, b1, .. } => (0..h).map(|j| dot(&phi[j * m..(j + 1) * m], lambda) + phi[b1 + j]).collect(),
        }
    }

    fn predict_raw(&self, phi: &[f64], lambda: &[f64]) -> Vec<f64> {
        let (m, d) = (self.spec.lambda_dim, self.spec.theta_dim);
        let bias = self.output_bias_offset();
        let mut theta = phi[bias..bias + d].to_vec();
        match self.blocks {
            Blocks::Linear { .. } => {
                for (i, t) in theta.iter_mut().enumerate() {
                    *t += dot(&phi[i * m..(i + 1) * m], lambda);
                }
            }
            Blocks::Factorized { k, .. } => {
                let z = self.hidden(phi, lambda);
                for (i, t) in theta.iter_mut().enumerate() {
                    *t += dot(&phi[i * k..(i + 1) * k], &z);
                }
            }
            Blocks::Mlp { h, w2, .. } => {
                let a: Vec<f64> = self.hidden(phi, lambda).into_iter().map(|p| p.max(0.0)).collect();
                for (i, t) in theta.iter_mut().enumerate() {
                    *t += dot(&phi[w2 + i * h..w2 + (i + 1) * h], &a);
                }
            }
        }
        theta
    }

    /// `θ_φ(λ)`.
    pub fn predict(&self, phi: &[f64], lambda: &[f64]) -> Result<DenseVector> {
        self.check(phi, lambda)?;
        let theta = self.predict_raw(phi, lambda);
        ensure_finite("hypernet: predict", &theta)?;
        Ok(DenseVector::from_vec_unchecked(theta))
    }

    /// Dense `∂θ_φ/∂λ` of shape `D × dim(λ)`.
    pub fn jacobian(&self, phi: &[f64], lambda: &[f64]) -> Result<DenseMatrix> {
        self.check(phi, lambda)?;
        let (m, d) = (self.spec.lambda_dim, self.spec.theta_dim);
        let jac = match self.blocks {
            Blocks::Linear { .. } => DenseMatrix::from_vec_unchecked(d, m, phi[..d * m].to_vec()),
            Blocks::Factorized { k, v, .. } => {
                DenseMatrix::from_fn(d, m, |i, j| (0..k).map(|r| phi[i * k + r] * phi[v + r * m + j]).sum())
            }
            Blocks::Mlp { h, w2, .. } => {
                let pre = self.hidden(phi, lambda);
                DenseMatrix::from_fn(d, m, |i, j| {
                    (0..h).filter(|&r| pre[r] > 0.0).map(|r| phi[w2 + i * h + r] * phi[r * m + j]).sum()
                })
            }
        };
        ensure_finite("hypernet: jacobian", jac.as_slice())?;
        Ok(jac)
    }

    /// `gᵀ ∂θ_φ/∂λ`, a vector of length `dim(λ)`.
    pub fn vjp_lambda(&self, phi: &[f64], lambda: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        self.check(phi, lambda)?;
        let (m, d) = (self.spec.lambda_dim, self.spec.theta_dim);
        if g.len() != d {
            return Err(Error::shape("hypernet: vjp cotangent", d, g.len()));
        }
        let mut out = vec![0.0; m];
        match self.blocks {
            Blocks::Linear { .. } => {
                for (i, &gi) in g.iter().enumerate() {
                    if gi != 0.0 {
                        axpy(gi, &phi[i * m..(i + 1) * m], &mut out);
                    }
                }
            }
            Blocks::Factorized { k, v, .. } => {
                let dz = self.bottleneck_cotangent(phi, g, k);
                for (r, &c) in dz.iter().enumerate() {
                    axpy(c, &phi[v + r * m..v + (r + 1) * m], &mut out);
                }
            }
            Blocks::Mlp { h, .. } => {
                let dpre = self.mlp_hidden_cotangent(phi, lambda, g);
                for (r, &c) in dpre.iter().enumerate().take(h) {
                    if c != 0.0 {
                        axpy(c, &phi[r * m..(r + 1) * m], &mut out);
                    }
                }
            }
        }
        ensure_finite("hypernet: vjp_lambda", &out)?;
        Ok(out)
    }

    /// `Uᵀ g` for the factorized family.
    fn bottleneck_cotangent(&self, phi: &[f64], g: &[f64], k: usize) -> Vec<f64> {
        let mut dz = vec![0.0; k];
        for (i, &gi) in g.iter().enumerate() {
            if gi != 0.0 {
                axpy(gi, &phi[i * k..(i + 1) * k], &mut dz);
            }
        }
        dz
    }

    /// `(W₂ᵀ g) ⊙ relu′(W₁λ + b₁)` for the MLP family.
    fn mlp_hidden_cotangent(&self, phi: &[f64], lambda: &[f64], g: &[f64]) -> Vec<f64> {
        let Blocks::Mlp { h, w2, .. } = self.blocks else { unreachable!() };
        let pre = self.hidden(phi, lambda);
        let mut da = vec![0.0; h];
        for (i, &gi) in g.iter().enumerate() {
            if gi != 0.0 {
                axpy(gi, &phi[w2 + i * h..w2 + (i + 1) * h], &mut da);
            }
        }
        for (c, p) in da.iter_mut().zip(&pre) {
            if *p <= 0.0 {
                *c = 0.0;
            }
        }
        da
    }

    /// Adds `scale · gᵀ ∂θ_φ/∂φ` into `out` (length `n_params`).
    pub fn accumulate_vjp_phi(
        &self,
        phi: &[f64],
        lambda: &[f64],
        g: &[f64],
        scale: f64,
        out: &mut [f64],
    ) -> Result<()> {
        self.check(phi, lambda)?;
        let (m, d) = (self.spec.lambda_dim, self.spec.theta_dim);
        if g.len() != d {
            return Err(Error::shape("hypernet: vjp cotangent", d, g.len()));
        }
        if out.len() != self.n_params {
            return Err(Error::shape("hypernet: vjp output", self.n_params, out.len()));
        }
        let bias = self.output_bias_offset();
        axpy(scale, g, &mut out[bias..bias + d]);
        match self.blocks {
            Blocks::Linear { .. } => {
                for (i, &gi) in g.iter().enumerate() {
                    if gi != 0.0 {
                        axpy(scale * gi, lambda, &mut out[i * m..(i + 1) * m]);
                    }
                }
            }
            Blocks::Factorized { k, v, .. } => {
                let z = self.hidden(phi, lambda);
                for (i, &gi) in g.iter().enumerate() {
                    if gi != 0.0 {
                        axpy(scale * gi, &z, &mut out[i * k..(i + 1) * k]);
                    }
                }
                let dz = self.bottleneck_cotangent(phi, g, k);
                for (r, &c) in dz.iter().enumerate() {
                    axpy(scale * c, lambda, &mut out[v + r * m..v + (r + 1) * m]);
                }
            }
            Blocks::Mlp { h, b1, w2, .. } => {
                let a: Vec<f64> = self.hidden(phi, lambda).into_iter().map(|p| p.max(0.0)).collect();
                for (i, &gi) in g.iter().enumerate() {
                    if gi != 0.0 {
                        axpy(scale * gi, &a, &mut out[w2 + i * h..w2 + (i + 1) * h]);
                    }
                }
                let dpre = self.mlp_hidden_cotangent(phi, lambda, g);
                for (r, &c) in dpre.iter().enumerate() {
                    if c != 0.0 {
                        axpy(scale * c, lambda, &mut out[r * m..(r + 1) * m]);
                        out[b1 + r] += scale * c;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn vjp_phi(&self, phi: &[f64], lambda: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_params];
        self.accumulate_vjp_phi(phi, lambda, g, 1.0, &mut out)?;
        ensure_finite("hypernet: vjp_phi", &out)?;
        Ok(out)
    }

    /// Mutable views of the raw blocks, for tests and hand-built hypernets.
    pub fn blocks_mut<'a>(&self, phi: &'a mut [f64]) -> Vec<&'a mut [f64]> {
        let mut rest = phi;
        let mut cuts = match self.blocks {
            Blocks::Linear { b } => vec![b],
            Blocks::Factorized { v, b, .. } => vec![v, b - v],
            Blocks::Mlp { b1, w2, b2, .. } => vec![b1, w2 - b1, b2 - w2],
        };
        cuts.push(self.spec.theta_dim);
        let mut out = Vec::with_capacity(cuts.len());
        for c in cuts {
            let (head, tail) = rest.split_at_mut(c);
            out.push(head);
            rest = tail;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::relative_error;

    fn spec(family: HyperNetFamily, m: usize, d: usize) -> HyperNetSpec {
        HyperNetSpec { family, lambda_dim: m, theta_dim: d }
    }

    fn all_families() -> [HyperNetFamily; 3] {
        [HyperNetFamily::Linear, HyperNetFamily::Factorized { bottleneck: 2 }, HyperNetFamily::Mlp { hidden: 6 }]
    }

    #[test]
    fn init_reproduces_theta_at_lambda0() {
        for fam in all_families() {
            let net = HyperNet::new(spec(fam, 3, 5)).unwrap();
            let theta0 = [0.3, -0.2, 1.5, 0.0, -0.9];
            let lambda0 = [-1.0, 0.5, 2.0];
            let phi = net.init(&theta0, &lambda0, 4).unwrap();
            let out = net.predict(phi.as_slice(), &lambda0).unwrap();
            for (a, b) in out.iter().zip(&theta0) {
                assert!((a - b).abs() < 1e-12, "{fam:?}");
            }
            assert_eq!(phi, net.init(&theta0, &lambda0, 4).unwrap());
        }
    }

    #[test]
    fn zero_weights_return_bias() {
        let net = HyperNet::new(spec(HyperNetFamily::Linear, 2, 3)).unwrap();
        let mut phi = vec![0.0; net.n_params()];
        net.blocks_mut(&mut phi)[1].copy_from_slice(&[1.0, 2.0, 3.0]);
        for lam in [[0.0, 0.0], [5.0, -3.0]] {
            assert_eq!(net.predict(&phi, &lam).unwrap().as_slice(), &[1.0, 2.0, 3.0]);
        }
    }

    #[test]
    fn factorized_full_rank_matches_linear() {
        let (m, d) = (2, 3);
        let lin = HyperNet::new(spec(HyperNetFamily::Linear, m, d)).unwrap();
        let fac = HyperNet::new(spec(HyperNetFamily::Factorized { bottleneck: m }, m, d)).unwrap();
        let w = [0.5, -1.0, 2.0, 0.25, 0.0, 3.0];
        let b = [0.1, 0.2, 0.3];
        let mut pl = vec![0.0; lin.n_params()];
        {
            let blocks = lin.blocks_mut(&mut pl);
            let mut it = blocks.into_iter();
            it.next().unwrap().copy_from_slice(&w);
            it.next().unwrap().copy_from_slice(&b);
        }
        let mut pf = vec![0.0; fac.n_params()];
        {
            let mut it = fac.blocks_mut(&mut pf).into_iter();
            // U = W (D×k with k = m), V = I.
            it.next().unwrap().copy_from_slice(&w);
            it.next().unwrap().copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
            it.next().unwrap().copy_from_slice(&b);
        }
        let lam = [0.7, -1.3];
        assert_eq!(lin.predict(&pl, &lam).unwrap(), fac.predict(&pf, &lam).unwrap());
    }

    #[test]
    fn dead_relu_gives_zero_jacobian() {
        let net = HyperNet::new(spec(HyperNetFamily::Mlp { hidden: 4 }, 2, 3)).unwrap();
        let mut phi: Vec<f64> = (0..net.n_params()).map(|i| (i as f64 * 0.37).sin()).collect();
        {
            let mut it = net.blocks_mut(&mut phi).into_iter();
            it.next();
            it.next().unwrap().iter_mut().for_each(|b| *b = -100.0);
        }
        let j = net.jacobian(&phi, &[0.5, 0.5]).unwrap();
        assert!(j.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for fam in all_families() {
            let net = HyperNet::new(spec(fam, 3, 4)).unwrap();
            let phi: Vec<f64> = (0..net.n_params()).map(|i| ((i * 7 % 11) as f64 - 5.0) * 0.13).collect();
            let lam = [0.31, -0.22, 0.17];
            let jac = net.jacobian(&phi, &lam).unwrap();
            let eps = 1e-6;
            for j in 0..3 {
                let mut up = lam;
                up[j] += eps;
                let mut dn = lam;
                dn[j] -= eps;
                let tu = net.predict(&phi, &up).unwrap();
                let td = net.predict(&phi, &dn).unwrap();
                for i in 0..4 {
                    let fd = (tu[i] - td[i]) / (2.0 * eps);
                    assert!(relative_error(jac.get(i, j), fd) < 1e-5, "{fam:?} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn vjps_agree_with_dense_jacobian() {
        for fam in all_families() {
            let net = HyperNet::new(spec(fam, 3, 4)).unwrap();
            let phi: Vec<f64> = (0..net.n_params()).map(|i| ((i * 5 % 13) as f64 - 6.0) * 0.1).collect();
            let lam = [0.4, 0.1, -0.3];
            let g = [1.0, -0.5, 0.25, 2.0];
            let jac = net.jacobian(&phi, &lam).unwrap();
            let dense = crate::linalg::matvec_transposed(&jac, &g).unwrap();
            let vjp = net.vjp_lambda(&phi, &lam, &g).unwrap();
            for (a, b) in dense.iter().zip(&vjp) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(HyperNet::new(spec(HyperNetFamily::Factorized { bottleneck: 4 }, 3, 10)).is_err());
        assert!(HyperNet::new(spec(HyperNetFamily::Factorized { bottleneck: 0 }, 3, 10)).is_err());
        assert!(HyperNet::new(spec(HyperNetFamily::Mlp { hidden: 0 }, 3, 10)).is_err());
        assert!(HyperNet::new(spec(HyperNetFamily::Mlp { hidden: 1000 }, 1, 7850)).is_err());
        assert!(HyperNet::new(spec(HyperNetFamily::Mlp { hidden: 100 }, 7850, 7850)).is_ok());
    }
}
