//! First-order optimizers for θ, φ and λ updates.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Updates `params` in place from `grad`.
pub trait Optimizer {
    fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()>;
}

/// Plain gradient descent `θ ← θ − α g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdState {
    pub lr: f64,
}

impl SgdState {
    pub fn new(lr: f64) -> Self {
        Self { lr }
    }
}

impl Optimizer for SgdState {
    fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::shape("sgd_step", params.len(), grad.len()));
        }
        for (p, g) in params.iter_mut().zip(grad) {
            *p -= self.lr * g;
        }
        ensure_finite("sgd_step", params)
    }
}

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr: f64,
}

impl AdamState {
    pub fn new(len: usize, lr: f64) -> Self {
        Self::with_betas(len, lr, ADAM_BETA1, ADAM_BETA2)
    }

    pub fn with_betas(len: usize, lr: f64, beta1: f64, beta2: f64) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0, beta1, beta2, eps: ADAM_EPS, lr }
    }
}

impl Optimizer for AdamState {
    fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::shape("adam_step", params.len(), grad.len()));
        }
        if self.m.len() != params.len() {
            return Err(Error::shape("adam_step: moments", self.m.len(), params.len()));
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
        ensure_finite("adam_step", params)
    }
}

/// Serializable optimizer choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerSpec {
    Sgd { lr: f64 },
    Adam { lr: f64 },
}

impl OptimizerSpec {
    pub fn lr(&self) -> f64 {
        match self {
            OptimizerSpec::Sgd { lr } | OptimizerSpec::Adam { lr } => *lr,
        }
    }

    pub fn build(&self, len: usize) -> Box<dyn Optimizer + Send> {
        match *self {
            OptimizerSpec::Sgd { lr } => Box::new(SgdState::new(lr)),
            OptimizerSpec::Adam { lr } => Box::new(AdamState::new(len, lr)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_from_fresh_state_is_a_no_op() {
        let mut s = AdamState::new(3, 0.1);
        let mut p = [1.0, -2.0, 3.0];
        s.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, [1.0, -2.0, 3.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        // m̂ = g, v̂ = g², so the step is −α g / (|g| + ε).
        let lr = 0.01;
        let g = [3.0, -0.5, 1e-3];
        let mut p = [0.0; 3];
        AdamState::new(3, lr).step(&mut p, &g).unwrap();
        for (pi, gi) in p.iter().zip(&g) {
            let expected = -lr * gi / (gi.abs() + ADAM_EPS);
            assert!((pi - expected).abs() < 1e-15);
            assert!((pi + lr * gi.signum()).abs() < lr * 1e-4);
        }
    }

    #[test]
    fn zero_betas_give_sign_descent() {
        let mut s = AdamState::with_betas(2, 0.5, 0.0, 0.0);
        let mut p = [0.0, 0.0];
        for g in [[2.0, -7.0], [-0.1, 4.0]] {
            let before = p;
            s.step(&mut p, &g).unwrap();
            for i in 0..2 {
                assert!(((before[i] - p[i]) - 0.5 * g[i].signum()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut s = AdamState::new(2, 0.05);
            let mut p = [1.0, 1.0];
            for k in 0..50 {
                let g = [2.0 * p[0] + k as f64 * 0.01, -p[1]];
                s.step(&mut p, &g).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn sgd_by_hand() {
        let mut p = [1.0];
        SgdState::new(0.1).step(&mut p, &[2.0 * 1.0]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        let mut q = [1.0, 2.0];
        SgdState::new(0.0).step(&mut q, &[5.0, 5.0]).unwrap();
        assert_eq!(q, [1.0, 2.0]);
    }

    #[test]
    fn sgd_contracts_below_the_stability_limit() {
        // f(x) = c x², curvature 2c; stable iff α < 2 / (2c).
        let c = 3.0;
        for (lr, contracts) in [(0.3, true), (0.34, false)] {
            let mut x = [1.0];
            let mut s = SgdState::new(lr);
            for _ in 0..20 {
                let g = [2.0 * c * x[0]];
                s.step(&mut x, &g).unwrap();
            }
            assert_eq!(x[0].abs() < 1.0, contracts, "lr {lr}");
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(AdamState::new(2, 0.1).step(&mut [0.0; 2], &[1.0]).is_err());
        assert!(SgdState::new(0.1).step(&mut [0.0; 2], &[1.0]).is_err());
    }
}
