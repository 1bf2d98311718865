//! First-order optimizers, selected by name.
//!
//! Optimizers work on `f64` working copies of a parameter block plus a
//! caller-owned state slice of `state_width() × len` values.

use std::fmt::Debug;

use crate::registry::Registry;

#[derive(Clone, Copy, Debug)]
pub struct OptimizerOptions {
    pub learning_rate: f64,
}

pub trait Optimizer: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// State values kept per parameter.
    fn state_width(&self) -> usize;

    /// One descent step on `params` given the loss gradient `grad`. `step`
    /// counts updates of this block, starting at 1.
    fn step(&self, params: &mut [f64], grad: &[f64], state: &mut [f64], step: u64);
}

#[derive(Debug)]
pub struct Sgd {
    lr: f64,
}

impl Optimizer for Sgd {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn state_width(&self) -> usize {
        0
    }

    fn step(&self, params: &mut [f64], grad: &[f64], _state: &mut [f64], _step: u64) {
        for (p, g) in params.iter_mut().zip(grad) {
            let delta = self.lr * g;
            if delta != 0.0 {
                *p -= delta;
            }
        }
    }
}

#[derive(Debug)]
pub struct Adagrad {
    lr: f64,
    eps: f64,
}

impl Optimizer for Adagrad {
    fn name(&self) -> &'static str {
        "adagrad"
    }

    fn state_width(&self) -> usize {
        1
    }

    fn step(&self, params: &mut [f64], grad: &[f64], state: &mut [f64], _step: u64) {
        for ((p, g), acc) in params.iter_mut().zip(grad).zip(state.iter_mut()) {
            *acc += g * g;
            let delta = self.lr * g / (acc.sqrt() + self.eps);
            if delta != 0.0 {
                *p -= delta;
            }
        }
    }
}

#[derive(Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Optimizer for Adam {
    fn name(&self) -> &'static str {
        "adam"
    }

    fn state_width(&self) -> usize {
        2
    }

    fn step(&self, params: &mut [f64], grad: &[f64], state: &mut [f64], step: u64) {
        let n = params.len();
        let (m, v) = state.split_at_mut(n);
        let t = step.max(1) as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..n {
            let g = grad[i];
            m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
            v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
            let delta = self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            if delta != 0.0 {
                params[i] -= delta;
            }
        }
    }
}

pub fn optimizer_registry() -> Registry<dyn Optimizer, OptimizerOptions> {
    let mut reg: Registry<dyn Optimizer, OptimizerOptions> = Registry::new("optimizer");
    reg.register("sgd", |o| Box::new(Sgd { lr: o.learning_rate }))
        .register("adagrad", |o| {
            Box::new(Adagrad {
                lr: o.learning_rate,
                eps: 1e-10,
            })
        })
        .register("adam", |o| {
            Box::new(Adam {
                lr: o.learning_rate,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
            })
        });
    reg
}

/// Optimizer state for a block of `rows × width` parameters updated row by
/// row, with a per-row step counter.
#[derive(Clone, Debug)]
pub struct RowState {
    width: usize,
    state_width: usize,
    values: Vec<f64>,
    steps: Vec<u64>,
}

impl RowState {
    pub fn new(rows: usize, width: usize, state_width: usize) -> Self {
        Self {
            width,
            state_width,
            values: vec![0.0; rows * width * state_width],
            steps: vec![0; rows],
        }
    }

    /// Applies `grad` to the `f32` row `row` of the block.
    pub fn update_f32(&mut self, opt: &dyn Optimizer, row: usize, params: &mut [f32], grad: &[f64]) {
        let mut work: Vec<f64> = params.iter().map(|&p| f64::from(p)).collect();
        self.update_f64(opt, row, &mut work, grad);
        for (p, w) in params.iter_mut().zip(&work) {
            *p = *w as f32;
        }
    }

    pub fn update_f64(&mut self, opt: &dyn Optimizer, row: usize, params: &mut [f64], grad: &[f64]) {
        let span = self.width * self.state_width;
        self.steps[row] += 1;
        let state = &mut self.values[row * span..(row + 1) * span];
        opt.step(params, grad, state, self.steps[row]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make(name: &str, lr: f64) -> Box<dyn Optimizer> {
        optimizer_registry().create(name, &OptimizerOptions { learning_rate: lr }).unwrap()
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        for name in ["sgd", "adagrad", "adam"] {
            let opt = make(name, 0.0);
            let mut state = RowState::new(1, 3, opt.state_width());
            let mut p = [0.1f32, -0.0, 3.5];
            let before = p.map(f32::to_bits);
            state.update_f32(opt.as_ref(), 0, &mut p, &[1.0, -2.0, 0.5]);
            assert_eq!(p.map(f32::to_bits), before, "{name}");
        }
    }

    #[test]
    fn steps_descend_on_a_quadratic() {
        for name in ["sgd", "adagrad", "adam"] {
            let opt = make(name, 0.3);
            let mut state = RowState::new(1, 1, opt.state_width());
            let mut x = [3.0f64];
            for _ in 0..200 {
                let g = [2.0 * x[0]];
                state.update_f64(opt.as_ref(), 0, &mut x, &g);
            }
            assert!(x[0].abs() < 0.5, "{name}: {}", x[0]);
        }
    }

    #[test]
    fn adagrad_first_step_has_unit_magnitude() {
        let opt = make("adagrad", 0.5);
        let mut state = RowState::new(1, 2, 1);
        let mut x = [1.0, 1.0];
        state.update_f64(opt.as_ref(), 0, &mut x, &[4.0, -0.01]);
        assert!((x[0] - 0.5).abs() < 1e-9 && (x[1] - 1.5).abs() < 1e-6);
    }
}
