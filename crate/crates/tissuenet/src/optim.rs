//! Optimizers (SGD with momentum, Adam with decoupled weight decay) and
//! the warmup + cosine-annealing learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Parameter;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimKind {
    SgdMomentum,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Constant,
    Cosine,
}

/// Optimizer with lazily created per-parameter state. Parameter identity is
/// positional: pass the same parameter list in the same order every step.
#[derive(Debug, Clone)]
pub enum Optimizer {
    SgdMomentum {
        momentum: f64,
        weight_decay: f64,
        velocity: Vec<Tensor>,
    },
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        weight_decay: f64,
        m: Vec<Tensor>,
        v: Vec<Tensor>,
        step: u64,
    },
}

impl Optimizer {
    pub fn sgd_momentum(momentum: f64, weight_decay: f64) -> Self {
        Optimizer::SgdMomentum { momentum, weight_decay, velocity: Vec::new() }
    }

    pub fn adam(epsilon: f64, weight_decay: f64) -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon,
            weight_decay,
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    fn ensure_state(state: &mut Vec<Tensor>, params: &[&mut Parameter]) -> Result<()> {
        if state.is_empty() {
            *state = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        } else if state.len() != params.len() {
            return Err(Error::State(format!(
                "optimizer state holds {} tensors but step got {} parameters",
                state.len(),
                params.len()
            )));
        }
        Ok(())
    }

    /// Apply one update using the gradients currently held in `params`.
    pub fn step(&mut self, params: &mut [&mut Parameter], lr: f64) -> Result<()> {
        match self {
            Optimizer::SgdMomentum { momentum, weight_decay, velocity } => {
                Self::ensure_state(velocity, params)?;
                for (p, v) in params.iter_mut().zip(velocity.iter_mut()) {
                    for i in 0..p.value.len() {
                        let g = p.grad.data()[i] + *weight_decay * p.value.data()[i];
                        let vel = *momentum * v.data()[i] + g;
                        v.data_mut()[i] = vel;
                        p.value.data_mut()[i] -= lr * vel;
                    }
                }
            }
            Optimizer::Adam { beta1, beta2, epsilon, weight_decay, m, v, step } => {
                Self::ensure_state(m, params)?;
                Self::ensure_state(v, params)?;
                *step += 1;
                let t = *step as f64;
                let bc1 = 1.0 - beta1.powf(t);
                let bc2 = 1.0 - beta2.powf(t);
                for (p, (mt, vt)) in params.iter_mut().zip(m.iter_mut().zip(v.iter_mut())) {
                    for i in 0..p.value.len() {
                        // Decoupled decay acts on the weight directly, not
                        // through the adaptive moments.
                        let w = p.value.data()[i] * (1.0 - lr * *weight_decay);
                        let g = p.grad.data()[i];
                        let m_new = *beta1 * mt.data()[i] + (1.0 - *beta1) * g;
                        let v_new = *beta2 * vt.data()[i] + (1.0 - *beta2) * g * g;
                        mt.data_mut()[i] = m_new;
                        vt.data_mut()[i] = v_new;
                        p.value.data_mut()[i] =
                            w - lr * (m_new / bc1) / ((v_new / bc2).sqrt() + *epsilon);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Learning rate at `epoch` (0-based): a linear ramp from lr0/warmup up to
/// lr0 over the warmup epochs, then the chosen schedule. Cosine annealing
/// decays as lr0·½(1 + cos(π·t)) with t running 0→1 over the remaining
/// epochs.
pub fn lr_at(
    epoch: usize,
    epochs: usize,
    warmup_epochs: usize,
    lr0: f64,
    schedule: Schedule,
) -> Result<f64> {
    if epoch >= epochs {
        return Err(Error::Domain(format!("epoch {epoch} out of range 0..{epochs}")));
    }
    if epoch < warmup_epochs {
        return Ok(lr0 * (epoch + 1) as f64 / warmup_epochs as f64);
    }
    match schedule {
        Schedule::Constant => Ok(lr0),
        Schedule::Cosine => {
            let span = (epochs - warmup_epochs) as f64;
            let t = (epoch - warmup_epochs) as f64 / span;
            Ok(lr0 * 0.5 * (1.0 + (std::f64::consts::PI * t).cos()))
        }
    }
}
