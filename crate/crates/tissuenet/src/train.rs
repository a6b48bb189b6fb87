//! The training loop: seeded minibatch shuffling, forward/backward,
//! optimizer step, learning-rate schedule, per-epoch logging, and
//! best-test-accuracy checkpoint selection.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::init::{SeedExt, SeededRng};
use crate::nn::loss::{argmax_rows, cross_entropy};
use crate::nn::Model;
use crate::optim::{lr_at, OptimKind, Optimizer, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimKind,
    pub lr0: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub adam_epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_epochs: usize,
    pub schedule: Schedule,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimKind::SgdMomentum,
            lr0: 0.1,
            momentum: 0.9,
            weight_decay: 1e-4,
            adam_epsilon: 0.01,
            batch_size: 128,
            epochs: 30,
            warmup_epochs: 10,
            schedule: Schedule::Cosine,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr0 <= 0.0 {
            return Err(Error::Config(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0,1), got {}", self.momentum)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.warmup_epochs > self.epochs {
            return Err(Error::Config(format!(
                "warmup_epochs {} exceeds epochs {}",
                self.warmup_epochs, self.epochs
            )));
        }
        Ok(())
    }

    fn optimizer(&self) -> Optimizer {
        match self.optimizer {
            OptimKind::SgdMomentum => Optimizer::sgd_momentum(self.momentum, self.weight_decay),
            OptimKind::Adam => Optimizer::adam(self.adam_epsilon, self.weight_decay),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub wall_secs: f64,
}

/// Complete record of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunLog {
    pub seed: u64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_test_acc: f64,
}

impl RunLog {
    /// Comma-separated epoch log. Wall time is the only non-deterministic
    /// column; everything else replays bit-identically from the seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,lr,train_loss,train_acc,test_acc,wall_secs\n");
        for e in &self.epochs {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.4},{:.4},{:.3}\n",
                e.epoch, e.lr, e.train_loss, e.train_acc, e.test_acc, e.wall_secs
            ));
        }
        out
    }
}

/// Result of `train`: the log plus the weights snapshot with the best test
/// accuracy (ties keep the earliest epoch).
pub struct TrainOutcome {
    pub log: RunLog,
    pub best_model: Model,
}

fn fisher_yates(n: usize, rng: &mut SeededRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    order
}

/// Train `model` on `train_ds`, evaluating on `test_ds` after every epoch.
pub fn train(
    model: &mut Model,
    train_ds: &Dataset,
    test_ds: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_ds.is_empty() || test_ds.is_empty() {
        return Err(Error::Config("datasets must be non-empty".into()));
    }
    let mut rng = SeededRng::seed(cfg.seed);
    let mut opt = cfg.optimizer();
    let n = train_ds.len();
    let mut log = RunLog { seed: cfg.seed, ..Default::default() };
    let mut best_model = model.clone();
    let mut best = f64::NEG_INFINITY;

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let lr = lr_at(epoch, cfg.epochs, cfg.warmup_epochs, cfg.lr0, cfg.schedule)?;
        let order = fisher_yates(n, &mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        let mut start = 0;
        while start < n {
            let (images, labels) = train_ds.batch(&order, start, cfg.batch_size)?;
            let logits = model.forward_diagnose(&images, epoch)?;
            let (loss, grad) = cross_entropy(&logits, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite { epoch, layer: "loss".into() });
            }
            loss_sum += loss * labels.len() as f64;
            correct += argmax_rows(&logits)
                .iter()
                .zip(&labels)
                .filter(|(pred, label)| pred == label)
                .count();
            model.zero_grad();
            model.backward(&grad)?;
            let mut params = model.params_mut();
            opt.step(&mut params, lr)?;
            start += cfg.batch_size;
        }
        let test_acc = evaluate(model, test_ds)?;
        if test_acc > best {
            best = test_acc;
            best_model = model.clone();
            log.best_epoch = epoch;
            log.best_test_acc = test_acc;
        }
        log.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / n as f64,
            train_acc: 100.0 * correct as f64 / n as f64,
            test_acc,
            wall_secs: started.elapsed().as_secs_f64(),
        });
    }
    Ok(TrainOutcome { log, best_model })
}

/// Top-1 accuracy in percent; argmax ties resolve to the lowest index.
pub fn evaluate(model: &mut Model, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty dataset".into()));
    }
    let order: Vec<usize> = (0..ds.len()).collect();
    let mut correct = 0usize;
    let mut start = 0;
    while start < ds.len() {
        let (images, labels) = ds.batch(&order, start, 256)?;
        let logits = model.forward(&images)?;
        correct += argmax_rows(&logits)
            .iter()
            .zip(&labels)
            .filter(|(pred, label)| pred == label)
            .count();
        start += 256;
    }
    Ok(100.0 * correct as f64 / ds.len() as f64)
}
