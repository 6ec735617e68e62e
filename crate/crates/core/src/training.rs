//! Score maximization over positive demonstrations with parameter
//! tightening and a conjunction bias.
//!
//! Per batch: mean soft score and its gradient, an ascent step on all gate
//! weights (Adam) and on theta, then the regularizer: every theta component
//! moves `alpha` against the sign of its score gradient and every
//! aggregation `&` weight grows by `beta` up to `w_max`. Per epoch the mean
//! validation score is recorded. Under [`StopRule::Plateau`] training stops
//! once that score has stayed within `min_delta` for `patience` epochs and
//! keeps the final model; [`StopRule::BestValidation`] stops after
//! `patience` epochs without improvement and returns the best snapshot.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::network::{theta_offsets, Features, Gradients, Model, ThetaView, Workspace};
use crate::semantics::Semantics;
use crate::trace::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    Plateau,
    BestValidation,
}

/// How theta follows the score gradient in the update step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaStep {
    /// Adam with the shared learning rate, like the gate weights.
    Adam,
    /// Plain gradient ascent with its own rate.
    Sgd { lr: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub alpha: f64,
    pub beta: f64,
    pub w_max: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub kappa: f64,
    pub seed: u64,
    pub theta_step: ThetaStep,
    /// Batches per epoch; `None` means one pass over the training split.
    pub steps_per_epoch: Option<usize>,
    /// Smallest validation change that counts as movement.
    pub min_delta: f64,
    pub stop_rule: StopRule,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            alpha: DEFAULT_ALPHA,
            beta: 1e-3,
            w_max: 5.0,
            batch_size: 32,
            patience: 10,
            max_epochs: 200,
            kappa: crate::semantics::DEFAULT_KAPPA,
            seed: 0,
            theta_step: ThetaStep::Sgd { lr: DEFAULT_THETA_LR },
            steps_per_epoch: None,
            min_delta: DEFAULT_MIN_DELTA,
            stop_rule: StopRule::Plateau,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("lr", self.lr), ("kappa", self.kappa), ("w_max", self.w_max)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [("alpha", self.alpha), ("beta", self.beta), ("min_delta", self.min_delta)];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if let ThetaStep::Sgd { lr } = self.theta_step {
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("theta lr must be non-negative, got {lr}")));
            }
        }
        if self.batch_size == 0 || self.patience == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch_size, patience and max_epochs must be at least 1".into()));
        }
        if self.steps_per_epoch == Some(0) {
            return Err(Error::Config("steps_per_epoch must be at least 1".into()));
        }
        Ok(())
    }
}

pub const DEFAULT_MIN_DELTA: f64 = 1e-3;
/// Tightening step per batch. Together with the plain-gradient theta rate
/// it fixes where theta settles relative to the edge of the data.
pub const DEFAULT_ALPHA: f64 = 1e-3;
pub const DEFAULT_THETA_LR: f64 = 0.1;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    /// One Adam ascent step on `params` along `grads`.
    pub fn ascend(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Internal(format!(
                "optimizer holds {} slots, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.step += 1;
        let b1t = 1.0 - libm::pow(ADAM_BETA1, self.step as f64);
        let b2t = 1.0 - libm::pow(ADAM_BETA2, self.step as f64);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = ADAM_BETA1 * self.m[i] + (1.0 - ADAM_BETA1) * g;
            self.v[i] = ADAM_BETA2 * self.v[i] + (1.0 - ADAM_BETA2) * g * g;
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] += lr * mh / (math::sqrt(vh) + ADAM_EPS);
        }
        Ok(())
    }
}

/// Optimizer state for a model: gate weights, then theta when theta is
/// stepped by Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizers {
    pub weights: OptimizerState,
    pub theta: OptimizerState,
}

impl Optimizers {
    pub fn for_model(model: &Model) -> Self {
        Self {
            weights: OptimizerState::new(model.structure.n_weights()),
            theta: OptimizerState::new(theta_offsets(&model.predicates).last().copied().unwrap_or(0)),
        }
    }
}

/// Mean soft score of `model` over `batch`.
pub fn objective(model: &Model, batch: &[&Features], kappa: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let sem = Semantics::soft(kappa)?;
    let mut ws = Workspace::default();
    let mut total = 0.0;
    for f in batch {
        total += model.forward_features(f, sem, &mut ws)?;
    }
    Ok(total / batch.len() as f64)
}

/// Ascent step on every gate weight and theta component.
pub fn update_step(model: &mut Model, grads: &Gradients, opt: &mut Optimizers, lr: f64, theta_step: ThetaStep) -> Result<()> {
    let mut w = model.structure.flat_weights();
    opt.weights.ascend(&mut w, &grads.weights, lr)?;
    model.structure.set_flat_weights(&w)?;
    let mut theta = model.theta();
    match theta_step {
        ThetaStep::Adam => opt.theta.ascend(&mut theta, &grads.theta, lr)?,
        ThetaStep::Sgd { lr } => {
            if theta.len() != grads.theta.len() {
                return Err(Error::Internal("theta gradient shape mismatch".into()));
            }
            for (t, g) in theta.iter_mut().zip(&grads.theta) {
                *t += lr * g;
            }
        }
    }
    clamp_theta(model, &mut theta);
    model.set_theta(&theta);
    Ok(())
}

fn clamp_theta(model: &Model, theta: &mut [f64]) {
    let offs = theta_offsets(&model.predicates);
    for (i, p) in model.predicates.iter().enumerate() {
        p.clamp_theta(&mut theta[offs[i]..offs[i + 1]]);
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Tightening and conjunction bias. `theta_grad` is the score gradient of
/// the current batch.
pub fn regularize_step(model: &mut Model, theta_grad: &[f64], alpha: f64, beta: f64, w_max: f64) {
    let mut theta = model.theta();
    for (t, g) in theta.iter_mut().zip(theta_grad) {
        *t -= alpha * sign(*g);
    }
    clamp_theta(model, &mut theta);
    model.set_theta(&theta);
    if beta == 0.0 {
        return;
    }
    let idx = model.structure.and_weight_indices();
    let mut w = model.structure.flat_weights();
    for k in idx {
        w[k] = (w[k] + beta).min(w_max);
    }
    model.structure.set_flat_weights(&w).expect("same shape");
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_obj: f64,
    pub val_obj: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stop_epoch: usize,
    pub best_val: f64,
}

impl TrainReport {
    /// Epochs run before the stopping rule fired.
    pub fn convergence_epoch(&self) -> usize {
        self.stop_epoch
    }
}

/// Early-stopping bookkeeping. `best` is the reference value: the best
/// score so far, or under the plateau rule the last value that moved.
#[derive(Debug, Clone, PartialEq)]
pub struct Stopper {
    pub rule: StopRule,
    pub patience: usize,
    pub min_delta: f64,
    pub best: f64,
    pub best_epoch: usize,
}

impl Stopper {
    pub fn new(patience: usize, min_delta: f64) -> Self {
        Self::with_rule(StopRule::BestValidation, patience, min_delta)
    }

    pub fn with_rule(rule: StopRule, patience: usize, min_delta: f64) -> Self {
        Self {
            rule,
            patience,
            min_delta,
            best: f64::NEG_INFINITY,
            best_epoch: 0,
        }
    }

    /// Records `val` for `epoch`; returns (reference moved, stop).
    pub fn observe(&mut self, epoch: usize, val: f64) -> (bool, bool) {
        let moved = self.best_epoch == 0
            || match self.rule {
                StopRule::BestValidation => val > self.best + self.min_delta,
                StopRule::Plateau => (val - self.best).abs() > self.min_delta,
            };
        if moved {
            self.best = val;
            self.best_epoch = epoch;
        }
        (moved, epoch - self.best_epoch >= self.patience)
    }
}

/// Callback invoked after every epoch; returning `false` aborts training.
pub trait EpochObserver {
    fn on_epoch(&mut self, record: &EpochRecord) -> bool;
}

impl EpochObserver for () {
    fn on_epoch(&mut self, _: &EpochRecord) -> bool {
        true
    }
}

pub fn train(dataset: &Dataset, model: Model, cfg: &TrainConfig) -> Result<(Model, TrainReport)> {
    train_observed(dataset, model, cfg, &mut ())
}

pub fn train_observed(
    dataset: &Dataset,
    mut model: Model,
    cfg: &TrainConfig,
    observer: &mut impl EpochObserver,
) -> Result<(Model, TrainReport)> {
    cfg.validate()?;
    let sem = Semantics::soft(cfg.kappa)?;
    let (train_idx, val_idx) = dataset.split(cfg.seed);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(invalid("training needs non-empty train and validation splits"));
    }
    let measure = |idx: &[usize]| -> Result<Vec<Features>> {
        idx.iter().map(|&i| model.features(&dataset.traces[i])).collect()
    };
    let train_feats = measure(&train_idx)?;
    let val_feats = measure(&val_idx)?;
    let val_refs: Vec<&Features> = val_feats.iter().collect();

    let mut opt = Optimizers::for_model(&model);
    let mut ws = Workspace::default();
    let mut rng = crate::rng::derive(cfg.seed, 0x7A11);
    let mut order: Vec<usize> = (0..train_feats.len()).collect();
    let mut cursor = order.len();
    let steps = cfg
        .steps_per_epoch
        .unwrap_or_else(|| train_feats.len().div_ceil(cfg.batch_size));
    let offs = theta_offsets(&model.predicates);

    let mut report = TrainReport::default();
    let mut stopper = Stopper::with_rule(cfg.stop_rule, cfg.patience, cfg.min_delta);
    let mut best = model.clone();
    for epoch in 1..=cfg.max_epochs {
        let mut train_sum = 0.0;
        for _ in 0..steps {
            let mut batch: Vec<&Features> = Vec::with_capacity(cfg.batch_size);
            while batch.len() < cfg.batch_size.min(train_feats.len()) {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                batch.push(&train_feats[order[cursor]]);
                cursor += 1;
            }
            let theta = model.theta();
            let view = ThetaView { flat: &theta, offsets: &offs };
            let mut grads = Gradients {
                weights: vec![0.0; model.structure.n_weights()],
                theta: vec![0.0; theta.len()],
            };
            let scale = 1.0 / batch.len() as f64;
            let mut obj = 0.0;
            for f in &batch {
                obj += model.accumulate_gradient(f, &view, sem, scale, &mut ws, &mut grads);
            }
            train_sum += obj * scale;
            update_step(&mut model, &grads, &mut opt, cfg.lr, cfg.theta_step)?;
            regularize_step(&mut model, &grads.theta, cfg.alpha, cfg.beta, cfg.w_max);
        }
        let val_obj = objective(&model, &val_refs, cfg.kappa)?;
        let record = EpochRecord {
            epoch,
            train_obj: train_sum / steps as f64,
            val_obj,
        };
        log::debug!("epoch {epoch}: train {:.6} val {:.6}", record.train_obj, val_obj);
        report.epochs.push(record);
        let (improved, stop) = stopper.observe(epoch, val_obj);
        if improved && cfg.stop_rule == StopRule::BestValidation {
            best = model.clone();
        }
        report.stop_epoch = epoch;
        if !observer.on_epoch(&record) || stop {
            break;
        }
    }
    report.best_epoch = stopper.best_epoch;
    report.best_val = stopper.best;
    if cfg.stop_rule == StopRule::Plateau {
        best = model;
    }
    Ok((best, report))
}
