//! Pairwise AUC training and batch-biased logistic training.

use serde::{Deserialize, Serialize};

use super::auc::auc_fast;
use super::loss::{sigmoid, softplus, Surrogate};
use super::{LearnError, LinearModel, ScoredDataset};
use crate::rng::{Prng, RandomSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub decay: f64,
    pub batch: usize,
    pub decay_interval: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Log a row every this many iterations (0: only the last one).
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            decay: 0.65,
            batch: 32,
            decay_interval: 2000,
            iterations: 10_000,
            seed: 1,
            log_every: 500,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(LearnError::Config(format!("learning_rate must be >= 0 (got {})", self.learning_rate)));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(LearnError::Config(format!("decay must be in (0, 1] (got {})", self.decay)));
        }
        if self.batch < 2 || !self.batch.is_multiple_of(2) {
            return Err(LearnError::Config(format!("batch must be even and >= 2 (got {})", self.batch)));
        }
        if self.decay_interval == 0 {
            return Err(LearnError::Config("decay_interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainLogRow {
    pub iter: usize,
    pub loss: f64,
    pub auc: f64,
    pub lr: f64,
}

/// Mean surrogate over all between-class pairs.
pub fn pairwise_loss(model: &LinearModel, loss: &Surrogate, data: &ScoredDataset) -> Result<f64, LearnError> {
    data.check()?;
    let pos: Vec<f64> = data.positives.iter().map(|x| model.score(x)).collect();
    let neg: Vec<f64> = data.negatives.iter().map(|x| model.score(x)).collect();
    Ok(pairwise_loss_scores(&pos, &neg, loss))
}

fn pairwise_loss_scores(pos: &[f64], neg: &[f64], loss: &Surrogate) -> f64 {
    let total: f64 = pos.iter().map(|p| neg.iter().map(|n| loss.value(p - n)).sum::<f64>()).sum();
    total / (pos.len() * neg.len()) as f64
}

fn log_row(model: &LinearModel, loss: &Surrogate, data: &ScoredDataset, iter: usize, lr: f64) -> TrainLogRow {
    let pos: Vec<f64> = data.positives.iter().map(|x| model.score(x)).collect();
    let neg: Vec<f64> = data.negatives.iter().map(|x| model.score(x)).collect();
    TrainLogRow {
        iter,
        loss: pairwise_loss_scores(&pos, &neg, loss),
        auc: auc_fast(&pos, &neg).expect("classes checked"),
        lr,
    }
}

/// Gradient of Φ(f(x⁺) − f(x⁻)) with respect to the weights. The bias
/// cancels in the difference.
pub fn pair_gradient(model: &LinearModel, loss: &Surrogate, xp: &[f64], xn: &[f64]) -> Vec<f64> {
    let g = loss.grad(model.score(xp) - model.score(xn));
    xp.iter().zip(xn).map(|(a, b)| g * (a - b)).collect()
}

/// Stochastic pairwise training from a zero model. Each iteration draws a
/// batch of m/2 positives and m/2 negatives, takes one random between-class
/// pair from it and steps along the negative gradient. The rate shrinks by
/// `decay` every `decay_interval` iterations.
pub fn train_pairwise(
    data: &ScoredDataset,
    loss: &Surrogate,
    cfg: &TrainConfig,
) -> Result<(LinearModel, Vec<TrainLogRow>), LearnError> {
    data.check()?;
    cfg.validate()?;
    loss.validate()?;
    let mut rng = Prng::new(cfg.seed);
    let mut model = LinearModel::zeros(data.dim());
    let mut lr = cfg.learning_rate;
    let mut log = Vec::new();
    let half = cfg.batch / 2;
    let mut batch_pos = vec![0usize; half];
    let mut batch_neg = vec![0usize; half];
    for t in 1..=cfg.iterations {
        for slot in batch_pos.iter_mut() {
            *slot = rng.rand_index(data.positives.len());
        }
        for slot in batch_neg.iter_mut() {
            *slot = rng.rand_index(data.negatives.len());
        }
        let xp = &data.positives[batch_pos[rng.rand_index(half)]];
        let xn = &data.negatives[batch_neg[rng.rand_index(half)]];
        let g = loss.grad(model.score(xp) - model.score(xn));
        if g != 0.0 && lr != 0.0 {
            for ((w, a), b) in model.weights.iter_mut().zip(xp).zip(xn) {
                *w -= lr * g * (a - b);
            }
        }
        if t % cfg.decay_interval == 0 {
            lr *= cfg.decay;
        }
        if (cfg.log_every > 0 && t % cfg.log_every == 0) || t == cfg.iterations {
            log.push(log_row(&model, loss, data, t, lr));
        }
    }
    Ok((model, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasConfig {
    pub eps_max: f64,
    pub scale: f64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        Self { eps_max: 0.3, scale: std::f64::consts::LN_2 }
    }
}

impl BiasConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        if !(self.eps_max > 0.0 && self.eps_max < 0.5) || !(self.scale > 0.0) {
            return Err(LearnError::Config(format!(
                "need 0 < eps_max < 0.5 and scale > 0 (got {}, {})",
                self.eps_max, self.scale
            )));
        }
        Ok(())
    }
}

/// Relaxed non-hotspot label [1 − ε, ε] with ε = ε_max (1 − e^(−l / l₀)).
pub fn bbl_bias(avg_loss: f64, cfg: &BiasConfig) -> Result<[f64; 2], LearnError> {
    cfg.validate()?;
    if !(avg_loss >= 0.0) {
        return Err(LearnError::Config(format!("average loss must be >= 0 (got {avg_loss})")));
    }
    let eps = cfg.eps_max * -(-avg_loss / cfg.scale).exp_m1();
    Ok([1.0 - eps, eps])
}

/// Logistic regression trained on balanced batches where each batch's
/// non-hotspot targets are relaxed from 0 to ε, ε set from the batch's
/// current non-hotspot cross-entropy.
pub fn train_bbl(
    data: &ScoredDataset,
    bias: &BiasConfig,
    cfg: &TrainConfig,
) -> Result<(LinearModel, Vec<TrainLogRow>), LearnError> {
    data.check()?;
    cfg.validate()?;
    bias.validate()?;
    let mut rng = Prng::new(cfg.seed);
    let dim = data.dim();
    let mut model = LinearModel::zeros(dim);
    let mut lr = cfg.learning_rate;
    let mut log = Vec::new();
    let half = cfg.batch / 2;
    let mut grad = vec![0.0; dim];
    for t in 1..=cfg.iterations {
        let pos: Vec<&Vec<f64>> = (0..half).map(|_| &data.positives[rng.rand_index(data.positives.len())]).collect();
        let neg: Vec<&Vec<f64>> = (0..half).map(|_| &data.negatives[rng.rand_index(data.negatives.len())]).collect();
        let neg_scores: Vec<f64> = neg.iter().map(|x| model.score(x)).collect();
        // cross-entropy of the non-hotspots against the hard label 0
        let l = neg_scores.iter().map(|&s| softplus(s)).sum::<f64>() / half as f64;
        let [_, eps] = bbl_bias(l, bias)?;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_b = 0.0;
        let targets = pos.iter().map(|x| (*x, model.score(x), 1.0)).chain(neg.iter().zip(&neg_scores).map(|(x, &s)| (*x, s, eps)));
        for (x, s, target) in targets {
            let e = sigmoid(s) - target;
            for (g, v) in grad.iter_mut().zip(x.iter()) {
                *g += e * v;
            }
            grad_b += e;
        }
        let m = cfg.batch as f64;
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= lr * g / m;
        }
        model.bias -= lr * grad_b / m;
        if t % cfg.decay_interval == 0 {
            lr *= cfg.decay;
        }
        if (cfg.log_every > 0 && t % cfg.log_every == 0) || t == cfg.iterations {
            let pos_s: Vec<f64> = data.positives.iter().map(|x| model.score(x)).collect();
            let neg_s: Vec<f64> = data.negatives.iter().map(|x| model.score(x)).collect();
            let ce = (pos_s.iter().map(|&s| softplus(-s)).sum::<f64>() + neg_s.iter().map(|&s| softplus(s)).sum::<f64>())
                / data.len() as f64;
            log.push(TrainLogRow { iter: t, loss: ce, auc: auc_fast(&pos_s, &neg_s)?, lr });
        }
    }
    Ok((model, log))
}
