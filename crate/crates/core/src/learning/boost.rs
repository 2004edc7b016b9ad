//! Smooth boosting over axis-aligned decision stumps. Labels are ±1.

use serde::{Deserialize, Serialize};

use super::LearnError;

/// h(x) = polarity if x[feature] > threshold, else −polarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    pub fn predict(&self, x: &[f64]) -> i8 {
        if x[self.feature] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub stumps: Vec<Stump>,
    pub gamma: f64,
    pub theta: f64,
    /// M_t(j) after the last accepted round.
    pub weights: Vec<f64>,
    /// N_t(j) after the last accepted round.
    pub margins: Vec<f64>,
    /// Weight vectors in effect at each round, starting with the initial one.
    pub weight_history: Vec<Vec<f64>>,
    pub stopped_early: bool,
}

fn check_lengths(n_x: usize, n_y: usize, n_w: usize) -> Result<(), LearnError> {
    if n_x != n_y || n_x != n_w || n_x == 0 {
        return Err(LearnError::Length(format!("{n_x} samples, {n_y} labels, {n_w} weights")));
    }
    Ok(())
}

/// ½ Σ M̂(j) |h(x_j) − y_j| with M̂ the weights normalized to sum 1, i.e.
/// the weighted error, and whether it clears ½ − γ.
pub fn weak_learner_margin(
    h: &Stump,
    weights: &[f64],
    xs: &[Vec<f64>],
    ys: &[i8],
    gamma: f64,
) -> Result<(f64, bool), LearnError> {
    check_lengths(xs.len(), ys.len(), weights.len())?;
    let total: f64 = weights.iter().sum();
    let miss: f64 = xs.iter().zip(ys).zip(weights).map(|((x, &y), &m)| m * (h.predict(x) - y).abs() as f64).sum();
    let lhs = 0.5 * miss / total;
    Ok((lhs, lhs <= 0.5 - gamma))
}

/// Stump with the least weighted error. Thresholds sit halfway between
/// consecutive distinct values; ties go to the lower feature, then the lower
/// threshold, then positive polarity.
pub fn best_stump(xs: &[Vec<f64>], ys: &[i8], weights: &[f64]) -> Result<Stump, LearnError> {
    check_lengths(xs.len(), ys.len(), weights.len())?;
    let total: f64 = weights.iter().sum();
    let dim = xs[0].len();
    let mut best: Option<(f64, Stump)> = None;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    for f in 0..dim {
        order.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]));
        // threshold below everything: polarity +1 predicts +1 for all
        let mut err_pos: f64 = ys.iter().zip(weights).filter(|(&y, _)| y < 0).map(|(_, w)| w / total).sum();
        let lowest = xs[order[0]][f] - 1.0;
        let mut consider = |err: f64, threshold: f64| {
            for (e, polarity) in [(err, 1i8), (1.0 - err, -1i8)] {
                if best.is_none_or(|(b, _)| e < b - 1e-15) {
                    best = Some((e, Stump { feature: f, threshold, polarity }));
                }
            }
        };
        consider(err_pos, lowest);
        let mut k = 0;
        while k < order.len() {
            let v = xs[order[k]][f];
            while k < order.len() && xs[order[k]][f] == v {
                let j = order[k];
                // sample j moves to the "−1" side
                err_pos += if ys[j] > 0 { weights[j] / total } else { -weights[j] / total };
                k += 1;
            }
            if k < order.len() {
                consider(err_pos, 0.5 * (v + xs[order[k]][f]));
            }
        }
    }
    Ok(best.expect("at least one feature").1)
}

/// Default θ = γ / (2 + γ).
pub fn default_theta(gamma: f64) -> f64 {
    gamma / (2.0 + gamma)
}

/// Up to `rounds` rounds: fit the best stump under the current weights,
/// stop if it fails the margin test, otherwise update
/// N(j) += y_j h(x_j) − θ and M(j) = min(1, (1 − γ)^(N(j) / 2)).
pub fn train_smoothboost(
    xs: &[Vec<f64>],
    ys: &[i8],
    gamma: f64,
    rounds: usize,
    theta: f64,
) -> Result<StumpEnsemble, LearnError> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(LearnError::Config(format!("boosting margin must be in (0, 1/2) (got {gamma})")));
    }
    if ys.iter().any(|&y| y != 1 && y != -1) {
        return Err(LearnError::Config("boosting labels must be +1 or -1".into()));
    }
    let n = xs.len();
    check_lengths(n, ys.len(), n)?;
    let mut weights = vec![1.0; n];
    let mut margins = vec![0.0; n];
    let mut e = StumpEnsemble {
        stumps: Vec::new(),
        gamma,
        theta,
        weights: weights.clone(),
        margins: margins.clone(),
        weight_history: vec![weights.clone()],
        stopped_early: false,
    };
    for _ in 0..rounds {
        let h = best_stump(xs, ys, &weights)?;
        let (_, accept) = weak_learner_margin(&h, &weights, xs, ys, gamma)?;
        if !accept {
            e.stopped_early = true;
            break;
        }
        for j in 0..n {
            margins[j] += (ys[j] * h.predict(&xs[j])) as f64 - theta;
            weights[j] = (1.0 - gamma).powf(margins[j] / 2.0).min(1.0);
        }
        e.stumps.push(h);
        e.weight_history.push(weights.clone());
    }
    e.weights = weights;
    e.margins = margins;
    Ok(e)
}

/// sign of the mean stump vote, with sign(0) = +1.
pub fn ensemble_predict(e: &StumpEnsemble, x: &[f64]) -> Result<i8, LearnError> {
    if e.stumps.is_empty() {
        return Err(LearnError::EmptyEnsemble);
    }
    let sum: i64 = e.stumps.iter().map(|h| h.predict(x) as i64).sum();
    Ok(if sum >= 0 { 1 } else { -1 })
}
