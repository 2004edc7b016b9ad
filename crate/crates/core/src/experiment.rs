//! Repeated train/test runs over several seeds, reported per method with
//! mean and Bessel-corrected variance.

use std::fmt::Write as _;

use serde::Serialize;

use crate::config::{Method, TrainSection};
use crate::learning::metrics::mean_variance;
use crate::learning::{evaluate, train_bbl, train_pairwise, LearnError, LinearModel, ScoredDataset, Standardizer, TrainConfig, TrainLogRow};
use crate::rng::{Prng, RandomSource};

/// Trains one method. Pairwise models get their threshold from the
/// training class means; the logistic BBL model predicts at score 0.
pub fn train_method(
    data: &ScoredDataset,
    method: &Method,
    cfg: &TrainConfig,
) -> Result<(LinearModel, Vec<TrainLogRow>), LearnError> {
    match method {
        Method::Pairwise(loss) => {
            let (mut model, log) = train_pairwise(data, loss, cfg)?;
            model.calibrate(data);
            Ok((model, log))
        }
        Method::Bbl(bias) => train_bbl(data, bias, cfg),
    }
}

fn shuffle(idx: &mut [usize], rng: &mut Prng) {
    for i in (1..idx.len()).rev() {
        idx.swap(i, rng.rand_index(i + 1));
    }
}

/// Stratified split: each class contributes round(fraction · n) samples,
/// at least one, to the test side, and keeps at least one for training.
pub fn split(rows: &[(bool, Vec<f64>)], fraction: f64, seed: u64) -> Result<(ScoredDataset, ScoredDataset), LearnError> {
    let mut rng = Prng::new(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].0 == class).collect();
        if idx.len() < 2 {
            return Err(LearnError::Data(format!(
                "need at least 2 {} samples to split (got {})",
                if class { "hotspot" } else { "non-hotspot" },
                idx.len()
            )));
        }
        shuffle(&mut idx, &mut rng);
        let n_test = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1);
        test.extend(idx[..n_test].iter().map(|&i| rows[i].clone()));
        train.extend(idx[n_test..].iter().map(|&i| rows[i].clone()));
    }
    Ok((ScoredDataset::from_labeled(train), ScoredDataset::from_labeled(test)))
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalTable {
    pub methods: Vec<String>,
    /// (seed ID, per-method (accuracy, false alarm)) as fractions.
    pub rows: Vec<(u64, Vec<(f64, f64)>)>,
}

impl EvalTable {
    /// Per-method (acc mean, acc var, fa mean, fa var) in percent, or None
    /// with fewer than two runs.
    pub fn summary(&self) -> Option<Vec<[f64; 4]>> {
        if self.rows.len() < 2 {
            return None;
        }
        Some(
            (0..self.methods.len())
                .map(|m| {
                    let acc: Vec<f64> = self.rows.iter().map(|r| 100.0 * r.1[m].0).collect();
                    let fa: Vec<f64> = self.rows.iter().map(|r| 100.0 * r.1[m].1).collect();
                    let (am, av) = mean_variance(&acc).expect("two runs");
                    let (fm, fv) = mean_variance(&fa).expect("two runs");
                    [am, av, fm, fv]
                })
                .collect(),
        )
    }

    /// CSV with one row per seed ID, then Ave and Var rows; percentages.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("ID");
        for m in &self.methods {
            let _ = write!(s, ",{m}_acc,{m}_fa");
        }
        s.push('\n');
        for (id, vals) in &self.rows {
            let _ = write!(s, "{id}");
            for (a, f) in vals {
                let _ = write!(s, ",{:.2},{:.2}", 100.0 * a, 100.0 * f);
            }
            s.push('\n');
        }
        match self.summary() {
            Some(stats) => {
                for (label, (i, j)) in [("Ave", (0, 2)), ("Var", (1, 3))] {
                    s.push_str(label);
                    for st in &stats {
                        let _ = write!(s, ",{:.2},{:.2}", st[i], st[j]);
                    }
                    s.push('\n');
                }
            }
            None => s.push_str("# single run: variance omitted\n"),
        }
        s
    }
}

/// One row per seed: split with the seed, standardize on the training
/// side, train every method with the seed and score the test side.
pub fn run_eval(rows: &[(bool, Vec<f64>)], train: &TrainSection, methods: &[Method]) -> Result<EvalTable, LearnError> {
    let mut out = Vec::new();
    for &seed in &train.seeds {
        let (tr, te) = split(rows, train.test_fraction, seed)?;
        let all: Vec<&[f64]> = tr.positives.iter().chain(&tr.negatives).map(Vec::as_slice).collect();
        let z = Standardizer::fit(&all);
        let (tr, te) = (z.apply_all(&tr), z.apply_all(&te));
        let mut labels = vec![true; te.positives.len()];
        labels.extend(vec![false; te.negatives.len()]);
        let vals = methods
            .iter()
            .map(|m| {
                let (model, _) = train_method(&tr, m, &train.train_config(seed))?;
                let preds: Vec<bool> = te.positives.iter().chain(&te.negatives).map(|x| model.predict(x)).collect();
                evaluate(&preds, &labels)
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push((seed, vals));
    }
    Ok(EvalTable { methods: methods.iter().map(|m| m.name().to_string()).collect(), rows: out })
}
