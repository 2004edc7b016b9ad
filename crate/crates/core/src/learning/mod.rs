//! Ranking losses, pairwise AUC training, batch-biased labels, smooth
//! boosting and detection metrics.

pub mod auc;
pub mod boost;
pub mod loss;
pub mod metrics;
pub mod train;

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use auc::{auc_bruteforce, auc_fast};
pub use boost::{ensemble_predict, train_smoothboost, weak_learner_margin, Stump, StumpEnsemble};
pub use loss::Surrogate;
pub use metrics::{evaluate, variance_report, VarianceReport};
pub use train::{bbl_bias, pairwise_loss, train_bbl, train_pairwise, BiasConfig, TrainConfig, TrainLogRow};

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("both classes need at least one sample")]
    EmptyClass,
    #[error("length mismatch: {0}")]
    Length(String),
    #[error("{0}")]
    Config(String),
    #[error("ensemble has no stumps")]
    EmptyEnsemble,
    #[error("dataset: {0}")]
    Data(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Feature vectors split by class. Positives are hotspots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredDataset {
    pub positives: Vec<Vec<f64>>,
    pub negatives: Vec<Vec<f64>>,
}

impl ScoredDataset {
    pub fn from_labeled(rows: impl IntoIterator<Item = (bool, Vec<f64>)>) -> Self {
        let mut d = ScoredDataset::default();
        for (hot, x) in rows {
            if hot {
                d.positives.push(x);
            } else {
                d.negatives.push(x);
            }
        }
        d
    }

    pub fn dim(&self) -> usize {
        self.positives.first().or(self.negatives.first()).map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn check(&self) -> Result<(), LearnError> {
        if self.positives.is_empty() || self.negatives.is_empty() {
            return Err(LearnError::EmptyClass);
        }
        let d = self.dim();
        if self.positives.iter().chain(&self.negatives).any(|x| x.len() != d) {
            return Err(LearnError::Length("feature vectors differ in length".into()));
        }
        Ok(())
    }
}

/// f(x) = w·x + b
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self { weights: vec![0.0; dim], bias: 0.0 }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    /// Sets the bias so the decision threshold (score 0) sits halfway
    /// between the mean positive and mean negative score.
    pub fn calibrate(&mut self, data: &ScoredDataset) {
        self.bias = 0.0;
        let mean = |xs: &[Vec<f64>]| xs.iter().map(|x| self.score(x)).sum::<f64>() / xs.len().max(1) as f64;
        let mid = 0.5 * (mean(&data.positives) + mean(&data.negatives));
        self.bias = -mid;
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) > 0.0
    }
}

/// Parses `label,feature...` rows. Labels are `1`/`0` or
/// `hotspot`/`non-hotspot`; a header row is allowed if its first field is
/// `label`.
pub fn read_labeled_csv<R: Read>(source: R) -> Result<ScoredDataset, LearnError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(false).from_reader(source);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let Some(first) = rec.get(0) else { continue };
        if i == 0 && first.trim() == "label" {
            continue;
        }
        let hot = match first.trim() {
            "1" | "hotspot" => true,
            "0" | "non-hotspot" => false,
            other => return Err(LearnError::Data(format!("row {}: bad label `{other}`", i + 1))),
        };
        let x = rec
            .iter()
            .skip(1)
            .map(|f| f.trim().parse::<f64>().map_err(|e| LearnError::Data(format!("row {}: {e}", i + 1))))
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push((hot, x));
    }
    Ok(ScoredDataset::from_labeled(rows))
}

/// Per-feature centering and scaling from a reference set. Each feature
/// is divided by its standard deviation times sqrt(dim), so a transformed
/// row has unit expected squared norm whatever the feature count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let d = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m).powi(2) / n;
            }
        }
        let dim = d.max(1) as f64;
        let scale = var.into_iter().map(|v| if v > 1e-12 { (v * dim).sqrt() } else { dim.sqrt() }).collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }

    pub fn apply_all(&self, data: &ScoredDataset) -> ScoredDataset {
        ScoredDataset {
            positives: data.positives.iter().map(|x| self.apply(x)).collect(),
            negatives: data.negatives.iter().map(|x| self.apply(x)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let text = "label,a,b\n1,0.5,2\n0,-1,3e-1\nhotspot,1,1\n";
        let d = read_labeled_csv(text.as_bytes()).unwrap();
        assert_eq!(d.positives, vec![vec![0.5, 2.0], vec![1.0, 1.0]]);
        assert_eq!(d.negatives, vec![vec![-1.0, 0.3]]);
        assert!(read_labeled_csv("2,1\n".as_bytes()).is_err());
    }

    #[test]
    fn calibration_splits_means() {
        let data = ScoredDataset { positives: vec![vec![3.0]], negatives: vec![vec![1.0]] };
        let mut m = LinearModel { weights: vec![1.0], bias: 7.0 };
        m.calibrate(&data);
        assert_eq!(m.bias, -2.0);
        assert!(m.predict(&[3.0]) && !m.predict(&[1.0]));
    }
}
