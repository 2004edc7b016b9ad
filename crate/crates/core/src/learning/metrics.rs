//! Hotspot detection accuracy, false-alarm rate and run statistics.

use serde::Serialize;

use super::LearnError;

/// (hotspots found / hotspots, non-hotspots flagged / non-hotspots).
/// `true` means hotspot in both slices.
pub fn evaluate(predictions: &[bool], labels: &[bool]) -> Result<(f64, f64), LearnError> {
    if predictions.len() != labels.len() {
        return Err(LearnError::Length(format!("{} predictions for {} labels", predictions.len(), labels.len())));
    }
    let (mut hot, mut found, mut cold, mut flagged) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &l) in predictions.iter().zip(labels) {
        if l {
            hot += 1;
            found += usize::from(p);
        } else {
            cold += 1;
            flagged += usize::from(p);
        }
    }
    if hot == 0 || cold == 0 {
        return Err(LearnError::EmptyClass);
    }
    Ok((found as f64 / hot as f64, flagged as f64 / cold as f64))
}

/// Mean and Bessel-corrected sample variance.
pub fn mean_variance(xs: &[f64]) -> Result<(f64, f64), LearnError> {
    if xs.len() < 2 {
        return Err(LearnError::Length(format!("variance needs at least 2 runs (got {})", xs.len())));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceReport {
    pub accuracy_mean: f64,
    pub accuracy_var: f64,
    pub false_alarm_mean: f64,
    pub false_alarm_var: f64,
}

pub fn variance_report(runs: &[(f64, f64)]) -> Result<VarianceReport, LearnError> {
    let acc: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let fa: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let (accuracy_mean, accuracy_var) = mean_variance(&acc)?;
    let (false_alarm_mean, false_alarm_var) = mean_variance(&fa)?;
    Ok(VarianceReport { accuracy_mean, accuracy_var, false_alarm_mean, false_alarm_var })
}
