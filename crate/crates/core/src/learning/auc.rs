//! Area under the ROC curve as the Wilcoxon-Mann-Whitney statistic.

use super::LearnError;

fn check(pos: &[f64], neg: &[f64]) -> Result<(), LearnError> {
    if pos.is_empty() || neg.is_empty() {
        return Err(LearnError::EmptyClass);
    }
    Ok(())
}

/// Pair-by-pair count; a tie is worth half a win.
pub fn auc_bruteforce(pos: &[f64], neg: &[f64]) -> Result<f64, LearnError> {
    check(pos, neg)?;
    let mut twice_wins: u64 = 0;
    for &p in pos {
        for &n in neg {
            twice_wins += if p > n {
                2
            } else if p == n {
                1
            } else {
                0
            };
        }
    }
    Ok(twice_wins as f64 / (2 * pos.len() * neg.len()) as f64)
}

/// Rank-sum form with mid-ranks for ties, O(N log N).
pub fn auc_fast(pos: &[f64], neg: &[f64]) -> Result<f64, LearnError> {
    check(pos, neg)?;
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // twice the rank sum of the positives; ranks start at 1
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j share the midrank (i + 1 + j) / 2
        let positives = all[i..j].iter().filter(|e| e.1).count() as u64;
        twice_rank_sum += positives * (i + 1 + j) as u64;
        i = j;
    }
    let (np, nn) = (pos.len() as u64, neg.len() as u64);
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok(twice_u as f64 / (2 * np * nn) as f64)
}
