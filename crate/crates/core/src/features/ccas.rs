//! Concentric circle area sampling and mutual-information circle selection.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{FeatureError, RasterClip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcasConfig {
    pub r_max: usize,
    pub n_c: usize,
    pub d: usize,
    pub bins: usize,
}

impl CcasConfig {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.n_c < 1 || self.bins < 2 || self.r_max < 1 {
            return Err(FeatureError::Config(format!(
                "need r_max >= 1, n_c >= 1 and bins >= 2 (got r_max={}, n_c={}, bins={})",
                self.r_max, self.n_c, self.bins
            )));
        }
        if self.n_c > max_spaced(self.r_max, self.d) {
            return Err(FeatureError::Infeasible { n_c: self.n_c, d: self.d, r_max: self.r_max });
        }
        Ok(())
    }
}

impl Default for CcasConfig {
    fn default() -> Self {
        Self { r_max: 50, n_c: 10, d: 1, bins: 16 }
    }
}

/// Offsets of the midpoint (Bresenham) circle of radius `r`, deduplicated
/// and sorted.
pub fn circle_points(r: i64) -> Vec<(i64, i64)> {
    let mut pts = BTreeSet::new();
    let (mut x, mut y, mut err) = (r, 0i64, 1 - r);
    while x >= y {
        for (a, b) in [(x, y), (y, x), (-y, x), (-x, y), (-x, -y), (-y, -x), (y, -x), (x, -y)] {
            pts.insert((a, b));
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
    pts.into_iter().collect()
}

/// Mean pixel value on circles of radius 1..=r_max pixels around the clip
/// center pixel (rows/2, cols/2). Circle points outside the grid are not
/// counted.
pub fn ccas_sample(clip: &RasterClip, r_max: usize) -> Result<Vec<f64>, FeatureError> {
    let (h, w) = (clip.rows as i64, clip.cols as i64);
    if r_max as i64 > h.min(w) / 2 {
        return Err(FeatureError::Config(format!("r_max {r_max} exceeds half the clip size {}", h.min(w) / 2)));
    }
    let (cr, cc) = (h / 2, w / 2);
    Ok((1..=r_max as i64)
        .map(|r| {
            let (mut sum, mut n) = (0u64, 0u64);
            for (dr, dc) in circle_points(r) {
                let (row, col) = (cr + dr, cc + dc);
                if (0..h).contains(&row) && (0..w).contains(&col) {
                    sum += clip.get(row as usize, col as usize) as u64;
                    n += 1;
                }
            }
            if n == 0 {
                0.0
            } else {
                sum as f64 / n as f64
            }
        })
        .collect())
}

/// Equal-width bin of a density in [0, 1].
pub fn discretize(value: f64, bins: usize) -> usize {
    ((value.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

/// Empirical mutual information in nats between two discrete sequences.
pub fn mutual_information(c: &[usize], y: &[usize]) -> Result<f64, FeatureError> {
    if c.len() != y.len() || c.is_empty() {
        return Err(FeatureError::Config(format!(
            "mutual information needs equal non-empty lengths (got {} and {})",
            c.len(),
            y.len()
        )));
    }
    let n = c.len() as f64;
    let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
    let mut pc: HashMap<usize, u64> = HashMap::new();
    let mut py: HashMap<usize, u64> = HashMap::new();
    for (&a, &b) in c.iter().zip(y) {
        *joint.entry((a, b)).or_default() += 1;
        *pc.entry(a).or_default() += 1;
        *py.entry(b).or_default() += 1;
    }
    let mut cells: Vec<((usize, usize), u64)> = joint.into_iter().collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .iter()
        .map(|&((a, b), k)| {
            let k = k as f64;
            k / n * (k * n / (pc[&a] as f64 * py[&b] as f64)).ln()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// MI between each circle's discretized density and the labels.
/// `samples[j]` holds circle densities of clip j.
pub fn circle_information(samples: &[Vec<f64>], labels: &[usize], bins: usize) -> Result<Vec<f64>, FeatureError> {
    let Some(first) = samples.first() else {
        return Err(FeatureError::Config("no samples".into()));
    };
    if samples.len() != labels.len() {
        return Err(FeatureError::Config(format!("{} samples but {} labels", samples.len(), labels.len())));
    }
    (0..first.len())
        .map(|i| {
            let c: Vec<usize> = samples.iter().map(|s| discretize(s[i], bins)).collect();
            mutual_information(&c, labels)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Maximize,
    Minimize,
}

/// Largest number of indices from 1..=r pairwise more than `d` apart.
pub fn max_spaced(r: usize, d: usize) -> usize {
    r.div_ceil(d + 1)
}

fn spaced_from(chosen: &[usize], i: usize, d: usize) -> bool {
    chosen.iter().all(|&j| i.abs_diff(j) > d)
}

/// How many more indices fit next to `chosen`. Leftmost-first packing is
/// optimal on a line.
fn room_left(chosen: &[usize], r: usize, d: usize) -> usize {
    let mut extra: Vec<usize> = Vec::new();
    for i in 1..=r {
        if spaced_from(chosen, i, d) && spaced_from(&extra, i, d) {
            extra.push(i);
        }
    }
    extra.len()
}

/// Greedy MI-ranked selection of `n_c` 1-based circle indices pairwise more
/// than `d` apart. A candidate is taken only if the remaining picks can
/// still be placed, so the greedy pass never dead-ends on a feasible
/// problem. Ties go to the lower index.
pub fn select_by_information(mi: &[f64], n_c: usize, d: usize, direction: Direction) -> Result<Vec<usize>, FeatureError> {
    let r = mi.len();
    if n_c == 0 || n_c > max_spaced(r, d) {
        return Err(FeatureError::Infeasible { n_c, d, r_max: r });
    }
    let mut order: Vec<usize> = (1..=r).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (mi[a - 1], mi[b - 1]);
        let ord = match direction {
            Direction::Maximize => y.total_cmp(&x),
            Direction::Minimize => x.total_cmp(&y),
        };
        ord.then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = Vec::with_capacity(n_c);
    for i in order {
        if chosen.len() == n_c {
            break;
        }
        if !spaced_from(&chosen, i, d) {
            continue;
        }
        chosen.push(i);
        if room_left(&chosen, r, d) < n_c - chosen.len() {
            chosen.pop();
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

pub fn select_circles(
    samples: &[Vec<f64>],
    labels: &[usize],
    cfg: &CcasConfig,
    direction: Direction,
) -> Result<Vec<usize>, FeatureError> {
    cfg.validate()?;
    let mi = circle_information(samples, labels, cfg.bins)?;
    select_by_information(&mi, cfg.n_c, cfg.d, direction)
}
