//! Orthonormal 2-D DCT-II on square blocks and zig-zag coefficient order.

use std::f64::consts::PI;

/// Precomputed orthonormal DCT-II basis for N×N blocks. Blocks are flat,
/// row-major slices of length N².
#[derive(Debug, Clone)]
pub struct DctPlan {
    n: usize,
    // basis[k * n + i] = s_k cos(pi (2i + 1) k / 2n)
    basis: Vec<f64>,
}

impl DctPlan {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "block size must be positive");
        let mut basis = vec![0.0; n * n];
        for k in 0..n {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            for i in 0..n {
                basis[k * n + i] = s * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
            }
        }
        Self { n, basis }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// C · X · Cᵀ
    pub fn forward(&self, block: &[f64]) -> Vec<f64> {
        self.apply(block, false)
    }

    /// Cᵀ · Y · C
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        self.apply(coeffs, true)
    }

    fn apply(&self, x: &[f64], inverse: bool) -> Vec<f64> {
        let n = self.n;
        assert_eq!(x.len(), n * n, "block must be {n}x{n}");
        let c = |k: usize, i: usize| if inverse { self.basis[i * n + k] } else { self.basis[k * n + i] };
        // rows first, then columns
        let mut tmp = vec![0.0; n * n];
        for r in 0..n {
            for k in 0..n {
                tmp[r * n + k] = (0..n).map(|i| c(k, i) * x[r * n + i]).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            for col in 0..n {
                out[k * n + col] = (0..n).map(|i| c(k, i) * tmp[i * n + col]).sum();
            }
        }
        out
    }
}

pub fn dct2(block: &[f64], n: usize) -> Vec<f64> {
    DctPlan::new(n).forward(block)
}

pub fn idct2(coeffs: &[f64], n: usize) -> Vec<f64> {
    DctPlan::new(n).inverse(coeffs)
}

/// (row, col) visiting order: anti-diagonals s = r + c ascending, even
/// diagonals walked from bottom-left up, odd ones from top-right down.
pub fn zigzag_order(n: usize) -> Vec<(usize, usize)> {
    let mut order = Vec::with_capacity(n * n);
    if n == 0 {
        return order;
    }
    for s in 0..(2 * n - 1) {
        let r_lo = s.saturating_sub(n - 1);
        let r_hi = s.min(n - 1);
        if s % 2 == 0 {
            for r in (r_lo..=r_hi).rev() {
                order.push((r, s - r));
            }
        } else {
            for r in r_lo..=r_hi {
                order.push((r, s - r));
            }
        }
    }
    order
}

pub fn zigzag(block: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(block.len(), n * n);
    zigzag_order(n).into_iter().map(|(r, c)| block[r * n + c]).collect()
}

/// Places `coeffs` back along the zig-zag path; missing tail entries are 0.
pub fn unzigzag(coeffs: &[f64], n: usize) -> Vec<f64> {
    assert!(coeffs.len() <= n * n);
    let mut block = vec![0.0; n * n];
    for (&v, (r, c)) in coeffs.iter().zip(zigzag_order(n)) {
        block[r * n + c] = v;
    }
    block
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_block() {
        let y = dct2(&[3.0; 4], 2);
        assert!((y[0] - 6.0).abs() < 1e-12);
        assert!(y[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(dct2(&[0.0; 64], 8).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zigzag_examples() {
        assert_eq!(zigzag(&[1.0, 2.0, 3.0, 4.0], 2), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(zigzag(&[7.0], 1), vec![7.0]);
        assert_eq!(
            zigzag_order(3),
            vec![(0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (1, 2), (2, 1), (2, 2)]
        );
    }

    #[test]
    fn basis_rows_orthonormal() {
        let p = DctPlan::new(7);
        for a in 0..7 {
            for b in 0..7 {
                let dot: f64 = (0..7).map(|i| p.basis[a * 7 + i] * p.basis[b * 7 + i]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }
}
