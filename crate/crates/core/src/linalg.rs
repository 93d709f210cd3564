//! Small dense and banded helpers not covered by nalgebra.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

/// Lower band of a symmetric matrix, factorised in place as `L Lᵀ`.
///
/// Row `i` stores entries `(i, i - k)` for `k = 0..=bw` at `data[i * (bw + 1) + k]`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedCholesky {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    /// Sets entry `(i, j)` with `j <= i <= j + bw`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && i - j <= self.bw);
        self.data[i * (self.bw + 1) + (i - j)] = v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    /// Factorises in place. Returns `None` when a pivot is not clearly positive.
    pub fn factor(mut self) -> Option<Self> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let scale = (0..n).map(|i| self.data[i * w]).fold(0.0f64, f64::max);
        if scale <= 0.0 {
            return None;
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[i * w + (i - j)];
                for k in k0..j {
                    s -= self.data[i * w + (i - k)] * self.data[j * w + (j - k)];
                }
                if j == i {
                    if s <= 1e-13 * scale {
                        return None;
                    }
                    self.data[i * w] = s.sqrt();
                } else {
                    self.data[i * w + (i - j)] = s / self.data[j * w];
                }
            }
        }
        Some(self)
    }

    /// Solves `L Lᵀ x = b` in place (after [`factor`](Self::factor)).
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[i * w + (i - k)] * x[k];
            }
            x[i] = s / self.data[i * w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + w).min(n) {
                s -= self.data[k * w + (k - i)] * x[k];
            }
            x[i] = s / self.data[i * w];
        }
    }
}
