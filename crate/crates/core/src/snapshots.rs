//! Weighted inner products, coefficient series and projections.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{ensure, Error, Result};
use crate::fom::{FieldFrame, SnapshotSet};
use crate::pod::{FieldKind, PodBasis};

/// Per-cell nonnegative quadrature weights (cell areas, zero on solid cells).
#[derive(Debug, Clone, PartialEq)]
pub struct InnerProductWeights(pub Vec<f64>);

impl InnerProductWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        ensure!(
            w.iter().all(|x| *x >= 0.0 && x.is_finite()),
            Config,
            "weights must be finite and nonnegative"
        );
        Ok(InnerProductWeights(w))
    }

    pub fn n_cells(&self) -> usize {
        self.0.len()
    }

    /// Weighted product of two fields made of `len / n_cells` stacked components.
    pub fn ip(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        ensure!(
            f.len() == g.len(),
            Dimension,
            "inner product of fields of lengths {} and {}",
            f.len(),
            g.len()
        );
        let n = self.0.len();
        ensure!(
            n > 0 && f.len().is_multiple_of(n),
            Dimension,
            "field length {} is not a multiple of {n} cells",
            f.len()
        );
        Ok(self.ip_unchecked(f, g))
    }

    pub(crate) fn ip_unchecked(&self, f: &[f64], g: &[f64]) -> f64 {
        let n = self.0.len();
        let mut s = 0.0;
        for (k, (a, b)) in f.iter().zip(g).enumerate() {
            s += self.0[k % n] * a * b;
        }
        s
    }

    pub(crate) fn norm(&self, f: &[f64]) -> f64 {
        self.ip_unchecked(f, f).sqrt()
    }
}

/// Weighted product `Σ_c w_c f_c g_c`.
pub fn ip(f: &[f64], g: &[f64], w: &InnerProductWeights) -> Result<f64> {
    w.ip(f, g)
}

/// Reduced coefficients sampled in time: row `j` holds the coefficients at `times[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeries {
    pub times: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl CoeffSeries {
    pub fn new(times: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        ensure!(
            times.len() == values.nrows(),
            Dimension,
            "{} times for {} rows",
            times.len(),
            values.nrows()
        );
        ensure!(
            times.windows(2).all(|w| w[1] > w[0]),
            Config,
            "times must be strictly increasing"
        );
        ensure!(
            values.iter().all(|x| x.is_finite()),
            Config,
            "coefficient series contains non-finite values"
        );
        Ok(CoeffSeries { times, values })
    }

    pub fn n_times(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_coeffs(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.values.row(j).iter().copied().collect()
    }

    /// First `n` columns.
    pub fn truncate(&self, n: usize) -> CoeffSeries {
        CoeffSeries {
            times: self.times.clone(),
            values: self.values.columns(0, n.min(self.n_coeffs())).into_owned(),
        }
    }

    /// First `m` rows.
    pub fn head(&self, m: usize) -> CoeffSeries {
        let m = m.min(self.n_times());
        CoeffSeries {
            times: self.times[..m].to_vec(),
            values: self.values.rows(0, m).into_owned(),
        }
    }

    /// Column-wise concatenation `[self | other]` on identical time stamps.
    pub fn hstack(&self, other: &CoeffSeries) -> Result<CoeffSeries> {
        ensure!(
            self.times == other.times,
            Dimension,
            "cannot concatenate series on different time stamps"
        );
        let (m, a, b) = (self.n_times(), self.n_coeffs(), other.n_coeffs());
        let values = DMatrix::from_fn(m, a + b, |i, j| {
            if j < a {
                self.values[(i, j)]
            } else {
                other.values[(i, j - a)]
            }
        });
        Ok(CoeffSeries {
            times: self.times.clone(),
            values,
        })
    }
}

/// Stacked field of a frame for the given kind: `[u; v]`, `p`, or `ν_t`.
pub fn frame_field(frame: &FieldFrame, kind: FieldKind) -> Vec<f64> {
    match kind {
        FieldKind::Velocity => {
            let mut f = frame.u.clone();
            f.extend_from_slice(&frame.v);
            f
        }
        FieldKind::Pressure => frame.p.clone(),
        FieldKind::EddyViscosity => frame.nu_t.clone(),
    }
}

/// Coefficients `⟨field(t_j), mode_i⟩_w` for the first `n` modes.
pub fn project_coeffs(set: &SnapshotSet, basis: &PodBasis, n: usize) -> Result<CoeffSeries> {
    ensure!(
        n <= basis.len(),
        Dimension,
        "requested {n} coefficients from a basis of {} modes",
        basis.len()
    );
    ensure!(
        basis.n_cells == set.grid.n_cells(),
        Dimension,
        "basis has {} cells, snapshots have {}",
        basis.n_cells,
        set.grid.n_cells()
    );
    let w = InnerProductWeights(set.weights.clone());
    let m = set.frames.len();
    let mut values = DMatrix::zeros(m, n);
    for (j, frame) in set.frames.iter().enumerate() {
        let f = frame_field(frame, basis.kind);
        for i in 0..n {
            values[(j, i)] = w.ip_unchecked(&f, &basis.modes[i]);
        }
    }
    CoeffSeries::new(set.times(), values)
}

/// Projection of a single field on the first `n` modes.
pub fn project_field(field: &[f64], basis: &PodBasis, n: usize, w: &InnerProductWeights) -> Result<Vec<f64>> {
    ensure!(n <= basis.len(), Dimension, "requested {n} of {} modes", basis.len());
    basis.modes[..n].iter().map(|m| w.ip(field, m)).collect()
}

/// `Σ_i c_i mode_i` over the first `coeffs.len()` modes.
pub fn reconstruct(basis: &PodBasis, coeffs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.len() > basis.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} modes",
            coeffs.len(),
            basis.len()
        )));
    }
    let len = basis.modes.first().map_or(0, |m| m.len());
    let mut out = alloc::vec![0.0; len];
    for (c, mode) in coeffs.iter().zip(&basis.modes) {
        for (o, m) in out.iter_mut().zip(mode) {
            *o += c * m;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn ip_of_single_cell_indicator_is_its_area() {
        let h = 0.25;
        let w = InnerProductWeights::new(vec![h * h; 6]).unwrap();
        let mut f = vec![0.0; 6];
        f[3] = 1.0;
        assert!((ip(&f, &f, &w).unwrap() - h * h).abs() < 1e-15);
    }

    #[test]
    fn ip_rejects_length_mismatch() {
        let w = InnerProductWeights::new(vec![1.0; 4]).unwrap();
        assert!(matches!(ip(&[1.0; 4], &[1.0; 3], &w), Err(Error::Dimension(_))));
    }

    #[test]
    fn ip_of_ones_is_fluid_area() {
        let mut wv = vec![1.0 / 16.0; 16];
        wv[5] = 0.0;
        let w = InnerProductWeights::new(wv.clone()).unwrap();
        let one = vec![1.0; 16];
        let area: f64 = wv.iter().sum();
        assert!((ip(&one, &one, &w).unwrap() - area).abs() < 1e-15);
    }

    #[test]
    fn series_rejects_non_increasing_times() {
        let r = CoeffSeries::new(vec![0.0, 0.0], DMatrix::zeros(2, 1));
        assert!(r.is_err());
        let r = CoeffSeries::new(vec![0.0, 1.0], DMatrix::from_element(2, 1, f64::NAN));
        assert!(r.is_err());
    }

    proptest::proptest! {
        #[test]
        fn ip_is_symmetric_and_bilinear(
            f in proptest::collection::vec(-10.0f64..10.0, 12),
            g in proptest::collection::vec(-10.0f64..10.0, 12),
            a in -3.0f64..3.0,
        ) {
            let w = InnerProductWeights::new((0..12).map(|k| 0.1 + k as f64 * 0.01).collect()).unwrap();
            let fg = ip(&f, &g, &w).unwrap();
            proptest::prop_assert!((fg - ip(&g, &f, &w).unwrap()).abs() <= 1e-12 * (1.0 + fg.abs()));
            let af: Vec<f64> = f.iter().map(|x| a * x).collect();
            proptest::prop_assert!((ip(&af, &g, &w).unwrap() - a * fg).abs() <= 1e-10 * (1.0 + fg.abs()));
        }
    }
}
