//! Proper orthogonal decomposition by the method of snapshots, plus
//! supremizer enrichment of the velocity space.

use alloc::vec::Vec;
use nalgebra::{DMatrix, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{ensure, Error, Result};
use crate::fd;
use crate::fom::SnapshotSet;
use crate::grid::{GridSpec, Mesh};
use crate::snapshots::{frame_field, InnerProductWeights};

/// Which snapshot field a basis describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Stacked `[u; v]` modes.
    Velocity,
    Pressure,
    EddyViscosity,
}

impl FieldKind {
    pub fn components(self) -> usize {
        match self {
            FieldKind::Velocity => 2,
            _ => 1,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            FieldKind::Velocity => 0,
            FieldKind::Pressure => 1,
            FieldKind::EddyViscosity => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(FieldKind::Velocity),
            1 => Some(FieldKind::Pressure),
            2 => Some(FieldKind::EddyViscosity),
            _ => None,
        }
    }
}

/// Orthonormal spatial modes. Velocity modes are stacked `[x; y]` of length
/// `2 · n_cells`; supremizer modes, when present, follow the POD modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasis {
    pub kind: FieldKind,
    pub n_cells: usize,
    pub modes: Vec<Vec<f64>>,
    /// Singular values of the POD modes, nonincreasing.
    pub singular_values: Vec<f64>,
    pub n_sup: usize,
}

impl PodBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Number of POD (non-supremizer) modes.
    pub fn n_pod(&self) -> usize {
        self.modes.len() - self.n_sup
    }

    /// Keeps the first `n_pod` POD modes and the first `n_sup` supremizers.
    pub fn select(&self, n_pod: usize, n_sup: usize) -> Result<PodBasis> {
        ensure!(
            n_pod <= self.n_pod() && n_sup <= self.n_sup,
            Dimension,
            "cannot select {n_pod}+{n_sup} modes from {}+{}",
            self.n_pod(),
            self.n_sup
        );
        let p = self.n_pod();
        let mut modes: Vec<Vec<f64>> = self.modes[..n_pod].to_vec();
        modes.extend_from_slice(&self.modes[p..p + n_sup]);
        Ok(PodBasis {
            kind: self.kind,
            n_cells: self.n_cells,
            modes,
            singular_values: self.singular_values[..n_pod.min(self.singular_values.len())].to_vec(),
            n_sup,
        })
    }

    /// Largest deviation of the weighted Gramian from the identity.
    pub fn orthonormality_defect(&self, w: &InnerProductWeights) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for j in 0..=i {
                let g = w.ip_unchecked(&self.modes[i], &self.modes[j]);
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// Largest-magnitude entry made positive.
fn fix_sign(mode: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in mode.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        mode.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Orthonormalises `v` against `basis` (two passes of modified Gram–Schmidt).
/// Returns the norm left after orthogonalisation, before normalisation.
fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>], w: &InnerProductWeights) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = w.ip_unchecked(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let nrm = w.norm(v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Usable rank threshold relative to the leading Gramian eigenvalue.
pub const RANK_TOL: f64 = 1e-14;

/// Gramian eigenpairs sorted by descending eigenvalue.
fn gramian_eigen(fields: &[Vec<f64>], w: &InnerProductWeights) -> (Vec<f64>, DMatrix<f64>) {
    let m = fields.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let g = w.ip_unchecked(&fields[i], &fields[j]);
            k[(i, j)] = g;
            k[(j, i)] = g;
        }
    }
    let eig = SymmetricEigen::new(k);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// Number of Gramian eigenvalues at or above `RANK_TOL · λ_max`.
pub fn usable_rank(set: &SnapshotSet, kind: FieldKind) -> usize {
    let w = InnerProductWeights(set.weights.clone());
    let fields: Vec<Vec<f64>> = set.frames.iter().map(|f| frame_field(f, kind)).collect();
    let (vals, _) = gramian_eigen(&fields, &w);
    let lmax = vals.first().copied().unwrap_or(0.0);
    vals.iter().take_while(|&&l| lmax > 0.0 && l >= RANK_TOL * lmax).count()
}

/// POD of one snapshot field by the method of snapshots.
pub fn pod(set: &SnapshotSet, kind: FieldKind, n: usize) -> Result<PodBasis> {
    let m = set.frames.len();
    ensure!(n >= 1 && n <= m, Config, "requested {n} modes from {m} snapshots");
    let w = InnerProductWeights(set.weights.clone());
    let fields: Vec<Vec<f64>> = set.frames.iter().map(|f| frame_field(f, kind)).collect();
    pod_of_fields(&fields, &w, kind, n)
}

pub(crate) fn pod_of_fields(
    fields: &[Vec<f64>],
    w: &InnerProductWeights,
    kind: FieldKind,
    n: usize,
) -> Result<PodBasis> {
    let (vals, vecs) = gramian_eigen(fields, w);
    let lmax = vals.first().copied().unwrap_or(0.0);
    let usable = vals.iter().take_while(|&&l| lmax > 0.0 && l >= RANK_TOL * lmax).count();
    if n > usable {
        return Err(Error::RankDeficient { requested: n, usable });
    }
    let len = fields[0].len();
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    for k in 0..n {
        let sigma = vals[k].sqrt();
        let mut mode = alloc::vec![0.0; len];
        for (j, f) in fields.iter().enumerate() {
            let c = vecs[(j, k)] / sigma;
            for (o, x) in mode.iter_mut().zip(f) {
                *o += c * x;
            }
        }
        // Re-orthonormalise to remove round-off amplified by small singular values.
        orthonormalize_against(&mut mode, &modes, w);
        fix_sign(&mut mode);
        modes.push(mode);
        singular_values.push(sigma);
    }
    Ok(PodBasis {
        kind,
        n_cells: w.n_cells(),
        modes,
        singular_values,
        n_sup: 0,
    })
}

/// Raw supremizer of each pressure mode: the velocity-space Riesz representer
/// of `v ↦ ⟨χ, ∇·v⟩_w`, which is `−∇χ` for the adjoint gradient.
pub fn raw_supremizers(pressure: &PodBasis, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    ensure!(!pressure.is_empty(), Config, "pressure basis is empty");
    ensure!(
        pressure.kind == FieldKind::Pressure && pressure.n_cells == grid.n_cells(),
        Dimension,
        "supremizers need a pressure basis on this grid"
    );
    let mesh = Mesh::new(grid);
    let w = InnerProductWeights(grid.weights());
    let scale = 1.0 / grid.dx().min(grid.dy());
    let mut out = Vec::with_capacity(pressure.len());
    for (i, chi) in pressure.modes.iter().enumerate() {
        let [gx, gy] = fd::pressure_grad(&mesh, chi);
        let mut s: Vec<f64> = gx.iter().map(|x| -x).collect();
        s.extend(gy.iter().map(|x| -x));
        if w.norm(&s) <= 1e-10 * scale * w.norm(chi) {
            return Err(Error::DegenerateMode(i));
        }
        out.push(s);
    }
    Ok(out)
}

/// Supremizer modes orthonormalised against `velocity` and each other.
pub fn supremizers(pressure: &PodBasis, velocity: &PodBasis, grid: &GridSpec) -> Result<Vec<Vec<f64>>> {
    ensure!(
        velocity.kind == FieldKind::Velocity && velocity.n_cells == grid.n_cells(),
        Dimension,
        "supremizers need a velocity basis on this grid"
    );
    let w = InnerProductWeights(grid.weights());
    let raw = raw_supremizers(pressure, grid)?;
    let mut span: Vec<Vec<f64>> = velocity.modes.clone();
    let mut out = Vec::with_capacity(raw.len());
    for (i, mut s) in raw.into_iter().enumerate() {
        let before = w.norm(&s);
        let left = orthonormalize_against(&mut s, &span, &w);
        if left <= 1e-10 * before {
            return Err(Error::DegenerateMode(i));
        }
        span.push(s.clone());
        out.push(s);
    }
    Ok(out)
}

/// Appends supremizer modes to a velocity basis.
pub fn enrich(velocity: &PodBasis, sup: Vec<Vec<f64>>) -> Result<PodBasis> {
    ensure!(
        velocity.kind == FieldKind::Velocity,
        Config,
        "only velocity bases can be enriched"
    );
    let len = 2 * velocity.n_cells;
    ensure!(
        sup.iter().all(|s| s.len() == len),
        Dimension,
        "supremizer modes must have length {len}"
    );
    let mut out = velocity.clone();
    out.n_sup += sup.len();
    out.modes.extend(sup);
    Ok(out)
}

/// Appends `extra` to `basis`, orthonormalising each new mode against all
/// modes before it, so `basis` stays an exact prefix of the result.
pub fn extend_basis(basis: &PodBasis, extra: &[Vec<f64>], w: &InnerProductWeights) -> Result<PodBasis> {
    let len = basis.kind.components() * basis.n_cells;
    ensure!(
        extra.iter().all(|m| m.len() == len) && w.n_cells() == basis.n_cells,
        Dimension,
        "extension modes must have length {len}"
    );
    let mut out = basis.clone();
    for (i, m) in extra.iter().enumerate() {
        let mut v = m.clone();
        let before = w.norm(&v);
        let left = orthonormalize_against(&mut v, &out.modes, w);
        if left <= 1e-10 * before {
            return Err(Error::DegenerateMode(i));
        }
        out.modes.push(v);
    }
    Ok(out)
}

/// Squared-norm residual `Σ_j ‖s_j − P_n s_j‖²_w` of projecting the snapshots
/// on the first `n` modes.
pub fn projection_residual(set: &SnapshotSet, basis: &PodBasis, n: usize) -> f64 {
    let w = InnerProductWeights(set.weights.clone());
    let mut total = 0.0;
    for frame in &set.frames {
        let mut f = frame_field(frame, basis.kind);
        for mode in &basis.modes[..n] {
            let c = w.ip_unchecked(&f, mode);
            for (x, m) in f.iter_mut().zip(mode) {
                *x -= c * m;
            }
        }
        total += w.ip_unchecked(&f, &f);
    }
    total
}
