//! Relative error metrics between reduced and reference fields.
//!
//! The reference at each snapshot time is the `d`-mode reconstruction of the
//! FOM frame. Velocity errors compare pointwise magnitudes `|u|`; both errors
//! are weighted L² norms expressed in percent.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{ensure, Error, Result};
use crate::fom::SnapshotSet;
use crate::pod::{FieldKind, PodBasis};
use crate::romsolve::RomTrajectory;
use crate::snapshots::{frame_field, reconstruct, InnerProductWeights};

/// Percentage errors over time.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub eps_u: Vec<f64>,
    pub eps_p: Vec<f64>,
    /// Number of modes in the reference reconstruction.
    pub d: usize,
    /// Sample spacing used by the error integral.
    pub dt: f64,
}

impl ErrorSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_u(&self) -> f64 {
        self.eps_u.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn max_p(&self) -> f64 {
        self.eps_p.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Pointwise `|u|` of a stacked `[u; v]` field.
pub fn magnitude(stacked: &[f64]) -> Vec<f64> {
    let n = stacked.len() / 2;
    (0..n).map(|c| stacked[c].hypot(stacked[n + c])).collect()
}

fn rel_error(approx: &[f64], reference: &[f64], w: &InnerProductWeights) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((x, y), wc) in approx.iter().zip(reference).zip(&w.0) {
        num += wc * (x - y) * (x - y);
        den += wc * y * y;
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        100.0 * (num / den).sqrt()
    }
}

/// Reference fields `|u_d|` and `p_d` at every snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub times: Vec<f64>,
    pub umag: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub weights: InnerProductWeights,
    pub d: usize,
    pub dt_snap: f64,
}

impl Reference {
    /// Reconstructs each frame from its first `d` velocity and pressure modes
    /// (fewer if a basis is shorter).
    pub fn new(set: &SnapshotSet, velocity: &PodBasis, pressure: &PodBasis, d: usize) -> Result<Self> {
        ensure!(!set.frames.is_empty(), Dimension, "snapshot set has no frames");
        ensure!(
            velocity.kind == FieldKind::Velocity && pressure.kind == FieldKind::Pressure,
            Dimension,
            "reference bases must be velocity and pressure"
        );
        ensure!(
            velocity.n_cells == set.grid.n_cells() && pressure.n_cells == set.grid.n_cells(),
            Dimension,
            "reference bases do not match the snapshot grid"
        );
        let w = InnerProductWeights(set.weights.clone());
        let dv = d.min(velocity.n_pod());
        let dp = d.min(pressure.n_pod());
        let mut umag = Vec::with_capacity(set.frames.len());
        let mut p = Vec::with_capacity(set.frames.len());
        for frame in &set.frames {
            let fu = frame_field(frame, FieldKind::Velocity);
            let cu: Vec<f64> = velocity.modes[..dv].iter().map(|m| w.ip_unchecked(&fu, m)).collect();
            umag.push(magnitude(&reconstruct(velocity, &cu)?));
            let cp: Vec<f64> = pressure.modes[..dp]
                .iter()
                .map(|m| w.ip_unchecked(&frame.p, m))
                .collect();
            p.push(reconstruct(pressure, &cp)?);
        }
        Ok(Reference {
            times: set.times(),
            umag,
            p,
            weights: w,
            d,
            dt_snap: set.dt_snap,
        })
    }

    /// Index of the frame nearest to `t`, if within half a snapshot interval.
    pub fn frame_at(&self, t: f64) -> Result<usize> {
        let tol = 0.5 * self.dt_snap * (1.0 + 1e-9);
        let j = if self.dt_snap > 0.0 {
            let k = ((t - self.times[0]) / self.dt_snap).round();
            if k < 0.0 {
                0
            } else {
                (k as usize).min(self.times.len() - 1)
            }
        } else {
            0
        };
        if (self.times[j] - t).abs() > tol {
            return Err(Error::Misaligned { t, tol });
        }
        Ok(j)
    }

    /// `(ε_u, ε_p)` of reduced coefficients against frame `j`.
    pub fn frame_errors(&self, j: usize, vel: &PodBasis, a: &[f64], pres: &PodBasis, b: &[f64]) -> Result<(f64, f64)> {
        let u = magnitude(&reconstruct(vel, a)?);
        let eu = rel_error(&u, &self.umag[j], &self.weights);
        let ep = if b.is_empty() {
            rel_error(&alloc::vec![0.0; self.p[j].len()], &self.p[j], &self.weights)
        } else {
            rel_error(&reconstruct(pres, b)?, &self.p[j], &self.weights)
        };
        Ok((eu, ep))
    }
}

fn check_bases(reference: &Reference, vel: &PodBasis, pres: &PodBasis) -> Result<()> {
    let n = reference.weights.n_cells();
    ensure!(
        vel.n_cells == n && pres.n_cells == n,
        Dimension,
        "reduced bases do not match the reference grid"
    );
    Ok(())
}

/// Errors of a reduced trajectory. `vel` and `pres` are the reduced bases
/// whose leading modes the trajectory columns multiply.
pub fn error_series(
    traj: &RomTrajectory,
    reference: &Reference,
    vel: &PodBasis,
    pres: &PodBasis,
) -> Result<ErrorSeries> {
    check_bases(reference, vel, pres)?;
    if traj.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    let mut eps_u = Vec::with_capacity(traj.len());
    let mut eps_p = Vec::with_capacity(traj.len());
    for (row, &t) in traj.times.iter().enumerate() {
        let j = reference.frame_at(t)?;
        let (eu, ep) = reference.frame_errors(j, vel, &traj.row_a(row), pres, &traj.row_b(row))?;
        eps_u.push(eu);
        eps_p.push(ep);
    }
    let dt = if traj.len() > 1 {
        traj.times[1] - traj.times[0]
    } else {
        reference.dt_snap
    };
    Ok(ErrorSeries {
        times: traj.times.clone(),
        eps_u,
        eps_p,
        d: reference.d,
        dt,
    })
}

/// Errors of the orthogonal projection of each frame in `frames` onto the
/// first `r` velocity and `q` pressure modes.
pub fn projection_series(
    set: &SnapshotSet,
    reference: &Reference,
    frames: core::ops::Range<usize>,
    vel: &PodBasis,
    r: usize,
    pres: &PodBasis,
    q: usize,
) -> Result<ErrorSeries> {
    check_bases(reference, vel, pres)?;
    ensure!(
        r <= vel.len() && q <= pres.len(),
        Dimension,
        "projection onto ({r}, {q}) modes of ({}, {})",
        vel.len(),
        pres.len()
    );
    ensure!(
        frames.end <= set.frames.len(),
        Dimension,
        "frame range beyond snapshot set"
    );
    if frames.is_empty() {
        return Err(Error::Empty("frame range"));
    }
    let w = &reference.weights;
    let mut times = Vec::new();
    let mut eps_u = Vec::new();
    let mut eps_p = Vec::new();
    for j in frames {
        let frame = &set.frames[j];
        let fu = frame_field(frame, FieldKind::Velocity);
        let a: Vec<f64> = vel.modes[..r].iter().map(|m| w.ip_unchecked(&fu, m)).collect();
        let b: Vec<f64> = pres.modes[..q].iter().map(|m| w.ip_unchecked(&frame.p, m)).collect();
        let (eu, ep) = reference.frame_errors(j, vel, &a, pres, &b)?;
        times.push(frame.t);
        eps_u.push(eu);
        eps_p.push(ep);
    }
    Ok(ErrorSeries {
        times,
        eps_u,
        eps_p,
        d: reference.d,
        dt: set.dt_snap,
    })
}

/// Left Riemann sums `Σ ε(t_j)·Δt` of the fractional errors (percent / 100)
/// over the samples `t0 ≤ t_j < t1`.
pub fn error_integral(series: &ErrorSeries, t0: f64, t1: f64) -> Result<(f64, f64)> {
    if series.is_empty() {
        return Err(Error::Empty("error series"));
    }
    let dt = series.dt;
    ensure!(dt > 0.0, Dimension, "error series has no positive sample spacing");
    let start = (t0 - series.times[0]) / dt;
    let n = ((t1 - t0) / dt).round();
    ensure!(
        start > -1e-6 && (start - start.round()).abs() < 1e-6,
        Dimension,
        "window start {t0} is not a sample time"
    );
    if n < 1.0 {
        return Err(Error::Empty("integration window"));
    }
    let (j0, n) = (start.round() as usize, n as usize);
    ensure!(
        j0 + n <= series.len(),
        Dimension,
        "window [{t0}, {t1}] extends beyond the series"
    );
    let iu: f64 = series.eps_u[j0..j0 + n].iter().sum::<f64>() * dt / 100.0;
    let ip: f64 = series.eps_p[j0..j0 + n].iter().sum::<f64>() * dt / 100.0;
    Ok((iu, ip))
}

/// Error integrals over the whole series.
pub fn total_integral(series: &ErrorSeries) -> Result<(f64, f64)> {
    if series.is_empty() {
        return Err(Error::Empty("error series"));
    }
    let t0 = series.times[0];
    error_integral(series, t0, t0 + series.len() as f64 * series.dt)
}
