use nalgebra::DMatrix;
use proptest::prelude::*;
use romforge_core::fom::{run_fom, FomConfig, SnapshotSet};
use romforge_core::grid::{BoundarySet, GridSpec};
use romforge_core::pod::{pod, usable_rank, FieldKind, PodBasis};
use romforge_core::report::*;
use romforge_core::romsolve::RomTrajectory;
use romforge_core::snapshots::{project_coeffs, reconstruct};
use romforge_core::Error;

fn flow() -> SnapshotSet {
    let grid = GridSpec::new(24, 12, 2.0, 1.0, [0.5, 0.5], 0.15, BoundarySet::CHANNEL).unwrap();
    let cfg = FomConfig {
        nu: 0.25 / 150.0,
        dt_fom: 2e-3,
        sample_every: 10,
        n_samples: 30,
        spinup_steps: Some(100),
        perturbation: 0.3,
        ..FomConfig::default()
    };
    run_fom(&grid, &cfg).unwrap()
}

fn bases(set: &SnapshotSet) -> (PodBasis, PodBasis) {
    let dv = usable_rank(set, FieldKind::Velocity);
    let dp = usable_rank(set, FieldKind::Pressure);
    (
        pod(set, FieldKind::Velocity, dv).unwrap(),
        pod(set, FieldKind::Pressure, dp).unwrap(),
    )
}

fn trajectory(set: &SnapshotSet, a: DMatrix<f64>, b: DMatrix<f64>) -> RomTrajectory {
    let m = a.nrows();
    RomTrajectory {
        times: set.times(),
        a,
        b,
        g: DMatrix::zeros(m, 0),
        newton_iters: vec![0; m],
        residuals: vec![0.0; m],
        failure: None,
    }
}

#[test]
fn full_rank_projection_has_zero_error() {
    let set = flow();
    let (vel, pres) = bases(&set);
    let d = vel.len().max(pres.len());
    let reference = Reference::new(&set, &vel, &pres, d).unwrap();
    let a = project_coeffs(&set, &vel, vel.len()).unwrap().values;
    let b = project_coeffs(&set, &pres, pres.len()).unwrap().values;
    let s = error_series(&trajectory(&set, a, b), &reference, &vel, &pres).unwrap();
    assert!(s.max_u() <= 1e-10 && s.max_p() <= 1e-10, "{} {}", s.max_u(), s.max_p());
}

#[test]
fn zero_trajectory_is_exactly_one_hundred_percent() {
    let set = flow();
    let (vel, pres) = bases(&set);
    let reference = Reference::new(&set, &vel, &pres, 50).unwrap();
    let m = set.frames.len();
    let s = error_series(
        &trajectory(&set, DMatrix::zeros(m, 3), DMatrix::zeros(m, 2)),
        &reference,
        &vel,
        &pres,
    )
    .unwrap();
    assert!(s.eps_u.iter().chain(&s.eps_p).all(|e| *e == 100.0));
}

/// Weighted L² distance between the rank-`n` and full projections of the
/// stacked velocity, relative to the full projection.
fn vector_error(set: &SnapshotSet, vel: &PodBasis, j: usize, n: usize) -> f64 {
    let c = project_coeffs(set, vel, vel.len()).unwrap().row(j);
    let full = reconstruct(vel, &c).unwrap();
    let part = reconstruct(vel, &c[..n]).unwrap();
    let k = set.weights.len();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, (f, p)) in full.iter().zip(&part).enumerate() {
        let w = set.weights[i % k];
        num += w * (f - p) * (f - p);
        den += w * f * f;
    }
    (num / den).sqrt()
}

#[test]
fn fewer_modes_never_lower_the_projection_error() {
    let set = flow();
    let (vel, pres) = bases(&set);
    let reference = Reference::new(&set, &vel, &pres, 50).unwrap();
    let m = set.frames.len();
    for n in [8, 4, 2] {
        let fine = projection_series(&set, &reference, 0..m, &vel, n, &pres, n).unwrap();
        let coarse = projection_series(&set, &reference, 0..m, &vel, n / 2, &pres, n / 2).unwrap();
        for j in 0..m {
            assert!(coarse.eps_p[j] >= fine.eps_p[j] - 1e-9, "n = {n}, frame {j}");
            // Magnitudes need not be monotone; the vector field error bounds
            // them and is.
            let (vf, vc) = (vector_error(&set, &vel, j, n), vector_error(&set, &vel, j, n / 2));
            assert!(vc >= vf - 1e-12, "n = {n}, frame {j}");
            assert!(fine.eps_u[j] <= 100.0 * vf * (1.0 + 1e-9) + 1e-12);
        }
    }
}

#[test]
fn projection_series_matches_error_series_of_projected_coefficients() {
    let set = flow();
    let (vel, pres) = bases(&set);
    let reference = Reference::new(&set, &vel, &pres, 50).unwrap();
    let m = set.frames.len();
    let a = project_coeffs(&set, &vel, 3).unwrap().values;
    let b = project_coeffs(&set, &pres, 2).unwrap().values;
    let s = error_series(&trajectory(&set, a, b), &reference, &vel, &pres).unwrap();
    let p = projection_series(&set, &reference, 0..m, &vel, 3, &pres, 2).unwrap();
    for j in 0..m {
        assert!((s.eps_u[j] - p.eps_u[j]).abs() <= 1e-12 && (s.eps_p[j] - p.eps_p[j]).abs() <= 1e-12);
    }
}

#[test]
fn misaligned_trajectory_is_rejected() {
    let set = flow();
    let (vel, pres) = bases(&set);
    let reference = Reference::new(&set, &vel, &pres, 50).unwrap();
    let m = set.frames.len();
    let mut t = trajectory(&set, DMatrix::zeros(m, 1), DMatrix::zeros(m, 1));
    for x in t.times.iter_mut() {
        *x += 0.6 * set.dt_snap;
    }
    assert!(matches!(
        error_series(&t, &reference, &vel, &pres),
        Err(Error::Misaligned { .. })
    ));
}

fn constant_series(eps: f64, dt: f64, n: usize) -> ErrorSeries {
    ErrorSeries {
        times: (0..n).map(|j| j as f64 * dt).collect(),
        eps_u: vec![eps; n],
        eps_p: vec![2.0 * eps; n],
        d: 50,
        dt,
    }
}

#[test]
fn constant_integrand() {
    let s = constant_series(5.0, 0.004, 501);
    let (iu, ip) = error_integral(&s, 0.0, 2.0).unwrap();
    assert!((iu - 0.1).abs() <= 1e-12 && (ip - 0.2).abs() <= 1e-12, "{iu} {ip}");
}

#[test]
fn single_sample_window() {
    let mut s = constant_series(5.0, 0.004, 10);
    s.eps_u[3] = 7.0;
    let (iu, _) = error_integral(&s, 3.0 * 0.004, 4.0 * 0.004).unwrap();
    assert!((iu - 0.07 * 0.004).abs() <= 1e-15);
}

#[test]
fn empty_windows_and_series_are_errors() {
    let s = constant_series(5.0, 0.004, 10);
    assert!(matches!(error_integral(&s, 0.008, 0.008), Err(Error::Empty(_))));
    assert!(error_integral(&s, 0.0, 1.0).is_err());
    let e = ErrorSeries {
        times: vec![],
        eps_u: vec![],
        eps_p: vec![],
        d: 1,
        dt: 0.1,
    };
    assert!(matches!(error_integral(&e, 0.0, 1.0), Err(Error::Empty(_))));
    assert!(total_integral(&e).is_err());
}

proptest! {
    #[test]
    fn left_sum_is_close_to_trapezoid(vals in proptest::collection::vec(0.0f64..100.0, 2..200), dt in 0.001f64..0.1) {
        let n = vals.len();
        let s = ErrorSeries {
            times: (0..n).map(|j| j as f64 * dt).collect(),
            eps_u: vals.clone(),
            eps_p: vals.clone(),
            d: 10,
            dt,
        };
        let (left, _) = error_integral(&s, 0.0, (n - 1) as f64 * dt).unwrap();
        let trap: f64 = vals.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt / 100.0).sum();
        let emax = vals.iter().fold(0.0f64, |m, v| m.max(*v)) / 100.0;
        prop_assert!((left - trap).abs() <= emax * dt + 1e-12);
    }

    #[test]
    fn total_integral_covers_every_sample(vals in proptest::collection::vec(0.0f64..100.0, 1..50)) {
        let s = ErrorSeries {
            times: (0..vals.len()).map(|j| 1.0 + j as f64 * 0.02).collect(),
            eps_u: vals.clone(),
            eps_p: vals.clone(),
            d: 10,
            dt: 0.02,
        };
        let (iu, _) = total_integral(&s).unwrap();
        let want: f64 = vals.iter().sum::<f64>() * 0.02 / 100.0;
        prop_assert!((iu - want).abs() <= 1e-12 * (1.0 + want));
    }
}
