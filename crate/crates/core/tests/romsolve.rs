use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use romforge_core::closure::{ClosureModel, ClosureVariant};
use romforge_core::evmodel::{EddyViscosityModel, ZeroEv};
use romforge_core::galerkin::{RomOperators, Tensor3};
use romforge_core::romsolve::*;
use romforge_core::Result;

fn rmat(rng: &mut ChaCha8Rng, n: usize, m: usize, s: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| s * rng.gen_range(-1.0..1.0))
}

fn rvec(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| s * rng.gen_range(-1.0..1.0)).collect()
}

fn rtens(rng: &mut ChaCha8Rng, d: [usize; 3], s: f64) -> Tensor3 {
    let mut t = Tensor3::zeros(d[0], d[1], d[2]);
    for x in t.data.iter_mut() {
        *x = s * rng.gen_range(-1.0..1.0);
    }
    t
}

/// Random operators with a dissipative linear part and `H = Pᵀ`.
fn random_ops(n_u: usize, n_sup: usize, q: usize, n_nut: usize, n_bc: usize, seed: u64) -> RomOperators {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = n_u + n_sup;
    let mut ops = RomOperators::zeros(n_u, n_sup, q, n_nut, n_bc);
    let x = rmat(&mut rng, r, r, 0.3);
    ops.vel.b = -(DMatrix::identity(r, r) + x.transpose() * &x);
    ops.vel.bt = rmat(&mut rng, r, r, 0.05);
    ops.vel.c = rtens(&mut rng, [r, r, r], 0.1);
    ops.vel.p = rmat(&mut rng, q, r, 1.0);
    ops.vel.h = ops.vel.p.transpose();
    for k in 0..n_bc {
        ops.vel.dk[k] = DVector::from_vec(rvec(&mut rng, r, 0.1));
        let e = rmat(&mut rng, r, r, 0.1);
        ops.vel.ek[k] = e.transpose() * e;
    }
    let y = rmat(&mut rng, q, q, 0.3);
    ops.ppe.d = DMatrix::identity(q, q) + y.transpose() * y;
    ops.ppe.g = rtens(&mut rng, [q, r, r], 0.1);
    ops.ppe.n = rmat(&mut rng, q, r, 0.1);
    ops.ppe.l = DVector::from_vec(rvec(&mut rng, q, 0.1));
    ops.turb.ct1 = rtens(&mut rng, [r, n_nut, r], 0.1);
    ops.turb.ct2 = rtens(&mut rng, [r, n_nut, r], 0.1);
    ops.turb.ct3 = rtens(&mut rng, [q, n_nut, r], 0.1);
    ops.turb.ct4 = rtens(&mut rng, [q, n_nut, r], 0.1);
    ops.nu = 0.1;
    ops.tau = 2.0;
    ops.u_bc = rvec(&mut rng, n_bc, 1.0);
    ops
}

fn random_closure(variant: ClosureVariant, r: usize, q: usize, seed: u64) -> ClosureModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ClosureModel::zero(variant, r, q);
    let n = m.n_in();
    m.a_tilde = rmat(&mut rng, n, n, 0.1);
    m.b_tilde = rtens(&mut rng, [n, n, n], 0.05);
    m
}

/// Independent straight-line evaluation of the stacked residual.
#[allow(clippy::too_many_arguments)]
fn oracle(
    ops: &RomOperators,
    closure: Option<&ClosureModel>,
    g: &[f64],
    flags: (bool, bool, bool),
    ppe: bool,
    a: &[f64],
    b: &[f64],
    prev: &[f64],
    prev2: Option<&[f64]>,
    dt: f64,
) -> Vec<f64> {
    let (cu, cp, ct) = flags;
    let r = a.len();
    let q = b.len();
    let adot: Vec<f64> = (0..r)
        .map(|i| match prev2 {
            Some(p2) => (3.0 * a[i] - 4.0 * prev[i] + p2[i]) / (2.0 * dt),
            None => (a[i] - prev[i]) / dt,
        })
        .collect();
    let x: Vec<f64> = a.iter().chain(b).copied().collect();
    let tau = closure.map(|m| {
        let n = m.n_in();
        let xs = &x[..n];
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for k in 0..n {
                    s += m.a_tilde[(i, k)] * xs[k];
                    for l in 0..n {
                        s += m.b_tilde.get(i, k, l) * xs[k] * xs[l];
                    }
                }
                s
            })
            .collect::<Vec<f64>>()
    });
    let mut out = vec![0.0; r + q];
    for i in 0..r {
        let mut s = 0.0;
        for j in 0..r {
            s += ops.vel.m[(i, j)] * adot[j];
            s -= ops.nu * (ops.vel.b[(i, j)] + ops.vel.bt[(i, j)]) * a[j];
            for k in 0..r {
                s += ops.vel.c.get(i, j, k) * a[j] * a[k];
            }
        }
        for k in 0..q {
            s += ops.vel.h[(i, k)] * b[k];
        }
        for k in 0..ops.n_bc() {
            let mut ea = 0.0;
            for j in 0..r {
                ea += ops.vel.ek[k][(i, j)] * a[j];
            }
            s -= ops.tau * (ops.u_bc[k] * ops.vel.dk[k][i] - ea);
        }
        if cu {
            s -= tau.as_ref().unwrap()[i];
        }
        if ct {
            for (e, ge) in g.iter().enumerate() {
                for j in 0..r {
                    s -= ge * (ops.turb.ct1.get(i, e, j) + ops.turb.ct2.get(i, e, j)) * a[j];
                }
            }
        }
        out[i] = s;
    }
    for i in 0..q {
        let mut s = 0.0;
        if ppe {
            for k in 0..q {
                s += ops.ppe.d[(i, k)] * b[k];
            }
            for j in 0..r {
                for k in 0..r {
                    s += ops.ppe.g.get(i, j, k) * a[j] * a[k];
                }
                s -= ops.nu * ops.ppe.n[(i, j)] * a[j];
            }
            s -= ops.ppe.l[i];
            if ct {
                for (e, ge) in g.iter().enumerate() {
                    for j in 0..r {
                        s -= ge * (ops.turb.ct3.get(i, e, j) + ops.turb.ct4.get(i, e, j)) * a[j];
                    }
                }
            }
            if cp {
                s += tau.as_ref().unwrap()[r + i];
            }
        } else {
            for j in 0..r {
                s += ops.vel.p[(i, j)] * a[j];
            }
        }
        out[r + i] = s;
    }
    out
}

fn cfg(formulation: Formulation, flags: (bool, bool, bool), scheme: Scheme, dt: f64, n_steps: usize) -> RomRunConfig {
    RomRunConfig {
        formulation,
        c_u: flags.0,
        c_p: flags.1,
        c_t: flags.2,
        scheme,
        dt,
        n_steps,
        ..RomRunConfig::default()
    }
}

fn max_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn residuals_match_straight_line_oracle(seed in 0u64..10_000, cu: bool, cp: bool, ct: bool, bdf: bool, ppe: bool) {
        let (n_u, n_sup, q, n_nut) = (3, if ppe { 0 } else { 2 }, 3, 2);
        let r = n_u + n_sup;
        let ops = random_ops(n_u, n_sup, q, n_nut, 2, seed);
        let variant = if ppe { ClosureVariant::PpeJoint } else { ClosureVariant::SupUnconstrained };
        let closure = random_closure(variant, r, q, seed + 1);
        let cp = cp && ppe;
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
        let a = rvec(&mut rng, r, 1.0);
        let b = rvec(&mut rng, q, 1.0);
        let prev = rvec(&mut rng, r, 1.0);
        let prev2 = rvec(&mut rng, r, 1.0);
        let g = rvec(&mut rng, n_nut, 0.5);
        let form = if ppe { Formulation::Ppe } else { Formulation::Sup };
        let scheme = if bdf { Scheme::Order2 } else { Scheme::Order1 };
        let c = cfg(form, (cu, cp, ct), scheme, 0.01, 1);
        let ctx = StepContext {
            ops: &ops,
            closure: Some(&closure),
            g: &g,
            cfg: &c,
            scheme,
            hist: History { prev: &prev, prev2: Some(&prev2) },
        };
        let got = if ppe { residual_ppe(&ctx, &a, &b) } else { residual_sup(&ctx, &a, &b) }.unwrap();
        let p2 = if bdf { Some(prev2.as_slice()) } else { None };
        let want = oracle(&ops, Some(&closure), &g, (cu, cp, ct), ppe, &a, &b, &prev, p2, 0.01);
        let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_diff(&got, &want) <= 1e-12 * scale, "{:?} vs {:?}", got, want);
    }

    #[test]
    fn zero_state_has_zero_residual(seed in 0u64..10_000, ppe: bool) {
        let mut ops = random_ops(2, 1, 2, 1, 1, seed);
        ops.u_bc = vec![0.0];
        ops.ppe.l = DVector::zeros(2);
        let z = vec![0.0; 3];
        let c = cfg(if ppe { Formulation::Ppe } else { Formulation::Sup }, (false, false, true), Scheme::Order2, 0.1, 1);
        let ctx = StepContext {
            ops: &ops,
            closure: None,
            g: &[0.3],
            cfg: &c,
            scheme: Scheme::Order2,
            hist: History { prev: &z, prev2: Some(&z) },
        };
        let res = if ppe { residual_ppe(&ctx, &z, &[0.0; 2]) } else { residual_sup(&ctx, &z, &[0.0; 2]) }.unwrap();
        prop_assert!(res.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn vanishing_eddy_viscosity_term(seed in 0u64..10_000) {
        let ops = random_ops(2, 0, 2, 2, 1, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rvec(&mut rng, 2, 1.0);
        let b = rvec(&mut rng, 2, 1.0);
        let prev = rvec(&mut rng, 2, 1.0);
        let on = cfg(Formulation::Ppe, (false, false, true), Scheme::Order1, 0.1, 1);
        let off = cfg(Formulation::Ppe, (false, false, false), Scheme::Order1, 0.1, 1);
        let ctx = |c| StepContext { ops: &ops, closure: None, g: &[0.0, 0.0], cfg: c, scheme: Scheme::Order1, hist: History { prev: &prev, prev2: None } };
        prop_assert_eq!(residual_ppe(&ctx(&on), &a, &b).unwrap(), residual_ppe(&ctx(&off), &a, &b).unwrap());
    }
}

/// `ȧ = −a` as a one-mode system: `M = 1`, `ν(B + Bᵀ) = −1`.
fn decay_ops() -> RomOperators {
    let mut ops = RomOperators::zeros(1, 0, 0, 0, 0);
    ops.nu = 1.0;
    ops.vel.b = DMatrix::from_element(1, 1, -0.5);
    ops.vel.bt = DMatrix::from_element(1, 1, -0.5);
    ops
}

fn final_error(scheme: Scheme, dt: f64) -> f64 {
    let n = (1.0 / dt).round() as usize;
    let c = cfg(Formulation::Sup, (false, false, false), scheme, dt, n);
    let init = RomInit {
        a0: vec![1.0],
        b0: None,
    };
    let traj = run_rom(&decay_ops(), Closures::default(), &c, &init)
        .unwrap()
        .into_result()
        .unwrap();
    (traj.a[(n, 0)] - (-1.0f64).exp()).abs()
}

fn fitted_slope(scheme: Scheme) -> f64 {
    let dts: [f64; 3] = [0.02, 0.01, 0.005];
    let pts: Vec<(f64, f64)> = dts.iter().map(|&h| (h.ln(), final_error(scheme, h).ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn implicit_euler_is_first_order() {
    let s = fitted_slope(Scheme::Order1);
    assert!((s - 1.0).abs() <= 0.15, "slope {s}");
}

#[test]
fn bdf2_is_second_order() {
    let s = fitted_slope(Scheme::Order2);
    assert!((s - 2.0).abs() <= 0.15, "slope {s}");
}

#[test]
fn step_at_fixed_point_returns_same_state() {
    let mut ops = random_ops(2, 1, 2, 0, 0, 7);
    ops.vel.c = Tensor3::zeros(3, 3, 3);
    ops.vel.b = DMatrix::zeros(3, 3);
    ops.vel.bt = DMatrix::zeros(3, 3);
    let c = cfg(Formulation::Sup, (false, false, false), Scheme::Order1, 0.1, 1);
    // P a = 0 for a in the null space of P; b = 0 balances the momentum.
    let p = &ops.vel.p;
    let (r0, r1) = (p.row(0).transpose(), p.row(1).transpose());
    let a: Vec<f64> = r0.cross(&r1).iter().copied().collect();
    let ctx = StepContext {
        ops: &ops,
        closure: None,
        g: &[],
        cfg: &c,
        scheme: Scheme::Order1,
        hist: History { prev: &a, prev2: None },
    };
    let x0: Vec<f64> = a.iter().copied().chain([0.0, 0.0]).collect();
    let r0 = residual_sup(&ctx, &a, &[0.0, 0.0]).unwrap();
    assert!(r0.iter().all(|v| v.abs() < 1e-12));
    let out = step(&ctx, &x0).unwrap();
    assert_eq!(out.iterations, 0);
    assert_eq!(out.x, x0);
}

/// `ȧ_i = −Σ C_ijk a_j a_k` with `Σ_i a_i C_ijk a_j a_k ≡ 0`.
fn energy_drift(dt: f64) -> f64 {
    let mut ops = RomOperators::zeros(3, 0, 0, 0, 0);
    let alpha = [1.0, -0.4, -0.6];
    for (i, al) in alpha.iter().enumerate() {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        ops.vel.c.set(i, j, k, -0.5 * al);
        ops.vel.c.set(i, k, j, -0.5 * al);
    }
    let t = 2.0;
    let n = (t / dt).round() as usize;
    let c = cfg(Formulation::Sup, (false, false, false), Scheme::Order2, dt, n);
    let a0 = vec![1.0, 0.5, -0.3];
    let traj = run_rom(
        &ops,
        Closures::default(),
        &c,
        &RomInit {
            a0: a0.clone(),
            b0: None,
        },
    )
    .unwrap()
    .into_result()
    .unwrap();
    let e0: f64 = a0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let e1 = traj.a.row(n).norm();
    (e1 - e0).abs() / t
}

#[test]
fn bdf2_energy_drift_is_second_order() {
    let d1 = energy_drift(0.02);
    let d2 = energy_drift(0.01);
    assert!(d1 <= 0.05 * 0.02 * 0.02 / 1e-4, "drift {d1}");
    assert!(d1 / d2 > 3.0, "drift ratio {} ({d1}, {d2})", d1 / d2);
}

#[test]
fn zero_inflow_and_zero_state_stay_zero() {
    for form in [Formulation::Sup, Formulation::Ppe] {
        let n_sup = if form == Formulation::Sup { 2 } else { 0 };
        let mut ops = random_ops(3, n_sup, 2, 1, 2, 3);
        ops.u_bc = vec![0.0; 2];
        ops.ppe.l = DVector::zeros(2);
        let c = cfg(form, (false, false, false), Scheme::Order2, 0.05, 30);
        let traj = run_rom(
            &ops,
            Closures::default(),
            &c,
            &RomInit {
                a0: vec![0.0; 3 + n_sup],
                b0: None,
            },
        )
        .unwrap();
        assert!(!traj.failed());
        assert_eq!(traj.len(), 31);
        assert!(traj.a.iter().chain(traj.b.iter()).all(|v| *v == 0.0));
    }
}

fn run(
    ops: &RomOperators,
    closure: Option<&ClosureModel>,
    ev: Option<&dyn EddyViscosityModel>,
    c: &RomRunConfig,
    a0: &[f64],
) -> RomTrajectory {
    run_rom(
        ops,
        Closures { closure, ev },
        c,
        &RomInit {
            a0: a0.to_vec(),
            b0: None,
        },
    )
    .unwrap()
}

#[test]
fn switch_algebra_is_bit_identical() {
    let a0 = [0.3, -0.2, 0.1];
    // Supremizer runs.
    let ops = random_ops(2, 1, 2, 2, 1, 11);
    let base = run(
        &ops,
        None,
        None,
        &cfg(Formulation::Sup, (false, false, false), Scheme::Order2, 0.02, 40),
        &a0,
    );
    assert!(!base.failed());
    let zc = ClosureModel::zero(ClosureVariant::SupConstrained, 3, 2);
    let with_cu = run(
        &ops,
        Some(&zc),
        None,
        &cfg(Formulation::Sup, (true, false, false), Scheme::Order2, 0.02, 40),
        &a0,
    );
    assert_eq!(base.a, with_cu.a);
    assert_eq!(base.b, with_cu.b);
    let zev = ZeroEv { n_in: 2, n_out: 2 };
    let with_ct = run(
        &ops,
        None,
        Some(&zev),
        &cfg(Formulation::Sup, (false, false, true), Scheme::Order2, 0.02, 40),
        &a0,
    );
    assert_eq!(base.a, with_ct.a);
    assert_eq!(base.b, with_ct.b);

    // Pressure Poisson runs.
    let ops = random_ops(3, 0, 2, 2, 1, 12);
    let base = run(
        &ops,
        None,
        None,
        &cfg(Formulation::Ppe, (false, false, false), Scheme::Order2, 0.02, 40),
        &a0,
    );
    assert!(!base.failed());
    let zj = ClosureModel::zero(ClosureVariant::PpeJoint, 3, 2);
    for flags in [(true, false, false), (false, true, false), (true, true, false)] {
        let t = run(
            &ops,
            Some(&zj),
            None,
            &cfg(Formulation::Ppe, flags, Scheme::Order2, 0.02, 40),
            &a0,
        );
        assert_eq!(base.a, t.a, "{flags:?}");
        assert_eq!(base.b, t.b, "{flags:?}");
    }
    let zev = ZeroEv { n_in: 3, n_out: 2 };
    let t = run(
        &ops,
        Some(&zj),
        Some(&zev),
        &cfg(Formulation::Ppe, (true, true, true), Scheme::Order2, 0.02, 40),
        &a0,
    );
    assert_eq!(base.a, t.a);
    assert_eq!(base.b, t.b);
    assert_eq!(t.g.ncols(), 2);
}

#[test]
fn supremizer_runs_keep_the_constraint() {
    let ops = random_ops(3, 2, 2, 2, 2, 21);
    let closure = random_closure(ClosureVariant::SupUnconstrained, 5, 2, 22);
    struct Lin;
    impl EddyViscosityModel for Lin {
        fn n_in(&self) -> usize {
            3
        }
        fn n_out(&self) -> usize {
            2
        }
        fn predict(&self, a: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.1 * a[0], 0.05 * a[1] * a[2]])
        }
    }
    let c = cfg(Formulation::Sup, (true, false, true), Scheme::Order2, 0.01, 200);
    let a0 = [0.5, -0.3, 0.2, 0.1, 0.4];
    let traj = run(&ops, Some(&closure), Some(&Lin), &c, &a0);
    assert!(!traj.failed(), "{:?}", traj.failure);
    for j in 1..traj.len() {
        let pa = &ops.vel.p * DVector::from_vec(traj.row_a(j));
        assert!(pa.norm() <= 10.0 * c.newton.tol, "step {j}: {}", pa.norm());
    }
    assert!(traj.residuals.iter().all(|r| *r <= c.newton.tol));
    assert_eq!(traj.g.ncols(), 2);
    assert_eq!(traj.g[(0, 0)], 0.1 * a0[0]);
}

#[test]
fn schemes_converge_to_each_other() {
    let ops = random_ops(3, 0, 2, 0, 1, 31);
    let a0 = [0.4, -0.3, 0.2];
    let t_end = 0.4;
    let diff = |dt: f64| {
        let n = (t_end / dt).round() as usize;
        let t1 = run(
            &ops,
            None,
            None,
            &cfg(Formulation::Ppe, (false, false, false), Scheme::Order1, dt, n),
            &a0,
        );
        let t2 = run(
            &ops,
            None,
            None,
            &cfg(Formulation::Ppe, (false, false, false), Scheme::Order2, dt, n),
            &a0,
        );
        (t1.a.clone() - t2.a.clone()).abs().max()
    };
    let h = 0.005;
    let (d4, d2, d1) = (diff(4.0 * h), diff(2.0 * h), diff(h));
    assert!(d1 < d2 && d2 < d4, "{d4} {d2} {d1}");
    let c = d4 / (4.0 * h);
    assert!(d2 <= 1.1 * c * 2.0 * h && d1 <= 1.1 * c * h, "{d4} {d2} {d1}");
}

#[test]
fn pressure_formulation_initialises_b_from_the_pressure_block() {
    let ops = random_ops(3, 0, 2, 0, 1, 41);
    let a0 = [0.2, 0.1, -0.4];
    let c = cfg(Formulation::Ppe, (false, false, false), Scheme::Order1, 0.01, 0);
    let traj = run(&ops, None, None, &c, &a0);
    let b0 = traj.row_b(0);
    let ctx = StepContext {
        ops: &ops,
        closure: None,
        g: &[],
        cfg: &c,
        scheme: Scheme::Order1,
        hist: History { prev: &a0, prev2: None },
    };
    let res = residual_ppe(&ctx, &a0, &b0).unwrap();
    assert!(res[3..].iter().all(|v| v.abs() <= 1e-10), "{res:?}");
}

#[test]
fn failed_step_returns_partial_trajectory() {
    let mut ops = random_ops(2, 0, 0, 0, 0, 51);
    ops.vel.c = Tensor3::zeros(2, 2, 2);
    ops.vel.c.set(0, 0, 0, 50.0);
    ops.vel.c.set(1, 1, 1, 50.0);
    let mut c = cfg(Formulation::Sup, (false, false, false), Scheme::Order1, 0.5, 50);
    c.newton.max_iter = 2;
    let traj = run(&ops, None, None, &c, &[-3.0, -2.0]);
    assert!(traj.failed());
    assert!(traj.len() < 51);
    assert_eq!(traj.a.nrows(), traj.len());
    assert!(traj.clone().into_result().is_err());
}

#[test]
fn invalid_switches_are_rejected() {
    let ops = random_ops(2, 1, 1, 1, 0, 61);
    let a0 = [0.0; 3];
    let init = RomInit {
        a0: a0.to_vec(),
        b0: None,
    };
    let c = cfg(Formulation::Sup, (false, true, false), Scheme::Order1, 0.1, 1);
    assert!(matches!(
        run_rom(&ops, Closures::default(), &c, &init),
        Err(romforge_core::Error::Config(_))
    ));
    let c = cfg(Formulation::Sup, (true, false, false), Scheme::Order1, 0.1, 1);
    assert!(matches!(
        run_rom(&ops, Closures::default(), &c, &init),
        Err(romforge_core::Error::Config(_))
    ));
    let c = cfg(Formulation::Sup, (false, false, true), Scheme::Order1, 0.1, 1);
    assert!(matches!(
        run_rom(&ops, Closures::default(), &c, &init),
        Err(romforge_core::Error::Config(_))
    ));
    let zj = ClosureModel::zero(ClosureVariant::PpeJoint, 3, 1);
    let c = cfg(Formulation::Sup, (true, false, false), Scheme::Order1, 0.1, 1);
    let res = run_rom(
        &ops,
        Closures {
            closure: Some(&zj),
            ev: None,
        },
        &c,
        &init,
    );
    assert!(matches!(res, Err(romforge_core::Error::Config(_))));
}

#[test]
fn flag_labels() {
    let c = cfg(Formulation::Ppe, (true, true, true), Scheme::Order2, 0.1, 1);
    assert_eq!(flags_label(&c), "cu+cp+ct");
    assert_eq!(flags_label(&RomRunConfig::default()), "none");
}
