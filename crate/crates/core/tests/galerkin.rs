mod oracle;

use nalgebra::DMatrix;
use oracle::{naive_ops, small_grid, wiggly};
use romforge_core::galerkin::{assemble_ppe_ops, assemble_turb_tensors, assemble_velocity_ops, RomOperators, Tensor3};
use romforge_core::grid::{BoundarySet, EdgeKind, GridSpec};
use romforge_core::pod::{FieldKind, PodBasis};
use romforge_core::snapshots::InnerProductWeights;

fn basis(kind: FieldKind, n_cells: usize, modes: Vec<Vec<f64>>) -> PodBasis {
    let k = modes.len();
    PodBasis {
        kind,
        n_cells,
        modes,
        singular_values: vec![1.0; k],
        n_sup: 0,
    }
}

fn stacked(u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut m = u.to_vec();
    m.extend_from_slice(v);
    m
}

fn close_mat(a: &DMatrix<f64>, b: &[Vec<f64>], tol: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let d = (a[(i, j)] - b[i][j]).abs() / (1.0 + b[i][j].abs());
            worst = worst.max(d);
        }
    }
    assert!(worst <= tol, "matrix mismatch {worst:e}");
    worst
}

fn close_tens(a: &Tensor3, b: &[Vec<Vec<f64>>], tol: f64) {
    let [d0, d1, d2] = a.dims;
    assert_eq!((d0, d1, d2), (b.len(), b[0].len(), b[0][0].len()));
    for i in 0..d0 {
        for j in 0..d1 {
            for k in 0..d2 {
                let (x, y) = (a.get(i, j, k), b[i][j][k]);
                assert!(
                    (x - y).abs() <= tol * (1.0 + y.abs()),
                    "tensor ({i},{j},{k}): {x} vs {y}"
                );
            }
        }
    }
}

fn random_case(
    g: &GridSpec,
) -> (
    PodBasis,
    PodBasis,
    PodBasis,
    Vec<(Vec<f64>, Vec<f64>)>,
    Vec<Vec<f64>>,
    Vec<Vec<f64>>,
) {
    let n = g.n_cells();
    let phi: Vec<(Vec<f64>, Vec<f64>)> = (0..2)
        .map(|k| (wiggly(g, 1.0 + k as f64), wiggly(g, 7.0 + k as f64)))
        .collect();
    let chi: Vec<Vec<f64>> = (0..2).map(|k| wiggly(g, 13.0 + k as f64)).collect();
    let eta: Vec<Vec<f64>> = (0..2).map(|k| wiggly(g, 21.0 + k as f64)).collect();
    let vb = basis(FieldKind::Velocity, n, phi.iter().map(|(u, v)| stacked(u, v)).collect());
    let pb = basis(FieldKind::Pressure, n, chi.clone());
    let eb = basis(FieldKind::EddyViscosity, n, eta.clone());
    (vb, pb, eb, phi, chi, eta)
}

#[test]
fn operators_match_naive_loops() {
    let cavityish = BoundarySet {
        west: EdgeKind::NoSlip,
        east: EdgeKind::Outflow,
        south: EdgeKind::FreeSlip,
        north: EdgeKind::NoSlip,
    };
    for bc in [BoundarySet::CHANNEL, BoundarySet::CAVITY, cavityish] {
        let g = small_grid(bc);
        let w = InnerProductWeights(g.weights());
        let (vb, pb, eb, phi, chi, eta) = random_case(&g);
        let want = naive_ops(&g, &w.0, &phi, &chi, &eta);
        let v = assemble_velocity_ops(&vb, &pb, &g, &w).unwrap();
        let p = assemble_ppe_ops(&vb, &pb, &g, &w).unwrap();
        let t = assemble_turb_tensors(&vb, &pb, &eb, &g, &w).unwrap();
        let tol = 1e-12;
        close_mat(&v.m, &want.m, tol);
        close_mat(&v.b, &want.b, tol);
        close_mat(&v.bt, &want.bt, tol);
        close_mat(&v.h, &want.h, tol);
        close_mat(&v.p, &want.p, tol);
        close_mat(&p.d, &want.d, tol);
        close_mat(&p.n, &want.n, tol);
        close_tens(&v.c, &want.c, tol);
        close_tens(&p.g, &want.g, tol);
        close_tens(&t.ct1, &want.ct[0], tol);
        close_tens(&t.ct2, &want.ct[1], tol);
        close_tens(&t.ct3, &want.ct[2], tol);
        close_tens(&t.ct4, &want.ct[3], tol);
        assert!(p.l.iter().all(|x| *x == 0.0));
        if bc.west == EdgeKind::Inflow {
            close_mat(&v.ek[0], &want.e, tol);
            for i in 0..2 {
                assert!((v.dk[0][i] - want.dvec[i]).abs() < tol);
            }
        } else {
            assert!(v.ek.is_empty() && v.dk.is_empty());
        }
    }
}

#[test]
fn orthonormal_basis_gives_identity_mass() {
    let g = GridSpec::new(16, 8, 2.0, 1.0, [0.6, 0.5], 0.2, BoundarySet::CHANNEL).unwrap();
    let w = InnerProductWeights(g.weights());
    let n = g.n_cells();
    let mut modes: Vec<Vec<f64>> = Vec::new();
    for k in 0..4 {
        let mut m = stacked(&wiggly(&g, k as f64), &wiggly(&g, 10.0 + k as f64));
        for b in &modes {
            let c = w.ip(&m, b).unwrap();
            m.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let nrm = w.ip(&m, &m).unwrap().sqrt();
        m.iter_mut().for_each(|x| *x /= nrm);
        modes.push(m);
    }
    let vb = basis(FieldKind::Velocity, n, modes);
    let pb = basis(FieldKind::Pressure, n, vec![wiggly(&g, 3.0)]);
    let v = assemble_velocity_ops(&vb, &pb, &g, &w).unwrap();
    let defect = (&v.m - DMatrix::identity(4, 4)).abs().max();
    assert!(defect <= 1e-10, "{defect}");
}

#[test]
fn constant_mode_convection_vanishes_on_channel() {
    let g = GridSpec::new(12, 10, 1.2, 1.0, [0.5, 0.5], 0.0, BoundarySet::CHANNEL).unwrap();
    let n = g.n_cells();
    let vb = basis(FieldKind::Velocity, n, vec![stacked(&vec![1.0; n], &vec![0.0; n])]);
    let pb = basis(FieldKind::Pressure, n, vec![wiggly(&g, 2.0)]);
    let w = InnerProductWeights(g.weights());
    let ops = assemble_velocity_ops(&vb, &pb, &g, &w).unwrap();
    assert!(ops.c.get(0, 0, 0).abs() < 1e-12);
    let ppe = assemble_ppe_ops(&vb, &pb, &g, &w).unwrap();
    assert!(ppe.g.max_abs() < 1e-12);
}

#[test]
fn eddy_viscosity_tensors_scale_with_eta() {
    let g = small_grid(BoundarySet::CHANNEL);
    let w = InnerProductWeights(g.weights());
    let (vb, pb, _, _, _, _) = random_case(&g);
    let n = g.n_cells();
    let zero = basis(FieldKind::EddyViscosity, n, vec![vec![0.0; n]]);
    let t = assemble_turb_tensors(&vb, &pb, &zero, &g, &w).unwrap();
    for x in [&t.ct1, &t.ct2, &t.ct3, &t.ct4] {
        assert_eq!(x.max_abs(), 0.0);
    }
    let c = 0.37;
    let konst: Vec<f64> = g.cell_mask.iter().map(|&f| if f { c } else { 0.0 }).collect();
    let t = assemble_turb_tensors(&vb, &pb, &basis(FieldKind::EddyViscosity, n, vec![konst]), &g, &w).unwrap();
    let v = assemble_velocity_ops(&vb, &pb, &g, &w).unwrap();
    for i in 0..2 {
        for k in 0..2 {
            let want = c * v.b[(i, k)];
            assert!((t.ct1.get(i, 0, k) - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }
}

#[test]
fn pressure_stiffness_of_a_linear_field() {
    let bc = BoundarySet {
        west: EdgeKind::FreeSlip,
        east: EdgeKind::FreeSlip,
        south: EdgeKind::FreeSlip,
        north: EdgeKind::FreeSlip,
    };
    let g = GridSpec::new(32, 8, 2.0, 1.0, [1.0, 0.5], 0.0, bc).unwrap();
    let n = g.n_cells();
    let w = InnerProductWeights(g.weights());
    let x: Vec<f64> = (0..n).map(|c| g.center(c)[0]).collect();
    let nrm2 = w.ip(&x, &x).unwrap();
    let chi: Vec<f64> = x.iter().map(|v| v / nrm2.sqrt()).collect();
    let vb = basis(FieldKind::Velocity, n, vec![stacked(&vec![1.0; n], &vec![0.0; n])]);
    let pb = basis(FieldKind::Pressure, n, vec![chi]);
    let ppe = assemble_ppe_ops(&vb, &pb, &g, &w).unwrap();
    // Interior columns see the exact slope; the two wall columns see half of it.
    let col = g.ny as f64 * g.cell_area();
    let want = col * ((g.nx - 2) as f64 + 2.0 * 0.25) / nrm2;
    assert!((ppe.d[(0, 0)] - want).abs() < 1e-12 * want);
    let analytic = g.fluid_area() / nrm2;
    assert!((ppe.d[(0, 0)] - analytic).abs() / analytic < 2.0 / g.nx as f64);
}

#[test]
fn doubling_weights_doubles_volume_operators() {
    let g = small_grid(BoundarySet::CHANNEL);
    let w = InnerProductWeights(g.weights());
    let w2 = InnerProductWeights(g.weights().iter().map(|x| 2.0 * x).collect());
    let (vb, pb, eb, _, _, _) = random_case(&g);
    let a = assemble_velocity_ops(&vb, &pb, &g, &w).unwrap();
    let b = assemble_velocity_ops(&vb, &pb, &g, &w2).unwrap();
    for (x, y) in [(&a.m, &b.m), (&a.b, &b.b), (&a.bt, &b.bt), (&a.h, &b.h), (&a.p, &b.p)] {
        assert!((2.0 * x - y).abs().max() <= 1e-12 * (1.0 + y.abs().max()));
    }
    for (x, y) in a.c.data.iter().zip(&b.c.data) {
        assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
    }
    let ta = assemble_turb_tensors(&vb, &pb, &eb, &g, &w).unwrap();
    let tb = assemble_turb_tensors(&vb, &pb, &eb, &g, &w2).unwrap();
    for (x, y) in ta.ct4.data.iter().zip(&tb.ct4.data) {
        assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
    }
}

#[test]
fn mass_and_stiffness_are_symmetric() {
    let g = small_grid(BoundarySet::CHANNEL);
    let (vb, pb, eb, _, _, _) = random_case(&g);
    let ops = RomOperators::assemble(&vb, &pb, &eb, &g, &Default::default()).unwrap();
    assert_eq!((&ops.vel.m - ops.vel.m.transpose()).abs().max(), 0.0);
    assert_eq!((&ops.ppe.d - ops.ppe.d.transpose()).abs().max(), 0.0);
    let eig = ops.ppe.d.clone().symmetric_eigenvalues();
    assert!(eig.iter().all(|&l| l >= -1e-12 * eig.abs().max()));
    assert!(ops.all_finite());
    assert_eq!(ops.n_bc(), 1);
}

#[test]
fn mismatched_basis_is_rejected() {
    let g = small_grid(BoundarySet::CHANNEL);
    let w = InnerProductWeights(g.weights());
    let (vb, _, _, _, _, _) = random_case(&g);
    let wrong = basis(FieldKind::Pressure, 10, vec![vec![0.0; 10]]);
    assert!(assemble_velocity_ops(&vb, &wrong, &g, &w).is_err());
}

#[test]
fn contraction_matches_index_sum() {
    let mut t = Tensor3::zeros(2, 3, 4);
    for (n, x) in t.data.iter_mut().enumerate() {
        *x = (n as f64 * 0.31).sin();
    }
    let x = [0.5, -1.0, 2.0];
    let y = [1.0, 0.25, -0.5, 3.0];
    let out = t.contract(&x, &y);
    for i in 0..2 {
        let mut s = 0.0;
        for j in 0..3 {
            for k in 0..4 {
                s += t.get(i, j, k) * x[j] * y[k];
            }
        }
        assert!((out[i] - s).abs() < 1e-14);
    }
}
