//! Galerkin projection of the discrete operators onto POD modes.
//!
//! Every volume operator is a weighted product of a test mode (velocity mode
//! or pressure-mode gradient) with a discrete operator applied to trial modes,
//! using the same [`fd`] stencils as the full-order solver.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{ensure, Result};
use crate::fd::{self, VecField};
use crate::grid::{EdgeKind, GridSpec, Mesh};
use crate::pod::{FieldKind, PodBasis};
use crate::snapshots::InnerProductWeights;

/// Dense order-3 tensor, entry `(i, j, k)` at `i·d1·d2 + j·d2 + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(d0: usize, d1: usize, d2: usize) -> Self {
        Tensor3 {
            dims: [d0, d1, d2],
            data: vec![0.0; d0 * d1 * d2],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let at = self.index(i, j, k);
        self.data[at] = v;
    }

    /// `out_i = Σ_jk T_ijk x_j y_k`.
    pub fn contract(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dims[0]];
        self.contract_into(x, y, &mut out);
        out
    }

    pub fn contract_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let [d0, d1, d2] = self.dims;
        debug_assert!(x.len() >= d1 && y.len() >= d2 && out.len() >= d0);
        for (i, o) in out.iter_mut().enumerate().take(d0) {
            let mut s = 0.0;
            for (j, xj) in x.iter().enumerate().take(d1) {
                if *xj == 0.0 {
                    continue;
                }
                let row = &self.data[(i * d1 + j) * d2..(i * d1 + j + 1) * d2];
                let mut inner = 0.0;
                for (t, yk) in row.iter().zip(y) {
                    inner += t * yk;
                }
                s += xj * inner;
            }
            *o = s;
        }
    }

    /// Matrix `Σ_j T_ijk x_j` (rows `i`, columns `k`).
    pub fn contract_middle(&self, x: &[f64]) -> DMatrix<f64> {
        let [d0, d1, d2] = self.dims;
        DMatrix::from_fn(d0, d2, |i, k| (0..d1).map(|j| self.get(i, j, k) * x[j]).sum())
    }

    /// Leading sub-block `[..a, ..b, ..c]`.
    pub fn truncate(&self, a: usize, b: usize, c: usize) -> Tensor3 {
        let mut out = Tensor3::zeros(a, b, c);
        for i in 0..a {
            for j in 0..b {
                for k in 0..c {
                    out.set(i, j, k, self.get(i, j, k));
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Physical parameters entering the reduced systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorConfig {
    pub nu: f64,
    /// Penalty factor for the Dirichlet inflow.
    pub tau: f64,
    /// Inflow speed `U_BC`.
    pub u_in: f64,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            nu: 0.0,
            tau: 1000.0,
            u_in: 1.0,
        }
    }
}

/// Operators of the supremizer system.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityOps {
    pub m: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub bt: DMatrix<f64>,
    /// `r × r × r`.
    pub c: Tensor3,
    /// `r × q`.
    pub h: DMatrix<f64>,
    /// `q × r`.
    pub p: DMatrix<f64>,
    pub dk: Vec<DVector<f64>>,
    pub ek: Vec<DMatrix<f64>>,
}

/// Operators of the pressure Poisson system.
#[derive(Debug, Clone, PartialEq)]
pub struct PpeOps {
    /// `q × q`.
    pub d: DMatrix<f64>,
    /// `q × r × r`.
    pub g: Tensor3,
    /// `q × r`.
    pub n: DMatrix<f64>,
    pub l: DVector<f64>,
}

/// Eddy-viscosity tensors, middle index over the eddy-viscosity modes.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbOps {
    pub ct1: Tensor3,
    pub ct2: Tensor3,
    pub ct3: Tensor3,
    pub ct4: Tensor3,
}

/// Everything the online solver needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RomOperators {
    /// POD velocity modes; the supremizers follow, for `r = n_u + n_sup`.
    pub n_u: usize,
    pub n_sup: usize,
    pub q: usize,
    pub n_nut: usize,
    pub vel: VelocityOps,
    pub ppe: PpeOps,
    pub turb: TurbOps,
    pub nu: f64,
    pub tau: f64,
    /// Prescribed speed on each Dirichlet patch.
    pub u_bc: Vec<f64>,
}

impl RomOperators {
    pub fn r(&self) -> usize {
        self.n_u + self.n_sup
    }

    pub fn n_bc(&self) -> usize {
        self.u_bc.len()
    }

    /// All-zero operators of the given sizes, apart from `M = I`.
    pub fn zeros(n_u: usize, n_sup: usize, q: usize, n_nut: usize, n_bc: usize) -> RomOperators {
        let r = n_u + n_sup;
        RomOperators {
            n_u,
            n_sup,
            q,
            n_nut,
            vel: VelocityOps {
                m: DMatrix::identity(r, r),
                b: DMatrix::zeros(r, r),
                bt: DMatrix::zeros(r, r),
                c: Tensor3::zeros(r, r, r),
                h: DMatrix::zeros(r, q),
                p: DMatrix::zeros(q, r),
                dk: vec![DVector::zeros(r); n_bc],
                ek: vec![DMatrix::zeros(r, r); n_bc],
            },
            ppe: PpeOps {
                d: DMatrix::zeros(q, q),
                g: Tensor3::zeros(q, r, r),
                n: DMatrix::zeros(q, r),
                l: DVector::zeros(q),
            },
            turb: TurbOps {
                ct1: Tensor3::zeros(r, n_nut, r),
                ct2: Tensor3::zeros(r, n_nut, r),
                ct3: Tensor3::zeros(q, n_nut, r),
                ct4: Tensor3::zeros(q, n_nut, r),
            },
            nu: 0.0,
            tau: 0.0,
            u_bc: vec![0.0; n_bc],
        }
    }

    pub fn assemble(
        vel: &PodBasis,
        pres: &PodBasis,
        nut: &PodBasis,
        grid: &GridSpec,
        cfg: &OperatorConfig,
    ) -> Result<RomOperators> {
        ensure!(
            cfg.nu >= 0.0 && cfg.tau >= 0.0 && cfg.nu.is_finite() && cfg.tau.is_finite(),
            Config,
            "viscosity and penalty must be finite and nonnegative"
        );
        let w = InnerProductWeights(grid.weights());
        let v = assemble_velocity_ops(vel, pres, grid, &w)?;
        let p = assemble_ppe_ops(vel, pres, grid, &w)?;
        let t = assemble_turb_tensors(vel, pres, nut, grid, &w)?;
        let n_bc = v.dk.len();
        Ok(RomOperators {
            n_u: vel.n_pod(),
            n_sup: vel.n_sup,
            q: pres.len(),
            n_nut: nut.len(),
            vel: v,
            ppe: p,
            turb: t,
            nu: cfg.nu,
            tau: cfg.tau,
            u_bc: vec![cfg.u_in; n_bc],
        })
    }

    /// True when every stored entry is finite.
    pub fn all_finite(&self) -> bool {
        let mats = [
            &self.vel.m,
            &self.vel.b,
            &self.vel.bt,
            &self.vel.h,
            &self.vel.p,
            &self.ppe.d,
            &self.ppe.n,
        ];
        let tens = [
            &self.vel.c,
            &self.ppe.g,
            &self.turb.ct1,
            &self.turb.ct2,
            &self.turb.ct3,
            &self.turb.ct4,
        ];
        mats.iter().all(|m| m.iter().all(|x| x.is_finite()))
            && tens.iter().all(|t| t.data.iter().all(|x| x.is_finite()))
            && self.ppe.l.iter().all(|x| x.is_finite())
            && self.vel.dk.iter().all(|d| d.iter().all(|x| x.is_finite()))
            && self.vel.ek.iter().all(|e| e.iter().all(|x| x.is_finite()))
    }
}

fn split(mode: &[f64], n: usize) -> VecField {
    VecField {
        x: mode[..n].to_vec(),
        y: mode[n..].to_vec(),
    }
}

/// Fills the lower triangle and mirrors it.
fn symmetric(n: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = f(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn weighted(w: &InnerProductWeights, f: &VecField) -> VecField {
    VecField {
        x: f.x.iter().zip(&w.0).map(|(a, b)| a * b).collect(),
        y: f.y.iter().zip(&w.0).map(|(a, b)| a * b).collect(),
    }
}

#[inline]
fn dot2(a: &VecField, b: &VecField) -> f64 {
    let mut s = 0.0;
    for c in 0..a.x.len() {
        s += a.x[c] * b.x[c] + a.y[c] * b.y[c];
    }
    s
}

fn check_basis(b: &PodBasis, kind: FieldKind, grid: &GridSpec) -> Result<()> {
    let len = kind.components() * grid.n_cells();
    ensure!(
        b.kind == kind && b.n_cells == grid.n_cells() && b.modes.iter().all(|m| m.len() == len),
        Dimension,
        "{kind:?} basis does not match a {}x{} grid",
        grid.nx,
        grid.ny
    );
    Ok(())
}

fn check_weights(w: &InnerProductWeights, grid: &GridSpec) -> Result<()> {
    ensure!(
        w.n_cells() == grid.n_cells(),
        Dimension,
        "{} weights for {} cells",
        w.n_cells(),
        grid.n_cells()
    );
    Ok(())
}

fn pressure_grads(mesh: &Mesh, pres: &PodBasis) -> Vec<VecField> {
    pres.modes
        .iter()
        .map(|chi| {
            let [x, y] = fd::pressure_grad(mesh, chi);
            VecField { x, y }
        })
        .collect()
}

/// Mass, diffusion, convection, pressure-gradient, divergence and penalty operators.
pub fn assemble_velocity_ops(
    vel: &PodBasis,
    pres: &PodBasis,
    grid: &GridSpec,
    w: &InnerProductWeights,
) -> Result<VelocityOps> {
    check_basis(vel, FieldKind::Velocity, grid)?;
    check_basis(pres, FieldKind::Pressure, grid)?;
    check_weights(w, grid)?;
    let mesh = Mesh::new(grid);
    let n = grid.n_cells();
    let (r, q) = (vel.len(), pres.len());
    let phi: Vec<VecField> = vel.modes.iter().map(|m| split(m, n)).collect();
    let wphi: Vec<VecField> = phi.iter().map(|f| weighted(w, f)).collect();
    let lap: Vec<VecField> = phi.iter().map(|f| fd::vector_laplacian(&mesh, f)).collect();
    let gt: Vec<VecField> = phi.iter().map(|f| fd::div_eta_grad_transpose(&mesh, None, f)).collect();
    let gchi = pressure_grads(&mesh, pres);

    let m = symmetric(r, |i, j| dot2(&wphi[i], &phi[j]));
    let b = DMatrix::from_fn(r, r, |i, j| dot2(&wphi[i], &lap[j]));
    let bt = DMatrix::from_fn(r, r, |i, j| dot2(&wphi[i], &gt[j]));
    let h = DMatrix::from_fn(r, q, |i, j| dot2(&wphi[i], &gchi[j]));
    let divs: Vec<Vec<f64>> = phi.iter().map(|f| fd::div(&mesh, &f.x, &f.y)).collect();
    let p = DMatrix::from_fn(q, r, |i, j| {
        pres.modes[i]
            .iter()
            .zip(&divs[j])
            .zip(&w.0)
            .map(|((a, b), wc)| wc * a * b)
            .sum()
    });

    let mut c = Tensor3::zeros(r, r, r);
    for j in 0..r {
        for k in 0..r {
            let conv = fd::div_outer(&mesh, &phi[j], &phi[k]);
            for (i, wp) in wphi.iter().enumerate() {
                c.set(i, j, k, dot2(wp, &conv));
            }
        }
    }

    let (dk, ek) = inflow_patch(grid, &phi);
    Ok(VelocityOps {
        m,
        b,
        bt,
        c,
        h,
        p,
        dk,
        ek,
    })
}

/// `D^k` and `E^k` over the west-edge inflow faces, edge-midpoint quadrature
/// with the face carrying the adjacent cell value.
fn inflow_patch(grid: &GridSpec, phi: &[VecField]) -> (Vec<DVector<f64>>, Vec<DMatrix<f64>>) {
    if grid.boundaries.west != EdgeKind::Inflow {
        return (Vec::new(), Vec::new());
    }
    let r = phi.len();
    let dy = grid.dy();
    let cells: Vec<usize> = (0..grid.n_cells()).filter(|&c| grid.is_inflow_cell(c)).collect();
    let d = DVector::from_fn(r, |i, _| cells.iter().map(|&c| dy * phi[i].x[c]).sum());
    let e = DMatrix::from_fn(r, r, |i, j| {
        cells
            .iter()
            .map(|&c| dy * (phi[i].x[c] * phi[j].x[c] + phi[i].y[c] * phi[j].y[c]))
            .sum()
    });
    (vec![d], vec![e])
}

/// Pressure gradients used as PPE test functions. They vanish on the inflow
/// cells, whose velocity the full-order projection never corrects, so the
/// reduced PPE is the Galerkin projection of the full-order pressure equation.
fn ppe_test_grads(mesh: &Mesh, grid: &GridSpec, pres: &PodBasis) -> Vec<VecField> {
    let mut g = pressure_grads(mesh, pres);
    for f in g.iter_mut() {
        for c in 0..grid.n_cells() {
            if grid.is_inflow_cell(c) {
                f.x[c] = 0.0;
                f.y[c] = 0.0;
            }
        }
    }
    g
}

/// Pressure Poisson operators, tested against the masked `∇χ_i`. `N` is the
/// volume form `⟨∇χ_i, Δφ_j⟩` of the viscous term; `L` is zero.
pub fn assemble_ppe_ops(vel: &PodBasis, pres: &PodBasis, grid: &GridSpec, w: &InnerProductWeights) -> Result<PpeOps> {
    check_basis(vel, FieldKind::Velocity, grid)?;
    check_basis(pres, FieldKind::Pressure, grid)?;
    check_weights(w, grid)?;
    let mesh = Mesh::new(grid);
    let n = grid.n_cells();
    let (r, q) = (vel.len(), pres.len());
    let phi: Vec<VecField> = vel.modes.iter().map(|m| split(m, n)).collect();
    let gchi = ppe_test_grads(&mesh, grid, pres);
    let wg: Vec<VecField> = gchi.iter().map(|f| weighted(w, f)).collect();

    let d = symmetric(q, |i, j| dot2(&wg[i], &gchi[j]));
    let mut g = Tensor3::zeros(q, r, r);
    for j in 0..r {
        for k in 0..r {
            let conv = fd::div_outer(&mesh, &phi[j], &phi[k]);
            for (i, wgi) in wg.iter().enumerate() {
                g.set(i, j, k, dot2(wgi, &conv));
            }
        }
    }
    let lap: Vec<VecField> = phi.iter().map(|f| fd::vector_laplacian(&mesh, f)).collect();
    let nmat = DMatrix::from_fn(q, r, |i, j| dot2(&wg[i], &lap[j]));
    Ok(PpeOps {
        d,
        g,
        n: nmat,
        l: DVector::zeros(q),
    })
}

/// `CT1_ijk = ⟨φ_i, η_j ∇·∇φ_k⟩`, `CT2_ijk = ⟨φ_i, ∇·(η_j (∇φ_k)ᵀ)⟩`, and
/// `CT3`, `CT4` with the masked `∇χ_i` of the PPE as the test function.
pub fn assemble_turb_tensors(
    vel: &PodBasis,
    pres: &PodBasis,
    nut: &PodBasis,
    grid: &GridSpec,
    w: &InnerProductWeights,
) -> Result<TurbOps> {
    check_basis(vel, FieldKind::Velocity, grid)?;
    check_basis(pres, FieldKind::Pressure, grid)?;
    check_basis(nut, FieldKind::EddyViscosity, grid)?;
    check_weights(w, grid)?;
    let mesh = Mesh::new(grid);
    let n = grid.n_cells();
    let (r, q, ne) = (vel.len(), pres.len(), nut.len());
    let phi: Vec<VecField> = vel.modes.iter().map(|m| split(m, n)).collect();
    let wphi: Vec<VecField> = phi.iter().map(|f| weighted(w, f)).collect();
    let wg: Vec<VecField> = ppe_test_grads(&mesh, grid, pres)
        .iter()
        .map(|f| weighted(w, f))
        .collect();
    let lap: Vec<VecField> = phi.iter().map(|f| fd::vector_laplacian(&mesh, f)).collect();

    let mut ct1 = Tensor3::zeros(r, ne, r);
    let mut ct2 = Tensor3::zeros(r, ne, r);
    let mut ct3 = Tensor3::zeros(q, ne, r);
    let mut ct4 = Tensor3::zeros(q, ne, r);
    for (j, eta) in nut.modes.iter().enumerate() {
        for k in 0..r {
            let el = VecField {
                x: lap[k].x.iter().zip(eta).map(|(a, e)| a * e).collect(),
                y: lap[k].y.iter().zip(eta).map(|(a, e)| a * e).collect(),
            };
            let et = fd::div_eta_grad_transpose(&mesh, Some(eta), &phi[k]);
            for i in 0..r {
                ct1.set(i, j, k, dot2(&wphi[i], &el));
                ct2.set(i, j, k, dot2(&wphi[i], &et));
            }
            for i in 0..q {
                ct3.set(i, j, k, dot2(&wg[i], &el));
                ct4.set(i, j, k, dot2(&wg[i], &et));
            }
        }
    }
    Ok(TurbOps { ct1, ct2, ct3, ct4 })
}
