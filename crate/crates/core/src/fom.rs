//! Miniature incompressible solver producing snapshot data.
//!
//! Collocated Chorin projection: explicit central advection and explicit
//! diffusion give a provisional velocity, then a pressure Poisson solve
//! (Jacobi-preconditioned conjugate gradients) removes its divergence. The
//! Poisson operator is `Div ∘ Grad` built from the same face-averaged
//! operators used for reduced-operator assembly, so emitted frames are
//! divergence-free in exactly the discrete sense the reduced models use.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{ensure, Error, Result};
use crate::fd::{self, VecField};
use crate::grid::{FaceRules, GridSpec, Mesh};
use crate::linalg::BandedCholesky;

/// Solver and sampling parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FomConfig {
    pub nu: f64,
    pub u_in: f64,
    pub dt_fom: f64,
    pub sample_every: usize,
    pub n_samples: usize,
    pub smagorinsky_cs: f64,
    /// Solver steps discarded before sampling; `None` means a third of the sampled steps.
    pub spinup_steps: Option<usize>,
    /// Relative residual tolerance of the pressure solve.
    pub projection_tol: f64,
    pub max_cg_iter: usize,
    /// Amplitude (relative to `u_in`) of the antisymmetric initial `v` kick that
    /// triggers vortex shedding.
    pub perturbation: f64,
}

impl Default for FomConfig {
    fn default() -> Self {
        FomConfig {
            nu: 1e-3,
            u_in: 1.0,
            dt_fom: 1e-3,
            sample_every: 10,
            n_samples: 100,
            smagorinsky_cs: 0.17,
            spinup_steps: None,
            projection_tol: 1e-10,
            max_cg_iter: 20_000,
            perturbation: 0.0,
        }
    }
}

impl FomConfig {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        ensure!(self.nu > 0.0 && self.nu.is_finite(), Config, "nu must be positive");
        ensure!(
            self.u_in >= 0.0 && self.u_in.is_finite(),
            Config,
            "u_in must be nonnegative"
        );
        ensure!(self.dt_fom > 0.0, Config, "dt_fom must be positive");
        ensure!(self.sample_every >= 1, Config, "sample_every must be at least 1");
        ensure!(self.n_samples >= 1, Config, "n_samples must be at least 1");
        ensure!(self.smagorinsky_cs >= 0.0, Config, "smagorinsky_cs must be nonnegative");
        ensure!(
            self.projection_tol > 0.0 && self.projection_tol < 1.0,
            Config,
            "projection_tol must lie in (0, 1)"
        );
        let h = grid.dx().min(grid.dy());
        let cfl = self.u_in * self.dt_fom / h;
        ensure!(cfl < 0.5, Config, "advective CFL number {cfl} violates the bound 0.5");
        Ok(())
    }

    pub fn spinup(&self) -> usize {
        self.spinup_steps.unwrap_or(self.n_samples * self.sample_every / 3)
    }

    pub fn dt_snap(&self) -> f64 {
        self.dt_fom * self.sample_every as f64
    }
}

/// One sampled full-order state.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFrame {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub nu_t: Vec<f64>,
}

impl FieldFrame {
    pub fn velocity(&self) -> VecField {
        VecField {
            x: self.u.clone(),
            y: self.v.clone(),
        }
    }
}

/// Time-ordered snapshots on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub grid: GridSpec,
    pub frames: Vec<FieldFrame>,
    pub weights: Vec<f64>,
    pub dt_snap: f64,
}

impl SnapshotSet {
    pub fn new(grid: GridSpec, frames: Vec<FieldFrame>, dt_snap: f64) -> Result<Self> {
        let weights = grid.weights();
        let set = SnapshotSet {
            grid,
            frames,
            weights,
            dt_snap,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n_cells();
        ensure!(
            self.weights.len() == n,
            Dimension,
            "weights length {} != {n}",
            self.weights.len()
        );
        for (c, &w) in self.weights.iter().enumerate() {
            let ok = if self.grid.is_fluid(c) { w > 0.0 } else { w == 0.0 };
            ensure!(ok, Config, "weight of cell {c} inconsistent with the fluid mask");
        }
        ensure!(self.dt_snap > 0.0, Config, "snapshot spacing must be positive");
        for (k, f) in self.frames.iter().enumerate() {
            ensure!(
                f.u.len() == n && f.v.len() == n && f.p.len() == n && f.nu_t.len() == n,
                Dimension,
                "frame {k} has wrong field lengths"
            );
        }
        for w in self.frames.windows(2) {
            let gap = w[1].t - w[0].t;
            ensure!(
                gap > 0.0 && (gap - self.dt_snap).abs() <= 1e-9 * self.dt_snap.max(w[1].t.abs()),
                Config,
                "frames must be uniformly spaced by {} (found gap {gap})",
                self.dt_snap
            );
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.t).collect()
    }

    /// Keeps frames `range`.
    pub fn window(&self, range: core::ops::Range<usize>) -> SnapshotSet {
        SnapshotSet {
            grid: self.grid.clone(),
            frames: self.frames[range].to_vec(),
            weights: self.weights.clone(),
            dt_snap: self.dt_snap,
        }
    }
}

/// Smagorinsky eddy viscosity `(cs·Δ)²·√(2 S:S)` with `Δ = √(cell area)`.
pub fn eddy_viscosity_field(frame: &FieldFrame, grid: &GridSpec, cs: f64) -> Vec<f64> {
    let mesh = Mesh::new(grid);
    eddy_viscosity_on(&mesh, &frame.u, &frame.v, cs, grid.cell_area())
}

fn eddy_viscosity_on(mesh: &Mesh, u: &[f64], v: &[f64], cs: f64, area: f64) -> Vec<f64> {
    let ru = FaceRules::velocity(&mesh.bc, 0);
    let rv = FaceRules::velocity(&mesh.bc, 1);
    let ux = fd::ddx(mesh, u, &ru);
    let uy = fd::ddy(mesh, u, &ru);
    let vx = fd::ddx(mesh, v, &rv);
    let vy = fd::ddy(mesh, v, &rv);
    let scale = cs * cs * area;
    (0..u.len())
        .map(|c| {
            if !mesh.fluid[c] {
                return 0.0;
            }
            let sxy = 0.5 * (uy[c] + vx[c]);
            let ss = ux[c] * ux[c] + vy[c] * vy[c] + 2.0 * sxy * sxy;
            scale * (2.0 * ss).sqrt()
        })
        .collect()
}

/// Area integral of `v` over fluid cells downstream of the obstacle.
pub fn lift_proxy(frame: &FieldFrame, grid: &GridSpec) -> f64 {
    let x0 = grid.obstacle_center[0] + grid.obstacle_radius;
    let a = grid.cell_area();
    (0..grid.n_cells())
        .filter(|&c| grid.is_fluid(c) && grid.center(c)[0] > x0)
        .map(|c| frame.v[c] * a)
        .sum()
}

/// Largest absolute discrete divergence of a frame's velocity.
pub fn max_divergence(frame: &FieldFrame, grid: &GridSpec) -> f64 {
    let mesh = Mesh::new(grid);
    fd::div(&mesh, &frame.u, &frame.v)
        .iter()
        .fold(0.0, |m: f64, d| m.max(d.abs()))
}

struct Projector {
    mesh: Mesh,
    free: Vec<bool>,
    precond: Preconditioner,
    gx: Vec<f64>,
    gy: Vec<f64>,
}

enum Preconditioner {
    /// Exact banded factorisation of the (fixed) pressure operator.
    Banded(BandedCholesky),
    Jacobi(Vec<f64>),
}

impl Projector {
    fn new(grid: &GridSpec) -> Self {
        let mesh = Mesh::new(grid);
        let n = mesh.n_cells();
        let free: Vec<bool> = (0..n).map(|c| grid.is_fluid(c) && !grid.is_inflow_cell(c)).collect();
        let mut proj = Projector {
            mesh,
            free,
            precond: Preconditioner::Jacobi(Vec::new()),
            gx: vec![0.0; n],
            gy: vec![0.0; n],
        };
        // The operator couples cells at most two apart along one axis, so a
        // 5x5 colouring recovers every matrix entry without overlap.
        let nx = grid.nx;
        let reach = 2 * nx;
        let mut band = BandedCholesky::zeros(n, reach);
        let mut probe = vec![0.0; n];
        let mut out = vec![0.0; n];
        for (ci, cj) in (0..5).flat_map(|a| (0..5).map(move |b| (a, b))) {
            for c in 0..n {
                let (i, j) = (c % nx, c / nx);
                probe[c] = if i % 5 == ci && j % 5 == cj && grid.is_fluid(c) {
                    1.0
                } else {
                    0.0
                };
            }
            proj.apply(&probe, &mut out);
            for row in 0..n {
                if out[row] == 0.0 {
                    continue;
                }
                let (i, j) = (row % nx, row / nx);
                let di = (ci + 5 - i % 5) % 5;
                let dj = (cj + 5 - j % 5) % 5;
                let oi = if di > 2 { di as isize - 5 } else { di as isize };
                let oj = if dj > 2 { dj as isize - 5 } else { dj as isize };
                let col = row as isize + oj * nx as isize + oi;
                if col >= 0 && (col as usize) < n && probe[col as usize] != 0.0 && col as usize <= row {
                    band.set(row, col as usize, out[row]);
                }
            }
        }
        for c in 0..n {
            if !grid.is_fluid(c) {
                band.set(c, c, 1.0);
            }
        }
        let diag: Vec<f64> = (0..n).map(|c| band.get(c, c)).collect();
        proj.precond = match band.factor() {
            Some(f) => Preconditioner::Banded(f),
            None => Preconditioner::Jacobi(
                (0..n)
                    .map(|c| {
                        if grid.is_fluid(c) && diag[c] > 0.0 {
                            1.0 / diag[c]
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            ),
        };
        proj
    }

    /// `A p = −Div(F ⊙ Grad p)`, symmetric positive semidefinite.
    fn apply(&mut self, p: &[f64], out: &mut [f64]) {
        let rules = FaceRules::pressure(&self.mesh.bc);
        fd::deriv_into(&self.mesh, p, &rules, 0, &mut self.gx);
        fd::deriv_into(&self.mesh, p, &rules, 1, &mut self.gy);
        for c in 0..p.len() {
            if !self.free[c] {
                self.gx[c] = 0.0;
                self.gy[c] = 0.0;
            }
        }
        fd::div_into(&self.mesh, &self.gx, &self.gy, out);
        for o in out.iter_mut() {
            *o = -*o;
        }
    }

    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        match &self.precond {
            Preconditioner::Banded(f) => {
                z.copy_from_slice(r);
                f.solve_in_place(z);
                for c in 0..z.len() {
                    if !self.mesh.fluid[c] {
                        z[c] = 0.0;
                    }
                }
            }
            Preconditioner::Jacobi(d) => {
                for c in 0..z.len() {
                    z[c] = r[c] * d[c];
                }
            }
        }
    }

    /// Solves `A p = b` by preconditioned conjugate gradients, warm-started from `p`.
    fn solve(&mut self, b: &[f64], p: &mut [f64], tol: f64, max_iter: usize) -> Result<usize> {
        let n = b.len();
        let bnorm = dot(b, b).sqrt();
        if bnorm == 0.0 {
            p.iter_mut().for_each(|x| *x = 0.0);
            return Ok(0);
        }
        let mut r = vec![0.0; n];
        self.apply(p, &mut r);
        for c in 0..n {
            r[c] = b[c] - r[c];
        }
        let mut z = vec![0.0; n];
        self.precondition(&r, &mut z);
        let mut d = z.clone();
        let mut rz = dot(&r, &z);
        let mut ad = vec![0.0; n];
        for it in 0..max_iter {
            let rn = dot(&r, &r).sqrt();
            if rn <= tol * bnorm {
                return Ok(it);
            }
            self.apply(&d, &mut ad);
            let dad = dot(&d, &ad);
            if dad <= 0.0 {
                return Err(Error::NoConvergence {
                    context: "pressure projection (operator lost definiteness)",
                    iterations: it,
                    residual: rn / bnorm,
                });
            }
            let alpha = rz / dad;
            for c in 0..n {
                p[c] += alpha * d[c];
                r[c] -= alpha * ad[c];
            }
            self.precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for c in 0..n {
                d[c] = z[c] + beta * d[c];
            }
        }
        let rn = dot(&r, &r).sqrt();
        if rn <= tol * bnorm {
            return Ok(max_iter);
        }
        Err(Error::NoConvergence {
            context: "pressure projection",
            iterations: max_iter,
            residual: rn / bnorm,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Integrates the flow and samples `n_samples` frames every `sample_every`
/// steps after the spin-up period.
pub fn run_fom(grid: &GridSpec, cfg: &FomConfig) -> Result<SnapshotSet> {
    grid.validate()?;
    cfg.validate(grid)?;
    let mut proj = Projector::new(grid);
    let n = grid.n_cells();
    let dt = cfg.dt_fom;

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let [cx, cy] = grid.obstacle_center;
    let r = grid.obstacle_radius.max(grid.dx().max(grid.dy()));
    for c in 0..n {
        if grid.is_fluid(c) {
            u[c] = cfg.u_in;
            let [x, y] = grid.center(c);
            let (sx, sy) = ((x - cx - 2.0 * r) / r, (y - cy) / r);
            v[c] = cfg.perturbation * cfg.u_in * (-(sx * sx + sy * sy)).exp();
        }
    }
    for c in 0..n {
        if grid.is_inflow_cell(c) {
            v[c] = 0.0;
        }
    }

    let spinup = cfg.spinup();
    let first_t = (spinup + cfg.sample_every) as f64 * dt;
    let total = spinup + cfg.n_samples * cfg.sample_every;
    let mut frames = Vec::with_capacity(cfg.n_samples);
    let rules_u = FaceRules::velocity(&grid.boundaries, 0);
    let rules_v = FaceRules::velocity(&grid.boundaries, 1);
    let pres = FaceRules::pressure(&grid.boundaries);
    let mut lap_u = vec![0.0; n];
    let mut lap_v = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];

    for step in 1..=total {
        let vel = VecField { x: u, y: v };
        let conv = fd::div_outer(&proj.mesh, &vel, &vel);
        let VecField { x: mut us, y: mut vs } = vel;
        fd::laplacian_into(&proj.mesh, &us, &rules_u, &mut lap_u);
        fd::laplacian_into(&proj.mesh, &vs, &rules_v, &mut lap_v);
        for c in 0..n {
            if proj.free[c] {
                us[c] += dt * (cfg.nu * lap_u[c] - conv.x[c]);
                vs[c] += dt * (cfg.nu * lap_v[c] - conv.y[c]);
            } else if grid.is_inflow_cell(c) {
                us[c] = cfg.u_in;
                vs[c] = 0.0;
            } else {
                us[c] = 0.0;
                vs[c] = 0.0;
            }
        }
        fd::div_into(&proj.mesh, &us, &vs, &mut rhs);
        for x in rhs.iter_mut() {
            *x /= dt;
        }
        // A p = −Div(F Grad p) = −rhs
        for x in rhs.iter_mut() {
            *x = -*x;
        }
        proj.solve(&rhs, &mut p, cfg.projection_tol, cfg.max_cg_iter)?;
        fd::deriv_into(&proj.mesh, &p, &pres, 0, &mut gx);
        fd::deriv_into(&proj.mesh, &p, &pres, 1, &mut gy);
        for c in 0..n {
            if proj.free[c] {
                us[c] -= dt * gx[c];
                vs[c] -= dt * gy[c];
            }
        }
        u = us;
        v = vs;
        if !u.iter().chain(&v).all(|x| x.is_finite()) {
            return Err(Error::NoConvergence {
                context: "time integration (non-finite velocity)",
                iterations: step,
                residual: f64::NAN,
            });
        }

        if step > spinup && (step - spinup).is_multiple_of(cfg.sample_every) {
            // Same formula as the snapshot file reader, so times round-trip.
            let nu_t = eddy_viscosity_on(&proj.mesh, &u, &v, cfg.smagorinsky_cs, grid.cell_area());
            frames.push(FieldFrame {
                t: first_t + frames.len() as f64 * cfg.dt_snap(),
                u: u.clone(),
                v: v.clone(),
                p: p.clone(),
                nu_t,
            });
        }
    }
    SnapshotSet::new(grid.clone(), frames, cfg.dt_snap())
}
