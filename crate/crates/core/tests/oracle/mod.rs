//! Straight-line reference evaluation of the Galerkin operators, written
//! directly from the face-value rules with `(i, j)` indexing.

#![allow(dead_code)]

use romforge_core::grid::{BoundarySet, EdgeKind, GridSpec};

#[derive(Clone, Copy, PartialEq)]
pub enum Edge {
    W,
    E,
    S,
    N,
    Solid,
}

/// Which field a face rule belongs to.
#[derive(Clone, Copy)]
pub enum Field {
    /// Velocity component 0 (x) or 1 (y).
    Vel(usize),
    Pressure,
    /// Product of two velocity components.
    Prod(usize, usize),
    AllCopy,
}

pub struct Naive {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub fluid: Vec<bool>,
    pub bc: BoundarySet,
}

fn kind(bc: &BoundarySet, e: Edge) -> EdgeKind {
    match e {
        Edge::W => bc.west,
        Edge::E => bc.east,
        Edge::S => bc.south,
        Edge::N => bc.north,
        Edge::Solid => EdgeKind::NoSlip,
    }
}

/// Whether the boundary face copies the cell value (otherwise it is zero).
fn copies(bc: &BoundarySet, e: Edge, field: Field) -> bool {
    let k = kind(bc, e);
    match field {
        Field::AllCopy => true,
        Field::Pressure => matches!(k, EdgeKind::FreeSlip | EdgeKind::NoSlip),
        Field::Vel(axis) => match k {
            EdgeKind::NoSlip => false,
            EdgeKind::FreeSlip => {
                let normal_axis = match e {
                    Edge::W | Edge::E => 0,
                    _ => 1,
                };
                axis != normal_axis
            }
            _ => true,
        },
        Field::Prod(a, b) => copies(bc, e, Field::Vel(a)) && copies(bc, e, Field::Vel(b)),
    }
}

impl Naive {
    pub fn new(g: &GridSpec) -> Self {
        Naive {
            nx: g.nx,
            ny: g.ny,
            dx: g.lx / g.nx as f64,
            dy: g.ly / g.ny as f64,
            fluid: g.cell_mask.clone(),
            bc: g.boundaries,
        }
    }

    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    fn at(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Neighbour of `(i, j)` shifted by `(di, dj)`: a fluid cell index or a boundary edge.
    fn neighbour(&self, i: usize, j: usize, di: isize, dj: isize) -> Result<usize, Edge> {
        let (ii, jj) = (i as isize + di, j as isize + dj);
        if ii < 0 {
            return Err(Edge::W);
        }
        if ii >= self.nx as isize {
            return Err(Edge::E);
        }
        if jj < 0 {
            return Err(Edge::S);
        }
        if jj >= self.ny as isize {
            return Err(Edge::N);
        }
        let c = self.at(ii as usize, jj as usize);
        if self.fluid[c] {
            Ok(c)
        } else {
            Err(Edge::Solid)
        }
    }

    fn face_value(&self, f: &[f64], i: usize, j: usize, di: isize, dj: isize, field: Field) -> f64 {
        let c = self.at(i, j);
        match self.neighbour(i, j, di, dj) {
            Ok(n) => (f[c] + f[n]) / 2.0,
            Err(e) => {
                if copies(&self.bc, e, field) {
                    f[c]
                } else {
                    0.0
                }
            }
        }
    }

    pub fn d(&self, f: &[f64], axis: usize, field: Field) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.at(i, j);
                if !self.fluid[c] {
                    continue;
                }
                out[c] = if axis == 0 {
                    (self.face_value(f, i, j, 1, 0, field) - self.face_value(f, i, j, -1, 0, field)) / self.dx
                } else {
                    (self.face_value(f, i, j, 0, 1, field) - self.face_value(f, i, j, 0, -1, field)) / self.dy
                };
            }
        }
        out
    }

    pub fn lap(&self, f: &[f64], field: Field) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for j in 0..self.ny {
            for i in 0..self.nx {
                let c = self.at(i, j);
                if !self.fluid[c] {
                    continue;
                }
                let g = |di: isize, dj: isize| -> f64 { 2.0 * self.face_value(f, i, j, di, dj, field) - f[c] };
                let ghost = |di: isize, dj: isize| -> f64 {
                    match self.neighbour(i, j, di, dj) {
                        Ok(n) => f[n],
                        Err(_) => g(di, dj),
                    }
                };
                out[c] = (ghost(1, 0) + ghost(-1, 0) - 2.0 * f[c]) / (self.dx * self.dx)
                    + (ghost(0, 1) + ghost(0, -1) - 2.0 * f[c]) / (self.dy * self.dy);
            }
        }
        out
    }
}

/// Reference operators, stored as nested vectors.
pub struct NaiveOps {
    pub m: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub bt: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub p: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub n: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub dvec: Vec<f64>,
    pub c: Vec<Vec<Vec<f64>>>,
    pub g: Vec<Vec<Vec<f64>>>,
    pub ct: [Vec<Vec<Vec<f64>>>; 4],
}

/// Evaluates every operator by direct loops over cells for modes given as
/// `(u, v)` pairs, scalar pressure modes and scalar eddy-viscosity modes.
pub fn naive_ops(
    g: &GridSpec,
    w: &[f64],
    phi: &[(Vec<f64>, Vec<f64>)],
    chi: &[Vec<f64>],
    eta: &[Vec<f64>],
) -> NaiveOps {
    let z = Naive::new(g);
    let nc = z.n();
    let r = phi.len();
    let q = chi.len();
    let ip = |a: &[f64], b: &[f64]| -> f64 { (0..nc).map(|c| w[c] * a[c] * b[c]).sum() };
    let ip2 = |a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)| ip(&a.0, &b.0) + ip(&a.1, &b.1);

    let gradp = |f: &[f64]| (z.d(f, 0, Field::Pressure), z.d(f, 1, Field::Pressure));
    let lapv = |f: &(Vec<f64>, Vec<f64>)| (z.lap(&f.0, Field::Vel(0)), z.lap(&f.1, Field::Vel(1)));
    // Component n of ∇·(η (∇φ)ᵀ) = Σ_m ∂_m(η ∂_n φ_m).
    let eta_gt = |e: Option<&[f64]>, f: &(Vec<f64>, Vec<f64>)| {
        let comps = [&f.0, &f.1];
        let mut out = [vec![0.0; nc], vec![0.0; nc]];
        for (n, o) in out.iter_mut().enumerate() {
            for m in 0..2 {
                let mut inner = z.d(comps[m], n, Field::Vel(m));
                if let Some(e) = e {
                    for c in 0..nc {
                        inner[c] *= e[c];
                    }
                }
                let dd = z.d(&inner, m, Field::AllCopy);
                for c in 0..nc {
                    o[c] += dd[c];
                }
            }
        }
        let [a, b] = out;
        (a, b)
    };
    // Component n of ∇·(a ⊗ b) = Σ_m ∂_m(a_m b_n).
    let conv = |a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>)| {
        let ac = [&a.0, &a.1];
        let bc = [&b.0, &b.1];
        let mut out = [vec![0.0; nc], vec![0.0; nc]];
        for (n, o) in out.iter_mut().enumerate() {
            for m in 0..2 {
                let prod: Vec<f64> = (0..nc).map(|c| ac[m][c] * bc[n][c]).collect();
                let dd = z.d(&prod, m, Field::Prod(m, n));
                for c in 0..nc {
                    o[c] += dd[c];
                }
            }
        }
        let [x, y] = out;
        (x, y)
    };
    let mat = |rows: usize, cols: usize, f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
        (0..rows).map(|i| (0..cols).map(|j| f(i, j)).collect()).collect()
    };

    let gchi: Vec<(Vec<f64>, Vec<f64>)> = chi.iter().map(|c| gradp(c)).collect();
    let inflow: Vec<usize> = if g.boundaries.west == EdgeKind::Inflow {
        (0..z.ny).map(|j| j * z.nx).filter(|&c| z.fluid[c]).collect()
    } else {
        Vec::new()
    };
    // PPE test functions: ∇χ with the inflow column zeroed.
    let gtest: Vec<(Vec<f64>, Vec<f64>)> = gchi
        .iter()
        .map(|(x, y)| {
            let (mut x, mut y) = (x.clone(), y.clone());
            for &c in &inflow {
                x[c] = 0.0;
                y[c] = 0.0;
            }
            (x, y)
        })
        .collect();
    let laps: Vec<_> = phi.iter().map(lapv).collect();
    let gts: Vec<_> = phi.iter().map(|f| eta_gt(None, f)).collect();

    let m = mat(r, r, &|i, j| ip2(&phi[i], &phi[j]));
    let b = mat(r, r, &|i, j| ip2(&phi[i], &laps[j]));
    let bt = mat(r, r, &|i, j| ip2(&phi[i], &gts[j]));
    let h = mat(r, q, &|i, j| ip2(&phi[i], &gchi[j]));
    let p = mat(q, r, &|i, j| {
        let dv: Vec<f64> = {
            let a = z.d(&phi[j].0, 0, Field::Vel(0));
            let b = z.d(&phi[j].1, 1, Field::Vel(1));
            (0..nc).map(|c| a[c] + b[c]).collect()
        };
        ip(&chi[i], &dv)
    });
    let d = mat(q, q, &|i, j| ip2(&gtest[i], &gtest[j]));

    let mut c = vec![vec![vec![0.0; r]; r]; r];
    let mut gt = vec![vec![vec![0.0; r]; r]; q];
    for j in 0..r {
        for k in 0..r {
            let cv = conv(&phi[j], &phi[k]);
            for i in 0..r {
                c[i][j][k] = ip2(&phi[i], &cv);
            }
            for i in 0..q {
                gt[i][j][k] = ip2(&gtest[i], &cv);
            }
        }
    }

    let n = mat(q, r, &|i, j| ip2(&gtest[i], &laps[j]));

    let e = mat(r, r, &|i, j| {
        inflow
            .iter()
            .map(|&c| z.dy * (phi[i].0[c] * phi[j].0[c] + phi[i].1[c] * phi[j].1[c]))
            .sum()
    });
    let dvec = (0..r)
        .map(|i| inflow.iter().map(|&c| z.dy * phi[i].0[c]).sum())
        .collect();

    let ne = eta.len();
    let mut ct = [
        vec![vec![vec![0.0; r]; ne]; r],
        vec![vec![vec![0.0; r]; ne]; r],
        vec![vec![vec![0.0; r]; ne]; q],
        vec![vec![vec![0.0; r]; ne]; q],
    ];
    for j in 0..ne {
        for k in 0..r {
            let el = (
                (0..nc).map(|c| eta[j][c] * laps[k].0[c]).collect::<Vec<_>>(),
                (0..nc).map(|c| eta[j][c] * laps[k].1[c]).collect::<Vec<_>>(),
            );
            let et = eta_gt(Some(&eta[j]), &phi[k]);
            for i in 0..r {
                ct[0][i][j][k] = ip2(&phi[i], &el);
                ct[1][i][j][k] = ip2(&phi[i], &et);
            }
            for i in 0..q {
                ct[2][i][j][k] = ip2(&gtest[i], &el);
                ct[3][i][j][k] = ip2(&gtest[i], &et);
            }
        }
    }

    NaiveOps {
        m,
        b,
        bt,
        h,
        p,
        d,
        n,
        e,
        dvec,
        c,
        g: gt,
        ct,
    }
}

/// A 12×6 grid with a small solid block, built directly (the solver's
/// constructor insists on at least 8 cells per direction).
pub fn small_grid(bc: BoundarySet) -> GridSpec {
    let (nx, ny) = (12, 6);
    let mut mask = vec![true; nx * ny];
    for (i, j) in [(4, 2), (5, 2), (4, 3), (5, 3)] {
        mask[j * nx + i] = false;
    }
    GridSpec {
        nx,
        ny,
        lx: 1.2,
        ly: 0.6,
        obstacle_center: [0.5, 0.3],
        obstacle_radius: 0.1,
        cell_mask: mask,
        boundaries: bc,
    }
}

/// Deterministic pseudo-random values in (-1, 1), zero on solid cells.
pub fn wiggly(g: &GridSpec, seed: f64) -> Vec<f64> {
    (0..g.nx * g.ny)
        .map(|c| {
            if g.cell_mask[c] {
                let s = ((c as f64 + 1.0) * 12.9898 + seed * 78.233).sin() * 43758.5453;
                2.0 * (s - s.floor()) - 1.0
            } else {
                0.0
            }
        })
        .collect()
}
