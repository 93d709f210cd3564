//! Face-averaged finite-volume difference operators on a [`Mesh`].
//!
//! An interior face carries the average of its two cells, so derivatives
//! reduce to second-order central differences away from boundaries. A
//! boundary face (domain edge or obstacle) carries the value prescribed by a
//! [`FaceRules`] entry. With complementary rules, `x`-derivatives are exact
//! negative adjoints of each other under the cell-area inner product; the
//! velocity divergence and the pressure gradient form such a pair.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::{FaceRule, FaceRules, Mesh, Neighbor, EAST, NORTH, SOUTH, WEST};

#[inline]
fn face(f: &[f64], c: usize, nb: Neighbor, rules: &FaceRules) -> f64 {
    match nb {
        Neighbor::Cell(n) => 0.5 * (f[c] + f[n]),
        Neighbor::Boundary(side) => match rules.get(side) {
            FaceRule::Zero => 0.0,
            FaceRule::Copy => f[c],
        },
    }
}

/// Derivative along `axis` (0 = x, 1 = y) written into `out`; solid cells get zero.
pub fn deriv_into(mesh: &Mesh, f: &[f64], rules: &FaceRules, axis: usize, out: &mut [f64]) {
    let (lo, hi, h) = if axis == 0 {
        (WEST, EAST, mesh.dx)
    } else {
        (SOUTH, NORTH, mesh.dy)
    };
    let inv_h = 1.0 / h;
    for c in 0..mesh.n_cells() {
        if !mesh.fluid[c] {
            out[c] = 0.0;
            continue;
        }
        let nb = &mesh.nb[c];
        out[c] = (face(f, c, nb[hi], rules) - face(f, c, nb[lo], rules)) * inv_h;
    }
}

pub fn deriv(mesh: &Mesh, f: &[f64], rules: &FaceRules, axis: usize) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    deriv_into(mesh, f, rules, axis, &mut out);
    out
}

pub fn ddx(mesh: &Mesh, f: &[f64], rules: &FaceRules) -> Vec<f64> {
    deriv(mesh, f, rules, 0)
}

pub fn ddy(mesh: &Mesh, f: &[f64], rules: &FaceRules) -> Vec<f64> {
    deriv(mesh, f, rules, 1)
}

/// Gradient of a scalar field.
pub fn grad(mesh: &Mesh, f: &[f64], rules: &FaceRules) -> [Vec<f64>; 2] {
    [ddx(mesh, f, rules), ddy(mesh, f, rules)]
}

/// Gradient of a pressure-like field (pressure face rules).
pub fn pressure_grad(mesh: &Mesh, p: &[f64]) -> [Vec<f64>; 2] {
    grad(mesh, p, &FaceRules::pressure(&mesh.bc))
}

/// Divergence of a velocity field (velocity face rules).
pub fn div(mesh: &Mesh, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    div_into(mesh, u, v, &mut out);
    out
}

pub fn div_into(mesh: &Mesh, u: &[f64], v: &[f64], out: &mut [f64]) {
    let ru = FaceRules::velocity(&mesh.bc, 0);
    let rv = FaceRules::velocity(&mesh.bc, 1);
    let (ix, iy) = (1.0 / mesh.dx, 1.0 / mesh.dy);
    for c in 0..mesh.n_cells() {
        if !mesh.fluid[c] {
            out[c] = 0.0;
            continue;
        }
        let nb = &mesh.nb[c];
        out[c] = (face(u, c, nb[EAST], &ru) - face(u, c, nb[WEST], &ru)) * ix
            + (face(v, c, nb[NORTH], &rv) - face(v, c, nb[SOUTH], &rv)) * iy;
    }
}

#[inline]
fn ghost(f: &[f64], c: usize, nb: Neighbor, rules: &FaceRules) -> f64 {
    match nb {
        Neighbor::Cell(n) => f[n],
        Neighbor::Boundary(side) => match rules.get(side) {
            FaceRule::Zero => -f[c],
            FaceRule::Copy => f[c],
        },
    }
}

/// Compact five-point Laplacian with ghost values `2·face − cell` at boundaries.
pub fn laplacian_into(mesh: &Mesh, f: &[f64], rules: &FaceRules, out: &mut [f64]) {
    let (ix2, iy2) = (1.0 / (mesh.dx * mesh.dx), 1.0 / (mesh.dy * mesh.dy));
    for c in 0..mesh.n_cells() {
        if !mesh.fluid[c] {
            out[c] = 0.0;
            continue;
        }
        let nb = &mesh.nb[c];
        let fc = f[c];
        out[c] = (ghost(f, c, nb[EAST], rules) + ghost(f, c, nb[WEST], rules) - 2.0 * fc) * ix2
            + (ghost(f, c, nb[NORTH], rules) + ghost(f, c, nb[SOUTH], rules) - 2.0 * fc) * iy2;
    }
}

pub fn laplacian(mesh: &Mesh, f: &[f64], rules: &FaceRules) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    laplacian_into(mesh, f, rules, &mut out);
    out
}

/// A cell-centred two-component vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct VecField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VecField {
    pub fn zeros(n: usize) -> Self {
        VecField {
            x: vec![0.0; n],
            y: vec![0.0; n],
        }
    }

    pub fn comp(&self, axis: usize) -> &[f64] {
        if axis == 0 {
            &self.x
        } else {
            &self.y
        }
    }
}

/// `∇·(a ⊗ b)` with component `n = Σ_m ∂_m(a_m b_n)`.
pub fn div_outer(mesh: &Mesh, a: &VecField, b: &VecField) -> VecField {
    let rules = [FaceRules::velocity(&mesh.bc, 0), FaceRules::velocity(&mesh.bc, 1)];
    let n = a.x.len();
    let mut out = VecField::zeros(n);
    let mut prod = vec![0.0; n];
    let mut d = vec![0.0; n];
    for comp in 0..2 {
        let acc = if comp == 0 { &mut out.x } else { &mut out.y };
        for m in 0..2 {
            let am = a.comp(m);
            let bn = b.comp(comp);
            for c in 0..n {
                prod[c] = am[c] * bn[c];
            }
            deriv_into(mesh, &prod, &rules[m].product(&rules[comp]), m, &mut d);
            for c in 0..n {
                acc[c] += d[c];
            }
        }
    }
    out
}

/// Component-wise Laplacian `∇·∇φ` of a velocity field.
pub fn vector_laplacian(mesh: &Mesh, f: &VecField) -> VecField {
    VecField {
        x: laplacian(mesh, &f.x, &FaceRules::velocity(&mesh.bc, 0)),
        y: laplacian(mesh, &f.y, &FaceRules::velocity(&mesh.bc, 1)),
    }
}

/// `∇·(η (∇φ)ᵀ)` with component `n = Σ_m ∂_m(η ∂_n φ_m)`; `η = None` means `η ≡ 1`.
pub fn div_eta_grad_transpose(mesh: &Mesh, eta: Option<&[f64]>, f: &VecField) -> VecField {
    let n = f.x.len();
    let mut out = VecField::zeros(n);
    let mut inner = vec![0.0; n];
    let mut d = vec![0.0; n];
    for comp in 0..2 {
        let acc = if comp == 0 { &mut out.x } else { &mut out.y };
        for m in 0..2 {
            let rm = FaceRules::velocity(&mesh.bc, m);
            deriv_into(mesh, f.comp(m), &rm, comp, &mut inner);
            if let Some(eta) = eta {
                for c in 0..n {
                    inner[c] *= eta[c];
                }
            }
            deriv_into(mesh, &inner, &FaceRules::COPY, m, &mut d);
            for c in 0..n {
                acc[c] += d[c];
            }
        }
    }
    out
}

/// Scalar vorticity `∂_x φ_y − ∂_y φ_x`.
pub fn curl(mesh: &Mesh, f: &VecField) -> Vec<f64> {
    let dvx = ddx(mesh, &f.y, &FaceRules::velocity(&mesh.bc, 1));
    let duy = ddy(mesh, &f.x, &FaceRules::velocity(&mesh.bc, 0));
    dvx.iter().zip(&duy).map(|(a, b)| a - b).collect()
}
