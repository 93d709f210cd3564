//! Exact correction snapshots and quadratic closure fitting.
//!
//! The closure ansatz is `τ(x) = Ã x + xᵀ B̃ x` with `B̃` symmetric in its
//! last two indices. Fitting is linear least squares in the entries of
//! `(Ã, B̃)`; the constrained variant keeps `sym(Ã)` negative semidefinite and
//! the fully symmetrised part of `B̃` at zero.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{ensure, Error, Result};
use crate::galerkin::Tensor3;
use crate::snapshots::CoeffSeries;

/// Exact corrections sampled at the training times.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSnapshots {
    pub times: Vec<f64>,
    /// `M × r`.
    pub tau_u: DMatrix<f64>,
    /// `M × q`, present for the pressure Poisson formulation.
    pub tau_p: Option<DMatrix<f64>>,
    pub d: usize,
    pub r: usize,
    pub q: usize,
}

impl CorrectionSnapshots {
    pub fn new(times: Vec<f64>, tau_u: DMatrix<f64>, tau_p: Option<DMatrix<f64>>, d: usize) -> Result<Self> {
        let r = tau_u.ncols();
        let q = tau_p.as_ref().map_or(0, |t| t.ncols());
        ensure!(
            tau_u.nrows() == times.len() && tau_p.as_ref().is_none_or(|t| t.nrows() == times.len()),
            Dimension,
            "correction rows do not match {} sample times",
            times.len()
        );
        ensure!(
            d >= r && d >= q,
            Dimension,
            "fine basis size {d} is below r = {r} or q = {q}"
        );
        ensure!(
            tau_u
                .iter()
                .chain(tau_p.iter().flat_map(|t| t.iter()))
                .all(|x| x.is_finite()),
            Config,
            "correction snapshots contain non-finite values"
        );
        Ok(CorrectionSnapshots {
            times,
            tau_u,
            tau_p,
            d,
            r,
            q,
        })
    }

    /// `[τ_u | τ_p]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        match &self.tau_p {
            None => self.tau_u.clone(),
            Some(tp) => {
                let (m, r, q) = (self.tau_u.nrows(), self.r, self.q);
                DMatrix::from_fn(m, r + q, |i, j| if j < r { self.tau_u[(i, j)] } else { tp[(i, j - r)] })
            }
        }
    }
}

/// `τ_u(t_j) = −[a_dᵀ C_d a_d]_{1..r} + a_rᵀ C a_r`, where `a_r` holds the
/// first `r` columns of `a_d`. `c_d` needs at least `r` rows.
pub fn exact_velocity_correction(a_d: &CoeffSeries, c_d: &Tensor3, c: &Tensor3) -> Result<DMatrix<f64>> {
    let d = a_d.n_coeffs();
    let r = c.dims[0];
    ensure!(d >= r, Dimension, "fine size {d} below coarse size {r}");
    ensure!(
        c.dims == [r, r, r] && c_d.dims[0] >= r && c_d.dims[1] == d && c_d.dims[2] == d,
        Dimension,
        "convection tensors {:?} and {:?} do not fit d = {d}, r = {r}",
        c_d.dims,
        c.dims
    );
    let fine = c_d.truncate(r, d, d);
    let mut out = DMatrix::zeros(a_d.n_times(), r);
    for j in 0..a_d.n_times() {
        let ad = a_d.row(j);
        let f = fine.contract(&ad, &ad);
        let g = c.contract(&ad[..r], &ad[..r]);
        for i in 0..r {
            out[(j, i)] = -f[i] + g[i];
        }
    }
    Ok(out)
}

/// `τ_p(t_j) = [D_d b_d]_{1..q} − D b_q + [a_dᵀ G_d a_d]_{1..q} − a_rᵀ G a_r`.
pub fn exact_pressure_correction(
    a_d: &CoeffSeries,
    b_d: &CoeffSeries,
    d_d: &DMatrix<f64>,
    d: &DMatrix<f64>,
    g_d: &Tensor3,
    g: &Tensor3,
) -> Result<DMatrix<f64>> {
    let (dv, dp) = (a_d.n_coeffs(), b_d.n_coeffs());
    let q = d.nrows();
    let r = g.dims[1];
    ensure!(
        a_d.times == b_d.times,
        Dimension,
        "velocity and pressure coefficients are sampled at different times"
    );
    ensure!(
        d.ncols() == q && q <= dp && r <= dv,
        Dimension,
        "coarse sizes q = {q}, r = {r} exceed fine sizes {dp}, {dv}"
    );
    ensure!(
        d_d.nrows() >= q && d_d.ncols() == dp,
        Dimension,
        "fine stiffness is {}x{}, expected at least {q} rows and {dp} columns",
        d_d.nrows(),
        d_d.ncols()
    );
    ensure!(
        g.dims == [q, r, r] && g_d.dims[0] >= q && g_d.dims[1] == dv && g_d.dims[2] == dv,
        Dimension,
        "pressure convection tensors {:?} and {:?} do not fit",
        g_d.dims,
        g.dims
    );
    let fine_g = g_d.truncate(q, dv, dv);
    let mut out = DMatrix::zeros(a_d.n_times(), q);
    for j in 0..a_d.n_times() {
        let ad = a_d.row(j);
        let bd = b_d.row(j);
        let gf = fine_g.contract(&ad, &ad);
        let gc = g.contract(&ad[..r], &ad[..r]);
        for i in 0..q {
            let mut fine_d = 0.0;
            for (k, bk) in bd.iter().enumerate() {
                fine_d += d_d[(i, k)] * bk;
            }
            let mut coarse_d = 0.0;
            for k in 0..q {
                coarse_d += d[(i, k)] * bd[k];
            }
            out[(j, i)] = (fine_d - coarse_d) + (gf[i] - gc[i]);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClosureVariant {
    SupUnconstrained,
    SupConstrained,
    PpeJoint,
}

impl ClosureVariant {
    pub fn tag(self) -> u8 {
        match self {
            ClosureVariant::SupUnconstrained => 0,
            ClosureVariant::SupConstrained => 1,
            ClosureVariant::PpeJoint => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ClosureVariant::SupUnconstrained),
            1 => Some(ClosureVariant::SupConstrained),
            2 => Some(ClosureVariant::PpeJoint),
            _ => None,
        }
    }
}

/// A fitted quadratic closure. For [`ClosureVariant::PpeJoint`] the input and
/// output are the concatenation `(a, b)` of length `r + q`; the first `r`
/// outputs form `τ_u` and the last `q` form `τ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureModel {
    pub variant: ClosureVariant,
    pub r: usize,
    pub q: usize,
    /// `n × n` with `n = r` or `r + q`.
    pub a_tilde: DMatrix<f64>,
    /// `n × n × n`, symmetric in the last two indices.
    pub b_tilde: Tensor3,
    /// Training misfit `Σ_j ‖τ_j − τ(x_j)‖²`.
    pub residual: f64,
    /// Misfit plus the ridge penalty.
    pub objective: f64,
    pub ridge: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest eigenvalue of `sym(Ã)`.
    pub max_eig_sym_a: f64,
    /// Max-norm of the fully symmetrised `B̃`.
    pub sym6_b: f64,
    pub warnings: Vec<String>,
}

impl ClosureModel {
    /// All-zero model, useful to switch a closure on without effect.
    pub fn zero(variant: ClosureVariant, r: usize, q: usize) -> Self {
        let n = if variant == ClosureVariant::PpeJoint { r + q } else { r };
        ClosureModel {
            variant,
            r,
            q,
            a_tilde: DMatrix::zeros(n, n),
            b_tilde: Tensor3::zeros(n, n, n),
            residual: 0.0,
            objective: 0.0,
            ridge: 0.0,
            iterations: 0,
            converged: true,
            max_eig_sym_a: 0.0,
            sym6_b: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn n_in(&self) -> usize {
        self.a_tilde.ncols()
    }

    fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.b_tilde.contract(x, x);
        for (i, o) in out.iter_mut().enumerate() {
            for (k, xk) in x.iter().enumerate() {
                *o += self.a_tilde[(i, k)] * xk;
            }
        }
        out
    }
}

/// `(τ_u, τ_p)` for a model; `b` is required by the joint variant.
pub fn eval_closure(model: &ClosureModel, a: &[f64], b: Option<&[f64]>) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    ensure!(
        a.len() == model.r,
        Dimension,
        "closure expects {} velocity coefficients, got {}",
        model.r,
        a.len()
    );
    match model.variant {
        ClosureVariant::PpeJoint => {
            let b = b.ok_or_else(|| Error::Dimension("joint closure needs pressure coefficients".into()))?;
            ensure!(
                b.len() == model.q,
                Dimension,
                "closure expects {} pressure coefficients, got {}",
                model.q,
                b.len()
            );
            let mut x = a.to_vec();
            x.extend_from_slice(b);
            let mut t = model.eval_raw(&x);
            let tp = t.split_off(model.r);
            Ok((t, Some(tp)))
        }
        _ => Ok((model.eval_raw(a), None)),
    }
}

/// Quadratic features `x_k` then `√2 x_k x_l (k < l)` / `x_k² (k = l)`, so
/// that the coefficient vector has the Frobenius norm of `(Ã, B̃)`.
fn features(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut f = Vec::with_capacity(n + n * (n + 1) / 2);
    f.extend_from_slice(x);
    for k in 0..n {
        for l in k..n {
            let s = if k == l { 1.0 } else { core::f64::consts::SQRT_2 };
            f.push(s * x[k] * x[l]);
        }
    }
    f
}

fn unpack(theta: &DMatrix<f64>, n: usize) -> (DMatrix<f64>, Tensor3) {
    // theta: p × n_out
    let n_out = theta.ncols();
    let a = DMatrix::from_fn(n_out, n, |i, k| theta[(k, i)]);
    let mut b = Tensor3::zeros(n_out, n, n);
    for i in 0..n_out {
        let mut at = n;
        for k in 0..n {
            for l in k..n {
                let v = if k == l {
                    theta[(at, i)]
                } else {
                    theta[(at, i)] / core::f64::consts::SQRT_2
                };
                b.set(i, k, l, v);
                b.set(i, l, k, v);
                at += 1;
            }
        }
    }
    (a, b)
}

fn check_inputs(x: &CoeffSeries, targets: &DMatrix<f64>) -> Result<()> {
    ensure!(
        x.n_times() == targets.nrows(),
        Dimension,
        "{} input samples for {} target samples",
        x.n_times(),
        targets.nrows()
    );
    if x.n_times() == 0 || x.n_coeffs() == 0 {
        return Err(Error::Empty("closure training data"));
    }
    Ok(())
}

/// Default ridge: `1e-8 · tr(XᵀX) / unknowns`.
pub fn default_ridge(x: &CoeffSeries) -> f64 {
    let rows: Vec<Vec<f64>> = (0..x.n_times()).map(|j| features(&x.row(j))).collect();
    let p = rows.first().map_or(1, |r| r.len());
    let tr: f64 = rows.iter().flat_map(|r| r.iter()).map(|v| v * v).sum();
    1e-8 * tr / p as f64
}

/// Ridge least squares `min ‖X θ − T‖² + λ‖θ‖²` via SVD of `X`.
fn ridge_solve(x: &DMatrix<f64>, t: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let svd = SVD::new(x.clone(), true, true);
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0f64, |m, v| m.max(*v));
    let p = x.ncols();
    let k = s.len();
    if lambda == 0.0 {
        let rank = s.iter().filter(|v| **v > 1e-12 * smax).count();
        if rank < p || smax == 0.0 {
            return Err(Error::IllPosed(format!("normal system has rank {rank} < {p} unknowns")));
        }
    }
    let ut = u.transpose() * t;
    let mut scaled = ut;
    for i in 0..k {
        let f = if lambda == 0.0 {
            1.0 / s[i]
        } else {
            s[i] / (s[i] * s[i] + lambda)
        };
        for c in 0..scaled.ncols() {
            scaled[(i, c)] *= f;
        }
    }
    Ok(vt.transpose() * scaled)
}

fn design(x: &CoeffSeries) -> DMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..x.n_times()).map(|j| features(&x.row(j))).collect();
    let p = rows[0].len();
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

fn misfit(model: &ClosureModel, x: &CoeffSeries, targets: &DMatrix<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..x.n_times() {
        let pred = model.eval_raw(&x.row(j));
        for (i, p) in pred.iter().enumerate() {
            s += (targets[(j, i)] - p).powi(2);
        }
    }
    s
}

fn frob2(model: &ClosureModel) -> f64 {
    model.a_tilde.iter().map(|v| v * v).sum::<f64>() + model.b_tilde.data.iter().map(|v| v * v).sum::<f64>()
}

fn finish(mut model: ClosureModel, x: &CoeffSeries, targets: &DMatrix<f64>) -> ClosureModel {
    model.residual = misfit(&model, x, targets);
    model.objective = model.residual + model.ridge * frob2(&model);
    model.max_eig_sym_a = max_eig_sym(&model.a_tilde);
    model.sym6_b = sym6(&model.b_tilde).max_abs();
    model
}

fn fit_quadratic(
    variant: ClosureVariant,
    r: usize,
    q: usize,
    x: &CoeffSeries,
    targets: &DMatrix<f64>,
    ridge: f64,
) -> Result<ClosureModel> {
    check_inputs(x, targets)?;
    ensure!(
        ridge >= 0.0 && ridge.is_finite(),
        Config,
        "ridge must be finite and nonnegative"
    );
    let n = x.n_coeffs();
    let xd = design(x);
    let mut warnings = Vec::new();
    if 2 * x.n_times() < xd.ncols() {
        warnings.push(format!(
            "{} samples for {} unknowns per output; the fit leans on the ridge",
            x.n_times(),
            xd.ncols()
        ));
    }
    let theta = ridge_solve(&xd, targets, ridge)?;
    let (a, b) = unpack(&theta, n);
    let mut model = ClosureModel::zero(variant, r, q);
    model.a_tilde = a;
    model.b_tilde = b;
    model.ridge = ridge;
    model.warnings = warnings;
    Ok(finish(model, x, targets))
}

/// Least-squares fit of `τ_u ≈ Ã a + aᵀ B̃ a`.
pub fn fit_unconstrained(corr: &CorrectionSnapshots, a_r: &CoeffSeries, ridge: Option<f64>) -> Result<ClosureModel> {
    ensure!(
        a_r.n_coeffs() == corr.r,
        Dimension,
        "{} coefficients for a closure of size {}",
        a_r.n_coeffs(),
        corr.r
    );
    let lambda = ridge.unwrap_or_else(|| default_ridge(a_r));
    fit_quadratic(ClosureVariant::SupUnconstrained, corr.r, 0, a_r, &corr.tau_u, lambda)
}

/// Joint fit of `(τ_u, τ_p) ≈ J_A x + xᵀ J_B x` with `x = (a, b)`.
pub fn fit_joint_ppe(corr: &CorrectionSnapshots, ab: &CoeffSeries, ridge: Option<f64>) -> Result<ClosureModel> {
    ensure!(corr.tau_p.is_some(), Config, "joint fit needs pressure corrections");
    ensure!(
        ab.n_coeffs() == corr.r + corr.q,
        Dimension,
        "{} coefficients for r + q = {}",
        ab.n_coeffs(),
        corr.r + corr.q
    );
    let lambda = ridge.unwrap_or_else(|| default_ridge(ab));
    fit_quadratic(ClosureVariant::PpeJoint, corr.r, corr.q, ab, &corr.stacked(), lambda)
}

/// Symmetric part of a square matrix.
fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn max_eig_sym(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(sym(a))
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |m, v| m.max(*v))
}

/// Average of `B` over all six index permutations.
pub fn sym6(b: &Tensor3) -> Tensor3 {
    let [n0, n1, n2] = b.dims;
    let mut out = Tensor3::zeros(n0, n1, n2);
    if n0 != n1 || n1 != n2 {
        return out;
    }
    for i in 0..n0 {
        for j in 0..n0 {
            for k in 0..n0 {
                let s =
                    b.get(i, j, k) + b.get(i, k, j) + b.get(j, i, k) + b.get(j, k, i) + b.get(k, i, j) + b.get(k, j, i);
                out.set(i, j, k, s / 6.0);
            }
        }
    }
    out
}

/// Projection of `A` onto `{A : sym(A) ⪯ 0}`: clip the symmetric part's
/// eigenvalues at zero, keep the skew part.
pub fn project_nsd(a: &DMatrix<f64>) -> DMatrix<f64> {
    let s = sym(a);
    let skew = a - &s;
    let eig = SymmetricEigen::new(s);
    let clipped = eig.eigenvalues.map(|v| v.min(0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&clipped) * v.transpose() + skew
}

/// Orthonormal basis (columns, in the scaled parameter space of [`features`])
/// of the `B̃` slices whose full symmetrisation vanishes.
fn sym6_free_basis(n: usize) -> DMatrix<f64> {
    let half = n * (n + 1) / 2;
    let dim = n * half;
    // Matrix of `B ↦ B − sym6(B)` in the scaled parameter space.
    let mut proj = DMatrix::zeros(dim, dim);
    let mut theta = DMatrix::zeros(n + half, n);
    for col in 0..dim {
        theta.fill(0.0);
        theta[(n + col % half, col / half)] = 1.0;
        let (_, b) = unpack(&theta, n);
        let s = sym6(&b);
        let mut diff = b.clone();
        for (d, v) in diff.data.iter_mut().zip(&s.data) {
            *d -= v;
        }
        // Back to scaled parameters.
        for i in 0..n {
            let mut at = 0;
            for k in 0..n {
                for l in k..n {
                    let sc = if k == l { 1.0 } else { core::f64::consts::SQRT_2 };
                    proj[(i * half + at, col)] = sc * diff.get(i, k, l);
                    at += 1;
                }
            }
        }
    }
    let eig = SymmetricEigen::new((&proj + proj.transpose()) * 0.5);
    let keep: Vec<usize> = (0..dim).filter(|&k| eig.eigenvalues[k] > 0.5).collect();
    let mut out = DMatrix::zeros(dim, keep.len());
    for (c, &k) in keep.iter().enumerate() {
        out.set_column(c, &eig.eigenvectors.column(k));
    }
    out
}

/// Settings of the constrained fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedFit {
    pub ridge: Option<f64>,
    pub max_iter: usize,
    /// Stop when the projected-gradient norm drops below this.
    pub tol: f64,
}

impl Default for ConstrainedFit {
    fn default() -> Self {
        ConstrainedFit {
            ridge: None,
            max_iter: 20_000,
            tol: 1e-10,
        }
    }
}

/// Fit with `sym(Ã) ⪯ 0` and `sym6(B̃) = 0`. `B̃` is eliminated exactly for
/// each `Ã`; `Ã` follows projected gradient steps with backtracking.
pub fn fit_constrained(corr: &CorrectionSnapshots, a_r: &CoeffSeries, cfg: &ConstrainedFit) -> Result<ClosureModel> {
    let n = corr.r;
    ensure!(
        a_r.n_coeffs() == n,
        Dimension,
        "{} coefficients for a closure of size {n}",
        a_r.n_coeffs()
    );
    check_inputs(a_r, &corr.tau_u)?;
    let lambda = cfg.ridge.unwrap_or_else(|| default_ridge(a_r));
    ensure!(
        lambda >= 0.0 && lambda.is_finite(),
        Config,
        "ridge must be finite and nonnegative"
    );
    let m = a_r.n_times();
    let half = n * (n + 1) / 2;
    let nb = sym6_free_basis(n);
    let nz = nb.ncols();
    let na = n * n;

    // Design for θ = (vec Ã row-major, z) over all (sample, output) pairs.
    let mut phi = DMatrix::zeros(m * n, na + nz);
    let mut t = DVector::zeros(m * n);
    for j in 0..m {
        let x = a_r.row(j);
        let f = features(&x);
        for i in 0..n {
            let row = j * n + i;
            t[row] = corr.tau_u[(j, i)];
            for k in 0..n {
                phi[(row, i * n + k)] = x[k];
            }
            for c in 0..nz {
                let mut s = 0.0;
                for h in 0..half {
                    s += nb[(i * half + h, c)] * f[n + h];
                }
                phi[(row, na + c)] = s;
            }
        }
    }
    let mut hess = phi.transpose() * &phi;
    for k in 0..na + nz {
        hess[(k, k)] += lambda;
    }
    let grad0 = phi.transpose() * &t;

    // Eliminate z: z(a) = Qzz⁺ (g_z − Qza a).
    let qaa = hess.view((0, 0), (na, na)).into_owned();
    let qaz = hess.view((0, na), (na, nz)).into_owned();
    let qzz = hess.view((na, na), (nz, nz)).into_owned();
    let ga = grad0.rows(0, na).into_owned();
    let gz = grad0.rows(na, nz).into_owned();
    let qzz_pinv = pinv_sym(&qzz, lambda)?;
    let schur = &qaa - &qaz * &qzz_pinv * qaz.transpose();
    let rhs = &ga - &qaz * (&qzz_pinv * &gz);

    // Reduced objective f(a) = ½ aᵀ S a − rhsᵀ a (+ const).
    let f = |a: &DVector<f64>| 0.5 * a.dot(&(&schur * a)) - rhs.dot(a);
    let lip = SymmetricEigen::new(schur.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(*v))
        .max(f64::MIN_POSITIVE);
    let to_mat = |a: &DVector<f64>| DMatrix::from_fn(n, n, |i, k| a[i * n + k]);
    let to_vec = |a: &DMatrix<f64>| DVector::from_fn(na, |idx, _| a[(idx / n, idx % n)]);
    let proj = |a: &DVector<f64>| to_vec(&project_nsd(&to_mat(a)));

    let unconstrained = pinv_sym(&schur, lambda)
        .map(|p| &p * &rhs)
        .unwrap_or_else(|_| DVector::zeros(na));
    let mut a = proj(&unconstrained);
    let mut fa = f(&a);
    let mut step = 1.0 / lip;
    let mut iterations = 0;
    let mut converged = false;
    let scale = 1.0 + rhs.norm();
    for it in 0..cfg.max_iter {
        iterations = it;
        let g = &schur * &a - &rhs;
        let pg = (&a - proj(&(&a - &g / lip))) * lip;
        if pg.norm() <= cfg.tol * scale {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand = proj(&(&a - &g * step));
            let fc = f(&cand);
            let diff = &cand - &a;
            if fc <= fa + g.dot(&diff) + diff.norm_squared() / (2.0 * step) {
                a = cand;
                fa = fc;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(1.0 / lip * 4.0);
        iterations = it + 1;
    }
    let z = &qzz_pinv * (&gz - qaz.transpose() * &a);
    let bvec = &nb * z;

    let mut theta = DMatrix::zeros(n + half, n);
    for i in 0..n {
        for h in 0..half {
            theta[(n + h, i)] = bvec[i * half + h];
        }
    }
    let (_, mut b) = unpack(&theta, n);
    // Remove round-off left in the fully symmetric part.
    let s = sym6(&b);
    for (x, v) in b.data.iter_mut().zip(&s.data) {
        *x -= v;
    }
    let mut model = ClosureModel::zero(ClosureVariant::SupConstrained, n, 0);
    model.a_tilde = project_nsd(&to_mat(&a));
    model.b_tilde = b;
    model.ridge = lambda;
    model.iterations = iterations;
    model.converged = converged;
    if !converged {
        model.warnings.push(format!(
            "projected gradient stopped after {iterations} iterations without reaching tolerance {:e}",
            cfg.tol
        ));
    }
    Ok(finish(model, a_r, &corr.tau_u))
}

/// Pseudo-inverse of a symmetric positive semidefinite matrix.
fn pinv_sym(q: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new((q + q.transpose()) * 0.5);
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = 1e-13 * lmax;
    let rank = eig.eigenvalues.iter().filter(|v| **v > cut).count();
    if lambda == 0.0 && rank < n {
        return Err(Error::IllPosed(format!(
            "constrained normal system has rank {rank} < {n}"
        )));
    }
    let inv = eig.eigenvalues.map(|v| if v > cut { 1.0 / v } else { 0.0 });
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&inv) * v.transpose())
}

/// Default training length: the first quarter of the samples (at least one).
pub fn default_train_len(n_samples: usize) -> usize {
    (n_samples / 4).max(1)
}
