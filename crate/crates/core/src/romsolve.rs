//! Implicit time integration of the reduced systems.
//!
//! The unknown at each step is the stacked state `x = (a, b)`. Both schemes
//! are implicit (Euler and BDF2) and solved by Newton's method with a
//! central-difference Jacobian. Eddy-viscosity coefficients are lagged: they
//! are evaluated once per step from the previous velocity state.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;

use crate::closure::{eval_closure, ClosureModel, ClosureVariant};
use crate::error::{ensure, Error, Result};
use crate::evmodel::EddyViscosityModel;
use crate::galerkin::RomOperators;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Formulation {
    /// Supremizer-enriched velocity with the divergence constraint.
    Sup,
    /// Pressure Poisson equation.
    Ppe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Implicit Euler.
    Order1,
    /// BDF2, started with one implicit Euler step.
    Order2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on the Euclidean norm of the stacked residual.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-10,
            max_iter: 25,
            max_halvings: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomRunConfig {
    pub formulation: Formulation,
    pub c_u: bool,
    pub c_p: bool,
    pub c_t: bool,
    pub scheme: Scheme,
    pub dt: f64,
    pub n_steps: usize,
    pub t0: f64,
    pub newton: NewtonConfig,
}

impl Default for RomRunConfig {
    fn default() -> Self {
        RomRunConfig {
            formulation: Formulation::Sup,
            c_u: false,
            c_p: false,
            c_t: false,
            scheme: Scheme::Order2,
            dt: 1e-3,
            n_steps: 100,
            t0: 0.0,
            newton: NewtonConfig::default(),
        }
    }
}

impl RomRunConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            !(self.c_p && self.formulation == Formulation::Sup),
            Config,
            "the pressure correction switch applies to the pressure Poisson formulation only"
        );
        ensure!(
            self.dt > 0.0 && self.dt.is_finite(),
            Config,
            "time step must be positive"
        );
        ensure!(
            self.newton.tol > 0.0 && self.newton.max_iter >= 1,
            Config,
            "Newton tolerance must be positive and at least one iteration allowed"
        );
        Ok(())
    }
}

/// Optional closure terms attached to a run.
#[derive(Clone, Copy, Default)]
pub struct Closures<'a> {
    pub closure: Option<&'a ClosureModel>,
    pub ev: Option<&'a dyn EddyViscosityModel>,
}

/// Previous states entering the time-derivative stencil.
#[derive(Debug, Clone, Copy)]
pub struct History<'a> {
    /// `aⁿ`.
    pub prev: &'a [f64],
    /// `aⁿ⁻¹`, required for BDF2.
    pub prev2: Option<&'a [f64]>,
}

/// Discrete `ȧ` for the given scheme.
pub fn time_derivative(scheme: Scheme, a: &[f64], hist: &History, dt: f64) -> Vec<f64> {
    match (scheme, hist.prev2) {
        (Scheme::Order2, Some(p2)) => a
            .iter()
            .zip(hist.prev.iter().zip(p2))
            .map(|(x, (p1, p2))| (3.0 * x - 4.0 * p1 + p2) / (2.0 * dt))
            .collect(),
        _ => a.iter().zip(hist.prev).map(|(x, p)| (x - p) / dt).collect(),
    }
}

/// Everything a residual evaluation needs besides the unknowns.
#[derive(Clone, Copy)]
pub struct StepContext<'a> {
    pub ops: &'a RomOperators,
    pub closure: Option<&'a ClosureModel>,
    /// Lagged eddy-viscosity coefficients.
    pub g: &'a [f64],
    pub cfg: &'a RomRunConfig,
    pub scheme: Scheme,
    pub hist: History<'a>,
}

fn check_ctx(ctx: &StepContext, a: &[f64], b: &[f64]) -> Result<()> {
    let ops = ctx.ops;
    ensure!(
        a.len() == ops.r() && b.len() == ops.q && ctx.hist.prev.len() == ops.r(),
        Dimension,
        "state sizes ({}, {}) do not match operators ({}, {})",
        a.len(),
        b.len(),
        ops.r(),
        ops.q
    );
    ensure!(
        !ctx.cfg.c_t || ctx.g.len() == ops.n_nut,
        Dimension,
        "{} eddy-viscosity coefficients for {} tensor slices",
        ctx.g.len(),
        ops.n_nut
    );
    Ok(())
}

/// Momentum residual shared by both formulations, plus the closure outputs.
fn momentum(ctx: &StepContext, a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let ops = ctx.ops;
    let r = ops.r();
    let v = &ops.vel;
    let adot = time_derivative(ctx.scheme, a, &ctx.hist, ctx.dt());
    let av = DVector::from_column_slice(a);
    let mut res = &v.m * DVector::from_vec(adot);
    res -= (&v.b + &v.bt) * &av * ops.nu;
    let conv = v.c.contract(a, a);
    for i in 0..r {
        res[i] += conv[i];
    }
    if ops.q > 0 {
        res += &v.h * DVector::from_column_slice(b);
    }
    for (k, (dk, ek)) in v.dk.iter().zip(&v.ek).enumerate() {
        res -= (dk * ops.u_bc[k] - ek * &av) * ops.tau;
    }
    let mut tau_p = None;
    if let Some(model) = ctx.closure {
        if ctx.cfg.c_u || ctx.cfg.c_p {
            let (tu, tp) = match model.variant {
                ClosureVariant::PpeJoint => eval_closure(model, a, Some(b))?,
                _ => eval_closure(model, a, None)?,
            };
            if ctx.cfg.c_u {
                for i in 0..r {
                    res[i] -= tu[i];
                }
            }
            tau_p = tp;
        }
    }
    if ctx.cfg.c_t {
        let t1 = ops.turb.ct1.contract(ctx.g, a);
        let t2 = ops.turb.ct2.contract(ctx.g, a);
        for i in 0..r {
            res[i] -= t1[i] + t2[i];
        }
    }
    Ok((res.data.into(), tau_p))
}

impl StepContext<'_> {
    fn dt(&self) -> f64 {
        self.cfg.dt
    }
}

/// Stacked residual `(momentum, P a)` of the supremizer system.
pub fn residual_sup(ctx: &StepContext, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_ctx(ctx, a, b)?;
    let (mut out, _) = momentum(ctx, a, b)?;
    let pa = &ctx.ops.vel.p * DVector::from_column_slice(a);
    out.extend(pa.iter());
    Ok(out)
}

/// Pressure block `D b + aᵀGa − c_t gᵀ(CT3+CT4)a − νNa − L + c_p τ^p`.
fn pressure_block(ctx: &StepContext, a: &[f64], b: &[f64], tau_p: Option<&[f64]>) -> Vec<f64> {
    let ops = ctx.ops;
    let p = &ops.ppe;
    let mut res = &p.d * DVector::from_column_slice(b) - &p.n * DVector::from_column_slice(a) * ops.nu - &p.l;
    let gq = p.g.contract(a, a);
    for i in 0..ops.q {
        res[i] += gq[i];
    }
    if ctx.cfg.c_t {
        let t3 = ops.turb.ct3.contract(ctx.g, a);
        let t4 = ops.turb.ct4.contract(ctx.g, a);
        for i in 0..ops.q {
            res[i] -= t3[i] + t4[i];
        }
    }
    if ctx.cfg.c_p {
        if let Some(tp) = tau_p {
            for i in 0..ops.q {
                res[i] += tp[i];
            }
        }
    }
    res.data.into()
}

/// Stacked residual `(momentum, pressure Poisson)`.
pub fn residual_ppe(ctx: &StepContext, a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    check_ctx(ctx, a, b)?;
    let (mut out, tau_p) = momentum(ctx, a, b)?;
    let tp = closure_tau_p(ctx, a, b, tau_p)?;
    out.extend(pressure_block(ctx, a, b, tp.as_deref()));
    Ok(out)
}

fn closure_tau_p(ctx: &StepContext, a: &[f64], b: &[f64], known: Option<Vec<f64>>) -> Result<Option<Vec<f64>>> {
    if !ctx.cfg.c_p || known.is_some() {
        return Ok(known);
    }
    match ctx.closure {
        Some(m) if m.variant == ClosureVariant::PpeJoint => Ok(eval_closure(m, a, Some(b))?.1),
        _ => Ok(None),
    }
}

fn residual(ctx: &StepContext, x: &[f64]) -> Result<Vec<f64>> {
    let r = ctx.ops.r();
    let (a, b) = x.split_at(r);
    match ctx.cfg.formulation {
        Formulation::Sup => residual_sup(ctx, a, b),
        Formulation::Ppe => residual_ppe(ctx, a, b),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Outcome of a converged Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Newton's method with a central-difference Jacobian (step
/// `1e-7·(1 + ‖x‖)`) and step halving whenever the residual grows.
pub fn newton<F>(x0: &[f64], mut f: F, cfg: &NewtonConfig) -> Result<NewtonOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    let mut rn = norm(&fx);
    let mut it = 0;
    while rn > cfg.tol {
        if it == cfg.max_iter || !rn.is_finite() {
            return Err(Error::NoConvergence {
                context: "Newton step",
                iterations: it,
                residual: rn,
            });
        }
        it += 1;
        let h = 1e-7 * (1.0 + norm(&x));
        let mut jac = DMatrix::zeros(fx.len(), n);
        let mut probe = x.clone();
        for k in 0..n {
            probe[k] = x[k] + h;
            let fp = f(&probe)?;
            probe[k] = x[k] - h;
            let fm = f(&probe)?;
            probe[k] = x[k];
            for (i, (p, m)) in fp.iter().zip(&fm).enumerate() {
                jac[(i, k)] = (p - m) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(fx.len(), fx.iter().map(|v| -v));
        let dx = jac.lu().solve(&rhs).ok_or(Error::Singular("Newton Jacobian"))?;
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("Newton Jacobian"));
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.max_halvings {
            let cand: Vec<f64> = x.iter().zip(dx.iter()).map(|(xi, d)| xi + lambda * d).collect();
            let fc = f(&cand)?;
            let rc = norm(&fc);
            if rc < rn || rc <= cfg.tol {
                x = cand;
                fx = fc;
                rn = rc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                context: "Newton step (line search)",
                iterations: it,
                residual: rn,
            });
        }
    }
    Ok(NewtonOutcome {
        x,
        iterations: it,
        residual: rn,
    })
}

/// Advances `(a, b)` by one step of the given scheme.
pub fn step(ctx: &StepContext, x0: &[f64]) -> Result<NewtonOutcome> {
    newton(x0, |x| residual(ctx, x), &ctx.cfg.newton)
}

/// Initial condition: projected FOM coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct RomInit {
    pub a0: Vec<f64>,
    /// Pressure guess; the pressure Poisson formulation recomputes it from `a0`.
    pub b0: Option<Vec<f64>>,
}

/// Reduced coefficient history with per-step solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RomTrajectory {
    pub times: Vec<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Eddy-viscosity coefficients predicted from each row of `a`.
    pub g: DMatrix<f64>,
    /// Newton iterations per row (zero for the initial row).
    pub newton_iters: Vec<usize>,
    pub residuals: Vec<f64>,
    pub failure: Option<Error>,
}

impl RomTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// The trajectory, or the error that stopped it.
    pub fn into_result(self) -> Result<Self> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }

    pub fn row_a(&self, j: usize) -> Vec<f64> {
        self.a.row(j).iter().copied().collect()
    }

    pub fn row_b(&self, j: usize) -> Vec<f64> {
        self.b.row(j).iter().copied().collect()
    }
}

fn predict_g(ev: Option<&dyn EddyViscosityModel>, ops: &RomOperators, a: &[f64]) -> Result<Vec<f64>> {
    match ev {
        None => Ok(Vec::new()),
        Some(m) => {
            ensure!(
                m.n_in() == ops.n_u && m.n_out() == ops.n_nut,
                Dimension,
                "eddy-viscosity model maps {} -> {}, operators need {} -> {}",
                m.n_in(),
                m.n_out(),
                ops.n_u,
                ops.n_nut
            );
            m.predict(&a[..ops.n_u])
        }
    }
}

/// Pressure coefficients that satisfy the pressure block for fixed `a`.
fn initial_pressure(
    ops: &RomOperators,
    closure: Option<&ClosureModel>,
    g: &[f64],
    cfg: &RomRunConfig,
    a: &[f64],
) -> Result<NewtonOutcome> {
    let ctx = StepContext {
        ops,
        closure,
        g,
        cfg,
        scheme: Scheme::Order1,
        hist: History { prev: a, prev2: None },
    };
    newton(
        &vec![0.0; ops.q],
        |b| {
            let tp = closure_tau_p(&ctx, a, b, None)?;
            Ok(pressure_block(&ctx, a, b, tp.as_deref()))
        },
        &cfg.newton,
    )
}

/// Integrates the reduced system for `cfg.n_steps` steps. A failing step ends
/// the run early; the rows computed so far are returned with `failure` set.
pub fn run_rom(ops: &RomOperators, closures: Closures, cfg: &RomRunConfig, init: &RomInit) -> Result<RomTrajectory> {
    cfg.validate()?;
    let (r, q) = (ops.r(), ops.q);
    ensure!(
        init.a0.len() == r,
        Dimension,
        "initial state has {} coefficients, expected {r}",
        init.a0.len()
    );
    if cfg.c_u || cfg.c_p {
        let model = closures
            .closure
            .ok_or_else(|| Error::Config("a correction switch is on but no closure model was given".into()))?;
        ensure!(
            model.r == r && (model.variant != ClosureVariant::PpeJoint || model.q == q),
            Dimension,
            "closure fitted for r = {}, q = {}; operators have r = {r}, q = {q}",
            model.r,
            model.q
        );
        ensure!(
            !cfg.c_p || model.variant == ClosureVariant::PpeJoint,
            Config,
            "the pressure correction needs a joint closure model"
        );
        ensure!(
            (cfg.formulation == Formulation::Ppe) == (model.variant == ClosureVariant::PpeJoint),
            Config,
            "closure variant {:?} does not fit the {:?} formulation",
            model.variant,
            cfg.formulation
        );
    }
    if cfg.c_t {
        ensure!(
            closures.ev.is_some(),
            Config,
            "the eddy-viscosity switch is on but no model was given"
        );
    }
    let closure = if cfg.c_u || cfg.c_p { closures.closure } else { None };
    let ev = if cfg.c_t { closures.ev } else { None };
    let n_g = ev.map_or(0, |m| m.n_out());

    let mut g0 = predict_g(ev, ops, &init.a0)?;
    let b0 = match cfg.formulation {
        Formulation::Ppe if q > 0 => initial_pressure(ops, closure, &g0, cfg, &init.a0)?.x,
        _ => match &init.b0 {
            Some(b) => {
                ensure!(
                    b.len() == q,
                    Dimension,
                    "initial pressure has {} coefficients, expected {q}",
                    b.len()
                );
                b.clone()
            }
            None => vec![0.0; q],
        },
    };

    let rows = cfg.n_steps + 1;
    let mut times = Vec::with_capacity(rows);
    let mut a_rows: Vec<Vec<f64>> = Vec::with_capacity(rows);
    let mut b_rows: Vec<Vec<f64>> = Vec::with_capacity(rows);
    let mut g_rows: Vec<Vec<f64>> = Vec::with_capacity(rows);
    let mut iters = Vec::with_capacity(rows);
    let mut resids = Vec::with_capacity(rows);
    times.push(cfg.t0);
    a_rows.push(init.a0.clone());
    b_rows.push(b0.clone());
    g_rows.push(g0.clone());
    iters.push(0);
    resids.push(0.0);

    let mut failure = None;
    let mut x: Vec<f64> = init.a0.iter().chain(&b0).copied().collect();
    for n in 0..cfg.n_steps {
        let scheme = if n == 0 { Scheme::Order1 } else { cfg.scheme };
        let prev2 = if n >= 1 { Some(a_rows[n - 1].as_slice()) } else { None };
        let ctx = StepContext {
            ops,
            closure,
            g: &g0,
            cfg,
            scheme,
            hist: History {
                prev: &a_rows[n],
                prev2,
            },
        };
        match step(&ctx, &x) {
            Ok(out) => {
                x = out.x;
                let (a, b) = x.split_at(r);
                times.push(cfg.t0 + (n + 1) as f64 * cfg.dt);
                a_rows.push(a.to_vec());
                b_rows.push(b.to_vec());
                iters.push(out.iterations);
                resids.push(out.residual);
                match predict_g(ev, ops, a) {
                    Ok(g) => {
                        g_rows.push(g.clone());
                        g0 = g;
                    }
                    Err(e) => {
                        g_rows.push(vec![0.0; n_g]);
                        failure = Some(e);
                        break;
                    }
                }
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }

    let m = times.len();
    let to_mat = |rows: &[Vec<f64>], cols: usize| DMatrix::from_fn(m, cols, |i, j| rows[i][j]);
    Ok(RomTrajectory {
        a: to_mat(&a_rows, r),
        b: to_mat(&b_rows, q),
        g: to_mat(&g_rows, n_g),
        times,
        newton_iters: iters,
        residuals: resids,
        failure,
    })
}

/// Short label like `cu+ct` for a switch combination.
pub fn flags_label(cfg: &RomRunConfig) -> String {
    let mut parts = Vec::new();
    if cfg.c_u {
        parts.push("cu");
    }
    if cfg.c_p {
        parts.push("cp");
    }
    if cfg.c_t {
        parts.push("ct");
    }
    if parts.is_empty() {
        String::from("none")
    } else {
        parts.join("+")
    }
}
