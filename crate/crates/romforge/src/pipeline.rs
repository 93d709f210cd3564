//! The offline/online chain: snapshots, bases, operators, closures, runs and
//! error metrics.

use romforge_core::closure::{
    exact_pressure_correction, exact_velocity_correction, fit_constrained, fit_joint_ppe, fit_unconstrained,
    ClosureModel, ConstrainedFit, CorrectionSnapshots,
};
use romforge_core::evmodel::{fit_rbf, train_mlp, EddyViscosityModel, MlpModel, RbfModel};
use romforge_core::fom::{run_fom, SnapshotSet};
use romforge_core::galerkin::{assemble_ppe_ops, assemble_velocity_ops, OperatorConfig, RomOperators};
use romforge_core::pod::{enrich, extend_basis, pod, supremizers, usable_rank, FieldKind, PodBasis};
use romforge_core::report::{error_series, projection_series, total_integral, ErrorSeries, Reference};
use romforge_core::romsolve::{run_rom, Closures, Formulation, RomInit, RomRunConfig, RomTrajectory};
use romforge_core::snapshots::{project_coeffs, CoeffSeries, InnerProductWeights};

use std::path::Path;

use crate::cache::cached_ops;
use crate::config::{EvKind, PipelineConfig};
use crate::error::Result;

pub fn generate_snapshots(cfg: &PipelineConfig) -> Result<SnapshotSet> {
    Ok(run_fom(&cfg.grid()?, &cfg.fom())?)
}

/// POD bases of the three fields, long enough for the fine reference and
/// every reduced size requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Bases {
    pub vel: PodBasis,
    pub pres: PodBasis,
    pub nut: PodBasis,
}

impl Bases {
    /// `n` modes of each field, capped at that field's usable rank.
    pub fn build(set: &SnapshotSet, n: usize) -> Result<Bases> {
        let one = |kind| -> Result<PodBasis> { Ok(pod(set, kind, n.min(usable_rank(set, kind)))?) };
        Ok(Bases {
            vel: one(FieldKind::Velocity)?,
            pres: one(FieldKind::Pressure)?,
            nut: one(FieldKind::EddyViscosity)?,
        })
    }

    /// Modes needed by a configuration: the reference size and the sweep.
    pub fn for_config(set: &SnapshotSet, cfg: &PipelineConfig) -> Result<Bases> {
        let n = cfg.d.max(cfg.sweep_n_max).max(cfg.n_u).max(cfg.q).max(cfg.n_nut);
        Bases::build(set, n)
    }

    pub fn reference(&self, set: &SnapshotSet, d: usize) -> Result<Reference> {
        Ok(Reference::new(set, &self.vel, &self.pres, d)?)
    }
}

/// Reduced sizes of one model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub formulation: Formulation,
    pub n_u: usize,
    pub n_sup: usize,
    pub q: usize,
    pub n_nut: usize,
}

impl Dims {
    pub fn from_config(cfg: &PipelineConfig) -> Dims {
        Dims {
            formulation: cfg.formulation,
            n_u: cfg.n_u,
            n_sup: cfg.n_sup_for(cfg.formulation, cfg.q),
            q: cfg.q,
            n_nut: cfg.n_nut,
        }
    }

    /// Sizes recorded in assembled operators.
    pub fn of_ops(formulation: Formulation, ops: &RomOperators) -> Dims {
        Dims {
            formulation,
            n_u: ops.n_u,
            n_sup: ops.n_sup,
            q: ops.q,
            n_nut: ops.n_nut,
        }
    }

    /// Every size equal to `n`.
    pub fn uniform(cfg: &PipelineConfig, formulation: Formulation, n: usize) -> Dims {
        Dims {
            formulation,
            n_u: n,
            n_sup: cfg.n_sup_for(formulation, n).min(n),
            q: n,
            n_nut: n,
        }
    }
}

/// Coarse bases with their assembled operators.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    pub dims: Dims,
    /// POD modes followed by supremizers.
    pub vel: PodBasis,
    pub pres: PodBasis,
    pub nut: PodBasis,
    pub ops: RomOperators,
}

pub fn operator_config(cfg: &PipelineConfig) -> OperatorConfig {
    OperatorConfig {
        nu: cfg.nu(),
        tau: cfg.tau,
        u_in: cfg.u_in,
    }
}

/// Coarse bases for `dims`, supremizer-enriched for the supremizer formulation.
pub fn coarse_bases(set: &SnapshotSet, bases: &Bases, dims: Dims) -> Result<(PodBasis, PodBasis, PodBasis)> {
    let vel = bases.vel.select(dims.n_u, 0)?;
    let pres = bases.pres.select(dims.q, 0)?;
    let nut = bases.nut.select(dims.n_nut, 0)?;
    let vel = if dims.n_sup > 0 {
        let sup = supremizers(&pres.select(dims.n_sup, 0)?, &vel, &set.grid)?;
        enrich(&vel, sup)?
    } else {
        vel
    };
    Ok((vel, pres, nut))
}

pub fn build_model(set: &SnapshotSet, bases: &Bases, dims: Dims, op: &OperatorConfig) -> Result<ReducedModel> {
    let (vel, pres, nut) = coarse_bases(set, bases, dims)?;
    let ops = RomOperators::assemble(&vel, &pres, &nut, &set.grid, op)?;
    Ok(ReducedModel {
        dims,
        vel,
        pres,
        nut,
        ops,
    })
}

/// [`build_model`] through the operator cache in `dir`; also returns the
/// content hash of the operators.
pub fn build_model_cached(
    set: &SnapshotSet,
    bases: &Bases,
    dims: Dims,
    op: &OperatorConfig,
    dir: Option<&Path>,
) -> Result<(ReducedModel, [u8; 32])> {
    let (vel, pres, nut) = coarse_bases(set, bases, dims)?;
    let (ops, hash) = cached_ops(dir, &vel, &pres, &nut, &set.grid, op)?;
    Ok((
        ReducedModel {
            dims,
            vel,
            pres,
            nut,
            ops,
        },
        hash,
    ))
}

/// The first `len` frames.
pub fn training_window(set: &SnapshotSet, len: usize) -> SnapshotSet {
    set.window(0..len.min(set.frames.len()))
}

/// Exact corrections on the training frames against a fine model of `d`
/// velocity (and pressure) modes. The fine velocity basis is the coarse one
/// followed by the remaining POD modes, so coarse coefficients are a prefix.
pub fn correction_snapshots(
    train: &SnapshotSet,
    bases: &Bases,
    model: &ReducedModel,
    d: usize,
) -> Result<CorrectionSnapshots> {
    let w = InnerProductWeights(train.weights.clone());
    let n_u = model.dims.n_u;
    let dv = d.min(bases.vel.n_pod()).max(n_u);
    let fine_vel = extend_basis(&model.vel, &bases.vel.modes[n_u..dv], &w)?;
    let r = model.vel.len();
    let a_d = project_coeffs(train, &fine_vel, fine_vel.len())?;
    let grid = &train.grid;
    match model.dims.formulation {
        Formulation::Sup => {
            let fine = assemble_velocity_ops(&fine_vel, &model.pres, grid, &w)?;
            let tau_u = exact_velocity_correction(&a_d, &fine.c, &model.ops.vel.c)?;
            Ok(CorrectionSnapshots::new(
                a_d.times.clone(),
                tau_u,
                None,
                fine_vel.len(),
            )?)
        }
        Formulation::Ppe => {
            let q = model.dims.q;
            let dp = d.min(bases.pres.n_pod()).max(q);
            let fine_pres = bases.pres.select(dp, 0)?;
            let b_d = project_coeffs(train, &fine_pres, dp)?;
            let fine = assemble_velocity_ops(&fine_vel, &model.pres, grid, &w)?;
            let tau_u = exact_velocity_correction(&a_d, &fine.c, &model.ops.vel.c)?;
            let fine_ppe = assemble_ppe_ops(&fine_vel, &fine_pres, grid, &w)?;
            let tau_p =
                exact_pressure_correction(&a_d, &b_d, &fine_ppe.d, &model.ops.ppe.d, &fine_ppe.g, &model.ops.ppe.g)?;
            debug_assert_eq!(tau_u.ncols(), r);
            Ok(CorrectionSnapshots::new(
                a_d.times.clone(),
                tau_u,
                Some(tau_p),
                fine_vel.len().max(dp),
            )?)
        }
    }
}

/// Coarse velocity and pressure coefficients of a snapshot set.
pub fn coarse_coeffs(set: &SnapshotSet, model: &ReducedModel) -> Result<(CoeffSeries, CoeffSeries)> {
    Ok((
        project_coeffs(set, &model.vel, model.vel.len())?,
        project_coeffs(set, &model.pres, model.pres.len())?,
    ))
}

pub fn fit_closure(
    train: &SnapshotSet,
    bases: &Bases,
    model: &ReducedModel,
    cfg: &PipelineConfig,
) -> Result<ClosureModel> {
    let corr = correction_snapshots(train, bases, model, cfg.d)?;
    let (a, b) = coarse_coeffs(train, model)?;
    Ok(match model.dims.formulation {
        Formulation::Ppe => fit_joint_ppe(&corr, &a.hstack(&b)?, cfg.ridge)?,
        Formulation::Sup if cfg.constrained => fit_constrained(
            &corr,
            &a,
            &ConstrainedFit {
                ridge: cfg.ridge,
                max_iter: cfg.closure_max_iter,
                tol: cfg.closure_tol,
            },
        )?,
        Formulation::Sup => fit_unconstrained(&corr, &a, cfg.ridge)?,
    })
}

/// A trained eddy-viscosity regression.
#[derive(Debug, Clone, PartialEq)]
pub enum EvModel {
    Mlp(MlpModel),
    Rbf(RbfModel),
}

impl EvModel {
    pub fn as_dyn(&self) -> &dyn EddyViscosityModel {
        match self {
            EvModel::Mlp(m) => m,
            EvModel::Rbf(m) => m,
        }
    }
}

/// Training pairs `(a, g)`: the first `n_u` velocity coefficients and the
/// eddy-viscosity coefficients of every frame.
pub fn ev_training_data(set: &SnapshotSet, model: &ReducedModel) -> Result<(CoeffSeries, CoeffSeries)> {
    Ok((
        project_coeffs(set, &model.vel, model.dims.n_u)?,
        project_coeffs(set, &model.nut, model.nut.len())?,
    ))
}

pub fn train_ev(train: &SnapshotSet, model: &ReducedModel, cfg: &PipelineConfig) -> Result<EvModel> {
    let (a, g) = ev_training_data(train, model)?;
    Ok(match cfg.ev_model {
        EvKind::Mlp => EvModel::Mlp(train_mlp(&a, &g, &cfg.mlp())?),
        EvKind::Rbf => EvModel::Rbf(fit_rbf(&a, &g, cfg.rbf_epsilon)?),
    })
}

/// Which closure terms a run switches on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Flags {
    pub c_u: bool,
    pub c_p: bool,
    pub c_t: bool,
}

impl Flags {
    pub const NONE: Flags = Flags {
        c_u: false,
        c_p: false,
        c_t: false,
    };

    /// The four configurations compared in the sweep, with labels.
    pub fn configurations(f: Formulation) -> [(&'static str, Flags); 4] {
        let ppe = f == Formulation::Ppe;
        [
            ("none", Flags::NONE),
            (
                "data-driven",
                Flags {
                    c_u: true,
                    c_p: ppe,
                    c_t: false,
                },
            ),
            (
                "eddy-viscosity",
                Flags {
                    c_u: false,
                    c_p: false,
                    c_t: true,
                },
            ),
            (
                "hybrid",
                Flags {
                    c_u: true,
                    c_p: ppe,
                    c_t: true,
                },
            ),
        ]
    }

    /// Parses `cu,cp,ct` (any subset, or `none`).
    pub fn parse(s: &str) -> Option<Flags> {
        let mut f = Flags::NONE;
        for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "cu" => f.c_u = true,
                "cp" => f.c_p = true,
                "ct" => f.c_t = true,
                "none" => {}
                _ => return None,
            }
        }
        Some(f)
    }
}

/// Run settings for a model: time step, horizon and initial frame.
pub fn run_config(cfg: &PipelineConfig, set: &SnapshotSet, formulation: Formulation, flags: Flags) -> RomRunConfig {
    let dt = cfg.rom_dt.unwrap_or(set.dt_snap);
    let default_steps = ((cfg.train_len() as f64 - 1.0) * set.dt_snap / dt).round() as usize;
    RomRunConfig {
        formulation,
        c_u: flags.c_u,
        c_p: flags.c_p,
        c_t: flags.c_t,
        scheme: cfg.scheme,
        dt,
        n_steps: cfg.rom_steps.unwrap_or(default_steps),
        t0: set.frames[cfg.start_frame].t,
        newton: cfg.newton(),
    }
}

/// Projected coefficients of frame `j` as the initial condition.
pub fn initial_state(set: &SnapshotSet, model: &ReducedModel, j: usize) -> Result<RomInit> {
    let one = set.window(j..j + 1);
    let (a, b) = coarse_coeffs(&one, model)?;
    Ok(RomInit {
        a0: a.row(0),
        b0: Some(b.row(0)),
    })
}

pub fn run(
    set: &SnapshotSet,
    model: &ReducedModel,
    closure: Option<&ClosureModel>,
    ev: Option<&EvModel>,
    run: &RomRunConfig,
    start_frame: usize,
) -> Result<RomTrajectory> {
    let init = initial_state(set, model, start_frame)?;
    let closures = Closures {
        closure: if run.c_u || run.c_p { closure } else { None },
        ev: if run.c_t { ev.map(EvModel::as_dyn) } else { None },
    };
    Ok(run_rom(&model.ops, closures, run, &init)?)
}

/// Rows of a trajectory that fall on snapshot times.
pub fn aligned(traj: &RomTrajectory, dt_snap: f64) -> RomTrajectory {
    let t0 = traj.times.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..traj.len())
        .filter(|&j| {
            let k = (traj.times[j] - t0) / dt_snap;
            (k - k.round()).abs() <= 1e-6
        })
        .collect();
    let pick = |m: &nalgebra::DMatrix<f64>| nalgebra::DMatrix::from_fn(keep.len(), m.ncols(), |i, c| m[(keep[i], c)]);
    RomTrajectory {
        times: keep.iter().map(|&j| traj.times[j]).collect(),
        a: pick(&traj.a),
        b: pick(&traj.b),
        g: pick(&traj.g),
        newton_iters: keep.iter().map(|&j| traj.newton_iters[j]).collect(),
        residuals: keep.iter().map(|&j| traj.residuals[j]).collect(),
        failure: traj.failure.clone(),
    }
}

/// Error series of a run against the reference.
pub fn run_errors(traj: &RomTrajectory, reference: &Reference, model: &ReducedModel) -> Result<ErrorSeries> {
    Ok(error_series(
        &aligned(traj, reference.dt_snap),
        reference,
        &model.vel,
        &model.pres,
    )?)
}

/// Error series of projecting frames `start .. start + len` on the coarse bases.
pub fn projection_errors(
    set: &SnapshotSet,
    reference: &Reference,
    model: &ReducedModel,
    start: usize,
    len: usize,
) -> Result<ErrorSeries> {
    Ok(projection_series(
        set,
        reference,
        start..(start + len).min(set.frames.len()),
        &model.vel,
        model.vel.len(),
        &model.pres,
        model.pres.len(),
    )?)
}

pub fn integrals(series: &ErrorSeries) -> Result<(f64, f64)> {
    Ok(total_integral(series)?)
}
