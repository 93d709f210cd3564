//! Mode sweep: for each mode count and formulation, fit the closures, run the
//! four configurations and integrate their errors over the training window.

use rayon::prelude::*;
use romforge_core::fom::SnapshotSet;
use romforge_core::report::Reference;
use romforge_core::romsolve::Formulation;

use crate::config::{formulation_name, PipelineConfig};
use crate::error::Result;
use crate::pipeline::*;

pub const PROJECTION: &str = "projection";

/// Error integrals of one configuration at one mode count.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub formulation: Formulation,
    pub n: usize,
    pub label: String,
    /// `∫ε_u dt`, NaN when the run failed.
    pub iu: f64,
    pub ip: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub ns: Vec<usize>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn get(&self, f: Formulation, n: usize, label: &str) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.formulation == f && c.n == n && c.label == label)
    }

    pub fn labels() -> [&'static str; 5] {
        [PROJECTION, "none", "data-driven", "eddy-viscosity", "hybrid"]
    }

    pub fn formulations(&self) -> Vec<Formulation> {
        let mut out: Vec<Formulation> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.formulation) {
                out.push(c.formulation);
            }
        }
        out
    }

    /// Cells where a configuration beat the projection by more than `tol`.
    pub fn lower_bound_violations(&self, tol: f64) -> Vec<(&SweepCell, &SweepCell)> {
        let mut out = Vec::new();
        for c in self
            .cells
            .iter()
            .filter(|c| c.label != PROJECTION && c.failure.is_none())
        {
            if let Some(p) = self.get(c.formulation, c.n, PROJECTION) {
                if c.iu < p.iu - tol || c.ip < p.ip - tol {
                    out.push((c, p));
                }
            }
        }
        out
    }
}

fn failed(f: Formulation, n: usize, label: &str, msg: String) -> SweepCell {
    SweepCell {
        formulation: f,
        n,
        label: label.to_string(),
        iu: f64::NAN,
        ip: f64::NAN,
        failure: Some(msg),
    }
}

/// All five rows (projection and four configurations) at one `(f, n)`.
pub fn sweep_point(
    cfg: &PipelineConfig,
    set: &SnapshotSet,
    bases: &Bases,
    reference: &Reference,
    f: Formulation,
    n: usize,
) -> Vec<SweepCell> {
    let configs = Flags::configurations(f);
    let fail_all = |msg: String| -> Vec<SweepCell> {
        SweepResult::labels()
            .iter()
            .map(|l| failed(f, n, l, msg.clone()))
            .collect()
    };
    let train = training_window(set, cfg.train_len());
    let model = match build_model(set, bases, Dims::uniform(cfg, f, n), &operator_config(cfg)) {
        Ok(m) => m,
        Err(e) => return fail_all(e.to_string()),
    };
    let horizon = cfg.train_len().min(set.frames.len() - cfg.start_frame);
    let mut out = Vec::with_capacity(5);
    out.push(
        match projection_errors(set, reference, &model, cfg.start_frame, horizon).and_then(|s| integrals(&s)) {
            Ok((iu, ip)) => SweepCell {
                formulation: f,
                n,
                label: PROJECTION.into(),
                iu,
                ip,
                failure: None,
            },
            Err(e) => failed(f, n, PROJECTION, e.to_string()),
        },
    );
    let closure = fit_closure(&train, bases, &model, cfg);
    let ev = train_ev(&train, &model, cfg);
    for (label, flags) in configs {
        let needs_closure = flags.c_u || flags.c_p;
        let cell = (|| -> std::result::Result<(f64, f64), String> {
            let closure = match (&closure, needs_closure) {
                (Ok(c), _) => Some(c),
                (Err(e), true) => return Err(format!("closure fit: {e}")),
                (Err(_), false) => None,
            };
            let ev = match (&ev, flags.c_t) {
                (Ok(m), _) => Some(m),
                (Err(e), true) => return Err(format!("eddy-viscosity training: {e}")),
                (Err(_), false) => None,
            };
            let mut rc = run_config(cfg, set, f, flags);
            rc.n_steps = (((horizon - 1) as f64) * set.dt_snap / rc.dt).round() as usize;
            let traj = run(set, &model, closure, ev, &rc, cfg.start_frame).map_err(|e| e.to_string())?;
            if let Some(e) = &traj.failure {
                return Err(format!("step {}: {e}", traj.len()));
            }
            let s = run_errors(&traj, reference, &model).map_err(|e| e.to_string())?;
            integrals(&s).map_err(|e| e.to_string())
        })();
        out.push(match cell {
            Ok((iu, ip)) => SweepCell {
                formulation: f,
                n,
                label: label.into(),
                iu,
                ip,
                failure: None,
            },
            Err(msg) => failed(f, n, label, msg),
        });
    }
    out
}

/// Sweeps `n = 1 ..= cfg.sweep_n_max` over `cfg.sweep_formulations`. Failed
/// runs are recorded per cell; the sweep itself only fails on bad input.
pub fn mode_sweep(cfg: &PipelineConfig, set: &SnapshotSet, bases: &Bases) -> Result<SweepResult> {
    let reference = bases.reference(set, cfg.d)?;
    let ns: Vec<usize> = (1..=cfg.sweep_n_max).collect();
    let points: Vec<(Formulation, usize)> = cfg
        .sweep_formulations
        .iter()
        .flat_map(|f| ns.iter().map(move |n| (*f, *n)))
        .collect();
    let cells: Vec<SweepCell> = points
        .par_iter()
        .map(|&(f, n)| sweep_point(cfg, set, bases, &reference, f, n))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(SweepResult { ns, cells })
}

pub fn describe(c: &SweepCell) -> String {
    format!(
        "{} n={} {}: {}",
        formulation_name(c.formulation),
        c.n,
        c.label,
        match &c.failure {
            None => format!("{:.4e} {:.4e}", c.iu, c.ip),
            Some(e) => format!("failed ({e})"),
        }
    )
}
