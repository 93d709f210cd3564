//! The `romforge` command line. Each subcommand reads the artifacts of the
//! earlier stages from `--out-dir` unless given explicit paths.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use romforge_core::fom::SnapshotSet;
use romforge_core::pod::PodBasis;
use romforge_core::report::magnitude;
use romforge_core::snapshots::reconstruct;

use crate::config::{formulation_name, parse_scheme, EvKind, PipelineConfig};
use crate::csvio::{read_trajectory, write_trajectory};
use crate::error::{Error, Result};
use crate::formats::*;
use crate::pipeline::*;
use crate::report::{emit_series, emit_sweep, heatmap_pair};
use crate::sweep::mode_sweep;

#[derive(Debug, Parser)]
#[command(name = "romforge", version, about = "Hybrid data-driven reduced-order flow models")]
pub struct Cli {
    /// key = value configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for every artifact.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides a configuration key, as `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Inputs {
    /// Snapshot file [default: <out-dir>/snapshots.romsnap].
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
    /// Directory holding the basis files [default: <out-dir>].
    #[arg(long)]
    pub bases: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Runs the full-order solver and writes the snapshot file.
    Fom {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Builds the velocity, pressure and eddy-viscosity POD bases.
    Pod {
        #[arg(long)]
        snapshots: Option<PathBuf>,
    },
    /// Assembles (or loads from the cache) the reduced operators.
    Ops {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fits the data-driven closure on the training window.
    FitClosure {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trains the eddy-viscosity regression on the training window.
    TrainEv {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrates the reduced model and writes the trajectory CSV.
    RomRun {
        #[arg(long)]
        ops: PathBuf,
        #[arg(long)]
        closure: Option<PathBuf>,
        #[arg(long)]
        ev: Option<PathBuf>,
        /// Any of cu,cp,ct, or none [default: from the configuration].
        #[arg(long)]
        flags: Option<String>,
        /// 1 (implicit Euler) or 2 (BDF2) [default: from the configuration].
        #[arg(long)]
        scheme: Option<String>,
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mode sweep over both formulations and the four configurations.
    Sweep {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Error series, plots and heatmaps of a trajectory.
    Report {
        #[arg(long)]
        ops: Option<PathBuf>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[command(flatten)]
        inputs: Inputs,
    },
}

pub const SNAPSHOTS: &str = "snapshots.romsnap";
pub const BASIS_FILES: [&str; 3] = ["basis_u.rombas", "basis_p.rombas", "basis_nut.rombas"];
pub const OPS: &str = "ops.romops";
pub const CLOSURE: &str = "closure.romcls";
pub const TRAJECTORY: &str = "trajectory.csv";

impl Cli {
    pub fn load_config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::from_file(p)?,
            None => PipelineConfig::default(),
        };
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects key=value, got {kv:?}")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn path(&self, explicit: &Option<PathBuf>, default: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.out_dir.join(default))
    }
}

fn load_snapshots(cli: &Cli, cfg: &PipelineConfig, p: &Option<PathBuf>) -> Result<SnapshotSet> {
    read_snapshots(&cli.path(p, SNAPSHOTS), cfg.bc)
}

pub fn write_bases(bases: &Bases, grid: &romforge_core::grid::GridSpec, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for (b, name) in [&bases.vel, &bases.pres, &bases.nut].into_iter().zip(BASIS_FILES) {
        let path = dir.join(name);
        write_file(&path, &encode_basis(b, grid))?;
        files.push(path);
    }
    Ok(files)
}

pub fn read_bases(dir: &Path, cfg: &PipelineConfig) -> Result<Bases> {
    let one = |name: &str| -> Result<PodBasis> { Ok(decode_basis(&read_file(&dir.join(name))?, cfg.bc)?.0) };
    Ok(Bases {
        vel: one(BASIS_FILES[0])?,
        pres: one(BASIS_FILES[1])?,
        nut: one(BASIS_FILES[2])?,
    })
}

fn load(cli: &Cli, cfg: &PipelineConfig, inputs: &Inputs) -> Result<(SnapshotSet, Bases)> {
    let set = load_snapshots(cli, cfg, &inputs.snapshots)?;
    let dir = inputs.bases.clone().unwrap_or_else(|| cli.out_dir.clone());
    let bases = read_bases(&dir, cfg)?;
    if bases.vel.n_cells != set.grid.n_cells() {
        return Err(Error::Config("bases do not match the snapshot grid".into()));
    }
    Ok((set, bases))
}

fn model_for_config(
    cli: &Cli,
    cfg: &PipelineConfig,
    set: &SnapshotSet,
    bases: &Bases,
) -> Result<(ReducedModel, [u8; 32])> {
    build_model_cached(
        set,
        bases,
        Dims::from_config(cfg),
        &operator_config(cfg),
        Some(&cli.out_dir.join("cache")),
    )
}

/// Rebuilds the model an operator file was assembled from and checks that
/// the content hashes agree.
fn model_for_ops(cfg: &PipelineConfig, set: &SnapshotSet, bases: &Bases, path: &Path) -> Result<ReducedModel> {
    let (ops, hash) = decode_ops(&read_file(path)?)?;
    let dims = Dims::of_ops(cfg.formulation, &ops);
    let (vel, pres, nut) = coarse_bases(set, bases, dims)?;
    let expect = crate::cache::ops_hash(&vel, &pres, &nut, &set.grid, &operator_config(cfg));
    if expect != hash {
        return Err(Error::Config(format!(
            "{}: operators were assembled from different bases or parameters",
            path.display()
        )));
    }
    Ok(ReducedModel {
        dims,
        vel,
        pres,
        nut,
        ops,
    })
}

fn read_ev(path: &Path) -> Result<EvModel> {
    let buf = read_file(path)?;
    if buf.starts_with(RBF_MAGIC) {
        Ok(EvModel::Rbf(decode_rbf(&buf)?))
    } else {
        Ok(EvModel::Mlp(decode_mlp(&buf)?))
    }
}

/// Runs one subcommand and returns the files it wrote.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = cli.load_config()?;
    match &cli.command {
        Command::Fom { out } => {
            let set = generate_snapshots(&cfg)?;
            let path = cli.path(out, SNAPSHOTS);
            write_snapshots(&set, &path)?;
            Ok(vec![path])
        }
        Command::Pod { snapshots } => {
            let set = load_snapshots(cli, &cfg, snapshots)?;
            let bases = Bases::for_config(&set, &cfg)?;
            write_bases(&bases, &set.grid, &cli.out_dir)
        }
        Command::Ops { inputs, out } => {
            let (set, bases) = load(cli, &cfg, inputs)?;
            let (model, hash) = model_for_config(cli, &cfg, &set, &bases)?;
            let path = cli.path(out, OPS);
            write_file(&path, &encode_ops(&model.ops, &hash))?;
            Ok(vec![path])
        }
        Command::FitClosure { inputs, out } => {
            let (set, bases) = load(cli, &cfg, inputs)?;
            let (model, _) = model_for_config(cli, &cfg, &set, &bases)?;
            let closure = fit_closure(&training_window(&set, cfg.train_len()), &bases, &model, &cfg)?;
            let path = cli.path(out, CLOSURE);
            write_file(&path, &encode_closure(&closure))?;
            Ok(vec![path])
        }
        Command::TrainEv { inputs, out } => {
            let (set, bases) = load(cli, &cfg, inputs)?;
            let (model, _) = model_for_config(cli, &cfg, &set, &bases)?;
            let ev = train_ev(&training_window(&set, cfg.train_len()), &model, &cfg)?;
            let bytes = match &ev {
                EvModel::Mlp(m) => encode_mlp(m),
                EvModel::Rbf(m) => encode_rbf(m),
            };
            let path = cli.path(out, ev_file(cfg.ev_model));
            write_file(&path, &bytes)?;
            Ok(vec![path])
        }
        Command::RomRun {
            ops,
            closure,
            ev,
            flags,
            scheme,
            inputs,
            out,
        } => {
            let mut cfg = cfg.clone();
            if let Some(s) = scheme {
                cfg.scheme =
                    parse_scheme(s).ok_or_else(|| Error::Config(format!("--scheme expects 1 or 2, got {s:?}")))?;
            }
            let flags = match flags {
                Some(s) => {
                    Flags::parse(s).ok_or_else(|| Error::Config(format!("--flags expects cu,cp,ct, got {s:?}")))?
                }
                None => Flags {
                    c_u: cfg.c_u,
                    c_p: cfg.c_p,
                    c_t: cfg.c_t,
                },
            };
            let (set, bases) = load(cli, &cfg, inputs)?;
            let model = model_for_ops(&cfg, &set, &bases, ops)?;
            let closure = closure
                .as_deref()
                .map(|p| read_file(p).and_then(|b| decode_closure(&b)))
                .transpose()?;
            let ev = ev.as_deref().map(read_ev).transpose()?;
            if (flags.c_u || flags.c_p) && closure.is_none() {
                return Err(Error::Config("flags cu/cp need --closure".into()));
            }
            if flags.c_t && ev.is_none() {
                return Err(Error::Config("flag ct needs --ev".into()));
            }
            let rc = run_config(&cfg, &set, cfg.formulation, flags);
            let traj = run(&set, &model, closure.as_ref(), ev.as_ref(), &rc, cfg.start_frame)?;
            let path = cli.path(out, TRAJECTORY);
            write_trajectory(&path, &traj)?;
            match traj.failure {
                Some(e) => Err(e.into()),
                None => Ok(vec![path]),
            }
        }
        Command::Sweep { inputs } => {
            let (set, bases) = load(cli, &cfg, inputs)?;
            let s = mode_sweep(&cfg, &set, &bases)?;
            emit_sweep(&s, &cli.out_dir)
        }
        Command::Report {
            ops,
            trajectory,
            inputs,
        } => {
            let (set, bases) = load(cli, &cfg, inputs)?;
            let model = model_for_ops(&cfg, &set, &bases, &cli.path(ops, OPS))?;
            let traj = read_trajectory(&cli.path(trajectory, TRAJECTORY))?;
            if traj.a.ncols() != model.vel.len() || traj.b.ncols() != model.pres.len() {
                return Err(Error::Config("trajectory does not match the operators".into()));
            }
            let reference = bases.reference(&set, cfg.d)?;
            let rom = run_errors(&traj, &reference, &model)?;
            let start = reference.frame_at(rom.times[0])?;
            let proj = projection_errors(&set, &reference, &model, start, rom.len())?;
            let mut files = emit_series(
                &[("rom".to_string(), rom), ("projection".to_string(), proj)],
                &cli.out_dir,
                &format!("errors_{}", formulation_name(cfg.formulation)),
            )?;
            files.extend(emit_heatmaps(&cfg, &set, &model, &traj, &cli.out_dir)?);
            Ok(files)
        }
    }
}

/// `p` and `|u|` of the reduced solution next to the FOM frame at
/// `cfg.heatmap_frame`.
pub fn emit_heatmaps(
    cfg: &PipelineConfig,
    set: &SnapshotSet,
    model: &ReducedModel,
    traj: &romforge_core::romsolve::RomTrajectory,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    let j = cfg.heatmap_frame;
    let frame = set
        .frames
        .get(j)
        .ok_or_else(|| Error::Config(format!("heatmap_frame {j} beyond {} frames", set.frames.len())))?;
    let tol = 1e-6 * set.dt_snap;
    let row = traj
        .times
        .iter()
        .position(|t| (t - frame.t).abs() <= tol)
        .ok_or_else(|| Error::Config(format!("trajectory has no row at frame {j} (t = {})", frame.t)))?;
    let a: Vec<f64> = traj.a.row(row).iter().copied().collect();
    let b: Vec<f64> = traj.b.row(row).iter().copied().collect();
    let p = reconstruct(&model.pres, &b)?;
    let umag = magnitude(&reconstruct(&model.vel, &a)?);
    let fom_umag: Vec<f64> = frame.u.iter().zip(&frame.v).map(|(u, v)| u.hypot(*v)).collect();
    let title = format!("t = {}", crate::csvio::sig4(frame.t));
    let pp = dir.join("heatmap_p.svg");
    heatmap_pair(
        &pp,
        &set.grid,
        &format!("p, {title}"),
        ("ROM", &p),
        ("FOM", &frame.p),
        true,
    )?;
    let pu = dir.join("heatmap_u.svg");
    heatmap_pair(
        &pu,
        &set.grid,
        &format!("|u|, {title}"),
        ("ROM", &umag),
        ("FOM", &fom_umag),
        false,
    )?;
    Ok(vec![pp, pu])
}

/// Default file name of a trained eddy-viscosity model.
pub fn ev_file(kind: EvKind) -> &'static str {
    match kind {
        EvKind::Mlp => "ev.rommlp",
        EvKind::Rbf => "ev.romrbf",
    }
}
