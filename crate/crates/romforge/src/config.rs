//! `key = value` pipeline configuration. Blank lines and `#` comments are
//! ignored; unknown keys and malformed values are errors.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use romforge_core::evmodel::{MlpConfig, Optimizer};
use romforge_core::fom::FomConfig;
use romforge_core::grid::{BoundarySet, EdgeKind, GridSpec};
use romforge_core::romsolve::{Formulation, NewtonConfig, Scheme};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvKind {
    Mlp,
    Rbf,
}

/// Every knob of the end-to-end pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub obstacle_x: f64,
    pub obstacle_y: f64,
    pub obstacle_radius: f64,
    pub bc: BoundarySet,

    /// Reynolds number `u_in · D / ν` with `D` the obstacle diameter.
    pub re: f64,
    pub u_in: f64,
    pub dt_fom: f64,
    pub sample_every: usize,
    pub n_samples: usize,
    pub spinup_steps: Option<usize>,
    pub smagorinsky_cs: f64,
    pub perturbation: f64,
    pub projection_tol: f64,

    pub formulation: Formulation,
    pub n_u: usize,
    /// Supremizers for the supremizer formulation; `None` means `q`.
    pub n_sup: Option<usize>,
    pub q: usize,
    pub n_nut: usize,
    /// Fine reference size; capped at the usable rank.
    pub d: usize,
    pub tau: f64,
    pub scheme: Scheme,
    /// `None` means the snapshot spacing.
    pub rom_dt: Option<f64>,
    /// `None` means the training-window length.
    pub rom_steps: Option<usize>,
    pub start_frame: usize,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub c_u: bool,
    pub c_p: bool,
    pub c_t: bool,

    /// Leading fraction of the snapshots used for closure fitting and training.
    pub train_fraction: f64,
    /// `None` picks the data-scaled default.
    pub ridge: Option<f64>,
    pub constrained: bool,
    pub closure_max_iter: usize,
    pub closure_tol: f64,

    pub ev_model: EvKind,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    pub optimizer: Optimizer,
    pub batch: Option<usize>,
    pub val_fraction: f64,
    pub rbf_epsilon: Option<f64>,

    pub sweep_n_max: usize,
    pub sweep_formulations: Vec<Formulation>,
    pub heatmap_frame: usize,

    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mlp = MlpConfig::default();
        PipelineConfig {
            nx: 64,
            ny: 32,
            lx: 2.0,
            ly: 1.0,
            obstacle_x: 0.5,
            obstacle_y: 0.5,
            obstacle_radius: 0.125,
            bc: BoundarySet::CHANNEL,
            re: 150.0,
            u_in: 1.0,
            dt_fom: 1e-3,
            sample_every: 20,
            n_samples: 400,
            spinup_steps: Some(10_000),
            smagorinsky_cs: 0.17,
            perturbation: 0.3,
            projection_tol: 1e-10,
            formulation: Formulation::Ppe,
            n_u: 5,
            n_sup: None,
            q: 5,
            n_nut: 5,
            d: 50,
            tau: 1000.0,
            scheme: Scheme::Order2,
            rom_dt: None,
            rom_steps: None,
            start_frame: 0,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            c_u: false,
            c_p: false,
            c_t: false,
            train_fraction: 0.25,
            ridge: Some(1e-2),
            constrained: true,
            closure_max_iter: 20_000,
            closure_tol: 1e-10,
            ev_model: EvKind::Mlp,
            hidden: mlp.hidden,
            epochs: 2000,
            lr: 1e-3,
            optimizer: Optimizer::Adam,
            batch: Some(32),
            val_fraction: mlp.val_fraction,
            rbf_epsilon: None,
            sweep_n_max: 6,
            sweep_formulations: vec![Formulation::Sup, Formulation::Ppe],
            heatmap_frame: 0,
            seed: 0,
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value}: expected {what}"))
}

fn num<T: FromStr>(key: &str, v: &str, what: &str) -> Result<T> {
    v.parse().map_err(|_| bad(key, v, what))
}

fn opt<T: FromStr>(key: &str, v: &str, what: &str) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        num(key, v, what).map(Some)
    }
}

fn boolean(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "a boolean")),
    }
}

fn edge(key: &str, v: &str) -> Result<EdgeKind> {
    match v {
        "inflow" => Ok(EdgeKind::Inflow),
        "outflow" => Ok(EdgeKind::Outflow),
        "free_slip" => Ok(EdgeKind::FreeSlip),
        "no_slip" => Ok(EdgeKind::NoSlip),
        _ => Err(bad(key, v, "inflow, outflow, free_slip or no_slip")),
    }
}

fn edge_name(e: EdgeKind) -> &'static str {
    match e {
        EdgeKind::Inflow => "inflow",
        EdgeKind::Outflow => "outflow",
        EdgeKind::FreeSlip => "free_slip",
        EdgeKind::NoSlip => "no_slip",
    }
}

pub fn parse_formulation(v: &str) -> Option<Formulation> {
    match v {
        "sup" => Some(Formulation::Sup),
        "ppe" => Some(Formulation::Ppe),
        _ => None,
    }
}

pub fn formulation_name(f: Formulation) -> &'static str {
    match f {
        Formulation::Sup => "sup",
        Formulation::Ppe => "ppe",
    }
}

pub fn parse_scheme(v: &str) -> Option<Scheme> {
    match v {
        "1" => Some(Scheme::Order1),
        "2" => Some(Scheme::Order2),
        _ => None,
    }
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Order1 => "1",
        Scheme::Order2 => "2",
    }
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

fn list<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Defaults overridden by every `key = value` line of `text`. A key may
    /// appear once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            if !seen.insert(k.trim()) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {}",
                    lineno + 1,
                    k.trim()
                )));
            }
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, k: &str, v: &str) -> Result<()> {
        const POS: &str = "a number";
        const INT: &str = "a nonnegative integer";
        match k {
            "nx" => self.nx = num(k, v, INT)?,
            "ny" => self.ny = num(k, v, INT)?,
            "lx" => self.lx = num(k, v, POS)?,
            "ly" => self.ly = num(k, v, POS)?,
            "obstacle_x" => self.obstacle_x = num(k, v, POS)?,
            "obstacle_y" => self.obstacle_y = num(k, v, POS)?,
            "obstacle_radius" => self.obstacle_radius = num(k, v, POS)?,
            "bc_west" => self.bc.west = edge(k, v)?,
            "bc_east" => self.bc.east = edge(k, v)?,
            "bc_south" => self.bc.south = edge(k, v)?,
            "bc_north" => self.bc.north = edge(k, v)?,
            "re" => self.re = num(k, v, POS)?,
            "u_in" => self.u_in = num(k, v, POS)?,
            "dt_fom" => self.dt_fom = num(k, v, POS)?,
            "sample_every" => self.sample_every = num(k, v, INT)?,
            "n_samples" => self.n_samples = num(k, v, INT)?,
            "spinup_steps" => self.spinup_steps = opt(k, v, INT)?,
            "smagorinsky_cs" => self.smagorinsky_cs = num(k, v, POS)?,
            "perturbation" => self.perturbation = num(k, v, POS)?,
            "projection_tol" => self.projection_tol = num(k, v, POS)?,
            "formulation" => self.formulation = parse_formulation(v).ok_or_else(|| bad(k, v, "sup or ppe"))?,
            "n_u" => self.n_u = num(k, v, INT)?,
            "n_sup" => self.n_sup = opt(k, v, INT)?,
            "q" => self.q = num(k, v, INT)?,
            "n_nut" => self.n_nut = num(k, v, INT)?,
            "d" => self.d = num(k, v, INT)?,
            "tau" => self.tau = num(k, v, POS)?,
            "scheme" => self.scheme = parse_scheme(v).ok_or_else(|| bad(k, v, "1 or 2"))?,
            "rom_dt" => self.rom_dt = opt(k, v, POS)?,
            "rom_steps" => self.rom_steps = opt(k, v, INT)?,
            "start_frame" => self.start_frame = num(k, v, INT)?,
            "newton_tol" => self.newton_tol = num(k, v, POS)?,
            "newton_max_iter" => self.newton_max_iter = num(k, v, INT)?,
            "c_u" => self.c_u = boolean(k, v)?,
            "c_p" => self.c_p = boolean(k, v)?,
            "c_t" => self.c_t = boolean(k, v)?,
            "train_fraction" => self.train_fraction = num(k, v, POS)?,
            "ridge" => self.ridge = opt(k, v, POS)?,
            "constrained" => self.constrained = boolean(k, v)?,
            "closure_max_iter" => self.closure_max_iter = num(k, v, INT)?,
            "closure_tol" => self.closure_tol = num(k, v, POS)?,
            "ev_model" => {
                self.ev_model = match v {
                    "mlp" => EvKind::Mlp,
                    "rbf" => EvKind::Rbf,
                    _ => return Err(bad(k, v, "mlp or rbf")),
                }
            }
            "hidden" => {
                self.hidden = v
                    .split(',')
                    .map(|s| num(k, s.trim(), "a comma-separated list of layer sizes"))
                    .collect::<Result<_>>()?
            }
            "epochs" => self.epochs = num(k, v, INT)?,
            "lr" => self.lr = num(k, v, POS)?,
            "optimizer" => {
                self.optimizer = match v {
                    "gd" => Optimizer::Gd,
                    "adam" => Optimizer::Adam,
                    _ => return Err(bad(k, v, "gd or adam")),
                }
            }
            "batch" => {
                self.batch = if v == "full" { None } else { Some(num(k, v, INT)?) };
            }
            "val_fraction" => self.val_fraction = num(k, v, POS)?,
            "rbf_epsilon" => self.rbf_epsilon = opt(k, v, POS)?,
            "sweep_n_max" => self.sweep_n_max = num(k, v, INT)?,
            "sweep_formulations" => {
                self.sweep_formulations = v
                    .split(',')
                    .map(|s| parse_formulation(s.trim()).ok_or_else(|| bad(k, v, "a list of sup, ppe")))
                    .collect::<Result<_>>()?
            }
            "heatmap_frame" => self.heatmap_frame = num(k, v, INT)?,
            "seed" => self.seed = num(k, v, INT)?,
            _ => return Err(Error::Config(format!("unknown key `{k}`"))),
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn to_text(&self) -> String {
        let batch = self.batch.map_or_else(|| "full".to_string(), |b| b.to_string());
        let sweep: Vec<&str> = self.sweep_formulations.iter().map(|f| formulation_name(*f)).collect();
        let rows: Vec<(&str, String)> = vec![
            ("nx", self.nx.to_string()),
            ("ny", self.ny.to_string()),
            ("lx", self.lx.to_string()),
            ("ly", self.ly.to_string()),
            ("obstacle_x", self.obstacle_x.to_string()),
            ("obstacle_y", self.obstacle_y.to_string()),
            ("obstacle_radius", self.obstacle_radius.to_string()),
            ("bc_west", edge_name(self.bc.west).into()),
            ("bc_east", edge_name(self.bc.east).into()),
            ("bc_south", edge_name(self.bc.south).into()),
            ("bc_north", edge_name(self.bc.north).into()),
            ("re", self.re.to_string()),
            ("u_in", self.u_in.to_string()),
            ("dt_fom", self.dt_fom.to_string()),
            ("sample_every", self.sample_every.to_string()),
            ("n_samples", self.n_samples.to_string()),
            ("spinup_steps", show_opt(&self.spinup_steps)),
            ("smagorinsky_cs", self.smagorinsky_cs.to_string()),
            ("perturbation", self.perturbation.to_string()),
            ("projection_tol", self.projection_tol.to_string()),
            ("formulation", formulation_name(self.formulation).into()),
            ("n_u", self.n_u.to_string()),
            ("n_sup", show_opt(&self.n_sup)),
            ("q", self.q.to_string()),
            ("n_nut", self.n_nut.to_string()),
            ("d", self.d.to_string()),
            ("tau", self.tau.to_string()),
            ("scheme", scheme_name(self.scheme).into()),
            ("rom_dt", show_opt(&self.rom_dt)),
            ("rom_steps", show_opt(&self.rom_steps)),
            ("start_frame", self.start_frame.to_string()),
            ("newton_tol", self.newton_tol.to_string()),
            ("newton_max_iter", self.newton_max_iter.to_string()),
            ("c_u", self.c_u.to_string()),
            ("c_p", self.c_p.to_string()),
            ("c_t", self.c_t.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("ridge", show_opt(&self.ridge)),
            ("constrained", self.constrained.to_string()),
            ("closure_max_iter", self.closure_max_iter.to_string()),
            ("closure_tol", self.closure_tol.to_string()),
            (
                "ev_model",
                if self.ev_model == EvKind::Mlp { "mlp" } else { "rbf" }.into(),
            ),
            ("hidden", list(&self.hidden)),
            ("epochs", self.epochs.to_string()),
            ("lr", self.lr.to_string()),
            (
                "optimizer",
                if self.optimizer == Optimizer::Adam {
                    "adam"
                } else {
                    "gd"
                }
                .into(),
            ),
            ("batch", batch),
            ("val_fraction", self.val_fraction.to_string()),
            ("rbf_epsilon", show_opt(&self.rbf_epsilon)),
            ("sweep_n_max", self.sweep_n_max.to_string()),
            ("sweep_formulations", sweep.join(",")),
            ("heatmap_frame", self.heatmap_frame.to_string()),
            ("seed", self.seed.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.into())) };
        check(self.re > 0.0 && self.re.is_finite(), "re must be positive")?;
        check(
            self.obstacle_radius > 0.0,
            "obstacle_radius must be positive (it sets the Reynolds length)",
        )?;
        check(
            self.train_fraction > 0.0 && self.train_fraction <= 1.0,
            "train_fraction must lie in (0, 1]",
        )?;
        check(self.n_u >= 1 && self.q >= 1, "n_u and q must be at least 1")?;
        check(self.n_nut >= 1, "n_nut must be at least 1")?;
        check(self.d >= 1, "d must be at least 1")?;
        check(self.start_frame < self.n_samples, "start_frame must be below n_samples")?;
        check(
            self.heatmap_frame < self.n_samples,
            "heatmap_frame must be below n_samples",
        )?;
        check(self.sweep_n_max >= 1, "sweep_n_max must be at least 1")?;
        check(
            !self.sweep_formulations.is_empty(),
            "sweep_formulations must not be empty",
        )?;
        check(
            self.hidden.iter().all(|h| *h >= 1),
            "hidden layer sizes must be positive",
        )?;
        check(
            !(self.c_p && self.formulation == Formulation::Sup),
            "c_p applies to the ppe formulation only",
        )?;
        check(self.rom_dt.is_none_or(|d| d > 0.0), "rom_dt must be positive")?;
        self.grid()?;
        self.fom().validate(&self.grid()?)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(
            self.nx,
            self.ny,
            self.lx,
            self.ly,
            [self.obstacle_x, self.obstacle_y],
            self.obstacle_radius,
            self.bc,
        )?)
    }

    pub fn nu(&self) -> f64 {
        self.u_in * 2.0 * self.obstacle_radius / self.re
    }

    pub fn fom(&self) -> FomConfig {
        FomConfig {
            nu: self.nu(),
            u_in: self.u_in,
            dt_fom: self.dt_fom,
            sample_every: self.sample_every,
            n_samples: self.n_samples,
            smagorinsky_cs: self.smagorinsky_cs,
            spinup_steps: self.spinup_steps,
            projection_tol: self.projection_tol,
            perturbation: self.perturbation,
            ..FomConfig::default()
        }
    }

    pub fn mlp(&self) -> MlpConfig {
        MlpConfig {
            hidden: self.hidden.clone(),
            epochs: self.epochs,
            lr: self.lr,
            batch: self.batch,
            seed: self.seed,
            optimizer: self.optimizer,
            val_fraction: self.val_fraction,
        }
    }

    pub fn newton(&self) -> NewtonConfig {
        NewtonConfig {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
            ..NewtonConfig::default()
        }
    }

    pub fn train_len(&self) -> usize {
        ((self.n_samples as f64 * self.train_fraction).floor() as usize).max(1)
    }

    pub fn dt_snap(&self) -> f64 {
        self.dt_fom * self.sample_every as f64
    }

    /// Supremizer count for a formulation with `q` pressure modes.
    pub fn n_sup_for(&self, f: Formulation, q: usize) -> usize {
        match f {
            Formulation::Sup => self.n_sup.unwrap_or(q),
            Formulation::Ppe => 0,
        }
    }
}
