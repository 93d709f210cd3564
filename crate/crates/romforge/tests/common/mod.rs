#![allow(dead_code)]

use std::sync::OnceLock;

use romforge::config::PipelineConfig;
use romforge::core::fom::SnapshotSet;
use romforge::pipeline::{generate_snapshots, Bases};

/// A 48×24 channel with a short run: enough frames for every stage.
pub fn small_config() -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    for (k, v) in [
        ("nx", "48"),
        ("ny", "24"),
        ("re", "100"),
        ("dt_fom", "0.002"),
        ("sample_every", "10"),
        ("n_samples", "30"),
        ("spinup_steps", "500"),
        ("n_u", "3"),
        ("q", "3"),
        ("n_nut", "3"),
        ("d", "12"),
        ("train_fraction", "0.5"),
        ("hidden", "8"),
        ("epochs", "50"),
        ("sweep_n_max", "2"),
        ("heatmap_frame", "5"),
    ] {
        cfg.set(k, v).unwrap();
    }
    cfg
}

pub fn small_set() -> &'static SnapshotSet {
    static SET: OnceLock<SnapshotSet> = OnceLock::new();
    SET.get_or_init(|| generate_snapshots(&small_config()).unwrap())
}

pub fn small_bases() -> &'static Bases {
    static B: OnceLock<Bases> = OnceLock::new();
    B.get_or_init(|| Bases::for_config(small_set(), &small_config()).unwrap())
}
