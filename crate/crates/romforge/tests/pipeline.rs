mod common;

use common::{small_bases, small_config, small_set};
use romforge::cache::{cache_path, cached_ops, ops_hash};
use romforge::core::grid::EdgeKind;
use romforge::core::snapshots::reconstruct;
use romforge::pipeline::*;
use romforge::sweep::{mode_sweep, SweepResult, PROJECTION};

#[test]
fn operator_cache_hits_and_keys_on_content() {
    let cfg = small_config();
    let set = small_set();
    let (vel, pres, nut) = coarse_bases(set, small_bases(), Dims::from_config(&cfg)).unwrap();
    let op = operator_config(&cfg);
    let dir = tempfile::tempdir().unwrap();

    let (first, key) = cached_ops(Some(dir.path()), &vel, &pres, &nut, &set.grid, &op).unwrap();
    let path = cache_path(dir.path(), &key);
    assert!(path.exists());
    let stamp = std::fs::metadata(&path).unwrap().modified().unwrap();
    let (second, key2) = cached_ops(Some(dir.path()), &vel, &pres, &nut, &set.grid, &op).unwrap();
    assert_eq!((&first, key), (&second, key2));
    assert_eq!(std::fs::metadata(&path).unwrap().modified().unwrap(), stamp);

    // A corrupted entry is rebuilt, not trusted.
    std::fs::write(&path, b"ROMOPS1\0garbage").unwrap();
    let (third, _) = cached_ops(Some(dir.path()), &vel, &pres, &nut, &set.grid, &op).unwrap();
    assert_eq!(third, first);

    let mut grid = set.grid.clone();
    grid.boundaries.north = EdgeKind::NoSlip;
    assert_ne!(ops_hash(&vel, &pres, &nut, &grid, &op), key);
    let mut op2 = op;
    op2.tau *= 2.0;
    assert_ne!(ops_hash(&vel, &pres, &nut, &set.grid, &op2), key);
    let mut vel2 = vel.clone();
    vel2.modes[0][3] += 1e-15;
    assert_ne!(ops_hash(&vel2, &pres, &nut, &set.grid, &op), key);
}

#[test]
fn reconstructed_eddy_viscosity_is_nonnegative_on_average() {
    let cfg = small_config();
    let set = small_set();
    let model = build_model(set, small_bases(), Dims::from_config(&cfg), &operator_config(&cfg)).unwrap();
    let (_, g) = ev_training_data(set, &model).unwrap();
    for (j, frame) in set.frames.iter().enumerate() {
        let row: Vec<f64> = g.values.row(j).iter().copied().collect();
        let nut = reconstruct(&model.nut, &row).unwrap();
        let fluid: Vec<f64> = (0..nut.len())
            .filter(|&c| set.grid.is_fluid(c))
            .map(|c| nut[c])
            .collect();
        let mean = fluid.iter().sum::<f64>() / fluid.len() as f64;
        let max = frame.nu_t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(mean >= -1e-6 * max, "frame {j}: mean {mean}, max {max}");
    }
}

#[test]
fn sweep_smoke_and_lower_bound() {
    let cfg = small_config();
    let s = mode_sweep(&cfg, small_set(), small_bases()).unwrap();
    assert_eq!(s.ns, vec![1, 2]);
    assert_eq!(s.cells.len(), 2 * 2 * 5);
    let runs: Vec<_> = s.cells.iter().filter(|c| c.label != PROJECTION).collect();
    assert_eq!(runs.len(), 4 * 2 * 2);
    for c in &s.cells {
        assert!(c.failure.is_none() && c.iu.is_finite() && c.ip.is_finite(), "{c:?}");
    }
    assert!(s.lower_bound_violations(1e-9).is_empty());
    for f in s.formulations() {
        for n in 1..=2 {
            for l in SweepResult::labels() {
                assert!(s.get(f, n, l).is_some());
            }
        }
    }
}

#[test]
fn corrections_vanish_when_fine_equals_coarse() {
    let cfg = small_config();
    let set = small_set();
    for f in [
        romforge::core::romsolve::Formulation::Sup,
        romforge::core::romsolve::Formulation::Ppe,
    ] {
        let model = build_model(set, small_bases(), Dims::uniform(&cfg, f, 3), &operator_config(&cfg)).unwrap();
        let corr = correction_snapshots(set, small_bases(), &model, 3).unwrap();
        assert!(corr.tau_u.amax() <= 1e-12, "{}", corr.tau_u.amax());
        if let Some(tp) = &corr.tau_p {
            assert!(tp.amax() <= 1e-12, "{}", tp.amax());
        }
    }
}
