//! On-disk operator cache keyed by a SHA-256 of bases, grid, boundary kinds
//! and operator parameters.

use std::path::{Path, PathBuf};

use romforge_core::galerkin::{OperatorConfig, RomOperators};
use romforge_core::grid::{EdgeKind, GridSpec};
use romforge_core::pod::{FieldKind, PodBasis};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::formats::{decode_ops, encode_ops, read_file, write_file};

fn edge_tag(e: EdgeKind) -> u8 {
    match e {
        EdgeKind::Inflow => 0,
        EdgeKind::Outflow => 1,
        EdgeKind::FreeSlip => 2,
        EdgeKind::NoSlip => 3,
    }
}

fn kind_tag(k: FieldKind) -> u8 {
    match k {
        FieldKind::Velocity => 0,
        FieldKind::Pressure => 1,
        FieldKind::EddyViscosity => 2,
    }
}

fn hash_basis(h: &mut Sha256, b: &PodBasis) {
    h.update([kind_tag(b.kind)]);
    h.update((b.n_cells as u64).to_le_bytes());
    h.update((b.modes.len() as u64).to_le_bytes());
    h.update((b.n_sup as u64).to_le_bytes());
    for m in &b.modes {
        h.update((m.len() as u64).to_le_bytes());
        for x in m {
            h.update(x.to_le_bytes());
        }
    }
}

/// Content hash of everything the operators depend on.
pub fn ops_hash(vel: &PodBasis, pres: &PodBasis, nut: &PodBasis, grid: &GridSpec, op: &OperatorConfig) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"romforge-ops-v1");
    h.update((grid.nx as u64).to_le_bytes());
    h.update((grid.ny as u64).to_le_bytes());
    for x in [
        grid.lx,
        grid.ly,
        grid.obstacle_center[0],
        grid.obstacle_center[1],
        grid.obstacle_radius,
    ] {
        h.update(x.to_le_bytes());
    }
    h.update(grid.cell_mask.iter().map(|&f| f as u8).collect::<Vec<_>>());
    let bc = grid.boundaries;
    h.update([bc.west, bc.east, bc.south, bc.north].map(edge_tag));
    for x in [op.nu, op.tau, op.u_in] {
        h.update(x.to_le_bytes());
    }
    for b in [vel, pres, nut] {
        hash_basis(&mut h, b);
    }
    h.finalize().into()
}

/// Where the operators with hash `key` are stored under `dir`.
pub fn cache_path(dir: &Path, key: &[u8; 32]) -> PathBuf {
    dir.join(format!("{}.romops", hex::encode(key)))
}

/// Loads cached operators or assembles and stores them. A cache file whose
/// recorded hash differs from its name is ignored and rewritten.
pub fn cached_ops(
    dir: Option<&Path>,
    vel: &PodBasis,
    pres: &PodBasis,
    nut: &PodBasis,
    grid: &GridSpec,
    op: &OperatorConfig,
) -> Result<(RomOperators, [u8; 32])> {
    let key = ops_hash(vel, pres, nut, grid, op);
    let Some(dir) = dir else {
        return Ok((RomOperators::assemble(vel, pres, nut, grid, op)?, key));
    };
    let path = cache_path(dir, &key);
    if path.exists() {
        if let Ok((ops, stored)) = read_file(&path).and_then(|b| decode_ops(&b)) {
            if stored == key {
                return Ok((ops, key));
            }
        }
    }
    let ops = RomOperators::assemble(vel, pres, nut, grid, op)?;
    write_file(&path, &encode_ops(&ops, &key))?;
    Ok((ops, key))
}
