//! Little-endian binary files: `ROMSNAP1` snapshots, `ROMBAS1` bases,
//! `ROMOPS1` operators, `ROMCLS1` closures, `ROMMLP1` and `ROMRBF1` models.
//!
//! Every reader reports the byte offset of the first problem: a wrong magic,
//! a truncated payload, a non-finite value or trailing bytes.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use romforge_core::closure::{ClosureModel, ClosureVariant};
use romforge_core::evmodel::{Layer, MlpModel, RbfModel, TrainMeta};
use romforge_core::fom::{FieldFrame, SnapshotSet};
use romforge_core::galerkin::{PpeOps, RomOperators, Tensor3, TurbOps, VelocityOps};
use romforge_core::grid::{BoundarySet, GridSpec};
use romforge_core::pod::{FieldKind, PodBasis};

use crate::error::{Error, Result};

pub const SNAP_MAGIC: &[u8; 8] = b"ROMSNAP1";
pub const BASIS_MAGIC: &[u8; 8] = b"ROMBAS1\0";
pub const OPS_MAGIC: &[u8; 8] = b"ROMOPS1\0";
pub const CLOSURE_MAGIC: &[u8; 8] = b"ROMCLS1\0";
pub const MLP_MAGIC: &[u8; 8] = b"ROMMLP1\0";
pub const RBF_MAGIC: &[u8; 8] = b"ROMRBF1\0";

#[derive(Default)]
pub struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 8]) -> Self {
        Writer { buf: magic.to_vec() }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: usize) {
        self.buf.extend_from_slice(&(v as u32).to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.f64(*x);
        }
    }

    /// Row-major entries.
    pub fn matrix(&mut self, m: &DMatrix<f64>) {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.f64(m[(i, j)]);
            }
        }
    }

    pub fn tensor(&mut self, t: &Tensor3) {
        self.f64s(&t.data);
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8], magic: &[u8; 8]) -> Result<Self> {
        let n = buf.len().min(8);
        if buf[..n] != magic[..n] || n < 8 {
            let name = String::from_utf8_lossy(&magic[..7]).into_owned();
            return Err(Error::format(0, format!("bad magic: not a {name} v1 file")));
        }
        Ok(Reader { buf, pos: 8 })
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::format(
                self.pos as u64,
                format!(
                    "truncated: {what} needs {n} bytes, {} remain",
                    self.buf.len() - self.pos
                ),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    pub fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }

    /// A finite `f64`.
    pub fn f64(&mut self, what: &str) -> Result<f64> {
        let at = self.pos as u64;
        let b = self.take(8, what)?;
        let v = f64::from_le_bytes(b.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format(at, format!("non-finite value ({v}) in {what}")));
        }
        Ok(v)
    }

    pub fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        // Check the length up front so a corrupt count cannot allocate wildly.
        let need = n.saturating_mul(8);
        if self.buf.len() - self.pos < need {
            return Err(Error::format(
                self.pos as u64,
                format!(
                    "truncated: {what} needs {need} bytes, {} remain",
                    self.buf.len() - self.pos
                ),
            ));
        }
        (0..n).map(|_| self.f64(what)).collect()
    }

    pub fn matrix(&mut self, r: usize, c: usize, what: &str) -> Result<DMatrix<f64>> {
        let v = self.f64s(r * c, what)?;
        Ok(DMatrix::from_row_slice(r, c, &v))
    }

    pub fn tensor(&mut self, d: [usize; 3], what: &str) -> Result<Tensor3> {
        Ok(Tensor3 {
            dims: d,
            data: self.f64s(d[0] * d[1] * d[2], what)?,
        })
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.pos as u64,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Checks a header count against a limit before it sizes any allocation.
fn count(v: usize, max: usize, what: &str, at: u64) -> Result<usize> {
    if v > max {
        return Err(Error::format(at, format!("{what} = {v} exceeds {max}")));
    }
    Ok(v)
}

const MAX_DIM: usize = 1 << 16;

// Snapshots.

pub fn encode_snapshots(set: &SnapshotSet) -> Vec<u8> {
    let g = &set.grid;
    let mut w = Writer::new(SNAP_MAGIC);
    w.u32(g.nx);
    w.u32(g.ny);
    w.u32(set.frames.len());
    w.u32(4);
    w.f64(g.lx);
    w.f64(g.ly);
    w.f64(set.dt_snap);
    w.f64(set.frames.first().map_or(0.0, |f| f.t));
    w.f64s(&set.weights);
    for f in &set.frames {
        w.f64s(&f.u);
        w.f64s(&f.v);
        w.f64s(&f.p);
        w.f64s(&f.nu_t);
    }
    w.buf
}

/// Grid recovered from the weights: zero-weight cells are solid. The file
/// does not carry the obstacle geometry, so the disk parameters are the
/// centroid and equal-area radius of the solid cells, and the boundary
/// conditions come from the caller.
fn grid_from_weights(nx: usize, ny: usize, lx: f64, ly: f64, weights: &[f64], bc: BoundarySet) -> GridSpec {
    let mask: Vec<bool> = weights.iter().map(|w| *w > 0.0).collect();
    let (dx, dy) = (lx / nx as f64, ly / ny as f64);
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (c, fluid) in mask.iter().enumerate() {
        if !fluid {
            sx += ((c % nx) as f64 + 0.5) * dx;
            sy += ((c / nx) as f64 + 0.5) * dy;
            n += 1;
        }
    }
    let (center, radius) = if n == 0 {
        ([0.5 * lx, 0.5 * ly], 0.0)
    } else {
        (
            [sx / n as f64, sy / n as f64],
            (n as f64 * dx * dy / std::f64::consts::PI).sqrt(),
        )
    };
    GridSpec {
        nx,
        ny,
        lx,
        ly,
        obstacle_center: center,
        obstacle_radius: radius,
        cell_mask: mask,
        boundaries: bc,
    }
}

pub fn decode_snapshots(buf: &[u8], bc: BoundarySet) -> Result<SnapshotSet> {
    let mut r = Reader::new(buf, SNAP_MAGIC)?;
    let at = r.offset();
    let nx = count(r.u32("nx")?, MAX_DIM, "nx", at)?;
    let ny = count(r.u32("ny")?, MAX_DIM, "ny", at + 4)?;
    let n_frames = r.u32("n_frames")?;
    let at = r.offset();
    let n_fields = r.u32("n_fields")?;
    if n_fields != 4 {
        return Err(Error::format(at, format!("n_fields = {n_fields}, expected 4")));
    }
    let lx = r.f64("lx")?;
    let ly = r.f64("ly")?;
    let dt_snap = r.f64("dt_snap")?;
    let t0 = r.f64("t0")?;
    let n = nx * ny;
    let weights = r.f64s(n, "weights")?;
    let grid = grid_from_weights(nx, ny, lx, ly, &weights, bc);
    let mut frames = Vec::with_capacity(n_frames.min(buf.len() / (32 * n.max(1)) + 1));
    for j in 0..n_frames {
        let what = format!("frame {j}");
        frames.push(FieldFrame {
            t: t0 + j as f64 * dt_snap,
            u: r.f64s(n, &what)?,
            v: r.f64s(n, &what)?,
            p: r.f64s(n, &what)?,
            nu_t: r.f64s(n, &what)?,
        });
    }
    r.finish()?;
    let set = SnapshotSet {
        grid,
        frames,
        weights,
        dt_snap,
    };
    set.validate()?;
    Ok(set)
}

pub fn write_snapshots(set: &SnapshotSet, path: &Path) -> Result<()> {
    write_file(path, &encode_snapshots(set))
}

pub fn read_snapshots(path: &Path, bc: BoundarySet) -> Result<SnapshotSet> {
    decode_snapshots(&read_file(path)?, bc)
}

// Bases.

/// Bases need the grid shape and its weights to be usable on their own.
pub fn encode_basis(basis: &PodBasis, grid: &GridSpec) -> Vec<u8> {
    let mut w = Writer::new(BASIS_MAGIC);
    w.u32(grid.nx);
    w.u32(grid.ny);
    w.u32(basis.len());
    w.u32(basis.kind.components());
    w.f64(grid.lx);
    w.f64(grid.ly);
    w.u8(basis.kind.tag());
    w.u32(basis.n_sup);
    w.f64s(&grid.weights());
    w.u32(basis.singular_values.len());
    w.f64s(&basis.singular_values);
    for m in &basis.modes {
        w.f64s(m);
    }
    w.buf
}

pub fn decode_basis(buf: &[u8], bc: BoundarySet) -> Result<(PodBasis, GridSpec)> {
    let mut r = Reader::new(buf, BASIS_MAGIC)?;
    let at = r.offset();
    let nx = count(r.u32("nx")?, MAX_DIM, "nx", at)?;
    let ny = count(r.u32("ny")?, MAX_DIM, "ny", at + 4)?;
    let n_modes = r.u32("n_modes")?;
    let at = r.offset();
    let comps = r.u32("n_components")?;
    let lx = r.f64("lx")?;
    let ly = r.f64("ly")?;
    let at_kind = r.offset();
    let kind = FieldKind::from_tag(r.u8("kind")?).ok_or_else(|| Error::format(at_kind, "unknown basis kind tag"))?;
    if comps != kind.components() {
        return Err(Error::format(at, format!("{comps} components for a {kind:?} basis")));
    }
    let at = r.offset();
    let n_sup = r.u32("n_sup")?;
    if n_sup > n_modes || (n_sup > 0 && kind != FieldKind::Velocity) {
        return Err(Error::format(
            at,
            format!("n_sup = {n_sup} invalid for {n_modes} {kind:?} modes"),
        ));
    }
    let n = nx * ny;
    let weights = r.f64s(n, "weights")?;
    let at = r.offset();
    let n_sv = count(r.u32("n_singular")?, n_modes, "n_singular", at)?;
    let singular_values = r.f64s(n_sv, "singular values")?;
    let modes = (0..n_modes)
        .map(|i| r.f64s(comps * n, &format!("mode {i}")))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    let grid = grid_from_weights(nx, ny, lx, ly, &weights, bc);
    Ok((
        PodBasis {
            kind,
            n_cells: n,
            modes,
            singular_values,
            n_sup,
        },
        grid,
    ))
}

// Operators.

fn ops_dims(o: &RomOperators) -> [usize; 5] {
    [o.n_u, o.n_sup, o.q, o.n_nut, o.n_bc()]
}

/// Operators in fixed order after the dimensions and a 32-byte content hash:
/// ν, τ, U_BC, M, B, BT, C, H, P, D^k, E^k, D, G, N, L, CT1..CT4.
pub fn encode_ops(o: &RomOperators, hash: &[u8; 32]) -> Vec<u8> {
    let mut w = Writer::new(OPS_MAGIC);
    for d in ops_dims(o) {
        w.u32(d);
    }
    w.buf.extend_from_slice(hash);
    w.f64(o.nu);
    w.f64(o.tau);
    w.f64s(&o.u_bc);
    let v = &o.vel;
    w.matrix(&v.m);
    w.matrix(&v.b);
    w.matrix(&v.bt);
    w.tensor(&v.c);
    w.matrix(&v.h);
    w.matrix(&v.p);
    for d in &v.dk {
        w.f64s(d.as_slice());
    }
    for e in &v.ek {
        w.matrix(e);
    }
    w.matrix(&o.ppe.d);
    w.tensor(&o.ppe.g);
    w.matrix(&o.ppe.n);
    w.f64s(o.ppe.l.as_slice());
    for t in [&o.turb.ct1, &o.turb.ct2, &o.turb.ct3, &o.turb.ct4] {
        w.tensor(t);
    }
    w.buf
}

pub fn decode_ops(buf: &[u8]) -> Result<(RomOperators, [u8; 32])> {
    let mut r = Reader::new(buf, OPS_MAGIC)?;
    let at = r.offset();
    let mut dims = [0usize; 5];
    for (i, d) in dims.iter_mut().enumerate() {
        *d = count(r.u32("dimensions")?, 4096, "operator dimension", at + 4 * i as u64)?;
    }
    let [n_u, n_sup, q, n_nut, n_bc] = dims;
    let rr = n_u + n_sup;
    let mut hash = [0u8; 32];
    hash.copy_from_slice(r.take(32, "content hash")?);
    let nu = r.f64("nu")?;
    let tau = r.f64("tau")?;
    let u_bc = r.f64s(n_bc, "U_BC")?;
    let m = r.matrix(rr, rr, "M")?;
    let b = r.matrix(rr, rr, "B")?;
    let bt = r.matrix(rr, rr, "BT")?;
    let c = r.tensor([rr, rr, rr], "C")?;
    let h = r.matrix(rr, q, "H")?;
    let p = r.matrix(q, rr, "P")?;
    let dk = (0..n_bc)
        .map(|_| r.f64s(rr, "D^k").map(DVector::from_vec))
        .collect::<Result<Vec<_>>>()?;
    let ek = (0..n_bc).map(|_| r.matrix(rr, rr, "E^k")).collect::<Result<Vec<_>>>()?;
    let d = r.matrix(q, q, "D")?;
    let g = r.tensor([q, rr, rr], "G")?;
    let n = r.matrix(q, rr, "N")?;
    let l = DVector::from_vec(r.f64s(q, "L")?);
    let ct1 = r.tensor([rr, n_nut, rr], "CT1")?;
    let ct2 = r.tensor([rr, n_nut, rr], "CT2")?;
    let ct3 = r.tensor([q, n_nut, rr], "CT3")?;
    let ct4 = r.tensor([q, n_nut, rr], "CT4")?;
    r.finish()?;
    Ok((
        RomOperators {
            n_u,
            n_sup,
            q,
            n_nut,
            vel: VelocityOps {
                m,
                b,
                bt,
                c,
                h,
                p,
                dk,
                ek,
            },
            ppe: PpeOps { d, g, n, l },
            turb: TurbOps { ct1, ct2, ct3, ct4 },
            nu,
            tau,
            u_bc,
        },
        hash,
    ))
}

// Closures.

pub fn encode_closure(c: &ClosureModel) -> Vec<u8> {
    let mut w = Writer::new(CLOSURE_MAGIC);
    w.u8(c.variant.tag());
    w.u32(c.r);
    w.u32(c.q);
    w.matrix(&c.a_tilde);
    w.tensor(&c.b_tilde);
    w.f64(c.residual);
    w.f64(c.objective);
    w.f64(c.ridge);
    w.u32(c.iterations);
    w.u8(c.converged as u8);
    w.f64(c.max_eig_sym_a);
    w.f64(c.sym6_b);
    w.buf
}

pub fn decode_closure(buf: &[u8]) -> Result<ClosureModel> {
    let mut r = Reader::new(buf, CLOSURE_MAGIC)?;
    let at = r.offset();
    let variant =
        ClosureVariant::from_tag(r.u8("variant")?).ok_or_else(|| Error::format(at, "unknown closure variant tag"))?;
    let at = r.offset();
    let rr = count(r.u32("r")?, 1024, "r", at)?;
    let q = count(r.u32("q")?, 1024, "q", at + 4)?;
    let n = if variant == ClosureVariant::PpeJoint {
        rr + q
    } else {
        rr
    };
    let a_tilde = r.matrix(n, n, "A")?;
    let b_tilde = r.tensor([n, n, n], "B")?;
    let residual = r.f64("residual")?;
    let objective = r.f64("objective")?;
    let ridge = r.f64("ridge")?;
    let iterations = r.u32("iterations")?;
    let converged = r.u8("converged")? != 0;
    let max_eig_sym_a = r.f64("max eig sym(A)")?;
    let sym6_b = r.f64("sym6(B)")?;
    r.finish()?;
    Ok(ClosureModel {
        variant,
        r: rr,
        q,
        a_tilde,
        b_tilde,
        residual,
        objective,
        ridge,
        iterations,
        converged,
        max_eig_sym_a,
        sym6_b,
        warnings: Vec::new(),
    })
}

// Eddy-viscosity models.

fn f64_list(w: &mut Writer, v: &[f64]) {
    w.u32(v.len());
    w.f64s(v);
}

fn read_list(r: &mut Reader, max: usize, what: &str) -> Result<Vec<f64>> {
    let at = r.offset();
    let n = count(r.u32(what)?, max, what, at)?;
    r.f64s(n, what)
}

pub fn encode_mlp(m: &MlpModel) -> Vec<u8> {
    let mut w = Writer::new(MLP_MAGIC);
    let sizes = m.sizes();
    w.u32(sizes.len());
    for s in &sizes {
        w.u32(*s);
    }
    w.f64s(&m.x_mean);
    w.f64s(&m.x_std);
    w.f64s(&m.y_mean);
    w.f64s(&m.y_std);
    for l in &m.layers {
        w.f64s(&l.w);
        w.f64s(&l.b);
    }
    let meta = &m.meta;
    w.u32(meta.epochs);
    w.f64(meta.lr);
    w.u64(meta.seed);
    w.u8(meta.optimizer_adam as u8);
    w.f64(meta.final_loss);
    f64_list(&mut w, &meta.loss_history);
    f64_list(&mut w, &meta.val_history);
    w.buf
}

pub fn decode_mlp(buf: &[u8]) -> Result<MlpModel> {
    let mut r = Reader::new(buf, MLP_MAGIC)?;
    let at = r.offset();
    let n_sizes = r.u32("layer count")?;
    if !(2..=64).contains(&n_sizes) {
        return Err(Error::format(at, format!("{n_sizes} layer sizes")));
    }
    let mut sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        let at = r.offset();
        let s = r.u32("layer size")?;
        if s == 0 || s > MAX_DIM {
            return Err(Error::format(at, format!("layer size {s}")));
        }
        sizes.push(s);
    }
    let (n_in, n_out) = (sizes[0], sizes[n_sizes - 1]);
    let x_mean = r.f64s(n_in, "input mean")?;
    let x_std = r.f64s(n_in, "input std")?;
    let y_mean = r.f64s(n_out, "output mean")?;
    let y_std = r.f64s(n_out, "output std")?;
    let mut layers = Vec::with_capacity(n_sizes - 1);
    for (k, p) in sizes.windows(2).enumerate() {
        let w = r.f64s(p[0] * p[1], &format!("layer {k} weights"))?;
        let b = r.f64s(p[1], &format!("layer {k} biases"))?;
        layers.push(Layer {
            n_in: p[0],
            n_out: p[1],
            w,
            b,
        });
    }
    let epochs = r.u32("epochs")?;
    let lr = r.f64("lr")?;
    let seed = r.u64("seed")?;
    let optimizer_adam = r.u8("optimizer")? != 0;
    let final_loss = r.f64("final loss")?;
    let loss_history = read_list(&mut r, 1 << 28, "loss history")?;
    let val_history = read_list(&mut r, 1 << 28, "validation history")?;
    r.finish()?;
    Ok(MlpModel {
        layers,
        x_mean,
        x_std,
        y_mean,
        y_std,
        meta: TrainMeta {
            epochs,
            lr,
            seed,
            optimizer_adam,
            loss_history,
            val_history,
            final_loss,
        },
    })
}

pub fn encode_rbf(m: &RbfModel) -> Vec<u8> {
    let mut w = Writer::new(RBF_MAGIC);
    let n_in = m.x_mean.len();
    w.u32(m.centers.len());
    w.u32(n_in);
    w.u32(m.coeffs.ncols());
    w.f64(m.epsilon);
    w.f64s(&m.x_mean);
    w.f64s(&m.x_std);
    for c in &m.centers {
        w.f64s(c);
    }
    w.matrix(&m.coeffs);
    w.buf
}

pub fn decode_rbf(buf: &[u8]) -> Result<RbfModel> {
    let mut r = Reader::new(buf, RBF_MAGIC)?;
    let at = r.offset();
    let n_c = count(r.u32("centers")?, 1 << 24, "centers", at)?;
    let n_in = count(r.u32("inputs")?, MAX_DIM, "inputs", at + 4)?;
    let n_out = count(r.u32("outputs")?, MAX_DIM, "outputs", at + 8)?;
    let epsilon = r.f64("epsilon")?;
    let x_mean = r.f64s(n_in, "input mean")?;
    let x_std = r.f64s(n_in, "input std")?;
    let centers = (0..n_c).map(|_| r.f64s(n_in, "centers")).collect::<Result<Vec<_>>>()?;
    let coeffs = r.matrix(n_c, n_out, "coefficients")?;
    r.finish()?;
    Ok(RbfModel {
        centers,
        coeffs,
        epsilon,
        x_mean,
        x_std,
    })
}
