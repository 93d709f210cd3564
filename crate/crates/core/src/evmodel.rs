//! Regression of eddy-viscosity coefficients on velocity coefficients.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Error, Result};
use crate::snapshots::CoeffSeries;

/// Anything mapping velocity coefficients to eddy-viscosity coefficients.
pub trait EddyViscosityModel {
    fn n_in(&self) -> usize;
    fn n_out(&self) -> usize;
    fn predict(&self, a: &[f64]) -> Result<Vec<f64>>;
}

/// Always predicts zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroEv {
    pub n_in: usize,
    pub n_out: usize,
}

impl EddyViscosityModel for ZeroEv {
    fn n_in(&self) -> usize {
        self.n_in
    }

    fn n_out(&self) -> usize {
        self.n_out
    }

    fn predict(&self, a: &[f64]) -> Result<Vec<f64>> {
        ensure!(
            a.len() == self.n_in,
            Dimension,
            "expected {} inputs, got {}",
            self.n_in,
            a.len()
        );
        Ok(vec![0.0; self.n_out])
    }
}

/// One dense layer, weights row-major `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for (o, (row, bias)) in out.iter_mut().zip(self.w.chunks_exact(self.n_in).zip(&self.b)) {
            let mut s = *bias;
            for (wi, xi) in row.iter().zip(x) {
                s += wi * xi;
            }
            *o = s;
        }
    }

    /// Largest singular value by power iteration on `WᵀW`.
    fn spectral_norm(&self) -> f64 {
        let w = DMatrix::from_row_slice(self.n_out, self.n_in, &self.w);
        let wtw = w.transpose() * &w;
        let mut v = DVector::from_element(self.n_in, 1.0 / (self.n_in as f64).sqrt());
        let mut lam = 0.0;
        for _ in 0..500 {
            let nv = &wtw * &v;
            let n = nv.norm();
            if n == 0.0 {
                return 0.0;
            }
            let next = n;
            v = nv / n;
            if (next - lam).abs() <= 1e-14 * next {
                lam = next;
                break;
            }
            lam = next;
        }
        lam.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Optimizer {
    /// Plain gradient descent.
    Gd,
    Adam,
}

/// Training settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub lr: f64,
    /// `None` means full batch.
    pub batch: Option<usize>,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Fraction of samples held out for validation.
    pub val_fraction: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![256, 64],
            epochs: 5000,
            lr: 1e-5,
            batch: None,
            seed: 0,
            optimizer: Optimizer::Gd,
            val_fraction: 0.2,
        }
    }
}

/// What happened during training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainMeta {
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
    pub optimizer_adam: bool,
    /// Training loss before each epoch's update, plus the final value.
    pub loss_history: Vec<f64>,
    pub val_history: Vec<f64>,
    pub final_loss: f64,
}

/// Fully connected ReLU network with in-model standardisation.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: Vec<f64>,
    pub y_std: Vec<f64>,
    pub meta: TrainMeta,
}

impl MlpModel {
    /// Glorot-uniform weights, zero biases, identity standardisation.
    pub fn init(sizes: &[usize], seed: u64) -> Result<Self> {
        ensure!(
            sizes.len() >= 2 && sizes.iter().all(|&s| s >= 1),
            Config,
            "layer sizes must be positive, got {sizes:?}"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = sizes
            .windows(2)
            .map(|p| {
                let (n_in, n_out) = (p[0], p[1]);
                let lim = (6.0 / (n_in + n_out) as f64).sqrt();
                Layer {
                    n_in,
                    n_out,
                    w: (0..n_in * n_out).map(|_| rng.gen_range(-lim..lim)).collect(),
                    b: vec![0.0; n_out],
                }
            })
            .collect();
        let (n0, nl) = (sizes[0], *sizes.last().unwrap());
        Ok(MlpModel {
            layers,
            x_mean: vec![0.0; n0],
            x_std: vec![1.0; n0],
            y_mean: vec![0.0; nl],
            y_std: vec![1.0; nl],
            meta: TrainMeta {
                seed,
                ..Default::default()
            },
        })
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].n_in];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Raw network on standardised input; returns every layer's activations.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.n_out];
            layer.forward(acts.last().unwrap(), &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    fn standardise(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(self.x_mean.iter().zip(&self.x_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Half mean squared error on standardised data and its parameter
    /// gradient, layer by layer as `(dW, db)`.
    fn loss_grad(&self, xs: &[Vec<f64>], ys: &[Vec<f64>], want_grad: bool) -> (f64, Vec<(Vec<f64>, Vec<f64>)>) {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = if want_grad {
            self.layers
                .iter()
                .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                .collect()
        } else {
            Vec::new()
        };
        let n_out = self.layers.last().unwrap().n_out;
        let scale = 1.0 / (xs.len() * n_out) as f64;
        let mut loss = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let acts = self.forward_all(x);
            let out = acts.last().unwrap();
            let mut delta: Vec<f64> = out.iter().zip(y).map(|(o, t)| o - t).collect();
            loss += delta.iter().map(|d| d * d).sum::<f64>();
            if !want_grad {
                continue;
            }
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &acts[l];
                let (gw, gb) = &mut grads[l];
                for (o, d) in delta.iter().enumerate() {
                    let ds = d * scale;
                    gb[o] += ds;
                    let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                    for (g, xi) in row.iter_mut().zip(input) {
                        *g += ds * xi;
                    }
                }
                if l == 0 {
                    break;
                }
                let mut prev = vec![0.0; layer.n_in];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                    for (p, wi) in prev.iter_mut().zip(row) {
                        *p += d * wi;
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        (0.5 * loss * scale, grads)
    }

    /// Largest Lipschitz constant the trained map can have, in original units.
    pub fn lipschitz_bound(&self) -> f64 {
        let net: f64 = self.layers.iter().map(|l| l.spectral_norm()).product();
        let ymax = self.y_std.iter().fold(0.0f64, |m, v| m.max(*v));
        let xmin = self.x_std.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        net * ymax / xmin
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }
}

impl EddyViscosityModel for MlpModel {
    fn n_in(&self) -> usize {
        self.layers[0].n_in
    }

    fn n_out(&self) -> usize {
        self.layers.last().unwrap().n_out
    }

    fn predict(&self, a: &[f64]) -> Result<Vec<f64>> {
        ensure!(
            a.len() == self.n_in(),
            Dimension,
            "network expects {} inputs, got {}",
            self.n_in(),
            a.len()
        );
        let out = self.forward_all(&self.standardise(a)).pop().unwrap();
        Ok(out
            .iter()
            .zip(self.y_mean.iter().zip(&self.y_std))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }
}

fn column_stats(s: &CoeffSeries, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = s.n_coeffs();
    let m = rows.len() as f64;
    let mut mean = vec![0.0; n];
    let mut std = vec![0.0; n];
    for k in 0..n {
        mean[k] = rows.iter().map(|&j| s.values[(j, k)]).sum::<f64>() / m;
        let var = rows.iter().map(|&j| (s.values[(j, k)] - mean[k]).powi(2)).sum::<f64>() / m;
        let sd = var.sqrt();
        std[k] = if sd > 1e-12 * (1.0 + mean[k].abs()) { sd } else { 1.0 };
    }
    (mean, std)
}

/// Trains `g ≈ f(a)` by gradient descent on the standardised mean squared error.
pub fn train_mlp(a: &CoeffSeries, g: &CoeffSeries, cfg: &MlpConfig) -> Result<MlpModel> {
    ensure!(
        a.times.len() == g.times.len()
            && a.times
                .iter()
                .zip(&g.times)
                .all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + x.abs())),
        Dimension,
        "velocity and eddy-viscosity coefficients are not sampled at the same times"
    );
    ensure!(
        a.n_coeffs() >= 1 && g.n_coeffs() >= 1,
        Config,
        "need at least one input and one output"
    );
    ensure!(
        cfg.lr > 0.0 && cfg.lr.is_finite(),
        Config,
        "learning rate must be positive"
    );
    ensure!(
        (0.0..1.0).contains(&cfg.val_fraction),
        Config,
        "validation fraction must lie in [0, 1)"
    );
    let m = a.n_times();
    ensure!(m >= 2, Config, "need at least two samples, got {m}");
    let mut sizes = vec![a.n_coeffs()];
    sizes.extend_from_slice(&cfg.hidden);
    sizes.push(g.n_coeffs());
    let mut model = MlpModel::init(&sizes, cfg.seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng);
    let n_val = ((m as f64 * cfg.val_fraction).round() as usize).min(m - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut train_idx = train_idx.to_vec();
    train_idx.sort_unstable();
    let (xm, xs) = column_stats(a, &train_idx);
    let (ym, ys) = column_stats(g, &train_idx);
    model.x_mean = xm;
    model.x_std = xs;
    model.y_mean = ym;
    model.y_std = ys;

    let prep = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let x = idx.iter().map(|&j| model.standardise(&a.row(j))).collect();
        let y = idx
            .iter()
            .map(|&j| {
                g.row(j)
                    .iter()
                    .zip(model.y_mean.iter().zip(&model.y_std))
                    .map(|(v, (mu, s))| (v - mu) / s)
                    .collect()
            })
            .collect();
        (x, y)
    };
    let (tx, ty) = prep(&train_idx);
    let (vx, vy) = prep(val_idx);

    let n_train = tx.len();
    let batch = cfg.batch.unwrap_or(n_train).clamp(1, n_train);
    let np = model.n_params();
    let (mut m1, mut m2) = (vec![0.0; np], vec![0.0; np]);
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut step = 0i32;
    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let mut val_history = Vec::with_capacity(cfg.epochs + 1);
    let mut perm: Vec<usize> = (0..n_train).collect();
    let mut bx: Vec<Vec<f64>> = Vec::with_capacity(batch);
    let mut by: Vec<Vec<f64>> = Vec::with_capacity(batch);
    for epoch in 0..cfg.epochs {
        let (loss, _) = model.loss_grad(&tx, &ty, false);
        if !loss.is_finite() {
            return Err(Error::Diverged(epoch));
        }
        history.push(loss);
        if !vx.is_empty() {
            val_history.push(model.loss_grad(&vx, &vy, false).0);
        }
        if batch < n_train {
            perm.shuffle(&mut rng);
        }
        for chunk in perm.chunks(batch) {
            bx.clear();
            by.clear();
            for &k in chunk {
                bx.push(tx[k].clone());
                by.push(ty[k].clone());
            }
            let (_, grads) = model.loss_grad(&bx, &by, true);
            step += 1;
            let flat = grads.into_iter().flat_map(|(w, b)| w.into_iter().chain(b));
            match cfg.optimizer {
                Optimizer::Gd => {
                    for (p, gr) in model.params_mut().zip(flat) {
                        *p -= cfg.lr * gr;
                    }
                }
                Optimizer::Adam => {
                    let c1 = 1.0 - b1.powi(step);
                    let c2 = 1.0 - b2.powi(step);
                    for ((p, gr), (mm, vv)) in model.params_mut().zip(flat).zip(m1.iter_mut().zip(m2.iter_mut())) {
                        *mm = b1 * *mm + (1.0 - b1) * gr;
                        *vv = b2 * *vv + (1.0 - b2) * gr * gr;
                        *p -= cfg.lr * (*mm / c1) / ((*vv / c2).sqrt() + eps);
                    }
                }
            }
        }
    }
    let (loss, _) = model.loss_grad(&tx, &ty, false);
    if !loss.is_finite() {
        return Err(Error::Diverged(cfg.epochs));
    }
    history.push(loss);
    if !vx.is_empty() {
        val_history.push(model.loss_grad(&vx, &vy, false).0);
    }
    model.meta = TrainMeta {
        epochs: cfg.epochs,
        lr: cfg.lr,
        seed: cfg.seed,
        optimizer_adam: cfg.optimizer == Optimizer::Adam,
        loss_history: history,
        val_history,
        final_loss: loss,
    };
    Ok(model)
}

/// Largest discrepancy between backpropagated and central-difference
/// gradients of the training loss, relative to the gradient's max-norm.
/// Inputs and targets are taken in the network's standardised units.
pub fn gradcheck_mlp(model: &MlpModel, xs: &[Vec<f64>], ys: &[Vec<f64>], h: f64) -> f64 {
    let (_, grads) = model.loss_grad(xs, ys, true);
    let analytic: Vec<f64> = grads.into_iter().flat_map(|(w, b)| w.into_iter().chain(b)).collect();
    let mut probe = model.clone();
    let mut numeric = Vec::with_capacity(analytic.len());
    for k in 0..analytic.len() {
        let orig = *probe.params_mut().nth(k).unwrap();
        *probe.params_mut().nth(k).unwrap() = orig + h;
        let lp = probe.loss_grad(xs, ys, false).0;
        *probe.params_mut().nth(k).unwrap() = orig - h;
        let lm = probe.loss_grad(xs, ys, false).0;
        *probe.params_mut().nth(k).unwrap() = orig;
        numeric.push((lp - lm) / (2.0 * h));
    }
    let scale = analytic
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / scale)
        .fold(0.0, f64::max)
}

/// Backpropagated gradient of the standardised loss, flattened layer by layer.
pub fn loss_gradient(model: &MlpModel, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let (l, g) = model.loss_grad(xs, ys, true);
    (l, g.into_iter().flat_map(|(w, b)| w.into_iter().chain(b)).collect())
}

/// Gaussian radial-basis interpolant on standardised inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfModel {
    pub centers: Vec<Vec<f64>>,
    /// `n_centers × n_out`.
    pub coeffs: DMatrix<f64>,
    pub epsilon: f64,
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
}

fn sqdist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl RbfModel {
    fn kernel(&self, r2: f64) -> f64 {
        (-self.epsilon * self.epsilon * r2).exp()
    }

    fn standardise(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(self.x_mean.iter().zip(&self.x_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Fits an interpolant through every sample. `epsilon = None` picks the
/// reciprocal of the mean nearest-neighbour distance.
pub fn fit_rbf(a: &CoeffSeries, g: &CoeffSeries, epsilon: Option<f64>) -> Result<RbfModel> {
    ensure!(
        a.n_times() == g.n_times(),
        Dimension,
        "{} inputs for {} targets",
        a.n_times(),
        g.n_times()
    );
    let m = a.n_times();
    ensure!(m >= 1, Config, "no samples to interpolate");
    let rows: Vec<usize> = (0..m).collect();
    let (xm, xs) = column_stats(a, &rows);
    let mut model = RbfModel {
        centers: Vec::new(),
        coeffs: DMatrix::zeros(0, 0),
        epsilon: 1.0,
        x_mean: xm,
        x_std: xs,
    };
    model.centers = (0..m).map(|j| model.standardise(&a.row(j))).collect();
    let eps = match epsilon {
        Some(e) => e,
        None => {
            let mut total = 0.0;
            for (i, c) in model.centers.iter().enumerate() {
                let nn = model
                    .centers
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, d)| sqdist(c, d))
                    .fold(f64::INFINITY, f64::min);
                total += if nn.is_finite() { nn.sqrt() } else { 1.0 };
            }
            let mean = total / m as f64;
            if mean > 0.0 {
                1.0 / mean
            } else {
                1.0
            }
        }
    };
    ensure!(eps > 0.0 && eps.is_finite(), Config, "shape parameter must be positive");
    model.epsilon = eps;
    let k = DMatrix::from_fn(m, m, |i, j| model.kernel(sqdist(&model.centers[i], &model.centers[j])));
    let lu = k.clone().lu();
    let coeffs = lu
        .solve(&g.values)
        .ok_or(Error::Singular("radial basis interpolation matrix"))?;
    let resid = (&k * &coeffs - &g.values).norm();
    let scale = g.values.norm().max(f64::MIN_POSITIVE);
    ensure!(
        resid <= 1e-8 * scale || g.values.norm() == 0.0,
        IllPosed,
        "interpolation residual {:.3e} exceeds tolerance; pick a larger shape parameter",
        resid / scale
    );
    model.coeffs = coeffs;
    Ok(model)
}

impl EddyViscosityModel for RbfModel {
    fn n_in(&self) -> usize {
        self.x_mean.len()
    }

    fn n_out(&self) -> usize {
        self.coeffs.ncols()
    }

    fn predict(&self, a: &[f64]) -> Result<Vec<f64>> {
        ensure!(
            a.len() == self.n_in(),
            Dimension,
            "interpolant expects {} inputs, got {}",
            self.n_in(),
            a.len()
        );
        let x = self.standardise(a);
        let mut out = vec![0.0; self.n_out()];
        for (c, center) in self.centers.iter().enumerate() {
            let phi = self.kernel(sqdist(&x, center));
            for (o, v) in out.iter_mut().enumerate() {
                *v += phi * self.coeffs[(c, o)];
            }
        }
        Ok(out)
    }
}
