//! Partial diffusion on a synthetic 2D problem: points on a triangle outline
//! are carried towards three Gaussian clusters sitting on its vertices.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::StandardNormal;

use super::fmt_g;
use crate::copilot::{Copilot, CopilotConfig, DiffusionModel};
use crate::demos::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, stream, Rng};

pub const TRIANGLE_EDGE: f64 = 2.0;
pub const MODE_SIGMA: f64 = 0.1;

/// Vertices of the equilateral triangle centered at the origin, apex up.
pub fn vertices() -> [[f64; 2]; 3] {
    let r = TRIANGLE_EDGE / 3f64.sqrt();
    [0.5, 7.0 / 6.0, 11.0 / 6.0].map(|t: f64| [r * (t * PI).cos(), r * (t * PI).sin()])
}

/// Draws from the tri-modal target.
pub fn sample_target(n: usize, rng: &mut Rng) -> Vec<[f64; 2]> {
    let v = vertices();
    (0..n)
        .map(|_| {
            let c = v[rng.random_range(0..3)];
            let (dx, dy): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            [c[0] + MODE_SIGMA * dx, c[1] + MODE_SIGMA * dy]
        })
        .collect()
}

/// Draws uniformly from the triangle outline.
pub fn sample_source(n: usize, rng: &mut Rng) -> Vec<[f64; 2]> {
    let v = vertices();
    (0..n)
        .map(|_| {
            let t = rng.random_range(0.0..3.0);
            let e = (t as usize).min(2);
            let f = t - e as f64;
            let (a, b) = (v[e], v[(e + 1) % 3]);
            [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])]
        })
        .collect()
}

/// Target samples packaged as a state-free dataset for training.
pub fn synth2d_dataset(n: usize, seed: u64) -> Result<Dataset> {
    let pts = sample_target(n, &mut rng_from(seed, stream::SAMPLE));
    Dataset::from_samples(None, 0, 2, pts.into_iter().flatten().collect(), seed)
}

/// Squared distance from `p` to the nearest target mode center.
pub fn nearest_mode_dist2(p: [f64; 2]) -> f64 {
    vertices().iter().map(|c| (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformRow {
    pub gamma: f64,
    pub index: usize,
    pub src: [f64; 2],
    pub out: [f64; 2],
}

impl TransformRow {
    pub fn displacement(&self) -> f64 {
        (self.src[0] - self.out[0]).powi(2) + (self.src[1] - self.out[1]).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult {
    /// γ-major in input order, then sample index.
    pub rows: Vec<TransformRow>,
    /// Largest predicted-noise norm seen across every call.
    pub eps_sup: f64,
    pub k_sw: Vec<usize>,
}

impl TransformResult {
    pub fn rows_for(&self, gamma: f64) -> impl Iterator<Item = &TransformRow> + '_ {
        self.rows.iter().filter(move |r| r.gamma == gamma)
    }

    pub fn mean_displacement(&self, gamma: f64) -> f64 {
        let (sum, n) = self.rows_for(gamma).fold((0.0, 0usize), |(s, n), r| (s + r.displacement(), n + 1));
        sum / n.max(1) as f64
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("gamma,index,src_x,src_y,out_x,out_y\n");
        for r in &self.rows {
            let v = [r.src[0], r.src[1], r.out[0], r.out[1]].map(fmt_g).join(",");
            out.push_str(&format!("{},{},{v}\n", fmt_g(r.gamma), r.index));
        }
        out
    }
}

/// Applies `k_sw` forward and `k_sw` reverse steps to `n` source samples for
/// each γ. Source points and per-sample noise streams are shared across γ.
pub fn transform2d(model: &std::sync::Arc<DiffusionModel>, n: usize, gammas: &[f64], seed: u64) -> Result<TransformResult> {
    if model.state_dim() != 0 {
        return Err(Error::Dimension { expected: 0, got: model.state_dim() });
    }
    if model.action_dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: model.action_dim() });
    }
    let src = sample_source(n, &mut rng_from(seed, stream::SAMPLE));
    let actions = Array2::from_shape_fn((n, 2), |(i, j)| src[i][j]);
    let states = Array2::zeros((n, 0));
    let mut rows = Vec::with_capacity(n * gammas.len());
    let mut eps_sup: f64 = 0.0;
    let mut k_sw = Vec::new();
    for &gamma in gammas {
        let c = Copilot::new(model.clone(), CopilotConfig { gamma, denoise_at_zero: false, clamp: None })?;
        let mut rngs: Vec<Rng> = (0..n as u64).map(|i| rng_from(derive_seed(seed, i), stream::COPILOT)).collect();
        let (out, trace) = c.assist_batch(states.view(), actions.view(), &mut rngs)?;
        eps_sup = eps_sup.max(trace.max_eps_norm);
        k_sw.push(c.k_sw());
        rows.extend((0..n).map(|i| TransformRow { gamma, index: i, src: src[i], out: [out[[i, 0]], out[[i, 1]]] }));
    }
    Ok(TransformResult { rows, eps_sup, k_sw })
}
