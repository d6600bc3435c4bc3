use difcopilot_core::rng::seeded;
use difcopilot_core::{DenoiserParams, NoiseSchedule};
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::common::{run, Ctx, Parts, Verdict};

const H: f64 = 1e-5;
const NAMES: [&str; 9] = ["w1", "b1", "w2", "b2", "w3", "b3", "w4", "b4", "emb"];

fn norm(xs: impl Iterator<Item = f64>) -> f64 {
    xs.map(|x| x * x).sum::<f64>().sqrt()
}

/// Central differences on every parameter against the analytic gradient.
/// The error of a tensor is `‖g - g_fd‖ / max(‖g‖, ‖g_fd‖)`.
pub fn check(_: &Ctx) -> Verdict {
    let started = std::time::Instant::now();
    run(|| {
        let sched = NoiseSchedule::sigmoid(50, 1e-4, 0.26)?;
        let (sd, ad) = (4, 2);
        let mut worst = vec![0.0f64; NAMES.len()];
        for batch_seed in 0..3u64 {
            let mut rng = seeded(100 + batch_seed);
            let mut p = DenoiserParams::init(sd, ad, 16, sched.steps(), 7 + batch_seed);
            // Perturbed away from the init so zero biases do not hide errors.
            for t in p.tensors_mut() {
                for v in t.iter_mut() {
                    *v += 0.3 * rng.sample::<f64, _>(StandardNormal);
                }
            }
            let states = Array2::from_shape_fn((3, sd), |_| rng.sample(StandardNormal));
            let actions = Array2::from_shape_fn((3, ad), |_| rng.random_range(-1.0..1.0));
            let eps = Array2::from_shape_fn((3, ad), |_| rng.sample(StandardNormal));
            let ks: Vec<usize> = (0..3).map(|_| rng.random_range(1..=sched.steps())).collect();
            let loss = |q: &DenoiserParams| {
                q.loss_and_grad_with(states.view(), actions.view(), &ks, eps.view(), &sched).map(|(l, _)| l)
            };
            let (_, grads) = p.loss_and_grad_with(states.view(), actions.view(), &ks, eps.view(), &sched)?;
            let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
            for (ti, g) in analytic.iter().enumerate() {
                let mut fd = vec![0.0; g.len()];
                for (i, slot) in fd.iter_mut().enumerate() {
                    let orig = p.tensors()[ti][i];
                    p.tensors_mut()[ti][i] = orig + H;
                    let up = loss(&p)?;
                    p.tensors_mut()[ti][i] = orig - H;
                    let down = loss(&p)?;
                    p.tensors_mut()[ti][i] = orig;
                    *slot = (up - down) / (2.0 * H);
                }
                let diff = norm(g.iter().zip(&fd).map(|(a, b)| a - b));
                let scale = norm(g.iter().copied()).max(norm(fd.iter().copied()));
                let rel = if scale == 0.0 { 0.0 } else { diff / scale };
                worst[ti] = worst[ti].max(rel);
            }
        }
        let mut parts = Parts::default();
        let max = worst.iter().copied().fold(0.0, f64::max);
        let list: Vec<String> = NAMES.iter().zip(&worst).map(|(n, e)| format!("{n} {e:.1e}")).collect();
        parts.add(max <= 1e-4, format!("max relative error {max:.1e} over 3 batches of 3 ({})", list.join(", ")));
        let secs = started.elapsed().as_secs_f64();
        parts.add(secs < 30.0, format!("{secs:.1}s < 30s"));
        Ok(parts.verdict())
    })
}
