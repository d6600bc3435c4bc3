use difcopilot_core::diffusion::{forward_diffuse, forward_step};
use difcopilot_core::rng::seeded;
use difcopilot_core::NoiseSchedule;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::common::{run, Ctx, Parts, Verdict};

const N: usize = 100_000;

pub fn check(_: &Ctx) -> Verdict {
    let started = std::time::Instant::now();
    run(|| {
        let sched = NoiseSchedule::sigmoid(50, 1e-4, 0.26)?;
        let k_max = sched.steps();
        let mut parts = Parts::default();

        // Independent recomputation of the schedule and the cumulative product.
        let mut beta_err: f64 = 0.0;
        let mut rec_err: f64 = 0.0;
        let mut prev = 1.0;
        for k in 1..=k_max {
            let l = -6.0 + 12.0 * (k - 1) as f64 / (k_max - 1) as f64;
            let beta = (0.26 - 1e-4) / (1.0 + (-l).exp()) + 1e-4;
            beta_err = beta_err.max((beta - sched.beta(k)).abs());
            rec_err = rec_err.max((sched.alpha_bar(k) - prev * (1.0 - sched.beta(k))).abs());
            prev = sched.alpha_bar(k);
        }
        parts.add(beta_err <= 1e-12 && rec_err <= 1e-12, format!("schedule err {beta_err:.1e}, recursion err {rec_err:.1e}"));

        // Iterating single steps with noises eps_j equals the closed form fed
        // with their weighted sum, renormalised to unit variance.
        let mut rng = seeded(11);
        let x0 = [0.7, -0.3];
        let mut closed_err: f64 = 0.0;
        for k_top in [1, 7, 25, 50] {
            let mut x = x0.to_vec();
            let mut combined = [0.0; 2];
            for k in 1..=k_top {
                let e: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
                x = forward_step(&x, k, &e, &sched)?;
                let w = (1.0 - sched.alpha(k)).sqrt() * (sched.alpha_bar(k_top) / sched.alpha_bar(k)).sqrt();
                for j in 0..2 {
                    combined[j] += w * e[j];
                }
            }
            let scale = (1.0 - sched.alpha_bar(k_top)).sqrt();
            let eps = [combined[0] / scale, combined[1] / scale];
            let y = forward_diffuse(&x0, k_top, &eps, &sched)?;
            for j in 0..2 {
                closed_err = closed_err.max((x[j] - y[j]).abs());
            }
        }
        parts.add(closed_err <= 1e-10, format!("closed vs iterated err {closed_err:.1e}"));

        // Moments of the iterated chain against N(sqrt(ab) x0, (1 - ab) I).
        let mut worst_z: f64 = 0.0;
        for k_top in [10, 50] {
            let ab = sched.alpha_bar(k_top);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..N {
                let mut x = vec![x0[0]];
                for k in 1..=k_top {
                    x = forward_step(&x, k, &[rng.sample(StandardNormal)], &sched)?;
                }
                s1 += x[0];
                s2 += x[0] * x[0];
            }
            let n = N as f64;
            let mean = s1 / n;
            let var = (s2 - n * mean * mean) / (n - 1.0);
            let (mu, v) = (ab.sqrt() * x0[0], 1.0 - ab);
            let z_mean = (mean - mu).abs() / (v / n).sqrt();
            let z_var = (var - v).abs() / (v * (2.0 / (n - 1.0)).sqrt());
            worst_z = worst_z.max(z_mean).max(z_var);
        }
        parts.add(worst_z <= 3.0, format!("moment |z| max {worst_z:.2} (n = {N})"));

        let end = sched.alpha_bar(k_max).sqrt();
        parts.add(end < 0.1, format!("sqrt(alpha_bar_K) = {end:.4}"));
        let secs = started.elapsed().as_secs_f64();
        parts.add(secs < 10.0, format!("{secs:.1}s < 10s"));
        Ok(parts.verdict())
    })
}
