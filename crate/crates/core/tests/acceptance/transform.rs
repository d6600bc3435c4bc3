use std::sync::Arc;
use std::time::Instant;

use difcopilot_core::diffusion::displacement_bound;
use difcopilot_core::eval::{nearest_mode_dist2, synth2d_dataset, transform2d, MODE_SIGMA};
use difcopilot_core::train::train;
use difcopilot_core::{DiffusionModel, TrainConfig};

use crate::common::{run, Ctx, Parts, Verdict};

pub const TRAIN_SAMPLES: usize = 20_000;
pub const TRAIN_STEPS: usize = 20_000;
const SAMPLES: usize = 2000;
const GAMMAS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
const DELTA: f64 = 0.05;

pub fn check(ctx: &Ctx) -> Verdict {
    let started = Instant::now();
    run(|| {
        let ds = synth2d_dataset(TRAIN_SAMPLES, 3)?;
        let cfg = TrainConfig { total_steps: TRAIN_STEPS, seed: 3, ..TrainConfig::default() };
        let out = train(&ds, &cfg)?;
        let train_secs = started.elapsed().as_secs_f64();
        let model = Arc::new(DiffusionModel::from_checkpoint(&out.checkpoint)?);
        let res = transform2d(&model, SAMPLES, &GAMMAS, 4)?;
        ctx.write("transform2d.csv", res.csv());
        let mut parts = Parts::default();
        parts.add(train_secs <= 300.0, format!("training {train_secs:.0}s"));

        let identity = res.rows_for(0.0).all(|r| r.out[0].to_bits() == r.src[0].to_bits() && r.out[1].to_bits() == r.src[1].to_bits());
        parts.add(identity, "gamma 0 identity");

        let r3 = 3.0 * MODE_SIGMA;
        let near = res.rows_for(1.0).filter(|r| nearest_mode_dist2(r.out) <= r3 * r3).count();
        let frac = near as f64 / SAMPLES as f64;
        parts.add(frac >= 0.9, format!("gamma 1 within 3 sigma of a mode {frac:.3}"));

        let msd: Vec<f64> = [0.2, 0.6, 1.0].iter().map(|&g| res.mean_displacement(g)).collect();
        parts.add(msd[0] < msd[1] && msd[1] < msd[2], format!("msd {:.4} < {:.4} < {:.4}", msd[0], msd[1], msd[2]));

        let mut worst: f64 = 0.0;
        let mut per: Vec<String> = Vec::new();
        for (&g, &k_sw) in GAMMAS.iter().zip(&res.k_sw) {
            if k_sw == 0 {
                continue;
            }
            let bound = displacement_bound(k_sw, res.eps_sup, 2, DELTA, model.schedule())?;
            let over = res.rows_for(g).filter(|r| r.displacement() > bound).count();
            let rate = over as f64 / SAMPLES as f64;
            worst = worst.max(rate);
            per.push(format!("{g}: {rate:.3}"));
        }
        parts.add(worst <= DELTA, format!("bound violation rate (K = {:.2}) {}", res.eps_sup, per.join(", ")));
        Ok(parts.verdict())
    })
}
