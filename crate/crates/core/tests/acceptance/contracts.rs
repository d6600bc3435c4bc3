use difcopilot_core::rng::{rng_from, seeded, stream, Rng as ChaCha};
use difcopilot_core::{Copilot, CopilotConfig};
use ndarray::Array2;
use rand::Rng;

use crate::common::{run, Ctx, Parts, Verdict};

const CALLS: usize = 10_000;

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn check(ctx: &Ctx) -> Verdict {
    let trained = match ctx.point_mass() {
        Ok(t) => t,
        Err(e) => return Verdict { pass: false, detail: format!("point-mass model unavailable: {e}") },
    };
    run(|| {
        let ds = &trained.dataset;
        let model = trained.model.clone();
        let ad = model.action_dim();
        let mut draw = seeded(5);
        let states: Vec<&[f64]> = (0..CALLS).map(|_| ds.state(draw.random_range(0..ds.len()))).collect();
        let pilot: Vec<Vec<f64>> = (0..CALLS).map(|_| (0..ad).map(|_| draw.random_range(-1.0..=1.0)).collect()).collect();
        let mut parts = Parts::default();

        let c0 = Copilot::new(model.clone(), CopilotConfig::with_gamma(0.0))?;
        let mut identical = 0;
        let mut untouched = 0;
        for (i, (s, a)) in states.iter().zip(&pilot).enumerate() {
            let mut rng = rng_from(i as u64, stream::COPILOT);
            let before = rng.clone();
            let (out, trace) = c0.assist_traced(s, a, &mut rng)?;
            identical += usize::from(out.iter().zip(a).all(|(x, y)| x.to_bits() == y.to_bits()));
            untouched += usize::from(rng == before && trace.reverse_steps == 0);
        }
        parts.add(identical == CALLS && untouched == CALLS, format!("gamma 0 identity {identical}/{CALLS}, no randomness used {untouched}/{CALLS}"));

        let c4 = Copilot::new(model.clone(), CopilotConfig::with_gamma(0.4))?;
        let mut steps = Vec::new();
        for (i, (s, a)) in states.iter().zip(&pilot).take(200).enumerate() {
            let (_, trace) = c4.assist_traced(s, a, &mut rng_from(i as u64, stream::COPILOT))?;
            steps.push(trace.reverse_steps);
        }
        let all20 = steps.iter().all(|&n| n == 20);
        parts.add(all20 && c4.k_sw() == 20, format!("gamma 0.4 k_sw {} with {} reverse steps per call", c4.k_sw(), steps[0]));

        let c1 = Copilot::new(model.clone(), CopilotConfig::with_gamma(1.0))?;
        let sd = model.state_dim();
        let s_mat = Array2::from_shape_fn((CALLS, sd), |(i, j)| states[i][j]);
        let a_mat = Array2::from_shape_fn((CALLS, ad), |(i, j)| pilot[i][j]);
        let mut rngs: Vec<ChaCha> = (0..CALLS as u64).map(|i| rng_from(i, stream::COPILOT)).collect();
        let (out, _) = c1.assist_batch(s_mat.view(), a_mat.view(), &mut rngs)?;
        let mut worst: f64 = 0.0;
        for i in 0..ad {
            for j in 0..ad {
                let r = pearson(&a_mat.column(i).to_vec(), &out.column(j).to_vec());
                worst = worst.max(r.abs());
            }
        }
        parts.add(worst <= 0.1, format!("gamma 1 max |corr(pilot, shared)| {worst:.4} over {CALLS} calls"));
        Ok(parts.verdict())
    })
}
