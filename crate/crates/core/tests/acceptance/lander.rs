use std::time::Instant;

use difcopilot_core::{Config, Copilot, CopilotConfig, EnvKind, SweepReport};

use crate::common::{pipeline, run, Ctx, Parts, Verdict, LANDER_EPISODES};
use crate::point_mass::{logged_sweep, plan, SURROGATES};

const GAMMAS: [f64; 5] = [0.0, 0.2, 0.4, 0.6, 1.0];

fn cell(r: &SweepReport, pilot: &str, gamma: f64) -> (f64, f64) {
    r.cell(pilot, gamma).map_or((f64::NAN, f64::NAN), |c| (c.success.mean, c.crash_oob.mean))
}

pub fn check(ctx: &Ctx) -> Verdict {
    let started = Instant::now();
    run(|| {
        let trained = pipeline(ctx, EnvKind::SimpleLander, LANDER_EPISODES, "lander")?;
        let cfg = Config::for_env(EnvKind::SimpleLander);
        let env = cfg.env(EnvKind::SimpleLander);
        let copilot = Copilot::new(trained.model.clone(), CopilotConfig::default())?;
        let report = logged_sweep(&env, &cfg, &plan(&SURROGATES, &GAMMAS)?, &copilot)?;
        ctx.write("lander_curve.csv", report.summary_csv());
        let mut parts = Parts::default();
        for p in SURROGATES {
            let (s0, c0) = cell(&report, p, 0.0);
            // Best γ: highest success among assisted settings, the smaller γ on ties.
            let (best_g, (_, best_crash)) = GAMMAS[1..]
                .iter()
                .map(|&g| (g, cell(&report, p, g)))
                .fold((f64::NAN, (f64::MIN, f64::NAN)), |a, b| if b.1 .0 > a.1 .0 { b } else { a });
            parts.add(best_crash <= 0.5 * c0, format!("{p} crash/oob {c0:.3} -> {best_crash:.3} at gamma {best_g}"));
            let (s1, _) = cell(&report, p, 1.0);
            let peak = [0.2, 0.4, 0.6].iter().map(|&g| cell(&report, p, g).0).fold(f64::MIN, f64::max);
            parts.add(peak > s0 && peak > s1, format!("{p} success {s0:.3} / peak {peak:.3} / {s1:.3} at gamma 0 / mid / 1"));
        }
        let secs = started.elapsed().as_secs_f64();
        parts.add(secs <= 45.0 * 60.0, format!("{:.1} min", secs / 60.0));
        Ok(parts.verdict())
    })
}
