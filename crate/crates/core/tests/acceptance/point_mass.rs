use difcopilot_core::eval::sweep_with;
use difcopilot_core::{Config, Copilot, CopilotConfig, EnvKind, EnvSpec, PilotSpec, SweepPlan, SweepReport};

use crate::common::{run, Ctx, Parts, Verdict};

pub const SURROGATES: [&str; 2] = ["noisy:0.6", "laggy:0.85"];
const ALL_KINDS: [&str; 5] = ["expert", "noisy:0.6", "laggy:0.85", "zero", "random"];

pub fn plan(pilots: &[&str], gammas: &[f64]) -> difcopilot_core::Result<SweepPlan> {
    Ok(SweepPlan {
        pilots: pilots.iter().map(|p| p.parse::<PilotSpec>()).collect::<Result<_, _>>()?,
        gammas: gammas.to_vec(),
        episodes_per_seed: 10,
        seeds: (0..30).collect(),
    })
}

pub fn logged_sweep(env: &EnvSpec, cfg: &Config, plan: &SweepPlan, c: &Copilot) -> difcopilot_core::Result<SweepReport> {
    sweep_with(env, &cfg.expert, plan, Some(c), |cell| {
        eprintln!(
            "  {} {:<11} gamma {:<4} success {:.3} ± {:.3} crash/oob {:.3}",
            env.kind(),
            cell.pilot,
            cell.gamma,
            cell.success.mean,
            cell.success.std,
            cell.crash_oob.mean
        )
    })
}

fn success(r: &SweepReport, pilot: &str, gamma: f64) -> f64 {
    r.cell(pilot, gamma).map_or(f64::NAN, |c| c.success.mean)
}

pub fn check(ctx: &Ctx) -> Verdict {
    let trained = match ctx.point_mass() {
        Ok(t) => t,
        Err(e) => return Verdict { pass: false, detail: format!("training failed: {e}") },
    };
    run(|| {
        let cfg = Config::for_env(EnvKind::PointMass2d);
        let env = cfg.env(EnvKind::PointMass2d);
        let copilot = Copilot::new(trained.model.clone(), CopilotConfig::default())?;
        let mut parts = Parts::default();
        let build = trained.collect_secs + trained.train_secs;
        parts.add(build <= 900.0, format!("demos + training {build:.0}s"));

        let curve = logged_sweep(&env, &cfg, &plan(&SURROGATES, &[0.0, 0.2, 0.4])?, &copilot)?;
        ctx.write("point_mass_curve.csv", curve.summary_csv());
        for p in SURROGATES {
            let base = success(&curve, p, 0.0);
            let (best_g, best) =
                [0.2, 0.4].into_iter().map(|g| (g, success(&curve, p, g))).fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
            parts.add(best - base >= 0.15, format!("{p} {base:.3} -> {best:.3} at gamma {best_g}"));
        }

        let mut left_cfg = cfg.clone();
        left_cfg.point_mass.fixed_goal = Some(0);
        let left_env = left_cfg.env(EnvKind::PointMass2d);
        let full = logged_sweep(&left_env, &left_cfg, &plan(&ALL_KINDS, &[1.0])?, &copilot)?;
        ctx.write("point_mass_full_diffusion.csv", full.summary_csv());
        ctx.write("point_mass_full_diffusion_records.csv", full.records_csv());
        let left = full.records.iter().filter(|r| r.settled_goal == Some(0)).count();
        let right = full.records.iter().filter(|r| r.settled_goal == Some(1)).count();
        let split = left as f64 / (left + right).max(1) as f64;
        parts.add((split - 0.5).abs() <= 0.1, format!("gamma 1 left share {split:.3} ({left} left, {right} right)"));
        let rates: Vec<f64> = ALL_KINDS.iter().map(|p| success(&full, p, 1.0)).collect();
        let spread = rates.iter().copied().fold(f64::MIN, f64::max) - rates.iter().copied().fold(f64::MAX, f64::min);
        let listed: Vec<String> = ALL_KINDS.iter().zip(&rates).map(|(p, r)| format!("{p} {r:.3}")).collect();
        parts.add(spread <= 0.1, format!("gamma 1 success spread {spread:.3} ({})", listed.join(", ")));
        Ok(parts.verdict())
    })
}
