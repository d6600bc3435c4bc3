use std::collections::HashSet;

use difcopilot_core::eval::sweep;
use difcopilot_core::{Config, EnvKind, OutcomeLabel, SweepPlan};

use crate::common::{run, Ctx, Parts, Verdict};

/// One unassisted lander cell under the 10 episodes x 30 seeds protocol; the
/// reported mean ± std is recomputed from the raw records.
pub fn check(ctx: &Ctx) -> Verdict {
    run(|| {
        let cfg = Config::for_env(EnvKind::SimpleLander);
        let env = cfg.env(EnvKind::SimpleLander);
        let plan = SweepPlan {
            pilots: vec!["noisy:0.6".parse()?],
            gammas: vec![0.0],
            episodes_per_seed: 10,
            seeds: (0..30).collect(),
        };
        let report = sweep(&env, &cfg.expert, &plan, None)?;
        ctx.write("eval_protocol_summary.csv", report.summary_csv());
        let mut parts = Parts::default();
        let cell = &report.cells[0];
        let distinct: HashSet<u64> = report.records.iter().map(|r| r.seed).collect();
        parts.add(
            report.records.len() == 300 && cell.episodes == 300 && cell.groups == 30 && distinct.len() == 300,
            format!("{} records, {} groups, {} distinct episode seeds", report.records.len(), cell.groups, distinct.len()),
        );

        let rates: Vec<f64> = report
            .records
            .chunks(10)
            .map(|g| g.iter().filter(|r| r.outcome == OutcomeLabel::Success).count() as f64 / 10.0)
            .collect();
        let mean = rates.iter().sum::<f64>() / 30.0;
        let std = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 29.0).sqrt();
        let agree = (mean - cell.success.mean).abs() < 1e-12 && (std - cell.success.std).abs() < 1e-12;
        parts.add(agree, format!("success {:.3} ± {:.3} over seed groups", cell.success.mean, cell.success.std));

        let row = report.summary_csv().lines().nth(1).unwrap_or_default().to_string();
        let fields: Vec<&str> = row.split(',').collect();
        parts.add(fields.get(3) == Some(&"300") && fields.get(4) == Some(&"30"), "summary row lists 300 episodes in 30 groups");
        Ok(parts.verdict())
    })
}
