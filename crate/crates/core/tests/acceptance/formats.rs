use std::sync::Arc;

use difcopilot_core::demos::{collect_with, CollectConfig};
use difcopilot_core::denoiser::{load_checkpoint, save_checkpoint};
use difcopilot_core::eval::sweep;
use difcopilot_core::train::train;
use difcopilot_core::{
    load_dataset, save_dataset, Config, Copilot, CopilotConfig, DiffusionModel, EnvKind, PilotSpec, SweepPlan,
};

use crate::common::{run, Ctx, Parts, Verdict};

/// Every file the pipeline writes, from one small end-to-end run.
struct Files {
    dataset: Vec<u8>,
    checkpoint: Vec<u8>,
    summary: String,
    records: String,
}

fn produce(kind: EnvKind) -> difcopilot_core::Result<Files> {
    let mut cfg = Config::for_env(kind);
    cfg.train.total_steps = 200;
    cfg.train.hidden = 32;
    cfg.train.batch = 64;
    cfg.train.keep_optimizer = true;
    let env = cfg.env(kind);
    let cc = CollectConfig::new(30, 21);
    let ds = collect_with(&env, &cfg.expert, &PilotSpec::expert(), &cc)?;
    let out = train(&ds, &cfg.train)?;
    let ck = &out.checkpoint;
    let checkpoint = save_checkpoint(&ck.params, ck.opt.as_ref(), &ck.meta)?;
    let copilot = Copilot::from_checkpoint(ck, CopilotConfig::default())?;
    let plan = SweepPlan {
        pilots: vec!["noisy:0.6".parse()?, "laggy:0.85".parse()?],
        gammas: vec![0.0, 0.4],
        episodes_per_seed: 2,
        seeds: vec![0, 1],
    };
    let report = sweep(&env, &cfg.expert, &plan, Some(&copilot))?;
    Ok(Files { dataset: save_dataset(&ds)?, checkpoint, summary: report.summary_csv(), records: report.records_csv() })
}

pub fn check(ctx: &Ctx) -> Verdict {
    run(|| {
        let mut parts = Parts::default();
        for kind in [EnvKind::PointMass2d, EnvKind::SimpleLander] {
            let (a, b) = (produce(kind)?, produce(kind)?);
            let same = a.dataset == b.dataset && a.checkpoint == b.checkpoint && a.summary == b.summary && a.records == b.records;
            parts.add(same, format!("{kind} dataset/checkpoint/report bytes identical across runs"));

            let ds = load_dataset(&a.dataset)?;
            let ds_again = save_dataset(&ds)?;
            let rows_exact = load_dataset(&ds_again)?.rows.iter().zip(&ds.rows).all(|(x, y)| x.to_bits() == y.to_bits());
            let ck = load_checkpoint(&a.checkpoint)?;
            let ck_again = save_checkpoint(&ck.params, ck.opt.as_ref(), &ck.meta)?;
            let reloaded = load_checkpoint(&ck_again)?;
            let params_exact = reloaded
                .params
                .tensors()
                .iter()
                .zip(ck.params.tensors())
                .all(|(x, y)| x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits()));
            let model_ok = DiffusionModel::from_checkpoint(&reloaded).map(Arc::new).is_ok();
            parts.add(
                ds_again == a.dataset && rows_exact && ck_again == a.checkpoint && params_exact && model_ok && reloaded.opt.is_some(),
                format!("{kind} save/load round trips bit-exact"),
            );
            ctx.write(&format!("formats_{kind}_summary.csv"), &a.summary);
        }
        Ok(parts.verdict())
    })
}
