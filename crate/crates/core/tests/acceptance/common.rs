use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use difcopilot_core::demos::{collect_with, CollectConfig};
use difcopilot_core::denoiser::save_checkpoint;
use difcopilot_core::train::train_with;
use difcopilot_core::{save_dataset, Config, Dataset, DiffusionModel, EnvKind, PilotSpec};

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

/// Accumulates named sub-checks; the criterion passes only if all do.
#[derive(Default)]
pub struct Parts {
    items: Vec<(bool, String)>,
}

impl Parts {
    pub fn add(&mut self, pass: bool, detail: impl Into<String>) {
        self.items.push((pass, detail.into()));
    }

    pub fn verdict(self) -> Verdict {
        let pass = !self.items.is_empty() && self.items.iter().all(|(p, _)| *p);
        let detail = self
            .items
            .iter()
            .map(|(p, d)| if *p { d.clone() } else { format!("{d} (failed)") })
            .collect::<Vec<_>>()
            .join("; ");
        Verdict { pass, detail }
    }
}

impl From<difcopilot_core::Error> for Verdict {
    fn from(e: difcopilot_core::Error) -> Self {
        Verdict { pass: false, detail: format!("error: {e}") }
    }
}

/// Runs a fallible check body, turning errors into a failing verdict.
pub fn run(body: impl FnOnce() -> difcopilot_core::Result<Verdict>) -> Verdict {
    body().unwrap_or_else(Verdict::from)
}

pub struct Trained {
    pub dataset: Dataset,
    pub model: Arc<DiffusionModel>,
    pub train_secs: f64,
    pub collect_secs: f64,
}

pub struct Ctx {
    pub dir: PathBuf,
    point_mass: OnceLock<difcopilot_core::Result<Trained>>,
}

impl Ctx {
    pub fn new() -> Self {
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
        fs::create_dir_all(&dir).expect("artifact directory");
        Self { dir, point_mass: OnceLock::new() }
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) {
        let path = self.dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            eprintln!("could not write {}: {e}", path.display());
        }
    }

    /// Point-mass model from expert demos under default settings, trained once
    /// and shared by every criterion that needs it.
    pub fn point_mass(&self) -> Result<&Trained, String> {
        self.point_mass
            .get_or_init(|| pipeline(self, EnvKind::PointMass2d, POINT_MASS_EPISODES, "point_mass"))
            .as_ref()
            .map_err(|e| e.to_string())
    }
}

pub const POINT_MASS_EPISODES: usize = 1100;
pub const LANDER_EPISODES: usize = 400;
pub const DEMO_SEED: u64 = 1;

/// Collects expert demonstrations and trains on them with the default config.
pub fn pipeline(ctx: &Ctx, kind: EnvKind, episodes: usize, tag: &str) -> difcopilot_core::Result<Trained> {
    let cfg = Config::for_env(kind);
    let env = cfg.env(kind);
    let cc = CollectConfig::from_settings(episodes, DEMO_SEED, &cfg.collect);
    let t0 = std::time::Instant::now();
    let dataset = collect_with(&env, &cfg.expert, &PilotSpec::expert(), &cc)?;
    let collect_secs = t0.elapsed().as_secs_f64();
    ctx.write(&format!("{tag}.demo"), save_dataset(&dataset)?);
    let t1 = std::time::Instant::now();
    let out = train_with(&dataset, &cfg.train, |step, loss| eprintln!("  {tag} train step {step} loss {loss:.5}"))?;
    let train_secs = t1.elapsed().as_secs_f64();
    let ck = &out.checkpoint;
    ctx.write(&format!("{tag}.ckpt"), save_checkpoint(&ck.params, ck.opt.as_ref(), &ck.meta)?);
    ctx.write(&format!("{tag}_loss.csv"), out.loss_csv(cfg.train.eval_interval));
    let model = Arc::new(DiffusionModel::from_checkpoint(ck)?);
    Ok(Trained { dataset, model, train_secs, collect_secs })
}
