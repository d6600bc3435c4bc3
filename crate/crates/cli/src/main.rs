use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use difcopilot_core::config::Config;
use difcopilot_core::demos::CollectConfig;
use difcopilot_core::denoiser::{load_checkpoint, save_checkpoint};
use difcopilot_core::eval::{self, SweepPlan};
use difcopilot_core::{load_dataset, save_dataset, train::train_with, Copilot, DiffusionModel, EnvKind, PilotSpec};
use difcopilot_service::SessionSetup;

#[derive(Parser)]
#[command(name = "difcopilot", version, about = "Diffusion copilot for shared autonomy")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct ConfigArg {
    /// Flat `key = value` file applied over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self, env: Option<EnvKind>) -> Result<Config> {
        let base = env.map(Config::for_env).unwrap_or_default();
        match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(base.apply(&text)?)
            }
            None => Ok(base),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Roll out a pilot and store its successful episodes as a dataset.
    CollectDemos {
        #[arg(long)]
        env: EnvKind,
        #[arg(long)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "expert")]
        pilot: PilotSpec,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Train a denoiser checkpoint on a dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the `step,loss` log.
        #[arg(long)]
        loss_csv: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Sweep (pilot × γ) cells and write the summary table.
    Eval {
        #[arg(long)]
        env: EnvKind,
        /// Omit to evaluate unassisted pilots only (all γ must be 0).
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Comma-separated, e.g. `noisy:0.6,laggy:0.85,expert`.
        #[arg(long, value_delimiter = ',')]
        pilots: Vec<PilotSpec>,
        #[arg(long, value_delimiter = ',')]
        gammas: Vec<f64>,
        /// Episodes per seed group.
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Seed groups: comma list and/or ranges like `0..30`.
        #[arg(long, default_value = "0..30")]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        /// Per-episode CSV.
        #[arg(long)]
        records: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Partial diffusion of triangle-outline samples under a 2D model.
    Transform2d {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.4,0.6,0.8,1")]
        gammas: Vec<f64>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a dataset of samples from the tri-modal 2D target.
    Synth2d {
        #[arg(long, default_value_t = 30_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve human-piloting sessions on `ws://<host>:<port>/session`.
    Serve {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        env: EnvKind,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 20.0)]
        tick_hz: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Print every configuration key with its default value.
    ShowConfig {
        #[arg(long)]
        env: Option<EnvKind>,
        #[command(flatten)]
        config: ConfigArg,
    },
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
            if a >= b {
                bail!("empty seed range '{part}'");
            }
            out.extend(a..b);
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        bail!("no seeds given");
    }
    Ok(out)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::CollectDemos { env, episodes, seed, pilot, out, config } => {
            let cfg = config.load(Some(env))?;
            let spec = cfg.env(env);
            let cc = CollectConfig::from_settings(episodes, seed, &cfg.collect);
            let ds = difcopilot_core::demos::collect_with(&spec, &cfg.expert, &pilot, &cc)?;
            write(&out, save_dataset(&ds)?)?;
            eprintln!(
                "kept {} of {} episodes, {} transitions -> {}",
                ds.header.episodes.len(),
                episodes,
                ds.len(),
                out.display()
            );
        }
        Cmd::Train { data, out, loss_csv, config } => {
            let ds = load_dataset(&read(&data)?)?;
            let cfg = config.load(ds.header.env)?;
            let started = Instant::now();
            let total = cfg.train.total_steps;
            let trained = train_with(&ds, &cfg.train, |step, loss| {
                eprintln!("step {step:>7}/{total} loss {loss:.5} ({:.0}s)", started.elapsed().as_secs_f64());
            })?;
            let ck = &trained.checkpoint;
            write(&out, save_checkpoint(&ck.params, ck.opt.as_ref(), &ck.meta)?)?;
            if let Some(p) = loss_csv {
                write(&p, trained.loss_csv(cfg.train.eval_interval))?;
            }
            eprintln!("wrote {} after {:.0}s", out.display(), started.elapsed().as_secs_f64());
        }
        Cmd::Eval { env, ckpt, pilots, gammas, episodes, seeds, out, records, config } => {
            if pilots.is_empty() || gammas.is_empty() {
                bail!("--pilots and --gammas must be non-empty");
            }
            let cfg = config.load(Some(env))?;
            let spec = cfg.env(env);
            let copilot = match ckpt {
                Some(p) => Some(Copilot::from_checkpoint(&load_checkpoint(&read(&p)?)?, cfg.copilot)?),
                None => None,
            };
            let plan = SweepPlan { pilots, gammas, episodes_per_seed: episodes, seeds: parse_seeds(&seeds)? };
            let report = eval::sweep_with(&spec, &cfg.expert, &plan, copilot.as_ref(), |c| {
                eprintln!(
                    "{:<12} gamma {:<4} success {:.3}±{:.3} crash/oob {:.3} timeout {:.3}",
                    c.pilot, c.gamma, c.success.mean, c.success.std, c.crash_oob.mean, c.timeout.mean
                );
            })?;
            write(&out, report.summary_csv())?;
            if let Some(p) = records {
                write(&p, report.records_csv())?;
            }
        }
        Cmd::Transform2d { ckpt, gammas, samples, seed, out } => {
            let model = Arc::new(DiffusionModel::from_checkpoint(&load_checkpoint(&read(&ckpt)?)?)?);
            let res = eval::transform2d(&model, samples, &gammas, seed)?;
            for &g in &gammas {
                eprintln!("gamma {g:<4} mean squared displacement {:.4}", res.mean_displacement(g));
            }
            write(&out, res.csv())?;
        }
        Cmd::Synth2d { samples, seed, out } => {
            write(&out, save_dataset(&eval::synth2d_dataset(samples, seed)?)?)?;
        }
        Cmd::Serve { ckpt, env, port, host, tick_hz, config } => {
            let cfg = config.load(Some(env))?;
            let model = Arc::new(DiffusionModel::from_checkpoint(&load_checkpoint(&read(&ckpt)?)?)?);
            if let Some(trained) = model.env() {
                if trained != env.as_str() {
                    bail!("checkpoint was trained for {trained}, not {env}");
                }
            }
            if !(tick_hz > 0.0) {
                bail!("--tick-hz must be positive");
            }
            let setup = Arc::new(SessionSetup { env: cfg.env(env), model, copilot: cfg.copilot, gains: cfg.expert, tick_hz });
            tracing_subscriber::fmt().with_writer(std::io::stderr).init();
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port)).await?;
                eprintln!("serving ws://{}/session", listener.local_addr()?);
                difcopilot_service::serve(listener, setup).await
            })?;
        }
        Cmd::ShowConfig { env, config } => {
            print!("{}", config.load(env)?.to_text());
        }
    }
    Ok(())
}
