use serde::{Deserialize, Serialize};

use super::EpisodeRecord;
use crate::env::{EnvKind, OutcomeLabel};

/// `%g`-style formatting with 6 significant digits.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..6).contains(&exp) {
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        return format!("{mant}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let fixed = format!("{x:.*}", (5 - exp) as usize);
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (zero with a single group).
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub pilot: String,
    pub gamma: f64,
    pub episodes: usize,
    pub groups: usize,
    pub success: MeanStd,
    /// Crash and out-of-bounds together.
    pub crash_oob: MeanStd,
    pub timeout: MeanStd,
    pub wrong_goal: MeanStd,
    pub mean_displacement: f64,
}

impl CellStats {
    /// Rates per consecutive group of `group_size` records, then mean ± std
    /// over groups.
    pub fn from_records(pilot: String, gamma: f64, recs: &[EpisodeRecord], group_size: usize) -> Self {
        let rate = |pred: &dyn Fn(OutcomeLabel) -> bool| {
            let per_group: Vec<f64> = recs
                .chunks(group_size.max(1))
                .map(|g| g.iter().filter(|r| pred(r.outcome)).count() as f64 / g.len() as f64)
                .collect();
            MeanStd::of(&per_group)
        };
        let n = recs.len().max(1) as f64;
        Self {
            pilot,
            gamma,
            episodes: recs.len(),
            groups: recs.len().div_ceil(group_size.max(1)),
            success: rate(&|l| l == OutcomeLabel::Success),
            crash_oob: rate(&|l| matches!(l, OutcomeLabel::Crash | OutcomeLabel::OutOfBounds)),
            timeout: rate(&|l| l == OutcomeLabel::TimeoutFloat),
            wrong_goal: rate(&|l| l == OutcomeLabel::WrongGoal),
            mean_displacement: recs.iter().map(|r| r.mean_displacement).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub env: EnvKind,
    pub pilots: Vec<String>,
    pub gammas: Vec<f64>,
    pub episodes_per_seed: usize,
    pub seeds: Vec<u64>,
    /// Pilot-major, γ-minor in input order.
    pub cells: Vec<CellStats>,
    /// Same order as `cells`, then seed group, then episode.
    pub records: Vec<EpisodeRecord>,
}

pub const SUMMARY_HEADER: &str = "env,pilot,gamma,episodes,groups,success_mean,success_std,crash_oob_mean,crash_oob_std,\
timeout_mean,timeout_std,wrong_goal_mean,wrong_goal_std,mean_displacement";

pub const RECORDS_HEADER: &str =
    "env,pilot,gamma,group,episode,seed,outcome,length,goal,settled_goal,mean_displacement,max_displacement";

impl SweepReport {
    pub fn cell(&self, pilot: &str, gamma: f64) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.pilot == pilot && c.gamma == gamma)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_HEADER}\n");
        for c in &self.cells {
            let f = [
                c.success.mean,
                c.success.std,
                c.crash_oob.mean,
                c.crash_oob.std,
                c.timeout.mean,
                c.timeout.std,
                c.wrong_goal.mean,
                c.wrong_goal.std,
                c.mean_displacement,
            ]
            .map(fmt_g)
            .join(",");
            out.push_str(&format!("{},{},{},{},{},{f}\n", self.env, c.pilot, fmt_g(c.gamma), c.episodes, c.groups));
        }
        out
    }

    pub fn records_csv(&self) -> String {
        let mut out = format!("{RECORDS_HEADER}\n");
        let per_cell = self.episodes_per_seed * self.seeds.len();
        let opt = |v: Option<usize>| v.map(|g| g.to_string()).unwrap_or_default();
        for (i, r) in self.records.iter().enumerate() {
            let within = i % per_cell.max(1);
            let (group, episode) = (self.seeds[within / self.episodes_per_seed], within % self.episodes_per_seed);
            out.push_str(&format!(
                "{},{},{},{group},{episode},{},{},{},{},{},{},{}\n",
                r.env,
                r.pilot,
                r.gamma.map(fmt_g).unwrap_or_default(),
                r.seed,
                r.outcome,
                r.length,
                opt(r.goal_index),
                opt(r.settled_goal),
                fmt_g(r.mean_displacement),
                fmt_g(r.max_displacement),
            ));
        }
        out
    }
}
