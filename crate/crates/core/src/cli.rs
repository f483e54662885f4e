//! Experiment commands behind the `skipsense` binary.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::parse_config;
use crate::engine::{run_experiment, SimConfig};
use crate::error::{invalid, Error, Result};
use crate::policies::PolicyId;
use crate::reporting::{write_series_csv, write_summary_csv, SummaryRow};

pub const DEFAULT_SWEEP: [usize; 7] = [4, 5, 6, 7, 8, 9, 10];
pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Compare,
    SweepChannels,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub command: Command,
    pub config: PathBuf,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub channels: Option<Vec<usize>>,
}

impl ExperimentSpec {
    /// Parses the config file and applies command-line overrides.
    pub fn load_config(&self) -> Result<SimConfig> {
        let mut cfg = parse_config(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(runs) = self.runs {
            cfg.n_runs = runs;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn series_file_name(policy: PolicyId) -> String {
    format!("series_{}.csv", policy.name())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Runs `policies` on `cfg` and writes one series file per policy plus a summary.
fn compare_into(cfg: &SimConfig, policies: &[PolicyId], out_dir: &Path) -> Result<Vec<SummaryRow>> {
    ensure_dir(out_dir)?;
    let mut rows = Vec::with_capacity(policies.len());
    for &p in policies {
        let exp = run_experiment(&cfg.with_policy(p))?;
        write_series_csv(&exp.mean, &out_dir.join(series_file_name(p)))?;
        rows.push(SummaryRow::from_experiment(&exp)?);
    }
    write_summary_csv(&rows, &out_dir.join(SUMMARY_FILE))?;
    Ok(rows)
}

/// Runs the configured policy only.
pub fn cmd_run(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>> {
    let cfg = spec.load_config()?;
    compare_into(&cfg, &[cfg.policy], &spec.out_dir)
}

/// Runs all five policies on the same traffic realizations.
pub fn cmd_compare(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>> {
    let cfg = spec.load_config()?;
    compare_into(&cfg, &PolicyId::ALL, &spec.out_dir)
}

/// One comparison per channel count, each in `ch<N>/`, plus a combined summary.
pub fn cmd_sweep_channels(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>> {
    let base = spec.load_config()?;
    let counts = spec.channels.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
    if counts.is_empty() {
        return Err(invalid("channel sweep list is empty"));
    }
    ensure_dir(&spec.out_dir)?;
    let mut rows = Vec::new();
    for n in counts {
        let cfg = SimConfig {
            n_channels: n,
            ..base.clone()
        };
        cfg.validate()?;
        rows.extend(compare_into(&cfg, &PolicyId::ALL, &spec.out_dir.join(format!("ch{n}")))?);
    }
    write_summary_csv(&rows, &spec.out_dir.join(SUMMARY_FILE))?;
    Ok(rows)
}

pub fn execute(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>> {
    match spec.command {
        Command::Run => cmd_run(spec),
        Command::Compare => cmd_compare(spec),
        Command::SweepChannels => cmd_sweep_channels(spec),
    }
}

/// Parses `4,6,8` or `4..10` (inclusive) or a mix such as `4..6,9`.
pub fn parse_channel_list(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| invalid(format!("bad channel count `{t}` in `{s}`")))
        };
        match part.split_once("..") {
            Some((lo, hi)) => {
                let (lo, hi) = (num(lo)?, num(hi)?);
                if lo > hi {
                    return Err(invalid(format!("empty channel range `{part}`")));
                }
                out.extend(lo..=hi);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err(invalid(format!("channel list `{s}` must name counts >= 1")));
    }
    Ok(out)
}
