//! Flat TOML experiment configuration.
//!
//! ```toml
//! traffic = "gpd"        # gpd | exponential | dtmc-low | dtmc-medium | dtmc-high
//! channels = 5
//! policy = "proposed"    # proposed | ots | sbla | ql | rand
//! ```
//!
//! Every other key is optional and defaults to the reference scenario; see
//! [`KEYS`]. Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::engine::SimConfig;
use crate::error::{Error, Result};
use crate::policies::PolicyId;
use crate::traffic::{DutyCycleFamily, TrafficModel};

/// Accepted keys, in documentation order.
pub const KEYS: [&str; 16] = [
    "traffic",
    "channels",
    "policy",
    "frame_ms",
    "sense_ms",
    "horizon_ms",
    "pd",
    "pf",
    "snr_db",
    "channel_error",
    "seed",
    "runs",
    "duty_cycle",
    "ql_learning_rate",
    "ql_epsilon",
    "dtmc_tick_ms",
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    traffic: Option<String>,
    channels: Option<i64>,
    policy: Option<String>,
    frame_ms: Option<f64>,
    sense_ms: Option<f64>,
    horizon_ms: Option<f64>,
    pd: Option<f64>,
    pf: Option<f64>,
    snr_db: Option<f64>,
    channel_error: Option<f64>,
    seed: Option<u64>,
    runs: Option<i64>,
    duty_cycle: Option<String>,
    ql_learning_rate: Option<f64>,
    ql_epsilon: Option<f64>,
    dtmc_tick_ms: Option<f64>,
}

fn key_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn probability(key: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(key_err(key, format!("must be a probability in [0, 1], got {v}")))
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(key_err(key, format!("must be a positive number, got {v}")))
    }
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text).map_err(|e| match e {
        Error::ConfigSyntax { message, .. } => Error::ConfigSyntax {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigSyntax {
        path: "<inline>".into(),
        message: e.to_string(),
    })?;
    let d = SimConfig::default();

    let traffic_name = raw.traffic.ok_or_else(|| key_err("traffic", "is required"))?;
    let traffic = TrafficModel::from_name(&traffic_name).ok_or_else(|| {
        key_err(
            "traffic",
            format!("unknown model `{traffic_name}`; expected gpd, exponential, dtmc-low, dtmc-medium or dtmc-high"),
        )
    })?;
    let channels = raw.channels.ok_or_else(|| key_err("channels", "is required"))?;
    if channels < 1 {
        return Err(key_err("channels", format!("must be >= 1, got {channels}")));
    }
    let policy = match raw.policy {
        None => d.policy,
        Some(p) => PolicyId::from_name(&p).ok_or_else(|| {
            key_err("policy", format!("unknown policy `{p}`; expected proposed, ots, sbla, ql or rand"))
        })?,
    };
    let duty_cycle = match raw.duty_cycle.as_deref() {
        None => d.duty_cycle,
        Some("beta") => DutyCycleFamily::Beta,
        Some("kumaraswamy") => DutyCycleFamily::Kumaraswamy,
        Some(other) => {
            return Err(key_err("duty_cycle", format!("unknown family `{other}`; expected beta or kumaraswamy")))
        }
    };
    let runs = raw.runs.unwrap_or(d.n_runs as i64);
    if runs < 1 {
        return Err(key_err("runs", format!("must be >= 1, got {runs}")));
    }

    let cfg = SimConfig {
        n_channels: channels as usize,
        frame_ms: positive("frame_ms", raw.frame_ms.unwrap_or(d.frame_ms))?,
        sense_ms: positive("sense_ms", raw.sense_ms.unwrap_or(d.sense_ms))?,
        horizon_ms: positive("horizon_ms", raw.horizon_ms.unwrap_or(d.horizon_ms))?,
        traffic,
        duty_cycle,
        pd: probability("pd", raw.pd.unwrap_or(d.pd))?,
        pf: probability("pf", raw.pf.unwrap_or(d.pf))?,
        policy,
        snr_su_db: raw.snr_db.unwrap_or(d.snr_su_db),
        channel_error_prob: probability("channel_error", raw.channel_error.unwrap_or(d.channel_error_prob))?,
        seed: raw.seed.unwrap_or(d.seed),
        n_runs: runs as usize,
        ql_learning_rate: raw.ql_learning_rate.unwrap_or(d.ql_learning_rate),
        ql_epsilon: probability("ql_epsilon", raw.ql_epsilon.unwrap_or(d.ql_epsilon))?,
        dtmc_tick_ms: raw.dtmc_tick_ms.map(|t| positive("dtmc_tick_ms", t)).transpose()?,
    };

    if cfg.sense_ms * cfg.n_channels as f64 >= cfg.frame_ms {
        return Err(key_err(
            "sense_ms",
            format!(
                "channels x sense_ms must be < frame_ms ({} x {} >= {})",
                cfg.n_channels, cfg.sense_ms, cfg.frame_ms
            ),
        ));
    }
    if cfg.pf > cfg.pd {
        return Err(key_err("pf", format!("must not exceed pd ({} > {})", cfg.pf, cfg.pd)));
    }
    let frames = cfg.horizon_ms / cfg.frame_ms;
    if (frames - frames.round()).abs() > 1e-9 {
        return Err(key_err(
            "horizon_ms",
            format!("must be a multiple of frame_ms ({} / {})", cfg.horizon_ms, cfg.frame_ms),
        ));
    }
    if !(cfg.ql_learning_rate > 0.0 && cfg.ql_learning_rate <= 1.0) {
        return Err(key_err("ql_learning_rate", format!("must be in (0, 1], got {}", cfg.ql_learning_rate)));
    }
    if !cfg.snr_su_db.is_finite() {
        return Err(key_err("snr_db", "must be finite"));
    }
    cfg.validate()?;
    Ok(cfg)
}
