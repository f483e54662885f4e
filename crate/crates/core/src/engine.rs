//! Frame-by-frame simulation loop and Monte-Carlo aggregation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::policies::{PolicyId, RankedList, Selector, DEFAULT_EPSILON, DEFAULT_LEARNING_RATE};
use crate::sensing::{Confusion, DetectorSpec};
use crate::skipper::{Mode, SkipperState};
use crate::traffic::{build_timeline, ChannelTimeline, DutyCycleFamily, TrafficModel};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_channels: usize,
    pub frame_ms: f64,
    pub sense_ms: f64,
    pub horizon_ms: f64,
    pub traffic: TrafficModel,
    pub duty_cycle: DutyCycleFamily,
    pub pd: f64,
    pub pf: f64,
    pub policy: PolicyId,
    pub snr_su_db: f64,
    pub channel_error_prob: f64,
    pub seed: u64,
    pub n_runs: usize,
    pub ql_learning_rate: f64,
    pub ql_epsilon: f64,
    /// Step length of the discrete chain; `None` steps once per frame.
    pub dtmc_tick_ms: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_channels: 5,
            frame_ms: 50.0,
            sense_ms: 3.0,
            horizon_ms: 60_000.0,
            traffic: TrafficModel::Gpd,
            duty_cycle: DutyCycleFamily::Beta,
            pd: 0.95,
            pf: 0.05,
            policy: PolicyId::Proposed,
            snr_su_db: 20.0,
            channel_error_prob: 0.05,
            seed: 1,
            n_runs: 200,
            ql_learning_rate: DEFAULT_LEARNING_RATE,
            ql_epsilon: DEFAULT_EPSILON,
            dtmc_tick_ms: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 {
            return Err(invalid("n_channels must be >= 1"));
        }
        if !(self.frame_ms > 0.0 && self.frame_ms.is_finite()) {
            return Err(invalid(format!("frame_ms must be > 0, got {}", self.frame_ms)));
        }
        if !(self.sense_ms > 0.0) {
            return Err(invalid(format!("sense_ms must be > 0, got {}", self.sense_ms)));
        }
        if self.sense_ms * self.n_channels as f64 >= self.frame_ms {
            return Err(invalid(format!(
                "sensing every channel ({} x {} ms) must fit inside a {} ms frame",
                self.n_channels, self.sense_ms, self.frame_ms
            )));
        }
        let frames = self.horizon_ms / self.frame_ms;
        if !(self.horizon_ms > 0.0) || (frames - frames.round()).abs() > 1e-9 || frames.round() < 1.0 {
            return Err(invalid(format!(
                "horizon_ms ({}) must be a positive multiple of frame_ms ({})",
                self.horizon_ms, self.frame_ms
            )));
        }
        DetectorSpec::new(self.pd, self.pf, self.sense_ms)?;
        if !(0.0..=1.0).contains(&self.channel_error_prob) {
            return Err(invalid(format!(
                "channel_error_prob must be in [0,1], got {}",
                self.channel_error_prob
            )));
        }
        if !self.snr_su_db.is_finite() {
            return Err(invalid("snr_su_db must be finite"));
        }
        if self.n_runs == 0 {
            return Err(invalid("n_runs must be >= 1"));
        }
        crate::policies::QState::new(1, self.ql_learning_rate, self.ql_epsilon)?;
        if let Some(t) = self.dtmc_tick_ms {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid(format!("dtmc_tick_ms must be > 0, got {t}")));
            }
        }
        Ok(())
    }

    pub fn n_frames(&self) -> usize {
        (self.horizon_ms / self.frame_ms).round() as usize
    }

    pub fn dtmc_tick(&self) -> f64 {
        self.dtmc_tick_ms.unwrap_or(self.frame_ms)
    }

    pub fn detector(&self) -> Result<DetectorSpec> {
        DetectorSpec::new(self.pd, self.pf, self.sense_ms)
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_su_db / 10.0)
    }

    pub fn with_policy(&self, policy: PolicyId) -> Self {
        Self {
            policy,
            ..self.clone()
        }
    }
}

/// `((T - kτ)/T) log2(1 + snr)` on success, zero otherwise.
pub fn achievable_throughput(k: usize, frame_ms: f64, tau_ms: f64, success: bool, snr_linear: f64) -> Result<f64> {
    if k as f64 * tau_ms >= frame_ms {
        return Err(invalid(format!("sensing time {k} x {tau_ms} ms does not fit a {frame_ms} ms frame")));
    }
    Ok(if success {
        (frame_ms - k as f64 * tau_ms) / frame_ms * (1.0 + snr_linear).log2()
    } else {
        0.0
    })
}

pub fn normalize_throughput(tp: f64, snr_linear: f64) -> f64 {
    tp / (1.0 + snr_linear).log2()
}

/// Running mean `y_t = (1/t) Σ_{n<=t} x_n`.
pub fn cumulative_average(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() {
        return Err(invalid("cumulative average of an empty series"));
    }
    let mut sum = 0.0;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(i, x)| {
            sum += x;
            sum / (i + 1) as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame_index: usize,
    pub k_sensed: usize,
    pub transmitted: bool,
    pub pu_collision: bool,
    pub channel_error: bool,
    pub channel_used: Option<usize>,
    pub achievable_tp: f64,
    pub normalized_tp: f64,
    pub skipped: bool,
}

impl FrameRecord {
    pub fn success(&self) -> bool {
        self.transmitted && !self.pu_collision && !self.channel_error
    }
}

/// Per-frame cumulative averages.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries {
    pub avg_sensing: Vec<f64>,
    pub avg_norm_tp: Vec<f64>,
    pub avg_collision: Vec<f64>,
}

impl MetricsSeries {
    pub fn from_frames(frames: &[FrameRecord]) -> Result<Self> {
        let pick = |f: fn(&FrameRecord) -> f64| -> Result<Vec<f64>> {
            cumulative_average(&frames.iter().map(f).collect::<Vec<_>>())
        };
        Ok(Self {
            avg_sensing: pick(|r| r.k_sensed as f64)?,
            avg_norm_tp: pick(|r| r.normalized_tp)?,
            avg_collision: pick(|r| r.pu_collision as u8 as f64)?,
        })
    }

    pub fn len(&self) -> usize {
        self.avg_sensing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.avg_sensing.is_empty()
    }

    /// Element-wise mean, accumulated in slice order.
    pub fn mean_of(series: &[MetricsSeries]) -> Result<Self> {
        let first = series.first().ok_or_else(|| invalid("no series to average"))?;
        let n = first.len();
        if series.iter().any(|s| s.len() != n) {
            return Err(invalid("series lengths differ"));
        }
        let mut out = MetricsSeries {
            avg_sensing: vec![0.0; n],
            avg_norm_tp: vec![0.0; n],
            avg_collision: vec![0.0; n],
        };
        for s in series {
            for i in 0..n {
                out.avg_sensing[i] += s.avg_sensing[i];
                out.avg_norm_tp[i] += s.avg_norm_tp[i];
                out.avg_collision[i] += s.avg_collision[i];
            }
        }
        let m = series.len() as f64;
        for v in [&mut out.avg_sensing, &mut out.avg_norm_tp, &mut out.avg_collision] {
            v.iter_mut().for_each(|x| *x /= m);
        }
        Ok(out)
    }

    /// (sensing, throughput, collision) at the last frame.
    pub fn final_values(&self) -> Option<(f64, f64, f64)> {
        Some((
            *self.avg_sensing.last()?,
            *self.avg_norm_tp.last()?,
            *self.avg_collision.last()?,
        ))
    }
}

#[derive(Debug, Clone, Copy)]
enum Stream {
    Detector,
    ChannelError,
    Policy,
}

/// Traffic draws depend only on the replication seed so that every policy
/// faces the same channel timelines; decision streams are policy-specific.
pub fn traffic_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    rng
}

fn decision_rng(seed: u64, policy: PolicyId, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + 3 * policy.index() as u64 + stream as u64);
    rng
}

/// Draws per-channel parameters and builds every channel's timeline.
pub fn build_timelines(cfg: &SimConfig, seed: u64) -> Result<Vec<ChannelTimeline>> {
    let mut rng = traffic_rng(seed);
    (0..cfg.n_channels)
        .map(|_| {
            let model = cfg.traffic.draw_channel(cfg.duty_cycle, &mut rng);
            build_timeline(&model, cfg.horizon_ms, cfg.dtmc_tick(), &mut rng)
        })
        .collect()
}

/// One replication: all mutable state of a single simulated secondary user.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: SimConfig,
    detector: DetectorSpec,
    snr_linear: f64,
    timelines: Vec<ChannelTimeline>,
    selector: Selector,
    skipper: Option<SkipperState>,
    detector_rng: ChaCha8Rng,
    channel_rng: ChaCha8Rng,
    policy_rng: ChaCha8Rng,
    frame: usize,
    n_frames: usize,
    confusion: Confusion,
    last_ranking: Option<RankedList>,
}

impl Simulation {
    pub fn new(cfg: &SimConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let timelines = build_timelines(cfg, seed)?;
        Self::with_timelines(cfg, seed, timelines)
    }

    /// Runs against caller-supplied timelines, e.g. scripted scenarios.
    pub fn with_timelines(cfg: &SimConfig, seed: u64, timelines: Vec<ChannelTimeline>) -> Result<Self> {
        cfg.validate()?;
        if timelines.len() != cfg.n_channels {
            return Err(invalid(format!(
                "{} timelines for {} channels",
                timelines.len(),
                cfg.n_channels
            )));
        }
        if let Some(t) = timelines.iter().find(|t| t.horizon_ms() < cfg.horizon_ms) {
            return Err(invalid(format!("timeline horizon {} shorter than run", t.horizon_ms())));
        }
        let skipper = match cfg.policy {
            PolicyId::Proposed => Some(SkipperState::new(cfg.n_channels, cfg.frame_ms)?),
            _ => None,
        };
        Ok(Self {
            detector: cfg.detector()?,
            snr_linear: cfg.snr_linear(),
            selector: Selector::for_policy(cfg.policy, cfg.n_channels, cfg.ql_learning_rate, cfg.ql_epsilon)?,
            skipper,
            detector_rng: decision_rng(seed, cfg.policy, Stream::Detector),
            channel_rng: decision_rng(seed, cfg.policy, Stream::ChannelError),
            policy_rng: decision_rng(seed, cfg.policy, Stream::Policy),
            frame: 0,
            n_frames: cfg.n_frames(),
            confusion: Confusion::default(),
            last_ranking: None,
            timelines,
            cfg: cfg.clone(),
        })
    }

    pub fn timelines(&self) -> &[ChannelTimeline] {
        &self.timelines
    }

    pub fn skipper(&self) -> Option<&SkipperState> {
        self.skipper.as_ref()
    }

    pub fn selector(&self) -> &Selector {
        &self.selector
    }

    pub fn confusion(&self) -> &Confusion {
        &self.confusion
    }

    /// Ranking used by the most recent sensing frame.
    pub fn last_ranking(&self) -> Option<&RankedList> {
        self.last_ranking.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.frame >= self.n_frames
    }

    /// Simulates the next frame.
    pub fn step(&mut self) -> Result<FrameRecord> {
        if self.is_done() {
            return Err(invalid(format!("frame {} beyond horizon", self.frame)));
        }
        let index = self.frame;
        let start = index as f64 * self.cfg.frame_ms;
        let end = start + self.cfg.frame_ms;
        self.frame += 1;

        let skipping = self.skipper.as_ref().is_some_and(|s| s.mode() == Mode::Skip);
        let (channel, k) = if skipping {
            let c = self
                .skipper
                .as_ref()
                .and_then(|s| s.current_channel())
                .ok_or_else(|| Error::Logic("skip frame without a channel".into()))?;
            (Some(c), 0)
        } else {
            self.sense_frame(start)?
        };

        let Some(channel) = channel else {
            // Every channel reported busy: nothing transmitted this frame.
            return Ok(FrameRecord {
                frame_index: index,
                k_sensed: k,
                transmitted: false,
                pu_collision: false,
                channel_error: false,
                channel_used: None,
                achievable_tp: 0.0,
                normalized_tp: 0.0,
                skipped: false,
            });
        };

        if !skipping {
            if let Some(s) = self.skipper.as_mut() {
                s.select(channel, &mut self.policy_rng)?;
            }
        }

        let tx_start = start + k as f64 * self.cfg.sense_ms;
        let pu_collision = self.timelines[channel].busy_in(tx_start, end)?;
        let channel_error = self.channel_rng.random::<f64>() < self.cfg.channel_error_prob;
        let success = !pu_collision && !channel_error;

        self.selector.observe(channel, success)?;
        if let Some(s) = self.skipper.as_mut() {
            s.on_transmit_outcome(channel, success)?;
        }

        let achievable_tp = achievable_throughput(k, self.cfg.frame_ms, self.cfg.sense_ms, success, self.snr_linear)?;
        Ok(FrameRecord {
            frame_index: index,
            k_sensed: k,
            transmitted: true,
            pu_collision,
            channel_error,
            channel_used: Some(channel),
            achievable_tp,
            normalized_tp: normalize_throughput(achievable_tp, self.snr_linear),
            skipped: skipping,
        })
    }

    /// Multi-slot sensing in ranked order; returns the first channel reported idle
    /// (if any) and the number of slots used.
    fn sense_frame(&mut self, start: f64) -> Result<(Option<usize>, usize)> {
        let ranking = self.selector.rank(&mut self.policy_rng);
        let tau = self.cfg.sense_ms;
        let mut found = None;
        let mut k = 0;
        for &c in ranking.as_slice() {
            let slot_start = start + k as f64 * tau;
            k += 1;
            let truth = self.timelines[c].busy_in(slot_start, slot_start + tau)?;
            let verdict = self.detector.sense(truth, &mut self.detector_rng);
            self.confusion.record(truth, verdict);
            if verdict {
                self.selector.penalize_busy(c)?;
            } else {
                found = Some(c);
                break;
            }
        }
        self.last_ranking = Some(ranking);
        Ok((found, k))
    }

    pub fn run(mut self) -> Result<SimulationResult> {
        let mut frames = Vec::with_capacity(self.n_frames);
        while !self.is_done() {
            frames.push(self.step()?);
        }
        if let Some(s) = self.skipper.as_mut() {
            s.flush();
        }
        let metrics = MetricsSeries::from_frames(&frames)?;
        Ok(SimulationResult {
            frames,
            metrics,
            confusion: self.confusion,
            skipper: self.skipper,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub frames: Vec<FrameRecord>,
    pub metrics: MetricsSeries,
    pub confusion: Confusion,
    /// Final skipper state (with pending updates flushed) for the proposed policy.
    pub skipper: Option<SkipperState>,
}

pub fn run_simulation(cfg: &SimConfig, seed: u64) -> Result<SimulationResult> {
    Simulation::new(cfg, seed)?.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: SimConfig,
    pub mean: MetricsSeries,
    pub confusion: Confusion,
}

pub fn run_experiment(cfg: &SimConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, Execution::Parallel)
}

/// Replication `i` uses seed `cfg.seed + i`; results are reduced in index order.
pub fn run_experiment_with(cfg: &SimConfig, exec: Execution) -> Result<ExperimentResult> {
    cfg.validate()?;
    let one = |i: usize| run_simulation(cfg, cfg.seed.wrapping_add(i as u64));
    let runs: Vec<SimulationResult> = match exec {
        Execution::Sequential => (0..cfg.n_runs).map(one).collect::<Result<_>>()?,
        Execution::Parallel => (0..cfg.n_runs).into_par_iter().map(one).collect::<Result<_>>()?,
    };
    let mut confusion = Confusion::default();
    for r in &runs {
        confusion.merge(&r.confusion);
    }
    let series: Vec<MetricsSeries> = runs.into_iter().map(|r| r.metrics).collect();
    Ok(ExperimentResult {
        config: cfg.clone(),
        mean: MetricsSeries::mean_of(&series)?,
        confusion,
    })
}
