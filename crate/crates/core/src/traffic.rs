//! Primary-user occupancy models.
//!
//! Two families are supported. The discrete model is a two-state Markov chain
//! stepped once per frame whose busy probability (duty cycle) is drawn per
//! channel from a Beta or Kumaraswamy law. The continuous model alternates
//! OFF and ON periods drawn from a generalized Pareto or exponential law and
//! stores the busy periods as half-open `[start, end)` intervals in
//! milliseconds.

use std::path::Path;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{invalid, Error, Result};

/// Family of the duty-cycle law used by the discrete model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DutyCycleFamily {
    Beta,
    Kumaraswamy,
}

impl DutyCycleFamily {
    pub fn name(self) -> &'static str {
        match self {
            DutyCycleFamily::Beta => "beta",
            DutyCycleFamily::Kumaraswamy => "kumaraswamy",
        }
    }
}

/// A Beta(a, b) or Kumaraswamy(a, b) law over the duty cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyCycleSpec {
    family: DutyCycleFamily,
    a: f64,
    b: f64,
}

impl DutyCycleSpec {
    pub fn new(family: DutyCycleFamily, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(invalid(format!(
                "duty-cycle shape parameters must be positive, got a={a}, b={b}"
            )));
        }
        Ok(Self { family, a, b })
    }

    pub fn family(&self) -> DutyCycleFamily {
        self.family
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Draws a duty cycle strictly inside (0, 1).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match self.family {
            DutyCycleFamily::Beta => Beta::new(self.a, self.b)
                .expect("validated shape parameters")
                .sample(rng),
            DutyCycleFamily::Kumaraswamy => {
                // Inverse CDF: F(x) = 1 - (1 - x^a)^b.
                let u: f64 = rng.sample(Open01);
                (1.0 - (1.0 - u).powf(1.0 / self.b)).powf(1.0 / self.a)
            }
        };
        // Tiny shape parameters can round a draw onto the boundary.
        x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }
}

/// Two-state transition matrix; state 0 is idle and state 1 is busy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix {
    rows: [[f64; 2]; 2],
}

impl TransitionMatrix {
    pub fn from_rows(rows: [[f64; 2]; 2]) -> Result<Self> {
        for row in &rows {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(invalid(format!("transition probabilities out of [0,1]: {rows:?}")));
            }
            if (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return Err(invalid(format!("transition row does not sum to 1: {row:?}")));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.rows
    }

    pub fn p(&self, from: usize, to: usize) -> f64 {
        self.rows[from][to]
    }

    /// Stationary probability of the busy state.
    pub fn stationary_busy(&self) -> f64 {
        let leave_idle = self.rows[0][1];
        let leave_busy = self.rows[1][0];
        if leave_idle + leave_busy == 0.0 {
            // Both states absorbing; no unique stationary law.
            0.0
        } else {
            leave_idle / (leave_idle + leave_busy)
        }
    }
}

/// Builds the duty-cycle chain with `p01 = p11 = psi` and `p00 = p10 = 1 - psi`.
pub fn build_dtmc(psi: f64) -> Result<TransitionMatrix> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(invalid(format!("duty cycle must be in [0,1], got {psi}")));
    }
    TransitionMatrix::from_rows([[1.0 - psi, psi], [1.0 - psi, psi]])
}

pub fn sample_duty_cycle<R: Rng + ?Sized>(spec: &DutyCycleSpec, rng: &mut R) -> f64 {
    spec.sample(rng)
}

/// Advances the chain by one step.
pub fn dtmc_step<R: Rng + ?Sized>(busy: bool, m: &TransitionMatrix, rng: &mut R) -> bool {
    let p_busy = m.p(busy as usize, 1);
    rng.random::<f64>() < p_busy
}

/// Generalized Pareto law with shape `k`, scale `sigma` and location `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdParams {
    k: f64,
    sigma: f64,
    theta: f64,
}

impl GpdParams {
    pub fn new(k: f64, sigma: f64, theta: f64) -> Result<Self> {
        if !(k >= 0.0 && k.is_finite()) {
            return Err(invalid(format!("GPD shape must be >= 0, got {k}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("GPD scale must be > 0, got {sigma}")));
        }
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(invalid(format!("GPD location must be >= 0, got {theta}")));
        }
        Ok(Self { k, sigma, theta })
    }

    pub fn shape(&self) -> f64 {
        self.k
    }

    pub fn scale(&self) -> f64 {
        self.sigma
    }

    pub fn location(&self) -> f64 {
        self.theta
    }

    /// `theta + sigma / (1 - k)`, infinite for `k >= 1`.
    pub fn mean(&self) -> f64 {
        if self.k >= 1.0 {
            f64::INFINITY
        } else {
            self.theta + self.sigma / (1.0 - self.k)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.theta {
            return 0.0;
        }
        let z = (x - self.theta) / self.sigma;
        if self.k == 0.0 {
            1.0 - (-z).exp()
        } else {
            1.0 - (1.0 + self.k * z).powf(-1.0 / self.k)
        }
    }
}

impl Distribution<f64> for GpdParams {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        // -ln(1-u) > 0 for u in (0,1); this is the k -> 0 limit of the power form.
        let e = -(-u).ln_1p();
        let excess = if self.k == 0.0 {
            e
        } else {
            (self.k * e).exp_m1() / self.k
        };
        self.theta + self.sigma * excess
    }
}

/// Law of a single ON or OFF period in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DurationDist {
    Gpd(GpdParams),
    Exponential { mean_ms: f64 },
}

impl DurationDist {
    pub fn exponential(mean_ms: f64) -> Result<Self> {
        if !(mean_ms > 0.0 && mean_ms.is_finite()) {
            return Err(invalid(format!("exponential mean must be > 0, got {mean_ms}")));
        }
        Ok(DurationDist::Exponential { mean_ms })
    }

    pub fn mean(&self) -> f64 {
        match self {
            DurationDist::Gpd(p) => p.mean(),
            DurationDist::Exponential { mean_ms } => *mean_ms,
        }
    }
}

impl Distribution<f64> for DurationDist {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DurationDist::Gpd(p) => p.sample(rng),
            DurationDist::Exponential { mean_ms } => {
                let u: f64 = rng.sample(Open01);
                -mean_ms * (-u).ln_1p()
            }
        }
    }
}

pub fn sample_duration<R: Rng + ?Sized>(d: &DurationDist, rng: &mut R) -> f64 {
    d.sample(rng)
}

/// Per-channel occupancy model, fully parameterized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Dtmc(TransitionMatrix),
    Continuous { on: DurationDist, off: DurationDist },
}

#[derive(Debug, Clone, PartialEq)]
enum Occupancy {
    Frames { tick_ms: f64, busy: Vec<bool> },
    Intervals(Vec<(f64, f64)>),
}

/// Ground-truth primary-user occupancy of one channel over `[0, horizon_ms)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTimeline {
    horizon_ms: f64,
    occupancy: Occupancy,
}

/// Builds one channel's occupancy over `[0, horizon_ms)`. The discrete chain
/// takes one step every `tick_ms`.
pub fn build_timeline<R: Rng + ?Sized>(
    model: &ChannelModel,
    horizon_ms: f64,
    tick_ms: f64,
    rng: &mut R,
) -> Result<ChannelTimeline> {
    if !(horizon_ms > 0.0 && horizon_ms.is_finite()) {
        return Err(invalid(format!("horizon must be > 0, got {horizon_ms}")));
    }
    if !(tick_ms > 0.0) {
        return Err(invalid(format!("tick length must be > 0, got {tick_ms}")));
    }
    let occupancy = match model {
        ChannelModel::Dtmc(m) => {
            let n_ticks = (horizon_ms / tick_ms).ceil() as usize;
            let mut busy = Vec::with_capacity(n_ticks);
            let mut state = rng.random::<f64>() < m.stationary_busy();
            for i in 0..n_ticks {
                if i > 0 {
                    state = dtmc_step(state, m, rng);
                }
                busy.push(state);
            }
            Occupancy::Frames { tick_ms, busy }
        }
        ChannelModel::Continuous { on, off } => {
            let (mean_on, mean_off) = (on.mean(), off.mean());
            let p_start_busy = if mean_on.is_infinite() {
                1.0
            } else {
                mean_on / (mean_on + mean_off)
            };
            let mut busy_phase = rng.random::<f64>() < p_start_busy;
            let mut t = 0.0;
            let mut intervals = Vec::new();
            while t < horizon_ms {
                let d = if busy_phase { on.sample(rng) } else { off.sample(rng) };
                let end = (t + d).min(horizon_ms);
                if busy_phase && end > t {
                    intervals.push((t, end));
                }
                t += d;
                busy_phase = !busy_phase;
            }
            Occupancy::Intervals(intervals)
        }
    };
    Ok(ChannelTimeline { horizon_ms, occupancy })
}

impl ChannelTimeline {
    /// A continuous timeline from explicit busy intervals; used for scripted scenarios.
    pub fn from_intervals(horizon_ms: f64, intervals: Vec<(f64, f64)>) -> Result<Self> {
        if !(horizon_ms > 0.0) {
            return Err(invalid(format!("horizon must be > 0, got {horizon_ms}")));
        }
        let mut prev_end = 0.0;
        for &(s, e) in &intervals {
            if !(s >= prev_end && e > s && e <= horizon_ms) {
                return Err(invalid(format!(
                    "busy intervals must be sorted, disjoint and inside [0, {horizon_ms}]: ({s}, {e})"
                )));
            }
            prev_end = e;
        }
        Ok(Self {
            horizon_ms,
            occupancy: Occupancy::Intervals(intervals),
        })
    }

    /// A frame-quantized timeline from explicit busy flags.
    pub fn from_frame_flags(frame_ms: f64, busy: Vec<bool>) -> Result<Self> {
        if !(frame_ms > 0.0) || busy.is_empty() {
            return Err(invalid("frame flags need a positive frame length and at least one frame"));
        }
        Ok(Self {
            horizon_ms: frame_ms * busy.len() as f64,
            occupancy: Occupancy::Frames {
                tick_ms: frame_ms,
                busy,
            },
        })
    }

    pub fn horizon_ms(&self) -> f64 {
        self.horizon_ms
    }

    /// Busy periods as `[start, end)` pairs. Frame-quantized timelines are
    /// converted by merging runs of busy frames.
    pub fn busy_intervals(&self) -> Vec<(f64, f64)> {
        match &self.occupancy {
            Occupancy::Intervals(iv) => iv.clone(),
            Occupancy::Frames { tick_ms, busy } => {
                let mut out: Vec<(f64, f64)> = Vec::new();
                for (i, _) in busy.iter().enumerate().filter(|(_, b)| **b) {
                    let s = i as f64 * tick_ms;
                    let e = s + tick_ms;
                    match out.last_mut() {
                        Some(last) if last.1 == s => last.1 = e,
                        _ => out.push((s, e)),
                    }
                }
                out
            }
        }
    }

    /// Per-frame flags for frame-quantized timelines.
    pub fn frame_flags(&self) -> Option<&[bool]> {
        match &self.occupancy {
            Occupancy::Frames { busy, .. } => Some(busy),
            Occupancy::Intervals(_) => None,
        }
    }

    /// Whether the primary user occupies any part of `[t0_ms, t1_ms)`.
    pub fn busy_in(&self, t0_ms: f64, t1_ms: f64) -> Result<bool> {
        if !(t0_ms >= 0.0 && t0_ms < t1_ms && t1_ms <= self.horizon_ms) {
            return Err(invalid(format!(
                "query [{t0_ms}, {t1_ms}) outside horizon [0, {})",
                self.horizon_ms
            )));
        }
        Ok(match &self.occupancy {
            Occupancy::Frames { tick_ms, busy } => {
                let first = (t0_ms / tick_ms).floor() as usize;
                let last = ((t1_ms / tick_ms).ceil() as usize).min(busy.len());
                busy[first..last].iter().any(|&b| b)
            }
            Occupancy::Intervals(iv) => {
                // First interval that ends after t0; it overlaps iff it starts before t1.
                let idx = iv.partition_point(|&(_, end)| end <= t0_ms);
                iv.get(idx).is_some_and(|&(start, _)| start < t1_ms)
            }
        })
    }

    /// Fraction of the horizon spent busy.
    pub fn busy_fraction(&self) -> f64 {
        match &self.occupancy {
            Occupancy::Frames { busy, .. } => {
                busy.iter().filter(|&&b| b).count() as f64 / busy.len() as f64
            }
            Occupancy::Intervals(iv) => {
                iv.iter().map(|(s, e)| e - s).sum::<f64>() / self.horizon_ms
            }
        }
    }
}

/// Traffic scenarios with per-channel parameter ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrafficModel {
    Gpd,
    Exponential,
    DtmcLow,
    DtmcMedium,
    DtmcHigh,
}

/// GPD scale shared by every channel (ms).
pub const GPD_SCALE_MS: f64 = 500.0;
/// Upper end of the exponential mean range (ms).
pub const EXP_MAX_MEAN_MS: f64 = 500.0;

impl TrafficModel {
    pub const ALL: [TrafficModel; 5] = [
        TrafficModel::Gpd,
        TrafficModel::Exponential,
        TrafficModel::DtmcLow,
        TrafficModel::DtmcMedium,
        TrafficModel::DtmcHigh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrafficModel::Gpd => "gpd",
            TrafficModel::Exponential => "exponential",
            TrafficModel::DtmcLow => "dtmc-low",
            TrafficModel::DtmcMedium => "dtmc-medium",
            TrafficModel::DtmcHigh => "dtmc-high",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Draws one channel's model parameters uniformly from the scenario ranges.
    pub fn draw_channel<R: Rng + ?Sized>(
        self,
        family: DutyCycleFamily,
        rng: &mut R,
    ) -> ChannelModel {
        // (0, 1]
        let unit_open_low = |rng: &mut R| 1.0 - rng.random::<f64>();
        let one_to_five = |rng: &mut R| rng.random_range(1.0..=5.0);
        let dtmc = |a: f64, b: f64, rng: &mut R| {
            let spec = DutyCycleSpec::new(family, a, b).expect("ranges are positive");
            ChannelModel::Dtmc(build_dtmc(spec.sample(rng)).expect("duty cycle in (0,1)"))
        };
        match self {
            TrafficModel::Gpd => {
                let gpd = |rng: &mut R| {
                    let k = rng.random_range(0.0..=0.5);
                    let theta = rng.random_range(50.0..=100.0);
                    DurationDist::Gpd(GpdParams::new(k, GPD_SCALE_MS, theta).expect("in range"))
                };
                let off = gpd(rng);
                let on = gpd(rng);
                ChannelModel::Continuous { on, off }
            }
            TrafficModel::Exponential => {
                let off = DurationDist::exponential(EXP_MAX_MEAN_MS * unit_open_low(rng))
                    .expect("positive mean");
                let on = DurationDist::exponential(EXP_MAX_MEAN_MS * unit_open_low(rng))
                    .expect("positive mean");
                ChannelModel::Continuous { on, off }
            }
            TrafficModel::DtmcLow => {
                let a = unit_open_low(rng);
                let b = one_to_five(rng);
                dtmc(a, b, rng)
            }
            TrafficModel::DtmcMedium => {
                let a = unit_open_low(rng);
                let b = unit_open_low(rng);
                dtmc(a, b, rng)
            }
            TrafficModel::DtmcHigh => {
                let a = one_to_five(rng);
                let b = one_to_five(rng);
                dtmc(a, b, rng)
            }
        }
    }
}

/// Writes `channel,start_ms,end_ms` for every busy interval.
pub fn write_trace_csv(timelines: &[ChannelTimeline], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["channel", "start_ms", "end_ms"]).map_err(csv_err)?;
    for (ch, tl) in timelines.iter().enumerate() {
        for (s, e) in tl.busy_intervals() {
            w.write_record([ch.to_string(), format!("{s:.6}"), format!("{e:.6}")])
                .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
