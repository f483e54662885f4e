//! Second learning stage: how many frames to transmit without sensing.
//!
//! Each channel carries a gamma posterior over the rate `θ` of an assumed
//! exponential OFF time. An OFF sample `x` observed from the moment the
//! channel was picked covers on average half of the full OFF period, so the
//! update is `G(α + 1, β + 2x)`. The skip length is half the larger of a
//! posterior draw of the mean OFF time and the posterior-mean estimate.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{invalid, Error, Result};

/// Gamma posterior over the exponential OFF rate; `beta` is in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl GammaPrior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid(format!("gamma parameters must be positive, got ({alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }

    /// Posterior mean of the rate, `α/β`.
    pub fn mean_rate(&self) -> f64 {
        self.alpha / self.beta
    }

    pub fn variance(&self) -> f64 {
        self.alpha / (self.beta * self.beta)
    }

    /// Folds in one observed residual OFF time.
    pub fn observe(&mut self, off_ms: f64) {
        self.alpha += 1.0;
        self.beta += 2.0 * off_ms;
    }

    /// Draws a rate with shape `α` and rate `β`.
    pub fn sample_rate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Gamma::new(self.alpha, 1.0 / self.beta)
            .expect("validated gamma parameters")
            .sample(rng)
    }
}

/// `G(α + n, β + 2 Σx)` for residual OFF samples `xs`.
pub fn posterior_after(prior: GammaPrior, samples: &[f64]) -> Result<GammaPrior> {
    if let Some(bad) = samples.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(invalid(format!("OFF samples must be non-negative, got {bad}")));
    }
    Ok(GammaPrior {
        alpha: prior.alpha + samples.len() as f64,
        beta: prior.beta + 2.0 * samples.iter().sum::<f64>(),
    })
}

/// Skip length in whole frames for a given rate draw.
pub fn t_skip_for_rate(prior: &GammaPrior, rate: f64, frame_ms: f64) -> u64 {
    let t_ms = (1.0 / rate).max(prior.beta / prior.alpha) / 2.0;
    // Saturating cast: a vanishing rate draw yields u64::MAX.
    (t_ms / frame_ms).floor() as u64
}

pub fn draw_t_skip<R: Rng + ?Sized>(prior: &GammaPrior, frame_ms: f64, rng: &mut R) -> u64 {
    t_skip_for_rate(prior, prior.sample_rate(rng), frame_ms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sense,
    Skip,
}

/// What the engine should do in the next frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Directive {
    ContinueSkip,
    Resense,
    ResenseAfterCollision,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkipperState {
    mode: Mode,
    n_skip: u64,
    t_skip: u64,
    current_channel: Option<usize>,
    /// Consecutive frames transmitted on `current_channel` not yet folded into its prior.
    t_hat: u64,
    frame_ms: f64,
    priors: Vec<GammaPrior>,
}

pub fn init_skipper(n_channels: usize, frame_ms: f64) -> Result<SkipperState> {
    SkipperState::new(n_channels, frame_ms)
}

impl SkipperState {
    pub fn new(n_channels: usize, frame_ms: f64) -> Result<Self> {
        if n_channels == 0 {
            return Err(invalid("skipper needs at least one channel"));
        }
        if !(frame_ms > 0.0 && frame_ms.is_finite()) {
            return Err(invalid(format!("frame length must be > 0, got {frame_ms}")));
        }
        Ok(Self {
            mode: Mode::Sense,
            n_skip: 0,
            t_skip: 0,
            current_channel: None,
            t_hat: 0,
            frame_ms,
            priors: vec![GammaPrior::new(1.0, frame_ms)?; n_channels],
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn n_skip(&self) -> u64 {
        self.n_skip
    }

    pub fn t_skip(&self) -> u64 {
        self.t_skip
    }

    pub fn t_hat(&self) -> u64 {
        self.t_hat
    }

    pub fn current_channel(&self) -> Option<usize> {
        self.current_channel
    }

    pub fn priors(&self) -> &[GammaPrior] {
        &self.priors
    }

    pub fn prior(&self, channel: usize) -> Option<&GammaPrior> {
        self.priors.get(channel)
    }

    fn fold_pending(&mut self, channel: usize) {
        if self.t_hat > 0 {
            let x = self.t_hat as f64 * self.frame_ms;
            self.priors[channel].observe(x);
            self.t_hat = 0;
        }
    }

    /// A channel was found idle in SENSE mode. Applies the deferred update of the
    /// previous channel when the choice moved away from it, then returns the
    /// skip target drawn for `channel`.
    pub fn select<R: Rng + ?Sized>(&mut self, channel: usize, rng: &mut R) -> Result<u64> {
        if self.mode != Mode::Sense {
            return Err(Error::Logic("channel selection while skipping".into()));
        }
        if channel >= self.priors.len() {
            return Err(invalid(format!("channel {channel} out of range")));
        }
        if let Some(prev) = self.current_channel {
            if prev != channel {
                self.fold_pending(prev);
            }
        }
        self.current_channel = Some(channel);
        self.n_skip = 0;
        self.t_skip = draw_t_skip(&self.priors[channel], self.frame_ms, rng);
        Ok(self.t_skip)
    }

    /// Transmission feedback for a frame sent on `channel`.
    pub fn on_transmit_outcome(&mut self, channel: usize, success: bool) -> Result<Directive> {
        match self.current_channel {
            Some(c) if c == channel => {}
            other => {
                return Err(Error::Logic(format!(
                    "outcome for channel {channel} while current channel is {other:?}"
                )))
            }
        }
        self.t_hat += 1;
        if !success {
            self.mode = Mode::Sense;
            self.n_skip = 0;
            self.fold_pending(channel);
            return Ok(Directive::ResenseAfterCollision);
        }
        if self.n_skip < self.t_skip {
            self.n_skip += 1;
            self.mode = Mode::Skip;
            Ok(Directive::ContinueSkip)
        } else {
            // Same OFF period may continue; the prior update waits for the next selection.
            self.mode = Mode::Sense;
            self.n_skip = 0;
            Ok(Directive::Resense)
        }
    }

    /// Applies any deferred update; used at the end of a run.
    pub fn flush(&mut self) {
        if let Some(c) = self.current_channel {
            self.fold_pending(c);
        }
    }
}
