//! Energy-detector observation model.
//!
//! The detector is reduced to its operating point: a busy channel is reported
//! busy with probability `pd`, an idle one with probability `pf`.

use rand::Rng;

use crate::error::{invalid, Result};

/// Sample count implied by the default operating point; kept for reporting only.
pub const DEFAULT_INFO_SAMPLES: u32 = 1180;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pd: f64,
    pf: f64,
    slot_ms: f64,
    info_samples: u32,
}

impl DetectorSpec {
    pub fn new(pd: f64, pf: f64, slot_ms: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&pd) || !(0.0..=1.0).contains(&pf) {
            return Err(invalid(format!("detector probabilities must be in [0,1]: pd={pd}, pf={pf}")));
        }
        if pf > pd {
            return Err(invalid(format!("false-alarm probability {pf} exceeds detection probability {pd}")));
        }
        if !(slot_ms > 0.0 && slot_ms.is_finite()) {
            return Err(invalid(format!("sensing slot must be > 0 ms, got {slot_ms}")));
        }
        Ok(Self {
            pd,
            pf,
            slot_ms,
            info_samples: DEFAULT_INFO_SAMPLES,
        })
    }

    pub fn perfect(slot_ms: f64) -> Result<Self> {
        Self::new(1.0, 0.0, slot_ms)
    }

    pub fn pd(&self) -> f64 {
        self.pd
    }

    pub fn pf(&self) -> f64 {
        self.pf
    }

    pub fn slot_ms(&self) -> f64 {
        self.slot_ms
    }

    pub fn info_samples(&self) -> u32 {
        self.info_samples
    }

    /// Returns the detector's verdict (`true` = busy) for a slot whose true state is `truth_busy`.
    pub fn sense<R: Rng + ?Sized>(&self, truth_busy: bool, rng: &mut R) -> bool {
        let p_busy = if truth_busy { self.pd } else { self.pf };
        rng.random::<f64>() < p_busy
    }
}

pub fn sense<R: Rng + ?Sized>(truth_busy: bool, d: &DetectorSpec, rng: &mut R) -> bool {
    d.sense(truth_busy, rng)
}

/// Tally of (truth, verdict) pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    /// `counts[truth][verdict]`, index 1 = busy.
    pub counts: [[u64; 2]; 2],
}

impl Confusion {
    pub fn record(&mut self, truth_busy: bool, sensed_busy: bool) {
        self.counts[truth_busy as usize][sensed_busy as usize] += 1;
    }

    pub fn merge(&mut self, other: &Confusion) {
        for t in 0..2 {
            for s in 0..2 {
                self.counts[t][s] += other.counts[t][s];
            }
        }
    }

    pub fn trials(&self, truth_busy: bool) -> u64 {
        self.counts[truth_busy as usize].iter().sum()
    }

    /// Empirical `P(verdict busy | truth)`; `None` without trials.
    pub fn busy_rate(&self, truth_busy: bool) -> Option<f64> {
        let n = self.trials(truth_busy);
        (n > 0).then(|| self.counts[truth_busy as usize][1] as f64 / n as f64)
    }
}
