//! Channel-ranking policies.
//!
//! Every policy returns a [`RankedList`], the order in which channels are
//! sensed within a frame, and learns from two kinds of binary feedback: a
//! channel found busy by the detector, and the ACK/NACK of a transmitted frame.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{invalid, Result};

/// Success/failure counts of a Beta posterior over a channel's idle probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaArm {
    pub successes: f64,
    pub failures: f64,
}

impl BetaArm {
    pub fn new(successes: f64, failures: f64) -> Result<Self> {
        if !(successes >= 1.0 && failures >= 1.0) || !successes.is_finite() || !failures.is_finite() {
            return Err(invalid(format!(
                "beta arm counts must be >= 1, got S={successes}, F={failures}"
            )));
        }
        Ok(Self { successes, failures })
    }

    pub fn mean(&self) -> f64 {
        self.successes / (self.successes + self.failures)
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Beta::new(self.successes, self.failures)
            .expect("counts are >= 1")
            .sample(rng)
    }
}

/// Initial counts of the optimistic sampler.
pub const OTS_PRIOR: f64 = 1.0;
/// Initial counts of the plain Thompson baseline.
pub const TS_PRIOR: f64 = 2.0;

/// A permutation of `0..n` giving the sensing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RankedList(Vec<usize>);

impl RankedList {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &c in &order {
            match seen.get_mut(c) {
                Some(s) if !*s => *s = true,
                _ => return Err(invalid(format!("not a permutation: {order:?}"))),
            }
        }
        Ok(Self(order))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

/// Sorts indices by key descending; ties are broken uniformly at random.
fn rank_by_keys<R: Rng + ?Sized>(keys: &[f64], rng: &mut R) -> RankedList {
    let mut order: Vec<(usize, f64, u64)> = keys
        .iter()
        .enumerate()
        .map(|(i, &k)| (i, k, rng.random::<u64>()))
        .collect();
    order.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(Ordering::Equal)
            .then(a.2.cmp(&b.2))
    });
    RankedList(order.into_iter().map(|(i, _, _)| i).collect())
}

/// Optimistic Thompson sampling: each key is a Beta draw clamped below by the posterior mean.
pub fn ots_rank<R: Rng + ?Sized>(arms: &[BetaArm], rng: &mut R) -> RankedList {
    let keys: Vec<f64> = arms.iter().map(|a| a.draw(rng).max(a.mean())).collect();
    rank_by_keys(&keys, rng)
}

pub fn ts_rank<R: Rng + ?Sized>(arms: &[BetaArm], rng: &mut R) -> RankedList {
    let keys: Vec<f64> = arms.iter().map(|a| a.draw(rng)).collect();
    rank_by_keys(&keys, rng)
}

/// Records one observation: a collision (or busy verdict) counts as a failure.
pub fn ots_update(arms: &mut [BetaArm], channel: usize, collision: bool) -> Result<()> {
    let n = arms.len();
    let arm = arms
        .get_mut(channel)
        .ok_or_else(|| invalid(format!("channel {channel} out of range for {n} arms")))?;
    if collision {
        arm.failures += 1.0;
    } else {
        arm.successes += 1.0;
    }
    Ok(())
}

/// Stateless Q-learning with epsilon-greedy exploration over permutations.
#[derive(Debug, Clone, PartialEq)]
pub struct QState {
    q: Vec<f64>,
    learning_rate: f64,
    epsilon: f64,
}

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 0.1;

impl QState {
    pub fn new(n_channels: usize, learning_rate: f64, epsilon: f64) -> Result<Self> {
        Self::with_values(vec![0.0; n_channels], learning_rate, epsilon)
    }

    pub fn with_values(q: Vec<f64>, learning_rate: f64, epsilon: f64) -> Result<Self> {
        if q.is_empty() {
            return Err(invalid("Q-learning needs at least one channel"));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(invalid("Q values must be finite"));
        }
        if !(learning_rate > 0.0 && learning_rate <= 1.0) {
            return Err(invalid(format!("learning rate must be in (0,1], got {learning_rate}")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(invalid(format!("epsilon must be in [0,1], got {epsilon}")));
        }
        Ok(Self {
            q,
            learning_rate,
            epsilon,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

pub fn ql_rank<R: Rng + ?Sized>(qs: &QState, rng: &mut R) -> RankedList {
    if rng.random::<f64>() < qs.epsilon {
        rand_rank(qs.q.len(), rng)
    } else {
        rank_by_keys(&qs.q, rng)
    }
}

/// `q <- (1 - lr) q + lr r`, i.e. the Q update with zero discount.
pub fn ql_update(qs: &mut QState, channel: usize, reward: f64) -> Result<()> {
    let lr = qs.learning_rate;
    let n = qs.q.len();
    let q = qs
        .q
        .get_mut(channel)
        .ok_or_else(|| invalid(format!("channel {channel} out of range for {n} channels")))?;
    *q = (1.0 - lr) * *q + lr * reward;
    Ok(())
}

pub fn rand_rank<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RankedList {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    RankedList(order)
}

/// The policies the engine can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyId {
    Proposed,
    Ots,
    Sbla,
    Ql,
    Rand,
}

impl PolicyId {
    pub const ALL: [PolicyId; 5] = [
        PolicyId::Proposed,
        PolicyId::Ots,
        PolicyId::Sbla,
        PolicyId::Ql,
        PolicyId::Rand,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyId::Proposed => "proposed",
            PolicyId::Ots => "ots",
            PolicyId::Sbla => "sbla",
            PolicyId::Ql => "ql",
            PolicyId::Rand => "rand",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Mutable learner behind a policy.
#[derive(Debug, Clone)]
pub enum Selector {
    /// Optimistic Thompson sampling; also the first stage of the proposed scheme.
    Optimistic(Vec<BetaArm>),
    /// Ranked Thompson sampling, run as the SBLA baseline.
    Thompson(Vec<BetaArm>),
    QLearning(QState),
    Random(usize),
}

impl Selector {
    pub fn for_policy(
        policy: PolicyId,
        n_channels: usize,
        learning_rate: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if n_channels == 0 {
            return Err(invalid("need at least one channel"));
        }
        Ok(match policy {
            PolicyId::Proposed | PolicyId::Ots => {
                Selector::Optimistic(vec![BetaArm::new(OTS_PRIOR, OTS_PRIOR)?; n_channels])
            }
            PolicyId::Sbla => Selector::Thompson(vec![BetaArm::new(TS_PRIOR, TS_PRIOR)?; n_channels]),
            PolicyId::Ql => Selector::QLearning(QState::new(n_channels, learning_rate, epsilon)?),
            PolicyId::Rand => Selector::Random(n_channels),
        })
    }

    pub fn n_channels(&self) -> usize {
        match self {
            Selector::Optimistic(a) | Selector::Thompson(a) => a.len(),
            Selector::QLearning(q) => q.q.len(),
            Selector::Random(n) => *n,
        }
    }

    pub fn rank<R: Rng + ?Sized>(&self, rng: &mut R) -> RankedList {
        match self {
            Selector::Optimistic(arms) => ots_rank(arms, rng),
            Selector::Thompson(arms) => ts_rank(arms, rng),
            Selector::QLearning(q) => ql_rank(q, rng),
            Selector::Random(n) => rand_rank(*n, rng),
        }
    }

    /// Feedback for a channel the detector reported busy.
    pub fn penalize_busy(&mut self, channel: usize) -> Result<()> {
        self.observe(channel, false)
    }

    /// Feedback for a transmitted frame (`success` = ACK).
    pub fn observe(&mut self, channel: usize, success: bool) -> Result<()> {
        match self {
            Selector::Optimistic(arms) | Selector::Thompson(arms) => {
                ots_update(arms, channel, !success)
            }
            Selector::QLearning(q) => ql_update(q, channel, if success { 1.0 } else { 0.0 }),
            Selector::Random(n) => {
                if channel < *n {
                    Ok(())
                } else {
                    Err(invalid(format!("channel {channel} out of range for {n} channels")))
                }
            }
        }
    }
}
