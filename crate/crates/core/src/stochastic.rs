//! Exogenous randomness: i.i.d. packet arrivals, the i.i.d. channel-state
//! process, and the seeded stream contract that makes replications
//! reproducible and mutually independent.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::topology::{FlowId, NodeId};

/// Default cap on the size of a product channel state space.
pub const DEFAULT_PRODUCT_CAP: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("invalid arrival model: {0}")]
    InvalidArrival(String),
    #[error("invalid channel model: {0}")]
    InvalidChannel(String),
    #[error("product channel has {size} states, exceeding the cap of {cap}")]
    ProductTooLarge { size: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalFamily {
    Poisson,
    /// A fixed batch of packets arrives with some per-slot probability.
    BernoulliBatch,
    Deterministic,
}

/// Arrival process of one flow at one node: i.i.d. nonnegative integer draws
/// per slot with the given mean (packets/slot) and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalEntry {
    pub node: NodeId,
    pub flow: FlowId,
    pub family: ArrivalFamily,
    pub mean: f64,
    pub variance: f64,
}

impl ArrivalEntry {
    pub fn poisson(node: NodeId, flow: FlowId, mean: f64) -> Self {
        ArrivalEntry { node, flow, family: ArrivalFamily::Poisson, mean, variance: mean }
    }

    pub fn deterministic(node: NodeId, flow: FlowId, packets_per_slot: u64) -> Self {
        ArrivalEntry {
            node,
            flow,
            family: ArrivalFamily::Deterministic,
            mean: packets_per_slot as f64,
            variance: 0.0,
        }
    }

    pub fn bernoulli_batch(node: NodeId, flow: FlowId, batch: u64, prob: f64) -> Self {
        let mean = batch as f64 * prob;
        ArrivalEntry {
            node,
            flow,
            family: ArrivalFamily::BernoulliBatch,
            mean,
            variance: (batch as f64).powi(2) * prob * (1.0 - prob),
        }
    }

    /// Batch size and per-slot probability implied by (mean, variance).
    pub fn batch_params(&self) -> Option<(u64, f64)> {
        if self.mean == 0.0 {
            return Some((0, 0.0));
        }
        let batch = (self.variance + self.mean * self.mean) / self.mean;
        let prob = self.mean / batch;
        Some((batch.round() as u64, prob))
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.mean.is_finite() || self.mean < 0.0 {
            return Err(format!("mean {} must be finite and >= 0", self.mean));
        }
        if !self.variance.is_finite() || self.variance < 0.0 {
            return Err(format!("variance {} must be finite and >= 0", self.variance));
        }
        match self.family {
            ArrivalFamily::Deterministic => {
                if self.variance != 0.0 {
                    return Err("deterministic arrivals require variance 0".into());
                }
                if self.mean.fract() != 0.0 {
                    return Err("deterministic arrivals require an integer mean".into());
                }
            }
            ArrivalFamily::Poisson => {
                if (self.variance - self.mean).abs() > 1e-9 * self.mean.max(1.0) {
                    return Err("poisson arrivals require variance = mean".into());
                }
            }
            ArrivalFamily::BernoulliBatch => {
                if self.mean > 0.0 {
                    let batch = (self.variance + self.mean * self.mean) / self.mean;
                    if (batch - batch.round()).abs() > 1e-9 * batch.max(1.0) || batch < 1.0 - 1e-9 {
                        return Err(format!("(mean, variance) imply non-integer batch size {batch}"));
                    }
                    let prob = self.mean / batch.round();
                    if !(0.0..=1.0 + 1e-12).contains(&prob) {
                        return Err(format!("(mean, variance) imply probability {prob} outside [0, 1]"));
                    }
                } else if self.variance != 0.0 {
                    return Err("zero-mean batch arrivals require variance 0".into());
                }
            }
        }
        Ok(())
    }
}

/// The exogenous arrival model: one entry per (source node, flow).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArrivalModel {
    pub entries: Vec<ArrivalEntry>,
}

impl ArrivalModel {
    pub fn validate(&self) -> Result<(), StochasticError> {
        for e in &self.entries {
            e.validate()
                .map_err(|reason| StochasticError::InvalidArrival(format!("flow {}: {reason}", e.flow)))?;
        }
        Ok(())
    }

    pub fn build_samplers(&self) -> Result<Vec<ArrivalSampler>, StochasticError> {
        self.validate()?;
        self.entries
            .iter()
            .map(|e| ArrivalSampler::new(e).map_err(StochasticError::InvalidArrival))
            .collect()
    }
}

/// Prebuilt per-entry sampler; draws are nonnegative integer packet counts.
#[derive(Debug, Clone)]
pub enum ArrivalSampler {
    Constant(u64),
    Poisson(Poisson<f64>),
    Batch { batch: u64, prob: f64 },
}

impl ArrivalSampler {
    fn new(entry: &ArrivalEntry) -> Result<Self, String> {
        entry.validate()?;
        Ok(match entry.family {
            ArrivalFamily::Deterministic => ArrivalSampler::Constant(entry.mean as u64),
            ArrivalFamily::Poisson => {
                if entry.mean == 0.0 {
                    ArrivalSampler::Constant(0)
                } else {
                    ArrivalSampler::Poisson(Poisson::new(entry.mean).map_err(|e| e.to_string())?)
                }
            }
            ArrivalFamily::BernoulliBatch => {
                let (batch, prob) = entry.batch_params().expect("validated");
                ArrivalSampler::Batch { batch, prob }
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            ArrivalSampler::Constant(k) => *k,
            ArrivalSampler::Poisson(dist) => dist.sample(rng) as u64,
            ArrivalSampler::Batch { batch, prob } => {
                if rng.random::<f64>() < *prob {
                    *batch
                } else {
                    0
                }
            }
        }
    }
}

/// Finite channel-state space: each state is one gain per link, drawn i.i.d.
/// across slots with distribution `probs`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelModel {
    pub states: Vec<Vec<u32>>,
    pub probs: Vec<f64>,
}

impl ChannelModel {
    pub fn single_state(gains: Vec<u32>) -> Self {
        ChannelModel { states: vec![gains], probs: vec![1.0] }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.states.is_empty() {
            return Err("state space is empty".into());
        }
        if self.states.len() != self.probs.len() {
            return Err(format!(
                "{} states but {} probabilities",
                self.states.len(),
                self.probs.len()
            ));
        }
        let mut sum = 0.0;
        for &p in &self.probs {
            if !p.is_finite() || p < 0.0 {
                return Err(format!("probability {p} must be finite and >= 0"));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("probabilities sum to {sum}, not 1"));
        }
        Ok(())
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn build_sampler(&self) -> Result<ChannelSampler, StochasticError> {
        self.validate().map_err(StochasticError::InvalidChannel)?;
        let mut cumulative = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for &p in &self.probs {
            acc += p;
            cumulative.push(acc);
        }
        Ok(ChannelSampler { cumulative })
    }
}

/// Inverse-CDF sampler over state indices.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    cumulative: Vec<f64>,
}

impl ChannelSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1)
    }
}

/// Builds the explicit product channel: every link draws independently from
/// the same per-link gain set and distribution, and `H` is the full product
/// space with the product measure. State index order is lexicographic with
/// link 0 as the most significant digit.
pub fn make_product_channel(
    gains: &[u32],
    gain_probs: &[f64],
    link_count: usize,
    cap: usize,
) -> Result<ChannelModel, StochasticError> {
    if gains.is_empty() || gains.len() != gain_probs.len() {
        return Err(StochasticError::InvalidChannel(
            "per-link gain set and distribution must be nonempty and equal length".into(),
        ));
    }
    let base = gains.len();
    let mut size: usize = 1;
    for _ in 0..link_count {
        size = size
            .checked_mul(base)
            .ok_or(StochasticError::ProductTooLarge { size: usize::MAX, cap })?;
        if size > cap {
            return Err(StochasticError::ProductTooLarge { size, cap });
        }
    }

    let mut states = Vec::with_capacity(size);
    let mut probs = Vec::with_capacity(size);
    for idx in 0..size {
        let mut rem = idx;
        let mut gains_vec = vec![0u32; link_count];
        let mut p = 1.0;
        for link in (0..link_count).rev() {
            let digit = rem % base;
            rem /= base;
            gains_vec[link] = gains[digit];
            p *= gain_probs[digit];
        }
        states.push(gains_vec);
        probs.push(p);
    }
    let model = ChannelModel { states, probs };
    model.validate().map_err(StochasticError::InvalidChannel)?;
    Ok(model)
}

/// Uniform product channel over a shared gain set.
pub fn uniform_product_channel(gains: &[u32], link_count: usize) -> Result<ChannelModel, StochasticError> {
    let p = 1.0 / gains.len() as f64;
    make_product_channel(gains, &vec![p; gains.len()], link_count, DEFAULT_PRODUCT_CAP)
}

/// One replication's random stream. Identical (seed, stream) pairs produce
/// identical sample sequences; distinct stream ids from one master seed are
/// independent.
#[derive(Debug, Clone)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream { seed, stream, rng }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

/// Draws one slot's exogenous arrivals, one count per model entry.
pub fn sample_arrivals(model: &ArrivalModel, rng: &mut RngStream) -> Result<Vec<u64>, StochasticError> {
    let samplers = model.build_samplers()?;
    Ok(samplers.iter().map(|s| s.sample(rng)).collect())
}

/// Draws one slot's channel state index.
pub fn sample_channel(model: &ChannelModel, rng: &mut RngStream) -> Result<usize, StochasticError> {
    let sampler = model.build_sampler()?;
    Ok(sampler.sample(rng))
}
