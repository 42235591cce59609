//! The scenario file: one TOML document declaring the network, channel and
//! arrival models, policy parameters, and experiment settings. Unknown fields
//! are rejected. Field names and units are documented in the README's
//! scenario-format reference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use bpsim_core::scheduler::{FlowPolicy, PolicyParams};
use bpsim_core::stochastic::{
    make_product_channel, ArrivalEntry, ArrivalFamily, ArrivalModel, ChannelModel, DEFAULT_PRODUCT_CAP,
};
use bpsim_core::topology::{node_exclusive_interference, Flow, FlowId, Link, LinkId, NetworkSpec, NodeId};

pub const SCENARIO_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("failed to parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported scenario schema {0} (this build reads schema {SCENARIO_SCHEMA})")]
    Schema(u32),
    #[error("scenario is inconsistent: {0}")]
    Invalid(String),
    #[error(transparent)]
    Stochastic(#[from] bpsim_core::stochastic::StochasticError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    pub network: NetworkSection,
    pub channel: ChannelSection,
    #[serde(rename = "flows")]
    pub flows: Vec<FlowSection>,
    pub experiment: ExperimentSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Node count; nodes are 0..nodes-1.
    pub nodes: u32,
    /// Directed links as [from, to] node pairs; link ids are array positions.
    pub links: Vec<[u32; 2]>,
    /// Either the string "node-exclusive" or explicit link-id sets.
    pub interference: InterferenceSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterferenceSection {
    Named(String),
    Explicit(Vec<Vec<u32>>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub kind: ChannelKind,
    /// Per-link gain set for `uniform-product`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<Vec<u32>>,
    /// Explicit states (one gain per link each) for `explicit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<Vec<u32>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    /// Optional gain -> offered-rate map (packets/slot).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_table: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    #[serde(rename = "uniform-product")]
    UniformProduct,
    #[serde(rename = "explicit")]
    Explicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub source: u32,
    /// Destination node; doubles as the flow id.
    pub destination: u32,
    /// Route as a sequence of link ids.
    pub route: Vec<u32>,
    pub arrival: ArrivalSection,
    /// Weight amplitude (dimensionless).
    pub a1: f64,
    /// Weight steepness (1/packets).
    pub a2: f64,
    /// Target aggregate queue (packets); exactly one of target_queue /
    /// target_delay must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_queue: Option<f64>,
    /// Target end-to-end mean delay (slots), converted via Little's law.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_delay: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalSection {
    pub family: ArrivalFamilySection,
    /// Mean packets/slot.
    pub mean: f64,
    /// Variance (packets^2/slot); required for bernoulli-batch, implied
    /// otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrivalFamilySection {
    #[serde(rename = "poisson")]
    Poisson,
    #[serde(rename = "bernoulli-batch")]
    BernoulliBatch,
    #[serde(rename = "deterministic")]
    Deterministic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<u64>,
    /// "full" (per-queue) or "aggregate" (per-flow) workload space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_mode: Option<String>,
    /// Pinned service variance for the queue approximation; the computed
    /// value is always reported alongside.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_hat_sq: Option<f64>,
    /// Pinned boundary point for the queue approximation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_queues: Option<Vec<u64>>,
    /// Fraction of the horizon discarded before time averages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Scenario, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        if scenario.schema != SCENARIO_SCHEMA {
            return Err(ScenarioError::Schema(scenario.schema));
        }
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Builds the core network spec. Structural problems surface here; the
    /// full invariant check is `validate_network` on the result.
    pub fn to_network_spec(&self) -> Result<NetworkSpec, ScenarioError> {
        let links: Vec<Link> = self
            .network
            .links
            .iter()
            .map(|&[from, to]| Link { from: NodeId(from), to: NodeId(to) })
            .collect();

        let interference_sets = match &self.network.interference {
            InterferenceSection::Named(name) if name == "node-exclusive" => {
                node_exclusive_interference(self.network.nodes, &links)
            }
            InterferenceSection::Named(other) => {
                return Err(ScenarioError::Invalid(format!("unknown interference model '{other}'")))
            }
            InterferenceSection::Explicit(sets) => {
                sets.iter().map(|s| s.iter().map(|&l| LinkId(l)).collect()).collect()
            }
        };

        let channel = self.build_channel(links.len())?;

        let mut flows = Vec::new();
        let mut arrivals = ArrivalModel::default();
        let mut policy = PolicyParams::default();
        for section in &self.flows {
            let flow = Flow {
                destination: NodeId(section.destination),
                source: NodeId(section.source),
                route: section.route.iter().map(|&l| LinkId(l)).collect(),
            };
            let fid = FlowId(section.destination);
            let (family, variance) = match section.arrival.family {
                ArrivalFamilySection::Poisson => (ArrivalFamily::Poisson, section.arrival.mean),
                ArrivalFamilySection::Deterministic => (ArrivalFamily::Deterministic, 0.0),
                ArrivalFamilySection::BernoulliBatch => {
                    let v = section.arrival.variance.ok_or_else(|| {
                        ScenarioError::Invalid("bernoulli-batch arrivals need an explicit variance".into())
                    })?;
                    (ArrivalFamily::BernoulliBatch, v)
                }
            };
            arrivals.entries.push(ArrivalEntry {
                node: NodeId(section.source),
                flow: fid,
                family,
                mean: section.arrival.mean,
                variance,
            });
            let target_queue = match (section.target_queue, section.target_delay) {
                (Some(q), None) => q,
                (None, Some(d)) => bpsim_core::scheduler::target_queue_from_delay(section.arrival.mean, d),
                (Some(_), Some(_)) => {
                    return Err(ScenarioError::Invalid(format!(
                        "flow to {} sets both target_queue and target_delay",
                        section.destination
                    )))
                }
                (None, None) => {
                    return Err(ScenarioError::Invalid(format!(
                        "flow to {} sets neither target_queue nor target_delay",
                        section.destination
                    )))
                }
            };
            policy.flows.push(FlowPolicy { a1: section.a1, a2: section.a2, target_queue });
            flows.push(flow);
        }

        Ok(NetworkSpec {
            node_count: self.network.nodes,
            links,
            interference_sets,
            flows,
            arrivals,
            channel,
            policy,
            rate_table: self.channel.rate_table.clone(),
        })
    }

    fn build_channel(&self, link_count: usize) -> Result<ChannelModel, ScenarioError> {
        match self.channel.kind {
            ChannelKind::UniformProduct => {
                let gains = self
                    .channel
                    .gains
                    .as_ref()
                    .ok_or_else(|| ScenarioError::Invalid("uniform-product channel needs `gains`".into()))?;
                let probs = vec![1.0 / gains.len() as f64; gains.len()];
                Ok(make_product_channel(gains, &probs, link_count, DEFAULT_PRODUCT_CAP)?)
            }
            ChannelKind::Explicit => {
                let states = self
                    .channel
                    .states
                    .clone()
                    .ok_or_else(|| ScenarioError::Invalid("explicit channel needs `states`".into()))?;
                let probs = self
                    .channel
                    .probs
                    .clone()
                    .ok_or_else(|| ScenarioError::Invalid("explicit channel needs `probs`".into()))?;
                Ok(ChannelModel { states, probs })
            }
        }
    }

    pub fn psi_mode(&self) -> Result<bpsim_core::capacity::PsiMode, ScenarioError> {
        match self.experiment.psi_mode.as_deref() {
            None | Some("aggregate") => Ok(bpsim_core::capacity::PsiMode::FlowAggregate),
            Some("full") => Ok(bpsim_core::capacity::PsiMode::FullQueue),
            Some(other) => Err(ScenarioError::Invalid(format!("unknown psi_mode '{other}'"))),
        }
    }

    pub fn arrival_means(&self) -> Vec<f64> {
        self.flows.iter().map(|f| f.arrival.mean).collect()
    }
}

/// The five-node star scenario as a file-level document, mirroring the
/// built-in preset; used to check the shipped example file stays in sync.
#[cfg(test)]
pub fn star_scenario(lambda: [f64; 2], targets: [f64; 2], a1: [f64; 2], a2: [f64; 2]) -> Scenario {
    Scenario {
        schema: SCENARIO_SCHEMA,
        name: "star".into(),
        network: NetworkSection {
            nodes: 5,
            links: vec![[0, 2], [1, 2], [2, 3], [2, 4]],
            interference: InterferenceSection::Named("node-exclusive".into()),
        },
        channel: ChannelSection {
            kind: ChannelKind::UniformProduct,
            gains: Some(vec![0, 1, 2, 3]),
            states: None,
            probs: None,
            rate_table: None,
        },
        flows: vec![
            FlowSection {
                source: 0,
                destination: 3,
                route: vec![0, 2],
                arrival: ArrivalSection { family: ArrivalFamilySection::Poisson, mean: lambda[0], variance: None },
                a1: a1[0],
                a2: a2[0],
                target_queue: Some(targets[0]),
                target_delay: None,
            },
            FlowSection {
                source: 1,
                destination: 4,
                route: vec![1, 3],
                arrival: ArrivalSection { family: ArrivalFamilySection::Poisson, mean: lambda[1], variance: None },
                a1: a1[1],
                a2: a2[1],
                target_queue: Some(targets[1]),
                target_delay: None,
            },
        ],
        experiment: ExperimentSection {
            horizon: 100_000,
            replications: 20,
            seed: 1,
            record_stride: Some(1000),
            psi_mode: Some("aggregate".into()),
            sigma_hat_sq: Some(8.0),
            lambda_star: Some(vec![0.65, 0.65]),
            initial_queues: None,
            burn_in: None,
        },
    }
}
