//! Canonical example scenarios, used by the table-reproduction commands and
//! throughout the test suite so the settings live in exactly one place.

use crate::scheduler::{FlowPolicy, PolicyParams};
use crate::stochastic::{uniform_product_channel, ArrivalEntry, ArrivalModel, ChannelModel};
use crate::topology::{Flow, FlowId, Link, LinkId, NetworkSpec, NodeId};

/// The five-node star: sources 0 and 1 feed relay 2, which forwards to sinks
/// 3 and 4. All four links share node 2, so they pairwise interfere and the
/// maximal schedules are the four singletons. Channels are i.i.d. uniform
/// over {0, 1, 2, 3} per link.
pub fn star_with_policy(
    lambda: [f64; 2],
    targets: [f64; 2],
    a1: [f64; 2],
    a2: [f64; 2],
) -> NetworkSpec {
    let links = vec![
        Link { from: NodeId(0), to: NodeId(2) },
        Link { from: NodeId(1), to: NodeId(2) },
        Link { from: NodeId(2), to: NodeId(3) },
        Link { from: NodeId(2), to: NodeId(4) },
    ];
    NetworkSpec {
        node_count: 5,
        interference_sets: crate::topology::node_exclusive_interference(5, &links),
        flows: vec![
            Flow { destination: NodeId(3), source: NodeId(0), route: vec![LinkId(0), LinkId(2)] },
            Flow { destination: NodeId(4), source: NodeId(1), route: vec![LinkId(1), LinkId(3)] },
        ],
        arrivals: ArrivalModel {
            entries: vec![
                ArrivalEntry::poisson(NodeId(0), FlowId(3), lambda[0]),
                ArrivalEntry::poisson(NodeId(1), FlowId(4), lambda[1]),
            ],
        },
        channel: uniform_product_channel(&[0, 1, 2, 3], links.len()).expect("small product"),
        policy: PolicyParams {
            flows: vec![
                FlowPolicy { a1: a1[0], a2: a2[0], target_queue: targets[0] },
                FlowPolicy { a1: a1[1], a2: a2[1], target_queue: targets[1] },
            ],
        },
        links,
        rate_table: None,
    }
}

/// The star scenario with both queue targets at 100.
pub fn star(lambda1: f64, lambda2: f64) -> NetworkSpec {
    star_with_policy([lambda1, lambda2], [100.0, 100.0], [1.0, 1.0], [1.0, 1.0])
}

/// The star scenario with asymmetric targets (250, 100) and the second flow's
/// weight steepness raised to 4.
pub fn star_asymmetric_targets(lambda: f64) -> NetworkSpec {
    star_with_policy([lambda, lambda], [250.0, 100.0], [1.0, 1.0], [1.0, 4.0])
}

/// Boundary point and workload direction used by the queue approximation for
/// the star scenario, as reported alongside it.
pub const STAR_BOUNDARY_POINT: [f64; 2] = [0.65, 0.65];

/// Service-variance override used by the queue approximation for the star
/// scenario.
pub const STAR_SIGMA_HAT_SQ: f64 = 8.0;

/// Minimal network: one source, one sink, one always-on link.
pub fn single_link(lambda: f64) -> NetworkSpec {
    single_link_with(ArrivalEntry::poisson(NodeId(0), FlowId(1), lambda), vec![1])
}

/// Single link with an explicit arrival entry; the channel is uniform over
/// the given gains (a single gain means an always-on constant channel).
pub fn single_link_with(arrival: ArrivalEntry, gains: Vec<u32>) -> NetworkSpec {
    let links = vec![Link { from: NodeId(0), to: NodeId(1) }];
    let count = gains.len();
    NetworkSpec {
        node_count: 2,
        interference_sets: vec![vec![LinkId(0)]],
        flows: vec![Flow { destination: NodeId(1), source: NodeId(0), route: vec![LinkId(0)] }],
        arrivals: ArrivalModel { entries: vec![arrival] },
        channel: ChannelModel {
            states: gains.into_iter().map(|g| vec![g]).collect(),
            probs: vec![1.0 / count as f64; count],
        },
        policy: PolicyParams { flows: vec![FlowPolicy { a1: 1.0, a2: 1.0, target_queue: 10.0 }] },
        links,
        rate_table: None,
    }
}

/// Two-hop tandem 0 -> 1 -> 2 with a single flow, node-exclusive interference.
pub fn two_hop_tandem(arrival: ArrivalEntry) -> NetworkSpec {
    let links = vec![
        Link { from: NodeId(0), to: NodeId(1) },
        Link { from: NodeId(1), to: NodeId(2) },
    ];
    NetworkSpec {
        node_count: 3,
        interference_sets: crate::topology::node_exclusive_interference(3, &links),
        flows: vec![Flow { destination: NodeId(2), source: NodeId(0), route: vec![LinkId(0), LinkId(1)] }],
        arrivals: ArrivalModel { entries: vec![arrival] },
        channel: uniform_product_channel(&[2], links.len()).expect("tiny product"),
        policy: PolicyParams { flows: vec![FlowPolicy { a1: 1.0, a2: 1.0, target_queue: 10.0 }] },
        links,
        rate_table: None,
    }
}
