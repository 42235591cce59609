//! Per-slot control policy: logistic queue weights, backpressure
//! differentials, and the weighted-rate maximization over feasible schedules,
//! together with an exhaustive oracle used for verification.

use thiserror::Error;

use crate::topology::{LinkId, Network};

/// Queue lengths over the network's queue space, in packets.
pub type QueueState = [u64];

#[derive(Debug, Error)]
pub enum SchedulerError {
    #[error("oracle instance too large: {size} combinations exceed the cap of {cap}")]
    InstanceTooLarge { size: u128, cap: u128 },
    #[error("queue state has {got} entries, expected {expected}")]
    QueueDimensionMismatch { got: usize, expected: usize },
}

/// Per-flow weight parameters: amplitude `a1`, steepness `a2` (1/packets),
/// and the target aggregate queue length (packets).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPolicy {
    pub a1: f64,
    pub a2: f64,
    pub target_queue: f64,
}

impl FlowPolicy {
    /// Derives the queue target from a mean-delay target via Little's law.
    pub fn from_delay(a1: f64, a2: f64, arrival_rate: f64, target_delay: f64) -> Self {
        FlowPolicy { a1, a2, target_queue: target_queue_from_delay(arrival_rate, target_delay) }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.a1.is_finite() || self.a1 < 0.0 {
            return Err(format!("a1 = {} must be finite and >= 0", self.a1));
        }
        if !self.a2.is_finite() || self.a2 <= 0.0 {
            return Err(format!("a2 = {} must be finite and > 0", self.a2));
        }
        if !self.target_queue.is_finite() || self.target_queue < 0.0 {
            return Err(format!("target queue {} must be finite and >= 0", self.target_queue));
        }
        Ok(())
    }
}

/// Control parameters, one entry per flow in declaration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolicyParams {
    pub flows: Vec<FlowPolicy>,
}

/// The logistic weight `1 + a1 / (1 + exp(-a2 (x - target)))`.
///
/// Monotone nondecreasing in `x` with range (1, 1 + a1); the exponent is
/// clamped so extreme inputs saturate at exactly 1 or 1 + a1.
pub fn weight(x: f64, target: f64, a1: f64, a2: f64) -> f64 {
    let z = a2 * (x - target);
    if z >= 700.0 {
        1.0 + a1
    } else if z <= -700.0 {
        1.0
    } else {
        1.0 + a1 / (1.0 + (-z).exp())
    }
}

/// Queue target for a mean-delay target via Little's law.
pub fn target_queue_from_delay(arrival_rate: f64, target_delay: f64) -> f64 {
    arrival_rate * target_delay
}

/// Backpressure differentials and aggregate flow queues for one slot.
#[derive(Debug, Clone)]
pub struct Backpressure {
    /// Per link, aligned with [`Network::link_flows`]: the differential
    /// max(Q_i^f - Q_j^f, 0) of each flow routed over the link.
    pub link_differentials: Vec<Vec<u64>>,
    /// Aggregate queue per flow: sum of the flow's route queues.
    pub flow_totals: Vec<u64>,
}

/// Computes max(Q_i^f - Q_j^f, 0) per (link, routed flow), with the
/// destination queue identically zero, and the per-flow aggregate queues.
pub fn backpressure(queues: &QueueState, net: &Network) -> Result<Backpressure, SchedulerError> {
    if queues.len() != net.queue_count() {
        return Err(SchedulerError::QueueDimensionMismatch {
            got: queues.len(),
            expected: net.queue_count(),
        });
    }
    let mut flow_totals = vec![0u64; net.flow_count()];
    for (qi, &q) in queues.iter().enumerate() {
        flow_totals[net.flow_of_queue(qi)] += q;
    }
    let mut link_differentials = Vec::with_capacity(net.link_count());
    for link in 0..net.link_count() {
        let link = LinkId(link as u32);
        let diffs = net
            .link_flows(link)
            .iter()
            .map(|&(fi, hop)| {
                let up = queues[net.route_queues(fi)[hop]];
                let down = net.downstream_queue(link, fi).map_or(0, |dq| queues[dq]);
                up.saturating_sub(down)
            })
            .collect();
        link_differentials.push(diffs);
    }
    Ok(Backpressure { link_differentials, flow_totals })
}

/// One slot's scheduling decision: the activated links and, per link, the
/// served flow, the offered rate, and the actual served count (truncated to
/// the upstream queue content at slot start).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    /// Index into [`Network::schedules`], None when nothing is served.
    pub schedule: Option<usize>,
    pub entries: Vec<ServiceDecision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceDecision {
    pub link: LinkId,
    pub flow_index: usize,
    pub offered: u64,
    pub served: u64,
}

impl Allocation {
    pub fn empty() -> Self {
        Allocation { schedule: None, entries: Vec::new() }
    }
}

fn per_flow_weights(bp: &Backpressure, params: &PolicyParams) -> Vec<f64> {
    bp.flow_totals
        .iter()
        .zip(&params.flows)
        .map(|(&total, p)| weight(total as f64, p.target_queue, p.a1, p.a2))
        .collect()
}

/// Maximizes the weighted backpressure objective
/// sum over (i,j,f) of alpha(Q^f) * Q_ij^f * mu_ij^f
/// over the enumerated maximal schedules, assigning each activated link to
/// the best eligible flow. A (link, flow) pair with zero differential or zero
/// rate is never served. Ties break to the lowest schedule index, then the
/// lowest flow id; if every differential is zero the allocation is empty.
pub fn solve_schedule(
    queues: &QueueState,
    state: usize,
    net: &Network,
    params: &PolicyParams,
) -> Result<Allocation, SchedulerError> {
    let bp = backpressure(queues, net)?;
    let alphas = per_flow_weights(&bp, params);

    let mut best_objective = 0.0f64;
    let mut best: Option<(usize, Vec<ServiceDecision>)> = None;
    let mut entries = Vec::new();

    for (sid, schedule) in net.schedules().iter().enumerate() {
        let mut objective = 0.0f64;
        entries.clear();
        for &link in &schedule.links {
            let rate = net.rate(state, link);
            if rate == 0 {
                continue;
            }
            let mut link_best = 0.0f64;
            let mut chosen: Option<(usize, usize)> = None;
            for (pos, &(fi, hop)) in net.link_flows(link).iter().enumerate() {
                let diff = bp.link_differentials[link.0 as usize][pos];
                if diff == 0 {
                    continue;
                }
                let contribution = alphas[fi] * diff as f64 * rate as f64;
                if contribution > link_best {
                    link_best = contribution;
                    chosen = Some((fi, hop));
                }
            }
            if let Some((fi, hop)) = chosen {
                objective += link_best;
                let up = queues[net.route_queues(fi)[hop]];
                entries.push(ServiceDecision {
                    link,
                    flow_index: fi,
                    offered: rate,
                    served: rate.min(up),
                });
            }
        }
        if objective > best_objective {
            best_objective = objective;
            best = Some((sid, entries.clone()));
        }
    }

    Ok(match best {
        Some((sid, entries)) => Allocation { schedule: Some(sid), entries },
        None => Allocation::empty(),
    })
}

/// Objective value of an allocation under the current queue state, summed in
/// entry order (matching the construction order inside the solvers).
pub fn allocation_objective(
    queues: &QueueState,
    net: &Network,
    params: &PolicyParams,
    allocation: &Allocation,
) -> Result<f64, SchedulerError> {
    let bp = backpressure(queues, net)?;
    let alphas = per_flow_weights(&bp, params);
    let mut objective = 0.0f64;
    for entry in &allocation.entries {
        let pos = net
            .link_flows(entry.link)
            .iter()
            .position(|&(fi, _)| fi == entry.flow_index)
            .expect("allocation serves a routed flow");
        let diff = bp.link_differentials[entry.link.0 as usize][pos];
        objective += alphas[entry.flow_index] * diff as f64 * entry.offered as f64;
    }
    Ok(objective)
}

/// Exhaustive maximization result.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub allocation: Allocation,
    pub objective: f64,
}

/// Brute-force reference optimizer: evaluates the objective over every
/// (schedule, per-link flow choice) combination. Same tie-breaking as
/// [`solve_schedule`]; intended for small instances.
pub fn oracle_solve_schedule(
    queues: &QueueState,
    state: usize,
    net: &Network,
    params: &PolicyParams,
    cap: u128,
) -> Result<OracleSolution, SchedulerError> {
    let size = net.schedules().len() as u128 * net.flow_count().max(1) as u128;
    if size > cap {
        return Err(SchedulerError::InstanceTooLarge { size, cap });
    }
    let bp = backpressure(queues, net)?;
    let alphas = per_flow_weights(&bp, params);

    let mut best_objective = 0.0f64;
    let mut best: Option<(usize, Vec<ServiceDecision>)> = None;

    for (sid, schedule) in net.schedules().iter().enumerate() {
        // Per-link choice lists: None (idle) first, then eligible flows in
        // flow-id order. Eligible means routed over the link with positive
        // differential and positive rate.
        let mut choice_lists: Vec<Vec<Option<(usize, usize)>>> = Vec::new();
        let mut combos: u128 = 1;
        for &link in &schedule.links {
            let rate = net.rate(state, link);
            let mut choices: Vec<Option<(usize, usize)>> = vec![None];
            if rate > 0 {
                for (pos, &(fi, hop)) in net.link_flows(link).iter().enumerate() {
                    if bp.link_differentials[link.0 as usize][pos] > 0 {
                        choices.push(Some((fi, hop)));
                    }
                }
            }
            combos = combos.saturating_mul(choices.len() as u128);
            choice_lists.push(choices);
        }
        if combos > cap {
            return Err(SchedulerError::InstanceTooLarge { size: combos, cap });
        }

        let mut indices = vec![0usize; choice_lists.len()];
        loop {
            let mut objective = 0.0f64;
            let mut entries = Vec::new();
            for (li, &link) in schedule.links.iter().enumerate() {
                if let Some((fi, hop)) = choice_lists[li][indices[li]] {
                    let rate = net.rate(state, link);
                    let pos = net
                        .link_flows(link)
                        .iter()
                        .position(|&(f, _)| f == fi)
                        .expect("choice is routed");
                    let diff = bp.link_differentials[link.0 as usize][pos];
                    objective += alphas[fi] * diff as f64 * rate as f64;
                    let up = queues[net.route_queues(fi)[hop]];
                    entries.push(ServiceDecision { link, flow_index: fi, offered: rate, served: rate.min(up) });
                }
            }
            if objective > best_objective {
                best_objective = objective;
                best = Some((sid, entries));
            }
            // Mixed-radix increment, last link fastest: combinations are
            // visited in lexicographic per-link choice order.
            let mut pos = choice_lists.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                indices[pos] += 1;
                if indices[pos] < choice_lists[pos].len() {
                    break;
                }
                indices[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX || choice_lists.is_empty() {
                break;
            }
        }
    }

    Ok(match best {
        Some((sid, entries)) => {
            OracleSolution { allocation: Allocation { schedule: Some(sid), entries }, objective: best_objective }
        }
        None => OracleSolution { allocation: Allocation::empty(), objective: 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{star, single_link};
    use crate::stochastic::RngStream;
    use crate::topology::FlowId;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn weight_at_target_is_midpoint() {
        assert_relative_eq!(weight(100.0, 100.0, 1.0, 1.0), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn weight_saturates_at_asymptotes() {
        assert_eq!(weight(-1e12, 0.0, 1.0, 1.0), 1.0);
        assert_eq!(weight(1e12, 0.0, 1.0, 1.0), 2.0);
        assert_eq!(weight(f64::MIN, 0.0, 2.5, 4.0), 1.0);
        assert_eq!(weight(f64::MAX, 0.0, 2.5, 4.0), 3.5);
    }

    #[test]
    fn weight_matches_high_precision_value() {
        // 1 + 1/(1 + e^-4)
        assert_relative_eq!(weight(1.0, 0.0, 1.0, 4.0), 1.9820137900379085, epsilon = 1e-12);
    }

    #[test]
    fn weight_is_monotone_and_bounded() {
        let mut prev = 0.0;
        for i in 0..=2000 {
            let x = -100.0 + i as f64 * 0.1;
            let w = weight(x, 3.0, 2.0, 0.7);
            assert!(w >= prev);
            assert!(w >= 1.0 && w <= 3.0);
            prev = w;
        }
    }

    #[test]
    fn backpressure_matches_definitions() {
        let net = Network::compile(star(0.64, 0.64)).unwrap();
        // Queue order: (0, f3), (2, f3), (1, f4), (2, f4).
        let queues = vec![5, 2, 0, 0];
        let bp = backpressure(&queues, &net).unwrap();
        // Link 0 carries flow index 0 upstream 5, downstream 2.
        assert_eq!(bp.link_differentials[0], vec![3]);
        // Link 2 is the final hop of flow 0: differential equals the relay queue.
        assert_eq!(bp.link_differentials[2], vec![2]);
        assert_eq!(bp.flow_totals, vec![7, 0]);

        let zeros = vec![0, 0, 0, 0];
        let bp = backpressure(&zeros, &net).unwrap();
        assert!(bp.link_differentials.iter().all(|d| d.iter().all(|&x| x == 0)));
        assert_eq!(bp.flow_totals, vec![0, 0]);
    }

    /// Channel state index with the given per-link gains, for test setup.
    fn state_with_gains(net: &Network, gains: &[u32]) -> usize {
        net.spec()
            .channel
            .states
            .iter()
            .position(|s| s == gains)
            .expect("state exists")
    }

    #[test]
    fn solve_picks_heaviest_backlog_times_rate() {
        let net = Network::compile(star(0.64, 0.64)).unwrap();
        let queues = vec![10, 0, 0, 4];
        let h = state_with_gains(&net, &[2, 3, 1, 2]);
        let alloc = solve_schedule(&queues, h, &net, &net.spec().policy).unwrap();
        assert_eq!(alloc.schedule, Some(0));
        assert_eq!(alloc.entries.len(), 1);
        let e = alloc.entries[0];
        assert_eq!(e.link, LinkId(0));
        assert_eq!(e.flow_index, 0);
        assert_eq!(e.offered, 2);
        assert_eq!(e.served, 2);
        let obj = allocation_objective(&queues, &net, &net.spec().policy, &alloc).unwrap();
        assert_eq!(obj, 20.0);

        let oracle = oracle_solve_schedule(&queues, h, &net, &net.spec().policy, 100_000).unwrap();
        assert_eq!(oracle.objective, 20.0);
        assert_eq!(oracle.allocation, alloc);
    }

    #[test]
    fn all_zero_queues_yield_empty_allocation() {
        let net = Network::compile(star(0.64, 0.64)).unwrap();
        let queues = vec![0, 0, 0, 0];
        let alloc = solve_schedule(&queues, 255, &net, &net.spec().policy).unwrap();
        assert_eq!(alloc, Allocation::empty());
    }

    #[test]
    fn all_zero_gains_yield_empty_allocation() {
        let net = Network::compile(star(0.64, 0.64)).unwrap();
        let queues = vec![10, 5, 3, 1];
        let h = state_with_gains(&net, &[0, 0, 0, 0]);
        let oracle = oracle_solve_schedule(&queues, h, &net, &net.spec().policy, 100_000).unwrap();
        assert_eq!(oracle.objective, 0.0);
        assert_eq!(oracle.allocation, Allocation::empty());
        assert_eq!(solve_schedule(&queues, h, &net, &net.spec().policy).unwrap(), Allocation::empty());
    }

    #[test]
    fn single_link_serves_its_only_flow() {
        let net = Network::compile(single_link(0.5)).unwrap();
        let queues = vec![7];
        let alloc = solve_schedule(&queues, 0, &net, &net.spec().policy).unwrap();
        assert_eq!(alloc.schedule, Some(0));
        assert_eq!(alloc.entries[0].offered, 1);
        assert_eq!(alloc.entries[0].served, 1);
    }

    #[test]
    fn served_is_truncated_to_queue_content() {
        let mut spec = single_link(0.5);
        spec.channel = crate::stochastic::ChannelModel::single_state(vec![5]);
        let net = Network::compile(spec).unwrap();
        let alloc = solve_schedule(&[3], 0, &net, &net.spec().policy).unwrap();
        assert_eq!(alloc.entries[0].offered, 5);
        assert_eq!(alloc.entries[0].served, 3);
    }

    #[test]
    fn target_queue_from_delay_examples() {
        assert_relative_eq!(target_queue_from_delay(0.65, 153.8), 100.0, epsilon = 0.05);
        assert_eq!(target_queue_from_delay(0.0, 100.0), 0.0);
        assert_eq!(target_queue_from_delay(0.5, 200.0), 100.0);
    }

    /// Random small instances for the argmax equivalence and scaling
    /// covariance properties.
    fn random_instance(rng: &mut RngStream) -> (Network, Vec<u64>, usize) {
        use crate::stochastic::{uniform_product_channel, ArrivalEntry, ArrivalModel};
        use crate::topology::{node_exclusive_interference, Flow, Link, NetworkSpec, NodeId};

        // A two-relay diamond: sources 0 and 1, relays 2 and 3, sinks 4 and 5.
        let links = vec![
            Link { from: NodeId(0), to: NodeId(2) },
            Link { from: NodeId(1), to: NodeId(3) },
            Link { from: NodeId(2), to: NodeId(4) },
            Link { from: NodeId(3), to: NodeId(5) },
            Link { from: NodeId(2), to: NodeId(5) },
        ];
        let flows = vec![
            Flow { destination: NodeId(4), source: NodeId(0), route: vec![LinkId(0), LinkId(2)] },
            Flow { destination: NodeId(5), source: NodeId(1), route: vec![LinkId(1), LinkId(3)] },
        ];
        let policy = PolicyParams {
            flows: vec![
                FlowPolicy { a1: rng.random_range(0.0..2.0), a2: 0.5, target_queue: 5.0 },
                FlowPolicy { a1: rng.random_range(0.0..2.0), a2: 2.0, target_queue: 3.0 },
            ],
        };
        let spec = NetworkSpec {
            node_count: 6,
            interference_sets: node_exclusive_interference(6, &links),
            arrivals: ArrivalModel {
                entries: vec![
                    ArrivalEntry::poisson(NodeId(0), FlowId(4), 0.3),
                    ArrivalEntry::poisson(NodeId(1), FlowId(5), 0.3),
                ],
            },
            channel: uniform_product_channel(&[0, 1, 2, 3], links.len()).unwrap(),
            links,
            flows,
            policy,
            rate_table: None,
        };
        let net = Network::compile(spec).unwrap();
        let queues: Vec<u64> = (0..net.queue_count()).map(|_| rng.random_range(0..20)).collect();
        let h = rng.random_range(0..net.spec().channel.state_count());
        (net, queues, h)
    }

    #[test]
    fn solver_matches_oracle_on_random_instances() {
        let mut rng = RngStream::new(1234, 0);
        for _ in 0..200 {
            let (net, queues, h) = random_instance(&mut rng);
            let alloc = solve_schedule(&queues, h, &net, &net.spec().policy).unwrap();
            let oracle = oracle_solve_schedule(&queues, h, &net, &net.spec().policy, 100_000).unwrap();
            let obj = allocation_objective(&queues, &net, &net.spec().policy, &alloc).unwrap();
            assert_eq!(obj, oracle.objective);
            assert_eq!(alloc, oracle.allocation);
        }
    }

    #[test]
    fn argmax_invariant_under_common_queue_scaling() {
        // Scaling all differentials by c > 0 with the weights held fixed
        // keeps the maximizing allocation. Freeze alpha by setting a1 = 0.
        let mut rng = RngStream::new(77, 0);
        for _ in 0..100 {
            let (net, queues, h) = random_instance(&mut rng);
            let params = PolicyParams {
                flows: net.spec().policy.flows.iter().map(|p| FlowPolicy { a1: 0.0, ..*p }).collect(),
            };
            let base = solve_schedule(&queues, h, &net, &params).unwrap();
            let scaled: Vec<u64> = queues.iter().map(|&q| q * 3).collect();
            let scaled_alloc = solve_schedule(&scaled, h, &net, &params).unwrap();
            assert_eq!(base.schedule, scaled_alloc.schedule);
            let pairs = |a: &Allocation| a.entries.iter().map(|e| (e.link, e.flow_index)).collect::<Vec<_>>();
            assert_eq!(pairs(&base), pairs(&scaled_alloc));
        }
    }

    #[test]
    fn work_conservation_on_the_chosen_links() {
        // The chosen allocation never leaves a positive-differential flow idle
        // on a link it activates for a zero-differential one; zero-differential
        // pairs are simply never served.
        let mut rng = RngStream::new(555, 0);
        for _ in 0..200 {
            let (net, queues, h) = random_instance(&mut rng);
            let bp = backpressure(&queues, &net).unwrap();
            let alloc = solve_schedule(&queues, h, &net, &net.spec().policy).unwrap();
            for e in &alloc.entries {
                let pos = net.link_flows(e.link).iter().position(|&(fi, _)| fi == e.flow_index).unwrap();
                assert!(bp.link_differentials[e.link.0 as usize][pos] > 0);
                assert!(e.offered > 0);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn weight_stays_in_band_and_monotone(
            x in -1e6f64..1e6,
            dx in 0.0f64..1e5,
            target in -1e3f64..1e3,
            a1 in 0.0f64..10.0,
            a2 in 1e-3f64..10.0,
        ) {
            let w = weight(x, target, a1, a2);
            proptest::prop_assert!(w >= 1.0 && w <= 1.0 + a1);
            proptest::prop_assert!(weight(x + dx, target, a1, a2) >= w);
        }
    }

    #[test]
    fn oracle_cap_is_enforced() {
        let net = Network::compile(star(0.5, 0.5)).unwrap();
        match oracle_solve_schedule(&[1, 1, 1, 1], 0, &net, &net.spec().policy, 1) {
            Err(SchedulerError::InstanceTooLarge { .. }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }
}
