//! Network declaration and validation: nodes, directed links, fixed-route
//! flows, interference sets, and enumeration of feasible link schedules.
//!
//! A flow is identified by its destination node: all traffic destined to node
//! `f` is flow `f`, and follows one fixed route. Interference is declared via
//! explicit link sets; at most one link per set may transmit in a slot.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::scheduler::PolicyParams;
use crate::stochastic::{ArrivalModel, ChannelModel};

/// Hard limit of the schedule enumerator's bitmask representation.
pub const MAX_LINKS: usize = 128;

/// Default cap on the number of maximal schedules emitted by enumeration.
pub const DEFAULT_SCHEDULE_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Dense index into [`NetworkSpec::links`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub u32);

/// A flow id equals its destination node id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A directed link from one node to another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
}

/// One traffic stream with a fixed route to its destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    /// Destination node; doubles as the flow id.
    pub destination: NodeId,
    pub source: NodeId,
    /// Route as a link sequence from source to destination.
    pub route: Vec<LinkId>,
}

impl Flow {
    pub fn id(&self) -> FlowId {
        FlowId(self.destination.0)
    }
}

/// The full scenario: topology, flows, interference structure, and the
/// stochastic and policy models attached to them.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    pub node_count: u32,
    pub links: Vec<Link>,
    /// Interference sets I_1..I_M over link ids; at most one link per set may
    /// be active in a slot. A link may belong to multiple sets.
    pub interference_sets: Vec<Vec<LinkId>>,
    pub flows: Vec<Flow>,
    pub arrivals: ArrivalModel,
    pub channel: ChannelModel,
    pub policy: PolicyParams,
    /// Optional map gain -> offered rate (packets/slot). Default: rate = gain.
    pub rate_table: Option<Vec<u64>>,
}

/// A feasible set of simultaneously active links, sorted by link id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub links: Vec<LinkId>,
}

impl Schedule {
    pub fn contains(&self, link: LinkId) -> bool {
        self.links.binary_search(&link).is_ok()
    }
}

/// A single invariant violation found by [`validate_network`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    LinkEndpointOutOfRange { link: LinkId },
    SelfLoopLink { link: LinkId },
    DuplicateLink { link: LinkId },
    EmptyInterferenceSet { set: usize },
    DuplicateLinkInInterferenceSet { set: usize, link: LinkId },
    UnknownLinkInInterferenceSet { set: usize, link: LinkId },
    UninterferedLink { link: LinkId },
    DuplicateFlowDestination { flow: FlowId },
    FlowSourceIsDestination { flow: FlowId },
    EmptyRoute { flow: FlowId },
    RouteUsesUnknownLink { flow: FlowId, link: LinkId },
    RouteNotConnected { flow: FlowId, hop: usize },
    RouteWrongEndpoints { flow: FlowId },
    RouteRevisitsNode { flow: FlowId, node: NodeId },
    ArrivalEntryUnknownFlow { flow: FlowId },
    ArrivalEntryNotAtSource { flow: FlowId, node: NodeId },
    ArrivalEntryMissing { flow: FlowId },
    ArrivalEntryDuplicate { flow: FlowId },
    ArrivalModelInvalid { flow: FlowId, reason: String },
    ChannelModelInvalid { reason: String },
    ChannelStateWrongWidth { state: usize },
    PolicyParamCountMismatch,
    PolicyParamInvalid { flow_index: usize, reason: String },
    RateTableTooShort { max_gain: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            LinkEndpointOutOfRange { link } => write!(f, "link {link} has an endpoint outside the node range"),
            SelfLoopLink { link } => write!(f, "link {link} is a self-loop"),
            DuplicateLink { link } => write!(f, "link {link} duplicates an earlier link"),
            EmptyInterferenceSet { set } => write!(f, "interference set {set} is empty"),
            DuplicateLinkInInterferenceSet { set, link } => {
                write!(f, "interference set {set} lists link {link} twice")
            }
            UnknownLinkInInterferenceSet { set, link } => {
                write!(f, "interference set {set} references unknown link {link}")
            }
            UninterferedLink { link } => write!(f, "link {link} belongs to no interference set"),
            DuplicateFlowDestination { flow } => write!(f, "more than one flow destined to node {flow}"),
            FlowSourceIsDestination { flow } => write!(f, "flow {flow} has source equal to destination"),
            EmptyRoute { flow } => write!(f, "flow {flow} has an empty route"),
            RouteUsesUnknownLink { flow, link } => write!(f, "route of flow {flow} uses unknown link {link}"),
            RouteNotConnected { flow, hop } => write!(f, "route of flow {flow} is disconnected at hop {hop}"),
            RouteWrongEndpoints { flow } => write!(f, "route of flow {flow} does not run source to destination"),
            RouteRevisitsNode { flow, node } => write!(f, "route of flow {flow} visits node {node} twice"),
            ArrivalEntryUnknownFlow { flow } => write!(f, "arrival entry references unknown flow {flow}"),
            ArrivalEntryNotAtSource { flow, node } => {
                write!(f, "arrival entry for flow {flow} is at node {node}, not the flow source")
            }
            ArrivalEntryMissing { flow } => write!(f, "flow {flow} has no arrival entry"),
            ArrivalEntryDuplicate { flow } => write!(f, "flow {flow} has more than one arrival entry"),
            ArrivalModelInvalid { flow, reason } => write!(f, "arrival model of flow {flow} invalid: {reason}"),
            ChannelModelInvalid { reason } => write!(f, "channel model invalid: {reason}"),
            ChannelStateWrongWidth { state } => {
                write!(f, "channel state {state} does not carry one gain per link")
            }
            PolicyParamCountMismatch => write!(f, "policy parameter count does not match flow count"),
            PolicyParamInvalid { flow_index, reason } => {
                write!(f, "policy params for flow index {flow_index} invalid: {reason}")
            }
            RateTableTooShort { max_gain } => {
                write!(f, "rate table does not cover the maximum channel gain {max_gain}")
            }
        }
    }
}

/// Outcome of validation; violations are data, not failures.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            for v in &self.violations {
                writeln!(f, "violation: {v}")?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("network spec is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("schedule enumeration exceeded the cap of {cap}")]
    ScheduleCapExceeded { cap: usize },
    #[error("too many links for schedule enumeration ({count} > {MAX_LINKS})")]
    TooManyLinks { count: usize },
}

/// Checks every declared invariant of the spec and reports all violations.
pub fn validate_network(spec: &NetworkSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let n = spec.node_count;

    let mut seen_links: HashMap<(u32, u32), LinkId> = HashMap::new();
    for (idx, link) in spec.links.iter().enumerate() {
        let id = LinkId(idx as u32);
        if link.from.0 >= n || link.to.0 >= n {
            violations.push(Violation::LinkEndpointOutOfRange { link: id });
        }
        if link.from == link.to {
            violations.push(Violation::SelfLoopLink { link: id });
        }
        if seen_links.insert((link.from.0, link.to.0), id).is_some() {
            violations.push(Violation::DuplicateLink { link: id });
        }
    }

    let mut interfered = vec![false; spec.links.len()];
    for (set_idx, set) in spec.interference_sets.iter().enumerate() {
        if set.is_empty() {
            violations.push(Violation::EmptyInterferenceSet { set: set_idx });
        }
        let mut seen = Vec::with_capacity(set.len());
        for &link in set {
            if seen.contains(&link) {
                violations.push(Violation::DuplicateLinkInInterferenceSet { set: set_idx, link });
            }
            seen.push(link);
            match interfered.get_mut(link.0 as usize) {
                Some(slot) => *slot = true,
                None => violations.push(Violation::UnknownLinkInInterferenceSet { set: set_idx, link }),
            }
        }
    }
    for (idx, covered) in interfered.iter().enumerate() {
        if !covered {
            violations.push(Violation::UninterferedLink { link: LinkId(idx as u32) });
        }
    }

    let mut destinations = HashMap::new();
    for flow in &spec.flows {
        let fid = flow.id();
        if destinations.insert(flow.destination, ()).is_some() {
            violations.push(Violation::DuplicateFlowDestination { flow: fid });
        }
        if flow.source == flow.destination {
            violations.push(Violation::FlowSourceIsDestination { flow: fid });
        }
        if flow.route.is_empty() {
            violations.push(Violation::EmptyRoute { flow: fid });
            continue;
        }
        let mut broken = false;
        for (hop, &lid) in flow.route.iter().enumerate() {
            let Some(link) = spec.links.get(lid.0 as usize) else {
                violations.push(Violation::RouteUsesUnknownLink { flow: fid, link: lid });
                broken = true;
                continue;
            };
            if hop > 0 && !broken {
                let prev = spec.links[flow.route[hop - 1].0 as usize];
                if prev.to != link.from {
                    violations.push(Violation::RouteNotConnected { flow: fid, hop });
                    broken = true;
                }
            }
        }
        if !broken {
            let first = spec.links[flow.route[0].0 as usize];
            let last = spec.links[flow.route[flow.route.len() - 1].0 as usize];
            if first.from != flow.source || last.to != flow.destination {
                violations.push(Violation::RouteWrongEndpoints { flow: fid });
            }
            let mut visited = vec![first.from];
            for &lid in &flow.route {
                let to = spec.links[lid.0 as usize].to;
                if visited.contains(&to) {
                    violations.push(Violation::RouteRevisitsNode { flow: fid, node: to });
                    break;
                }
                visited.push(to);
            }
        }
    }

    // Exogenous arrivals enter exactly once per flow, at the flow source.
    let mut entry_counts: HashMap<FlowId, usize> = HashMap::new();
    for entry in &spec.arrivals.entries {
        let Some(flow) = spec.flows.iter().find(|fl| fl.id() == entry.flow) else {
            violations.push(Violation::ArrivalEntryUnknownFlow { flow: entry.flow });
            continue;
        };
        if entry.node != flow.source {
            violations.push(Violation::ArrivalEntryNotAtSource { flow: entry.flow, node: entry.node });
        }
        *entry_counts.entry(entry.flow).or_insert(0) += 1;
        if let Err(reason) = entry.validate() {
            violations.push(Violation::ArrivalModelInvalid { flow: entry.flow, reason });
        }
    }
    for flow in &spec.flows {
        match entry_counts.get(&flow.id()) {
            None => violations.push(Violation::ArrivalEntryMissing { flow: flow.id() }),
            Some(1) => {}
            Some(_) => violations.push(Violation::ArrivalEntryDuplicate { flow: flow.id() }),
        }
    }

    if let Err(reason) = spec.channel.validate() {
        violations.push(Violation::ChannelModelInvalid { reason });
    } else {
        for (idx, state) in spec.channel.states.iter().enumerate() {
            if state.len() != spec.links.len() {
                violations.push(Violation::ChannelStateWrongWidth { state: idx });
            }
        }
        if let Some(table) = &spec.rate_table {
            let max_gain = spec.channel.states.iter().flatten().copied().max().unwrap_or(0);
            if table.len() <= max_gain as usize {
                violations.push(Violation::RateTableTooShort { max_gain: max_gain as u64 });
            }
        }
    }

    if spec.policy.flows.len() != spec.flows.len() {
        violations.push(Violation::PolicyParamCountMismatch);
    }
    for (idx, p) in spec.policy.flows.iter().enumerate() {
        if let Err(reason) = p.validate() {
            violations.push(Violation::PolicyParamInvalid { flow_index: idx, reason });
        }
    }

    ValidationReport { violations }
}

/// Builds the "links sharing a common node interfere" sets: one set per node,
/// containing every link incident to it.
pub fn node_exclusive_interference(node_count: u32, links: &[Link]) -> Vec<Vec<LinkId>> {
    let mut sets: Vec<Vec<LinkId>> = vec![Vec::new(); node_count as usize];
    for (idx, link) in links.iter().enumerate() {
        let id = LinkId(idx as u32);
        if (link.from.0 as usize) < sets.len() {
            sets[link.from.0 as usize].push(id);
        }
        if (link.to.0 as usize) < sets.len() && link.to != link.from {
            sets[link.to.0 as usize].push(id);
        }
    }
    sets.retain(|s| !s.is_empty());
    sets
}

/// Enumerates every inclusion-maximal feasible schedule, in lexicographic
/// order of the sorted link-id sequences.
///
/// The per-set "at most one active" constraint is equivalent to pairwise
/// conflicts between co-members, so feasible sets are independent sets of the
/// conflict graph and the output is its maximal independent sets.
pub fn enumerate_schedules(spec: &NetworkSpec, cap: usize) -> Result<Vec<Schedule>, TopologyError> {
    let link_count = spec.links.len();
    if link_count == 0 {
        return Ok(Vec::new());
    }
    if link_count > MAX_LINKS {
        return Err(TopologyError::TooManyLinks { count: link_count });
    }

    let mut conflicts = vec![0u128; link_count];
    for set in &spec.interference_sets {
        for &a in set {
            for &b in set {
                if a != b {
                    conflicts[a.0 as usize] |= 1u128 << b.0;
                }
            }
        }
    }

    let mut out = Vec::new();
    let mut visits: u64 = 0;
    let visit_cap = (cap as u64).saturating_mul(64).max(1 << 22);
    let mut stack_err: Option<TopologyError> = None;

    // Include-first depth-first search yields lexicographic order directly.
    fn rec(
        next: usize,
        chosen: u128,
        conflicts: &[u128],
        cap: usize,
        visits: &mut u64,
        visit_cap: u64,
        out: &mut Vec<Schedule>,
        err: &mut Option<TopologyError>,
    ) {
        if err.is_some() {
            return;
        }
        *visits += 1;
        if *visits > visit_cap {
            *err = Some(TopologyError::ScheduleCapExceeded { cap });
            return;
        }
        if next == conflicts.len() {
            // Maximal iff no remaining link is compatible with the choice.
            for (j, cf) in conflicts.iter().enumerate() {
                let bit = 1u128 << j;
                if chosen & bit == 0 && cf & chosen == 0 {
                    return;
                }
            }
            if out.len() >= cap {
                *err = Some(TopologyError::ScheduleCapExceeded { cap });
                return;
            }
            let links = (0..conflicts.len())
                .filter(|&j| chosen & (1u128 << j) != 0)
                .map(|j| LinkId(j as u32))
                .collect();
            out.push(Schedule { links });
            return;
        }
        let bit = 1u128 << next;
        if conflicts[next] & chosen == 0 {
            rec(next + 1, chosen | bit, conflicts, cap, visits, visit_cap, out, err);
        }
        rec(next + 1, chosen, conflicts, cap, visits, visit_cap, out, err);
    }

    rec(0, 0, &conflicts, cap, &mut visits, visit_cap, &mut out, &mut stack_err);
    match stack_err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// A validated spec with the derived lookup structures the per-slot code
/// needs: the queue space, per-link eligible flows, route positions, and the
/// enumerated schedules.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    schedules: Vec<Schedule>,
    /// Queue space: one entry per (node on a flow's route, flow), destination
    /// excluded. Order: flows in declaration order, route order within a flow.
    queues: Vec<(NodeId, FlowId)>,
    /// node_count * flow_count lookup into `queues`.
    queue_lookup: Vec<Option<usize>>,
    /// Per link: (flow index, hop position) of flows routed over it.
    link_flows: Vec<Vec<(usize, usize)>>,
    /// Per flow: queue index of each hop's upstream node.
    route_queues: Vec<Vec<usize>>,
    /// Per (link, flow index on it): queue index at the link head, None if the
    /// head is the flow destination.
    downstream: HashMap<(u32, usize), Option<usize>>,
    flow_index: HashMap<FlowId, usize>,
}

impl Network {
    /// Validates the spec and precomputes the derived structures, enumerating
    /// schedules with the default cap.
    pub fn compile(spec: NetworkSpec) -> Result<Network, TopologyError> {
        Self::compile_with_cap(spec, DEFAULT_SCHEDULE_CAP)
    }

    pub fn compile_with_cap(spec: NetworkSpec, cap: usize) -> Result<Network, TopologyError> {
        let report = validate_network(&spec);
        if !report.is_ok() {
            return Err(TopologyError::Invalid(report));
        }
        let schedules = enumerate_schedules(&spec, cap)?;

        let flow_count = spec.flows.len();
        let mut queues = Vec::new();
        let mut queue_lookup = vec![None; spec.node_count as usize * flow_count];
        let mut route_queues = vec![Vec::new(); flow_count];
        let mut link_flows = vec![Vec::new(); spec.links.len()];
        let mut downstream = HashMap::new();
        let mut flow_index = HashMap::new();

        for (fi, flow) in spec.flows.iter().enumerate() {
            flow_index.insert(flow.id(), fi);
            for (hop, &lid) in flow.route.iter().enumerate() {
                let link = spec.links[lid.0 as usize];
                let qi = queues.len();
                queues.push((link.from, flow.id()));
                queue_lookup[link.from.0 as usize * flow_count + fi] = Some(qi);
                route_queues[fi].push(qi);
                link_flows[lid.0 as usize].push((fi, hop));
            }
        }
        // Downstream queues resolve only once the whole queue space exists.
        for (fi, flow) in spec.flows.iter().enumerate() {
            for &lid in &flow.route {
                let link = spec.links[lid.0 as usize];
                let dq = if link.to == flow.destination {
                    None
                } else {
                    Some(queue_lookup[link.to.0 as usize * flow_count + fi].expect("route node has a queue"))
                };
                downstream.insert((lid.0, fi), dq);
            }
        }

        Ok(Network {
            spec,
            schedules,
            queues,
            queue_lookup,
            link_flows,
            route_queues,
            downstream,
            flow_index,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn schedules(&self) -> &[Schedule] {
        &self.schedules
    }

    pub fn flow_count(&self) -> usize {
        self.spec.flows.len()
    }

    pub fn link_count(&self) -> usize {
        self.spec.links.len()
    }

    /// Number of queues in the full queue space.
    pub fn queue_count(&self) -> usize {
        self.queues.len()
    }

    pub fn queues(&self) -> &[(NodeId, FlowId)] {
        &self.queues
    }

    pub fn queue_index(&self, node: NodeId, flow: FlowId) -> Option<usize> {
        let fi = *self.flow_index.get(&flow)?;
        self.queue_lookup
            .get(node.0 as usize * self.flow_count() + fi)
            .copied()
            .flatten()
    }

    pub fn flow_index(&self, flow: FlowId) -> Option<usize> {
        self.flow_index.get(&flow).copied()
    }

    /// Flow index of each queue.
    pub fn flow_of_queue(&self, queue: usize) -> usize {
        let fid = self.queues[queue].1;
        self.flow_index[&fid]
    }

    /// Flows routed over a link, as (flow index, hop position).
    pub fn link_flows(&self, link: LinkId) -> &[(usize, usize)] {
        &self.link_flows[link.0 as usize]
    }

    /// Queue indices along a flow's route (upstream node of each hop).
    pub fn route_queues(&self, flow_index: usize) -> &[usize] {
        &self.route_queues[flow_index]
    }

    /// Queue fed by serving `flow_index` on `link`; None when the link head
    /// is the flow destination (packets exit the network).
    pub fn downstream_queue(&self, link: LinkId, flow_index: usize) -> Option<usize> {
        self.downstream.get(&(link.0, flow_index)).copied().flatten()
    }

    /// Offered rate on a link in channel state `h` (gain, or its rate-table
    /// image when a table is configured).
    pub fn rate(&self, state: usize, link: LinkId) -> u64 {
        let gain = self.spec.channel.states[state][link.0 as usize] as u64;
        match &self.spec.rate_table {
            Some(table) => table[gain as usize],
            None => gain,
        }
    }

    /// Queue index at a flow's source node.
    pub fn source_queue(&self, flow_index: usize) -> usize {
        self.route_queues[flow_index][0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{star, single_link};

    #[test]
    fn star_validates_ok() {
        let report = validate_network(&star(0.64, 0.64));
        assert!(report.is_ok(), "unexpected violations: {report}");
    }

    #[test]
    fn route_with_unknown_link_is_reported() {
        let mut spec = star(0.5, 0.5);
        spec.flows[0].route = vec![LinkId(0), LinkId(9)];
        let report = validate_network(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RouteUsesUnknownLink { link: LinkId(9), .. })));
    }

    #[test]
    fn uninterfered_link_is_reported() {
        let mut spec = star(0.5, 0.5);
        spec.interference_sets = vec![vec![LinkId(0), LinkId(1), LinkId(2)]];
        let report = validate_network(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UninterferedLink { link: LinkId(3) })));
    }

    #[test]
    fn disconnected_route_is_reported() {
        let mut spec = star(0.5, 0.5);
        // 1 -> 3 followed by 3 -> 5 does not serve flow destined to node 3 (paper node 4).
        spec.flows[0].route = vec![LinkId(0), LinkId(3)];
        let report = validate_network(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RouteWrongEndpoints { .. })));
    }

    #[test]
    fn star_schedules_are_the_four_singletons() {
        let spec = star(0.64, 0.64);
        let schedules = enumerate_schedules(&spec, DEFAULT_SCHEDULE_CAP).unwrap();
        let expect: Vec<Schedule> = (0..4)
            .map(|i| Schedule { links: vec![LinkId(i)] })
            .collect();
        assert_eq!(schedules, expect);
    }

    #[test]
    fn disjoint_interference_sets_yield_joint_schedule() {
        let mut spec = single_link(0.5);
        // Second, disjoint link with its own interference set.
        spec.node_count = 4;
        spec.links.push(Link { from: NodeId(2), to: NodeId(3) });
        spec.interference_sets = vec![vec![LinkId(0)], vec![LinkId(1)]];
        let schedules = enumerate_schedules(&spec, DEFAULT_SCHEDULE_CAP).unwrap();
        assert_eq!(schedules, vec![Schedule { links: vec![LinkId(0), LinkId(1)] }]);
    }

    #[test]
    fn empty_link_set_yields_no_schedules() {
        let mut spec = single_link(0.5);
        spec.links.clear();
        spec.interference_sets.clear();
        let schedules = enumerate_schedules(&spec, DEFAULT_SCHEDULE_CAP).unwrap();
        assert!(schedules.is_empty());
    }

    #[test]
    fn schedule_cap_is_enforced() {
        let spec = star(0.64, 0.64);
        match enumerate_schedules(&spec, 2) {
            Err(TopologyError::ScheduleCapExceeded { cap: 2 }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn schedules_satisfy_interference_and_maximality() {
        // A chain 0->1->2->3->4 with node-exclusive interference.
        let links: Vec<Link> = (0..4)
            .map(|i| Link { from: NodeId(i), to: NodeId(i + 1) })
            .collect();
        let sets = node_exclusive_interference(5, &links);
        let mut spec = single_link(0.5);
        spec.node_count = 5;
        spec.links = links;
        spec.interference_sets = sets;
        let schedules = enumerate_schedules(&spec, DEFAULT_SCHEDULE_CAP).unwrap();
        // Adjacent links conflict: maximal independent sets of a path P4.
        assert_eq!(
            schedules,
            vec![
                Schedule { links: vec![LinkId(0), LinkId(2)] },
                Schedule { links: vec![LinkId(0), LinkId(3)] },
                Schedule { links: vec![LinkId(1), LinkId(3)] },
            ]
        );
        for sched in &schedules {
            for set in &spec.interference_sets {
                let active = set.iter().filter(|l| sched.contains(**l)).count();
                assert!(active <= 1);
            }
            // Maximality: every non-member conflicts with a member.
            for cand in 0..spec.links.len() as u32 {
                let cand = LinkId(cand);
                if sched.contains(cand) {
                    continue;
                }
                let conflicts = spec.interference_sets.iter().any(|set| {
                    set.contains(&cand) && set.iter().any(|l| sched.contains(*l))
                });
                assert!(conflicts, "{cand} could be added to {sched:?}");
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let spec = star(0.64, 0.64);
        let a = enumerate_schedules(&spec, DEFAULT_SCHEDULE_CAP).unwrap();
        let b = enumerate_schedules(&spec, DEFAULT_SCHEDULE_CAP).unwrap();
        assert_eq!(a, b);
    }

    proptest::proptest! {
        /// Feasibility, maximality, order, and determinism over arbitrary
        /// interference structures.
        #[test]
        fn enumeration_invariants_hold_for_random_interference(
            link_count in 1usize..8,
            raw_sets in proptest::collection::vec(proptest::collection::vec(0u32..8, 1..4), 0..6),
        ) {
            let mut spec = single_link(0.5);
            spec.node_count = 2;
            spec.links = (0..link_count)
                .map(|_| Link { from: NodeId(0), to: NodeId(1) })
                .collect();
            let mut sets: Vec<Vec<LinkId>> = raw_sets
                .into_iter()
                .map(|s| {
                    let mut s: Vec<LinkId> =
                        s.into_iter().filter(|&l| (l as usize) < link_count).map(LinkId).collect();
                    s.sort();
                    s.dedup();
                    s
                })
                .filter(|s: &Vec<LinkId>| !s.is_empty())
                .collect();
            let mut covered = vec![false; link_count];
            for set in &sets {
                for l in set {
                    covered[l.0 as usize] = true;
                }
            }
            for (l, c) in covered.iter().enumerate() {
                if !c {
                    sets.push(vec![LinkId(l as u32)]);
                }
            }
            spec.interference_sets = sets;

            let schedules = enumerate_schedules(&spec, DEFAULT_SCHEDULE_CAP).unwrap();
            proptest::prop_assert!(!schedules.is_empty());
            proptest::prop_assert_eq!(&schedules, &enumerate_schedules(&spec, DEFAULT_SCHEDULE_CAP).unwrap());
            for pair in schedules.windows(2) {
                proptest::prop_assert!(pair[0].links < pair[1].links, "not in lexicographic order");
            }
            for sched in &schedules {
                proptest::prop_assert!(sched.links.windows(2).all(|w| w[0] < w[1]));
                for set in &spec.interference_sets {
                    let active = set.iter().filter(|l| sched.contains(**l)).count();
                    proptest::prop_assert!(active <= 1, "interference violated");
                }
                for cand in 0..link_count as u32 {
                    let cand = LinkId(cand);
                    if sched.contains(cand) {
                        continue;
                    }
                    let conflicts = spec
                        .interference_sets
                        .iter()
                        .any(|set| set.contains(&cand) && set.iter().any(|l| sched.contains(*l)));
                    proptest::prop_assert!(conflicts, "schedule not maximal");
                }
            }
        }
    }

    #[test]
    fn compile_builds_queue_space_in_route_order() {
        let net = Network::compile(star(0.64, 0.64)).unwrap();
        assert_eq!(net.queue_count(), 4);
        assert_eq!(net.queues()[0], (NodeId(0), FlowId(3)));
        assert_eq!(net.queues()[1], (NodeId(2), FlowId(3)));
        assert_eq!(net.queues()[2], (NodeId(1), FlowId(4)));
        assert_eq!(net.queues()[3], (NodeId(2), FlowId(4)));
        assert_eq!(net.queue_index(NodeId(2), FlowId(4)), Some(3));
        assert_eq!(net.queue_index(NodeId(3), FlowId(3)), None); // destination has no queue
        assert_eq!(net.downstream_queue(LinkId(0), 0), Some(1));
        assert_eq!(net.downstream_queue(LinkId(2), 0), None);
    }
}
