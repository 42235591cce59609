//! The discrete-time simulation loop and the exact cumulative bookkeeping of
//! the system record (arrivals, channel occupation, scheduling counts,
//! departures, routed arrivals, per-link service, queues).
//!
//! Slot ordering: service is computed from slot-start queues, then routed
//! arrivals are credited downstream, then exogenous arrivals are credited.
//! Packets transmitted in slot t are therefore forwardable no earlier than
//! slot t+1, and destination nodes absorb packets immediately.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::scheduler::{solve_schedule, Allocation, PolicyParams, SchedulerError};
use crate::stochastic::{ArrivalSampler, ChannelSampler, RngStream, StochasticError};
use crate::topology::{LinkId, Network};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("bad simulation config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Scheduler(#[from] SchedulerError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error("infeasible allocation at slot {slot}: {reason}")]
    InfeasibleAllocation { slot: u64, reason: String },
    #[error("counter overflow at slot {slot}")]
    Overflow { slot: u64 },
    #[error("{what} has {got} entries, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
    #[error("no trajectories supplied")]
    NoTrajectories,
    #[error("burn-in fraction {0} must lie in [0, 1)")]
    BadBurnIn(f64),
    #[error("trajectory does not match the network (queues {got} vs {expected})")]
    TrajectoryMismatch { got: usize, expected: usize },
}

#[derive(Debug, Error)]
#[error("conservation violated at slot {slot}: {detail}")]
pub struct ConservationError {
    pub slot: u64,
    pub detail: String,
}

/// Simulation run settings.
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Horizon in slots.
    pub horizon: u64,
    /// Master seed; replication r uses stream id r.
    pub seed: u64,
    pub replications: u64,
    /// Snapshot stride for O(1) access into long runs.
    pub record_stride: u64,
    /// Starting queue contents over the queue space; zeros when absent.
    pub initial_queues: Option<Vec<u64>>,
    /// Optional workload direction, kept with the config for reporting.
    pub psi: Option<Vec<f64>>,
}

impl SimConfig {
    pub fn new(horizon: u64) -> Self {
        SimConfig {
            horizon,
            seed: 0,
            replications: 1,
            record_stride: (horizon / 1024).max(1),
            initial_queues: None,
            psi: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_replications(mut self, replications: u64) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_initial_queues(mut self, queues: Vec<u64>) -> Self {
        self.initial_queues = Some(queues);
        self
    }

    fn validate(&self, net: &Network) -> Result<(), EngineError> {
        if self.horizon < 1 {
            return Err(EngineError::BadConfig("horizon must be >= 1".into()));
        }
        if self.record_stride < 1 {
            return Err(EngineError::BadConfig("record stride must be >= 1".into()));
        }
        if self.replications < 1 {
            return Err(EngineError::BadConfig("replication count must be >= 1".into()));
        }
        if let Some(q) = &self.initial_queues {
            if q.len() != net.queue_count() {
                return Err(EngineError::DimensionMismatch {
                    what: "initial queues",
                    got: q.len(),
                    expected: net.queue_count(),
                });
            }
        }
        if let Some(psi) = &self.psi {
            if psi.len() != net.queue_count() {
                return Err(EngineError::DimensionMismatch {
                    what: "workload direction",
                    got: psi.len(),
                    expected: net.queue_count(),
                });
            }
        }
        Ok(())
    }
}

/// One serviced (link, flow) pair of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServiceRec {
    pub link: u16,
    pub flow: u16,
    pub offered: u32,
    pub served: u32,
}

/// Key of the scheduling-count record: slots with channel state `state`,
/// schedule `schedule`, and `flow` served over `link`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GKey {
    pub state: u16,
    pub schedule: u16,
    pub link: u16,
    pub flow: u16,
}

/// Full cumulative record at one recorded slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub slot: u64,
    /// Cumulative exogenous arrivals per arrival entry.
    pub arrivals: Vec<u64>,
    /// Cumulative routed arrivals per queue.
    pub routed: Vec<u64>,
    /// Cumulative departures per queue.
    pub departures: Vec<u64>,
    /// Cumulative service per queue's outgoing route link.
    pub services: Vec<u64>,
    pub queues: Vec<u64>,
}

/// The recorded evolution of one run: the exact per-slot event log plus
/// stride snapshots of the cumulative vectors. Every cumulative series is
/// reconstructible exactly, in integer arithmetic, via [`Self::replay`].
#[derive(Debug, Clone, PartialEq)]
pub struct SystemTrajectory {
    pub horizon: u64,
    pub initial_queues: Vec<u64>,
    /// Realized channel state per slot.
    pub channel_states: Vec<u16>,
    /// Chosen schedule per slot; `u16::MAX` marks the empty allocation.
    pub schedule_ids: Vec<u16>,
    /// Raw event log: per-slot arrival counts, row-major by slot.
    pub arrival_counts: Vec<u32>,
    /// Raw event log: per-slot ranges into `services`.
    pub service_offsets: Vec<u32>,
    pub services: Vec<ServiceRec>,
    /// Aggregate queue per flow at each integer time 0..=horizon, row-major.
    pub flow_totals: Vec<u64>,
    pub snapshots: Vec<Snapshot>,
    pub g_counts: HashMap<GKey, u64>,
    pub entry_count: usize,
    pub flow_count: usize,
    pub queue_count: usize,
}

pub const NO_SCHEDULE: u16 = u16::MAX;

impl SystemTrajectory {
    pub fn arrivals_at(&self, slot: u64) -> &[u32] {
        let start = slot as usize * self.entry_count;
        &self.arrival_counts[start..start + self.entry_count]
    }

    pub fn services_at(&self, slot: u64) -> &[ServiceRec] {
        let lo = self.service_offsets[slot as usize] as usize;
        let hi = self.service_offsets[slot as usize + 1] as usize;
        &self.services[lo..hi]
    }

    /// Aggregate flow queue Q^f(t) at integer time t in 0..=horizon.
    pub fn flow_total(&self, t: u64, flow: usize) -> u64 {
        self.flow_totals[t as usize * self.flow_count + flow]
    }

    /// Structural consistency of the raw arrays (used after deserializing).
    pub fn validate_shape(&self) -> Result<(), EngineError> {
        let t = self.horizon as usize;
        let ok = self.channel_states.len() == t
            && self.schedule_ids.len() == t
            && self.arrival_counts.len() == t * self.entry_count
            && self.service_offsets.len() == t + 1
            && self.service_offsets.first() == Some(&0)
            && self.service_offsets.windows(2).all(|w| w[0] <= w[1])
            && self.service_offsets.last().copied() == Some(self.services.len() as u32)
            && self.flow_totals.len() == (t + 1) * self.flow_count
            && self.initial_queues.len() == self.queue_count;
        if ok {
            Ok(())
        } else {
            Err(EngineError::BadConfig("trajectory arrays are inconsistent".into()))
        }
    }

    /// Replays the event log, invoking `visit` at every integer time
    /// t = 0..=horizon with the exact cumulative state at that time.
    pub fn replay<F: FnMut(&ReplayState)>(&self, net: &Network, mut visit: F) -> Result<(), EngineError> {
        if self.queue_count != net.queue_count() {
            return Err(EngineError::TrajectoryMismatch { got: self.queue_count, expected: net.queue_count() });
        }
        let entry_queues = arrival_entry_queues(net)?;
        let mut state = ReplayState {
            slot: 0,
            queues: self.initial_queues.clone(),
            cum_arrivals: vec![0; self.entry_count],
            cum_arrivals_q: vec![0; self.queue_count],
            cum_routed: vec![0; self.queue_count],
            cum_departures: vec![0; self.queue_count],
            cum_services: vec![0; self.queue_count],
            channel_occupation: vec![0; net.spec().channel.state_count()],
            exited: vec![0; self.flow_count],
        };
        visit(&state);
        for t in 0..self.horizon {
            let ReplayState { queues, cum_services, cum_departures, cum_routed, exited, .. } = &mut state;
            let hooks = ServiceHooks { cum_services, cum_departures, cum_routed, exited };
            apply_services(net, queues, self.services_at(t), t, Some(hooks))?;
            for (e, &a) in self.arrivals_at(t).iter().enumerate() {
                let a = a as u64;
                state.queues[entry_queues[e]] += a;
                state.cum_arrivals[e] += a;
                state.cum_arrivals_q[entry_queues[e]] += a;
            }
            state.channel_occupation[self.channel_states[t as usize] as usize] += 1;
            state.slot = t + 1;
            visit(&state);
        }
        Ok(())
    }
}

/// Exact cumulative state at an integer time during replay.
#[derive(Debug, Clone)]
pub struct ReplayState {
    pub slot: u64,
    pub queues: Vec<u64>,
    /// Per arrival entry.
    pub cum_arrivals: Vec<u64>,
    /// Per queue (arrival entries mapped to their source queues).
    pub cum_arrivals_q: Vec<u64>,
    pub cum_routed: Vec<u64>,
    pub cum_departures: Vec<u64>,
    /// Per queue: cumulative service on its outgoing route link.
    pub cum_services: Vec<u64>,
    /// Per channel state.
    pub channel_occupation: Vec<u64>,
    /// Per flow: packets absorbed at the destination.
    pub exited: Vec<u64>,
}

fn arrival_entry_queues(net: &Network) -> Result<Vec<usize>, EngineError> {
    net.spec()
        .arrivals
        .entries
        .iter()
        .map(|e| {
            net.queue_index(e.node, e.flow).ok_or(EngineError::DimensionMismatch {
                what: "arrival entry queue",
                got: 0,
                expected: 0,
            })
        })
        .collect()
}

/// Mutable views of the cumulative counters updated while services apply.
struct ServiceHooks<'a> {
    cum_services: &'a mut [u64],
    cum_departures: &'a mut [u64],
    cum_routed: &'a mut [u64],
    exited: &'a mut [u64],
}

impl ReplayState {
    fn service_hooks(&mut self) -> ServiceHooks<'_> {
        ServiceHooks {
            cum_services: &mut self.cum_services,
            cum_departures: &mut self.cum_departures,
            cum_routed: &mut self.cum_routed,
            exited: &mut self.exited,
        }
    }
}

/// Applies one slot's services: all subtractions from slot-start queues
/// first, then downstream credits. Truncation (served <= slot-start queue)
/// is enforced by checked subtraction.
fn apply_services(
    net: &Network,
    queues: &mut [u64],
    services: &[ServiceRec],
    slot: u64,
    mut hooks: Option<ServiceHooks<'_>>,
) -> Result<(), EngineError> {
    for rec in services {
        let link = LinkId(rec.link as u32);
        let fi = rec.flow as usize;
        let hop = net
            .link_flows(link)
            .iter()
            .find(|&&(f, _)| f == fi)
            .map(|&(_, hop)| hop)
            .ok_or_else(|| EngineError::InfeasibleAllocation {
                slot,
                reason: format!("flow index {fi} is not routed over link {link}"),
            })?;
        if rec.served > rec.offered {
            return Err(EngineError::InfeasibleAllocation {
                slot,
                reason: format!("served {} exceeds offered rate {}", rec.served, rec.offered),
            });
        }
        let up = net.route_queues(fi)[hop];
        queues[up] = queues[up].checked_sub(rec.served as u64).ok_or_else(|| {
            EngineError::InfeasibleAllocation {
                slot,
                reason: format!("served {} exceeds queue {} content", rec.served, up),
            }
        })?;
        if let Some(hooks) = hooks.as_mut() {
            hooks.cum_services[up] += rec.served as u64;
            hooks.cum_departures[up] += rec.served as u64;
        }
    }
    for rec in services {
        let link = LinkId(rec.link as u32);
        let fi = rec.flow as usize;
        match net.downstream_queue(link, fi) {
            Some(dq) => {
                queues[dq] += rec.served as u64;
                if let Some(hooks) = hooks.as_mut() {
                    hooks.cum_routed[dq] += rec.served as u64;
                }
            }
            None => {
                if let Some(hooks) = hooks.as_mut() {
                    hooks.exited[fi] += rec.served as u64;
                }
            }
        }
    }
    Ok(())
}

/// Result of one externally driven slot transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub queues: Vec<u64>,
    pub served_per_queue: Vec<u64>,
    pub routed_per_queue: Vec<u64>,
    pub arrived_per_queue: Vec<u64>,
    pub exited_per_flow: Vec<u64>,
}

/// Applies one slot (services from slot-start queues, then routed arrivals,
/// then exogenous arrivals) and returns the next state with the slot's
/// increments. The allocation is validated against the interference
/// constraint and queue contents; a violation signals a scheduler bug.
pub fn step(
    net: &Network,
    queues: &[u64],
    arrivals: &[u64],
    allocation: &Allocation,
) -> Result<StepResult, EngineError> {
    if queues.len() != net.queue_count() {
        return Err(EngineError::DimensionMismatch {
            what: "queue state",
            got: queues.len(),
            expected: net.queue_count(),
        });
    }
    if arrivals.len() != net.spec().arrivals.entries.len() {
        return Err(EngineError::DimensionMismatch {
            what: "arrival vector",
            got: arrivals.len(),
            expected: net.spec().arrivals.entries.len(),
        });
    }

    // Interference feasibility and one-flow-per-link.
    let mut active: Vec<LinkId> = Vec::with_capacity(allocation.entries.len());
    for e in &allocation.entries {
        if active.contains(&e.link) {
            return Err(EngineError::InfeasibleAllocation {
                slot: 0,
                reason: format!("link {} serves two flows", e.link),
            });
        }
        active.push(e.link);
    }
    for set in &net.spec().interference_sets {
        let count = set.iter().filter(|l| active.contains(l)).count();
        if count > 1 {
            return Err(EngineError::InfeasibleAllocation {
                slot: 0,
                reason: "two links of one interference set are active".into(),
            });
        }
    }
    if let Some(sid) = allocation.schedule {
        let sched = net.schedules().get(sid).ok_or_else(|| EngineError::InfeasibleAllocation {
            slot: 0,
            reason: format!("schedule index {sid} out of range"),
        })?;
        for e in &allocation.entries {
            if !sched.contains(e.link) {
                return Err(EngineError::InfeasibleAllocation {
                    slot: 0,
                    reason: format!("link {} is outside the chosen schedule", e.link),
                });
            }
        }
    } else if !allocation.entries.is_empty() {
        return Err(EngineError::InfeasibleAllocation {
            slot: 0,
            reason: "entries present without a schedule".into(),
        });
    }

    let recs: Vec<ServiceRec> = allocation
        .entries
        .iter()
        .map(|e| ServiceRec {
            link: e.link.0 as u16,
            flow: e.flow_index as u16,
            offered: e.offered as u32,
            served: e.served as u32,
        })
        .collect();

    let mut acc = ReplayState {
        slot: 0,
        queues: queues.to_vec(),
        cum_arrivals: vec![0; arrivals.len()],
        cum_arrivals_q: vec![0; net.queue_count()],
        cum_routed: vec![0; net.queue_count()],
        cum_departures: vec![0; net.queue_count()],
        cum_services: vec![0; net.queue_count()],
        channel_occupation: vec![0; net.spec().channel.state_count()],
        exited: vec![0; net.flow_count()],
    };
    let mut next = queues.to_vec();
    apply_services(net, &mut next, &recs, 0, Some(acc.service_hooks()))?;
    let entry_queues = arrival_entry_queues(net)?;
    for (e, &a) in arrivals.iter().enumerate() {
        next[entry_queues[e]] += a;
        acc.cum_arrivals_q[entry_queues[e]] += a;
    }
    Ok(StepResult {
        queues: next,
        served_per_queue: acc.cum_services,
        routed_per_queue: acc.cum_routed,
        arrived_per_queue: acc.cum_arrivals_q,
        exited_per_flow: acc.exited,
    })
}

/// Runs one replication. Deterministic in (net, params, config, stream).
pub fn run(
    net: &Network,
    params: &PolicyParams,
    config: &SimConfig,
    mut stream: RngStream,
) -> Result<SystemTrajectory, EngineError> {
    config.validate(net)?;
    if net.schedules().len() >= NO_SCHEDULE as usize {
        return Err(EngineError::BadConfig("too many schedules to record".into()));
    }
    let horizon = config.horizon;
    let entry_count = net.spec().arrivals.entries.len();
    let flow_count = net.flow_count();
    let queue_count = net.queue_count();

    let channel_sampler: ChannelSampler = net.spec().channel.build_sampler()?;
    let arrival_samplers: Vec<ArrivalSampler> = net.spec().arrivals.build_samplers()?;
    let entry_queues = arrival_entry_queues(net)?;

    let mut queues = config.initial_queues.clone().unwrap_or_else(|| vec![0; queue_count]);

    let mut traj = SystemTrajectory {
        horizon,
        initial_queues: queues.clone(),
        channel_states: Vec::with_capacity(horizon as usize),
        schedule_ids: Vec::with_capacity(horizon as usize),
        arrival_counts: Vec::with_capacity(horizon as usize * entry_count),
        service_offsets: Vec::with_capacity(horizon as usize + 1),
        services: Vec::new(),
        flow_totals: Vec::with_capacity((horizon as usize + 1) * flow_count),
        snapshots: Vec::new(),
        g_counts: HashMap::new(),
        entry_count,
        flow_count,
        queue_count,
    };
    traj.service_offsets.push(0);

    let mut acc = ReplayState {
        slot: 0,
        queues: queues.clone(),
        cum_arrivals: vec![0; entry_count],
        cum_arrivals_q: vec![0; queue_count],
        cum_routed: vec![0; queue_count],
        cum_departures: vec![0; queue_count],
        cum_services: vec![0; queue_count],
        channel_occupation: vec![0; net.spec().channel.state_count()],
        exited: vec![0; flow_count],
    };

    let push_flow_totals = |traj: &mut SystemTrajectory, queues: &[u64]| {
        let base = traj.flow_totals.len();
        traj.flow_totals.resize(base + flow_count, 0);
        for (qi, &q) in queues.iter().enumerate() {
            traj.flow_totals[base + net.flow_of_queue(qi)] += q;
        }
    };
    let snapshot = |traj: &mut SystemTrajectory, slot: u64, queues: &[u64], acc: &ReplayState| {
        traj.snapshots.push(Snapshot {
            slot,
            arrivals: acc.cum_arrivals.clone(),
            routed: acc.cum_routed.clone(),
            departures: acc.cum_departures.clone(),
            services: acc.cum_services.clone(),
            queues: queues.to_vec(),
        });
    };

    push_flow_totals(&mut traj, &queues);
    snapshot(&mut traj, 0, &queues, &acc);

    let mut arrivals = vec![0u64; entry_count];
    for t in 0..horizon {
        let h = channel_sampler.sample(&mut stream);
        for (e, sampler) in arrival_samplers.iter().enumerate() {
            arrivals[e] = sampler.sample(&mut stream);
            if arrivals[e] > u32::MAX as u64 {
                return Err(EngineError::Overflow { slot: t });
            }
        }

        let allocation = solve_schedule(&queues, h, net, params)?;
        let sid = allocation.schedule.map_or(NO_SCHEDULE, |s| s as u16);

        let recs: Vec<ServiceRec> = allocation
            .entries
            .iter()
            .map(|e| ServiceRec {
                link: e.link.0 as u16,
                flow: e.flow_index as u16,
                offered: e.offered as u32,
                served: e.served as u32,
            })
            .collect();

        apply_services(net, &mut queues, &recs, t, Some(acc.service_hooks()))?;
        for (e, &a) in arrivals.iter().enumerate() {
            queues[entry_queues[e]] += a;
            acc.cum_arrivals[e] += a;
            acc.cum_arrivals_q[entry_queues[e]] += a;
            traj.arrival_counts.push(a as u32);
        }
        acc.channel_occupation[h] += 1;

        traj.channel_states.push(h as u16);
        traj.schedule_ids.push(sid);
        for rec in &recs {
            *traj
                .g_counts
                .entry(GKey { state: h as u16, schedule: sid, link: rec.link, flow: rec.flow })
                .or_insert(0) += 1;
        }
        traj.services.extend_from_slice(&recs);
        traj.service_offsets.push(traj.services.len() as u32);

        push_flow_totals(&mut traj, &queues);
        if (t + 1) % config.record_stride == 0 || t + 1 == horizon {
            snapshot(&mut traj, t + 1, &queues, &acc);
        }
    }
    Ok(traj)
}

/// Runs `config.replications` independent replications; replication r uses
/// stream id r from the master seed. Results are ordered by replication
/// index, so parallelism never changes the output.
pub fn run_replications(
    net: &Network,
    params: &PolicyParams,
    config: &SimConfig,
) -> Result<Vec<SystemTrajectory>, EngineError> {
    (0..config.replications)
        .into_par_iter()
        .map(|rep| run(net, params, config, RngStream::new(config.seed, rep)))
        .collect()
}

/// The workload series W(t) = <psi, Q(t)> at every integer time 0..=horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSeries {
    pub values: Vec<f64>,
}

pub fn workload(traj: &SystemTrajectory, net: &Network, psi: &[f64]) -> Result<WorkloadSeries, EngineError> {
    if psi.len() != net.queue_count() {
        return Err(EngineError::DimensionMismatch {
            what: "workload direction",
            got: psi.len(),
            expected: net.queue_count(),
        });
    }
    let mut values = Vec::with_capacity(traj.horizon as usize + 1);
    traj.replay(net, |state| {
        values.push(state.queues.iter().zip(psi).map(|(&q, &p)| q as f64 * p).sum());
    })?;
    Ok(WorkloadSeries { values })
}

#[derive(Debug, Clone)]
pub struct FlowStat {
    pub mean: f64,
    /// Sample variance of the per-replication means.
    pub variance: f64,
    /// 95% normal CI half-width from the across-replication variance.
    pub ci_half: f64,
}

#[derive(Debug, Clone)]
pub struct StationaryStats {
    pub per_flow: Vec<FlowStat>,
    /// Per replication, per flow: time-averaged aggregate queue.
    pub rep_means: Vec<Vec<f64>>,
}

/// Time-averages the aggregate flow queues over [burn_in * T, T] per
/// replication, then pools across replications.
pub fn stationary_stats(trajs: &[SystemTrajectory], burn_in: f64) -> Result<StationaryStats, EngineError> {
    if trajs.is_empty() {
        return Err(EngineError::NoTrajectories);
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(EngineError::BadBurnIn(burn_in));
    }
    let flow_count = trajs[0].flow_count;
    let mut rep_means = Vec::with_capacity(trajs.len());
    for traj in trajs {
        if traj.flow_count != flow_count {
            return Err(EngineError::TrajectoryMismatch { got: traj.flow_count, expected: flow_count });
        }
        let t0 = (burn_in * traj.horizon as f64).floor() as u64;
        let samples = traj.horizon - t0 + 1;
        let mut means = vec![0.0; flow_count];
        for t in t0..=traj.horizon {
            for f in 0..flow_count {
                means[f] += traj.flow_total(t, f) as f64;
            }
        }
        for m in &mut means {
            *m /= samples as f64;
        }
        rep_means.push(means);
    }
    let reps = rep_means.len() as f64;
    let per_flow = (0..flow_count)
        .map(|f| {
            let mean = rep_means.iter().map(|r| r[f]).sum::<f64>() / reps;
            let variance = if rep_means.len() > 1 {
                rep_means.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / (reps - 1.0)
            } else {
                0.0
            };
            FlowStat { mean, variance, ci_half: 1.96 * (variance / reps).sqrt() }
        })
        .collect();
    Ok(StationaryStats { per_flow, rep_means })
}

/// Verifies the exact bookkeeping identities at every slot of a trajectory:
/// the queue evolution identity, the routing/departure sums, the channel
/// occupation total, queue nonnegativity, and agreement of the stored
/// snapshots, flow totals, and scheduling counts with an exact replay.
pub fn verify_conservation(traj: &SystemTrajectory, net: &Network) -> Result<(), ConservationError> {
    let mut next_snapshot = 0usize;
    let mut result: Result<(), ConservationError> = Ok(());

    // Queue index of the previous hop along the flow route, per queue.
    let mut upstream_of: Vec<Option<usize>> = vec![None; net.queue_count()];
    for fi in 0..net.flow_count() {
        let route = net.route_queues(fi);
        for hop in 1..route.len() {
            upstream_of[route[hop]] = Some(route[hop - 1]);
        }
    }

    let replay_outcome = traj.replay(net, |state| {
        if result.is_err() {
            return;
        }
        let t = state.slot;
        let fail = |detail: String| Err(ConservationError { slot: t, detail });

        for qi in 0..state.queues.len() {
            let rhs = traj.initial_queues[qi] as i128 + state.cum_arrivals_q[qi] as i128
                + state.cum_routed[qi] as i128
                - state.cum_departures[qi] as i128;
            if state.queues[qi] as i128 != rhs {
                result = fail(format!("queue {qi} fails the evolution identity ({} vs {rhs})", state.queues[qi]));
                return;
            }
            if state.cum_departures[qi] != state.cum_services[qi] {
                result = fail(format!("departures of queue {qi} disagree with its service count"));
                return;
            }
            let routed_expected = upstream_of[qi].map_or(0, |up| state.cum_services[up]);
            if state.cum_routed[qi] != routed_expected {
                result = fail(format!("routed arrivals of queue {qi} disagree with upstream service"));
                return;
            }
        }
        let occupied: u64 = state.channel_occupation.iter().sum();
        if occupied != t {
            result = fail(format!("channel occupation sums to {occupied}, not {t}"));
            return;
        }
        for f in 0..traj.flow_count {
            let total: u64 = state
                .queues
                .iter()
                .enumerate()
                .filter(|&(qi, _)| net.flow_of_queue(qi) == f)
                .map(|(_, &q)| q)
                .sum();
            if traj.flow_total(t, f) != total {
                result = fail(format!("stored flow total of flow {f} disagrees with replay"));
                return;
            }
        }
        if next_snapshot < traj.snapshots.len() && traj.snapshots[next_snapshot].slot == t {
            let snap = &traj.snapshots[next_snapshot];
            next_snapshot += 1;
            if snap.queues != state.queues
                || snap.arrivals != state.cum_arrivals
                || snap.routed != state.cum_routed
                || snap.departures != state.cum_departures
                || snap.services != state.cum_services
            {
                result = fail("snapshot disagrees with replay".into());
            }
        }
    });
    if let Err(e) = replay_outcome {
        return Err(ConservationError { slot: 0, detail: e.to_string() });
    }
    result?;

    // Scheduling counts: recount from the event log.
    let mut recount: HashMap<GKey, u64> = HashMap::new();
    for t in 0..traj.horizon {
        let h = traj.channel_states[t as usize];
        let sid = traj.schedule_ids[t as usize];
        for rec in traj.services_at(t) {
            *recount
                .entry(GKey { state: h, schedule: sid, link: rec.link, flow: rec.flow })
                .or_insert(0) += 1;
        }
    }
    if recount != traj.g_counts {
        return Err(ConservationError { slot: traj.horizon, detail: "scheduling counts disagree with event log".into() });
    }
    Ok(())
}
