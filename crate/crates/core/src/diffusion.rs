//! Heavy-traffic analysis layer: fluid/diffusion rescaling of trajectories,
//! the workload decomposition and its Skorokhod regulator, the reflected
//! Brownian stationary law and the closed-form queue approximation, plus the
//! Lyapunov, state-space-collapse, law-of-large-numbers, and drain-time
//! diagnostics.

use thiserror::Error;

use crate::capacity::PsiMode;
use crate::engine::{EngineError, SystemTrajectory};
use crate::scheduler::{weight, PolicyParams};
use crate::topology::Network;

#[derive(Debug, Error)]
pub enum DiffusionError {
    #[error("horizon too short: need {needed} slots, trajectory has {have}")]
    HorizonTooShort { needed: u64, have: u64 },
    #[error("{what} has {got} entries, expected {expected}")]
    DimensionMismatch { what: &'static str, got: usize, expected: usize },
    #[error("empty path")]
    EmptyPath,
    #[error("free path must start nonnegative, got {0}")]
    NegativeStart(f64),
    #[error("no stationary law: drift {0} is not negative")]
    NoStationaryLaw(f64),
    #[error("variance must be positive, got {0}")]
    BadVariance(f64),
    #[error("arrival rate equals the boundary point; approximation undefined")]
    AtBoundary,
    #[error("workload is zero; collapse distance undefined")]
    ZeroWorkload,
    #[error("service moment missing for realized channel state {0}")]
    MissingMu(usize),
    #[error("evaluation time {t} is past the path horizon {horizon}")]
    PastHorizon { t: f64, horizon: f64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleKind {
    /// Space and time compressed by n.
    Fluid,
    /// Time by n^2, space by n.
    Diffusion,
}

/// A rescaled real-valued path: values are the raw record at the floored
/// slot index divided by n, on the exact sampling grid of the scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPath {
    pub n: u64,
    pub kind: ScaleKind,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Rescales a slot-indexed vector series (index = integer time 0..=horizon).
/// With `span` requested, the path covers scaled times [0, span].
pub fn scale(series: &[Vec<f64>], n: u64, kind: ScaleKind, span: Option<f64>) -> Result<ScaledPath, DiffusionError> {
    if series.is_empty() || n == 0 {
        return Err(DiffusionError::EmptyPath);
    }
    let horizon = (series.len() - 1) as u64;
    let time_scale = match kind {
        ScaleKind::Fluid => n as f64,
        ScaleKind::Diffusion => (n as f64) * (n as f64),
    };
    let max_steps = horizon;
    let steps = match span {
        None => max_steps,
        Some(s) => {
            let need = (s * time_scale).floor() as u64;
            if need > horizon {
                return Err(DiffusionError::HorizonTooShort { needed: need, have: horizon });
            }
            need
        }
    };
    let mut times = Vec::with_capacity(steps as usize + 1);
    let mut values = Vec::with_capacity(steps as usize + 1);
    for k in 0..=steps {
        times.push(k as f64 / time_scale);
        values.push(series[k as usize].iter().map(|&x| x / n as f64).collect());
    }
    Ok(ScaledPath { n, kind, times, values })
}

/// Full queue-space series Q(t) of a trajectory as floats, t = 0..=horizon.
pub fn queue_series(traj: &SystemTrajectory, net: &Network) -> Result<Vec<Vec<f64>>, DiffusionError> {
    let mut out = Vec::with_capacity(traj.horizon as usize + 1);
    traj.replay(net, |state| {
        out.push(state.queues.iter().map(|&q| q as f64).collect());
    })?;
    Ok(out)
}

/// Fluid- or diffusion-scaled queue path of a trajectory.
pub fn scale_queues(
    traj: &SystemTrajectory,
    net: &Network,
    n: u64,
    kind: ScaleKind,
    span: Option<f64>,
) -> Result<ScaledPath, DiffusionError> {
    scale(&queue_series(traj, net)?, n, kind, span)
}

/// The workload decomposition along a trajectory: X is the cumulative max
/// service in the chosen direction, U the free part driven by arrivals, and
/// V = W - U the regulating part (bitwise, so W = U + V holds exactly; the
/// defining formula for V is tracked as a residual, which is pure float
/// reassociation once integer conservation holds).
#[derive(Debug, Clone)]
pub struct UVDecomposition {
    pub mode: PsiMode,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    /// max_t |V(t) - (X(t) + <psi,R(t)> - <psi,D(t)>)|.
    pub max_defining_residual: f64,
}

pub fn uv_decompose(
    traj: &SystemTrajectory,
    net: &Network,
    mode: PsiMode,
    psi: &[f64],
    mu: &[f64],
) -> Result<UVDecomposition, DiffusionError> {
    let dim = match mode {
        PsiMode::FullQueue => net.queue_count(),
        PsiMode::FlowAggregate => net.flow_count(),
    };
    if psi.len() != dim {
        return Err(DiffusionError::DimensionMismatch { what: "psi", got: psi.len(), expected: dim });
    }
    if mu.len() != net.spec().channel.state_count() {
        return Err(DiffusionError::DimensionMismatch {
            what: "service moments",
            got: mu.len(),
            expected: net.spec().channel.state_count(),
        });
    }
    for t in 0..traj.horizon {
        let h = traj.channel_states[t as usize] as usize;
        if !mu[h].is_finite() {
            return Err(DiffusionError::MissingMu(h));
        }
    }

    // Arrival entries weighted in the psi space.
    let entry_weight: Vec<f64> = net
        .spec()
        .arrivals
        .entries
        .iter()
        .map(|e| {
            let fi = net.flow_index(e.flow).expect("validated flow");
            match mode {
                PsiMode::FlowAggregate => psi[fi],
                PsiMode::FullQueue => psi[net.queue_index(e.node, e.flow).expect("source queue")],
            }
        })
        .collect();
    let queue_weight: Vec<f64> = (0..net.queue_count())
        .map(|qi| match mode {
            PsiMode::FlowAggregate => psi[net.flow_of_queue(qi)],
            PsiMode::FullQueue => psi[qi],
        })
        .collect();

    let len = traj.horizon as usize + 1;
    let mut w = Vec::with_capacity(len);
    let mut u = Vec::with_capacity(len);
    let mut v = Vec::with_capacity(len);
    let mut xs = Vec::with_capacity(len);
    let mut max_residual = 0.0f64;
    let mut x = 0.0f64;
    let mut w0 = 0.0f64;

    traj.replay(net, |state| {
        if state.slot > 0 {
            x += mu[traj.channel_states[state.slot as usize - 1] as usize];
        }
        let wt: f64 = state.queues.iter().zip(&queue_weight).map(|(&q, &p)| q as f64 * p).sum();
        if state.slot == 0 {
            w0 = wt;
        }
        let a_dot: f64 = state.cum_arrivals.iter().zip(&entry_weight).map(|(&a, &p)| a as f64 * p).sum();
        let r_dot: f64 = state.cum_routed.iter().zip(&queue_weight).map(|(&r, &p)| r as f64 * p).sum();
        let mut d_dot: f64 = state.cum_departures.iter().zip(&queue_weight).map(|(&d, &p)| d as f64 * p).sum();
        if mode == PsiMode::FlowAggregate {
            // In aggregate space only deliveries leave the flow coordinate.
            d_dot = r_dot + state.exited.iter().enumerate().map(|(f, &e)| e as f64 * psi[f]).sum::<f64>();
        }
        let ut = w0 + a_dot - x;
        let vt = wt - ut;
        let v_def = x + r_dot - d_dot;
        max_residual = max_residual.max((vt - v_def).abs());
        w.push(wt);
        u.push(ut);
        v.push(vt);
        xs.push(x);
    })?;

    Ok(UVDecomposition { mode, w, u, v, x: xs, max_defining_residual: max_residual })
}

/// Output of the reflection map: the minimal nondecreasing regulator `v` with
/// v(0) = 0 keeping w = u + v nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct Regulated {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

/// One-pass running-infimum regulator: v(t) = max(0, -inf_{s<=t} u(s)).
pub fn skorokhod_regulator(u: &[f64]) -> Result<Regulated, DiffusionError> {
    let Some(&first) = u.first() else { return Err(DiffusionError::EmptyPath) };
    if first < 0.0 {
        return Err(DiffusionError::NegativeStart(first));
    }
    let mut running_min = f64::INFINITY;
    let mut v = Vec::with_capacity(u.len());
    let mut w = Vec::with_capacity(u.len());
    for &ut in u {
        running_min = running_min.min(ut);
        let vt = (-running_min).max(0.0);
        v.push(vt);
        w.push(ut + vt);
    }
    Ok(Regulated { v, w })
}

/// Stationary law of nonnegatively reflected Brownian motion with negative
/// drift: exponential with rate 2|b*| / sigma^2.
#[derive(Debug, Clone, Copy)]
pub struct RbmStationary {
    pub rate: f64,
}

impl RbmStationary {
    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            1.0 - (-self.rate * y).exp()
        }
    }

    pub fn survival(&self, y: f64) -> f64 {
        1.0 - self.cdf(y)
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }
}

pub fn rbm_stationary(b_star: f64, sigma_sq: f64) -> Result<RbmStationary, DiffusionError> {
    if sigma_sq <= 0.0 || !sigma_sq.is_finite() {
        return Err(DiffusionError::BadVariance(sigma_sq));
    }
    if b_star >= 0.0 || !b_star.is_finite() {
        return Err(DiffusionError::NoStationaryLaw(b_star));
    }
    Ok(RbmStationary { rate: -2.0 * b_star / sigma_sq })
}

/// Closed-form stationary queue prediction phi * sigma^2 / (2 |lambda -
/// lambda*|), Euclidean norm in the denominator.
pub fn queue_approx(
    phi: &[f64],
    sigma_sq: f64,
    lambda: &[f64],
    lambda_star: &[f64],
) -> Result<Vec<f64>, DiffusionError> {
    if lambda.len() != lambda_star.len() {
        return Err(DiffusionError::DimensionMismatch {
            what: "lambda*",
            got: lambda_star.len(),
            expected: lambda.len(),
        });
    }
    if sigma_sq <= 0.0 || !sigma_sq.is_finite() {
        return Err(DiffusionError::BadVariance(sigma_sq));
    }
    let dist: f64 = lambda
        .iter()
        .zip(lambda_star)
        .map(|(l, s)| (l - s).powi(2))
        .sum::<f64>()
        .sqrt();
    if dist == 0.0 {
        return Err(DiffusionError::AtBoundary);
    }
    let magnitude = sigma_sq / (2.0 * dist);
    Ok(phi.iter().map(|&p| p * magnitude).collect())
}

/// Truncated Lyapunov integral along a piecewise-linear path, with the
/// reported tail estimate of the neglected horizon.
#[derive(Debug, Clone, Copy)]
pub struct L1Estimate {
    pub value: f64,
    /// exp(t - T') times the largest observed integrand magnitude.
    pub tail_bound: f64,
}

/// Evaluates
///   L1(t) = -integral_t^{T'} exp(t - tau) sum_j alpha(q^f(tau)) q_j(tau) qdot_j(tau) dtau
/// by trapezoid quadrature on the path grid, with forward-difference
/// derivatives. `flow_of[j]` maps path coordinate j to its flow's weight
/// parameters.
pub fn lyapunov_l1(
    times: &[f64],
    values: &[Vec<f64>],
    flow_of: &[usize],
    params: &PolicyParams,
    t: f64,
) -> Result<L1Estimate, DiffusionError> {
    if times.len() < 2 || values.len() != times.len() {
        return Err(DiffusionError::EmptyPath);
    }
    let horizon = *times.last().unwrap();
    if t > horizon {
        return Err(DiffusionError::PastHorizon { t, horizon });
    }
    let dim = values[0].len();
    if flow_of.len() != dim {
        return Err(DiffusionError::DimensionMismatch { what: "flow map", got: flow_of.len(), expected: dim });
    }

    let start = times.partition_point(|&tau| tau < t);
    let n = times.len();
    let inner = |k: usize| -> f64 {
        // Forward difference; the last grid point reuses the final interval.
        let (k0, k1) = if k + 1 < n { (k, k + 1) } else { (k - 1, k) };
        let dt = times[k1] - times[k0];
        let mut flow_totals = vec![0.0; params.flows.len()];
        for (j, &f) in flow_of.iter().enumerate() {
            flow_totals[f] += values[k][j];
        }
        let mut sum = 0.0;
        for (j, &f) in flow_of.iter().enumerate() {
            let qdot = (values[k1][j] - values[k0][j]) / dt;
            let p = &params.flows[f];
            sum += weight(flow_totals[f], p.target_queue, p.a1, p.a2) * values[k][j] * qdot;
        }
        sum
    };

    let mut integral = 0.0;
    let mut sup_inner = 0.0f64;
    let mut prev = inner(start) * (t - times[start]).min(0.0).exp();
    sup_inner = sup_inner.max(inner(start).abs());
    for k in start + 1..n {
        let g_inner = inner(k);
        sup_inner = sup_inner.max(g_inner.abs());
        let g = (t - times[k]).exp() * g_inner;
        integral += 0.5 * (prev + g) * (times[k] - times[k - 1]);
        prev = g;
    }
    Ok(L1Estimate { value: -integral, tail_bound: (t - horizon).exp() * sup_inner })
}

/// Relative distance of a queue vector from the collapse ray phi * <psi, q>.
pub fn ssc_distance(q: &[f64], psi: &[f64], phi: &[f64]) -> Result<f64, DiffusionError> {
    if psi.len() != q.len() || phi.len() != q.len() {
        return Err(DiffusionError::DimensionMismatch { what: "psi/phi", got: psi.len(), expected: q.len() });
    }
    let w: f64 = q.iter().zip(psi).map(|(a, b)| a * b).sum();
    let norm: f64 = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    if w <= 0.0 || norm == 0.0 {
        return Err(DiffusionError::ZeroWorkload);
    }
    let dist: f64 = q
        .iter()
        .zip(phi)
        .map(|(&qi, &pi)| (qi - pi * w).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(dist / norm)
}

/// The normalized Lyapunov variant L1 / L* - 1 for a positive limit estimate.
pub fn ssc_l3(l1: f64, l_star: f64) -> f64 {
    l1 / l_star - 1.0
}

/// Grid-evaluated law-of-large-numbers deviations of the fluid-scaled
/// arrival and channel-occupation paths: per unit-length fluid window
/// [l, l+1], the largest grid deviation from the linear limit, maximized
/// over windows l = 0..=floor(n * span).
#[derive(Debug, Clone)]
pub struct FsllnReport {
    pub n: u64,
    pub span: f64,
    /// Per arrival entry.
    pub arrival_deviation: Vec<f64>,
    /// Per channel state.
    pub channel_deviation: Vec<f64>,
}

pub fn fslln_check(traj: &SystemTrajectory, net: &Network, n: u64, span: f64) -> Result<FsllnReport, DiffusionError> {
    if n == 0 || span <= 0.0 {
        return Err(DiffusionError::EmptyPath);
    }
    let windows = (n as f64 * span).floor() as u64; // l = 0..=windows
    let needed = n * (windows + 1);
    if traj.horizon < needed {
        return Err(DiffusionError::HorizonTooShort { needed, have: traj.horizon });
    }
    let entries = &net.spec().arrivals.entries;
    let mut arrival_deviation = vec![0.0f64; entries.len()];
    let states = net.spec().channel.state_count();
    let mut channel_deviation = vec![0.0f64; states];
    let mut counts = vec![0u64; states];

    for l in 0..=windows {
        let base = l * n;
        // Arrivals: full grid scan of |dA_j - lambda j| / n.
        for (e, entry) in entries.iter().enumerate() {
            let lambda = entry.mean;
            let mut cum = 0u64;
            for j in 1..=n {
                cum += traj.arrivals_at(base + j - 1)[e] as u64;
                let dev = (cum as f64 - lambda * j as f64).abs() / n as f64;
                if dev > arrival_deviation[e] {
                    arrival_deviation[e] = dev;
                }
            }
        }
        // Channel occupation: between occurrences the deviation is linear in
        // j, so run endpoints suffice.
        counts.iter_mut().for_each(|c| *c = 0);
        for j in 1..=n {
            let s = traj.channel_states[(base + j - 1) as usize] as usize;
            let gamma = net.spec().channel.probs[s];
            let before = (counts[s] as f64 - gamma * (j - 1) as f64).abs() / n as f64;
            counts[s] += 1;
            let after = (counts[s] as f64 - gamma * j as f64).abs() / n as f64;
            let dev = before.max(after);
            if dev > channel_deviation[s] {
                channel_deviation[s] = dev;
            }
        }
        for (s, &c) in counts.iter().enumerate() {
            let dev = (c as f64 - net.spec().channel.probs[s] * n as f64).abs() / n as f64;
            if dev > channel_deviation[s] {
                channel_deviation[s] = dev;
            }
        }
    }
    Ok(FsllnReport { n, span, arrival_deviation, channel_deviation })
}

/// Growth of the squared sup-deviations of the cumulative counting processes
/// from their linear limits, on a geometric time grid. A slope near one on
/// the log-log fit is the expected martingale-style linear growth.
#[derive(Debug, Clone)]
pub struct DeviationGrowth {
    pub times: Vec<f64>,
    /// Per arrival entry: E[sup_{k<=t} |A(k) - lambda k|^2] on the grid.
    pub arrival_moments: Vec<Vec<f64>>,
    /// Per queue: same for routed arrivals, against the empirical rate.
    pub routed_moments: Vec<Vec<f64>>,
    /// Per queue: same for departures.
    pub departure_moments: Vec<Vec<f64>>,
    pub arrival_slopes: Vec<f64>,
    pub routed_slopes: Vec<f64>,
    pub departure_slopes: Vec<f64>,
}

fn loglog_slope(times: &[f64], moments: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(moments)
        .filter(|&(_, &m)| m > 1e-12)
        .map(|(&t, &m)| (t.ln(), m.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Measures sup-deviation second moments of the arrival, routing, and
/// departure processes from linear paths (model rate for arrivals, long-run
/// empirical rate for routing/departures), averaged over the replications,
/// and fits their log-log growth.
pub fn deviation_growth(
    trajs: &[SystemTrajectory],
    net: &Network,
    grid_points: usize,
) -> Result<DeviationGrowth, DiffusionError> {
    let Some(first) = trajs.first() else { return Err(DiffusionError::EmptyPath) };
    let horizon = first.horizon;
    if horizon < 2 || grid_points < 2 {
        return Err(DiffusionError::EmptyPath);
    }
    let entries = net.spec().arrivals.entries.len();
    let queues = net.queue_count();

    // Geometric grid of evaluation times.
    let mut times = Vec::with_capacity(grid_points);
    for k in 0..grid_points {
        let t = (horizon as f64).powf((k + 1) as f64 / grid_points as f64).round() as u64;
        let t = t.clamp(1, horizon);
        if times.last() != Some(&t) {
            times.push(t);
        }
    }

    let mut arrival_moments = vec![vec![0.0; times.len()]; entries];
    let mut routed_moments = vec![vec![0.0; times.len()]; queues];
    let mut departure_moments = vec![vec![0.0; times.len()]; queues];

    for traj in trajs {
        if traj.horizon != horizon {
            return Err(DiffusionError::HorizonTooShort { needed: horizon, have: traj.horizon });
        }
        // Long-run empirical rates for the service-driven processes.
        let mut final_r = vec![0u64; queues];
        let mut final_d = vec![0u64; queues];
        traj.replay(net, |state| {
            if state.slot == horizon {
                final_r.copy_from_slice(&state.cum_routed);
                final_d.copy_from_slice(&state.cum_departures);
            }
        })?;
        let r_rate: Vec<f64> = final_r.iter().map(|&x| x as f64 / horizon as f64).collect();
        let d_rate: Vec<f64> = final_d.iter().map(|&x| x as f64 / horizon as f64).collect();
        let a_rate: Vec<f64> = net.spec().arrivals.entries.iter().map(|e| e.mean).collect();

        let mut sup_a = vec![0.0f64; entries];
        let mut sup_r = vec![0.0f64; queues];
        let mut sup_d = vec![0.0f64; queues];
        let mut next_grid = 0usize;
        traj.replay(net, |state| {
            let t = state.slot;
            if t > 0 {
                for e in 0..entries {
                    sup_a[e] = sup_a[e].max((state.cum_arrivals[e] as f64 - a_rate[e] * t as f64).abs());
                }
                for q in 0..queues {
                    sup_r[q] = sup_r[q].max((state.cum_routed[q] as f64 - r_rate[q] * t as f64).abs());
                    sup_d[q] = sup_d[q].max((state.cum_departures[q] as f64 - d_rate[q] * t as f64).abs());
                }
            }
            if next_grid < times.len() && times[next_grid] == t {
                for e in 0..entries {
                    arrival_moments[e][next_grid] += sup_a[e] * sup_a[e];
                }
                for q in 0..queues {
                    routed_moments[q][next_grid] += sup_r[q] * sup_r[q];
                    departure_moments[q][next_grid] += sup_d[q] * sup_d[q];
                }
                next_grid += 1;
            }
        })?;
    }

    let reps = trajs.len() as f64;
    for m in arrival_moments.iter_mut().chain(&mut routed_moments).chain(&mut departure_moments) {
        for x in m.iter_mut() {
            *x /= reps;
        }
    }
    let tf: Vec<f64> = times.iter().map(|&t| t as f64).collect();
    let arrival_slopes = arrival_moments.iter().map(|m| loglog_slope(&tf, m)).collect();
    let routed_slopes = routed_moments.iter().map(|m| loglog_slope(&tf, m)).collect();
    let departure_slopes = departure_moments.iter().map(|m| loglog_slope(&tf, m)).collect();

    Ok(DeviationGrowth {
        times: tf,
        arrival_moments,
        routed_moments,
        departure_moments,
        arrival_slopes,
        routed_slopes,
        departure_slopes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrainOutcome {
    /// First scaled time at which the queue norm fell to the threshold.
    Drained(f64),
    HorizonExceeded,
}

/// First passage of the path's Euclidean norm below `threshold`.
pub fn drain_time(path: &ScaledPath, threshold: f64) -> Result<DrainOutcome, DiffusionError> {
    if path.values.is_empty() {
        return Err(DiffusionError::EmptyPath);
    }
    for (k, v) in path.values.iter().enumerate() {
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= threshold {
            return Ok(DrainOutcome::Drained(path.times[k]));
        }
    }
    Ok(DrainOutcome::HorizonExceeded)
}
