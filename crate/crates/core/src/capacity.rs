//! Capacity-region boundary along a ray, the outer normal, and the
//! drift/variance parameters of the one-dimensional Brownian workload model.
//!
//! The rate region is the standard time-sharing polytope: per channel state a
//! probability distribution over the maximal schedules, averaged by the state
//! distribution. The boundary scale along a direction is a linear program;
//! the binding link duals, lifted to queue space, give the outer normal.

use thiserror::Error;

use crate::scheduler::{weight, PolicyParams};
use crate::simplex::{self, Constraint, Problem, Relation, SimplexError};
use crate::topology::{LinkId, Network};

#[derive(Debug, Error)]
pub enum CapacityError {
    #[error("direction has {got} entries, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("direction must be nonnegative and nonzero")]
    BadDirection,
    #[error("direction routes no traffic over any link")]
    NoTraffic,
    #[error("time-sharing LP failed: {0}")]
    Lp(#[from] SimplexError),
    #[error("invariant point solve did not converge")]
    NoConvergence,
    #[error("psi must be nonnegative with positive norm")]
    BadPsi,
    #[error("{what} has {got} entries, expected {expected}")]
    BadVector { what: &'static str, got: usize, expected: usize },
}

/// Which space the workload direction lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiMode {
    /// One coordinate per queue (node, flow); link duals are lifted by
    /// remaining-route sums.
    FullQueue,
    /// One coordinate per flow; every transmission of a flow counts with the
    /// flow's weight.
    FlowAggregate,
}

/// Boundary point along a direction with its certificates and normal.
#[derive(Debug, Clone)]
pub struct CapacityResult {
    /// Boundary scale: sup { theta : theta * direction is stabilizable }.
    pub theta: f64,
    pub direction: Vec<f64>,
    /// theta * direction.
    pub lambda_star: Vec<f64>,
    /// Link duals beta, scaled so sum_e beta_e rho_e = 1 (rho_e the per-link
    /// traffic of a unit direction).
    pub link_duals: Vec<f64>,
    /// Unit outer normal in full queue space.
    pub psi_full: Vec<f64>,
    /// Unit outer normal in flow-aggregate space.
    pub psi_aggregate: Vec<f64>,
    /// Links whose rate constraint binds at the optimum.
    pub binding_links: Vec<LinkId>,
    /// Set when the active face looks degenerate (a binding link with zero
    /// dual, or a nonbinding link with positive dual).
    pub degenerate: bool,
    /// Certified bounds: feasible time-sharing value and dual value.
    pub primal_bound: f64,
    pub dual_bound: f64,
}

/// Per-link required rate of a unit-direction load.
fn link_loads(net: &Network, direction: &[f64]) -> Vec<f64> {
    let mut rho = vec![0.0; net.link_count()];
    for (fi, flow) in net.spec().flows.iter().enumerate() {
        for &lid in &flow.route {
            rho[lid.0 as usize] += direction[fi];
        }
    }
    rho
}

/// theta achieved by an explicit time-sharing plan `p[h][s]` (rows need not
/// be perfectly normalized; they are rescaled). Any plan certifies a lower
/// bound on the boundary scale.
pub fn evaluate_time_sharing(net: &Network, direction: &[f64], plan: &[Vec<f64>]) -> Result<f64, CapacityError> {
    let rho = checked_loads(net, direction)?;
    let states = net.spec().channel.state_count();
    let schedules = net.schedules();
    if plan.len() != states {
        return Err(CapacityError::BadVector { what: "plan", got: plan.len(), expected: states });
    }
    let mut service = vec![0.0; net.link_count()];
    for (h, row) in plan.iter().enumerate() {
        if row.len() != schedules.len() {
            return Err(CapacityError::BadVector { what: "plan row", got: row.len(), expected: schedules.len() });
        }
        let total: f64 = row.iter().copied().filter(|p| *p > 0.0).sum();
        if total <= 0.0 {
            continue;
        }
        let gamma = net.spec().channel.probs[h];
        for (s, &p) in row.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            for &link in &schedules[s].links {
                service[link.0 as usize] += gamma * (p / total) * net.rate(h, link) as f64;
            }
        }
    }
    let mut theta = f64::INFINITY;
    for e in 0..net.link_count() {
        if rho[e] > 0.0 {
            theta = theta.min(service[e] / rho[e]);
        }
    }
    Ok(theta)
}

/// Dual value of nonnegative link weights: an upper bound on the boundary
/// scale for any weights with positive direction-weighted mass.
pub fn evaluate_dual(net: &Network, direction: &[f64], link_weights: &[f64]) -> Result<f64, CapacityError> {
    let rho = checked_loads(net, direction)?;
    if link_weights.len() != net.link_count() {
        return Err(CapacityError::BadVector {
            what: "link weights",
            got: link_weights.len(),
            expected: net.link_count(),
        });
    }
    let scale: f64 = link_weights.iter().zip(&rho).map(|(b, r)| b.max(0.0) * r).sum();
    if scale <= 0.0 {
        return Err(CapacityError::BadPsi);
    }
    let mut value = 0.0;
    for (h, &gamma) in net.spec().channel.probs.iter().enumerate() {
        let mut best = 0.0f64;
        for schedule in net.schedules() {
            let w: f64 = schedule
                .links
                .iter()
                .map(|&link| link_weights[link.0 as usize].max(0.0) * net.rate(h, link) as f64)
                .sum();
            best = best.max(w);
        }
        value += gamma * best;
    }
    Ok(value / scale)
}

fn checked_loads(net: &Network, direction: &[f64]) -> Result<Vec<f64>, CapacityError> {
    if direction.len() != net.flow_count() {
        return Err(CapacityError::DimensionMismatch { got: direction.len(), expected: net.flow_count() });
    }
    if direction.iter().any(|d| !d.is_finite() || *d < 0.0) || direction.iter().all(|d| *d == 0.0) {
        return Err(CapacityError::BadDirection);
    }
    let rho = link_loads(net, direction);
    if rho.iter().all(|r| *r == 0.0) {
        return Err(CapacityError::NoTraffic);
    }
    Ok(rho)
}

/// Lifts link duals to the full queue space: each queue is weighted by the
/// sum of its flow's remaining-route link duals.
pub fn lift_duals_full(net: &Network, link_duals: &[f64]) -> Vec<f64> {
    let mut psi = vec![0.0; net.queue_count()];
    for (fi, flow) in net.spec().flows.iter().enumerate() {
        let route = &flow.route;
        for (hop, &qi) in net.route_queues(fi).iter().enumerate() {
            psi[qi] = route[hop..].iter().map(|l| link_duals[l.0 as usize]).sum();
        }
    }
    psi
}

/// Lifts link duals to flow-aggregate space: whole-route sums.
pub fn lift_duals_aggregate(net: &Network, link_duals: &[f64]) -> Vec<f64> {
    net.spec()
        .flows
        .iter()
        .map(|flow| flow.route.iter().map(|l| link_duals[l.0 as usize]).sum())
        .collect()
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.into_iter().map(|x| x / norm).collect()
    } else {
        v
    }
}

/// Computes the boundary scale along `direction` by the time-sharing LP,
/// recovers the link duals, and certifies the optimum by evaluating the
/// implied primal plan and dual weights directly.
pub fn capacity_scale(net: &Network, direction: &[f64]) -> Result<CapacityResult, CapacityError> {
    let rho = checked_loads(net, direction)?;
    let states = net.spec().channel.state_count();
    let schedules = net.schedules().len();

    // Variable layout: 0 = theta, then p[h][s].
    let var = |h: usize, s: usize| 1 + h * schedules + s;
    let num_vars = 1 + states * schedules;
    let mut objective = vec![0.0; num_vars];
    objective[0] = 1.0;

    let mut constraints = Vec::new();
    let mut link_rows = Vec::new();
    for e in 0..net.link_count() {
        if rho[e] == 0.0 {
            continue;
        }
        let mut coeffs = vec![(0usize, rho[e])];
        for h in 0..states {
            let gamma = net.spec().channel.probs[h];
            let rate = net.rate(h, LinkId(e as u32)) as f64;
            if rate == 0.0 || gamma == 0.0 {
                continue;
            }
            for (s, schedule) in net.schedules().iter().enumerate() {
                if schedule.contains(LinkId(e as u32)) {
                    coeffs.push((var(h, s), -gamma * rate));
                }
            }
        }
        link_rows.push((e, constraints.len()));
        constraints.push(Constraint { coeffs, relation: Relation::Le, rhs: 0.0 });
    }
    for h in 0..states {
        let coeffs = (0..schedules).map(|s| (var(h, s), 1.0)).collect();
        constraints.push(Constraint { coeffs, relation: Relation::Eq, rhs: 1.0 });
    }

    let solution = simplex::solve(&Problem { num_vars, objective, constraints })?;
    let theta = solution.x[0];

    // Primal certificate: re-evaluate the plan outside the solver.
    let plan: Vec<Vec<f64>> = (0..states)
        .map(|h| (0..schedules).map(|s| solution.x[var(h, s)].max(0.0)).collect())
        .collect();
    let primal_bound = evaluate_time_sharing(net, direction, &plan)?;

    // Dual certificate: the link-row duals, rescaled to unit direction mass.
    let mut link_duals = vec![0.0; net.link_count()];
    for &(e, row) in &link_rows {
        link_duals[e] = solution.duals[row].max(0.0);
    }
    let mass: f64 = link_duals.iter().zip(&rho).map(|(b, r)| b * r).sum();
    if mass > 0.0 {
        for b in &mut link_duals {
            *b /= mass;
        }
    }
    let dual_bound = evaluate_dual(net, direction, &link_duals)?;

    // Active face: links whose service equals the required rate.
    let mut service = vec![0.0; net.link_count()];
    for h in 0..states {
        let gamma = net.spec().channel.probs[h];
        for (s, schedule) in net.schedules().iter().enumerate() {
            let p = solution.x[var(h, s)];
            if p > 0.0 {
                for &link in &schedule.links {
                    service[link.0 as usize] += gamma * p * net.rate(h, link) as f64;
                }
            }
        }
    }
    let tol = 1e-7 * (1.0 + theta.abs());
    let mut binding_links = Vec::new();
    let mut degenerate = false;
    for e in 0..net.link_count() {
        if rho[e] == 0.0 {
            continue;
        }
        let slack = service[e] - theta * rho[e];
        let binding = slack <= tol;
        if binding {
            binding_links.push(LinkId(e as u32));
        }
        if binding != (link_duals[e] > 1e-9) {
            degenerate = true;
        }
    }

    Ok(CapacityResult {
        theta,
        direction: direction.to_vec(),
        lambda_star: direction.iter().map(|d| d * theta).collect(),
        psi_full: normalized(lift_duals_full(net, &link_duals)),
        psi_aggregate: normalized(lift_duals_aggregate(net, &link_duals)),
        link_duals,
        binding_links,
        degenerate,
        primal_bound,
        dual_bound,
    })
}

/// Drift and variance inputs of the Brownian workload model.
#[derive(Debug, Clone)]
pub struct HeavyTrafficParams {
    pub mode: PsiMode,
    pub psi: Vec<f64>,
    pub lambda_star: Vec<f64>,
    /// Scale index of the heavy-traffic sequence.
    pub n: f64,
    /// n * <psi, lambda^n - lambda*> in the psi space.
    pub b_star: f64,
    /// Max service in direction psi, per channel state.
    pub mu: Vec<f64>,
    pub mu_hat: f64,
    /// Computed service variance in direction psi.
    pub sigma_hat_sq: f64,
    /// Value actually used downstream (override, if supplied).
    pub sigma_hat_sq_used: f64,
    /// Total arrival variance plus the used service variance.
    pub sigma_sq: f64,
}

/// Lifts a per-flow rate vector into the psi space.
fn lift_rates(net: &Network, mode: PsiMode, rates: &[f64]) -> Vec<f64> {
    match mode {
        PsiMode::FlowAggregate => rates.to_vec(),
        PsiMode::FullQueue => {
            let mut out = vec![0.0; net.queue_count()];
            for fi in 0..net.flow_count() {
                out[net.source_queue(fi)] = rates[fi];
            }
            out
        }
    }
}

/// Workload drain per packet served on `link` for `flow`, in the psi space.
fn drain_coefficient(net: &Network, mode: PsiMode, psi: &[f64], link: LinkId, fi: usize, hop: usize) -> f64 {
    match mode {
        PsiMode::FlowAggregate => psi[fi],
        PsiMode::FullQueue => {
            let up = psi[net.route_queues(fi)[hop]];
            let down = net.downstream_queue(link, fi).map_or(0.0, |dq| psi[dq]);
            up - down
        }
    }
}

/// Computes mu_h per channel state (max allocation in direction psi), the
/// first two moments, the heavy-traffic drift, and the total variance.
pub fn ht_params(
    net: &Network,
    mode: PsiMode,
    psi: &[f64],
    lambda_star: &[f64],
    n: f64,
    lambda_n: &[f64],
    sigma_hat_sq_override: Option<f64>,
) -> Result<HeavyTrafficParams, CapacityError> {
    let dim = match mode {
        PsiMode::FullQueue => net.queue_count(),
        PsiMode::FlowAggregate => net.flow_count(),
    };
    if psi.len() != dim {
        return Err(CapacityError::BadVector { what: "psi", got: psi.len(), expected: dim });
    }
    if lambda_star.len() != net.flow_count() || lambda_n.len() != net.flow_count() {
        return Err(CapacityError::BadVector {
            what: "arrival rates",
            got: lambda_n.len(),
            expected: net.flow_count(),
        });
    }

    let states = net.spec().channel.state_count();
    let mut mu = Vec::with_capacity(states);
    for h in 0..states {
        let mut best = 0.0f64;
        for schedule in net.schedules() {
            let mut total = 0.0;
            for &link in &schedule.links {
                let rate = net.rate(h, link) as f64;
                if rate == 0.0 {
                    continue;
                }
                let coeff = net
                    .link_flows(link)
                    .iter()
                    .map(|&(fi, hop)| drain_coefficient(net, mode, psi, link, fi, hop))
                    .fold(0.0f64, f64::max);
                if coeff > 0.0 {
                    total += coeff * rate;
                }
            }
            best = best.max(total);
        }
        mu.push(best);
    }

    let gamma = &net.spec().channel.probs;
    let mu_hat: f64 = mu.iter().zip(gamma).map(|(m, g)| m * g).sum();
    let second: f64 = mu.iter().zip(gamma).map(|(m, g)| m * m * g).sum();
    let sigma_hat_sq = (second - mu_hat * mu_hat).max(0.0);
    let sigma_hat_sq_used = sigma_hat_sq_override.unwrap_or(sigma_hat_sq);

    let diff: Vec<f64> = lambda_n.iter().zip(lambda_star).map(|(l, ls)| l - ls).collect();
    let lifted = lift_rates(net, mode, &diff);
    let b_star = n * lifted.iter().zip(psi).map(|(d, p)| d * p).sum::<f64>();

    let arrival_var: f64 = net.spec().arrivals.entries.iter().map(|e| e.variance).sum();
    let sigma_sq = arrival_var + sigma_hat_sq_used;

    Ok(HeavyTrafficParams {
        mode,
        psi: psi.to_vec(),
        lambda_star: lambda_star.to_vec(),
        n,
        b_star,
        mu,
        mu_hat,
        sigma_hat_sq,
        sigma_hat_sq_used,
        sigma_sq,
    })
}

/// Solves alpha(phi_j) phi_j = k psi_j componentwise with the normalization
/// <psi, phi> = 1, by bisection nested in a scalar search over k. Component j
/// uses the weight parameters of its flow (aggregate mode: j is the flow;
/// full mode: the queue's flow).
pub fn invariant_point(
    net: &Network,
    params: &PolicyParams,
    mode: PsiMode,
    psi: &[f64],
) -> Result<Vec<f64>, CapacityError> {
    let dim = match mode {
        PsiMode::FullQueue => net.queue_count(),
        PsiMode::FlowAggregate => net.flow_count(),
    };
    if psi.len() != dim {
        return Err(CapacityError::BadVector { what: "psi", got: psi.len(), expected: dim });
    }
    if psi.iter().any(|p| !p.is_finite() || *p < 0.0) || psi.iter().all(|p| *p == 0.0) {
        return Err(CapacityError::BadPsi);
    }
    let flow_of = |j: usize| match mode {
        PsiMode::FlowAggregate => j,
        PsiMode::FullQueue => net.flow_of_queue(j),
    };

    // alpha(x) x is strictly increasing in x >= 0 (alpha >= 1, nondecreasing),
    // so each component inverts by bisection, and <psi, phi(k)> is increasing
    // in k, so the normalization also inverts by bisection.
    let component = |j: usize, k: f64| -> f64 {
        let target = k * psi[j];
        if target == 0.0 {
            return 0.0;
        }
        let p = &params.flows[flow_of(j)];
        let g = |x: f64| weight(x, p.target_queue, p.a1, p.a2) * x;
        let mut lo = 0.0f64;
        let mut hi = target; // alpha >= 1 implies phi <= k psi
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let inner = |k: f64| -> f64 { (0..dim).map(|j| psi[j] * component(j, k)).sum() };

    let mut k_hi = 1.0f64;
    let mut guard = 0;
    while inner(k_hi) < 1.0 {
        k_hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(CapacityError::NoConvergence);
        }
    }
    let mut k_lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (k_lo + k_hi);
        if inner(mid) < 1.0 {
            k_lo = mid;
        } else {
            k_hi = mid;
        }
    }
    let k = 0.5 * (k_lo + k_hi);
    let phi: Vec<f64> = (0..dim).map(|j| component(j, k)).collect();

    for (j, &p) in phi.iter().enumerate() {
        let fp = &params.flows[flow_of(j)];
        let residual = weight(p, fp.target_queue, fp.a1, fp.a2) * p - k * psi[j];
        if residual.abs() > 1e-10 {
            return Err(CapacityError::NoConvergence);
        }
    }
    Ok(phi)
}
