//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured values (run with `cargo test --test acceptance --
//! --nocapture` to see the lines for passing criteria too).
//!
//! Criteria 2 and 3 compare simulated queue levels against the published
//! reference tables. Those levels imply a service variability far above what
//! the modeled channel can produce, so a faithful simulator does not reach
//! them; the tests state the required bands and fail with the measured
//! values rather than loosening the check.

use bpsim_core::capacity::{capacity_scale, ht_params, invariant_point, PsiMode};
use bpsim_core::diffusion::{
    lyapunov_l1, queue_approx, rbm_stationary, scale_queues, skorokhod_regulator, ssc_distance, uv_decompose,
    ScaleKind,
};
use bpsim_core::engine::{run, run_replications, stationary_stats, verify_conservation, SimConfig, SystemTrajectory};
use bpsim_core::presets::{star, star_asymmetric_targets, single_link_with, two_hop_tandem, STAR_BOUNDARY_POINT, STAR_SIGMA_HAT_SQ};
use bpsim_core::scheduler::{
    allocation_objective, oracle_solve_schedule, solve_schedule, FlowPolicy, PolicyParams,
};
use bpsim_core::stochastic::{uniform_product_channel, ArrivalEntry, ArrivalModel, RngStream};
use bpsim_core::topology::{node_exclusive_interference, Flow, FlowId, Link, LinkId, Network, NetworkSpec, NodeId};
use rand::Rng;

fn criterion(num: u32, name: &str, pass: bool, detail: &str) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("acceptance criterion {num} ({name}): {verdict} - {detail}");
    pass
}

const TABLE2_LAMBDAS: [f64; 8] = [0.640, 0.641, 0.642, 0.643, 0.644, 0.645, 0.646, 0.647];
const TABLE2_APPROX: [i64; 8] = [232, 258, 290, 332, 387, 465, 581, 775];
const TABLE2_SIMULATED: [f64; 8] = [233.0, 263.0, 319.0, 367.0, 381.0, 479.0, 517.0, 568.0];

fn table2_approx(lam: f64) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sigma_sq = 2.0 * lam + STAR_SIGMA_HAT_SQ;
    queue_approx(&[s, s], sigma_sq, &[lam, lam], &STAR_BOUNDARY_POINT).unwrap()[0]
}

#[test]
fn criterion_01_table2_approximation_column() {
    let mut detail = String::new();
    let mut pass = true;
    for (i, &lam) in TABLE2_LAMBDAS.iter().enumerate() {
        let rounded = table2_approx(lam).round() as i64;
        if (rounded - TABLE2_APPROX[i]).abs() > 1 {
            pass = false;
        }
        detail.push_str(&format!("{rounded} "));
    }
    detail.push_str(&format!("(reference {TABLE2_APPROX:?}, tolerance +/-1)"));
    assert!(criterion(1, "table2 approximation column", pass, &detail));
}

#[test]
fn criterion_02_table2_simulated_column() {
    let mut pass = true;
    let mut detail = String::new();
    for (i, &lam) in TABLE2_LAMBDAS.iter().enumerate() {
        let net = Network::compile(star(lam, lam)).unwrap();
        let config = SimConfig::new(100_000).with_seed(1).with_replications(20);
        let trajs = run_replications(&net, &net.spec().policy, &config).unwrap();
        let sim = stationary_stats(&trajs, 0.0).unwrap().per_flow[0].mean;
        let row_ok = if lam <= 0.645 {
            let rel = (sim - TABLE2_SIMULATED[i]).abs() / TABLE2_SIMULATED[i];
            detail.push_str(&format!("lambda {lam}: sim {sim:.1} vs reference {} (dev {:.0}%, band 20%); ", TABLE2_SIMULATED[i], rel * 100.0));
            rel <= 0.20
        } else {
            let approx = table2_approx(lam);
            let rel = (sim - approx).abs() / approx;
            detail.push_str(&format!("lambda {lam}: sim {sim:.1} vs approx {approx:.1} (dev {:.0}%, band 40%); ", rel * 100.0));
            rel <= 0.40
        };
        pass &= row_ok;
    }
    assert!(criterion(2, "table2 simulated column", pass, &detail));
}

#[test]
fn criterion_03_table3_targets() {
    let reference: [(f64, [f64; 2]); 2] = [(0.63, [213.0, 98.0]), (0.64, [264.0, 110.0])];
    let targets = [250.0, 100.0];
    let mut pass = true;
    let mut detail = String::new();
    for (lam, expect) in reference {
        let net = Network::compile(star_asymmetric_targets(lam)).unwrap();
        let config = SimConfig::new(100_000).with_seed(1).with_replications(20);
        let trajs = run_replications(&net, &net.spec().policy, &config).unwrap();
        let stats = stationary_stats(&trajs, 0.0).unwrap();
        for f in 0..2 {
            let got = stats.per_flow[f].mean;
            let rel = (got - expect[f]).abs() / expect[f];
            detail.push_str(&format!("lambda {lam} flow {f}: {got:.1} vs {} (dev {:.0}%, band 25%); ", expect[f], rel * 100.0));
            pass &= rel <= 0.25;
        }
        if lam == 0.63 {
            for f in 0..2 {
                let got = stats.per_flow[f].mean;
                let ok = got <= 1.2 * targets[f];
                detail.push_str(&format!("flow {f} mean {got:.1} <= 1.2 x target {}: {}; ", targets[f], ok));
                pass &= ok;
            }
        }
    }
    assert!(criterion(3, "table3 targets met", pass, &detail));
}

#[test]
fn criterion_04_capacity_boundary() {
    let net = Network::compile(star(0.64, 0.64)).unwrap();
    let cap = capacity_scale(&net, &[1.0, 1.0]).unwrap();
    // Brute-force oracle: enumerate all 256 channel states; serving the
    // best link each state and splitting ties evenly serves each link at
    // E[max gain]/4 by symmetry, and uniform duals certify optimality.
    let mut sum_max = 0u64;
    for h in net.spec().channel.states.iter() {
        sum_max += *h.iter().max().unwrap() as u64;
    }
    let oracle = sum_max as f64 / 256.0 / 4.0;
    let exact = 335.0 / 512.0;
    let pass = (cap.theta - oracle).abs() <= 1e-4
        && (oracle - exact).abs() < 1e-12
        && ((cap.theta * 100.0).round() / 100.0 - 0.65).abs() < 1e-12
        && cap.dual_bound - cap.primal_bound <= 1e-6;
    let detail = format!(
        "theta* {} vs oracle {oracle} (= 335/512), certificate gap {:.2e}, rounds to 0.65",
        cap.theta,
        cap.dual_bound - cap.primal_bound
    );
    assert!(criterion(4, "capacity boundary", pass, &detail));
}

/// Random two-relay instances exercising multiple schedules per slot and
/// shared-relay flows.
fn random_instance(rng: &mut RngStream) -> (Network, Vec<u64>, usize) {
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
            FlowPolicy {
                a1: rng.random_range(0.0..2.0),
                a2: rng.random_range(0.1..3.0),
                target_queue: rng.random_range(0.0..10.0),
            },
            FlowPolicy {
                a1: rng.random_range(0.0..2.0),
                a2: rng.random_range(0.1..3.0),
                target_queue: rng.random_range(0.0..10.0),
            },
        ],
    };
    let gain_sets: [&[u32]; 3] = [&[0, 1, 2, 3], &[0, 2], &[1, 3, 5]];
    let gains = gain_sets[rng.random_range(0..3usize)];
    let spec = NetworkSpec {
        node_count: 6,
        interference_sets: node_exclusive_interference(6, &links),
        arrivals: ArrivalModel {
            entries: vec![
                ArrivalEntry::poisson(NodeId(0), FlowId(4), 0.3),
                ArrivalEntry::poisson(NodeId(1), FlowId(5), 0.3),
            ],
        },
        channel: uniform_product_channel(gains, links.len()).unwrap(),
        links,
        flows,
        policy,
        rate_table: None,
    };
    let net = Network::compile(spec).unwrap();
    let queues: Vec<u64> = (0..net.queue_count()).map(|_| rng.random_range(0..25)).collect();
    let h = rng.random_range(0..net.spec().channel.state_count());
    (net, queues, h)
}

#[test]
fn criterion_05_scheduler_matches_oracle() {
    let mut rng = RngStream::new(20_240_501, 0);
    let mut failures = 0u32;
    for _ in 0..1000 {
        let (net, queues, h) = random_instance(&mut rng);
        let alloc = solve_schedule(&queues, h, &net, &net.spec().policy).unwrap();
        let oracle = oracle_solve_schedule(&queues, h, &net, &net.spec().policy, 100_000).unwrap();
        let objective = allocation_objective(&queues, &net, &net.spec().policy, &alloc).unwrap();
        if objective != oracle.objective || alloc != oracle.allocation {
            failures += 1;
        }
    }
    assert!(criterion(
        5,
        "scheduler oracle equivalence",
        failures == 0,
        &format!("{failures} mismatches over 1000 random instances (exact objective equality required)"),
    ));
}

/// A batch of trajectories covering the star, asymmetric targets, a
/// deterministic single link, and a tandem started loaded.
fn trajectory_batch() -> Vec<(Network, SystemTrajectory)> {
    let mut batch = Vec::new();
    for seed in 0..3 {
        let net = Network::compile(star(0.64, 0.64)).unwrap();
        let config = SimConfig::new(20_000).with_seed(seed);
        let traj = run(&net, &net.spec().policy, &config, RngStream::new(seed, 0)).unwrap();
        batch.push((net, traj));
    }
    let net = Network::compile(star_asymmetric_targets(0.63)).unwrap();
    let config = SimConfig::new(20_000).with_seed(9);
    let traj = run(&net, &net.spec().policy, &config, RngStream::new(9, 0)).unwrap();
    batch.push((net, traj));

    let net = Network::compile(single_link_with(ArrivalEntry::deterministic(NodeId(0), FlowId(1), 1), vec![1])).unwrap();
    let traj = run(&net, &net.spec().policy, &SimConfig::new(5_000), RngStream::new(0, 0)).unwrap();
    batch.push((net, traj));

    let net = Network::compile(two_hop_tandem(ArrivalEntry::poisson(NodeId(0), FlowId(2), 0.6))).unwrap();
    let config = SimConfig::new(20_000).with_seed(4).with_initial_queues(vec![500, 250]);
    let traj = run(&net, &net.spec().policy, &config, RngStream::new(4, 0)).unwrap();
    batch.push((net, traj));
    batch
}

#[test]
fn criterion_06_conservation_suite() {
    let batch = trajectory_batch();
    let mut failures = Vec::new();
    for (i, (net, traj)) in batch.iter().enumerate() {
        if let Err(e) = verify_conservation(traj, net) {
            failures.push(format!("trajectory {i}: {e}"));
        }
    }
    assert!(criterion(
        6,
        "conservation suite",
        failures.is_empty(),
        &format!(
            "{} trajectories, every slot checked exactly in integer arithmetic{}",
            batch.len(),
            if failures.is_empty() { String::new() } else { format!("; failures: {failures:?}") }
        ),
    ));
}

#[test]
fn criterion_07_workload_identity() {
    let batch = trajectory_batch();
    let mut pass = true;
    let mut worst_resid = 0.0f64;
    let mut worst_resum = 0.0f64;
    for (net, traj) in &batch {
        let cap = capacity_scale(net, &vec![1.0; net.flow_count()]).unwrap();
        for (mode, psi) in [
            (PsiMode::FullQueue, cap.psi_full.clone()),
            (PsiMode::FlowAggregate, cap.psi_aggregate.clone()),
        ] {
            let lambda_n: Vec<f64> = net.spec().arrivals.entries.iter().map(|e| e.mean).collect();
            let ht = ht_params(net, mode, &psi, &cap.lambda_star, 1.0, &lambda_n, None).unwrap();
            let uv = uv_decompose(traj, net, mode, &psi, &ht.mu).unwrap();
            let scale = 1.0 + uv.u.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
            for t in 0..uv.w.len() {
                // Identity held exactly in subtraction form; the re-summed
                // form may differ by one rounding of the shared terms.
                if uv.w[t] - uv.u[t] != uv.v[t] {
                    pass = false;
                }
                worst_resum = worst_resum.max((uv.w[t] - (uv.u[t] + uv.v[t])).abs() / scale);
            }
            worst_resid = worst_resid.max(uv.max_defining_residual / scale);
        }
    }
    pass &= worst_resid <= 1e-9 && worst_resum <= 1e-12;
    assert!(criterion(
        7,
        "workload identity",
        pass,
        &format!(
            "W - U == V bitwise on every slot of {} trajectories x 2 spaces; defining-formula residual {worst_resid:.2e}, re-summation residual {worst_resum:.2e}",
            batch.len()
        ),
    ));
}

#[test]
fn criterion_08_regulator_suite() {
    let mut rng = RngStream::new(88, 0);
    let mut failures = 0u32;
    let mut worst_comp = 0.0f64;
    for _ in 0..1000 {
        let len = rng.random_range(2..300usize);
        let mut u = vec![rng.random_range(0.0..3.0)];
        for _ in 1..len {
            let step = rng.random_range(-1.0..1.0);
            let last = *u.last().unwrap();
            u.push(last + step);
        }
        let reg = skorokhod_regulator(&u).unwrap();
        let mut ok = reg.v[0] == 0.0;
        let mut comp = 0.0;
        for t in 1..len {
            ok &= reg.v[t] >= reg.v[t - 1];
            ok &= reg.w[t] >= 0.0;
            comp += reg.w[t] * (reg.v[t] - reg.v[t - 1]);
        }
        ok &= comp.abs() <= 1e-9;
        worst_comp = worst_comp.max(comp.abs());

        // Minimality against randomized feasible competitors.
        for _ in 0..3 {
            let mut v2 = vec![0.0f64];
            for t in 1..len {
                let needed = (-u[t]).max(0.0);
                v2.push(v2[t - 1].max(needed) + rng.random_range(0.0..0.5));
            }
            for t in 0..len {
                ok &= u[t] + v2[t] >= -1e-12;
                ok &= v2[t] >= reg.v[t] - 1e-12;
            }
        }
        if !ok {
            failures += 1;
        }
    }
    assert!(criterion(
        8,
        "regulator suite",
        failures == 0,
        &format!("{failures} failures over 1000 random paths; worst complementarity {worst_comp:.2e} (tolerance 1e-9)"),
    ));
}

#[test]
fn criterion_09_rbm_mean_vs_quadrature() {
    let mut worst = 0.0f64;
    for &b in &[-0.25f64, -1.0, -3.0] {
        for &s2 in &[0.5f64, 2.0, 9.28] {
            let law = rbm_stationary(b, s2).unwrap();
            let upper = 60.0 * law.mean();
            let steps = 4_000_000usize;
            let h = upper / steps as f64;
            let mut integral = 0.5 * (law.survival(0.0) + law.survival(upper));
            for k in 1..steps {
                integral += law.survival(k as f64 * h);
            }
            integral *= h;
            worst = worst.max((integral - law.mean()).abs());
        }
    }
    assert!(criterion(
        9,
        "rbm stationary mean",
        worst <= 1e-6,
        &format!("max |quadrature - closed form| = {worst:.2e} over a 3x3 (b*, sigma^2) grid (tolerance 1e-6)"),
    ));
}

#[test]
fn criterion_10_lyapunov_linear_drain() {
    let h = 1e-3;
    let steps = (5.0 / h) as usize;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let values: Vec<Vec<f64>> = times.iter().map(|&t| vec![(1.0 - t).max(0.0)]).collect();
    let params = PolicyParams { flows: vec![FlowPolicy { a1: 0.0, a2: 1.0, target_queue: 0.0 }] };
    let l1 = lyapunov_l1(&times, &values, &[0], &params, 0.0).unwrap();
    let expect = (-1.0f64).exp();
    let err = (l1.value - expect).abs();
    assert!(criterion(
        10,
        "lyapunov linear-drain oracle",
        err <= 2e-3,
        &format!("L1(0) = {:.6} vs 1/e = {expect:.6}, |err| = {err:.2e} (tolerance 2e-3 at step 1e-3)", l1.value),
    ));
}

#[test]
fn criterion_11_stability_trend_and_ssc() {
    // Fluid-scaled queue norm at a fixed fluid horizon, decreasing in n.
    let fluid_t = 20u64;
    let seeds = 20u64;
    let mut votes = 0u32;
    for seed in 0..seeds {
        let mut norms = Vec::new();
        for &n in &[10u64, 100, 1000] {
            let net = Network::compile(star(0.5, 0.5)).unwrap();
            let config = SimConfig::new(n * fluid_t).with_seed(seed);
            let traj = run(&net, &net.spec().policy, &config, RngStream::new(seed, 0)).unwrap();
            let path = scale_queues(&traj, &net, n, ScaleKind::Fluid, None).unwrap();
            let last = path.values.last().unwrap();
            norms.push(last.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        if norms[0] > norms[1] && norms[1] > norms[2] {
            votes += 1;
        }
    }
    let majority = votes * 2 > seeds as u32;

    // State-space collapse at lambda = 0.645: reported, not asserted.
    let net = Network::compile(star(0.645, 0.645)).unwrap();
    let config = SimConfig::new(100_000).with_seed(3);
    let traj = run(&net, &net.spec().policy, &config, RngStream::new(3, 0)).unwrap();
    let cap = capacity_scale(&net, &[1.0, 1.0]).unwrap();
    let psi = cap.psi_aggregate.clone();
    let phi = invariant_point(&net, &net.spec().policy, PsiMode::FlowAggregate, &psi).unwrap();
    let mut sum = 0.0;
    let mut count = 0u64;
    for t in traj.horizon / 2..=traj.horizon {
        let q = [traj.flow_total(t, 0) as f64, traj.flow_total(t, 1) as f64];
        if let Ok(d) = ssc_distance(&q, &psi, &phi) {
            sum += d;
            count += 1;
        }
    }
    let ssc_avg = if count > 0 { sum / count as f64 } else { f64::NAN };

    assert!(criterion(
        11,
        "stability trend",
        majority,
        &format!(
            "fluid norm at t={fluid_t} decreased across n = 10/100/1000 in {votes}/{seeds} seeds (majority required); \
             ssc distance time-average at lambda 0.645 = {ssc_avg:.4} (reported, not asserted)"
        ),
    ));
}
