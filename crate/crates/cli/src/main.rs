mod dump;
mod report;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use bpsim_core::capacity::{capacity_scale, ht_params, invariant_point, PsiMode};
use bpsim_core::diffusion::{
    deviation_growth, drain_time, fslln_check, lyapunov_l1, queue_approx, scale_queues, skorokhod_regulator,
    ssc_distance, uv_decompose, DrainOutcome, ScaleKind,
};
use bpsim_core::engine::{
    run_replications, stationary_stats, verify_conservation, workload, SimConfig, SystemTrajectory,
};
use bpsim_core::presets::{STAR_BOUNDARY_POINT, STAR_SIGMA_HAT_SQ};
use bpsim_core::topology::{validate_network, Network};

use scenario::Scenario;

/// Discrete-time simulator and heavy-traffic analysis toolkit for multihop
/// wireless networks under delay-aware backpressure scheduling.
#[derive(Parser)]
#[command(name = "bpsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file against every network invariant.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Capacity boundary along a direction, the outer normal, and the
    /// Brownian-model parameters.
    Capacity {
        #[arg(long)]
        scenario: PathBuf,
        /// Per-flow direction, comma separated; default: the scenario's
        /// arrival means.
        #[arg(long)]
        direction: Option<String>,
        /// Heavy-traffic scale index used for b*.
        #[arg(long, default_value_t = 1.0)]
        n: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run replications and write trajectories, series, and summary stats.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        overrides: RunOverrides,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Heavy-traffic analysis of a recorded trajectory dump.
    Analyze {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        dump: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Queue levels vs. the closed-form approximation on the star scenario,
    /// across the reference arrival-rate grid.
    Table2 {
        #[command(flatten)]
        overrides: RunOverrides,
        /// Comma-separated arrival-rate grid; default 0.640..0.647.
        #[arg(long)]
        lambdas: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Targeted queue lengths (250, 100) with unequal weight steepness on
    /// the star scenario.
    Table3 {
        #[command(flatten)]
        overrides: RunOverrides,
        /// Comma-separated arrival-rate grid; default 0.63, 0.64, 0.641.
        #[arg(long)]
        lambdas: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunOverrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    /// Worker threads for replication-level parallelism; never changes
    /// output bytes.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Capacity { scenario, direction, n, out } => cmd_capacity(&scenario, direction.as_deref(), n, out.as_deref()),
        Command::Simulate { scenario, overrides, out } => cmd_simulate(&scenario, &overrides, &out),
        Command::Analyze { scenario, dump, out } => cmd_analyze(&scenario, &dump, out.as_deref()),
        Command::Table2 { overrides, lambdas, out } => {
            let grid = parse_lambda_grid(lambdas.as_deref(), &TABLE2_LAMBDAS)?;
            cmd_table2(&overrides, &grid, out.as_deref())
        }
        Command::Table3 { overrides, lambdas, out } => {
            let grid = parse_lambda_grid(lambdas.as_deref(), &TABLE3_LAMBDAS)?;
            cmd_table3(&overrides, &grid, out.as_deref())
        }
    }
}

fn load_scenario(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    Ok(Scenario::from_toml(&text)?)
}

fn compile(scenario: &Scenario) -> anyhow::Result<Network> {
    let spec = scenario.to_network_spec()?;
    Ok(Network::compile(spec)?)
}

fn install_pool(jobs: Option<usize>) -> anyhow::Result<Option<rayon::ThreadPool>> {
    match jobs {
        None => Ok(None),
        Some(j) => Ok(Some(rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build()?)),
    }
}

fn with_pool<T>(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

fn cmd_validate(path: &Path) -> anyhow::Result<()> {
    let scenario = load_scenario(path)?;
    let spec = scenario.to_network_spec()?;
    let report = validate_network(&spec);
    if report.is_ok() {
        println!("ok: scenario '{}' satisfies all network invariants", scenario.name);
        Ok(())
    } else {
        print!("{report}");
        std::process::exit(1);
    }
}

fn parse_direction(text: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow::anyhow!("bad direction component '{s}': {e}")))
        .collect()
}

fn cmd_capacity(path: &Path, direction: Option<&str>, n: f64, out: Option<&Path>) -> anyhow::Result<()> {
    let start = Instant::now();
    let scenario = load_scenario(path)?;
    let net = compile(&scenario)?;
    let direction = match direction {
        Some(text) => parse_direction(text)?,
        None => scenario.arrival_means(),
    };
    let cap = capacity_scale(&net, &direction)?;
    let lambda_n = scenario.arrival_means();
    let lambda_star = scenario.experiment.lambda_star.clone().unwrap_or_else(|| cap.lambda_star.clone());

    let mut text = report::capacity_text(&cap);
    for (mode, psi) in [
        (PsiMode::FlowAggregate, cap.psi_aggregate.clone()),
        (PsiMode::FullQueue, cap.psi_full.clone()),
    ] {
        let ht = ht_params(&net, mode, &psi, &lambda_star, n, &lambda_n, scenario.experiment.sigma_hat_sq)?;
        text.push_str(&report::ht_text(&ht));
        let phi = invariant_point(&net, &net.spec().policy, mode, &psi)?;
        text.push_str(&format!(
            "  phi              ({})\n",
            phi.iter().map(|x| report::fmt6(*x)).collect::<Vec<_>>().join(", ")
        ));
        if let Ok(pred) = queue_approx(&phi, ht.sigma_sq, &lambda_n, &lambda_star) {
            text.push_str(&format!(
                "  queue approx     ({})\n",
                pred.iter().map(|x| report::fmt6(*x)).collect::<Vec<_>>().join(", ")
            ));
        }
    }
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("capacity.txt"), &text)?;
        report::write_sidecar(dir, "capacity", "capacity", &scenario.name, 0, start.elapsed().as_millis())?;
    }
    Ok(())
}

fn effective_config(scenario: &Scenario, overrides: &RunOverrides) -> SimConfig {
    let exp = &scenario.experiment;
    let horizon = overrides.horizon.unwrap_or(exp.horizon);
    let mut config = SimConfig::new(horizon)
        .with_seed(overrides.seed.unwrap_or(exp.seed))
        .with_replications(overrides.reps.unwrap_or(exp.replications));
    if let Some(stride) = exp.record_stride {
        config.record_stride = stride.max(1).min(horizon.max(1));
    }
    if let Some(init) = &exp.initial_queues {
        config.initial_queues = Some(init.clone());
    }
    config
}

fn cmd_simulate(path: &Path, overrides: &RunOverrides, out: &Path) -> anyhow::Result<()> {
    let start = Instant::now();
    let scenario = load_scenario(path)?;
    let net = compile(&scenario)?;
    let config = effective_config(&scenario, overrides);
    let pool = install_pool(overrides.jobs)?;
    let trajs = with_pool(&pool, || run_replications(&net, &net.spec().policy, &config))?;
    for traj in &trajs {
        verify_conservation(traj, &net)?;
    }

    fs::create_dir_all(out)?;
    // Canonicalized scenario echo makes the output directory self-contained.
    fs::write(out.join("scenario.toml"), scenario.to_toml())?;
    let burn = scenario.experiment.burn_in.unwrap_or(0.0);
    let stats = stationary_stats(&trajs, burn)?;

    // Per-replication dumps and strided series.
    let psi_mode = scenario.psi_mode()?;
    let cap = capacity_scale(&net, &scenario.arrival_means()).ok();
    let psi_full = cap.as_ref().map(|c| c.psi_full.clone());
    for (rep, traj) in trajs.iter().enumerate() {
        let mut file = fs::File::create(out.join(format!("rep{rep}.bptj")))?;
        dump::write_trajectory(&mut file, traj)?;
        write_series_csv(&out.join(format!("rep{rep}.csv")), &net, traj, psi_full.as_deref(), config.record_stride)?;
    }

    let mut rows = Vec::new();
    for (f, stat) in stats.per_flow.iter().enumerate() {
        rows.push(format!(
            "{f},{},{},{}",
            report::fmt6(stat.mean),
            report::fmt6(stat.ci_half),
            report::fmt6(stat.variance)
        ));
    }
    report::write_csv(&out.join("summary.csv"), "summary", "flow,mean_queue,ci_half,variance_across_reps", &rows)?;
    report::write_sidecar(out, "run", "simulate", &scenario.name, config.seed, start.elapsed().as_millis())?;

    println!(
        "simulated '{}': {} replications x {} slots ({} space)",
        scenario.name,
        config.replications,
        config.horizon,
        report::mode_name(psi_mode)
    );
    for (f, stat) in stats.per_flow.iter().enumerate() {
        println!("  flow {f}: mean queue {:.2} +/- {:.2}", stat.mean, stat.ci_half);
    }
    println!("outputs in {}", out.display());
    Ok(())
}

fn write_series_csv(
    path: &Path,
    net: &Network,
    traj: &SystemTrajectory,
    psi_full: Option<&[f64]>,
    stride: u64,
) -> anyhow::Result<()> {
    let mut header = String::from("slot");
    for (node, flow) in net.queues() {
        header.push_str(&format!(",q_n{node}_f{flow}"));
    }
    for fi in 0..net.flow_count() {
        header.push_str(&format!(",flow{fi}_total"));
    }
    if psi_full.is_some() {
        header.push_str(",workload");
    }
    let w = match psi_full {
        Some(psi) => Some(workload(traj, net, psi)?),
        None => None,
    };
    let mut rows = Vec::new();
    traj.replay(net, |state| {
        if state.slot % stride != 0 && state.slot != traj.horizon {
            return;
        }
        let mut row = state.slot.to_string();
        for &q in &state.queues {
            row.push_str(&format!(",{q}"));
        }
        for f in 0..net.flow_count() {
            row.push_str(&format!(",{}", traj.flow_total(state.slot, f)));
        }
        if let Some(w) = &w {
            row.push_str(&format!(",{}", report::fmt6(w.values[state.slot as usize])));
        }
        rows.push(row);
    })?;
    report::write_csv(path, "series", &header, &rows)?;
    Ok(())
}

fn cmd_analyze(path: &Path, dump_path: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let start = Instant::now();
    let scenario = load_scenario(path)?;
    let net = compile(&scenario)?;
    let file = fs::File::open(dump_path).with_context(|| format!("opening dump {}", dump_path.display()))?;
    let traj = dump::read_trajectory(std::io::BufReader::new(file))?;
    dump::check_compatibility(&traj, &net)?;
    verify_conservation(&traj, &net)?;

    let lambda_n = scenario.arrival_means();
    let cap = capacity_scale(&net, &lambda_n)?;
    let lambda_star = scenario.experiment.lambda_star.clone().unwrap_or_else(|| cap.lambda_star.clone());
    let mode = scenario.psi_mode()?;
    let psi = match mode {
        PsiMode::FullQueue => cap.psi_full.clone(),
        PsiMode::FlowAggregate => cap.psi_aggregate.clone(),
    };
    let ht = ht_params(&net, mode, &psi, &lambda_star, 1.0, &lambda_n, scenario.experiment.sigma_hat_sq)?;
    let phi = invariant_point(&net, &net.spec().policy, mode, &psi)?;

    let mut text = report::capacity_text(&cap);
    text.push_str(&report::ht_text(&ht));
    text.push_str(&format!(
        "  phi              ({})\n",
        phi.iter().map(|x| report::fmt6(*x)).collect::<Vec<_>>().join(", ")
    ));
    match queue_approx(&phi, ht.sigma_sq, &lambda_n, &lambda_star) {
        Ok(pred) => {
            text.push_str(&format!(
                "  queue approx     ({})\n",
                pred.iter().map(|x| report::fmt6(*x)).collect::<Vec<_>>().join(", ")
            ));
        }
        Err(e) => text.push_str(&format!("  queue approx     unavailable: {e}\n")),
    }
    let stats = stationary_stats(std::slice::from_ref(&traj), scenario.experiment.burn_in.unwrap_or(0.5))?;
    for (f, stat) in stats.per_flow.iter().enumerate() {
        text.push_str(&format!("  simulated mean   flow {f}: {}\n", report::fmt6(stat.mean)));
    }

    // Workload decomposition and regulator.
    let uv = uv_decompose(&traj, &net, mode, &psi, &ht.mu)?;
    let reg = skorokhod_regulator(&uv.u)?;
    let mut comp = 0.0f64;
    let mut sup_gap = 0.0f64;
    for t in 1..reg.v.len() {
        comp += reg.w[t] * (reg.v[t] - reg.v[t - 1]);
        sup_gap = sup_gap.max((reg.w[t] - uv.w[t]).abs());
    }
    text.push_str("workload decomposition\n");
    text.push_str(&format!("  max |V - (X + <psi,R-D>)|   {:.3e}\n", uv.max_defining_residual));
    text.push_str(&format!("  regulator complementarity   {:.3e}\n", comp));
    text.push_str(&format!("  sup |W - reflected U|       {}\n", report::fmt6(sup_gap)));

    // State-space collapse: time-average relative distance, second half.
    let dim = psi.len();
    let mut ssc_sum = 0.0;
    let mut ssc_count = 0u64;
    let mut ssc_undefined = 0u64;
    let half = traj.horizon / 2;
    for t in half..=traj.horizon {
        let q: Vec<f64> = match mode {
            PsiMode::FlowAggregate => (0..dim).map(|f| traj.flow_total(t, f) as f64).collect(),
            PsiMode::FullQueue => {
                let mut v = vec![0.0; dim];
                // Queue vector at recorded snapshots only; skip other slots.
                if let Some(snap) = traj.snapshots.iter().find(|s| s.slot == t) {
                    for (i, &x) in snap.queues.iter().enumerate() {
                        v[i] = x as f64;
                    }
                } else {
                    continue;
                }
                v
            }
        };
        match ssc_distance(&q, &psi, &phi) {
            Ok(d) => {
                ssc_sum += d;
                ssc_count += 1;
            }
            Err(_) => ssc_undefined += 1,
        }
    }
    if ssc_count > 0 {
        text.push_str(&format!(
            "  ssc distance (time-avg, 2nd half)  {} over {} samples ({} zero-workload slots skipped)\n",
            report::fmt6(ssc_sum / ssc_count as f64),
            ssc_count,
            ssc_undefined
        ));
    } else {
        text.push_str("  ssc distance                 undefined (zero workload throughout)\n");
    }

    // Lyapunov values along the fluid-scaled path.
    let n_fluid = (traj.horizon as f64).sqrt().ceil() as u64;
    let fluid = scale_queues(&traj, &net, n_fluid.max(1), ScaleKind::Fluid, None)?;
    let flow_of: Vec<usize> = (0..net.queue_count()).map(|q| net.flow_of_queue(q)).collect();
    text.push_str(&format!("lyapunov along the fluid path (n = {n_fluid})\n"));
    for t in [0.0, 1.0, 2.0] {
        if t <= *fluid.times.last().unwrap() {
            let l1 = lyapunov_l1(&fluid.times, &fluid.values, &flow_of, &net.spec().policy, t)?;
            text.push_str(&format!(
                "  L1({t:.1}) = {} (tail bound {:.3e})\n",
                report::fmt6(l1.value),
                l1.tail_bound
            ));
        }
    }

    // Law-of-large-numbers deviations.
    let n_ll = 100u64.min(((traj.horizon / 2) as f64).sqrt() as u64).max(1);
    let span = (((traj.horizon / n_ll).saturating_sub(1)) as f64 / n_ll as f64).min(10.0);
    if span >= 1.0 / n_ll as f64 {
        let rep = fslln_check(&traj, &net, n_ll, span)?;
        text.push_str(&format!("fluid-limit deviations (n = {n_ll}, span = {span:.3})\n"));
        for (e, d) in rep.arrival_deviation.iter().enumerate() {
            text.push_str(&format!("  arrivals entry {e}   {}\n", report::fmt6(*d)));
        }
        let worst = rep.channel_deviation.iter().cloned().fold(0.0, f64::max);
        text.push_str(&format!("  channel occupation (worst state)  {}\n", report::fmt6(worst)));
    }

    // Deviation growth of the counting processes (single replication).
    if traj.horizon >= 16 {
        let growth = deviation_growth(std::slice::from_ref(&traj), &net, 8)?;
        let worst = |v: &[f64]| v.iter().cloned().fold(0.0f64, f64::max);
        text.push_str("sup-deviation second-moment growth (log-log slopes, 1 replication)\n");
        text.push_str(&format!(
            "  arrivals {}  routed {}  departures {}\n",
            report::fmt6(worst(&growth.arrival_slopes)),
            report::fmt6(worst(&growth.routed_slopes)),
            report::fmt6(worst(&growth.departure_slopes))
        ));
    }

    // Drain time from the initial level, when there is one.
    let init_norm: f64 = traj.initial_queues.iter().map(|&q| (q as f64).powi(2)).sum::<f64>().sqrt();
    if init_norm > 0.0 {
        let n_drain = init_norm.ceil() as u64;
        let path = scale_queues(&traj, &net, n_drain, ScaleKind::Fluid, None)?;
        match drain_time(&path, 1e-3)? {
            DrainOutcome::Drained(t) => text.push_str(&format!("drain time (fluid, n = {n_drain})  {}\n", report::fmt6(t))),
            DrainOutcome::HorizonExceeded => text.push_str("drain time: horizon exceeded\n"),
        }
    } else {
        text.push_str("drain time: not applicable (empty initial queues)\n");
    }

    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("analysis.txt"), &text)?;
        let stride = (traj.horizon / 10_000).max(1);
        let mut rows = Vec::new();
        for t in (0..=traj.horizon).step_by(stride as usize) {
            let t = t as usize;
            rows.push(format!(
                "{t},{},{},{},{},{},{}",
                report::fmt6(uv.w[t]),
                report::fmt6(uv.u[t]),
                report::fmt6(uv.v[t]),
                report::fmt6(uv.x[t]),
                report::fmt6(reg.v[t]),
                report::fmt6(reg.w[t])
            ));
        }
        report::write_csv(&dir.join("uvw.csv"), "uvw", "slot,w,u,v,x,regulator_v,reflected_w", &rows)?;

        // Fluid-scaled queue path for external plotting.
        let mut header = String::from("time");
        for (node, flow) in net.queues() {
            header.push_str(&format!(",q_n{node}_f{flow}"));
        }
        let mut rows = Vec::new();
        let fluid_stride = (fluid.times.len() / 10_000).max(1);
        for (k, t) in fluid.times.iter().enumerate().step_by(fluid_stride) {
            let mut row = report::fmt6(*t);
            for v in &fluid.values[k] {
                row.push_str(&format!(",{}", report::fmt6(*v)));
            }
            rows.push(row);
        }
        report::write_csv(&dir.join(format!("fluid_n{n_fluid}.csv")), "fluid-path", &header, &rows)?;
        report::write_sidecar(dir, "analysis", "analyze", &scenario.name, scenario.experiment.seed, start.elapsed().as_millis())?;
    }
    Ok(())
}

/// The reference arrival-rate grid of the queue-approximation experiment.
pub const TABLE2_LAMBDAS: [f64; 8] = [0.640, 0.641, 0.642, 0.643, 0.644, 0.645, 0.646, 0.647];
pub const TABLE3_LAMBDAS: [f64; 3] = [0.63, 0.64, 0.641];

fn parse_lambda_grid(text: Option<&str>, default: &[f64]) -> anyhow::Result<Vec<f64>> {
    let Some(text) = text else { return Ok(default.to_vec()) };
    let grid = parse_direction(text).context("parsing --lambdas")?;
    if grid.is_empty() || text.trim().is_empty() {
        bail!("the arrival-rate grid must not be empty");
    }
    Ok(grid)
}

fn cmd_table2(overrides: &RunOverrides, grid: &[f64], out: Option<&Path>) -> anyhow::Result<()> {
    let start = Instant::now();
    let pool = install_pool(overrides.jobs)?;
    let seed = overrides.seed.unwrap_or(1);
    let horizon = overrides.horizon.unwrap_or(100_000);
    let reps = overrides.reps.unwrap_or(20);
    if horizon < 1 || reps < 1 {
        bail!("horizon and reps must be >= 1");
    }

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = [s, s];
    let mut rows = Vec::new();
    println!("lambda,simulated,approximation");
    for &lam in grid {
        let net = Network::compile(bpsim_core::presets::star(lam, lam))?;
        let config = SimConfig::new(horizon).with_seed(seed).with_replications(reps);
        let trajs = with_pool(&pool, || run_replications(&net, &net.spec().policy, &config))?;
        let stats = stationary_stats(&trajs, 0.0)?;
        let sim = stats.per_flow[0].mean;
        let sigma_sq = 2.0 * lam + STAR_SIGMA_HAT_SQ;
        let approx = queue_approx(&phi, sigma_sq, &[lam, lam], &STAR_BOUNDARY_POINT)?[0];
        let row = format!("{lam},{},{}", report::fmt6(sim), report::fmt6(approx));
        println!("{row}");
        rows.push(row);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        report::write_csv(&dir.join("table2.csv"), "table2", "lambda,simulated,approximation", &rows)?;
        report::write_sidecar(dir, "table2", "table2", "star", seed, start.elapsed().as_millis())?;
    }
    Ok(())
}

fn cmd_table3(overrides: &RunOverrides, grid: &[f64], out: Option<&Path>) -> anyhow::Result<()> {
    let start = Instant::now();
    let pool = install_pool(overrides.jobs)?;
    let seed = overrides.seed.unwrap_or(1);
    let horizon = overrides.horizon.unwrap_or(100_000);
    let reps = overrides.reps.unwrap_or(20);
    if horizon < 1 || reps < 1 {
        bail!("horizon and reps must be >= 1");
    }

    let mut rows = Vec::new();
    println!("lambda,target_1,target_2,obtained_1,obtained_2");
    for &lam in grid {
        let net = Network::compile(bpsim_core::presets::star_asymmetric_targets(lam))?;
        let config = SimConfig::new(horizon).with_seed(seed).with_replications(reps);
        let trajs = with_pool(&pool, || run_replications(&net, &net.spec().policy, &config))?;
        let stats = stationary_stats(&trajs, 0.0)?;
        let row = format!(
            "{lam},250,100,{},{}",
            report::fmt6(stats.per_flow[0].mean),
            report::fmt6(stats.per_flow[1].mean)
        );
        println!("{row}");
        rows.push(row);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        report::write_csv(&dir.join("table3.csv"), "table3", "lambda,target_1,target_2,obtained_1,obtained_2", &rows)?;
        report::write_sidecar(dir, "table3", "table3", "star", seed, start.elapsed().as_millis())?;
    }
    Ok(())
}
