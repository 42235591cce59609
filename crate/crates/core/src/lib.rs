//! Discrete-time simulation and heavy-traffic analysis of multihop wireless
//! networks under a delay-aware backpressure policy.
//!
//! The crate is organized around the lifecycle of an experiment:
//!
//! - [`topology`] declares the network (nodes, directed links, fixed-route
//!   flows, interference sets) and enumerates feasible link schedules.
//! - [`stochastic`] owns the exogenous randomness: i.i.d. arrival processes,
//!   the i.i.d. channel-state process, and the seeded replication streams.
//! - [`scheduler`] implements the per-slot control: logistic queue weights,
//!   backpressure differentials, and the weighted-rate maximization, plus an
//!   exhaustive oracle for testing.
//! - [`engine`] runs the slotted simulation loop with exact integer
//!   bookkeeping of the cumulative counting processes.
//! - [`capacity`] computes the capacity-region boundary along a ray via a
//!   time-sharing linear program, the outer normal from the LP duals, and the
//!   drift/variance parameters of the Brownian model.
//! - [`diffusion`] holds the analysis layer: fluid/diffusion rescaling, the
//!   workload decomposition and Skorokhod regulator, the reflected-Brownian
//!   stationary law, the closed-form queue approximation, and the
//!   Lyapunov / state-space-collapse / law-of-large-numbers diagnostics.

pub mod capacity;
pub mod diffusion;
pub mod engine;
pub mod presets;
pub mod scheduler;
pub mod simplex;
pub mod stochastic;
pub mod topology;

pub use capacity::{capacity_scale, ht_params, invariant_point, CapacityResult, HeavyTrafficParams, PsiMode};
pub use engine::{run, run_replications, stationary_stats, verify_conservation, workload, SimConfig, SystemTrajectory};
pub use scheduler::{backpressure, oracle_solve_schedule, solve_schedule, weight, Allocation, PolicyParams};
pub use stochastic::{make_product_channel, sample_arrivals, sample_channel, ArrivalModel, ChannelModel, RngStream};
pub use topology::{enumerate_schedules, validate_network, Network, NetworkSpec, Schedule};
