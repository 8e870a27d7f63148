//! Energy-minimizing device association, power control, two-step computation
//! offloading and band partitioning for ultra-dense multi-device multi-task MEC
//! networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`] draws reproducible network instances (geometry, channels, tasks).
//! * [`sysmodel`] evaluates a decoded [`sysmodel::Solution`]: rates, proportional
//!   CPU shares, per-task times and energies, the penalized fitness.
//! * [`encoding`] is the five-block chromosome (association, power, first-hop bits,
//!   second-hop bits, band split) with projection onto the feasible box.
//! * [`ga`] and [`pso`] are the adaptive search stages; [`solvers`] chains them
//!   (HAS), runs the traditional hierarchy (HGP) and the CMT / CM baselines.
//! * [`experiment`] is the sweep harness behind the command line tool.

pub mod encoding;
pub mod error;
pub mod experiment;
pub mod ga;
pub mod objective;
pub mod pso;
pub mod scenario;
pub mod seeding;
pub mod solvers;
pub mod sysmodel;
pub mod trace;

pub use error::{Error, Result};
pub use scenario::{generate_scenario, Scenario, ScenarioConfig};
pub use sysmodel::{evaluate, EvalConfig, Evaluation, Solution};
