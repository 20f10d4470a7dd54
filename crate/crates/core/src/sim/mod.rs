//! Multistep MPC with time-varying control horizons and a-posteriori
//! suboptimality estimates.

pub mod example;
pub mod io;
pub mod ocp;
pub mod pendulum;
pub mod run;
pub mod schedule;
pub mod system;

pub use example::{verify_controllability_example, ExampleReport};
pub use ocp::{solve_ocp, OcpBackend, OcpSolution};
pub use run::{estimate_alpha, lyapunov_check, run_mpc, LyapunovReport, MpcRun};
pub use schedule::{phi, sigma, HorizonSchedule, ScheduleRule};
pub use system::{LinearL1, Nonlinear, NonlinearClass, SystemKind, SystemModel};
