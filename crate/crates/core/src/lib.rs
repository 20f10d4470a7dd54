//! Suboptimality bounds for multistep model predictive control.
//!
//! Given a controllability function `β(r, n) = c_n r`, this crate evaluates
//! the closed-form bound `α_{N,m}^ω`, cross-checks it against linear
//! programs, studies its dependence on `(N, m, ω)` and verifies the bound a
//! posteriori on closed-loop simulations.

pub mod alpha;
pub mod error;
pub mod horizon;
pub mod kl0;
pub mod lp;
pub mod numeric;
pub mod oracle;
pub mod sim;
pub mod verify;

pub use alpha::{
    alpha_c1_special, alpha_closed_form, alpha_closed_form_with, alpha_onestep,
    alpha_onestep_finite, AlphaQuery, AlphaResult, ClosedFormOptions, Method,
};
pub use error::{Error, Result};
pub use kl0::{GammaTable, Kl0Beta};
pub use lp::{LpSolution, LpStatus, LpTableau, RowSense};
pub use oracle::{active_set_report, alpha_lp, build_lp, AlphaLpInstance, LpVariant};
pub use horizon::{
    alpha_star, asymptotic_bounds, m_sweep, min_stabilizing_horizon, region_area,
    stability_region, HorizonSearchResult, MRule, RegionGrid,
};
