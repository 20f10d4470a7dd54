//! Shared inputs for the criterion benches under `benches/`.

use mpclab::{AlphaQuery, Kl0Beta};

/// `(C, σ) = (2, 5/8)` at `ω = 1`.
pub fn reference_query(horizon: usize, control_horizon: usize) -> AlphaQuery {
    let beta = Kl0Beta::exponential(2.0, 0.625).expect("valid exponential");
    AlphaQuery::new(beta, horizon, control_horizon, 1.0).expect("valid query")
}

/// A state from the corner of the pendulum's initial-value box.
pub const PENDULUM_STATE: [f64; 4] = [0.05, -0.05, 1.0, 0.05];
