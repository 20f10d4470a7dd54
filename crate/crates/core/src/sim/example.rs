//! The scalar system `x⁺ = x + u x³` with stage cost `ℓ(x) = e^{-1/(2x²)}`,
//! which is exponentially controllable with `β(r, t) = r e^{-t}` via `u ≡ -1`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::system::{Nonlinear, NonlinearClass, SystemModel};
use crate::error::Result;

pub fn cubic_step(x: f64, u: f64) -> f64 {
    x + u * x * x * x
}

/// `ℓ(x) = e^{-1/(2x²)}`, extended by `ℓ(0) = 0`.
pub fn cubic_cost(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        (-1.0 / (2.0 * x * x)).exp()
    }
}

/// `ln ℓ(x)`; `-∞` at the origin.
fn log_cost(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        -1.0 / (2.0 * x * x)
    }
}

pub fn cubic_system(control_grid: Vec<f64>) -> Result<SystemModel> {
    let model = Nonlinear {
        class: NonlinearClass::Scalar,
        step: Arc::new(|x, u| vec![cubic_step(x[0], u[0])]),
        cost: Arc::new(|x, _| cubic_cost(x[0])),
        control_grid: control_grid.into_iter().map(|u| vec![u]).collect(),
        polish: false,
    };
    SystemModel::nonlinear("cubic scalar", 1, 1, vec![(-1.0, 1.0)], model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub points: usize,
    pub failures: usize,
    /// Smallest `ln ℓ(x) - 1 - ln ℓ(x⁺)` over the grid (nonnegative when the
    /// inequality holds everywhere).
    pub min_margin: f64,
    pub worst_x: f64,
}

impl ExampleReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Checks `ℓ(x − x³) ≤ e^{-1} ℓ(x)` on `points` equally spaced values in
/// `[-0.99, 0.99]`, skipping the origin.
///
/// The comparison runs on logarithms, so it stays meaningful where `ℓ`
/// underflows. Both logs grow like `1/(2x²)` near the origin while the true
/// margin shrinks like `1.5x²`, so each comparison allows a few ulps of the
/// operands.
pub fn verify_controllability_example(points: usize) -> ExampleReport {
    let mut failures = 0;
    let mut min_margin = f64::INFINITY;
    let mut worst_x = f64::NAN;
    for i in 0..points {
        let x = if points == 1 { 0.99 } else { -0.99 + 1.98 * i as f64 / (points - 1) as f64 };
        if x == 0.0 {
            continue;
        }
        let y = cubic_step(x, -1.0);
        let lhs = log_cost(y);
        let rhs = log_cost(x) - 1.0;
        let margin = rhs - lhs;
        let slack = 8.0 * f64::EPSILON * lhs.abs().max(rhs.abs());
        if margin < -slack {
            failures += 1;
        }
        if margin < min_margin {
            min_margin = margin;
            worst_x = x;
        }
    }
    ExampleReport {
        points,
        failures,
        min_margin,
        worst_x,
    }
}
