use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type StepFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;
pub type CostFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// `x⁺ = A x + B u` with stage cost `‖Q x‖₁ + ‖R u‖₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearL1 {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl LinearL1 {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let ok = a.ncols() == n
            && b.nrows() == n
            && q.ncols() == n
            && r.ncols() == b.ncols()
            && a.iter().chain(b.iter()).chain(q.iter()).chain(r.iter()).all(|v| v.is_finite());
        if !ok {
            return Err(Error::Config("inconsistent LinearL1 matrices".into()));
        }
        Ok(LinearL1 { a, b, q, r })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Which DP variant a nonlinear model belongs to. Results for `Custom` are
/// never reported as certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearClass {
    Scalar,
    Custom,
}

/// A general model solved by dynamic programming over a finite control grid.
#[derive(Clone)]
pub struct Nonlinear {
    pub class: NonlinearClass,
    pub step: Arc<StepFn>,
    pub cost: Arc<CostFn>,
    /// Candidate control vectors for the DP backend.
    pub control_grid: Vec<Vec<f64>>,
    /// Refine the DP minimizer by coordinate descent inside the bounds.
    pub polish: bool,
}

impl fmt::Debug for Nonlinear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinear")
            .field("class", &self.class)
            .field("control_grid", &self.control_grid.len())
            .field("polish", &self.polish)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum SystemKind {
    LinearL1(LinearL1),
    Nonlinear(Nonlinear),
}

/// A discrete-time plant with stage cost and control bounds.
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub name: String,
    pub state_dim: usize,
    pub control_dim: usize,
    /// Per-coordinate control interval; infinite endpoints allowed.
    pub control_bounds: Vec<(f64, f64)>,
    pub kind: SystemKind,
}

impl SystemModel {
    pub fn linear_l1(name: impl Into<String>, sys: LinearL1, control_bounds: Option<Vec<(f64, f64)>>) -> Result<Self> {
        let (n, m) = (sys.state_dim(), sys.control_dim());
        let control_bounds = control_bounds.unwrap_or_else(|| vec![(f64::NEG_INFINITY, f64::INFINITY); m]);
        check_bounds(&control_bounds, m)?;
        Ok(SystemModel {
            name: name.into(),
            state_dim: n,
            control_dim: m,
            control_bounds,
            kind: SystemKind::LinearL1(sys),
        })
    }

    pub fn nonlinear(
        name: impl Into<String>,
        state_dim: usize,
        control_dim: usize,
        control_bounds: Vec<(f64, f64)>,
        model: Nonlinear,
    ) -> Result<Self> {
        check_bounds(&control_bounds, control_dim)?;
        if model.control_grid.is_empty() || model.control_grid.iter().any(|u| u.len() != control_dim) {
            return Err(Error::Config("control grid empty or of wrong dimension".into()));
        }
        Ok(SystemModel {
            name: name.into(),
            state_dim,
            control_dim,
            control_bounds,
            kind: SystemKind::Nonlinear(model),
        })
    }

    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match &self.kind {
            SystemKind::LinearL1(s) => {
                let next = &s.a * DVector::from_column_slice(x) + &s.b * DVector::from_column_slice(u);
                next.as_slice().to_vec()
            }
            SystemKind::Nonlinear(s) => (s.step)(x, u),
        }
    }

    pub fn stage_cost(&self, x: &[f64], u: &[f64]) -> f64 {
        match &self.kind {
            SystemKind::LinearL1(s) => {
                let qx = &s.q * DVector::from_column_slice(x);
                let ru = &s.r * DVector::from_column_slice(u);
                qx.lp_norm(1) + ru.lp_norm(1)
            }
            SystemKind::Nonlinear(s) => (s.cost)(x, u),
        }
    }

    pub fn admissible_control(&self, u: &[f64]) -> bool {
        u.len() == self.control_dim
            && u
                .iter()
                .zip(&self.control_bounds)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// `J_N(x0, u)` with weight `ω` on the last stage.
    pub fn cost_of(&self, x0: &[f64], controls: &[Vec<f64>], omega: f64) -> f64 {
        let mut x = x0.to_vec();
        let mut total = 0.0;
        for (n, u) in controls.iter().enumerate() {
            let w = if n + 1 == controls.len() { omega } else { 1.0 };
            total += w * self.stage_cost(&x, u);
            if n + 1 < controls.len() {
                x = self.step(&x, u);
            }
        }
        total
    }
}

fn check_bounds(bounds: &[(f64, f64)], dim: usize) -> Result<()> {
    if bounds.len() != dim || bounds.iter().any(|(lo, hi)| lo.is_nan() || hi.is_nan() || lo > hi) {
        return Err(Error::Config("control bounds malformed".into()));
    }
    Ok(())
}
