//! Linear-programming oracles for `α_{N,m}^ω`.
//!
//! Three formulations of the same infimum are available. The full problem
//! keeps every stage-cost variable `λ_0..λ_{N-1}` and the value variable
//! `ν`; the reduced problem eliminates `ν` and `λ_0`; the relaxed problem
//! further drops the constraints that are inactive at the optimum. All three
//! agree with the closed form whenever `β` is submultiplicative.

use serde::{Deserialize, Serialize};

use crate::alpha::{AlphaQuery, AlphaResult, Method};
use crate::error::{Error, Result};
use crate::kl0::GammaTable;
use crate::lp::{self, LpSolution, LpStatus, LpTableau, RowSense};

/// Slack below which a row counts as active, relative to the row scale.
pub const ACTIVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LpVariant {
    /// Cost profile `λ_0..λ_{N-1}` and value `ν` with every tail and value
    /// bound.
    Full,
    /// `λ_0` and `ν` eliminated; columns `λ_1..λ_{N-1}`.
    Reduced,
    /// The reduced problem keeping only the tail bounds before `m`.
    Relaxed,
}

impl LpVariant {
    pub const ALL: [LpVariant; 3] = [
        LpVariant::Full,
        LpVariant::Reduced,
        LpVariant::Relaxed,
    ];
}

/// Which family a tableau row belongs to, with its index inside the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowTag {
    /// Tail bound on the cost from stage `k` (full problem).
    TailBound(usize),
    /// Bound on `ν` through the shifted trajectory starting at `j` (full).
    ValueBound(usize),
    /// `Σ_{n<m} λ_n = 1` (full).
    Normalization,
    /// First reduced row, combining the `k = 0` tail bound with `ν`.
    Head,
    /// Tail bound from stage `j ≥ 1` (reduced).
    ReducedTail(usize),
    /// Value bound carried over to stage `j ≥ m` (reduced).
    ReducedValue(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaLpInstance {
    pub query: AlphaQuery,
    pub variant: LpVariant,
    pub tableau: LpTableau,
    /// Human-readable variable names in column order.
    pub variable_map: Vec<String>,
    pub row_tags: Vec<RowTag>,
    gammas: GammaTable,
}

impl AlphaLpInstance {
    pub fn gammas(&self) -> &GammaTable {
        &self.gammas
    }

    /// Constant added to the LP objective to obtain `α`.
    pub fn objective_offset(&self) -> f64 {
        match self.variant {
            LpVariant::Full => 0.0,
            _ => 1.0,
        }
    }

    pub fn saturated(&self) -> bool {
        self.gammas.gamma(self.query.control_horizon + 1) <= self.query.omega
    }
}

pub fn build_lp(q: &AlphaQuery, variant: LpVariant) -> Result<AlphaLpInstance> {
    q.validate()?;
    let g = q.gammas()?;
    let (n, m, omega) = (q.horizon, q.control_horizon, q.omega);
    let (tableau, variable_map, row_tags) = match variant {
        LpVariant::Full => full_problem(&g, n, m, omega),
        LpVariant::Reduced => reduced_problem(&g, n, m, omega, true),
        LpVariant::Relaxed => reduced_problem(&g, n, m, omega, false),
    };
    Ok(AlphaLpInstance {
        query: q.clone(),
        variant,
        tableau,
        variable_map,
        row_tags,
        gammas: g,
    })
}

fn full_problem(
    g: &GammaTable,
    n: usize,
    m: usize,
    omega: f64,
) -> (LpTableau, Vec<String>, Vec<RowTag>) {
    // columns: λ_0..λ_{N-1}, ν
    let nu = n;
    let mut lp = LpTableau::new(n + 1);
    let mut obj = vec![1.0; n + 1];
    obj[n - 1] = omega;
    obj[nu] = -1.0;
    lp.set_objective(obj);
    let mut tags = Vec::new();

    for k in 0..n - 1 {
        let mut row = vec![0.0; n + 1];
        row[k..n - 1].iter_mut().for_each(|v| *v = 1.0);
        row[n - 1] = omega;
        row[k] -= g.gamma(n - k);
        lp.add_row(row, RowSense::Le, 0.0);
        tags.push(RowTag::TailBound(k));
    }
    for j in 0..n - m {
        let mut row = vec![0.0; n + 1];
        row[nu] = 1.0;
        row[m..m + j].iter_mut().for_each(|v| *v = -1.0);
        row[j + m] -= g.gamma(n - j);
        lp.add_row(row, RowSense::Le, 0.0);
        tags.push(RowTag::ValueBound(j));
    }
    let mut row = vec![0.0; n + 1];
    row[..m].iter_mut().for_each(|v| *v = 1.0);
    lp.add_row(row, RowSense::Eq, 1.0);
    tags.push(RowTag::Normalization);

    let mut names: Vec<String> = (0..n).map(|i| format!("lambda_{i}")).collect();
    names.push("nu".into());
    (lp, names, tags)
}

fn reduced_problem(
    g: &GammaTable,
    n: usize,
    m: usize,
    omega: f64,
    keep_all_tails: bool,
) -> (LpTableau, Vec<String>, Vec<RowTag>) {
    // columns: λ_1..λ_{N-1}; column of λ_i is i - 1
    let nv = n - 1;
    let col = |i: usize| i - 1;
    let last = col(n - 1);
    let mut lp = LpTableau::new(nv);
    lp.set_objective_coeff(last, -(g.gamma(m + 1) - omega));
    let mut tags = Vec::new();

    let gn = g.gamma(n);
    let mut row = vec![0.0; nv];
    for i in 1..n - 1 {
        row[col(i)] = if i < m { gn } else { 1.0 };
    }
    row[last] = omega;
    lp.add_row(row, RowSense::Le, gn - 1.0);
    tags.push(RowTag::Head);

    let tail_end = if keep_all_tails { n - 1 } else { m.min(n - 1) };
    for j in 1..tail_end {
        let mut row = vec![0.0; nv];
        for i in j..n - 1 {
            row[col(i)] = 1.0;
        }
        row[col(j)] -= g.gamma(n - j);
        row[last] += omega;
        lp.add_row(row, RowSense::Le, 0.0);
        tags.push(RowTag::ReducedTail(j));
    }
    for j in m..n - 1 {
        let mut row = vec![0.0; nv];
        for i in j..n - 1 {
            row[col(i)] = 1.0;
        }
        row[col(j)] -= g.gamma(n - j + m);
        row[last] += g.gamma(m + 1);
        lp.add_row(row, RowSense::Le, 0.0);
        tags.push(RowTag::ReducedValue(j));
    }

    let names = (1..n).map(|i| format!("lambda_{i}")).collect();
    (lp, names, tags)
}

/// Solve an instance and interpret its optimum as `α`.
///
/// An empty feasible set has infimum `+∞`, so a saturated query whose LP is
/// infeasible (possible only when `c_0 < 1`) yields `α = 1`. For every other
/// query infeasibility means the construction is wrong.
pub fn solve_instance(inst: &AlphaLpInstance) -> Result<(AlphaResult, LpSolution)> {
    let sol = lp::solve(&inst.tableau)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible if inst.saturated() => {
            let result = AlphaResult {
                alpha: 1.0,
                saturated: true,
                method: Method::LpOracle,
                lower_bound_only: false,
                lp_point: None,
            };
            return Ok((result, sol));
        }
        LpStatus::Infeasible => return Err(Error::OracleInfeasible("infeasible")),
        LpStatus::Unbounded => return Err(Error::OracleInfeasible("unbounded")),
    }
    let result = AlphaResult {
        alpha: sol.objective_value + inst.objective_offset(),
        saturated: inst.saturated(),
        method: Method::LpOracle,
        lower_bound_only: false,
        lp_point: Some(sol.x.clone()),
    };
    Ok((result, sol))
}

pub fn alpha_lp(q: &AlphaQuery, variant: LpVariant) -> Result<AlphaResult> {
    let inst = build_lp(q, variant)?;
    solve_instance(&inst).map(|(r, _)| r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveSetReport {
    /// False when the precondition (relaxed variant, unsaturated) fails.
    pub applicable: bool,
    pub active_rows: Vec<bool>,
    pub slacks: Vec<f64>,
    pub min_lambda: f64,
    pub all_active: bool,
    pub all_positive: bool,
}

impl ActiveSetReport {
    pub fn confirms(&self) -> bool {
        self.applicable && self.all_active && self.all_positive
    }
}

/// Which rows of a relaxed-problem optimum are tight, and whether the point
/// is strictly positive.
pub fn active_set_report(sol: &LpSolution, inst: &AlphaLpInstance) -> ActiveSetReport {
    let applicable = inst.variant == LpVariant::Relaxed
        && !inst.saturated()
        && sol.status == LpStatus::Optimal;
    if !applicable {
        return ActiveSetReport {
            applicable: false,
            active_rows: Vec::new(),
            slacks: Vec::new(),
            min_lambda: f64::NAN,
            all_active: false,
            all_positive: false,
        };
    }
    let lp = &inst.tableau;
    let activity = lp.row_activity(&sol.x);
    let mut slacks = Vec::with_capacity(lp.num_rows());
    let mut active_rows = Vec::with_capacity(lp.num_rows());
    for (i, act) in activity.iter().enumerate() {
        let slack = lp.rhs(i) - act;
        let scale: f64 = lp
            .row(i)
            .iter()
            .zip(&sol.x)
            .map(|(a, x)| (a * x).abs())
            .sum::<f64>()
            .max(lp.rhs(i).abs())
            .max(1.0);
        slacks.push(slack);
        active_rows.push(slack.abs() <= ACTIVE_TOL * scale);
    }
    let min_lambda = sol.x.iter().copied().fold(f64::INFINITY, f64::min);
    ActiveSetReport {
        applicable,
        all_active: active_rows.iter().all(|a| *a),
        all_positive: min_lambda > 0.0,
        active_rows,
        slacks,
        min_lambda,
    }
}
