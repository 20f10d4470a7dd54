use std::collections::HashMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::system::{LinearL1, Nonlinear, NonlinearClass, SystemKind, SystemModel};
use crate::error::{Error, Result};
use crate::lp::{self, LpStatus, LpTableau, RowSense};

/// Largest DP layer before the search gives up.
pub const DP_MAX_NODES: usize = 2_000_000;

const POLISH_MAX_SWEEPS: usize = 500;
const POLISH_MIN_STEP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OcpBackend {
    LinearProgram,
    DynamicProgramming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpSolution {
    /// `u*(0), …, u*(N-1)`.
    pub controls: Vec<Vec<f64>>,
    /// `V_N(x0)`, the objective achieved by `controls`.
    pub value: f64,
    pub backend: OcpBackend,
    /// False when the result is only the best point found.
    pub certified: bool,
}

/// `V_N(x0) = min_u Σ_{n<N-1} ℓ(x(n), u(n)) + ω ℓ(x(N-1), u(N-1))`.
pub fn solve_ocp(sys: &SystemModel, x0: &[f64], horizon: usize, omega: f64) -> Result<OcpSolution> {
    if horizon == 0 {
        return Err(Error::InvalidQuery("OCP horizon must be >= 1".into()));
    }
    if !(omega.is_finite() && omega >= 1.0) {
        return Err(Error::InvalidQuery(format!("omega must be >= 1, got {omega}")));
    }
    if x0.len() != sys.state_dim || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::OcpInfeasible(format!(
            "initial state must be a finite vector of length {}",
            sys.state_dim
        )));
    }
    match &sys.kind {
        SystemKind::LinearL1(lin) => solve_linear_l1(sys, lin, x0, horizon, omega),
        SystemKind::Nonlinear(nl) => solve_dp(sys, nl, x0, horizon, omega),
    }
}

fn weight(n: usize, horizon: usize, omega: f64) -> f64 {
    if n + 1 == horizon {
        omega
    } else {
        1.0
    }
}

fn bound(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// The L1 problem is positively homogeneous in `(x0, control bounds)`, so it
/// is solved for `x0 / ‖x0‖_∞` and rescaled. This keeps the LP tolerances
/// relative to the state: near the origin an unscaled solve would return
/// plans that are exact only up to absolute roundoff, which the unstable
/// open-loop dynamics then amplify.
fn solve_linear_l1(
    sys: &SystemModel,
    lin: &LinearL1,
    x0: &[f64],
    horizon: usize,
    omega: f64,
) -> Result<OcpSolution> {
    let scale = x0.iter().fold(0f64, |acc, v| acc.max(v.abs()));
    let zero_ok = sys.admissible_control(&vec![0.0; sys.control_dim]);
    if scale == 0.0 && zero_ok {
        return Ok(OcpSolution {
            controls: vec![vec![0.0; sys.control_dim]; horizon],
            value: 0.0,
            backend: OcpBackend::LinearProgram,
            certified: true,
        });
    }
    let scale = if scale == 0.0 { 1.0 } else { scale };
    let unit: Vec<f64> = x0.iter().map(|v| v / scale).collect();
    let mut sol = solve_linear_l1_scaled(sys, lin, &unit, 1.0 / scale, horizon, omega)?;
    sol.controls.iter_mut().flatten().for_each(|u| *u *= scale);
    sol.value *= scale;
    Ok(sol)
}

fn solve_linear_l1_scaled(
    sys: &SystemModel,
    lin: &LinearL1,
    x0: &[f64],
    bound_scale: f64,
    horizon: usize,
    omega: f64,
) -> Result<OcpSolution> {
    let unbounded = sys.control_bounds.iter().all(|(lo, hi)| lo.is_infinite() && hi.is_infinite());
    if unbounded {
        if let Some(sol) = solve_weighted_coordinates(lin, x0, horizon, omega)? {
            return Ok(sol);
        }
    }
    solve_general_l1(sys, lin, x0, bound_scale, horizon, omega)
}

/// Square invertible `Q`, `R` and free controls: in `p = Q x`, `v = R u`
/// the stage cost is `‖p‖₁ + ‖v‖₁` and the dynamics read
/// `p⁺ = Q A Q⁻¹ p + Q B R⁻¹ v`. Splitting `p` and `v` into positive parts
/// leaves only the dynamics as rows. Returns `None` when the weights do not
/// qualify.
fn solve_weighted_coordinates(lin: &LinearL1, x0: &[f64], horizon: usize, omega: f64) -> Result<Option<OcpSolution>> {
    let (nx, nu) = (lin.state_dim(), lin.control_dim());
    if lin.q.nrows() != nx || lin.r.nrows() != nu {
        return Ok(None);
    }
    let (Some(q_inv), Some(r_inv)) = (lin.q.clone().try_inverse(), lin.r.clone().try_inverse()) else {
        return Ok(None);
    };
    let m = &lin.q * &lin.a * &q_inv;
    let g = &lin.q * &lin.b * &r_inv;
    let p0 = &lin.q * DVector::from_column_slice(x0);
    // Column layout: v⁺_n, v⁻_n for n < N, then p⁺_n, p⁻_n for 1 ≤ n < N.
    let v_col = |n: usize, i: usize, neg: bool| 2 * (n * nu + i) + usize::from(neg);
    let p_base = 2 * horizon * nu;
    let p_col = |n: usize, i: usize, neg: bool| p_base + 2 * ((n - 1) * nx + i) + usize::from(neg);
    let num_vars = p_base + 2 * (horizon - 1) * nx;

    let mut lp = LpTableau::new(num_vars);
    for n in 0..horizon {
        let w = weight(n, horizon, omega);
        for i in 0..nu {
            lp.set_objective_coeff(v_col(n, i, false), w);
            lp.set_objective_coeff(v_col(n, i, true), w);
        }
        if n >= 1 {
            for i in 0..nx {
                lp.set_objective_coeff(p_col(n, i, false), w);
                lp.set_objective_coeff(p_col(n, i, true), w);
            }
        }
    }
    // p_{n+1} - M p_n - G v_n = 0, with p_0 moved to the right-hand side.
    for n in 0..horizon.saturating_sub(1) {
        for i in 0..nx {
            let mut terms = vec![(p_col(n + 1, i, false), 1.0), (p_col(n + 1, i, true), -1.0)];
            let mut rhs = 0.0;
            for j in 0..nx {
                let mij = m[(i, j)];
                if mij == 0.0 {
                    continue;
                }
                if n == 0 {
                    rhs += mij * p0[j];
                } else {
                    terms.push((p_col(n, j, false), -mij));
                    terms.push((p_col(n, j, true), mij));
                }
            }
            for j in 0..nu {
                let gij = g[(i, j)];
                if gij != 0.0 {
                    terms.push((v_col(n, j, false), -gij));
                    terms.push((v_col(n, j, true), gij));
                }
            }
            lp.add_sparse_row(&terms, RowSense::Eq, rhs);
        }
    }

    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::NumericalBreakdown("L1 OCP reported infeasible".into())),
        LpStatus::Unbounded => return Err(Error::NumericalBreakdown("L1 OCP reported unbounded".into())),
    }
    let controls: Vec<Vec<f64>> = (0..horizon)
        .map(|n| {
            let v = DVector::from_fn(nu, |i, _| sol.x[v_col(n, i, false)] - sol.x[v_col(n, i, true)]);
            (&r_inv * v).as_slice().to_vec()
        })
        .collect();
    Ok(Some(OcpSolution {
        controls,
        value: sol.objective_value + weight(0, horizon, omega) * p0.lp_norm(1),
        backend: OcpBackend::LinearProgram,
        certified: true,
    }))
}

/// General weights and control bounds: `x_n` free, `s ≥ ±Q x_n` and
/// `t ≥ ±R u_n` carry the absolute values.
fn solve_general_l1(
    sys: &SystemModel,
    lin: &LinearL1,
    x0: &[f64],
    bound_scale: f64,
    horizon: usize,
    omega: f64,
) -> Result<OcpSolution> {
    let (nx, nu) = (sys.state_dim, sys.control_dim);
    let (nq, nr) = (lin.q.nrows(), lin.r.nrows());
    // Column layout: u_0..u_{N-1}, x_1..x_{N-1}, s_1..s_{N-1}, t_0..t_{N-1}.
    let u_col = |n: usize, i: usize| n * nu + i;
    let x_base = horizon * nu;
    let x_col = |n: usize, i: usize| x_base + (n - 1) * nx + i;
    let s_base = x_base + (horizon - 1) * nx;
    let s_col = |n: usize, i: usize| s_base + (n - 1) * nq + i;
    let t_base = s_base + (horizon - 1) * nq;
    let t_col = |n: usize, i: usize| t_base + n * nr + i;
    let num_vars = t_base + horizon * nr;

    let mut lp = LpTableau::new(num_vars);
    for n in 0..horizon {
        for i in 0..nu {
            let (lo, hi) = sys.control_bounds[i];
            lp.set_bounds(u_col(n, i), bound(lo * bound_scale), bound(hi * bound_scale));
        }
    }
    for n in 1..horizon {
        for i in 0..nx {
            lp.set_free(x_col(n, i));
        }
    }
    for n in 1..horizon {
        for i in 0..nq {
            lp.set_objective_coeff(s_col(n, i), weight(n, horizon, omega));
        }
    }
    for n in 0..horizon {
        for i in 0..nr {
            lp.set_objective_coeff(t_col(n, i), weight(n, horizon, omega));
        }
    }

    // x_{n+1} - A x_n - B u_n = 0, with x_0 moved to the right-hand side.
    for n in 0..horizon.saturating_sub(1) {
        for i in 0..nx {
            let mut terms = vec![(x_col(n + 1, i), 1.0)];
            let mut rhs = 0.0;
            for j in 0..nx {
                let a = lin.a[(i, j)];
                if a == 0.0 {
                    continue;
                }
                if n == 0 {
                    rhs += a * x0[j];
                } else {
                    terms.push((x_col(n, j), -a));
                }
            }
            for j in 0..nu {
                let b = lin.b[(i, j)];
                if b != 0.0 {
                    terms.push((u_col(n, j), -b));
                }
            }
            lp.add_sparse_row(&terms, RowSense::Eq, rhs);
        }
    }
    // ±(Q x_n)_i ≤ s_{n,i} and ±(R u_n)_i ≤ t_{n,i}
    for n in 1..horizon {
        for i in 0..nq {
            for sign in [1.0, -1.0] {
                let mut terms: Vec<(usize, f64)> = (0..nx)
                    .filter(|&j| lin.q[(i, j)] != 0.0)
                    .map(|j| (x_col(n, j), sign * lin.q[(i, j)]))
                    .collect();
                terms.push((s_col(n, i), -1.0));
                lp.add_sparse_row(&terms, RowSense::Le, 0.0);
            }
        }
    }
    for n in 0..horizon {
        for i in 0..nr {
            for sign in [1.0, -1.0] {
                let mut terms: Vec<(usize, f64)> = (0..nu)
                    .filter(|&j| lin.r[(i, j)] != 0.0)
                    .map(|j| (u_col(n, j), sign * lin.r[(i, j)]))
                    .collect();
                terms.push((t_col(n, i), -1.0));
                lp.add_sparse_row(&terms, RowSense::Le, 0.0);
            }
        }
    }

    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::OcpInfeasible("control bounds admit no solution".into())),
        LpStatus::Unbounded => return Err(Error::NumericalBreakdown("L1 OCP reported unbounded".into())),
    }
    let controls: Vec<Vec<f64>> = (0..horizon)
        .map(|n| (0..nu).map(|i| sol.x[u_col(n, i)]).collect())
        .collect();
    let qx0: f64 = (0..nq)
        .map(|i| (0..nx).map(|j| lin.q[(i, j)] * x0[j]).sum::<f64>().abs())
        .sum();
    Ok(OcpSolution {
        controls,
        value: sol.objective_value + weight(0, horizon, omega) * qx0,
        backend: OcpBackend::LinearProgram,
        certified: true,
    })
}

struct Node {
    state: Vec<f64>,
    cost: f64,
    /// Index into the previous layer and the control grid.
    parent: Option<(usize, usize)>,
}

fn state_key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 describe the same state
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn solve_dp(sys: &SystemModel, nl: &Nonlinear, x0: &[f64], horizon: usize, omega: f64) -> Result<OcpSolution> {
    let grid: Vec<&Vec<f64>> = nl.control_grid.iter().filter(|u| sys.admissible_control(u)).collect();
    if grid.is_empty() {
        return Err(Error::OcpInfeasible("no control grid point satisfies the bounds".into()));
    }
    let mut layers: Vec<Vec<Node>> = vec![vec![Node {
        state: x0.to_vec(),
        cost: 0.0,
        parent: None,
    }]];
    // Forward layers over stages 0..N-2; identical successor states merge,
    // which keeps the search exact.
    for n in 0..horizon - 1 {
        let w = weight(n, horizon, omega);
        let prev = layers.last().unwrap();
        let mut next: Vec<Node> = Vec::new();
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        for (pi, node) in prev.iter().enumerate() {
            for (ci, u) in grid.iter().enumerate() {
                let cost = node.cost + w * (sys.stage_cost(&node.state, u));
                let state = sys.step(&node.state, u);
                if state.iter().any(|v| !v.is_finite()) || !cost.is_finite() {
                    continue;
                }
                match index.get(&state_key(&state)) {
                    Some(&k) => {
                        if cost < next[k].cost {
                            next[k].cost = cost;
                            next[k].parent = Some((pi, ci));
                        }
                    }
                    None => {
                        index.insert(state_key(&state), next.len());
                        next.push(Node {
                            state,
                            cost,
                            parent: Some((pi, ci)),
                        });
                    }
                }
            }
        }
        if next.len() > DP_MAX_NODES {
            return Err(Error::BackendUnavailable(format!(
                "DP layer {} has {} states (cap {DP_MAX_NODES})",
                n + 1,
                next.len()
            )));
        }
        if next.is_empty() {
            return Err(Error::OcpInfeasible("every successor state is non-finite".into()));
        }
        layers.push(next);
    }
    // Final stage: only its running cost matters.
    let w = weight(horizon - 1, horizon, omega);
    let mut best: Option<(f64, usize, usize)> = None;
    for (pi, node) in layers.last().unwrap().iter().enumerate() {
        for (ci, u) in grid.iter().enumerate() {
            let cost = node.cost + w * sys.stage_cost(&node.state, u);
            if cost.is_finite() && best.is_none_or(|b| cost < b.0) {
                best = Some((cost, pi, ci));
            }
        }
    }
    let (mut value, mut pi, ci) = best.ok_or_else(|| Error::OcpInfeasible("no finite cost found".into()))?;
    let mut controls = vec![grid[ci].clone()];
    for layer in layers.iter().skip(1).rev() {
        let (prev, c) = layer[pi].parent.expect("non-root node has a parent");
        controls.push(grid[c].clone());
        pi = prev;
    }
    controls.reverse();

    if nl.polish {
        value = polish(sys, x0, &mut controls, omega, &grid, value);
    }
    Ok(OcpSolution {
        controls,
        value,
        backend: OcpBackend::DynamicProgramming,
        certified: nl.class == NonlinearClass::Scalar && !nl.polish,
    })
}

/// Coordinate descent with step halving, started at the grid spacing.
fn polish(sys: &SystemModel, x0: &[f64], controls: &mut [Vec<f64>], omega: f64, grid: &[&Vec<f64>], start: f64) -> f64 {
    let mut best = start;
    for j in 0..sys.control_dim {
        let mut vals: Vec<f64> = grid.iter().map(|u| u[j]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        let mut step = vals
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        if !step.is_finite() {
            step = 1.0;
        }
        let (lo, hi) = sys.control_bounds[j];
        for _ in 0..POLISH_MAX_SWEEPS {
            if step < POLISH_MIN_STEP {
                break;
            }
            let mut improved = false;
            for n in 0..controls.len() {
                for dir in [1.0, -1.0] {
                    let old = controls[n][j];
                    let cand = (old + dir * step).clamp(lo, hi);
                    if cand == old {
                        continue;
                    }
                    controls[n][j] = cand;
                    let c = sys.cost_of(x0, controls, omega);
                    if c < best {
                        best = c;
                        improved = true;
                    } else {
                        controls[n][j] = old;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
    }
    best
}
