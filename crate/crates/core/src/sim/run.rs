use serde::{Deserialize, Serialize};

use super::ocp::solve_ocp;
use super::schedule::{transmission_times, HorizonSchedule};
use super::system::{SystemKind, SystemModel};
use crate::error::{Error, Result};
use crate::kl0::Kl0Beta;

/// Default practical-stability floor for a-posteriori estimates.
pub const DEFAULT_EPSILON: f64 = 1e-4;
/// Default absolute slack of the Lyapunov decrease check.
pub const LYAPUNOV_TOL: f64 = 1e-7;

/// Closed-loop record of multistep MPC over `K` replanning segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcRun {
    pub system: String,
    pub horizon: usize,
    pub omega: f64,
    /// `x(0), …, x(σ(K))`.
    pub states: Vec<Vec<f64>>,
    /// `u(0), …, u(σ(K) - 1)`.
    pub controls: Vec<Vec<f64>>,
    pub stage_costs: Vec<f64>,
    /// Realized `m_0, …, m_{K-1}`.
    pub schedule: Vec<usize>,
    pub seed: Option<u64>,
    /// `σ(0), …, σ(K)`.
    pub transmission_times: Vec<usize>,
    /// `V_N(x(σ(k)))` for `k = 0..=K`.
    pub vn_samples: Vec<f64>,
    /// `Σ_{n=σ(k)}^{σ(k+1)-1} ℓ(x(n), u(n))`.
    pub segment_costs: Vec<f64>,
    /// Per-segment suboptimality; `None` where the segment cost is at most
    /// `epsilon`.
    pub alpha_estimates: Vec<Option<f64>>,
    pub alpha_min: Option<f64>,
    pub epsilon: f64,
    /// All OCP solves were certified optimal.
    pub certified: bool,
}

impl MpcRun {
    pub fn segments(&self) -> usize {
        self.schedule.len()
    }

    /// Segment index of closed-loop step `n`.
    pub fn segment_of(&self, n: usize) -> usize {
        self.transmission_times.partition_point(|t| *t <= n) - 1
    }

    pub fn total_cost(&self) -> f64 {
        self.stage_costs.iter().sum()
    }

    /// `x(σ(k))`.
    pub fn state_at_transmission(&self, k: usize) -> &[f64] {
        &self.states[self.transmission_times[k]]
    }
}

/// Runs `segments` replanning segments. At each `σ(k)` the OCP is solved and
/// the first `m_k` controls are applied open loop. A final solve records
/// `V_N` at the end state.
pub fn run_mpc(
    sys: &SystemModel,
    x0: &[f64],
    horizon: usize,
    omega: f64,
    schedule: &HorizonSchedule,
    segments: usize,
    epsilon: f64,
) -> Result<MpcRun> {
    schedule.validate()?;
    if horizon < 2 || schedule.max_horizon() > horizon - 1 {
        return Err(Error::InvalidQuery(format!(
            "control horizons up to {} need N >= {}, got N = {horizon}",
            schedule.max_horizon(),
            schedule.max_horizon() + 1
        )));
    }
    if segments == 0 {
        return Err(Error::InvalidQuery("need at least one segment".into()));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidQuery(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let seq = schedule.sequence(segments);
    let mut states = vec![x0.to_vec()];
    let mut controls = Vec::new();
    let mut stage_costs = Vec::new();
    let mut vn_samples = Vec::with_capacity(segments + 1);
    let mut segment_costs = Vec::with_capacity(segments);
    let mut certified = true;
    for &m in &seq {
        let x = states.last().unwrap().clone();
        let sol = solve_ocp(sys, &x, horizon, omega)?;
        certified &= sol.certified;
        vn_samples.push(sol.value);
        let mut seg = 0.0;
        let mut x = x;
        for u in sol.controls.iter().take(m) {
            let c = sys.stage_cost(&x, u);
            seg += c;
            stage_costs.push(c);
            x = sys.step(&x, u);
            controls.push(u.clone());
            states.push(x.clone());
        }
        segment_costs.push(seg);
    }
    let last = solve_ocp(sys, states.last().unwrap(), horizon, omega)?;
    certified &= last.certified;
    vn_samples.push(last.value);

    let mut run = MpcRun {
        system: sys.name.clone(),
        horizon,
        omega,
        states,
        controls,
        stage_costs,
        transmission_times: transmission_times(&seq),
        schedule: seq,
        seed: schedule.seed(),
        vn_samples,
        segment_costs,
        alpha_estimates: Vec::new(),
        alpha_min: None,
        epsilon,
        certified,
    };
    run.alpha_estimates = segment_alphas(&run, epsilon);
    run.alpha_min = estimate_alpha(&run, epsilon).ok();
    Ok(run)
}

/// `(V_N(x(σ(k))) − V_N(x(σ(k+1)))) / segment cost`, skipping segments whose
/// cost is at most `epsilon`.
pub fn segment_alphas(run: &MpcRun, epsilon: f64) -> Vec<Option<f64>> {
    run.segment_costs
        .iter()
        .enumerate()
        .map(|(k, &cost)| (cost > epsilon).then(|| (run.vn_samples[k] - run.vn_samples[k + 1]) / cost))
        .collect()
}

/// Minimum of the retained per-segment estimates, capped at one.
pub fn estimate_alpha(run: &MpcRun, epsilon: f64) -> Result<f64> {
    segment_alphas(run, epsilon)
        .into_iter()
        .flatten()
        .reduce(f64::min)
        .map(|a| a.min(1.0))
        .ok_or(Error::NoValidSegments)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEntry {
    pub segment: usize,
    pub m: usize,
    pub v_now: f64,
    pub v_next: f64,
    /// `V_{m_k}(x(σ(k)))`; zero when `α* = 0`, where it is not needed.
    pub v_m: f64,
    /// `V_N(σ(k)) − α* V_{m_k}(σ(k)) − V_N(σ(k+1))`.
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub alpha_star: f64,
    pub tolerance: f64,
    pub entries: Vec<LyapunovEntry>,
    pub violations: usize,
    pub worst_slack: f64,
}

/// Checks `V_N(x(σ(k+1))) ≤ V_N(x(σ(k))) − α* V_{m_k}(x(σ(k)))` on every
/// segment, with `V_{m_k}` solved at `ω = 1`.
pub fn lyapunov_check(sys: &SystemModel, run: &MpcRun, alpha_star: f64, tolerance: f64) -> Result<LyapunovReport> {
    let mut entries = Vec::with_capacity(run.segments());
    for (k, &m) in run.schedule.iter().enumerate() {
        let (v_now, v_next) = (run.vn_samples[k], run.vn_samples[k + 1]);
        let v_m = if alpha_star != 0.0 {
            solve_ocp(sys, run.state_at_transmission(k), m, 1.0)?.value
        } else {
            0.0
        };
        let slack = v_now - alpha_star * v_m - v_next;
        entries.push(LyapunovEntry {
            segment: k,
            m,
            v_now,
            v_next,
            v_m,
            slack,
            holds: slack >= -tolerance,
        });
    }
    Ok(LyapunovReport {
        alpha_star,
        tolerance,
        violations: entries.iter().filter(|e| !e.holds).count(),
        worst_slack: entries.iter().map(|e| e.slack).fold(f64::INFINITY, f64::min),
        entries,
    })
}

/// `min_u ℓ(x, u)`: `‖Q x‖₁` for 1-norm costs (at `u = 0` clamped into the
/// bounds), the grid minimum otherwise.
pub fn min_stage_cost(sys: &SystemModel, x: &[f64]) -> f64 {
    match &sys.kind {
        SystemKind::LinearL1(_) => {
            let u: Vec<f64> = sys.control_bounds.iter().map(|(lo, hi)| 0f64.clamp(*lo, *hi)).collect();
            sys.stage_cost(x, &u)
        }
        SystemKind::Nonlinear(nl) => nl
            .control_grid
            .iter()
            .map(|u| sys.stage_cost(x, u))
            .fold(f64::INFINITY, f64::min),
    }
}

/// `ℓ(x*(n), u*(n)) / ℓ*(x0)` along the optimal open loop from `x0`, or
/// `None` when `ℓ*(x0) = 0`.
pub fn open_loop_profile(sys: &SystemModel, x0: &[f64], horizon: usize, omega: f64) -> Result<Option<Vec<f64>>> {
    let base = min_stage_cost(sys, x0);
    if base <= 0.0 {
        return Ok(None);
    }
    let sol = solve_ocp(sys, x0, horizon, omega)?;
    let mut x = x0.to_vec();
    let mut profile = Vec::with_capacity(horizon);
    for u in &sol.controls {
        profile.push(sys.stage_cost(&x, u) / base);
        x = sys.step(&x, u);
    }
    Ok(Some(profile))
}

/// Smallest exponential `β` dominating every profile: for each candidate
/// `σ`, `C(σ) = max(1, max_n p_n σ^{-n})`; the `σ` with the least mass
/// `Σ_{n<N} C σⁿ` wins. The fit is empirical, not a certificate.
pub fn fit_exponential_beta(profiles: &[Vec<f64>]) -> Result<Kl0Beta> {
    let len = profiles.iter().map(Vec::len).max().unwrap_or(0);
    if len == 0 {
        return Err(Error::InvalidQuery("no profile to fit".into()));
    }
    let envelope: Vec<f64> = (0..len)
        .map(|n| profiles.iter().filter_map(|p| p.get(n)).copied().fold(0.0, f64::max))
        .collect();
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 1..1000 {
        let sigma = i as f64 / 1000.0;
        let c = envelope
            .iter()
            .enumerate()
            .map(|(n, p)| p / sigma.powi(n as i32))
            .fold(1.0, f64::max);
        let mass = c * (1.0 - sigma.powi(len as i32)) / (1.0 - sigma);
        if best.is_none_or(|b| mass < b.0) {
            best = Some((mass, c, sigma));
        }
    }
    let (_, c, sigma) = best.unwrap();
    Kl0Beta::exponential(c, sigma)
}
