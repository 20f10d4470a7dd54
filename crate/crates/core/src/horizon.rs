//! Parameter studies built on the closed-form bound: stability regions in
//! the `(C, σ)` plane, minimal stabilizing horizons, control-horizon sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alpha::{alpha_closed_form_with, alpha_onestep, AlphaQuery, ClosedFormOptions};
use crate::error::{Error, Result};
use crate::kl0::Kl0Beta;

/// Default axes of the `(C, σ)` stability-region grid.
pub const DEFAULT_C_RANGE: (f64, f64) = (1.0, 20.0);
pub const DEFAULT_SIGMA_RANGE: (f64, f64) = (0.01, 0.99);
pub const DEFAULT_RESOLUTION: usize = 400;

/// Upper limit for horizon scans; far beyond any practical value of `γ`.
pub const MAX_SCAN_HORIZON: usize = 10_000_000;

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub c_axis: Vec<f64>,
    pub sigma_axis: Vec<f64>,
    pub horizon: usize,
    pub control_horizon: usize,
    pub omega: f64,
    /// `cells[i][j]` is `α` at `(c_axis[i], sigma_axis[j])`.
    pub cells: Vec<Vec<f64>>,
    pub stable_mask: Vec<Vec<bool>>,
}

impl RegionGrid {
    pub fn stable_count(&self) -> usize {
        self.stable_mask.iter().flatten().filter(|s| **s).count()
    }

    pub fn len(&self) -> usize {
        self.c_axis.len() * self.sigma_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(C, σ, α, stable)` rows in row-major order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, bool)> + '_ {
        self.c_axis.iter().enumerate().flat_map(move |(i, &c)| {
            self.sigma_axis
                .iter()
                .enumerate()
                .map(move |(j, &s)| (c, s, self.cells[i][j], self.stable_mask[i][j]))
        })
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidQuery(format!("{name} axis is empty")));
    }
    if axis.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidQuery(format!("{name} axis must be strictly increasing")));
    }
    Ok(())
}

/// `α_{N,m}^ω` for exponential controllability on every `(C, σ)` grid cell.
pub fn stability_region(
    horizon: usize,
    control_horizon: usize,
    omega: f64,
    c_axis: &[f64],
    sigma_axis: &[f64],
) -> Result<RegionGrid> {
    check_axis("C", c_axis)?;
    check_axis("sigma", sigma_axis)?;
    if c_axis[0] < 1.0 || sigma_axis[0] <= 0.0 || *sigma_axis.last().unwrap() >= 1.0 {
        return Err(Error::InvalidQuery(
            "grid needs C >= 1 and sigma in (0, 1)".into(),
        ));
    }
    let cells: Vec<Vec<f64>> = c_axis
        .par_iter()
        .map(|&c| {
            sigma_axis
                .iter()
                .map(|&s| {
                    let q = AlphaQuery::new(Kl0Beta::exponential(c, s)?, horizon, control_horizon, omega)?;
                    alpha_closed_form_with(&q, ClosedFormOptions::default()).map(|r| r.alpha)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let stable_mask = cells
        .iter()
        .map(|row| row.iter().map(|a| *a >= 0.0).collect())
        .collect();
    Ok(RegionGrid {
        c_axis: c_axis.to_vec(),
        sigma_axis: sigma_axis.to_vec(),
        horizon,
        control_horizon,
        omega,
        cells,
        stable_mask,
    })
}

/// Fraction of stable cells times the area of the axis rectangle.
pub fn region_area(grid: &RegionGrid) -> f64 {
    if grid.is_empty() {
        return 0.0;
    }
    let span = |a: &[f64]| a[a.len() - 1] - a[0];
    let rect = span(&grid.c_axis) * span(&grid.sigma_axis);
    rect * grid.stable_count() as f64 / grid.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MRule {
    Fixed(usize),
    /// `m = ⌊N/2⌋`.
    HalfN,
}

impl MRule {
    pub fn control_horizon(self, horizon: usize) -> usize {
        match self {
            MRule::Fixed(m) => m,
            MRule::HalfN => horizon / 2,
        }
    }

    /// Smallest `N` for which the rule yields `1 ≤ m ≤ N-1`.
    pub fn min_horizon(self) -> usize {
        match self {
            MRule::Fixed(m) => m + 1,
            MRule::HalfN => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonSearchResult {
    pub gamma: f64,
    pub omega: f64,
    pub m_rule: MRule,
    pub n_min: usize,
    /// Analytic lower bound for `N` matching the rule (and, for `HalfN`, the
    /// parity of `n_min`). `None` when no formula is known.
    pub bound_value: Option<f64>,
    pub bound_even: Option<f64>,
    pub bound_odd: Option<f64>,
    pub alpha_at_n_min: f64,
}

/// `2 + ln(γ−ω) / (ln γ − ln(γ−1))`.
pub fn horizon_bound_m1(gamma: f64, omega: f64) -> f64 {
    2.0 + (gamma - omega).ln() / (gamma.ln() - (gamma - 1.0).ln())
}

/// Bound for `m = N/2`, even `N`.
pub fn horizon_bound_half_even(gamma: f64, omega: f64) -> f64 {
    2.0 * ((2.0 * gamma - omega - 1.0) / (gamma - 1.0)).ln() / (gamma.ln() - (gamma - 1.0).ln())
}

/// Bound for `m = (N−1)/2`, odd `N`.
pub fn horizon_bound_half_odd(gamma: f64, omega: f64) -> f64 {
    (((2.0 * gamma - omega) / gamma).ln() + ((2.0 * gamma - omega) / (gamma - 1.0)).ln())
        / (gamma.ln() - (gamma - 1.0).ln())
}

/// Smallest `N` with `α ≥ 0` for one-step finite-time controllability
/// `c_0 = γ`, found by increasing scan.
pub fn min_stabilizing_horizon(gamma: f64, omega: f64, m_rule: MRule) -> Result<HorizonSearchResult> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidQuery(format!("gamma must be positive, got {gamma}")));
    }
    if !(omega.is_finite() && omega >= 1.0) {
        return Err(Error::InvalidQuery(format!("omega must be >= 1, got {omega}")));
    }
    if let MRule::Fixed(0) = m_rule {
        return Err(Error::InvalidQuery("control horizon must be >= 1".into()));
    }
    let mut found = None;
    for n in m_rule.min_horizon()..=MAX_SCAN_HORIZON {
        let a = alpha_onestep(gamma, n, m_rule.control_horizon(n), omega)?;
        if a >= 0.0 {
            found = Some((n, a));
            break;
        }
    }
    let (n_min, alpha_at_n_min) = found.ok_or_else(|| {
        Error::InvalidQuery(format!("no stabilizing horizon below {MAX_SCAN_HORIZON}"))
    })?;
    let unsaturated = gamma > omega;
    let (bound_value, bound_even, bound_odd) = match m_rule {
        MRule::Fixed(1) if unsaturated => (Some(horizon_bound_m1(gamma, omega)), None, None),
        MRule::HalfN if unsaturated => {
            let even = horizon_bound_half_even(gamma, omega);
            let odd = horizon_bound_half_odd(gamma, omega);
            let matching = if n_min % 2 == 0 { even } else { odd };
            (Some(matching), Some(even), Some(odd))
        }
        _ => (None, None, None),
    };
    Ok(HorizonSearchResult {
        gamma,
        omega,
        m_rule,
        n_min,
        bound_value,
        bound_even,
        bound_odd,
        alpha_at_n_min,
    })
}

/// Large-`γ` growth of the minimal horizon: `γ ln γ` for `m = 1` and
/// `2 ln 2 · γ` for `m = ⌊N/2⌋`.
pub fn asymptotic_bounds(gamma: f64, omega: f64, m_rule: MRule) -> Result<f64> {
    if !(gamma > omega.max(1.0)) {
        return Err(Error::InvalidQuery(format!(
            "asymptotics need gamma > max(omega, 1), got gamma = {gamma}, omega = {omega}"
        )));
    }
    match m_rule {
        MRule::Fixed(1) => Ok(gamma * gamma.ln()),
        MRule::HalfN => Ok(2.0 * std::f64::consts::LN_2 * gamma),
        MRule::Fixed(m) => Err(Error::InvalidQuery(format!(
            "no asymptotic formula for fixed m = {m}"
        ))),
    }
}

/// `min_{m ∈ M} α_{N,m}^ω`.
pub fn alpha_star(
    beta: &Kl0Beta,
    horizon: usize,
    control_horizons: &[usize],
    omega: f64,
    opts: ClosedFormOptions,
) -> Result<f64> {
    if control_horizons.is_empty() {
        return Err(Error::InvalidQuery("empty control-horizon set".into()));
    }
    control_horizons.iter().try_fold(f64::INFINITY, |acc, &m| {
        let q = AlphaQuery::new(beta.clone(), horizon, m, omega)?;
        Ok(acc.min(alpha_closed_form_with(&q, opts)?.alpha))
    })
}

/// `(m, α_{N,m}^ω)` for `m = 1..N-1`.
pub fn m_sweep(
    beta: &Kl0Beta,
    horizon: usize,
    omega: f64,
    opts: ClosedFormOptions,
) -> Result<Vec<(usize, f64)>> {
    if horizon < 2 {
        return Err(Error::InvalidQuery("sweep needs N >= 2".into()));
    }
    (1..horizon)
        .map(|m| {
            let q = AlphaQuery::new(beta.clone(), horizon, m, omega)?;
            Ok((m, alpha_closed_form_with(&q, opts)?.alpha))
        })
        .collect()
}
