//! Quick self-checks over every layer, used by `mpclab verify`.
//!
//! Each check evaluates one property on a small fixed family and reports the
//! worst deviation it saw. The suite runs in a few seconds in release builds.

use serde::{Deserialize, Serialize};

use crate::alpha::{alpha_c1_special, alpha_closed_form, alpha_closed_form_with, AlphaQuery, ClosedFormOptions};
use crate::error::Result;
use crate::horizon::{alpha_star, min_stabilizing_horizon, MRule};
use crate::kl0::Kl0Beta;
use crate::oracle::{active_set_report, alpha_lp, build_lp, solve_instance, LpVariant};
use crate::sim::example::{cubic_system, verify_controllability_example};
use crate::sim::ocp::solve_ocp;
use crate::sim::schedule::{phi, sigma, HorizonSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => CheckOutcome::new(name, passed, detail),
            Err(e) => CheckOutcome::new(name, false, format!("error: {e}")),
        }
    }
}

/// Controllability functions shared by several checks.
pub fn reference_betas() -> Vec<(&'static str, Kl0Beta)> {
    let exp = |c, s| Kl0Beta::exponential(c, s).expect("valid exponential");
    let fin = |c: &[f64]| Kl0Beta::finite(c.to_vec()).expect("valid coefficients");
    vec![
        ("exp(1, 0.5)", exp(1.0, 0.5)),
        ("exp(2, 0.625)", exp(2.0, 0.625)),
        ("exp(5, 0.9)", exp(5.0, 0.9)),
        ("finite[1,5/4,3/2,5/4,1/2,1/4,1/16]", fin(&[1.0, 1.25, 1.5, 1.25, 0.5, 0.25, 0.0625])),
        ("finite[1,3/2,2/3,1]", fin(&[1.0, 1.5, 2.0 / 3.0, 1.0])),
        ("finite[1.24,1.14,1.04]", fin(&[1.24, 1.14, 1.04])),
        ("finite[2]", fin(&[2.0])),
    ]
}

fn alpha(beta: &Kl0Beta, n: usize, m: usize, omega: f64) -> Result<f64> {
    Ok(alpha_closed_form(&AlphaQuery::new(beta.clone(), n, m, omega)?)?.alpha)
}

fn oracle_equivalence() -> Result<(bool, String)> {
    let mut worst = 0f64;
    let mut count = 0;
    for (_, beta) in reference_betas() {
        for n in 2..=8 {
            for m in 1..n {
                for omega in [1.0, 1.5] {
                    let q = AlphaQuery::new(beta.clone(), n, m, omega)?;
                    let closed = alpha_closed_form(&q)?.alpha;
                    for v in LpVariant::ALL {
                        worst = worst.max((alpha_lp(&q, v)?.alpha - closed).abs());
                        count += 1;
                    }
                }
            }
        }
    }
    Ok((worst <= 1e-8, format!("{count} LP solves, max gap {worst:.2e}")))
}

fn symmetry() -> Result<(bool, String)> {
    let mut worst = 0f64;
    for (_, beta) in reference_betas() {
        for n in 2..=12 {
            for m in 1..=n / 2 {
                worst = worst.max((alpha(&beta, n, m, 1.0)? - alpha(&beta, n, n - m, 1.0)?).abs());
            }
        }
    }
    Ok((worst <= 1e-10, format!("max |α(N,m) − α(N,N−m)| = {worst:.2e}")))
}

fn one_sided_symmetry() -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for (c, s) in [(1.5, 0.5), (2.0, 0.625), (5.0, 0.9)] {
        let beta = Kl0Beta::exponential(c, s)?;
        for omega in [1.5, 3.0, 10.0] {
            for n in 2..=12 {
                for m in 1..=n / 2 {
                    worst = worst.max(alpha(&beta, n, m, omega)? - alpha(&beta, n, n - m, omega)?);
                }
            }
        }
    }
    Ok((worst <= 1e-12, format!("max α(N,m) − α(N,N−m) = {worst:.2e}")))
}

fn monotone_in_m() -> Result<(bool, String)> {
    let mut worst = f64::NEG_INFINITY;
    for (c, s) in [(1.5, 0.5), (2.0, 0.625), (5.0, 0.9)] {
        let beta = Kl0Beta::exponential(c, s)?;
        for omega in [1.0, 1.0 / (1.0 - s), 2.0 / (1.0 - s)] {
            for n in 4..=12 {
                for m in 1..n / 2 {
                    worst = worst.max(alpha(&beta, n, m, omega)? - alpha(&beta, n, m + 1, omega)?);
                }
            }
        }
    }
    Ok((worst <= 1e-12, format!("max α(N,m) − α(N,m+1) = {worst:.2e}")))
}

fn c1_special_case() -> Result<(bool, String)> {
    let mut worst = 0f64;
    for s in [0.1, 0.5, 0.9] {
        let beta = Kl0Beta::exponential(1.0, s)?;
        for omega in [1.0, 2.5] {
            for n in 2..=12 {
                let expected = alpha_c1_special(s, n, omega);
                for m in 1..n {
                    worst = worst.max((alpha(&beta, n, m, omega)? - expected).abs());
                }
            }
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.2e}")))
}

fn remark_terminal_weight() -> Result<(bool, String)> {
    let beta = Kl0Beta::finite(vec![1.0, 1.5, 2.0 / 3.0, 1.0])?;
    let a2 = alpha(&beta, 5, 2, 8.0)?;
    let a3 = alpha(&beta, 5, 3, 8.0)?;
    Ok((a2 == 1.0 && a3 < 1.0, format!("α(5,2) = {a2}, α(5,3) = {a3:.6}")))
}

fn monotonicity_counterexample() -> Result<(bool, String)> {
    let beta = Kl0Beta::finite(vec![1.24, 1.14, 1.04])?;
    let a1 = alpha(&beta, 4, 1, 1.0)?;
    let a2 = alpha(&beta, 4, 2, 1.0)?;
    Ok((a2 < a1, format!("α(4,1) = {a1:.6}, α(4,2) = {a2:.6}")))
}

fn alpha_star_at_one() -> Result<(bool, String)> {
    let mut worst = 0f64;
    for (c, s) in [(1.5, 0.5), (2.0, 0.625), (5.0, 0.9)] {
        let beta = Kl0Beta::exponential(c, s)?;
        for n in 2..=12 {
            let set: Vec<usize> = (1..n).collect();
            let star = alpha_star(&beta, n, &set, 1.0, ClosedFormOptions::default())?;
            worst = worst.max((star - alpha(&beta, n, 1, 1.0)?).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |α* − α(N,1)| = {worst:.2e}")))
}

fn horizon_bound() -> Result<(bool, String)> {
    let mut mismatches = Vec::new();
    for gamma in [1.5, 2.0, 3.0, 5.0, 10.0, 50.0] {
        let r = min_stabilizing_horizon(gamma, 1.0, MRule::Fixed(1))?;
        let bound = r.bound_value.map_or(0.0, f64::ceil) as usize;
        if r.n_min != bound {
            mismatches.push(format!("γ={gamma}: {} vs {bound}", r.n_min));
        }
    }
    let ok = mismatches.is_empty();
    let detail = if ok { "6 values of γ".to_string() } else { mismatches.join("; ") };
    Ok((ok, detail))
}

fn convergence_in_n() -> Result<(bool, String)> {
    const CAP: usize = 1000;
    let mut largest = 0;
    for (_, beta) in reference_betas() {
        for m in [1, 2] {
            let n = (m + 1..CAP)
                .find(|&n| alpha(&beta, n, m, 1.0).is_ok_and(|a| a >= 0.99))
                .unwrap_or(usize::MAX);
            largest = largest.max(n);
        }
    }
    Ok((largest < CAP, format!("α ≥ 0.99 reached by N = {largest}")))
}

fn active_sets() -> Result<(bool, String)> {
    let mut checked = 0;
    let mut failed = 0;
    for (_, beta) in reference_betas() {
        for n in 2..=8 {
            for m in 1..n {
                let q = AlphaQuery::new(beta.clone(), n, m, 1.0)?;
                let inst = build_lp(&q, LpVariant::Relaxed)?;
                if inst.saturated() {
                    continue;
                }
                let (_, sol) = solve_instance(&inst)?;
                checked += 1;
                if !active_set_report(&sol, &inst).confirms() {
                    failed += 1;
                }
            }
        }
    }
    Ok((failed == 0, format!("{checked} relaxed optima, {failed} without A λ = b, λ > 0")))
}

fn lower_bound_direction() -> Result<(bool, String)> {
    let opts = ClosedFormOptions {
        allow_non_submultiplicative: true,
    };
    let mut worst = f64::NEG_INFINITY;
    for c in [vec![1.0, 0.5, 0.6], vec![1.0, 1.5, 39.0 / 20.0, 0.0, 7.0 / 5.0], vec![1.2, 0.3, 0.9, 0.8]] {
        let beta = Kl0Beta::finite(c)?;
        for n in 2..=8 {
            for m in 1..n {
                let q = AlphaQuery::new(beta.clone(), n, m, 1.0)?;
                let closed = alpha_closed_form_with(&q, opts)?.alpha;
                let lp = alpha_lp(&q, LpVariant::Full)?.alpha;
                worst = worst.max(closed - lp);
            }
        }
    }
    Ok((worst <= 1e-8, format!("max closed − LP = {worst:.2e}")))
}

fn scalar_example() -> Result<(bool, String)> {
    let r = verify_controllability_example(10_000);
    Ok((r.passed(), format!("{} points, min log margin {:.3e}", r.points, r.min_margin)))
}

fn schedule_bookkeeping() -> Result<(bool, String)> {
    let mut bad = 0;
    for seed in 0..20 {
        let seq = HorizonSchedule::random(vec![1, 2, 3], seed)?.sequence(30);
        let mut acc = 0;
        for k in 0..seq.len() {
            bad += usize::from(sigma(&seq, k) != acc || phi(&seq, acc) != Some(acc));
            acc += seq[k];
        }
    }
    Ok((bad == 0, format!("20 seeded schedules, {bad} mismatches")))
}

fn dp_exactness() -> Result<(bool, String)> {
    let grid = vec![-1.0, -0.5, 0.0, 0.5, 1.0];
    let sys = cubic_system(grid.clone())?;
    let mut worst = 0f64;
    for x0 in [0.9, -0.4, 0.25] {
        for n in 1..=4 {
            let best = (0..grid.len().pow(n as u32))
                .map(|mut code| {
                    let controls: Vec<Vec<f64>> = (0..n)
                        .map(|_| {
                            let u = grid[code % grid.len()];
                            code /= grid.len();
                            vec![u]
                        })
                        .collect();
                    sys.cost_of(&[x0], &controls, 1.5)
                })
                .fold(f64::INFINITY, f64::min);
            let dp = solve_ocp(&sys, &[x0], n, 1.5)?.value;
            worst = worst.max((dp - best).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |DP − enumeration| = {worst:.2e}")))
}

/// Runs every check; the suite passes when all outcomes pass.
pub fn invariant_suite() -> Vec<CheckOutcome> {
    type Check = fn() -> Result<(bool, String)>;
    let checks: [(&str, Check); 15] = [
        ("closed form = LP oracles", oracle_equivalence),
        ("symmetry at ω = 1", symmetry),
        ("one-sided symmetry, ω > 1", one_sided_symmetry),
        ("monotone in m (exponential)", monotone_in_m),
        ("C = 1 closed form, m-independent", c1_special_case),
        ("terminal weight saturates m = 2 only", remark_terminal_weight),
        ("monotonicity counterexample", monotonicity_counterexample),
        ("α* over all m equals α(N,1)", alpha_star_at_one),
        ("minimal horizon matches bound", horizon_bound),
        ("α → 1 as N grows", convergence_in_n),
        ("relaxed optima: A λ = b, λ > 0", active_sets),
        ("closed form bounds LP from below", lower_bound_direction),
        ("scalar controllability example", scalar_example),
        ("σ/φ bookkeeping", schedule_bookkeeping),
        ("DP = exhaustive enumeration", dp_exactness),
    ];
    checks
        .iter()
        .map(|(name, f)| CheckOutcome::from_result(name, f()))
        .collect()
}

pub fn all_passed(outcomes: &[CheckOutcome]) -> bool {
    outcomes.iter().all(|o| o.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        let outcomes = invariant_suite();
        for o in &outcomes {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
        assert_eq!(outcomes.len(), 15);
    }
}
