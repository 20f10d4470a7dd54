//! Closed-form suboptimality index `α_{N,m}^ω` and its special cases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kl0::{GammaTable, Kl0Beta};
use crate::numeric::{product, SignedLog};

/// Either denominator factor below this absolute value is rejected.
pub const DEGENERATE_TOL: f64 = 1e-14;

/// Products switch to signed log space past this horizon ...
const LOG_SPACE_HORIZON: usize = 40;
/// ... or when any factor exceeds this magnitude.
const LOG_SPACE_FACTOR: f64 = 1e3;

/// Optimization horizon `N`, control horizon `m` and terminal weight `ω`
/// for one controllability function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaQuery {
    pub beta: Kl0Beta,
    pub horizon: usize,
    pub control_horizon: usize,
    pub omega: f64,
}

impl AlphaQuery {
    pub fn new(beta: Kl0Beta, horizon: usize, control_horizon: usize, omega: f64) -> Result<Self> {
        let q = AlphaQuery {
            beta,
            horizon,
            control_horizon,
            omega,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < 2 {
            return Err(Error::InvalidQuery(format!(
                "optimization horizon N must be >= 2, got {}",
                self.horizon
            )));
        }
        if self.control_horizon < 1 || self.control_horizon >= self.horizon {
            return Err(Error::InvalidQuery(format!(
                "control horizon m = {} outside [1, {}]",
                self.control_horizon,
                self.horizon - 1
            )));
        }
        if !(self.omega.is_finite() && self.omega >= 1.0) {
            return Err(Error::InvalidQuery(format!(
                "terminal weight omega must be >= 1, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn gammas(&self) -> Result<GammaTable> {
        self.beta.gamma_table(self.horizon, self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ClosedForm,
    LpOracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaResult {
    pub alpha: f64,
    /// `γ_{m+1} ≤ ω`, where the bound is exactly one.
    pub saturated: bool,
    pub method: Method,
    /// Set when β is not submultiplicative: the closed form is then only a
    /// lower bound on the LP optimum.
    pub lower_bound_only: bool,
    /// Optimizing LP point, in the variable order of the instance that
    /// produced it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedFormOptions {
    /// Evaluate the formula even when `c_{n+m} ≤ c_n c_m` fails.
    pub allow_non_submultiplicative: bool,
}

pub fn alpha_closed_form(q: &AlphaQuery) -> Result<AlphaResult> {
    alpha_closed_form_with(q, ClosedFormOptions::default())
}

pub fn alpha_closed_form_with(q: &AlphaQuery, opts: ClosedFormOptions) -> Result<AlphaResult> {
    q.validate()?;
    let gammas = q.gammas()?;
    let (n, m) = (q.horizon, q.control_horizon);
    // The saturation branch follows from the reduced LP alone and does not
    // need submultiplicativity.
    if gammas.gamma(m + 1) <= q.omega {
        return Ok(AlphaResult {
            alpha: 1.0,
            saturated: true,
            method: Method::ClosedForm,
            lower_bound_only: false,
            lp_point: None,
        });
    }
    let submultiplicative = q.beta.is_submultiplicative(n);
    if !submultiplicative && !opts.allow_non_submultiplicative {
        return Err(Error::NotSubmultiplicative { horizon: n });
    }
    let alpha = alpha_from_gammas(&gammas, n, m)?;
    Ok(AlphaResult {
        alpha,
        saturated: false,
        method: Method::ClosedForm,
        lower_bound_only: !submultiplicative,
        lp_point: None,
    })
}

/// Evaluates
///
/// ```text
/// α = 1 − (γ_{m+1}−ω) ∏_{m+2}^N(γ_i−1) ∏_{N−m+1}^N(γ_i−1)
///        / [(∏_{m+1}^N γ_i − (γ_{m+1}−ω) ∏_{m+2}^N(γ_i−1)) (∏_{N−m+1}^N γ_i − ∏_{N−m+1}^N(γ_i−1))]
/// ```
///
/// or returns 1 when `γ_{m+1} ≤ ω`.
pub fn alpha_from_gammas(gammas: &GammaTable, n: usize, m: usize) -> Result<f64> {
    if n < 2 || m < 1 || m >= n || gammas.horizon() < n {
        return Err(Error::InvalidQuery(format!(
            "need 1 <= m < N <= table length, got N = {n}, m = {m}, table {}",
            gammas.horizon()
        )));
    }
    let omega = gammas.omega;
    let lead = gammas.gamma(m + 1) - omega;
    if lead <= 0.0 {
        return Ok(1.0);
    }
    let g = |i: usize| gammas.gamma(i);
    let range = (m + 1).min(n - m + 1)..=n;

    let all_positive = range.clone().all(|i| g(i) - 1.0 > 0.0);
    let large = range.clone().any(|i| g(i) > LOG_SPACE_FACTOR);
    let log_space = all_positive && (n > LOG_SPACE_HORIZON || large);

    let p_a = product((m + 1..=n).map(g), log_space);
    let q_a = product((m + 2..=n).map(|i| g(i) - 1.0), log_space);
    let p_b = product((n - m + 1..=n).map(g), log_space);
    let q_b = product((n - m + 1..=n).map(|i| g(i) - 1.0), log_space);

    if !log_space {
        let (p_a, q_a, p_b, q_b) = (p_a.to_f64(), q_a.to_f64(), p_b.to_f64(), q_b.to_f64());
        let d1 = p_a - lead * q_a;
        let d2 = p_b - q_b;
        check_denominator("first denominator", d1)?;
        check_denominator("second denominator", d2)?;
        return Ok(1.0 - lead * q_a * q_b / (d1 * d2));
    }

    let lead_l = SignedLog::from_f64(lead);
    let d1 = p_a.sub(lead_l.mul(q_a));
    let d2 = p_b.sub(q_b);
    check_log_denominator("first denominator", d1)?;
    check_log_denominator("second denominator", d2)?;
    let numer = lead_l.mul(q_a).mul(q_b);
    let ratio = SignedLog {
        sign: numer.sign * d1.sign * d2.sign,
        log_abs: numer.log_abs - d1.log_abs - d2.log_abs,
    };
    Ok(1.0 - ratio.to_f64())
}

fn check_denominator(factor: &'static str, value: f64) -> Result<()> {
    if value.is_nan() || value <= DEGENERATE_TOL {
        Err(Error::DegenerateDenominator { factor, value })
    } else {
        Ok(())
    }
}

fn check_log_denominator(factor: &'static str, value: SignedLog) -> Result<()> {
    if value.sign <= 0 || value.log_abs.is_nan() || value.log_abs <= DEGENERATE_TOL.ln() {
        Err(Error::DegenerateDenominator {
            factor,
            value: value.to_f64(),
        })
    } else {
        Ok(())
    }
}

/// `min{1, 1 − (1 + σω − ω) σ^{N−1}}`, the bound for exponential
/// controllability with `C = 1` (independent of `m`).
pub fn alpha_c1_special(sigma: f64, horizon: usize, omega: f64) -> f64 {
    let eta = 1.0 + sigma * omega - omega;
    (1.0 - eta * sigma.powi(horizon as i32 - 1)).min(1.0)
}

/// One-step finite-time controllability (`c_0 = γ`, `c_n = 0` for `n ≥ 1`)
/// with `m = 1`:
/// `α = 1 − (γ−ω)(γ−1)^{N−1} / [(γ^{N−1} − (γ−ω)(γ−1)^{N−2})(γ − (γ−1))]`.
pub fn alpha_onestep_finite(gamma: f64, horizon: usize, omega: f64) -> Result<f64> {
    alpha_onestep(gamma, horizon, 1, omega)
}

/// One-step finite-time controllability for general `m`:
/// `α = 1 − (γ−ω)(γ−1)^{N−1} / [(γ^{N−m} − (γ−ω)(γ−1)^{N−m−1})(γ^m − (γ−1)^m)]`.
pub fn alpha_onestep(gamma: f64, horizon: usize, m: usize, omega: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidQuery(format!("gamma must be positive, got {gamma}")));
    }
    if horizon < 2 || m < 1 || m >= horizon {
        return Err(Error::InvalidQuery(format!(
            "need 1 <= m < N, got N = {horizon}, m = {m}"
        )));
    }
    // γ_1 = ωγ and γ_k = γ for k ≥ 2, so γ_{m+1} = γ.
    let lead = gamma - omega;
    if lead <= 0.0 {
        return Ok(1.0);
    }
    let n = horizon as f64;
    let mf = m as f64;
    let log_space = gamma - 1.0 > 0.0 && (horizon > LOG_SPACE_HORIZON || gamma > LOG_SPACE_FACTOR);
    if !log_space {
        let gm1 = gamma - 1.0;
        let d1 = gamma.powi((horizon - m) as i32) - lead * gm1.powi((horizon - m - 1) as i32);
        let d2 = gamma.powi(m as i32) - gm1.powi(m as i32);
        check_denominator("first denominator", d1)?;
        check_denominator("second denominator", d2)?;
        return Ok(1.0 - lead * gm1.powi(horizon as i32 - 1) / (d1 * d2));
    }
    let lg = gamma.ln();
    let lg1 = (gamma - 1.0).ln();
    let lead_l = SignedLog::from_f64(lead);
    let pow = |log_base: f64, e: f64| SignedLog {
        sign: 1,
        log_abs: log_base * e,
    };
    let d1 = pow(lg, n - mf).sub(lead_l.mul(pow(lg1, n - mf - 1.0)));
    let d2 = pow(lg, mf).sub(pow(lg1, mf));
    check_log_denominator("first denominator", d1)?;
    check_log_denominator("second denominator", d2)?;
    let numer = lead_l.mul(pow(lg1, n - 1.0));
    Ok(1.0 - (numer.log_abs - d1.log_abs - d2.log_abs).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(beta: Kl0Beta, n: usize, m: usize, omega: f64) -> AlphaQuery {
        AlphaQuery::new(beta, n, m, omega).unwrap()
    }

    #[test]
    fn saturated_branch() {
        let r = alpha_closed_form(&q(Kl0Beta::finite(vec![0.5]).unwrap(), 3, 1, 1.0)).unwrap();
        assert_eq!(r.alpha, 1.0);
        assert!(r.saturated);
        assert_eq!(r.method, Method::ClosedForm);
    }

    #[test]
    fn one_step_gamma_two() {
        let r = alpha_closed_form(&q(Kl0Beta::finite(vec![2.0]).unwrap(), 3, 1, 1.0)).unwrap();
        assert!((r.alpha - 2.0 / 3.0).abs() < 1e-15);
        assert!(!r.saturated);
        assert!((alpha_onestep_finite(2.0, 3, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(alpha_onestep_finite(2.0, 2, 1.0).unwrap(), 0.0);
        assert_eq!(alpha_onestep_finite(1.0, 17, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn exponential_c1() {
        let beta = Kl0Beta::exponential(1.0, 0.5).unwrap();
        let r = alpha_closed_form(&q(beta, 4, 2, 1.0)).unwrap();
        assert!((r.alpha - 0.9375).abs() < 1e-15);
        assert_eq!(alpha_c1_special(0.5, 4, 1.0), 0.9375);
        assert_eq!(alpha_c1_special(0.5, 2, 2.0), 1.0);
        assert!((alpha_c1_special(0.9, 2, 1.0) - 0.19).abs() < 1e-15);
        let r = alpha_closed_form(&q(Kl0Beta::exponential(1.0, 0.9).unwrap(), 2, 1, 1.0)).unwrap();
        assert!((r.alpha - 0.19).abs() < 1e-14);
    }

    #[test]
    fn invalid_queries() {
        let beta = Kl0Beta::exponential(2.0, 0.5).unwrap();
        assert!(AlphaQuery::new(beta.clone(), 4, 4, 1.0).is_err());
        assert!(AlphaQuery::new(beta.clone(), 4, 0, 1.0).is_err());
        assert!(AlphaQuery::new(beta.clone(), 1, 1, 1.0).is_err());
        assert!(AlphaQuery::new(beta, 4, 1, 0.99).is_err());
        assert!(alpha_onestep_finite(0.0, 3, 1.0).is_err());
    }

    #[test]
    fn non_submultiplicative_needs_opt_in() {
        let beta = Kl0Beta::finite(vec![1.0, 0.5, 0.6]).unwrap();
        let query = q(beta, 4, 1, 1.0);
        assert_eq!(
            alpha_closed_form(&query),
            Err(Error::NotSubmultiplicative { horizon: 4 })
        );
        let r = alpha_closed_form_with(
            &query,
            ClosedFormOptions {
                allow_non_submultiplicative: true,
            },
        )
        .unwrap();
        assert!(r.lower_bound_only);
        assert!(r.alpha.is_finite());
    }

    #[test]
    fn log_space_matches_plain_products() {
        // N = 40 stays on the plain path, N = 41 switches; compare each path
        // with the other route through the same table.
        let beta = Kl0Beta::exponential(2.0, 0.625).unwrap();
        for n in [38usize, 40, 41, 45] {
            let table = beta.gamma_table(n, 1.0).unwrap();
            for m in [1, n / 2, n - 1] {
                let fast = alpha_from_gammas(&table, n, m).unwrap();
                let g = |i: usize| table.gamma(i);
                let lead = g(m + 1) - 1.0;
                let p_a: f64 = (m + 1..=n).map(g).product();
                let q_a: f64 = (m + 2..=n).map(|i| g(i) - 1.0).product();
                let p_b: f64 = (n - m + 1..=n).map(g).product();
                let q_b: f64 = (n - m + 1..=n).map(|i| g(i) - 1.0).product();
                let plain = 1.0 - lead * q_a * q_b / ((p_a - lead * q_a) * (p_b - q_b));
                assert!(
                    (fast - plain).abs() <= 1e-10 * plain.abs().max(1.0),
                    "N={n} m={m}: {fast} vs {plain}"
                );
            }
        }
    }

    #[test]
    fn one_step_general_m_matches_table_route() {
        for gamma in [1.5, 2.0, 3.0, 10.0] {
            for omega in [1.0, 1.25] {
                let beta = Kl0Beta::finite(vec![gamma]).unwrap();
                for n in 2..=12 {
                    for m in 1..n {
                        let a = alpha_onestep(gamma, n, m, omega).unwrap();
                        let b = alpha_closed_form(&q(beta.clone(), n, m, omega)).unwrap().alpha;
                        assert!((a - b).abs() < 1e-12, "γ={gamma} N={n} m={m}: {a} vs {b}");
                    }
                }
            }
        }
    }
}
