//! Controllability functions `β(r, n) = c_n · r` that are linear in `r`.
//!
//! Two parametric families are supported: exponential controllability
//! `c_n = C σⁿ` and coefficient lists (finite-time controllability, or any
//! tabulated bound) that are zero past the stored support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::KahanSum;

/// Relative slack used when comparing `c_{n+m}` against `c_n · c_m`, so that
/// equalities such as `1 = (3/2)·(2/3)` survive rounding.
pub const SUBMULT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BetaSpec", into = "BetaSpec")]
pub enum Kl0Beta {
    /// `c_n = overshoot · decayⁿ` with `overshoot ≥ 1` and `0 < decay < 1`.
    Exponential { overshoot: f64, decay: f64 },
    /// `c_n = coeffs[n]` for `n < coeffs.len()`, zero afterwards.
    Coefficients(Vec<f64>),
}

impl Kl0Beta {
    pub fn exponential(overshoot: f64, decay: f64) -> Result<Self> {
        if !(overshoot.is_finite() && overshoot >= 1.0) {
            return Err(Error::InvalidBeta(format!(
                "overshoot C must be >= 1, got {overshoot}"
            )));
        }
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::InvalidBeta(format!(
                "decay rate sigma must lie in (0, 1), got {decay}"
            )));
        }
        Ok(Kl0Beta::Exponential { overshoot, decay })
    }

    /// Finite-time (or tabulated) coefficients. Trailing zeros are trimmed.
    pub fn finite(coeffs: impl Into<Vec<f64>>) -> Result<Self> {
        let mut coeffs = coeffs.into();
        if let Some(bad) = coeffs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(Error::InvalidBeta(format!(
                "coefficients must be finite and nonnegative, got {bad}"
            )));
        }
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        match coeffs.first() {
            Some(c0) if *c0 > 0.0 => Ok(Kl0Beta::Coefficients(coeffs)),
            Some(_) => Err(Error::InvalidBeta(
                "c_0 must be positive (use Kl0Beta::zero for the zero function)".into(),
            )),
            None => Err(Error::InvalidBeta(
                "empty coefficient list (use Kl0Beta::zero for the zero function)".into(),
            )),
        }
    }

    /// The identically zero function.
    pub fn zero() -> Self {
        Kl0Beta::Coefficients(Vec::new())
    }

    /// `c_n`, the slope of `β(·, n)`.
    pub fn coefficient(&self, n: usize) -> f64 {
        match self {
            Kl0Beta::Exponential { overshoot, decay } => overshoot * decay.powi(n as i32),
            Kl0Beta::Coefficients(c) => c.get(n).copied().unwrap_or(0.0),
        }
    }

    pub fn eval(&self, r: f64, n: usize) -> f64 {
        self.coefficient(n) * r
    }

    /// `γ_k = Σ_{n<k-1} c_n + ω c_{k-1}` for `k = 1..=horizon`.
    pub fn gamma_table(&self, horizon: usize, omega: f64) -> Result<GammaTable> {
        if horizon == 0 {
            return Err(Error::InvalidQuery("gamma table needs horizon >= 1".into()));
        }
        if !(omega.is_finite() && omega >= 1.0) {
            return Err(Error::InvalidQuery(format!("omega must be >= 1, got {omega}")));
        }
        let mut partial = KahanSum::new();
        let mut gammas = Vec::with_capacity(horizon);
        for k in 1..=horizon {
            let last = self.coefficient(k - 1);
            gammas.push(partial.value() + omega * last);
            partial.add(last);
        }
        Ok(GammaTable { omega, gammas })
    }

    /// Linear-in-`r` form of `β(r, n+m) ≤ β(β(r, n), m)`: checks
    /// `c_{n+m} ≤ c_n c_m` for every `n + m ≤ horizon`.
    pub fn is_submultiplicative(&self, horizon: usize) -> bool {
        match self {
            // σ^{n+m} = σⁿσᵐ and C ≤ C²
            Kl0Beta::Exponential { .. } => true,
            Kl0Beta::Coefficients(_) => {
                for total in 0..=horizon {
                    let lhs = self.coefficient(total);
                    for n in 0..=total {
                        let rhs = self.coefficient(n) * self.coefficient(total - n);
                        if lhs > rhs + SUBMULT_REL_TOL * rhs.max(lhs) {
                            return false;
                        }
                    }
                }
                true
            }
        }
    }

    /// `Σ_n c_n`.
    pub fn total_mass(&self) -> f64 {
        match self {
            Kl0Beta::Exponential { overshoot, decay } => overshoot / (1.0 - decay),
            Kl0Beta::Coefficients(c) => {
                let mut s = KahanSum::new();
                c.iter().for_each(|&x| s.add(x));
                s.value()
            }
        }
    }

    /// Index past which every coefficient is zero, if any.
    pub fn support_len(&self) -> Option<usize> {
        match self {
            Kl0Beta::Exponential { .. } => None,
            Kl0Beta::Coefficients(c) => Some(c.len()),
        }
    }
}

/// `γ_1, …, γ_N` for a fixed terminal weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTable {
    pub omega: f64,
    /// `gammas[k - 1] = γ_k`.
    pub gammas: Vec<f64>,
}

impl GammaTable {
    /// `γ_k`, one-based.
    pub fn gamma(&self, k: usize) -> f64 {
        self.gammas[k - 1]
    }

    pub fn horizon(&self) -> usize {
        self.gammas.len()
    }
}

/// Wire form of a controllability function:
/// `{"kind":"exponential","C":2.0,"sigma":0.625}` or
/// `{"kind":"finite","c":[1.0,1.25]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BetaSpec {
    Exponential {
        #[serde(rename = "C")]
        overshoot: f64,
        sigma: f64,
    },
    #[serde(alias = "tabulated")]
    Finite { c: Vec<f64> },
}

impl TryFrom<BetaSpec> for Kl0Beta {
    type Error = Error;

    fn try_from(spec: BetaSpec) -> Result<Self> {
        match spec {
            BetaSpec::Exponential { overshoot, sigma } => Kl0Beta::exponential(overshoot, sigma),
            BetaSpec::Finite { c } if c.iter().all(|x| *x == 0.0) => Ok(Kl0Beta::zero()),
            BetaSpec::Finite { c } => Kl0Beta::finite(c),
        }
    }
}

impl From<Kl0Beta> for BetaSpec {
    fn from(beta: Kl0Beta) -> Self {
        match beta {
            Kl0Beta::Exponential { overshoot, decay } => BetaSpec::Exponential {
                overshoot,
                sigma: decay,
            },
            Kl0Beta::Coefficients(c) => BetaSpec::Finite { c },
        }
    }
}

impl std::str::FromStr for Kl0Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}
