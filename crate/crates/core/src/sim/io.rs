//! Run records as JSON/CSV and declarative experiment configs.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::example::cubic_system;
use super::pendulum::{box_grid, initial_value_grid, pendulum, PendulumParams};
use super::run::{run_mpc, MpcRun, DEFAULT_EPSILON};
use super::schedule::HorizonSchedule;
use super::system::{LinearL1, SystemModel};
use crate::error::{Error, Result};

/// `%.17g`-style formatting: 17 significant digits, trailing zeros trimmed,
/// exponent form outside `[1e-5, 1e17)`. Round-trips every finite `f64`.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa);
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Per-step rows `n, x0.., u0.., cost, segment_index`. The final state gets
/// a row with empty control and cost fields.
pub fn run_to_csv(run: &MpcRun) -> String {
    let nx = run.states.first().map_or(0, Vec::len);
    let nu = run.controls.first().map_or(0, Vec::len);
    let mut out = String::from("n");
    (0..nx).for_each(|i| write!(out, ",x{i}").unwrap());
    (0..nu).for_each(|i| write!(out, ",u{i}").unwrap());
    out.push_str(",cost,segment_index\n");
    for (n, x) in run.states.iter().enumerate() {
        write!(out, "{n}").unwrap();
        for v in x {
            write!(out, ",{}", format_float(*v)).unwrap();
        }
        match run.controls.get(n) {
            Some(u) => {
                for v in u {
                    write!(out, ",{}", format_float(*v)).unwrap();
                }
                write!(out, ",{}", format_float(run.stage_costs[n])).unwrap();
            }
            None => out.push_str(&",".repeat(nu + 1)),
        }
        writeln!(out, ",{}", run.segment_of(n)).unwrap();
    }
    out
}

pub fn run_to_json(run: &MpcRun) -> String {
    serde_json::to_string_pretty(run).expect("run records serialize")
}

/// System section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Pendulum {
        #[serde(flatten)]
        params: PendulumParams,
    },
    LinearL1 {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
        q: Vec<Vec<f64>>,
        r: Vec<Vec<f64>>,
        #[serde(default)]
        control_bounds: Option<Vec<(f64, f64)>>,
    },
    CubicScalar {
        control_grid: Vec<f64>,
    },
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("matrix {name} must be a nonempty rectangular array")));
    }
    Ok(DMatrix::from_row_iterator(r, c, rows.iter().flatten().copied()))
}

impl SystemSpec {
    pub fn build(&self) -> Result<SystemModel> {
        match self {
            SystemSpec::Pendulum { params } => pendulum(params),
            SystemSpec::LinearL1 {
                a,
                b,
                q,
                r,
                control_bounds,
            } => {
                let lin = LinearL1::new(matrix(a, "a")?, matrix(b, "b")?, matrix(q, "q")?, matrix(r, "r")?)?;
                SystemModel::linear_l1("linear L1", lin, control_bounds.clone())
            }
            SystemSpec::CubicScalar { control_grid } => cubic_system(control_grid.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialStates {
    List(Vec<Vec<f64>>),
    Grid {
        lower: Vec<f64>,
        upper: Vec<f64>,
        counts: Vec<usize>,
    },
}

/// Declarative experiment:
///
/// ```json
/// {
///   "system": {"kind": "pendulum"},
///   "horizon": 10, "omega": 1.0,
///   "schedule": {"set": [1, 2, 3], "rule": "random", "seed": 7},
///   "segments": 20, "epsilon": 1e-4,
///   "initial_states": {"lower": [-0.05, -0.05, -1, -0.05],
///                      "upper": [0.05, 0.05, 1, 0.05], "counts": [3, 3, 5, 3]}
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub horizon: usize,
    #[serde(default = "one")]
    pub omega: f64,
    pub schedule: HorizonSchedule,
    #[serde(default = "default_segments")]
    pub segments: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Defaults to the 3×3×5×3 pendulum grid.
    #[serde(default)]
    pub initial_states: Option<InitialStates>,
}

fn one() -> f64 {
    1.0
}

fn default_segments() -> usize {
    20
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.schedule.validate()?;
        Ok(cfg)
    }

    pub fn initial_states(&self) -> Result<Vec<Vec<f64>>> {
        match &self.initial_states {
            None => Ok(initial_value_grid([3, 3, 5, 3])),
            Some(InitialStates::List(v)) => Ok(v.clone()),
            Some(InitialStates::Grid { lower, upper, counts }) => {
                if lower.len() != upper.len() || lower.len() != counts.len() {
                    return Err(Error::Config("grid lower/upper/counts lengths differ".into()));
                }
                Ok(box_grid(lower, upper, counts))
            }
        }
    }

    /// One run per initial state, in input order.
    pub fn run(&self) -> Result<Vec<MpcRun>> {
        let sys = self.system.build()?;
        let states = self.initial_states()?;
        states
            .par_iter()
            .map(|x0| run_mpc(&sys, x0, self.horizon, self.omega, &self.schedule, self.segments, self.epsilon))
            .collect()
    }
}
