//! Linear inverted pendulum on a cart, sampled with zero-order hold.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::system::{LinearL1, StepFn, SystemModel};
use crate::error::Result;
use crate::horizon::linspace;

pub type VectorField = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PendulumParams {
    /// Sampling period `T`.
    pub sampling: f64,
    pub gravity: f64,
    pub friction: f64,
    /// Diagonal entries of `Q` and `R`.
    pub q_weight: f64,
    pub r_weight: f64,
}

impl Default for PendulumParams {
    fn default() -> Self {
        PendulumParams {
            sampling: 0.7,
            gravity: 9.81,
            friction: 0.1,
            q_weight: 2.0,
            r_weight: 4.0,
        }
    }
}

/// Lower and upper corner of the box of initial values.
pub const INITIAL_BOX: ([f64; 4], [f64; 4]) = ([-0.05, -0.05, -1.0, -0.05], [0.05, 0.05, 1.0, 0.05]);

/// Continuous-time `(A, B)`.
pub fn continuous_matrices(p: &PendulumParams) -> (DMatrix<f64>, DMatrix<f64>) {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(4, 4, &[
        0.0,       1.0,         0.0, 0.0,
        p.gravity, -p.friction, 0.0, 0.0,
        0.0,       0.0,         0.0, 1.0,
        0.0,       0.0,         0.0, 0.0,
    ]);
    let b = DMatrix::from_column_slice(4, 1, &[0.0, 1.0, 0.0, 1.0]);
    (a, b)
}

/// Zero-order-hold discretization through the exponential of the augmented
/// matrix `[[A, B], [0, 0]] T`.
pub fn zoh_discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (a.nrows(), b.ncols());
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * t));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * t));
    let e = aug.exp();
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned())
}

pub fn pendulum(p: &PendulumParams) -> Result<SystemModel> {
    let (a, b) = continuous_matrices(p);
    let (ad, bd) = zoh_discretize(&a, &b, p.sampling);
    let lin = LinearL1::new(
        ad,
        bd,
        DMatrix::identity(4, 4) * p.q_weight,
        DMatrix::identity(1, 1) * p.r_weight,
    )?;
    SystemModel::linear_l1("linear inverted pendulum", lin, None)
}

/// Uniform grid over the box of initial values with `counts[i]` points per
/// coordinate, in lexicographic order.
pub fn initial_value_grid(counts: [usize; 4]) -> Vec<Vec<f64>> {
    box_grid(&INITIAL_BOX.0, &INITIAL_BOX.1, &counts)
}

/// Lexicographic tensor grid over `[lower, upper]`.
pub fn box_grid(lower: &[f64], upper: &[f64], counts: &[usize]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = lower
        .iter()
        .zip(upper)
        .zip(counts)
        .map(|((lo, hi), n)| linspace(*lo, *hi, *n))
        .collect();
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// Sampled-data step map of `ẋ = f(x, u)` under a held control: classical
/// RK4 with `substeps` steps per period `t`.
pub fn rk4_step(f: Arc<VectorField>, t: f64, substeps: usize) -> Arc<StepFn> {
    let h = t / substeps as f64;
    Arc::new(move |x: &[f64], u: &[f64]| {
        let mut x = x.to_vec();
        let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
        for _ in 0..substeps {
            let k1 = f(&x, u);
            let k2 = f(&axpy(&x, &k1, h / 2.0), u);
            let k3 = f(&axpy(&x, &k2, h / 2.0), u);
            let k4 = f(&axpy(&x, &k3, h), u);
            for i in 0..x.len() {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        x
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn grid_shape() {
        let g = initial_value_grid([3, 3, 5, 3]);
        assert_eq!(g.len(), 135);
        assert_eq!(g[0], vec![-0.05, -0.05, -1.0, -0.05]);
        assert_eq!(g[134], vec![0.05, 0.05, 1.0, 0.05]);
        assert!(g.contains(&vec![0.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn zoh_matches_rk4() {
        let p = PendulumParams::default();
        let (a, b) = continuous_matrices(&p);
        let (ad, bd) = zoh_discretize(&a, &b, p.sampling);
        let (ac, bc) = (a.clone(), b.clone());
        let field: Arc<VectorField> = Arc::new(move |x, u| {
            (&ac * DVector::from_column_slice(x) + &bc * DVector::from_column_slice(u))
                .as_slice()
                .to_vec()
        });
        let step = rk4_step(field, p.sampling, 2000);
        let x = [0.03, -0.02, 0.7, 0.01];
        let u = [0.4];
        let exact = &ad * DVector::from_column_slice(&x) + &bd * DVector::from_column_slice(&u);
        let approx = step(&x, &u);
        for i in 0..4 {
            assert!((exact[i] - approx[i]).abs() < 1e-9 * exact[i].abs().max(1.0));
        }
    }

    #[test]
    fn scalar_zoh_closed_form() {
        // ẋ = -x + u: A_d = e^{-T}, B_d = 1 - e^{-T}
        let (ad, bd) = zoh_discretize(&DMatrix::from_element(1, 1, -1.0), &DMatrix::from_element(1, 1, 1.0), 0.5);
        assert!((ad[(0, 0)] - (-0.5f64).exp()).abs() < 1e-15);
        assert!((bd[(0, 0)] - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
    }
}
