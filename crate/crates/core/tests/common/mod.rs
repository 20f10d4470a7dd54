//! Brute-force reference for small linear programs.

use itertools::Itertools;
use mpclab::lp::{LpTableau, RowSense};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Best vertex of `{x : rows, lo ≤ x ≤ hi}` by brute force over all
/// nonsingular active sets. `None` when no vertex is feasible.
pub fn vertex_optimum(lp: &LpTableau, lo: f64, hi: f64) -> Option<f64> {
    let n = lp.num_vars();
    let mut eq = Vec::new();
    let mut ineq = Vec::new();
    for i in 0..lp.num_rows() {
        let entry = (lp.row(i).to_vec(), lp.rhs(i));
        if lp.sense(i) == RowSense::Eq {
            eq.push(entry);
        } else {
            ineq.push(entry);
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        ineq.push((e.clone(), lo));
        ineq.push((e, hi));
    }
    if eq.len() > n {
        return None;
    }
    let mut best: Option<f64> = None;
    for pick in (0..ineq.len()).combinations(n - eq.len()) {
        let active: Vec<&(Vec<f64>, f64)> = eq.iter().chain(pick.iter().map(|&k| &ineq[k])).collect();
        let a = DMatrix::from_fn(n, n, |r, c| active[r].0[c]);
        let b = DVector::from_fn(n, |r, _| active[r].1);
        let lu = a.lu();
        if lu.determinant().abs() < 1e-10 {
            continue;
        }
        let Some(x) = lu.solve(&b) else { continue };
        let x: Vec<f64> = x.iter().copied().collect();
        if lp.max_relative_violation(&x) <= 1e-9 && x.iter().all(|v| *v >= lo - 1e-9 && *v <= hi + 1e-9) {
            let obj = lp.objective_at(&x);
            best = Some(best.map_or(obj, |b| b.min(obj)));
        }
    }
    best
}

pub fn random_boxed_lp(rng: &mut impl Rng) -> (LpTableau, f64, f64) {
    let n = rng.gen_range(1..=8usize);
    let rows = rng.gen_range(1..=4usize);
    let (lo, hi) = (0.0, rng.gen_range(1.0..10.0));
    let mut lp = LpTableau::new(n);
    lp.set_objective((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect());
    for _ in 0..rows {
        let coeffs: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-5.0..5.0) })
            .collect();
        let sense = match rng.gen_range(0..6) {
            0 => RowSense::Eq,
            1 | 2 => RowSense::Ge,
            _ => RowSense::Le,
        };
        lp.add_row(coeffs, sense, rng.gen_range(-3.0..8.0));
    }
    for j in 0..n {
        lp.set_bounds(j, Some(lo), Some(hi));
    }
    (lp, lo, hi)
}
