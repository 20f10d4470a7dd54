//! Dense two-phase primal simplex.
//!
//! Sized for the small, highly degenerate programs that appear in the
//! suboptimality oracle and in 1-norm optimal control of low-dimensional
//! linear plants. Storage is dense and pivoting is deterministic: Dantzig
//! pricing falls back to Bland's rule on degenerate stalls, and the ratio
//! test is Harris's two-pass variant. The tableau is periodically rebuilt
//! from the basis by an LU solve.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-relative primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;
/// Pivots must exceed this fraction of their column's largest entry.
pub const PIVOT_TOL: f64 = 1e-11;
/// Basic values below `-CLEAN_TOL` get cleared before a basis is accepted.
const CLEAN_TOL: f64 = 1e-12;
/// Relative magnitude below which tableau entries count as roundoff.
const NOISE_TOL: f64 = 1e-14;
/// Reduced costs above `-OPT_TOL` count as nonnegative.
pub const OPT_TOL: f64 = 1e-10;
/// Soft size cap on the user-facing program.
pub const MAX_VARS: usize = 500;
pub const MAX_ROWS: usize = 500;

const MAX_ITERATIONS: usize = 200_000;
const MAX_REFINEMENTS: usize = 4;
const REFRESH_INTERVAL: usize = 50;
const DEGENERATE_LIMIT: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

/// `minimize c·x` subject to dense rows `a_i·x (≤|=|≥) b_i` and per-variable
/// bounds. Lower bounds default to zero; `None` means unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpTableau {
    objective: Vec<f64>,
    rows: Vec<Vec<f64>>,
    senses: Vec<RowSense>,
    rhs: Vec<f64>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

impl LpTableau {
    pub fn new(num_vars: usize) -> Self {
        LpTableau {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![Some(0.0); num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn set_objective(&mut self, coeffs: Vec<f64>) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars(), "objective length");
        self.objective = coeffs;
        self
    }

    pub fn set_objective_coeff(&mut self, var: usize, value: f64) -> &mut Self {
        self.objective[var] = value;
        self
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> usize {
        assert_eq!(coeffs.len(), self.num_vars(), "row length");
        self.rows.push(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    /// Add a row given as sparse `(var, coeff)` pairs; repeated vars add up.
    pub fn add_sparse_row(&mut self, terms: &[(usize, f64)], sense: RowSense, rhs: f64) -> usize {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.add_row(coeffs, sense, rhs)
    }

    pub fn set_bounds(&mut self, var: usize, lower: Option<f64>, upper: Option<f64>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, None, None)
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn sense(&self, i: usize) -> RowSense {
        self.senses[i]
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.rhs[i]
    }

    pub fn bounds(&self, var: usize) -> (Option<f64>, Option<f64>) {
        (self.lower[var], self.upper[var])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.rows.iter().any(|r| r.len() != n)
            || self.senses.len() != self.rows.len()
            || self.rhs.len() != self.rows.len()
            || self.lower.len() != n
            || self.upper.len() != n
        {
            return Err(Error::MalformedLp("inconsistent dimensions".into()));
        }
        let finite = self.objective.iter().all(|v| v.is_finite())
            && self.rows.iter().flatten().all(|v| v.is_finite())
            && self.rhs.iter().all(|v| v.is_finite())
            && self.lower.iter().flatten().all(|v| v.is_finite())
            && self.upper.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::MalformedLp("non-finite entry".into()));
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (self.lower[j], self.upper[j]) {
                if l > u {
                    return Err(Error::MalformedLp(format!("empty bounds on variable {j}")));
                }
            }
        }
        if n > MAX_VARS || self.rows.len() > MAX_ROWS {
            return Err(Error::SizeExceeded {
                vars: n,
                rows: self.rows.len(),
            });
        }
        Ok(())
    }

    /// `a_i · x` for every row.
    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, v)| a * v).sum())
            .collect()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row violation of `x`, each scaled by
    /// `max(1, |b_i|, Σ_j |a_ij x_j|)`; bound violations are absolute.
    pub fn max_relative_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, r) in self.rows.iter().enumerate() {
            let act: f64 = r.iter().zip(x).map(|(a, v)| a * v).sum();
            let mag: f64 = r.iter().zip(x).map(|(a, v)| (a * v).abs()).sum();
            let scale = 1f64.max(self.rhs[i].abs()).max(mag);
            let viol = match self.senses[i] {
                RowSense::Le => act - self.rhs[i],
                RowSense::Ge => self.rhs[i] - act,
                RowSense::Eq => (act - self.rhs[i]).abs(),
            };
            worst = worst.max(viol / scale);
        }
        for (j, v) in x.iter().enumerate() {
            if let Some(l) = self.lower[j] {
                worst = worst.max(l - v);
            }
            if let Some(u) = self.upper[j] {
                worst = worst.max(v - u);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point in the caller's variables; empty unless optimal.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, iterations: usize) -> Self {
        let objective_value = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        LpSolution {
            status,
            x: Vec::new(),
            objective_value,
            iterations,
        }
    }
}

pub fn solve(lp: &LpTableau) -> Result<LpSolution> {
    lp.validate()?;
    let std = StandardForm::build(lp);
    let mut simplex = Simplex::new(&std);

    // Phase 1: minimize the sum of artificials.
    let phase1_cost: Vec<f64> = (0..std.n)
        .map(|j| if j >= std.artificial_start { 1.0 } else { 0.0 })
        .collect();
    let all_cols = vec![true; std.n];
    match simplex.run(&phase1_cost, &all_cols)? {
        Step::Optimal => {}
        // The phase-1 objective is bounded below by zero.
        Step::Unbounded => {
            return Err(Error::NumericalBreakdown("phase 1 reported unbounded".into()))
        }
    }
    let b_scale = std.b.iter().fold(1f64, |acc, v| acc.max(v.abs()));
    if simplex.objective(&phase1_cost) > FEAS_TOL * b_scale {
        return Ok(LpSolution::without_point(
            LpStatus::Infeasible,
            simplex.iterations,
        ));
    }
    simplex.drive_out_artificials(std.artificial_start);

    // Phase 2 on structural and slack columns only.
    let allowed: Vec<bool> = (0..std.n).map(|j| j < std.artificial_start).collect();
    let mut rounds = 0;
    loop {
        match simplex.run(&std.cost, &allowed)? {
            Step::Unbounded => {
                return Ok(LpSolution::without_point(
                    LpStatus::Unbounded,
                    simplex.iterations,
                ))
            }
            Step::Optimal => {}
        }
        // Recompute the tableau from the original data for the final basis;
        // accept once it is still primal and dual feasible.
        simplex.rebuild_from_basis()?;
        simplex.restore_primal(&std.cost, &allowed)?;
        rounds += 1;
        if simplex.is_optimal(&std.cost, &allowed) || rounds >= MAX_REFINEMENTS {
            break;
        }
    }

    let z = simplex.primal_values();
    let x = std.recover(&z);
    let violation = lp.max_relative_violation(&x);
    if violation > FEAS_TOL {
        return Err(Error::NumericalBreakdown(format!(
            "final point violates constraints by {violation:e}"
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective_value: lp.objective_at(&x),
        x,
        iterations: simplex.iterations,
    })
}

#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    /// x = offset + z[col]
    Shift { col: usize, offset: f64 },
    /// x = offset - z[col]
    Negated { col: usize, offset: f64 },
    /// x = z[pos] - z[neg]
    Split { pos: usize, neg: usize },
}

/// `A z = b`, `z ≥ 0`, `b ≥ 0`, with slack/surplus and artificial columns
/// appended after the structural ones.
struct StandardForm {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    cost: Vec<f64>,
    artificial_start: usize,
    initial_basis: Vec<usize>,
    columns: Vec<ColumnMap>,
    /// Partner column of each half of a split free variable. The two columns
    /// are exact negatives, so they must never be basic together.
    twin: Vec<Option<usize>>,
}

impl StandardForm {
    fn build(lp: &LpTableau) -> Self {
        let nv = lp.num_vars();
        let mut columns = Vec::with_capacity(nv);
        let mut structural = 0usize;
        // Extra rows z ≤ u - l for doubly bounded variables.
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..nv {
            match (lp.lower[j], lp.upper[j]) {
                (Some(l), upper) => {
                    columns.push(ColumnMap::Shift {
                        col: structural,
                        offset: l,
                    });
                    if let Some(u) = upper {
                        bound_rows.push((structural, u - l));
                    }
                    structural += 1;
                }
                (None, Some(u)) => {
                    columns.push(ColumnMap::Negated {
                        col: structural,
                        offset: u,
                    });
                    structural += 1;
                }
                (None, None) => {
                    columns.push(ColumnMap::Split {
                        pos: structural,
                        neg: structural + 1,
                    });
                    structural += 2;
                }
            }
        }

        // Rows over structural columns: (coeffs, sense, rhs).
        let mut rows: Vec<(Vec<f64>, RowSense, f64)> = Vec::new();
        for i in 0..lp.num_rows() {
            let mut coeffs = vec![0.0; structural];
            let mut rhs = lp.rhs[i];
            for (j, &a) in lp.rows[i].iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                match columns[j] {
                    ColumnMap::Shift { col, offset } => {
                        coeffs[col] += a;
                        rhs -= a * offset;
                    }
                    ColumnMap::Negated { col, offset } => {
                        coeffs[col] -= a;
                        rhs -= a * offset;
                    }
                    ColumnMap::Split { pos, neg } => {
                        coeffs[pos] += a;
                        coeffs[neg] -= a;
                    }
                }
            }
            rows.push((coeffs, lp.senses[i], rhs));
        }
        for &(col, cap) in &bound_rows {
            let mut coeffs = vec![0.0; structural];
            coeffs[col] = 1.0;
            rows.push((coeffs, RowSense::Le, cap));
        }

        let mut cost = vec![0.0; structural];
        for (j, &c) in lp.objective.iter().enumerate() {
            match columns[j] {
                ColumnMap::Shift { col, .. } => cost[col] += c,
                ColumnMap::Negated { col, .. } => cost[col] -= c,
                ColumnMap::Split { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }

        let m = rows.len();
        let num_slack = rows.iter().filter(|r| r.1 != RowSense::Eq).count();
        // Rows whose slack enters with +1 after sign normalization start with
        // the slack basic; all others need an artificial.
        let mut needs_artificial = Vec::with_capacity(m);
        for (_, sense, rhs) in &rows {
            let flip = *rhs < 0.0;
            let slack_positive = match sense {
                RowSense::Le => !flip,
                RowSense::Ge => flip,
                RowSense::Eq => false,
            };
            needs_artificial.push(!slack_positive);
        }
        let num_art = needs_artificial.iter().filter(|v| **v).count();
        let n = structural + num_slack + num_art;
        let artificial_start = structural + num_slack;

        let mut a = vec![0.0; m * n];
        let mut b = vec![0.0; m];
        let mut initial_basis = vec![0usize; m];
        let mut slack_col = structural;
        let mut art_col = artificial_start;
        for (i, (coeffs, sense, rhs)) in rows.into_iter().enumerate() {
            let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut a[i * n..(i + 1) * n];
            for (j, v) in coeffs.into_iter().enumerate() {
                row[j] = sign * v;
            }
            b[i] = sign * rhs;
            match sense {
                RowSense::Le | RowSense::Ge => {
                    let s = if sense == RowSense::Le { 1.0 } else { -1.0 };
                    row[slack_col] = sign * s;
                    if !needs_artificial[i] {
                        initial_basis[i] = slack_col;
                    }
                    slack_col += 1;
                }
                RowSense::Eq => {}
            }
            if needs_artificial[i] {
                row[art_col] = 1.0;
                initial_basis[i] = art_col;
                art_col += 1;
            }
        }
        cost.resize(n, 0.0);
        let mut twin = vec![None; n];
        for c in &columns {
            if let ColumnMap::Split { pos, neg } = *c {
                twin[pos] = Some(neg);
                twin[neg] = Some(pos);
            }
        }

        StandardForm {
            m,
            n,
            a,
            b,
            cost,
            artificial_start,
            initial_basis,
            columns,
            twin,
        }
    }

    fn recover(&self, z: &[f64]) -> Vec<f64> {
        self.columns
            .iter()
            .map(|c| match *c {
                ColumnMap::Shift { col, offset } => offset + z[col],
                ColumnMap::Negated { col, offset } => offset - z[col],
                ColumnMap::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect()
    }
}

enum Step {
    Optimal,
    Unbounded,
}

struct Simplex<'a> {
    std: &'a StandardForm,
    /// Standard-form rows still present (redundant rows get dropped).
    rows: Vec<usize>,
    /// `rows.len() × (n + 1)`, last column is the right-hand side.
    tab: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

impl<'a> Simplex<'a> {
    fn new(std: &'a StandardForm) -> Self {
        let w = std.n + 1;
        let mut tab = vec![0.0; std.m * w];
        for i in 0..std.m {
            tab[i * w..i * w + std.n].copy_from_slice(&std.a[i * std.n..(i + 1) * std.n]);
            tab[i * w + std.n] = std.b[i];
        }
        Simplex {
            std,
            rows: (0..std.m).collect(),
            tab,
            basis: std.initial_basis.clone(),
            iterations: 0,
        }
    }

    fn width(&self) -> usize {
        self.std.n + 1
    }

    fn entry(&self, r: usize, c: usize) -> f64 {
        self.tab[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.entry(r, self.std.n)
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let n = self.std.n;
        let mut d = cost.to_vec();
        for (r, &bj) in self.basis.iter().enumerate() {
            let cb = cost[bj];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[r * self.width()..r * self.width() + n];
            for (dj, a) in d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(r, &j)| cost[j] * self.rhs(r))
            .sum()
    }

    fn is_optimal(&self, cost: &[f64], allowed: &[bool]) -> bool {
        let d = self.reduced_costs(cost);
        let eligible = self.eligible(allowed);
        let primal_ok = (0..self.rows.len()).all(|r| self.rhs(r) >= -FEAS_TOL);
        primal_ok && (0..self.std.n).all(|j| !eligible[j] || d[j] >= -OPT_TOL)
    }

    /// Columns that may enter: allowed, and not the twin of a basic column.
    /// A twin's true reduced cost is zero and its tableau column is a unit
    /// vector, so anything else it shows is roundoff.
    fn eligible(&self, allowed: &[bool]) -> Vec<bool> {
        let mut ok = allowed.to_vec();
        for &bj in &self.basis {
            if let Some(t) = self.std.twin[bj] {
                ok[t] = false;
            }
        }
        ok
    }

    fn pivot(&mut self, r: usize, c: usize, d: &mut [f64]) {
        let w = self.width();
        let p = self.tab[r * w + c];
        {
            let row = &mut self.tab[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[c] = 1.0;
        }
        // The pivot row is typically sparse; update only its support.
        let support: Vec<(usize, f64)> = self.tab[r * w..(r + 1) * w]
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.tab[i * w + c];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.tab[i * w..(i + 1) * w];
            for &(j, pv) in &support {
                row[j] -= f * pv;
            }
            row[c] = 0.0;
        }
        let f = d[c];
        if f != 0.0 {
            for &(j, pv) in support.iter().filter(|(j, _)| *j < self.std.n) {
                d[j] -= f * pv;
            }
            d[c] = 0.0;
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Dantzig pricing (most negative reduced cost) that falls back to
    /// Bland's rule (lowest-index improving column) after
    /// `DEGENERATE_LIMIT` consecutive degenerate pivots, until the objective
    /// moves again; Bland's rule rules out cycling on the degenerate
    /// stretches. The tableau is re-factored from the original data every
    /// `REFRESH_INTERVAL` pivots and before any verdict is accepted, so that
    /// drift cannot fake optimality or unboundedness.
    fn run(&mut self, cost: &[f64], allowed: &[bool]) -> Result<Step> {
        let mut d = self.reduced_costs(cost);
        let mut since_refresh = 0usize;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(Error::NumericalBreakdown("iteration limit reached".into()));
            }
            let mut tiny_only = false;
            let mut verdict = None;
            let mut chosen = None;
            let eligible = self.eligible(allowed);
            let mut candidates: Vec<usize> = (0..self.std.n)
                .filter(|&c| eligible[c] && d[c] < -OPT_TOL)
                .collect();
            if degenerate_run < DEGENERATE_LIMIT {
                candidates.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
            }
            for c in candidates {
                match self.ratio_test(c) {
                    Ratio::Row(r) => {
                        chosen = Some((r, c));
                        break;
                    }
                    Ratio::Unbounded => {
                        verdict = Some(Step::Unbounded);
                        break;
                    }
                    Ratio::OnlyTiny => tiny_only = true,
                }
            }
            if let Some((r, c)) = chosen {
                if self.rhs(r) <= FEAS_TOL {
                    degenerate_run += 1;
                } else {
                    degenerate_run = 0;
                }
                self.pivot(r, c, &mut d);
                since_refresh += 1;
                if since_refresh >= REFRESH_INTERVAL {
                    self.rebuild_from_basis()?;
                    d = self.reduced_costs(cost);
                    since_refresh = 0;
                }
                continue;
            }
            if since_refresh > 0 {
                self.rebuild_from_basis()?;
                d = self.reduced_costs(cost);
                since_refresh = 0;
                continue;
            }
            return match verdict {
                Some(step) => Ok(step),
                None if tiny_only => Err(Error::NumericalBreakdown(
                    "every improving column has pivots below tolerance".into(),
                )),
                None => Ok(Step::Optimal),
            };
        }
    }

    /// Two-pass (Harris) ratio test. The first pass bounds the step by every
    /// positive entry above the noise floor, with basic values relaxed by
    /// `FEAS_TOL`, so rows skipped later cannot go more than `FEAS_TOL`
    /// negative. The second pass picks the largest pivot among rows within
    /// that bound, counting only entries above `PIVOT_TOL` relative to the
    /// column. Exact ties go to the lowest-index basic variable.
    fn ratio_test(&self, c: usize) -> Ratio {
        let rows = self.rows.len();
        let col_max = (0..rows).map(|r| self.entry(r, c).abs()).fold(1.0, f64::max);
        let threshold = PIVOT_TOL * col_max;
        let mut theta_max = f64::INFINITY;
        for r in 0..rows {
            let a = self.entry(r, c);
            if a > NOISE_TOL * col_max {
                theta_max = theta_max.min((self.rhs(r).max(0.0) + FEAS_TOL) / a);
            }
        }
        if theta_max == f64::INFINITY {
            return Ratio::Unbounded;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for r in 0..rows {
            let a = self.entry(r, c);
            if a <= threshold || self.rhs(r).max(0.0) / a > theta_max {
                continue;
            }
            let replace = match best {
                None => true,
                Some((cur, basic, _)) => a > cur || (a == cur && self.basis[r] < basic),
            };
            if replace {
                best = Some((a, self.basis[r], r));
            }
        }
        match best {
            Some((_, _, r)) => Ratio::Row(r),
            None => Ratio::OnlyTiny,
        }
    }

    /// Pivot basic artificials (at level zero) onto structural or slack
    /// columns; rows where that is impossible are linearly dependent and get
    /// dropped.
    fn drive_out_artificials(&mut self, artificial_start: usize) {
        let mut r = 0;
        let mut dummy = vec![0.0; self.std.n];
        while r < self.rows.len() {
            if self.basis[r] < artificial_start {
                r += 1;
                continue;
            }
            let structural: Vec<bool> = (0..self.std.n).map(|j| j < artificial_start).collect();
            let eligible = self.eligible(&structural);
            let col = (0..artificial_start)
                .filter(|&j| eligible[j] && self.entry(r, j).abs() > PIVOT_TOL)
                .max_by(|&a, &b| {
                    self.entry(r, a)
                        .abs()
                        .partial_cmp(&self.entry(r, b).abs())
                        .unwrap()
                        .then(b.cmp(&a))
                });
            match col {
                Some(c) => {
                    self.pivot(r, c, &mut dummy);
                    r += 1;
                }
                None => {
                    let w = self.width();
                    self.tab.drain(r * w..(r + 1) * w);
                    self.rows.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }

    /// Replace the accumulated tableau by `B⁻¹ [A | b]` computed from the
    /// original standard-form data.
    fn rebuild_from_basis(&mut self) -> Result<()> {
        let k = self.rows.len();
        if k == 0 {
            return Ok(());
        }
        let n = self.std.n;
        let a_rows = DMatrix::from_fn(k, n + 1, |i, j| {
            let src = self.rows[i];
            if j < n {
                self.std.a[src * n + j]
            } else {
                self.std.b[src]
            }
        });
        let basis_mat = DMatrix::from_fn(k, k, |i, j| a_rows[(i, self.basis[j])]);
        let solved = basis_mat
            .lu()
            .solve(&a_rows)
            .ok_or_else(|| Error::NumericalBreakdown("singular basis".into()))?;
        let w = self.width();
        for i in 0..k {
            for j in 0..=n {
                self.tab[i * w + j] = solved[(i, j)];
            }
        }
        for (i, &bj) in self.basis.iter().enumerate() {
            for r in 0..k {
                self.tab[r * w + bj] = if r == i { 1.0 } else { 0.0 };
            }
        }
        Ok(())
    }

    /// Dual simplex passes that clear basic values below `-CLEAN_TOL` left
    /// by the relaxed ratio test, keeping reduced costs nonnegative.
    fn restore_primal(&mut self, cost: &[f64], allowed: &[bool]) -> Result<()> {
        let mut d = self.reduced_costs(cost);
        let mut pivots = 0usize;
        loop {
            let leave = (0..self.rows.len())
                .filter(|&r| self.rhs(r) < -CLEAN_TOL)
                .min_by(|&a, &b| self.rhs(a).total_cmp(&self.rhs(b)).then(a.cmp(&b)));
            let Some(r) = leave else {
                break;
            };
            let row_max = (0..self.std.n).map(|j| self.entry(r, j).abs()).fold(1.0, f64::max);
            let eligible = self.eligible(allowed);
            let mut best: Option<(f64, f64, usize)> = None;
            for j in 0..self.std.n {
                let a = self.entry(r, j);
                if !eligible[j] || a >= -PIVOT_TOL * row_max {
                    continue;
                }
                let ratio = d[j].max(0.0) / -a;
                let replace = match best {
                    None => true,
                    Some((cur, mag, _)) => ratio < cur || (ratio == cur && -a > mag),
                };
                if replace {
                    best = Some((ratio, -a, j));
                }
            }
            let Some((_, _, c)) = best else {
                return Err(Error::NumericalBreakdown("cannot restore primal feasibility".into()));
            };
            self.pivot(r, c, &mut d);
            pivots += 1;
            if self.iterations >= MAX_ITERATIONS {
                return Err(Error::NumericalBreakdown("iteration limit reached".into()));
            }
        }
        if pivots > 0 {
            self.rebuild_from_basis()?;
        }
        Ok(())
    }

    fn primal_values(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.std.n];
        for (r, &j) in self.basis.iter().enumerate() {
            z[j] = self.rhs(r).max(0.0);
        }
        z
    }
}

enum Ratio {
    Row(usize),
    Unbounded,
    OnlyTiny,
}
