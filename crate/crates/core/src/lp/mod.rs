//! Small dense linear programs.
//!
//! [`solve`] handles equality rows, `≤` rows and per-variable bounds (with
//! `±∞`). It is meant for desk-scale problems: hull membership with a few
//! hundred points, cone pointedness, affine majorant fits.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{KconeError, Result};
use crate::space::{norm, Point};
use simplex::{Phase, Pivoting, Tableau};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    /// Rows of `A x ≤ b`.
    pub ub_matrix: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
    /// `(lo, hi)` per variable; infinite values allowed.
    pub bounds: Vec<(f64, f64)>,
}

impl LpProblem {
    /// `n` variables, zero objective, `x ≥ 0`.
    pub fn new(n: usize) -> Self {
        LpProblem {
            sense: Sense::Minimize,
            objective: vec![0.0; n],
            eq_matrix: Vec::new(),
            eq_rhs: Vec::new(),
            ub_matrix: Vec::new(),
            ub_rhs: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn minimize(mut self, c: Vec<f64>) -> Self {
        self.sense = Sense::Minimize;
        self.objective = c;
        self
    }

    pub fn maximize(mut self, c: Vec<f64>) -> Self {
        self.sense = Sense::Maximize;
        self.objective = c;
        self
    }

    pub fn eq(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn le(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ub_matrix.push(row);
        self.ub_rhs.push(rhs);
        self
    }

    pub fn ge(self, row: Vec<f64>, rhs: f64) -> Self {
        self.le(row.into_iter().map(|v| -v).collect(), -rhs)
    }

    pub fn bound(mut self, j: usize, lo: f64, hi: f64) -> Self {
        self.bounds[j] = (lo, hi);
        self
    }

    pub fn free(self, j: usize) -> Self {
        self.bound(j, f64::NEG_INFINITY, f64::INFINITY)
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        let bad = |what: &str| Err(KconeError::DimensionMismatch(what.to_string()));
        if self.bounds.len() != n {
            return bad("bounds length differs from objective length");
        }
        if self.eq_matrix.len() != self.eq_rhs.len() || self.ub_matrix.len() != self.ub_rhs.len() {
            return bad("row count differs from rhs length");
        }
        if self.eq_matrix.iter().chain(&self.ub_matrix).any(|r| r.len() != n) {
            return bad("constraint row length differs from variable count");
        }
        if self.eq_rhs.iter().chain(&self.ub_rhs).any(|b| !b.is_finite()) {
            return bad("non-finite rhs");
        }
        if self.bounds.iter().any(|(lo, hi)| lo > hi || lo.is_nan() || hi.is_nan()) {
            return bad("inconsistent variable bounds");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    /// Multipliers for the equality rows followed by the `≤` rows, on
    /// `Optimal`. For a minimization, `Aᵀy ≤ c` up to bound multipliers.
    pub duals: Option<Vec<f64>>,
    /// On `Infeasible`: `y` with `yᵀA ≤ 0` on the nonnegative standard-form
    /// columns and `yᵀb > 0`, over equality rows, then `≤` rows, then one row
    /// per doubly-bounded variable.
    pub farkas: Option<Vec<f64>>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpConfig {
    /// Absolute feasibility tolerance, scaled by `1 + ‖rhs‖`.
    pub feas_tol: f64,
    pub pivot_tol: f64,
    pub max_iter: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig { feas_tol: 1e-9, pivot_tol: 1e-9, max_iter: 100_000 }
    }
}

struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

pub fn solve(p: &LpProblem) -> Result<LpResult> {
    solve_with(p, &LpConfig::default())
}

pub fn solve_with(p: &LpProblem, cfg: &LpConfig) -> Result<LpResult> {
    p.validate()?;
    let n = p.num_vars();

    // Variable substitution into nonnegative standard-form columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncol = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &p.bounds {
        let map = match (lo.is_finite(), hi.is_finite()) {
            (true, hi_fin) => {
                if hi_fin {
                    bound_rows.push((ncol, hi - lo));
                }
                ncol += 1;
                VarMap { offset: lo, cols: vec![(ncol - 1, 1.0)] }
            }
            (false, true) => {
                ncol += 1;
                VarMap { offset: hi, cols: vec![(ncol - 1, -1.0)] }
            }
            (false, false) => {
                ncol += 2;
                VarMap { offset: 0.0, cols: vec![(ncol - 2, 1.0), (ncol - 1, -1.0)] }
            }
        };
        maps.push(map);
    }
    let n_struct = ncol;
    let n_ub = p.ub_matrix.len();
    let n_eq = p.eq_matrix.len();
    let n_std = n_struct + n_ub + bound_rows.len();
    let m = n_eq + n_ub + bound_rows.len();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs: Vec<f64> = Vec::with_capacity(m);
    let expand = |a: &[f64], b: f64| {
        let mut row = vec![0.0; n_std];
        let mut r = b;
        for (j, map) in maps.iter().enumerate() {
            if a[j] != 0.0 {
                r -= a[j] * map.offset;
                for &(c, s) in &map.cols {
                    row[c] += a[j] * s;
                }
            }
        }
        (row, r)
    };
    for (a, &b) in p.eq_matrix.iter().zip(&p.eq_rhs) {
        let (row, r) = expand(a, b);
        rows.push(row);
        rhs.push(r);
    }
    for (k, (a, &b)) in p.ub_matrix.iter().zip(&p.ub_rhs).enumerate() {
        let (mut row, r) = expand(a, b);
        row[n_struct + k] = 1.0;
        rows.push(row);
        rhs.push(r);
    }
    for (k, &(c, width)) in bound_rows.iter().enumerate() {
        let mut row = vec![0.0; n_std];
        row[c] = 1.0;
        row[n_struct + n_ub + k] = 1.0;
        rows.push(row);
        rhs.push(width);
    }

    // Row equilibration and sign normalization (rhs ≥ 0).
    let mut row_scale = vec![1.0; m];
    for i in 0..m {
        let mut s = rows[i].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if s == 0.0 {
            s = 1.0;
        }
        if rhs[i] < 0.0 {
            s = -s;
        }
        for v in rows[i].iter_mut() {
            *v /= s;
        }
        rhs[i] /= s;
        row_scale[i] = s;
    }
    let b_norm = norm(&rhs);

    let piv = Pivoting { pivot_tol: cfg.pivot_tol, max_iter: cfg.max_iter, degenerate_limit: 50 };
    let mut tab = Tableau::new(&rows, &rhs, n_std);

    // Phase I.
    let mut cost1 = vec![0.0; n_std + m];
    for c in cost1.iter_mut().skip(n_std) {
        *c = 1.0;
    }
    tab.price(&cost1);
    let all = vec![true; n_std + m];
    let (_, it1) = tab.optimize(&all, 1e-12, &piv)?;
    let infeas = -tab.objective_row_rhs();
    if infeas > cfg.feas_tol * (1.0 + b_norm) {
        let farkas = (0..m).map(|i| (1.0 - tab.reduced_cost(tab.artificial(i))) / row_scale[i]).collect();
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            x: None,
            objective_value: None,
            duals: None,
            farkas: Some(farkas),
            iterations: it1,
        });
    }

    // Phase II.
    tab.expel_artificials(cfg.pivot_tol);
    let sign = if p.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut cost2 = vec![0.0; n_std + m];
    for (j, map) in maps.iter().enumerate() {
        for &(c, s) in &map.cols {
            cost2[c] += sign * p.objective[j] * s;
        }
    }
    let cmax = cost2.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    tab.price(&cost2);
    let mut allowed = vec![true; n_std + m];
    for a in allowed.iter_mut().skip(n_std) {
        *a = false;
    }
    let (phase, it2) = tab.optimize(&allowed, 1e-11 * (1.0 + cmax), &piv)?;
    let iterations = it1 + it2;
    if let Phase::Unbounded = phase {
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            x: None,
            objective_value: None,
            duals: None,
            farkas: None,
            iterations,
        });
    }

    let xs = tab.solution();
    let x: Vec<f64> =
        maps.iter().map(|map| map.offset + map.cols.iter().map(|&(c, s)| s * xs[c]).sum::<f64>()).collect();
    let objective_value: f64 = p.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let duals: Vec<f64> =
        (0..n_eq + n_ub).map(|i| -sign * tab.reduced_cost(tab.artificial(i)) / row_scale[i]).collect();

    check_feasible(p, &x, cfg.feas_tol).map_err(|_| KconeError::Stalled(iterations))?;
    Ok(LpResult {
        status: LpStatus::Optimal,
        x: Some(x),
        objective_value: Some(objective_value),
        duals: Some(duals),
        farkas: None,
        iterations,
    })
}

/// Primal feasibility residual of `x` (max over rows and bounds).
pub fn primal_residual(p: &LpProblem, x: &[f64]) -> f64 {
    let mut r: f64 = 0.0;
    for (a, b) in p.eq_matrix.iter().zip(&p.eq_rhs) {
        r = r.max((crate::space::dot(a, x) - b).abs());
    }
    for (a, b) in p.ub_matrix.iter().zip(&p.ub_rhs) {
        r = r.max(crate::space::dot(a, x) - b);
    }
    for (&(lo, hi), &v) in p.bounds.iter().zip(x) {
        r = r.max(lo - v).max(v - hi);
    }
    r
}

fn rhs_norm(p: &LpProblem) -> f64 {
    let all: Vec<f64> = p.eq_rhs.iter().chain(&p.ub_rhs).copied().collect();
    norm(&all)
}

fn check_feasible(p: &LpProblem, x: &[f64], feas_tol: f64) -> Result<()> {
    let r = primal_residual(p, x);
    if r <= feas_tol * (1.0 + rhs_norm(p)) {
        Ok(())
    } else {
        Err(KconeError::Stalled(0))
    }
}

/// A hyperplane `⟨normal, z⟩ + offset` that is `≤ 0` on every point of a set
/// and `> 0` at the query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Separator {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Separator {
    pub fn eval(&self, z: &[f64]) -> f64 {
        crate::space::dot(&self.normal, z) + self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullMembership {
    pub inside: bool,
    /// Convex weights reproducing the query, when inside.
    pub coefficients: Option<Vec<f64>>,
    /// `‖Σλᵢpᵢ − q‖ + |Σλᵢ − 1|` for the returned weights (infinite if none).
    pub residual: f64,
    pub separator: Option<Separator>,
    pub iterations: usize,
}

/// Is `q` a convex combination of `points` (residual within `tol · (1 + ‖q‖)`)?
pub fn hull_membership(points: &[Point], q: &Point, tol: f64) -> Result<HullMembership> {
    if points.is_empty() {
        return Err(KconeError::Empty("hull point list"));
    }
    for p in points {
        p.check_space(&q.space)?;
    }
    let cols: Vec<&[f64]> = points.iter().map(|p| p.coords.as_slice()).collect();
    nonneg_combination(&cols, &q.coords, true, tol)
}

/// Shared LP for hull and finitely generated cone membership:
/// `Σλᵢcolᵢ = target`, `λ ≥ 0`, optionally `Σλᵢ = 1`.
pub(crate) fn nonneg_combination(cols: &[&[f64]], target: &[f64], convex: bool, tol: f64) -> Result<HullMembership> {
    let d = target.len();
    let k = cols.len();
    let mut lp = LpProblem::new(k);
    for r in 0..d {
        lp = lp.eq(cols.iter().map(|c| c[r]).collect(), target[r]);
    }
    if convex {
        lp = lp.eq(vec![1.0; k], 1.0);
    }
    let cfg = LpConfig { feas_tol: (tol * 0.1).min(1e-9), ..LpConfig::default() };
    let res = solve_with(&lp, &cfg)?;
    let scale = 1.0 + norm(target);
    match res.status {
        LpStatus::Optimal => {
            let lambda: Vec<f64> = res.x.unwrap().into_iter().map(|v| v.max(0.0)).collect();
            let mut recon = vec![0.0; d];
            for (c, l) in cols.iter().zip(&lambda) {
                for r in 0..d {
                    recon[r] += l * c[r];
                }
            }
            let diff: Vec<f64> = recon.iter().zip(target).map(|(a, b)| a - b).collect();
            let mut residual = norm(&diff);
            if convex {
                residual += (lambda.iter().sum::<f64>() - 1.0).abs();
            }
            let inside = residual <= tol * scale;
            Ok(HullMembership {
                inside,
                coefficients: inside.then_some(lambda),
                residual,
                separator: None,
                iterations: res.iterations,
            })
        }
        LpStatus::Infeasible => {
            let y = res.farkas.unwrap();
            let normal: Vec<f64> = y[..d].to_vec();
            let offset = if convex { y[d] } else { 0.0 };
            let nn = norm(&normal).max(1e-300);
            let sep = Separator { normal: normal.iter().map(|v| v / nn).collect(), offset: offset / nn };
            Ok(HullMembership {
                inside: false,
                coefficients: None,
                residual: f64::INFINITY,
                separator: Some(sep),
                iterations: res.iterations,
            })
        }
        LpStatus::Unbounded => unreachable!("feasibility LP has a zero objective"),
    }
}
