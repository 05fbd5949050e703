//! Dense two-phase tableau simplex.
//!
//! Every standard-form row receives an artificial column. Those columns
//! start as the identity, so at any point they hold `B⁻¹`, and the reduced
//! costs of the artificials give the simplex multipliers directly: dual
//! values after phase II, a Farkas ray after an infeasible phase I.

use crate::error::{KconeError, Result};

pub(crate) struct Tableau {
    m: usize,
    /// Structural columns (everything except artificials).
    n: usize,
    /// Row-major, `m + 1` rows (last row is reduced cost), `n + m + 1` columns (last is rhs).
    t: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

pub(crate) enum Phase {
    Optimal,
    Unbounded,
}

pub(crate) struct Pivoting {
    pub pivot_tol: f64,
    pub max_iter: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule
    /// for the rest of the phase.
    pub degenerate_limit: usize,
}

impl Tableau {
    /// `a` is `m × n` row-major, `b ≥ 0` (caller flips rows).
    pub fn new(a: &[Vec<f64>], b: &[f64], n: usize) -> Self {
        let m = a.len();
        let width = n + m + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for i in 0..m {
            let row = &mut t[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&a[i]);
            row[n + i] = 1.0;
            row[width - 1] = b[i];
        }
        Tableau { m, n, t, basis: (n..n + m).collect(), width }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    pub fn reduced_cost(&self, j: usize) -> f64 {
        self.at(self.m, j)
    }

    pub fn objective_row_rhs(&self) -> f64 {
        self.at(self.m, self.width - 1)
    }

    pub fn artificial(&self, i: usize) -> usize {
        self.n + i
    }

    /// Rebuilds the reduced-cost row for `cost` (length `n + m`).
    pub fn price(&mut self, cost: &[f64]) {
        let w = self.width;
        let m = self.m;
        let mut z = vec![0.0; w];
        z[..w - 1].copy_from_slice(cost);
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (zj, tj) in z.iter_mut().zip(&self.t[i * w..(i + 1) * w]) {
                    *zj -= cb * tj;
                }
            }
        }
        self.t[m * w..(m + 1) * w].copy_from_slice(&z);
    }

    pub fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + c] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        self.basis[r] = c;
    }

    /// Minimizes the priced objective over columns flagged in `allowed`.
    /// Returns the phase outcome and the number of pivots.
    pub fn optimize(&mut self, allowed: &[bool], opt_tol: f64, cfg: &Pivoting) -> Result<(Phase, usize)> {
        let mut iters = 0usize;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            bland |= degenerate >= cfg.degenerate_limit;
            let mut enter = None;
            let mut best = -opt_tol;
            for (j, ok) in allowed.iter().enumerate() {
                if !ok {
                    continue;
                }
                let r = self.reduced_cost(j);
                if bland {
                    if r < -opt_tol {
                        enter = Some(j);
                        break;
                    }
                } else if r < best {
                    best = r;
                    enter = Some(j);
                }
            }
            let Some(c) = enter else {
                return Ok((Phase::Optimal, iters));
            };
            // Ratio test; ties go to the smallest basic index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > cfg.pivot_tol {
                    let ratio = self.rhs(i).max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if (ratio < lr && !tie) || (tie && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok((Phase::Unbounded, iters));
            };
            if ratio <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
            self.snap_rhs(1e-13);
            iters += 1;
            if iters > cfg.max_iter {
                return Err(KconeError::Stalled(iters));
            }
        }
    }

    fn snap_rhs(&mut self, eps: f64) {
        let w = self.width;
        for i in 0..self.m {
            let v = &mut self.t[i * w + w - 1];
            if v.abs() < eps {
                *v = 0.0;
            }
        }
    }

    /// Pivots basic artificials (at zero level) out where some allowed
    /// structural column has a usable entry.
    pub fn expel_artificials(&mut self, pivot_tol: f64) {
        for i in 0..self.m {
            if self.basis[i] >= self.n {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..self.n {
                    let a = self.at(i, j).abs();
                    if a > pivot_tol && best.is_none_or(|(_, b)| a > b) {
                        best = Some((j, a));
                    }
                }
                if let Some((j, _)) = best {
                    self.pivot(i, j);
                }
            }
        }
    }

    pub fn solution(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n + self.m];
        for (i, &bj) in self.basis.iter().enumerate() {
            x[bj] = self.rhs(i);
        }
        x
    }
}
