//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min c'x` subject to `Ax = b`, `x >= 0` on dense tableaus. The
//! sizes in this crate stay small (transport polytopes over a few hundred
//! variables, moment-matching systems with tens of rows), so a tableau
//! simplex with Dantzig pricing, a Bland fallback against cycling, and a
//! fresh LU re-solve of the final basis is accurate and fast enough.
//!
//! [`transport_lp`] solves the optimal-transport program over the full
//! coupling polytope of two discrete measures. The quantile-based
//! Wasserstein routine in [`crate::distances`] never calls it; it exists as
//! an independent reference implementation for cross-checks.

use crate::measures::DiscreteMeasure;
use crate::{Error, Result};

/// Reduced costs and pivots below this magnitude are treated as zero.
const PIVOT_TOL: f64 = 1e-10;

/// Phase-1 objective above this is reported as infeasible.
const FEAS_TOL: f64 = 1e-9;

/// `min objective . x` over `constraints . x = rhs`, `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub objective: Vec<f64>,
}

/// A basic optimal (or feasible) point.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// Pivots between exact tableau refreshes; see [`Tableau::reinvert`].
const REINVERT_EVERY: usize = 20;

struct Tableau {
    rows: usize,
    cols: usize, // real columns; artificials live at cols..cols+rows
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    // Sign-flipped copies of the original system, kept so the tableau can be
    // recomputed exactly for the current basis instead of trusting pivot
    // arithmetic compounded over hundreds of iterations.
    data: Vec<Vec<f64>>,
    rhs0: Vec<f64>,
}

impl Tableau {
    fn new(a: &[Vec<f64>], b: &[f64]) -> Self {
        let rows = a.len();
        let cols = a[0].len();
        let width = cols + rows + 1;
        let mut t = Vec::with_capacity(rows);
        let mut data = Vec::with_capacity(rows);
        let mut rhs0 = Vec::with_capacity(rows);
        for (i, row) in a.iter().enumerate() {
            let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut r = vec![0.0; width];
            for (j, &v) in row.iter().enumerate() {
                r[j] = flip * v;
            }
            r[cols + i] = 1.0;
            r[width - 1] = flip * b[i];
            data.push(r[..cols].to_vec());
            rhs0.push(r[width - 1]);
            t.push(r);
        }
        let basis = (cols..cols + rows).collect();
        Tableau {
            rows,
            cols,
            t,
            basis,
            data,
            rhs0,
        }
    }

    /// Recomputes the tableau for the current basis directly from the stored
    /// system: Gauss-Jordan reduction of `[B | A I b]` turns the left block
    /// into the identity and the right block into `B^-1 [A I b]`, which is
    /// the exact tableau. Long pivot chains otherwise accumulate enough
    /// roundoff for basic variables to end visibly negative. Returns false
    /// (leaving the tableau untouched) if the basis matrix is numerically
    /// singular.
    fn reinvert(&mut self) -> bool {
        let m = self.rows;
        let width = self.t[0].len();
        let mut aug = vec![vec![0.0; m + width]; m];
        for i in 0..m {
            for (k, &bcol) in self.basis.iter().enumerate() {
                aug[i][k] = if bcol < self.cols {
                    self.data[i][bcol]
                } else if i == bcol - self.cols {
                    1.0
                } else {
                    0.0
                };
            }
            aug[i][m..m + self.cols].copy_from_slice(&self.data[i]);
            aug[i][m + self.cols + i] = 1.0;
            aug[i][m + width - 1] = self.rhs0[i];
        }
        for k in 0..m {
            let pivot_row = (k..m)
                .max_by(|&r, &s| aug[r][k].abs().total_cmp(&aug[s][k].abs()))
                .unwrap();
            if aug[pivot_row][k].abs() < 1e-13 {
                return false;
            }
            aug.swap(k, pivot_row);
            let piv = aug[k][k];
            for v in &mut aug[k] {
                *v /= piv;
            }
            for i in 0..m {
                if i == k {
                    continue;
                }
                let factor = aug[i][k];
                if factor == 0.0 {
                    continue;
                }
                for j in k..m + width {
                    let upd = aug[k][j];
                    aug[i][j] -= factor * upd;
                }
            }
        }
        for i in 0..m {
            self.t[i].copy_from_slice(&aug[i][m..]);
            // Drift below feasibility tolerance is noise; clamp it so the
            // ratio test never sees a spurious negative level.
            let rhs = &mut self.t[i][width - 1];
            if *rhs < 0.0 && *rhs > -FEAS_TOL {
                *rhs = 0.0;
            }
        }
        true
    }

    /// Reduced-cost row `c - c_B B^-1 A` for the current tableau.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let width = self.t[0].len();
        let mut red = vec![0.0; width];
        red[..cost.len()].copy_from_slice(cost);
        for (i, &bcol) in self.basis.iter().enumerate() {
            let cb = if bcol < cost.len() { cost[bcol] } else { 0.0 };
            if cb == 0.0 {
                continue;
            }
            for j in 0..width {
                red[j] -= cb * self.t[i][j];
            }
        }
        red
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.t[0].len();
        let piv = self.t[row][col];
        for v in &mut self.t[row] {
            *v /= piv;
        }
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let factor = self.t[i][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..width {
                let upd = self.t[row][j];
                self.t[i][j] -= factor * upd;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex for the given per-column costs over columns `0..limit`.
    /// Returns iterations used, or an error on iteration blowout.
    fn optimize(&mut self, cost: &[f64], limit: usize) -> Result<usize> {
        let width = self.t[0].len();
        // Reduced-cost row: c_j - c_B' B^{-1} A_j, maintained explicitly.
        let mut red = self.reduced_costs(cost);

        let max_iters = 400 * (self.rows + limit);
        let bland_after = 30 * (self.rows + limit);
        let mut iters = 0usize;
        let mut since_reinvert = 0usize;
        // Columns found to offer no trustworthy pivot in the current scan.
        let mut skip = vec![false; limit];
        loop {
            for s in &mut skip {
                *s = false;
            }
            // Price an entering column, then run the ratio test; a column
            // whose positive entries are all noise-level (its only pivots
            // would divide by roundoff and wreck the rhs column) is skipped
            // and the next candidate priced instead.
            let mut chosen: Option<(usize, usize)> = None;
            loop {
                // Entering: Dantzig first, Bland once degeneracy drags on.
                let mut enter = None;
                if iters < bland_after {
                    let mut best = -PIVOT_TOL;
                    for (j, &rc) in red.iter().enumerate().take(limit) {
                        if !skip[j] && rc < best {
                            best = rc;
                            enter = Some(j);
                        }
                    }
                } else {
                    for (j, &rc) in red.iter().enumerate().take(limit) {
                        if !skip[j] && rc < -PIVOT_TOL {
                            enter = Some(j);
                            break;
                        }
                    }
                }
                let Some(col) = enter else {
                    break;
                };

                let mut col_abs = 0.0f64;
                let mut col_pos = f64::NEG_INFINITY;
                for i in 0..self.rows {
                    let v = self.t[i][col];
                    col_abs = col_abs.max(v.abs());
                    col_pos = col_pos.max(v);
                }
                if col_pos <= PIVOT_TOL {
                    if col_abs <= PIVOT_TOL {
                        // Zero column; its reduced cost was noise.
                        skip[col] = true;
                        continue;
                    }
                    return Err(Error::Linprog("unbounded program".into()));
                }
                // Acceptable pivots must stand clear of the column's own
                // scale, not just of an absolute floor.
                let accept = PIVOT_TOL.max(1e-7 * col_abs);

                // Ratio test. Under Dantzig pricing use a Harris-style
                // two-pass rule: find the relaxed minimum ratio, then among
                // rows within that bound pivot on the largest entry. Under
                // Bland pricing use the exact minimum ratio with the
                // smallest-basis-column tie break, which is what the
                // anti-cycling guarantee needs.
                let mut leave: Option<usize> = None;
                if iters < bland_after {
                    let mut theta_max = f64::INFINITY;
                    for i in 0..self.rows {
                        let aij = self.t[i][col];
                        if aij > accept {
                            let rhs = self.t[i][width - 1].max(0.0);
                            theta_max = theta_max.min((rhs + FEAS_TOL) / aij);
                        }
                    }
                    let mut best_pivot = 0.0;
                    for i in 0..self.rows {
                        let aij = self.t[i][col];
                        if aij > accept && aij > best_pivot {
                            let rhs = self.t[i][width - 1].max(0.0);
                            if rhs / aij <= theta_max {
                                best_pivot = aij;
                                leave = Some(i);
                            }
                        }
                    }
                } else {
                    let mut best: Option<(usize, f64)> = None;
                    for i in 0..self.rows {
                        let aij = self.t[i][col];
                        if aij > accept {
                            let ratio = self.t[i][width - 1].max(0.0) / aij;
                            let better = match best {
                                None => true,
                                Some((li, lr)) => {
                                    ratio < lr - 1e-12
                                        || (ratio < lr + 1e-12 && self.basis[i] < self.basis[li])
                                }
                            };
                            if better {
                                best = Some((i, ratio));
                            }
                        }
                    }
                    leave = best.map(|(i, _)| i);
                }
                match leave {
                    Some(row) => {
                        chosen = Some((row, col));
                        break;
                    }
                    None => {
                        skip[col] = true;
                    }
                }
            }
            let Some((row, col)) = chosen else {
                // Confirm optimality on an exactly recomputed tableau; drift
                // can both hide and fabricate negative reduced costs.
                if since_reinvert == 0 || !self.reinvert() {
                    return Ok(iters);
                }
                red = self.reduced_costs(cost);
                since_reinvert = 0;
                continue;
            };

            self.pivot(row, col);
            // Update the reduced-cost row against the pivoted row.
            let factor = red[col];
            if factor != 0.0 {
                for j in 0..width {
                    red[j] -= factor * self.t[row][j];
                }
            }
            iters += 1;
            since_reinvert += 1;
            if since_reinvert >= REINVERT_EVERY {
                if self.reinvert() {
                    red = self.reduced_costs(cost);
                }
                since_reinvert = 0;
            }
            if iters > max_iters {
                return Err(Error::Linprog(format!("no convergence in {max_iters} pivots")));
            }
        }
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        let width = self.t[0].len();
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &col)| {
                if col < cost.len() {
                    cost[col] * self.t[i][width - 1]
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Pivot basic artificials onto real columns where possible; rows that
    /// cannot be cleared are redundant and left with a zero-level artificial.
    fn drive_out_artificials(&mut self) {
        let width = self.t[0].len();
        for i in 0..self.rows {
            if self.basis[i] < self.cols {
                continue;
            }
            // The artificial sits at numerically-zero level (phase 1 left it
            // within the feasibility tolerance). Pin it to exactly zero
            // before pivoting: otherwise the pivot divides that residual
            // level by the pivot entry and smears the quotient across every
            // other row's basic value, which for a small pivot turns noise
            // into a visibly infeasible point. With a zero level the other
            // rows' values are untouched by construction.
            self.t[i][width - 1] = 0.0;
            let col = (0..self.cols)
                .max_by(|&p, &q| self.t[i][p].abs().total_cmp(&self.t[i][q].abs()));
            if let Some(col) = col {
                if self.t[i][col].abs() > 1e-7 {
                    self.pivot(i, col);
                }
            }
        }
    }

    /// Extracts the solution. The tableau's own values are feasible up to
    /// accumulated pivot roundoff; re-solving the final basis system from
    /// the original data sheds that accumulation, but can itself go wrong
    /// when the basis matrix is ill conditioned. Both candidates are scored
    /// by their true constraint residual and the better one wins.
    fn extract(&self, a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let width = self.t[0].len();
        let m = self.rows;

        let mut tableau_x = vec![0.0; self.cols];
        for (i, &col) in self.basis.iter().enumerate() {
            if col < self.cols {
                tableau_x[col] = self.t[i][width - 1];
            }
        }

        // Basis matrix columns from the original A (identity for artificials).
        let mut bm = vec![vec![0.0; m]; m];
        for (i, &col) in self.basis.iter().enumerate() {
            for r in 0..m {
                bm[r][i] = if col < self.cols {
                    a[r][col]
                } else if r == col - self.cols {
                    1.0
                } else {
                    0.0
                };
            }
        }
        let resolved_x = lu_solve(bm, b.to_vec()).map(|vals| {
            let mut x = vec![0.0; self.cols];
            for (i, &col) in self.basis.iter().enumerate() {
                if col < self.cols {
                    x[col] = vals[i];
                }
            }
            x
        });

        // Worst constraint violation, with meaningful negativity disqualifying.
        let score = |x: &[f64]| -> f64 {
            if x.iter().any(|&v| v < -1e-9) {
                return f64::INFINITY;
            }
            let mut worst = 0.0f64;
            for (row, &target) in a.iter().zip(b) {
                let lhs: f64 = row.iter().zip(x).map(|(c, v)| c * v).sum();
                worst = worst.max((lhs - target).abs());
            }
            worst
        };

        let mut x = match resolved_x {
            Some(rx) if score(&rx) < score(&tableau_x) => rx,
            _ => tableau_x,
        };
        // Clip roundoff-level negatives.
        for v in &mut x {
            if *v < 0.0 && *v > -1e-9 {
                *v = 0.0;
            }
        }
        x
    }
}

/// Solves the linear program to optimality.
pub fn solve(lp: &LinearProgram) -> Result<Solution> {
    validate(&lp.constraints, &lp.rhs)?;
    if lp.objective.len() != lp.constraints[0].len() {
        return Err(Error::Linprog("objective length mismatch".into()));
    }
    let mut tab = Tableau::new(&lp.constraints, &lp.rhs);
    let n = tab.cols;
    let m = tab.rows;

    let mut phase1 = vec![0.0; n + m];
    for c in phase1.iter_mut().skip(n) {
        *c = 1.0;
    }
    let it1 = tab.optimize(&phase1, n + m)?;
    let infeas = tab.objective_value(&phase1);
    if infeas > FEAS_TOL {
        return Err(Error::Linprog(format!("infeasible: phase-1 objective {infeas:.3e}")));
    }
    tab.drive_out_artificials();

    let it2 = tab.optimize(&lp.objective, n)?;
    let x = tab.extract(&lp.constraints, &lp.rhs);
    check_nonnegative(&x)?;
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(Solution {
        x,
        objective,
        iterations: it1 + it2,
    })
}

/// Finds a basic feasible point of `Ax = b, x >= 0` (phase 1 only). The
/// result has at most `rank(A)` nonzero coordinates.
pub fn feasible_basic_point(constraints: &[Vec<f64>], rhs: &[f64]) -> Result<Solution> {
    validate(constraints, rhs)?;
    let mut tab = Tableau::new(constraints, rhs);
    let n = tab.cols;
    let m = tab.rows;
    let mut phase1 = vec![0.0; n + m];
    for c in phase1.iter_mut().skip(n) {
        *c = 1.0;
    }
    let iters = tab.optimize(&phase1, n + m)?;
    let infeas = tab.objective_value(&phase1);
    if infeas > FEAS_TOL {
        return Err(Error::Linprog(format!("infeasible: phase-1 objective {infeas:.3e}")));
    }
    tab.drive_out_artificials();
    let x = tab.extract(constraints, rhs);
    check_nonnegative(&x)?;
    Ok(Solution {
        x,
        objective: 0.0,
        iterations: iters,
    })
}

/// Rejects solutions that terminated with a meaningfully negative component;
/// such a point is not feasible and silently clipping it would corrupt the
/// remaining mass. Callers treat the error as "retry with different data".
fn check_nonnegative(x: &[f64]) -> Result<()> {
    let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-9 {
        return Err(Error::Linprog(format!(
            "basic solution has negative component {min:.3e}"
        )));
    }
    Ok(())
}

fn validate(a: &[Vec<f64>], b: &[f64]) -> Result<()> {
    if a.is_empty() || a[0].is_empty() {
        return Err(Error::Linprog("empty program".into()));
    }
    if a.len() != b.len() {
        return Err(Error::Linprog("constraint/rhs length mismatch".into()));
    }
    let n = a[0].len();
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::Linprog("ragged constraint matrix".into()));
    }
    if a.iter().flatten().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Linprog("non-finite coefficient".into()));
    }
    Ok(())
}

/// Dense LU solve with partial pivoting; `None` when the matrix is singular
/// to working precision.
pub fn lu_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    if n == 0 || a.iter().any(|r| r.len() != n) || b.len() != n {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                let upd = a[col][k];
                a[row][k] -= factor * upd;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Optimal-transport cost between two discrete measures with ground cost
/// `|x - y|^k`, solved as a linear program over the full coupling polytope.
/// Returns `W_k` (the k-th root of the optimal cost).
pub fn transport_lp(g: &DiscreteMeasure, gp: &DiscreteMeasure, k: f64) -> Result<f64> {
    if k < 1.0 {
        return Err(Error::invalid(format!("transport order {k} below 1")));
    }
    let m = g.atom_count();
    let n = gp.atom_count();
    let vars = m * n;
    let mut constraints = vec![vec![0.0; vars]; m + n];
    let mut rhs = vec![0.0; m + n];
    for i in 0..m {
        for j in 0..n {
            constraints[i][i * n + j] = 1.0;
        }
        rhs[i] = g.weights()[i];
    }
    for j in 0..n {
        for i in 0..m {
            constraints[m + j][i * n + j] = 1.0;
        }
        rhs[m + j] = gp.weights()[j];
    }
    let mut objective = vec![0.0; vars];
    for i in 0..m {
        for j in 0..n {
            objective[i * n + j] = (g.atoms()[i] - gp.atoms()[j]).abs().powf(k);
        }
    }
    let sol = solve(&LinearProgram {
        constraints,
        rhs,
        objective,
    })?;
    Ok(sol.objective.max(0.0).powf(1.0 / k))
}
