//! Dense two-phase simplex with Bland's rule.
//!
//! Solves `minimize c·x  s.t.  A x (= | <=) b,  x >= 0`. Problem sizes here
//! are tiny (tens of variables, a handful of rows), so a plain tableau with
//! freshly computed reduced costs is fast enough and easy to audit. Bland's
//! pivoting rule avoids cycling on the degenerate rows that show up when
//! right-hand sides are zero.

const PIVOT_EPS: f64 = 1e-10;
const COST_EPS: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ConstraintKind {
    Eq,
    Le,
}

#[derive(Clone, Debug)]
pub(crate) struct Constraint {
    pub coeffs: Vec<f64>,
    pub kind: ConstraintKind,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor != 0.0 {
                let pivot_row = self.rows[row].clone();
                for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations for the given cost vector. Columns for which
    /// `allowed` is false never enter the basis.
    fn optimize(&mut self, cost: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<(), ()> {
        let max_iters = 1000 + 50 * (self.rows.len() + self.cols);
        for _ in 0..max_iters {
            // Reduced costs: c_j - c_B . T[:, j]; Bland picks the lowest index.
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    if cost[b] != 0.0 {
                        rc -= cost[b] * self.rows[i][j];
                    }
                }
                if rc < -COST_EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };

            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    match leaving {
                        None => leaving = Some((i, ratio)),
                        Some((best_i, best)) => {
                            if ratio < best - 1e-12
                                || (ratio < best + 1e-12 && self.basis[i] < self.basis[best_i])
                            {
                                leaving = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return Err(());
            };
            self.pivot(row, col);
        }
        // Bland's rule cannot cycle; hitting the cap means something is
        // numerically off. Treat the current point as optimal.
        Ok(())
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &b)| cost[b] * self.rhs(i))
            .sum()
    }
}

/// Minimizes `objective . x` subject to the constraints, `x >= 0`.
pub(crate) fn minimize(objective: &[f64], constraints: &[Constraint]) -> LpOutcome {
    let n = objective.len();
    let m = constraints.len();

    // Normalize right-hand sides to be nonnegative; a negated Le row turns
    // into a >= row, which needs surplus + artificial columns.
    #[derive(Clone, Copy, PartialEq)]
    enum RowForm {
        LeSlack,
        GeSurplus,
        Eq,
    }
    let mut forms = Vec::with_capacity(m);
    let mut rows_data: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m);
    for c in constraints {
        debug_assert_eq!(c.coeffs.len(), n);
        let (coeffs, rhs, flipped) = if c.rhs < 0.0 {
            (
                c.coeffs.iter().map(|v| -v).collect::<Vec<_>>(),
                -c.rhs,
                true,
            )
        } else {
            (c.coeffs.clone(), c.rhs, false)
        };
        let form = match (c.kind, flipped) {
            (ConstraintKind::Eq, _) => RowForm::Eq,
            (ConstraintKind::Le, false) => RowForm::LeSlack,
            (ConstraintKind::Le, true) => RowForm::GeSurplus,
        };
        forms.push(form);
        rows_data.push((coeffs, rhs));
    }

    let n_slack = forms.iter().filter(|f| **f != RowForm::Eq).count();
    let n_artificial = forms.iter().filter(|f| **f != RowForm::LeSlack).count();
    let cols = n + n_slack + n_artificial;

    let mut rows = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut slack_idx = n;
    let mut art_idx = n + n_slack;
    let art_start = n + n_slack;
    for (i, (coeffs, rhs)) in rows_data.iter().enumerate() {
        rows[i][..n].copy_from_slice(coeffs);
        rows[i][cols] = *rhs;
        match forms[i] {
            RowForm::LeSlack => {
                rows[i][slack_idx] = 1.0;
                basis[i] = slack_idx;
                slack_idx += 1;
            }
            RowForm::GeSurplus => {
                rows[i][slack_idx] = -1.0;
                slack_idx += 1;
                rows[i][art_idx] = 1.0;
                basis[i] = art_idx;
                art_idx += 1;
            }
            RowForm::Eq => {
                rows[i][art_idx] = 1.0;
                basis[i] = art_idx;
                art_idx += 1;
            }
        }
    }

    let mut tab = Tableau { rows, basis, cols };

    if n_artificial > 0 {
        let phase1_cost: Vec<f64> = (0..cols)
            .map(|j| if j >= art_start { 1.0 } else { 0.0 })
            .collect();
        if tab.optimize(&phase1_cost, &|_| true).is_err() {
            return LpOutcome::Unbounded;
        }
        let scale: f64 = rows_data.iter().map(|(_, r)| r.abs()).fold(1.0, f64::max);
        if tab.objective(&phase1_cost) > 1e-8 * scale {
            return LpOutcome::Infeasible;
        }
        // Pivot leftover artificials out of the basis; rows that cannot be
        // pivoted are redundant and get dropped.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                let mut pivoted = false;
                for j in 0..art_start {
                    if tab.rows[i][j].abs() > PIVOT_EPS && !tab.basis.contains(&j) {
                        tab.pivot(i, j);
                        pivoted = true;
                        break;
                    }
                }
                if !pivoted {
                    tab.rows.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
    }

    let mut phase2_cost = vec![0.0; cols];
    phase2_cost[..n].copy_from_slice(objective);
    if tab.optimize(&phase2_cost, &|j| j < art_start).is_err() {
        return LpOutcome::Unbounded;
    }

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(i);
        }
    }
    let value = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal { x, value }
}
