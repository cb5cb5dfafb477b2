//! Dense two-phase primal simplex for linear programs over free variables.
//!
//! Solves `max c.x  s.t.  A x <= b` with `x` unrestricted in sign, via the
//! split `x = u - w`, slack variables and artificial variables for rows with
//! negative right-hand side. Bland's rule is used in both phases, so the
//! iteration always terminates.

use nalgebra::DVector;

/// Feasibility tolerance: a phase-1 residual above this value means infeasible.
pub const FEAS_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-11;

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { value: f64, point: DVector<f64> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        let inv = 1.0 / piv;
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        self.rhs[row] *= inv;
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let factor = self.rows[i][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..self.ncols {
                let delta = factor * self.rows[row][j];
                self.rows[i][j] -= delta;
            }
            self.rhs[i] -= factor * self.rhs[row];
        }
        self.basis[row] = col;
    }

    /// Runs Bland-rule simplex iterations maximizing `cost`. Returns false if
    /// the objective is unbounded.
    fn optimize(&mut self, cost: &[f64]) -> bool {
        loop {
            // reduced cost r_j = c_j - c_B . column_j
            let mut entering = None;
            for j in 0..self.ncols {
                let mut r = cost[j];
                for (i, &bi) in self.basis.iter().enumerate() {
                    if cost[bi] != 0.0 {
                        r -= cost[bi] * self.rows[i][j];
                    }
                }
                if r > FEAS_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return true };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    match leaving {
                        None => leaving = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || ((ratio - lr).abs() <= PIVOT_TOL
                                    && self.basis[i] < self.basis[li])
                            {
                                leaving = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leaving else { return false };
            self.pivot(row, col);
        }
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &j)| cost[j] * self.rhs[i])
            .sum()
    }
}

/// Maximizes `objective . x` subject to `normal_i . x <= offset_i` for every
/// constraint, with `x` free.
pub fn maximize(objective: &DVector<f64>, constraints: &[(DVector<f64>, f64)]) -> LpOutcome {
    let n = objective.len();
    let m = constraints.len();
    if m == 0 {
        return if objective.iter().all(|&c| c == 0.0) {
            LpOutcome::Optimal {
                value: 0.0,
                point: DVector::zeros(n),
            }
        } else {
            LpOutcome::Unbounded
        };
    }

    // columns: u (n) | w (n) | slacks (m) | artificials (as needed)
    let base_cols = 2 * n + m;
    let mut artificial_of_row: Vec<Option<usize>> = vec![None; m];
    let mut num_art = 0;
    for (i, (_, b)) in constraints.iter().enumerate() {
        if *b < 0.0 {
            artificial_of_row[i] = Some(base_cols + num_art);
            num_art += 1;
        }
    }
    let ncols = base_cols + num_art;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (i, (a, b)) in constraints.iter().enumerate() {
        let mut row = vec![0.0; ncols];
        let sign = if *b < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[j];
            row[n + j] = -sign * a[j];
        }
        row[2 * n + i] = sign;
        rhs.push(sign * *b);
        if let Some(art) = artificial_of_row[i] {
            row[art] = 1.0;
            basis.push(art);
        } else {
            basis.push(2 * n + i);
        }
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        rhs,
        basis,
        ncols,
    };

    if num_art > 0 {
        let mut phase1 = vec![0.0; ncols];
        for c in phase1.iter_mut().skip(base_cols) {
            *c = -1.0;
        }
        // phase-1 objective is bounded, so this cannot return false
        tab.optimize(&phase1);
        if -tab.objective(&phase1) > FEAS_TOL {
            return LpOutcome::Infeasible;
        }
        // drive remaining artificials out of the basis
        for i in 0..tab.rows.len() {
            if tab.basis[i] >= base_cols {
                if let Some(col) = (0..base_cols).find(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                    tab.pivot(i, col);
                }
            }
        }
    }

    let mut cost = vec![0.0; ncols];
    for j in 0..n {
        cost[j] = objective[j];
        cost[n + j] = -objective[j];
    }
    // artificial columns stay excluded from phase 2
    for c in cost.iter_mut().skip(base_cols) {
        *c = -1e30;
    }
    if !tab.optimize(&cost) {
        return LpOutcome::Unbounded;
    }

    let mut point = DVector::zeros(n);
    for (i, &j) in tab.basis.iter().enumerate() {
        if j < n {
            point[j] += tab.rhs[i];
        } else if j < 2 * n {
            point[j - n] -= tab.rhs[i];
        }
    }
    LpOutcome::Optimal {
        value: tab.objective(&cost),
        point,
    }
}

/// Decides feasibility of `normal_i . x <= offset_i`.
pub fn is_feasible(dim: usize, constraints: &[(DVector<f64>, f64)]) -> bool {
    !matches!(
        maximize(&DVector::zeros(dim), constraints),
        LpOutcome::Infeasible
    )
}
