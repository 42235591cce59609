//! Dense two-phase primal simplex for small linear programs, with dual
//! values recovered from the final tableau. Bland's rule throughout, so
//! degenerate problems terminate.

use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    /// Sparse (variable, coefficient) pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// maximize objective . x  subject to the constraints and x >= 0.
#[derive(Debug, Clone)]
pub struct Problem {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub objective: f64,
    pub x: Vec<f64>,
    /// One dual value per constraint, in input order, signed with respect to
    /// the constraint as written (>= 0 for binding Le, <= 0 for binding Ge).
    pub duals: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum SimplexError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("malformed problem: {0}")]
    Malformed(String),
}

struct Tableau {
    rows: usize,
    cols: usize, // total columns incl. rhs
    a: Vec<f64>,
    obj: Vec<f64>, // reduced costs c_j - z_j, last entry carries -objective
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let stride = self.cols;
        let pivot = self.a[row * stride + col];
        for c in 0..stride {
            self.a[row * stride + c] /= pivot;
        }
        for r in 0..self.rows {
            if r == row {
                continue;
            }
            let factor = self.a[r * stride + col];
            if factor != 0.0 {
                for c in 0..stride {
                    self.a[r * stride + c] -= factor * self.a[row * stride + c];
                }
            }
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for c in 0..stride {
                self.obj[c] -= factor * self.a[row * stride + c];
            }
        }
        self.basis[row] = col;
    }

    /// Rebuilds the reduced-cost row for the cost vector `c` (length cols-1)
    /// under the current basis.
    fn rebuild_objective(&mut self, c: &[f64]) {
        self.obj[..self.cols - 1].copy_from_slice(c);
        self.obj[self.cols - 1] = 0.0;
        for r in 0..self.rows {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                for j in 0..self.cols {
                    self.obj[j] -= cb * self.at(r, j);
                }
            }
        }
    }

    /// Bland's rule iteration until optimal or unbounded. `allowed` masks
    /// columns permitted to enter.
    fn optimize(&mut self, allowed: &[bool]) -> Result<(), SimplexError> {
        loop {
            let mut entering = None;
            for j in 0..self.cols - 1 {
                if allowed[j] && self.obj[j] > EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else { return Ok(()) };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let coef = self.at(r, col);
                if coef > EPS {
                    let ratio = self.at(r, self.cols - 1) / coef;
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - 1e-12
                                || ((ratio - lratio).abs() <= 1e-12 && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else { return Err(SimplexError::Unbounded) };
            self.pivot(row, col);
        }
    }
}

pub fn solve(problem: &Problem) -> Result<Solution, SimplexError> {
    let n = problem.num_vars;
    if problem.objective.len() != n {
        return Err(SimplexError::Malformed("objective length != num_vars".into()));
    }
    let m = problem.constraints.len();

    // Normalize every rhs to be nonnegative, remembering sign flips.
    let mut flipped = vec![false; m];
    let mut relations = Vec::with_capacity(m);
    for (i, cons) in problem.constraints.iter().enumerate() {
        for &(var, coef) in &cons.coeffs {
            if var >= n {
                return Err(SimplexError::Malformed(format!("variable {var} out of range")));
            }
            if !coef.is_finite() {
                return Err(SimplexError::Malformed("non-finite coefficient".into()));
            }
        }
        let mut rel = cons.relation;
        if cons.rhs < 0.0 {
            flipped[i] = true;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        relations.push(rel);
    }

    // Column layout: structural | per-row slack/surplus | per-row artificial.
    let mut slack_col = vec![usize::MAX; m];
    let mut artificial_col = vec![usize::MAX; m];
    let mut next = n;
    for i in 0..m {
        match relations[i] {
            Relation::Le | Relation::Ge => {
                slack_col[i] = next;
                next += 1;
            }
            Relation::Eq => {}
        }
    }
    let artificial_start = next;
    for i in 0..m {
        let needs_artificial = matches!(relations[i], Relation::Ge | Relation::Eq);
        if needs_artificial {
            artificial_col[i] = next;
            next += 1;
        }
    }
    let total = next;
    let cols = total + 1;

    let mut tab = Tableau {
        rows: m,
        cols,
        a: vec![0.0; m * cols],
        obj: vec![0.0; cols],
        basis: vec![0; m],
    };

    for (i, cons) in problem.constraints.iter().enumerate() {
        let sign = if flipped[i] { -1.0 } else { 1.0 };
        for &(var, coef) in &cons.coeffs {
            tab.a[i * cols + var] += sign * coef;
        }
        tab.a[i * cols + total] = sign * cons.rhs;
        match relations[i] {
            Relation::Le => {
                tab.a[i * cols + slack_col[i]] = 1.0;
                tab.basis[i] = slack_col[i];
            }
            Relation::Ge => {
                tab.a[i * cols + slack_col[i]] = -1.0;
                tab.a[i * cols + artificial_col[i]] = 1.0;
                tab.basis[i] = artificial_col[i];
            }
            Relation::Eq => {
                tab.a[i * cols + artificial_col[i]] = 1.0;
                tab.basis[i] = artificial_col[i];
            }
        }
    }

    let has_artificials = (artificial_start..total).count() > 0;
    if has_artificials {
        // Phase 1: maximize -sum(artificials).
        let mut c1 = vec![0.0; total];
        for j in artificial_start..total {
            c1[j] = -1.0;
        }
        tab.rebuild_objective(&c1);
        let allowed: Vec<bool> = (0..total).map(|_| true).collect();
        tab.optimize(&allowed)?;
        let phase1 = -tab.obj[cols - 1];
        if phase1 < -1e-7 {
            return Err(SimplexError::Infeasible);
        }
        // Drive basic artificials out where possible; rows where it is not
        // possible are redundant and stay inert.
        for r in 0..m {
            if tab.basis[r] >= artificial_start {
                let col = (0..artificial_start).find(|&j| tab.at(r, j).abs() > EPS);
                if let Some(col) = col {
                    tab.pivot(r, col);
                }
            }
        }
    }

    // Phase 2 over the original objective; artificials are barred.
    let mut c2 = vec![0.0; total];
    c2[..n].copy_from_slice(&problem.objective);
    tab.rebuild_objective(&c2);
    let allowed: Vec<bool> = (0..total).map(|j| j < artificial_start).collect();
    tab.optimize(&allowed)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            x[tab.basis[r]] = tab.at(r, cols - 1);
        }
    }
    let objective = -tab.obj[cols - 1];

    // Duals from the reduced costs of each row's auxiliary column:
    // slack (A = +e_r): rc = -y_r; surplus (A = -e_r): rc = +y_r;
    // artificial (A = +e_r, zero cost): rc = -y_r.
    let mut duals = vec![0.0; m];
    for i in 0..m {
        let y = match relations[i] {
            Relation::Le => -tab.obj[slack_col[i]],
            Relation::Ge => tab.obj[slack_col[i]],
            Relation::Eq => -tab.obj[artificial_col[i]],
        };
        duals[i] = if flipped[i] { -y } else { y };
    }

    Ok(Solution { objective, x, duals })
}
