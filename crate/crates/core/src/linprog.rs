//! Dense two-phase simplex for the small linear programs behind optimal
//! transport and curvature.
//!
//! Problems are stated over bounded or free variables with `<=`, `=` and `>=`
//! rows. They are rewritten into standard form (nonnegative columns, equality
//! rows with slacks and artificials) and solved on a dense tableau. Pivoting
//! follows Bland's rule in both phases, so the result is deterministic for a
//! given input and the method cannot cycle.

use thiserror::Error;

/// Reduced-cost tolerance used for the optimality test.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Smallest admissible pivot magnitude.
pub const PIVOT_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite data in {0}")]
    NonFinite(&'static str),
    #[error("variable {0} has lower bound above upper bound")]
    EmptyBounds(usize),
    #[error("simplex exceeded {0} iterations")]
    IterationLimitExceeded(usize),
    #[error("pivot magnitude {0:e} fell below the floor")]
    NumericBreakdown(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Per-variable bounds; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Bounds {
    pub const NONNEGATIVE: Bounds = Bounds {
        lower: Some(0.0),
        upper: None,
    };
    pub const NONPOSITIVE: Bounds = Bounds {
        lower: None,
        upper: Some(0.0),
    };
    pub const FREE: Bounds = Bounds {
        lower: None,
        upper: None,
    };

    pub fn fixed(value: f64) -> Self {
        Bounds {
            lower: Some(value),
            upper: Some(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bounds>,
}

impl LpProblem {
    /// New problem with every variable nonnegative and no constraints.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![Bounds::NONNEGATIVE; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_bounds(&mut self, var: usize, bounds: Bounds) -> &mut Self {
        self.bounds[var] = bounds;
        self
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    /// Adds a row given as sparse `(variable, coefficient)` pairs.
    pub fn constrain_sparse(
        &mut self,
        terms: &[(usize, f64)],
        relation: Relation,
        rhs: f64,
    ) -> &mut Self {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.constrain(coeffs, relation, rhs)
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        if self.bounds.len() != n {
            return Err(LpError::DimensionMismatch {
                row: usize::MAX,
                expected: n,
                found: self.bounds.len(),
            });
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower.is_some_and(f64::is_nan) || b.upper.is_some_and(f64::is_nan) {
                return Err(LpError::NonFinite("bounds"));
            }
            if let (Some(l), Some(u)) = (b.lower, b.upper) {
                if l > u {
                    return Err(LpError::EmptyBounds(j));
                }
            }
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::DimensionMismatch {
                    row,
                    expected: n,
                    found: c.coeffs.len(),
                });
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite("constraint"));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound by `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (b, &v) in self.bounds.iter().zip(x) {
            if let Some(l) = b.lower {
                worst = worst.max(l - v);
            }
            if let Some(u) = b.upper {
                worst = worst.max(v - u);
            }
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value at `assignment`; NaN unless optimal.
    pub value: f64,
    pub assignment: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_optimum(status: LpStatus, n: usize) -> Self {
        LpSolution {
            status,
            value: f64::NAN,
            assignment: vec![f64::NAN; n],
        }
    }
}

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    Fixed(f64),
    /// x = offset + col
    Shifted {
        col: usize,
        offset: f64,
    },
    /// x = offset - col
    Negated {
        col: usize,
        offset: f64,
    },
    /// x = pos - neg
    Split {
        pos: usize,
        neg: usize,
    },
}

impl VarMap {
    fn value(&self, cols: &[f64]) -> f64 {
        match *self {
            VarMap::Fixed(v) => v,
            VarMap::Shifted { col, offset } => offset + cols[col],
            VarMap::Negated { col, offset } => offset - cols[col],
            VarMap::Split { pos, neg } => cols[pos] - cols[neg],
        }
    }
}

struct Tableau {
    /// rows x (cols + 1); the last column holds the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    iterations: usize,
    max_iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.a[i][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<(), LpError> {
        let p = self.a[row][col];
        if !(p.abs() >= PIVOT_FLOOR) {
            return Err(LpError::NumericBreakdown(p.abs()));
        }
        let inv = 1.0 / p;
        for v in self.a[row].iter_mut() {
            *v *= inv;
        }
        self.a[row][col] = 1.0;
        let pivot_row = self.a[row].clone();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor == 0.0 {
                continue;
            }
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            r[col] = 0.0;
        }
        self.basis[row] = col;
        Ok(())
    }

    /// Minimizes `cost` over the current tableau, never entering columns
    /// flagged in `blocked`.
    fn optimize(&mut self, cost: &[f64], blocked: &[bool]) -> Result<PhaseOutcome, LpError> {
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimitExceeded(self.max_iterations));
            }
            // Bland: lowest-index column with negative reduced cost.
            let entering = (0..self.cols).find(|&j| {
                if blocked[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced = cost[j]
                    - self
                        .a
                        .iter()
                        .zip(&self.basis)
                        .map(|(r, &b)| cost[b] * r[j])
                        .sum::<f64>();
                reduced < -OPTIMALITY_TOL
            });
            let Some(q) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };

            // Ratio test; ties go to the smallest basic variable index.
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.a.len() {
                let aiq = self.a[i][q];
                if aiq <= PIVOT_FLOOR {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / aiq;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - PIVOT_FLOOR
                            || ((ratio - best).abs() <= PIVOT_FLOOR
                                && self.basis[i] < self.basis[r])
                        {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((row, _)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };
            self.pivot(row, q)?;
            self.iterations += 1;
        }
    }
}

/// Solves `problem` to optimality, or reports infeasibility/unboundedness.
pub fn solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let n = problem.num_vars();

    // Map original variables onto nonnegative columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new(); // col <= ub
    for b in &problem.bounds {
        let map = match (b.lower, b.upper) {
            (Some(l), Some(u)) if l == u => VarMap::Fixed(l),
            (Some(l), upper) if l.is_finite() => {
                let col = ncols;
                ncols += 1;
                if let Some(u) = upper.filter(|u| u.is_finite()) {
                    extra_rows.push((col, u - l));
                }
                VarMap::Shifted { col, offset: l }
            }
            (_, Some(u)) if u.is_finite() => {
                let col = ncols;
                ncols += 1;
                VarMap::Negated { col, offset: u }
            }
            _ => {
                let pos = ncols;
                ncols += 2;
                VarMap::Split { pos, neg: pos + 1 }
            }
        };
        maps.push(map);
    }

    // Standard-form rows: (coeffs over columns, relation, rhs).
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &problem.constraints {
        let mut coeffs = vec![0.0; ncols];
        let mut rhs = c.rhs;
        for (a, map) in c.coeffs.iter().zip(&maps) {
            if *a == 0.0 {
                continue;
            }
            match *map {
                VarMap::Fixed(v) => rhs -= a * v,
                VarMap::Shifted { col, offset } => {
                    coeffs[col] += a;
                    rhs -= a * offset;
                }
                VarMap::Negated { col, offset } => {
                    coeffs[col] -= a;
                    rhs -= a * offset;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    for &(col, ub) in &extra_rows {
        let mut coeffs = vec![0.0; ncols];
        coeffs[col] = 1.0;
        rows.push((coeffs, Relation::Le, ub));
    }
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|a| *a = -*a);
            row.2 = -row.2;
            row.1 = match row.1 {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let total = ncols + n_slack + n_art;
    let art_start = ncols + n_slack;

    let mut a = vec![vec![0.0; total + 1]; m];
    let mut basis = vec![0usize; m];
    let (mut next_slack, mut next_art) = (ncols, art_start);
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        a[i][..ncols].copy_from_slice(coeffs);
        a[i][total] = *rhs;
        match rel {
            Relation::Le => {
                a[i][next_slack] = 1.0;
                basis[i] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                a[i][next_slack] = -1.0;
                next_slack += 1;
                a[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                a[i][next_art] = 1.0;
                basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    let mut tab = Tableau {
        a,
        basis,
        cols: total,
        iterations: 0,
        max_iterations: 50 * (m + total).max(100),
    };

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let mut cost = vec![0.0; total];
        cost[art_start..].iter_mut().for_each(|c| *c = 1.0);
        let blocked = vec![false; total];
        tab.optimize(&cost, &blocked)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= art_start)
            .map(|(i, _)| tab.rhs(i))
            .sum();
        let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
        if infeasibility > OPTIMALITY_TOL * scale {
            return Ok(LpSolution::without_optimum(LpStatus::Infeasible, n));
        }
        // Drive remaining (zero-level) artificials out, dropping redundant rows.
        let mut i = 0;
        while i < tab.a.len() {
            if tab.basis[i] >= art_start {
                let col = (0..art_start).find(|&j| tab.a[i][j].abs() > OPTIMALITY_TOL);
                match col {
                    Some(j) => {
                        tab.pivot(i, j)?;
                        i += 1;
                    }
                    None => {
                        tab.a.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase 2 on the standard-form objective.
    let sign = match problem.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; total];
    for (c, map) in problem.objective.iter().zip(&maps) {
        match *map {
            VarMap::Fixed(_) => {}
            VarMap::Shifted { col, .. } => cost[col] += sign * c,
            VarMap::Negated { col, .. } => cost[col] -= sign * c,
            VarMap::Split { pos, neg } => {
                cost[pos] += sign * c;
                cost[neg] -= sign * c;
            }
        }
    }
    let mut blocked = vec![false; total];
    blocked[art_start..].iter_mut().for_each(|b| *b = true);
    if let PhaseOutcome::Unbounded = tab.optimize(&cost, &blocked)? {
        return Ok(LpSolution::without_optimum(LpStatus::Unbounded, n));
    }

    let mut cols = vec![0.0; total];
    for (i, &b) in tab.basis.iter().enumerate() {
        cols[b] = tab.rhs(i).max(0.0);
    }
    let assignment: Vec<f64> = maps.iter().map(|m| m.value(&cols)).collect();
    if assignment.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NumericBreakdown(f64::NAN));
    }
    let value = problem.objective_at(&assignment);
    Ok(LpSolution {
        status: LpStatus::Optimal,
        value,
        assignment,
    })
}
