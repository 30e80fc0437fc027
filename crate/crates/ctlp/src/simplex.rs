//! Dense two-phase simplex for `min c'z s.t. A z <= b` with free variables,
//! plus a brute-force vertex-enumeration oracle for testing.
//!
//! Variables are unrestricted in sign, so the solver works on the split
//! `z = z+ - z-` with one slack per row. Bland's rule picks both the entering
//! and the leaving variable, which precludes cycling and makes every solve
//! deterministic.

use crate::error::{Error, Result};
use crate::linalg::{solve_square, DenseMatrix};
use serde::Serialize;

/// Feasibility / optimality tolerance on unit-scaled data.
pub const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;
const ACTIVE_TOL: f64 = 1e-7;
const MAX_ITERS: usize = 50_000;

/// A finite-dimensional LP: minimize `c'z` subject to `A z <= b`, `z` free.
#[derive(Debug, Clone)]
pub struct FiniteLP {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl FiniteLP {
    pub fn new(a: DenseMatrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() || c.len() != a.cols() {
            return Err(Error::input(format!(
                "LP dimension mismatch: A is {}x{}, |b| = {}, |c| = {}",
                a.rows(),
                a.cols(),
                b.len(),
                c.len()
            )));
        }
        if !a.is_finite() || b.iter().any(|v| !v.is_finite()) || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("LP data must be finite"));
        }
        Ok(FiniteLP { a, b, c })
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpStatus::Optimal => write!(f, "optimal"),
            LpStatus::Infeasible => write!(f, "infeasible"),
            LpStatus::Unbounded => write!(f, "unbounded"),
        }
    }
}

/// Optimal point with multipliers. The multipliers satisfy
/// `c + A' u = 0`, `u >= 0`, complementary to the slacks; the sign-flipped
/// vector `w = -u` is feasible for the equality-form dual.
#[derive(Debug, Clone)]
pub struct LpOptimal {
    pub z: Vec<f64>,
    pub objective: f64,
    pub dual: Vec<f64>,
    pub active_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum LpSolution {
    Optimal(LpOptimal),
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn status(&self) -> LpStatus {
        match self {
            LpSolution::Optimal(_) => LpStatus::Optimal,
            LpSolution::Infeasible => LpStatus::Infeasible,
            LpSolution::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn optimal(&self) -> Option<&LpOptimal> {
        match self {
            LpSolution::Optimal(o) => Some(o),
            _ => None,
        }
    }
}

struct Tableau {
    /// m rows by (num_cols + 1); last column is the rhs.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row, same width; last entry is minus the objective.
    cost: Vec<f64>,
    basis: Vec<usize>,
    num_cols: usize,
    banned: Vec<bool>,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..=self.num_cols {
                self.rows[r][j] -= factor * self.rows[row][j];
            }
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for j in 0..=self.num_cols {
                self.cost[j] -= factor * self.rows[row][j];
            }
        }
        self.basis[row] = col;
        for r in &mut self.rows {
            let rhs = &mut r[self.num_cols];
            if *rhs < 0.0 && *rhs > -1e-11 {
                *rhs = 0.0;
            }
        }
    }

    /// Bland's rule: entering = lowest-index column with negative reduced
    /// cost; leaving = among the ratio-test ties, the row whose basic
    /// variable has the lowest index.
    fn run(&mut self) -> Result<PhaseOutcome> {
        for _ in 0..MAX_ITERS {
            let mut entering = None;
            for j in 0..self.num_cols {
                if !self.banned[j] && self.cost[j] < -FEAS_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let coeff = self.rows[r][col];
                if coeff > PIVOT_TOL {
                    let ratio = self.rows[r][self.num_cols] / coeff;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((br, brat)) => {
                            if ratio < brat - PIVOT_TOL
                                || ((ratio - brat).abs() <= PIVOT_TOL
                                    && self.basis[r] < self.basis[br])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };
            self.pivot(row, col);
        }
        Err(Error::input("simplex iteration limit exceeded"))
    }

    fn rebuild_cost(&mut self, costs: &[f64]) {
        self.cost = vec![0.0; self.num_cols + 1];
        self.cost[..self.num_cols].copy_from_slice(costs);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb == 0.0 {
                continue;
            }
            for j in 0..=self.num_cols {
                self.cost[j] -= cb * self.rows[r][j];
            }
        }
    }
}

/// Solve the LP. Deterministic for fixed input.
pub fn solve_lp(lp: &FiniteLP) -> Result<LpSolution> {
    let m = lp.num_rows();
    let n = lp.num_vars();
    if n == 0 {
        return Err(Error::input("LP needs at least one variable"));
    }

    // Columns: [z+ (n) | z- (n) | slack (m) | artificial (as needed)].
    let slack0 = 2 * n;
    let mut art_of_row: Vec<Option<usize>> = vec![None; m];
    let mut num_cols = 2 * n + m;
    for (i, &bi) in lp.b.iter().enumerate() {
        if bi < 0.0 {
            art_of_row[i] = Some(num_cols);
            num_cols += 1;
        }
    }
    let num_art = num_cols - 2 * n - m;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let sign = if lp.b[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; num_cols + 1];
        for j in 0..n {
            row[j] = sign * lp.a.get(i, j);
            row[n + j] = -sign * lp.a.get(i, j);
        }
        row[slack0 + i] = sign;
        row[num_cols] = sign * lp.b[i];
        if let Some(a) = art_of_row[i] {
            row[a] = 1.0;
            basis.push(a);
        } else {
            basis.push(slack0 + i);
        }
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        cost: vec![0.0; num_cols + 1],
        basis,
        num_cols,
        banned: vec![false; num_cols],
    };

    let b_scale = 1.0 + lp.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));

    if num_art > 0 {
        let mut phase1 = vec![0.0; num_cols];
        for a in art_of_row.iter().flatten() {
            phase1[*a] = 1.0;
        }
        tab.rebuild_cost(&phase1);
        match tab.run()? {
            PhaseOutcome::Unbounded => {
                return Err(Error::input("phase-1 objective cannot be unbounded"))
            }
            PhaseOutcome::Optimal => {}
        }
        let infeas = -tab.cost[num_cols];
        if infeas > FEAS_TOL * b_scale {
            return Ok(LpSolution::Infeasible);
        }
        // Drive zero-valued artificials out of the basis where possible,
        // then ban them from ever entering again.
        for r in 0..m {
            if tab.basis[r] >= 2 * n + m {
                let col = (0..2 * n + m).find(|&j| tab.rows[r][j].abs() > 1e-7);
                if let Some(j) = col {
                    tab.pivot(r, j);
                }
            }
        }
        for j in 2 * n + m..num_cols {
            tab.banned[j] = true;
        }
    }

    let mut phase2 = vec![0.0; num_cols];
    for j in 0..n {
        phase2[j] = lp.c[j];
        phase2[n + j] = -lp.c[j];
    }
    tab.rebuild_cost(&phase2);
    match tab.run()? {
        PhaseOutcome::Unbounded => return Ok(LpSolution::Unbounded),
        PhaseOutcome::Optimal => {}
    }

    let mut x = vec![0.0; num_cols];
    for (r, &b) in tab.basis.iter().enumerate() {
        x[b] = tab.rows[r][num_cols];
    }
    let z: Vec<f64> = (0..n).map(|j| x[j] - x[n + j]).collect();
    let objective: f64 = lp.c.iter().zip(&z).map(|(c, z)| c * z).sum();

    // The reduced cost of slack i is the multiplier of row i.
    let dual: Vec<f64> = (0..m)
        .map(|i| {
            let u = tab.cost[slack0 + i];
            if u.abs() <= FEAS_TOL {
                0.0
            } else {
                u
            }
        })
        .collect();

    let active_rows = active_set(lp, &z);
    Ok(LpSolution::Optimal(LpOptimal {
        z,
        objective,
        dual,
        active_rows,
    }))
}

/// Rows tight at `z` (within an absolute-plus-relative tolerance).
pub fn active_set(lp: &FiniteLP, z: &[f64]) -> Vec<usize> {
    (0..lp.num_rows())
        .filter(|&i| {
            let r: f64 = lp.a.row(i).iter().zip(z).map(|(a, z)| a * z).sum();
            (r - lp.b[i]).abs() <= ACTIVE_TOL * (1.0 + lp.b[i].abs())
        })
        .collect()
}

/// Size guards for the enumeration oracle.
const ORACLE_MAX_VARS: usize = 3;
const ORACLE_MAX_ROWS: usize = 8;
/// Box used to give every feasible region a vertex; far outside the vertex
/// coordinates reachable with small integer data.
const ORACLE_BOX: f64 = 1e4;

/// Brute-force reference solver: enumerates basic points of the box-augmented
/// system, filters the feasible ones, and takes the best objective.
/// Unboundedness is detected from recession directions enumerated the same
/// way over `{d : A d <= 0, |d|_inf <= 1}`.
pub fn enumerate_oracle(lp: &FiniteLP) -> Result<LpSolution> {
    let m = lp.num_rows();
    let n = lp.num_vars();
    if n == 0 || n > ORACLE_MAX_VARS || m > ORACLE_MAX_ROWS {
        return Err(Error::input(format!(
            "oracle guard: need 1 <= n <= {ORACLE_MAX_VARS} and m <= {ORACLE_MAX_ROWS}, got n = {n}, m = {m}"
        )));
    }

    // Augmented rows: original constraints then +/- identity boxes.
    let mut rows: Vec<Vec<f64>> = (0..m).map(|i| lp.a.row(i).to_vec()).collect();
    let mut rhs_feas: Vec<f64> = lp.b.clone();
    let mut rhs_rec: Vec<f64> = vec![0.0; m];
    for j in 0..n {
        let mut plus = vec![0.0; n];
        plus[j] = 1.0;
        let mut minus = vec![0.0; n];
        minus[j] = -1.0;
        rows.push(plus);
        rows.push(minus);
        rhs_feas.push(ORACLE_BOX);
        rhs_feas.push(ORACLE_BOX);
        rhs_rec.push(1.0);
        rhs_rec.push(1.0);
    }

    let feasible = |z: &[f64], rhs: &[f64]| -> bool {
        rows.iter().zip(rhs).all(|(row, &r)| {
            let v: f64 = row.iter().zip(z).map(|(a, z)| a * z).sum();
            v <= r + 1e-7
        })
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for subset in combinations(rows.len(), n) {
        let a_sub = DenseMatrix::from_rows(subset.iter().map(|&i| rows[i].clone()).collect())?;
        let b_sub: Vec<f64> = subset.iter().map(|&i| rhs_feas[i]).collect();
        let Some(z) = solve_square(&a_sub, &b_sub) else {
            continue;
        };
        if !feasible(&z, &rhs_feas) {
            continue;
        }
        let obj: f64 = lp.c.iter().zip(&z).map(|(c, z)| c * z).sum();
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, z));
        }
    }

    let Some((objective, z)) = best else {
        return Ok(LpSolution::Infeasible);
    };

    // Feasible; look for an improving recession direction.
    for subset in combinations(rows.len(), n) {
        let a_sub = DenseMatrix::from_rows(subset.iter().map(|&i| rows[i].clone()).collect())?;
        let b_sub: Vec<f64> = subset.iter().map(|&i| rhs_rec[i]).collect();
        let Some(d) = solve_square(&a_sub, &b_sub) else {
            continue;
        };
        let in_cone = (0..m).all(|i| {
            let v: f64 = lp.a.row(i).iter().zip(&d).map(|(a, d)| a * d).sum();
            v <= 1e-9
        });
        let in_box = d.iter().all(|v| v.abs() <= 1.0 + 1e-9);
        let improving = lp.c.iter().zip(&d).map(|(c, d)| c * d).sum::<f64>() < -1e-7;
        if in_cone && in_box && improving {
            return Ok(LpSolution::Unbounded);
        }
    }

    let active_rows = active_set(lp, &z);
    Ok(LpSolution::Optimal(LpOptimal {
        z,
        objective,
        dual: vec![],
        active_rows,
    }))
}

/// All k-subsets of `0..n`, lexicographic.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
