//! Pointwise decomposition solver.
//!
//! The constraint `A(t) z(t) <= b(t)` and the objective couple no two time
//! instants, so minimizers of the finite LPs at the grid nodes assemble into
//! a minimizer of the continuous problem. At each interior breakpoint the
//! solver emits two rows (the data's left and right limits), so the output
//! trajectory represents jumps faithfully and the reported objective is the
//! exact integral of the piecewise-linear interpolant.

use crate::error::{Error, Result};
use crate::instance::{CDPInstance, CTLPInstance, Interpolation, Trajectory};
use crate::linalg::pinv;
use crate::simplex::{solve_lp, FiniteLP, LpSolution, LpStatus};
use crate::timefunc::{Poly, TimeGrid};

/// Result of a pointwise solve: primal and multiplier trajectories on the
/// solution grid, plus the objective of the interpolated primal.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub z: Trajectory,
    pub u: Trajectory,
    pub objective: f64,
    pub per_node_status: Vec<LpStatus>,
}

/// One sample point of the solution grid: a time plus the data piece to
/// evaluate there (so breakpoints can be sampled from both sides).
#[derive(Debug, Clone, Copy)]
struct SamplePoint {
    t: f64,
    piece: usize,
}

fn sampling_plan(inst: &CTLPInstance, grid: &TimeGrid) -> Result<Vec<SamplePoint>> {
    let bp = inst.breakpoints();
    if !grid.covers_breakpoints(bp) {
        return Err(Error::input("solve grid must contain every breakpoint"));
    }
    let horizon = inst.horizon();
    if grid.nodes().iter().any(|n| n.t < 0.0 || n.t > horizon) {
        return Err(Error::input("solve grid leaves [0, T]"));
    }
    let mut plan = Vec::new();
    for piece in 0..bp.interval_count() {
        let (_, hi) = bp.interval_bounds(piece);
        for node in grid.nodes() {
            if node.interval == piece {
                plan.push(SamplePoint { t: node.t, piece });
            }
        }
        // left limit at the piece's right edge, unless the grid already
        // carries it; the final horizon node is owned by the last piece
        let has_right_edge = plan.last().is_some_and(|sp| sp.t == hi && sp.piece == piece);
        if piece + 1 < bp.interval_count() && !has_right_edge {
            plan.push(SamplePoint { t: hi, piece });
        }
    }
    Ok(plan)
}

/// Solve the instance pointwise on `grid`. Fails with the witness node if any
/// pointwise LP is infeasible or unbounded.
pub fn solve(inst: &CTLPInstance, grid: &TimeGrid) -> Result<SolveResult> {
    let plan = sampling_plan(inst, grid)?;
    let n = inst.num_vars();

    let mut z_rows: Vec<Vec<f64>> = Vec::with_capacity(plan.len());
    let mut u_rows: Vec<Vec<f64>> = Vec::with_capacity(plan.len());
    let mut objectives: Vec<f64> = Vec::with_capacity(plan.len());
    for (k, sp) in plan.iter().enumerate() {
        let (a, b, c) = inst.eval_piece(sp.piece, sp.t);
        let lp = FiniteLP::new(a, b, c)?;
        match solve_lp(&lp)? {
            LpSolution::Optimal(opt) => {
                z_rows.push(opt.z);
                u_rows.push(opt.dual);
                objectives.push(opt.objective);
            }
            other => {
                return Err(Error::SolveFailed {
                    node: k,
                    t: sp.t,
                    status: other.status().to_string(),
                });
            }
        }
    }

    // Where a node's optimum is not unique, prefer the point pinned down by
    // the active set that is optimal in the interior of the piece. This keeps
    // the trajectory consistent within each piece (and exact for data whose
    // optimum moves affinely); per-node optimality is never traded away.
    for piece in 0..inst.breakpoints().interval_count() {
        let (lo, hi) = inst.breakpoints().interval_bounds(piece);
        let mid = 0.5 * (lo + hi);
        let (a, b, c) = inst.eval_piece(piece, mid);
        let lp = FiniteLP::new(a, b, c)?;
        let Ok(LpSolution::Optimal(rep)) = solve_lp(&lp) else {
            continue;
        };
        let rows = rep.active_rows;
        for (k, sp) in plan.iter().enumerate() {
            if sp.piece != piece {
                continue;
            }
            let (a, b, c) = inst.eval_piece(sp.piece, sp.t);
            let candidate = if rows.is_empty() {
                vec![0.0; n]
            } else {
                let a_s = a.select_rows(&rows);
                let b_s: Vec<f64> = rows.iter().map(|&i| b[i]).collect();
                match pinv(&a_s).and_then(|p| p.mul_vec(&b_s)) {
                    Ok(v) => v,
                    Err(_) => continue,
                }
            };
            let az = match a.mul_vec(&candidate) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let feasible = az
                .iter()
                .zip(&b)
                .all(|(l, r)| *l <= *r + 1e-9 * (1.0 + r.abs()));
            let obj: f64 = c.iter().zip(&candidate).map(|(c, z)| c * z).sum();
            if feasible && obj <= objectives[k] + 1e-9 * (1.0 + objectives[k].abs()) {
                z_rows[k] = candidate;
            }
        }
    }

    let times: Vec<f64> = plan.iter().map(|sp| sp.t).collect();
    let z = Trajectory::new(times.clone(), z_rows, Interpolation::PiecewiseLinear)?;
    let u = Trajectory::new(times, u_rows, Interpolation::PiecewiseLinear)?;
    let objective = objective_value(inst, &z)?;
    Ok(SolveResult {
        z,
        u,
        objective,
        per_node_status: vec![LpStatus::Optimal; plan.len()],
    })
}

fn check_coverage(traj: &Trajectory, bp: &crate::timefunc::Breakpoints) -> Result<()> {
    let times = traj.times();
    if times[0] != 0.0 || *times.last().unwrap() != bp.horizon() {
        return Err(Error::input(format!(
            "trajectory must span [0, {}], got [{}, {}]",
            bp.horizon(),
            times[0],
            times.last().unwrap()
        )));
    }
    for p in bp.points() {
        if !times.contains(p) {
            return Err(Error::input(format!(
                "trajectory grid must contain breakpoint {p}"
            )));
        }
    }
    Ok(())
}

/// Exact integral of `sum_j f_j(t) v_j(t)` where `f_j` are the instance's
/// piecewise polynomials and `v` is the trajectory's interpolant. Consecutive
/// rows with equal times bound zero-length segments and contribute nothing.
fn integrate_pairing(
    fs: &[&crate::timefunc::PiecewiseFn],
    bp: &crate::timefunc::Breakpoints,
    traj: &Trajectory,
) -> Result<f64> {
    check_coverage(traj, bp)?;
    let times = traj.times();
    let mut total = 0.0;
    for k in 0..traj.len() - 1 {
        let (ta, tb) = (times[k], times[k + 1]);
        if ta == tb {
            continue;
        }
        let piece = bp.interval_of(ta)?;
        let va = traj.row(k);
        let vb = traj.row(k + 1);
        for (j, f) in fs.iter().enumerate() {
            let vj = match traj.interpolation() {
                Interpolation::PiecewiseLinear => {
                    let slope = (vb[j] - va[j]) / (tb - ta);
                    Poly::new(vec![va[j] - slope * ta, slope])
                }
                Interpolation::PiecewiseConstantRight => Poly::constant(va[j]),
            };
            total += f.pieces()[piece].mul(&vj).integrate(ta, tb);
        }
    }
    Ok(total)
}

/// `F(z) = integral_0^T c(t)' z(t) dt` for the interpolated trajectory.
pub fn objective_value(inst: &CTLPInstance, z: &Trajectory) -> Result<f64> {
    if z.dim() != inst.num_vars() {
        return Err(Error::input(format!(
            "trajectory dimension {} does not match n = {}",
            z.dim(),
            inst.num_vars()
        )));
    }
    let fs: Vec<&crate::timefunc::PiecewiseFn> =
        (0..inst.num_vars()).map(|j| inst.c_entry(j)).collect();
    integrate_pairing(&fs, inst.breakpoints(), z)
}

/// `G(w) = integral_0^T b(t)' w(t) dt` for the interpolated dual trajectory.
pub fn dual_objective_value(dual: &CDPInstance, w: &Trajectory) -> Result<f64> {
    let primal = dual.primal();
    if w.dim() != primal.num_rows() {
        return Err(Error::input(format!(
            "dual trajectory dimension {} does not match m = {}",
            w.dim(),
            primal.num_rows()
        )));
    }
    let fs: Vec<&crate::timefunc::PiecewiseFn> =
        (0..primal.num_rows()).map(|i| primal.b_entry(i)).collect();
    integrate_pairing(&fs, primal.breakpoints(), w)
}
