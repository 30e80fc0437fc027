//! Dual problem construction, weak/strong duality reports, complementary
//! slackness, and the block full-rank hypothesis for dual-side existence.

use crate::certify::{RegularityCertificate, FR_FLOOR};
use crate::error::{Error, Result};
use crate::instance::{CDPInstance, CTLPInstance, Interpolation, Trajectory};
use crate::linalg::{gram_det, DenseMatrix};
use crate::solver::{dual_objective_value, objective_value};
use serde::Serialize;

/// Residual tolerance on the feasibility blocks of a duality report.
pub const RESIDUAL_TOL: f64 = 1e-7;
/// Gap tolerance on unit-scaled data.
pub const GAP_TOL: f64 = 1e-7;
/// Tolerance for the complementary-slackness conditions.
pub const CS_TOL: f64 = 1e-8;

/// Structural transpose of the primal: maximize `integral b'w` subject to
/// `A'w = c`, `w <= 0`. No numeric work happens here; the dual shares the
/// primal's data.
pub fn build_dual(inst: &CTLPInstance) -> CDPInstance {
    CDPInstance::from_primal(inst.clone())
}

/// Sup-residuals of dual feasibility at the trajectory's nodes:
/// `(sup ||A'w - c||_inf, sup max(0, w_i))`.
pub fn dual_feasibility(dual: &CDPInstance, w: &Trajectory) -> Result<(f64, f64)> {
    let primal = dual.primal();
    if w.dim() != primal.num_rows() {
        return Err(Error::input(format!(
            "dual trajectory dimension {} does not match m = {}",
            w.dim(),
            primal.num_rows()
        )));
    }
    let pieces = w.row_pieces(primal.breakpoints())?;
    let mut eq_residual: f64 = 0.0;
    let mut sign_violation: f64 = 0.0;
    for (k, &piece) in pieces.iter().enumerate() {
        let t = w.times()[k];
        let (a, _, c) = primal.eval_piece(piece, t);
        let atw = a.t_mul_vec(w.row(k))?;
        for j in 0..primal.num_vars() {
            eq_residual = eq_residual.max((atw[j] - c[j]).abs());
        }
        for &wi in w.row(k) {
            sign_violation = sign_violation.max(wi);
        }
    }
    Ok((eq_residual, sign_violation.max(0.0)))
}

/// Pointwise negation: a multiplier trajectory becomes a dual candidate.
pub fn multiplier_to_dual(u: &Trajectory) -> Trajectory {
    u.negated()
}

/// Slack trajectory `y = b - A z`, row by row.
pub fn slack_trajectory(inst: &CTLPInstance, z: &Trajectory) -> Result<Trajectory> {
    if z.dim() != inst.num_vars() {
        return Err(Error::input(
            "trajectory dimension does not match the instance",
        ));
    }
    let pieces = z.row_pieces(inst.breakpoints())?;
    let mut rows = Vec::with_capacity(z.len());
    for (k, &piece) in pieces.iter().enumerate() {
        let (a, b, _) = inst.eval_piece(piece, z.times()[k]);
        let az = a.mul_vec(z.row(k))?;
        rows.push(b.iter().zip(&az).map(|(b, az)| b - az).collect());
    }
    Trajectory::new(z.times().to_vec(), rows, Interpolation::PiecewiseLinear)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DualityVerdict {
    /// Gap within tolerance and a combined regularity certificate supplied.
    StrongDualityCertified,
    /// Both sides feasible and the gap is non-negative (within tolerance).
    WeakDualityHolds,
    /// Both sides feasible yet the gap is negative beyond tolerance.
    WeakDualityViolated,
    /// A feasibility block failed; no duality claim is made.
    Withheld,
}

/// Primal/dual value comparison with all residual blocks.
#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub f_value: f64,
    pub g_value: f64,
    /// `F - G`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_eq_residual: f64,
    pub dual_sign_violation: f64,
    /// sup over nodes of `|y' w|` with `y = b - A z`.
    pub cs_residual: f64,
    pub verdict: DualityVerdict,
    pub certified: bool,
}

/// Assemble values, gap, residuals, and a verdict for a primal/dual pair
/// sampled on one grid.
pub fn duality_report(
    inst: &CTLPInstance,
    z: &Trajectory,
    w: &Trajectory,
    cert: Option<&RegularityCertificate>,
) -> Result<DualityReport> {
    if z.times() != w.times() {
        return Err(Error::input("z and w must share one grid"));
    }
    let dual = build_dual(inst);
    let f_value = objective_value(inst, z)?;
    let g_value = dual_objective_value(&dual, w)?;
    let gap = f_value - g_value;
    let primal_residual = inst.feasibility_residual(z)?;
    let (dual_eq_residual, dual_sign_violation) = dual_feasibility(&dual, w)?;

    let slack = slack_trajectory(inst, z)?;
    let mut cs_residual: f64 = 0.0;
    for k in 0..z.len() {
        let dot: f64 = slack.row(k).iter().zip(w.row(k)).map(|(y, w)| y * w).sum();
        cs_residual = cs_residual.max(dot.abs());
    }

    let certified = cert.is_some_and(|c| c.satisfies_beta_a());
    let feasible = primal_residual <= RESIDUAL_TOL
        && dual_eq_residual <= RESIDUAL_TOL
        && dual_sign_violation <= RESIDUAL_TOL;
    let verdict = if !feasible {
        DualityVerdict::Withheld
    } else if certified && gap.abs() <= GAP_TOL {
        DualityVerdict::StrongDualityCertified
    } else if gap >= -GAP_TOL {
        DualityVerdict::WeakDualityHolds
    } else {
        DualityVerdict::WeakDualityViolated
    };
    Ok(DualityReport {
        f_value,
        g_value,
        gap,
        primal_residual,
        dual_eq_residual,
        dual_sign_violation,
        cs_residual,
        verdict,
        certified,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CsVerdict {
    /// All three conditions hold and a combined certificate was supplied.
    OptimalPair,
    /// All three conditions hold but no certificate upgrades them.
    ConditionsHoldUncertified,
    ConditionsFail,
}

/// The three feasibility-complementarity conditions for a candidate pair.
#[derive(Debug, Clone, Serialize)]
pub struct CsReport {
    /// min over nodes and rows of the slack `y_i` (condition 1 wants >= 0).
    pub min_slack: f64,
    pub dual_eq_residual: f64,
    pub dual_sign_violation: f64,
    /// sup over nodes of `|y' w|` (condition 3 wants 0).
    pub orthogonality_residual: f64,
    pub tol: f64,
    pub fc1_pass: bool,
    pub fc2_pass: bool,
    pub fc3_pass: bool,
    pub verdict: CsVerdict,
}

/// Check the complementary-slackness conditions `y = b - Az >= 0`,
/// `A'w = c, w <= 0`, `y'w = 0` at every node.
pub fn complementary_slackness(
    inst: &CTLPInstance,
    z: &Trajectory,
    w: &Trajectory,
    cert: Option<&RegularityCertificate>,
) -> Result<CsReport> {
    if z.times() != w.times() {
        return Err(Error::input("z and w must share one grid"));
    }
    let slack = slack_trajectory(inst, z)?;
    let mut min_slack = f64::INFINITY;
    let mut orthogonality: f64 = 0.0;
    for k in 0..z.len() {
        let yk = slack.row(k);
        for &y in yk {
            min_slack = min_slack.min(y);
        }
        let dot: f64 = yk.iter().zip(w.row(k)).map(|(y, w)| y * w).sum();
        orthogonality = orthogonality.max(dot.abs());
    }
    let dual = build_dual(inst);
    let (dual_eq_residual, dual_sign_violation) = dual_feasibility(&dual, w)?;

    let fc1_pass = min_slack >= -CS_TOL;
    let fc2_pass = dual_eq_residual <= CS_TOL && dual_sign_violation <= CS_TOL;
    let fc3_pass = orthogonality <= CS_TOL;
    let all = fc1_pass && fc2_pass && fc3_pass;
    let verdict = if all && cert.is_some_and(|c| c.satisfies_beta_a()) {
        CsVerdict::OptimalPair
    } else if all {
        CsVerdict::ConditionsHoldUncertified
    } else {
        CsVerdict::ConditionsFail
    };
    Ok(CsReport {
        min_slack,
        dual_eq_residual,
        dual_sign_violation,
        orthogonality_residual: orthogonality,
        tol: CS_TOL,
        fc1_pass,
        fc2_pass,
        fc3_pass,
        verdict,
    })
}

/// Block full-rank diagnostic on the dual side.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisHReport {
    /// min over nodes of `det(Y Y')` for the block matrix
    /// `Y = [[A', 0], [-I, diag(-2 sqrt(-w_i))]]`.
    pub min_gram_det: f64,
    pub holds: bool,
    pub witness_t: Option<f64>,
}

/// Evaluate the dual-side full-rank hypothesis for a non-positive dual
/// trajectory.
pub fn check_hypothesis_h(dual: &CDPInstance, w: &Trajectory) -> Result<HypothesisHReport> {
    let primal = dual.primal();
    let m = primal.num_rows();
    let n = primal.num_vars();
    if w.dim() != m {
        return Err(Error::input("dual trajectory dimension does not match m"));
    }
    let pieces = w.row_pieces(primal.breakpoints())?;
    let mut min_det = f64::INFINITY;
    let mut witness = None;
    for (k, &piece) in pieces.iter().enumerate() {
        let t = w.times()[k];
        for &wi in w.row(k) {
            if wi > 1e-9 {
                return Err(Error::domain(format!(
                    "positive dual component {wi:e} at t = {t}; the square root is undefined"
                )));
            }
        }
        let (a, _, _) = primal.eval_piece(piece, t);
        // Y = [[A', 0], [-I, D]] with D = diag(-2 sqrt(-w_i))
        let mut y = DenseMatrix::zeros(n + m, 2 * m);
        for i in 0..m {
            for j in 0..n {
                y.set(j, i, a.get(i, j));
            }
        }
        for i in 0..m {
            y.set(n + i, i, -1.0);
            let wi = w.row(k)[i].min(0.0);
            y.set(n + i, m + i, -2.0 * (-wi).sqrt());
        }
        let det = gram_det(&y);
        if det < min_det {
            min_det = det;
            if det < FR_FLOOR {
                witness.get_or_insert(t);
            }
        }
    }
    Ok(HypothesisHReport {
        min_gram_det: min_det,
        holds: min_det >= FR_FLOOR,
        witness_t: witness,
    })
}
