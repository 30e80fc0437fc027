//! Active sets, regularity certificates, multiplier recovery, and KKT checks.
//!
//! Given a feasible trajectory, every node gets its beta-active set
//! `I_beta = { i : -beta <= a_i'z - b_i <= 0 }` and active set
//! `I_0 = { i : a_i'z - b_i = 0 }` (both widened by `ACTIVE_TOL`, since exact
//! activity is numerically meaningless). Two conditions are certified:
//!
//! * full rank: `det(A_Ibeta A_Ibeta')` uniformly above a positive floor;
//! * regularity: some subset `I_sharp` of the beta-active rows generates the
//!   same cone and has its Gram determinant above the floor.
//!
//! Multipliers come from the pseudo-inverse of the row-masked matrix, then a
//! conic fold concentrates the mass of redundant rows onto `I_sharp`.

use crate::error::{Error, Result};
use crate::instance::{CTLPInstance, Interpolation, Trajectory};
use crate::linalg::{gram_det, inverse, pinv, sigma_min_positive, spectral_norm, svd, DenseMatrix};
use crate::simplex::{solve_lp, FiniteLP, LpSolution};
use serde::Serialize;

/// Residual tolerance that widens exact activity into a checkable band.
pub const ACTIVE_TOL: f64 = 1e-7;
/// A Gram-determinant lower bound below this floor counts as a failed
/// uniform bound.
pub const FR_FLOOR: f64 = 1e-8;
/// Verdict tolerance for the KKT residuals.
pub const KKT_TOL: f64 = 1e-7;

/// Per-node activity data for a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct NodeActivity {
    pub t: f64,
    pub piece: usize,
    /// Constraint residuals `a_i'z - b_i`.
    pub residuals: Vec<f64>,
    /// Active rows (0-based).
    pub i0: Vec<usize>,
    /// Beta-active rows (0-based).
    pub ibeta: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActiveSetProfile {
    pub beta: f64,
    pub active_tol: f64,
    pub nodes: Vec<NodeActivity>,
}

/// Beta-active and active index sets at every node of `z`.
pub fn active_sets(inst: &CTLPInstance, z: &Trajectory, beta: f64) -> Result<ActiveSetProfile> {
    if beta <= 0.0 {
        return Err(Error::input(format!("beta must be positive, got {beta}")));
    }
    let residual = inst.feasibility_residual(z)?;
    if residual > ACTIVE_TOL {
        return Err(Error::domain(format!(
            "trajectory is infeasible: residual {residual:e} exceeds {ACTIVE_TOL:e}"
        )));
    }
    let pieces = z.row_pieces(inst.breakpoints())?;
    let mut nodes = Vec::with_capacity(z.len());
    for (k, &piece) in pieces.iter().enumerate() {
        let t = z.times()[k];
        let (a, b, _) = inst.eval_piece(piece, t);
        let az = a.mul_vec(z.row(k))?;
        let residuals: Vec<f64> = az.iter().zip(&b).map(|(l, r)| l - r).collect();
        let ibeta = residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| **r >= -beta && **r <= ACTIVE_TOL)
            .map(|(i, _)| i)
            .collect();
        let i0 = residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| r.abs() <= ACTIVE_TOL)
            .map(|(i, _)| i)
            .collect();
        nodes.push(NodeActivity {
            t,
            piece,
            residuals,
            i0,
            ibeta,
        });
    }
    Ok(ActiveSetProfile {
        beta,
        active_tol: ACTIVE_TOL,
        nodes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    #[serde(rename = "beta_fr")]
    BetaFR,
    #[serde(rename = "beta_rc")]
    BetaRC,
    #[serde(rename = "beta_a")]
    BetaA,
    #[serde(rename = "fails")]
    Fails,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaAClause {
    FullRank,
    RegularityInActive,
}

/// Per-node detail backing a certificate.
#[derive(Debug, Clone, Serialize)]
pub struct NodeCertificate {
    pub t: f64,
    pub piece: usize,
    pub i0: Vec<usize>,
    pub ibeta: Vec<usize>,
    pub isharp: Vec<usize>,
    pub gram_det: f64,
    pub sigma_min: f64,
}

/// Witnessed regularity certificate: the kind that holds, the numeric lower
/// bounds over all nodes, and the per-node index sets.
#[derive(Debug, Clone, Serialize)]
pub struct RegularityCertificate {
    pub kind: CertificateKind,
    pub beta: f64,
    /// min over nodes of the certified block's Gram determinant.
    pub det_lower_bound: f64,
    /// min over nodes of the certified block's smallest positive singular value.
    pub sigma_min_lower_bound: f64,
    /// Whether `I_sharp` is contained in the active set at every node.
    pub isharp_in_i0: bool,
    /// Which clause produced a combined certificate, when `kind` is `BetaA`.
    pub beta_a_clause: Option<BetaAClause>,
    /// Failing node index when `kind` is `Fails`.
    pub witness_node: Option<usize>,
    pub failure_reason: Option<String>,
    pub nodes: Vec<NodeCertificate>,
}

impl RegularityCertificate {
    pub fn holds(&self) -> bool {
        self.kind != CertificateKind::Fails
    }

    /// True when this certificate is strong enough for the duality and
    /// complementary-slackness theorems: full rank, or regularity whose
    /// `I_sharp` stays inside the active set.
    pub fn satisfies_beta_a(&self) -> bool {
        match self.kind {
            CertificateKind::BetaFR | CertificateKind::BetaA => true,
            CertificateKind::BetaRC => self.isharp_in_i0,
            CertificateKind::Fails => false,
        }
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.contains(x))
}

fn block_sigma_min(rows: &DenseMatrix) -> f64 {
    if rows.rows() == 0 {
        return f64::INFINITY;
    }
    sigma_min_positive(rows).unwrap_or(0.0)
}

/// Full-rank certificate: Gram determinant of the beta-active rows above the
/// floor at every node.
pub fn check_beta_fr(
    inst: &CTLPInstance,
    z: &Trajectory,
    beta: f64,
) -> Result<RegularityCertificate> {
    let profile = active_sets(inst, z, beta)?;
    let mut nodes = Vec::with_capacity(profile.nodes.len());
    let mut det_min = f64::INFINITY;
    let mut sigma_min = f64::INFINITY;
    let mut witness = None;
    let mut isharp_in_i0 = true;
    for (k, node) in profile.nodes.iter().enumerate() {
        let (a, _, _) = inst.eval_piece(node.piece, node.t);
        let block = a.select_rows(&node.ibeta);
        let det = gram_det(&block);
        let sig = block_sigma_min(&block);
        if det < det_min {
            det_min = det;
            if det < FR_FLOOR {
                witness.get_or_insert(k);
            }
        }
        sigma_min = sigma_min.min(sig);
        isharp_in_i0 &= is_subset(&node.ibeta, &node.i0);
        nodes.push(NodeCertificate {
            t: node.t,
            piece: node.piece,
            i0: node.i0.clone(),
            ibeta: node.ibeta.clone(),
            isharp: node.ibeta.clone(),
            gram_det: det,
            sigma_min: sig,
        });
    }
    let holds = det_min >= FR_FLOOR;
    Ok(RegularityCertificate {
        kind: if holds {
            CertificateKind::BetaFR
        } else {
            CertificateKind::Fails
        },
        beta,
        det_lower_bound: det_min,
        sigma_min_lower_bound: sigma_min,
        isharp_in_i0,
        beta_a_clause: None,
        witness_node: witness,
        failure_reason: (!holds)
            .then(|| format!("gram determinant {det_min:e} below floor {FR_FLOOR:e}")),
        nodes,
    })
}

/// True iff `x` lies in the cone generated by the rows, decided by a
/// feasibility LP: exists lambda >= 0 with rows' lambda = x.
pub fn cone_member(x: &[f64], rows: &DenseMatrix) -> Result<bool> {
    if rows.rows() == 0 {
        return Ok(x.iter().all(|v| v.abs() <= 1e-9));
    }
    if rows.cols() != x.len() {
        return Err(Error::input("cone_member: dimension mismatch"));
    }
    let k = rows.rows();
    let n = rows.cols();
    // constraints on lambda: R' lambda <= x, -R' lambda <= -x, -lambda <= 0
    let mut con = Vec::with_capacity(2 * n + k);
    let mut rhs = Vec::with_capacity(2 * n + k);
    for j in 0..n {
        let row: Vec<f64> = (0..k).map(|i| rows.get(i, j)).collect();
        con.push(row.clone());
        rhs.push(x[j]);
        con.push(row.into_iter().map(|v| -v).collect());
        rhs.push(-x[j]);
    }
    for i in 0..k {
        let mut row = vec![0.0; k];
        row[i] = -1.0;
        con.push(row);
        rhs.push(0.0);
    }
    let lp = FiniteLP::new(DenseMatrix::from_rows(con)?, rhs, vec![0.0; k])?;
    match solve_lp(&lp)? {
        LpSolution::Optimal(_) => Ok(true),
        LpSolution::Infeasible => Ok(false),
        LpSolution::Unbounded => Err(Error::input("feasibility LP cannot be unbounded")),
    }
}

/// Deterministic choice of generators: walk the rows from the highest index
/// down and drop each row lying in the cone of the rows still kept. The
/// result generates the same cone; ties (duplicate rays) keep the lowest
/// index.
pub fn select_isharp(rows: &DenseMatrix) -> Result<Vec<usize>> {
    let q = rows.rows();
    let mut keep = vec![true; q];
    for i in (0..q).rev() {
        let others: Vec<usize> = (0..q).filter(|&j| j != i && keep[j]).collect();
        let sub = rows.select_rows(&others);
        if cone_member(rows.row(i), &sub)? {
            keep[i] = false;
        }
    }
    Ok((0..q).filter(|&i| keep[i]).collect())
}

/// Regularity certificate: a cone-preserving subset of the beta-active rows
/// with a uniform Gram-determinant bound.
pub fn check_beta_rc(
    inst: &CTLPInstance,
    z: &Trajectory,
    beta: f64,
) -> Result<RegularityCertificate> {
    let profile = active_sets(inst, z, beta)?;
    let mut nodes = Vec::with_capacity(profile.nodes.len());
    let mut det_min = f64::INFINITY;
    let mut sigma_min = f64::INFINITY;
    let mut witness = None;
    let mut failure: Option<String> = None;
    let mut isharp_in_i0 = true;
    for (k, node) in profile.nodes.iter().enumerate() {
        let (a, _, _) = inst.eval_piece(node.piece, node.t);
        let beta_block = a.select_rows(&node.ibeta);
        let positions = select_isharp(&beta_block)?;
        let isharp: Vec<usize> = positions.iter().map(|&p| node.ibeta[p]).collect();
        let sharp_block = a.select_rows(&isharp);

        // soundness: every beta-active row must lie in cone(A_Isharp)
        for (pos, &i) in node.ibeta.iter().enumerate() {
            if positions.contains(&pos) {
                continue;
            }
            if !cone_member(a.row(i), &sharp_block)? {
                witness.get_or_insert(k);
                failure.get_or_insert(format!(
                    "row {i} escapes the selected cone at t = {}",
                    node.t
                ));
            }
        }

        let det = gram_det(&sharp_block);
        let sig = block_sigma_min(&sharp_block);
        if det < det_min {
            det_min = det;
            if det < FR_FLOOR {
                witness.get_or_insert(k);
            }
        }
        sigma_min = sigma_min.min(sig);
        isharp_in_i0 &= is_subset(&isharp, &node.i0);
        nodes.push(NodeCertificate {
            t: node.t,
            piece: node.piece,
            i0: node.i0.clone(),
            ibeta: node.ibeta.clone(),
            isharp,
            gram_det: det,
            sigma_min: sig,
        });
    }
    if det_min < FR_FLOOR {
        failure.get_or_insert(format!(
            "gram determinant {det_min:e} below floor {FR_FLOOR:e}"
        ));
    }
    let holds = failure.is_none();
    Ok(RegularityCertificate {
        kind: if holds {
            CertificateKind::BetaRC
        } else {
            CertificateKind::Fails
        },
        beta,
        det_lower_bound: det_min,
        sigma_min_lower_bound: sigma_min,
        isharp_in_i0,
        beta_a_clause: None,
        witness_node: witness,
        failure_reason: failure,
        nodes,
    })
}

/// Combined certificate: regularity with `I_sharp` inside the active set, or
/// full rank. This is the hypothesis behind strong duality and complementary
/// slackness.
pub fn check_beta_a(
    inst: &CTLPInstance,
    z: &Trajectory,
    beta: f64,
) -> Result<RegularityCertificate> {
    let rc = check_beta_rc(inst, z, beta)?;
    if rc.holds() && rc.isharp_in_i0 {
        return Ok(RegularityCertificate {
            kind: CertificateKind::BetaA,
            beta_a_clause: Some(BetaAClause::RegularityInActive),
            ..rc
        });
    }
    let fr = check_beta_fr(inst, z, beta)?;
    if fr.holds() {
        return Ok(RegularityCertificate {
            kind: CertificateKind::BetaA,
            beta_a_clause: Some(BetaAClause::FullRank),
            ..fr
        });
    }
    Ok(RegularityCertificate {
        kind: CertificateKind::Fails,
        failure_reason: Some(format!(
            "neither clause holds: regularity {} (isharp_in_i0 = {}), full rank {}",
            if rc.holds() { "holds" } else { "fails" },
            rc.isharp_in_i0,
            fr.failure_reason.unwrap_or_default(),
        )),
        ..rc
    })
}

/// One row of a beta sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub beta: f64,
    pub fr_holds: bool,
    pub rc_holds: bool,
    pub isharp_in_i0: bool,
    pub beta_a_holds: bool,
}

/// Run certification at `count` log-spaced beta values in `[lo, hi]`.
pub fn beta_sweep(
    inst: &CTLPInstance,
    z: &Trajectory,
    lo: f64,
    hi: f64,
    count: usize,
) -> Result<Vec<SweepEntry>> {
    if !(lo > 0.0 && hi >= lo && count >= 1) {
        return Err(Error::input("sweep needs 0 < lo <= hi and count >= 1"));
    }
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let frac = if count == 1 {
            0.0
        } else {
            k as f64 / (count - 1) as f64
        };
        let beta = lo * (hi / lo).powf(frac);
        let fr = check_beta_fr(inst, z, beta)?;
        let rc = check_beta_rc(inst, z, beta)?;
        out.push(SweepEntry {
            beta,
            fr_holds: fr.holds(),
            rc_holds: rc.holds(),
            isharp_in_i0: rc.isharp_in_i0,
            beta_a_holds: (rc.holds() && rc.isharp_in_i0) || fr.holds(),
        });
    }
    Ok(out)
}

/// Multipliers recovered through the pseudo-inverse construction.
#[derive(Debug, Clone)]
pub struct RecoveredMultipliers {
    pub u: Trajectory,
    pub min_multiplier: f64,
    /// Sup of the conic reconstruction residual over nodes with a fold.
    pub fold_residual: f64,
    /// Most negative entry seen in a fold coefficient matrix, if any folds
    /// happened. Small negatives are legal for non-unique conic
    /// decompositions and are reported, not rejected.
    pub fold_min_coefficient: Option<f64>,
}

/// Recover Lagrange multipliers for `z` at every node: mask the rows of
/// `A(t)` outside the beta-active set, take `u = -(M^+)' c`, and when the
/// certificate kept a strict subset `I_sharp`, fold the redundant rows'
/// components onto it through the conic coefficient matrix.
pub fn recover_multipliers(
    inst: &CTLPInstance,
    z: &Trajectory,
    beta: f64,
    cert: &RegularityCertificate,
) -> Result<RecoveredMultipliers> {
    if !cert.holds() {
        return Err(Error::Certificate(
            "multiplier recovery needs a holding certificate".into(),
        ));
    }
    if cert.nodes.len() != z.len() {
        return Err(Error::input(
            "certificate and trajectory were built on different grids",
        ));
    }
    let m = inst.num_rows();
    let profile = active_sets(inst, z, beta)?;
    let mut rows_out: Vec<Vec<f64>> = Vec::with_capacity(z.len());
    let mut min_multiplier = f64::INFINITY;
    let mut fold_residual: f64 = 0.0;
    let mut fold_min: Option<f64> = None;

    for (k, node) in profile.nodes.iter().enumerate() {
        let (a, _, c) = inst.eval_piece(node.piece, node.t);
        let mut masked = DenseMatrix::zeros(m, inst.num_vars());
        for &i in &node.ibeta {
            for j in 0..inst.num_vars() {
                masked.set(i, j, a.get(i, j));
            }
        }
        let p = pinv(&masked)?;
        // u_tilde = -(M^+)' c, supported on the beta-active rows
        let mut u_tilde = vec![0.0; m];
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..inst.num_vars() {
                acc += p.get(j, i) * c[j];
            }
            u_tilde[i] = -acc;
        }

        let isharp = &cert.nodes[k].isharp;
        let iflat: Vec<usize> = node
            .ibeta
            .iter()
            .copied()
            .filter(|i| !isharp.contains(i))
            .collect();

        let mut u_node = vec![0.0; m];
        if iflat.is_empty() {
            u_node.copy_from_slice(&u_tilde);
        } else {
            let a_sharp = a.select_rows(isharp);
            let a_flat = a.select_rows(&iflat);
            let g = a_sharp.gram();
            let g_inv = inverse(&g).ok_or_else(|| {
                Error::Certificate(format!(
                    "selected rows lost rank at t = {} despite certificate",
                    node.t
                ))
            })?;
            let lambda = a_flat.matmul(&a_sharp.transpose())?.matmul(&g_inv)?;
            let rec = lambda.matmul(&a_sharp)?;
            for r in 0..a_flat.rows() {
                for jj in 0..a_flat.cols() {
                    fold_residual = fold_residual.max((a_flat.get(r, jj) - rec.get(r, jj)).abs());
                }
            }
            for r in 0..lambda.rows() {
                for jj in 0..lambda.cols() {
                    let v = lambda.get(r, jj);
                    fold_min = Some(fold_min.map_or(v, |m: f64| m.min(v)));
                }
            }
            // u_bar = u_sharp + Lambda' u_flat, scattered back onto I_sharp
            for (sj, &i) in isharp.iter().enumerate() {
                let mut v = u_tilde[i];
                for (fj, &l) in iflat.iter().enumerate() {
                    v += lambda.get(fj, sj) * u_tilde[l];
                }
                u_node[i] = v;
            }
        }
        if fold_residual > 1e-8 {
            return Err(Error::Certificate(format!(
                "conic reconstruction residual {fold_residual:e} at t = {}",
                node.t
            )));
        }
        for &v in &u_node {
            min_multiplier = min_multiplier.min(v);
        }
        rows_out.push(u_node);
    }

    let u = Trajectory::new(z.times().to_vec(), rows_out, Interpolation::PiecewiseLinear)?;
    Ok(RecoveredMultipliers {
        u,
        min_multiplier,
        fold_residual,
        fold_min_coefficient: fold_min,
    })
}

/// KKT residuals of a primal/multiplier pair.
#[derive(Debug, Clone, Serialize)]
pub struct KKTReport {
    /// sup over nodes of `||c + A'u||_inf`.
    pub stationarity_residual: f64,
    /// min over nodes and rows of `u_i`.
    pub min_multiplier: f64,
    /// sup over nodes and rows of `|u_i (a_i'z - b_i)|`.
    pub complementarity_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Evaluate stationarity, multiplier sign, and complementarity for a pair of
/// trajectories sampled on the same grid.
pub fn check_kkt(inst: &CTLPInstance, z: &Trajectory, u: &Trajectory) -> Result<KKTReport> {
    if z.times() != u.times() {
        return Err(Error::input("z and u must share one grid"));
    }
    if z.dim() != inst.num_vars() || u.dim() != inst.num_rows() {
        return Err(Error::input(
            "trajectory dimensions do not match the instance",
        ));
    }
    let pieces = z.row_pieces(inst.breakpoints())?;
    let mut stationarity: f64 = 0.0;
    let mut min_multiplier = f64::INFINITY;
    let mut complementarity: f64 = 0.0;
    for (k, &piece) in pieces.iter().enumerate() {
        let t = z.times()[k];
        let (a, b, c) = inst.eval_piece(piece, t);
        let uk = u.row(k);
        let grad = a.t_mul_vec(uk)?;
        for j in 0..inst.num_vars() {
            stationarity = stationarity.max((c[j] + grad[j]).abs());
        }
        let az = a.mul_vec(z.row(k))?;
        for i in 0..inst.num_rows() {
            min_multiplier = min_multiplier.min(uk[i]);
            complementarity = complementarity.max((uk[i] * (az[i] - b[i])).abs());
        }
    }
    let pass = stationarity <= KKT_TOL && min_multiplier >= -KKT_TOL && complementarity <= KKT_TOL;
    Ok(KKTReport {
        stationarity_residual: stationarity,
        min_multiplier,
        complementarity_residual: complementarity,
        tol: KKT_TOL,
        pass,
    })
}

/// Numeric cross-check of the full-rank lemma's explicit constants.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma1Witness {
    /// min over nodes of the smallest positive singular value of the
    /// beta-active block.
    pub sigma_min_bound: f64,
    /// min over nodes of the block's Gram determinant.
    pub gram_det_bound: f64,
    /// Whether the block had full row rank at every node.
    pub full_rank_everywhere: bool,
    /// Both directions of the constant formulas verified at every node.
    pub consistent: bool,
    /// The data bound used for the forward direction.
    pub data_bound_used: f64,
}

/// Check, node by node, that the witnessed constants relate as the full-rank
/// lemma states: from a determinant bound `det` one gets
/// `sigma_min >= sqrt(det / K^(2(q-1)))`, and from a singular-value bound
/// `sigma` one gets `det >= sigma` (when `sigma >= 1`) or
/// `det >= sigma^(2q)` (when `sigma < 1`). Rank-deficient blocks must show a
/// zero Gram determinant while keeping a positive smallest singular value.
pub fn lemma1_witness(inst: &CTLPInstance, z: &Trajectory, beta: f64) -> Result<Lemma1Witness> {
    let profile = active_sets(inst, z, beta)?;
    let mut data_bound = inst.data_bound();
    for node in &profile.nodes {
        let (a, _, _) = inst.eval_piece(node.piece, node.t);
        data_bound = data_bound.max(spectral_norm(&a)?);
    }
    let mut sigma_bound = f64::INFINITY;
    let mut det_bound = f64::INFINITY;
    let mut full_rank = true;
    let mut consistent = true;
    for node in &profile.nodes {
        if node.ibeta.is_empty() {
            return Err(Error::domain(format!(
                "no beta-active rows at t = {}",
                node.t
            )));
        }
        let (a, _, _) = inst.eval_piece(node.piece, node.t);
        let block = a.select_rows(&node.ibeta);
        let q = block.rows();
        let det = gram_det(&block);
        let sigma = sigma_min_positive(&block)?;
        let rank = svd(&block)?.rank;
        sigma_bound = sigma_bound.min(sigma);
        det_bound = det_bound.min(det);
        if rank < q {
            full_rank = false;
            consistent &= det == 0.0;
            continue;
        }
        consistent &= check_lemma1_constants(sigma, det, data_bound, q);
    }
    Ok(Lemma1Witness {
        sigma_min_bound: sigma_bound,
        gram_det_bound: det_bound,
        full_rank_everywhere: full_rank,
        consistent,
        data_bound_used: data_bound,
    })
}

/// Both implication directions for one full-row-rank block of `q` rows with
/// `||block|| <= k_bound`.
pub fn check_lemma1_constants(sigma_min: f64, det: f64, k_bound: f64, q: usize) -> bool {
    let rel = 1e-8;
    // determinant bound -> singular value bound
    let forward = sigma_min.powi(2) * k_bound.powi(2 * (q as i32 - 1)) >= det * (1.0 - rel);
    // singular value bound -> determinant bound
    let khat = if sigma_min >= 1.0 {
        sigma_min
    } else {
        sigma_min.powi(2 * q as i32)
    };
    let backward = det >= khat * (1.0 - rel);
    forward && backward
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::example1;
    use crate::timefunc::{Breakpoints, PiecewiseFn};

    fn reference_z(times_left: &[f64], times_right: &[f64]) -> Trajectory {
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for &t in times_left {
            ts.push(t);
            vs.push(vec![2.75 - 0.625 * t, 0.25 + 0.625 * t]);
        }
        for &t in times_right {
            ts.push(t);
            vs.push(vec![0.25 + 0.625 * t, 0.25 + 0.625 * t]);
        }
        Trajectory::new(ts, vs, Interpolation::PiecewiseLinear).unwrap()
    }

    fn standard_reference() -> Trajectory {
        reference_z(&[0.0, 0.5, 1.0], &[1.0, 1.5, 1.95, 2.0])
    }

    #[test]
    fn active_sets_on_the_reference_trajectory() {
        let inst = example1();
        let z = standard_reference();
        let profile = active_sets(&inst, &z, 0.125).unwrap();
        let by_time = |t: f64, right: bool| {
            profile
                .nodes
                .iter()
                .filter(|n| n.t == t)
                .nth(if right { 1 } else { 0 })
                .or_else(|| profile.nodes.iter().find(|n| n.t == t))
                .unwrap()
        };
        // 0-based row indices: rows 4 and 5 of the display are 3 and 4 here
        assert_eq!(by_time(0.5, false).ibeta, vec![3, 4]);
        assert_eq!(by_time(0.5, false).i0, vec![3, 4]);
        assert_eq!(by_time(1.5, true).ibeta, vec![2, 4]);
        assert_eq!(by_time(1.5, true).i0, vec![2, 4]);
        assert_eq!(by_time(1.95, true).ibeta, vec![2, 3, 4]);
        assert_eq!(by_time(1.95, true).i0, vec![2, 4]);
    }

    #[test]
    fn active_sets_reject_infeasible_trajectories() {
        let inst = example1();
        let z = Trajectory::new(
            vec![0.0, 1.0, 2.0],
            vec![vec![10.0, 10.0]; 3],
            Interpolation::PiecewiseLinear,
        )
        .unwrap();
        assert!(active_sets(&inst, &z, 0.125).is_err());
        let z = standard_reference();
        assert!(active_sets(&inst, &z, 0.0).is_err());
    }

    #[test]
    fn full_rank_fails_near_the_horizon_and_regularity_holds() {
        let inst = example1();
        let z = standard_reference();
        let fr = check_beta_fr(&inst, &z, 0.125).unwrap();
        assert_eq!(fr.kind, CertificateKind::Fails);
        let witness = fr.witness_node.unwrap();
        assert!(fr.nodes[witness].t >= 1.9);
        assert_eq!(fr.nodes[witness].gram_det, 0.0);

        let rc = check_beta_rc(&inst, &z, 0.125).unwrap();
        assert_eq!(rc.kind, CertificateKind::BetaRC);
        assert!(rc.isharp_in_i0);
        assert!(rc.det_lower_bound >= 1.0 - 1e-9);

        let combined = check_beta_a(&inst, &z, 0.125).unwrap();
        assert_eq!(combined.kind, CertificateKind::BetaA);
        assert_eq!(
            combined.beta_a_clause,
            Some(BetaAClause::RegularityInActive)
        );
    }

    #[test]
    fn full_rank_holds_on_the_first_piece_alone() {
        // restriction of the bundled instance to [0, 1]
        let bp = Breakpoints::new(vec![0.0, 1.0]).unwrap();
        let mk = |coeffs: &[f64]| {
            PiecewiseFn::new(
                bp.clone(),
                vec![crate::timefunc::Poly::new(coeffs.to_vec())],
            )
            .unwrap()
        };
        let inst = CTLPInstance::new(
            vec![
                vec![mk(&[0.0]), mk(&[-1.0])],
                vec![mk(&[-1.0]), mk(&[0.0])],
                vec![mk(&[-1.0]), mk(&[1.0])],
                vec![mk(&[1.0]), mk(&[1.0])],
                vec![mk(&[0.0]), mk(&[1.0])],
            ],
            vec![
                mk(&[0.0]),
                mk(&[0.0]),
                mk(&[0.0]),
                mk(&[3.0]),
                mk(&[0.25, 0.625]),
            ],
            vec![mk(&[-1.0, 1.0]), mk(&[-1.0])],
        )
        .unwrap();
        let z = Trajectory::new(
            vec![0.0, 0.5, 1.0],
            vec![
                vec![2.75, 0.25],
                vec![2.75 - 0.3125, 0.25 + 0.3125],
                vec![2.125, 0.875],
            ],
            Interpolation::PiecewiseLinear,
        )
        .unwrap();
        let fr = check_beta_fr(&inst, &z, 0.125).unwrap();
        assert_eq!(fr.kind, CertificateKind::BetaFR);
        assert!((fr.det_lower_bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_constraints_give_full_rank() {
        let bp = Breakpoints::new(vec![0.0, 1.0]).unwrap();
        let inst = CTLPInstance::new(
            vec![
                vec![
                    PiecewiseFn::constant(bp.clone(), 1.0).unwrap(),
                    PiecewiseFn::constant(bp.clone(), 0.0).unwrap(),
                ],
                vec![
                    PiecewiseFn::constant(bp.clone(), 0.0).unwrap(),
                    PiecewiseFn::constant(bp.clone(), 1.0).unwrap(),
                ],
            ],
            vec![
                PiecewiseFn::constant(bp.clone(), 0.0).unwrap(),
                PiecewiseFn::constant(bp.clone(), 0.0).unwrap(),
            ],
            vec![
                PiecewiseFn::constant(bp.clone(), 0.0).unwrap(),
                PiecewiseFn::constant(bp, 0.0).unwrap(),
            ],
        )
        .unwrap();
        let z = Trajectory::new(
            vec![0.0, 1.0],
            vec![vec![0.0, 0.0]; 2],
            Interpolation::PiecewiseLinear,
        )
        .unwrap();
        let fr = check_beta_fr(&inst, &z, 0.125).unwrap();
        assert_eq!(fr.kind, CertificateKind::BetaFR);
        assert!((fr.det_lower_bound - 1.0).abs() < 1e-12);

        // full rank makes regularity hold with the whole beta-active set
        let rc = check_beta_rc(&inst, &z, 0.125).unwrap();
        assert_eq!(rc.kind, CertificateKind::BetaRC);
        for node in &rc.nodes {
            assert_eq!(node.isharp, node.ibeta);
        }
    }

    #[test]
    fn isharp_selection_cases() {
        // near-horizon rows of the bundled instance: the middle ray is
        // interior to the cone of the outer two
        let rows =
            DenseMatrix::from_rows(vec![vec![1.0, -1.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(select_isharp(&rows).unwrap(), vec![0, 2]);

        let single = DenseMatrix::from_rows(vec![vec![2.0, 1.0]]).unwrap();
        assert_eq!(select_isharp(&single).unwrap(), vec![0]);

        let dup = DenseMatrix::from_rows(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(select_isharp(&dup).unwrap(), vec![0]);

        let colinear = DenseMatrix::from_rows(vec![vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let picked = select_isharp(&colinear).unwrap();
        assert_eq!(picked, vec![0]);
        assert!((gram_det(&colinear.select_rows(&picked)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cone_membership_cases() {
        let rows = DenseMatrix::from_rows(vec![vec![1.0, -1.0], vec![0.0, 1.0]]).unwrap();
        assert!(cone_member(&[1.0, 1.0], &rows).unwrap()); // 1*(1,-1) + 2*(0,1)
        let single = DenseMatrix::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        assert!(!cone_member(&[-1.0, 0.0], &single).unwrap());
        assert!(cone_member(&[0.0, 0.0], &single).unwrap());
    }

    #[test]
    fn recovery_matches_the_closed_form_multipliers() {
        let inst = example1();
        let z = reference_z(&[0.0, 0.5, 1.0], &[1.0, 1.5, 2.0]);
        let cert = check_beta_rc(&inst, &z, 0.125).unwrap();
        let rec = recover_multipliers(&inst, &z, 0.125, &cert).unwrap();
        let u = &rec.u;
        let expect = |t: f64, right: bool| -> Vec<f64> {
            if !right {
                vec![0.0, 0.0, 0.0, 1.0 - t, t]
            } else {
                vec![0.0, 0.0, t - 1.0, 0.0, t]
            }
        };
        let layout = [
            (0.0, false),
            (0.5, false),
            (1.0, false),
            (1.0, true),
            (1.5, true),
            (2.0, true),
        ];
        for (k, (t, right)) in layout.iter().enumerate() {
            let want = expect(*t, *right);
            for i in 0..5 {
                assert!(
                    (u.row(k)[i] - want[i]).abs() < 1e-9,
                    "node {k} (t = {t}) row {i}: {} vs {}",
                    u.row(k)[i],
                    want[i]
                );
            }
        }
        assert!(rec.min_multiplier >= -1e-12);
        // support stays within the selected subset
        for (k, node) in cert.nodes.iter().enumerate() {
            for i in 0..5 {
                if u.row(k)[i].abs() > 1e-12 {
                    assert!(node.isharp.contains(&i));
                }
            }
        }
    }

    #[test]
    fn recovery_with_zero_costs_gives_zero_multipliers() {
        let bp = Breakpoints::new(vec![0.0, 1.0]).unwrap();
        let inst = CTLPInstance::new(
            vec![vec![PiecewiseFn::constant(bp.clone(), 1.0).unwrap()]],
            vec![PiecewiseFn::constant(bp.clone(), 0.0).unwrap()],
            vec![PiecewiseFn::constant(bp, 0.0).unwrap()],
        )
        .unwrap();
        let z = Trajectory::new(
            vec![0.0, 1.0],
            vec![vec![0.0]; 2],
            Interpolation::PiecewiseLinear,
        )
        .unwrap();
        let cert = check_beta_fr(&inst, &z, 0.01).unwrap();
        let rec = recover_multipliers(&inst, &z, 0.01, &cert).unwrap();
        assert!(rec.u.values().iter().flatten().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn kkt_report_detects_corruption() {
        let inst = example1();
        let z = reference_z(&[0.0, 0.5, 1.0], &[1.0, 1.5, 2.0]);
        let u_good = Trajectory::new(
            z.times().to_vec(),
            vec![
                vec![0.0, 0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 0.5, 0.5],
                vec![0.0, 0.0, 0.0, 0.0, 1.0],
                vec![0.0, 0.0, 0.0, 0.0, 1.0],
                vec![0.0, 0.0, 0.5, 0.0, 1.5],
                vec![0.0, 0.0, 1.0, 0.0, 2.0],
            ],
            Interpolation::PiecewiseLinear,
        )
        .unwrap();
        let report = check_kkt(&inst, &z, &u_good).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.stationarity_residual <= 1e-12);

        let zeros = Trajectory::new(
            z.times().to_vec(),
            vec![vec![0.0; 5]; 6],
            Interpolation::PiecewiseLinear,
        )
        .unwrap();
        let report = check_kkt(&inst, &z, &zeros).unwrap();
        assert!(!report.pass);
        assert!(report.stationarity_residual >= 1.0);

        // bump a multiplier on an active row: stationarity breaks, the
        // complementarity residual does not
        let mut bumped = u_good.values().to_vec();
        bumped[1][4] += 0.1;
        let u_bad =
            Trajectory::new(z.times().to_vec(), bumped, Interpolation::PiecewiseLinear).unwrap();
        let report = check_kkt(&inst, &z, &u_bad).unwrap();
        assert!(!report.pass);
        assert!((report.stationarity_residual - 0.1).abs() < 1e-9);
        assert!(report.complementarity_residual <= 1e-9);
    }

    #[test]
    fn lemma_constants_on_the_first_piece_block() {
        let inst = example1();
        let z = reference_z(&[0.0, 0.5, 1.0], &[1.0, 1.5, 2.0]);
        let w = lemma1_witness(&inst, &z, 0.125).unwrap();
        // rank-deficient block at the horizon: full rank fails overall but
        // the report stays consistent, with a positive singular value
        assert!(!w.full_rank_everywhere);
        assert!(w.consistent);
        assert_eq!(w.gram_det_bound, 0.0);
        assert!(w.sigma_min_bound > 0.0);

        // 2 * identity: sigma = 2, gram det = 16
        assert!(check_lemma1_constants(2.0, 16.0, 2.0, 2));
        // first-piece block of the bundled instance
        let sigma = ((3.0 - 5.0_f64.sqrt()) / 2.0).sqrt();
        assert!(check_lemma1_constants(sigma, 1.0, inst.data_bound(), 2));
    }

    #[test]
    fn sweep_reports_consistent_certificates() {
        let inst = example1();
        let z = standard_reference();
        let entries = beta_sweep(&inst, &z, 1e-3, 10.0, 5).unwrap();
        assert_eq!(entries.len(), 5);
        for e in &entries {
            // on this data, regularity implies the combined assumption
            assert_eq!(e.beta_a_holds, (e.rc_holds && e.isharp_in_i0) || e.fr_holds);
        }
        assert!(entries[0].rc_holds);
    }
}
