//! Shared helpers for the integration suites: closed-form reference
//! trajectories for the bundled instance, random problem generators, and an
//! independent symmetric eigensolver used as an oracle.

#![allow(dead_code)]

use ctlp::instance::{CTLPInstance, Interpolation, Trajectory};
use ctlp::linalg::DenseMatrix;
use ctlp::simplex::FiniteLP;
use ctlp::timefunc::{Breakpoints, PiecewiseFn, Poly};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Optimal primal trajectory of the bundled instance: one closed form per
/// piece, with a jump at t = 1.
pub fn reference_z_at(t: f64, piece: usize) -> Vec<f64> {
    if piece == 0 {
        vec![2.75 - 0.625 * t, 0.25 + 0.625 * t]
    } else {
        vec![0.25 + 0.625 * t, 0.25 + 0.625 * t]
    }
}

/// Optimal multipliers of the bundled instance.
pub fn reference_u_at(t: f64, piece: usize) -> Vec<f64> {
    if piece == 0 {
        vec![0.0, 0.0, 0.0, 1.0 - t, t]
    } else {
        vec![0.0, 0.0, t - 1.0, 0.0, t]
    }
}

/// Optimal slacks of the bundled instance.
pub fn reference_y_at(t: f64, piece: usize) -> Vec<f64> {
    let z = reference_z_at(t, piece);
    if piece == 0 {
        vec![z[1], z[0], z[0] - z[1], 0.0, 0.0]
    } else {
        vec![z[1], z[0], 0.0, 3.0 - z[0] - z[1], 0.0]
    }
}

/// Times in `[0, 1]` then `[1, 2]`, duplicating the breakpoint so both
/// one-sided limits are sampled.
pub fn reference_times(nodes_per_piece: usize) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    for k in 0..=nodes_per_piece {
        out.push((k as f64 / nodes_per_piece as f64, 0));
    }
    for k in 0..=nodes_per_piece {
        out.push((1.0 + k as f64 / nodes_per_piece as f64, 1));
    }
    out
}

fn assemble(samples: &[(f64, usize)], f: impl Fn(f64, usize) -> Vec<f64>) -> Trajectory {
    let times: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
    let values: Vec<Vec<f64>> = samples.iter().map(|(t, p)| f(*t, *p)).collect();
    Trajectory::new(times, values, Interpolation::PiecewiseLinear).unwrap()
}

pub fn reference_z(samples: &[(f64, usize)]) -> Trajectory {
    assemble(samples, reference_z_at)
}

pub fn reference_u(samples: &[(f64, usize)]) -> Trajectory {
    assemble(samples, reference_u_at)
}

pub fn reference_w(samples: &[(f64, usize)]) -> Trajectory {
    assemble(samples, |t, p| {
        reference_u_at(t, p).into_iter().map(|v| -v).collect()
    })
}

/// Random dense matrix with entries uniform in [-1, 1].
pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, rng.gen_range(-1.0..1.0));
        }
    }
    m
}

/// Random finite LP with integer data in [-3, 3], n <= 3, m <= 6.
pub fn random_finite_lp(rng: &mut ChaCha8Rng) -> FiniteLP {
    let n = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=6);
    let mut a = DenseMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a.set(i, j, rng.gen_range(-3..=3) as f64);
        }
    }
    let b = (0..m).map(|_| rng.gen_range(-3..=3) as f64).collect();
    let c = (0..n).map(|_| rng.gen_range(-3..=3) as f64).collect();
    FiniteLP::new(a, b, c).unwrap()
}

/// Random continuous-time instance built to be pointwise feasible (the
/// origin is strictly interior) and bounded (box rows): A is constant per
/// piece, b affine per piece, c affine (or constant when `constant_costs`).
pub fn random_instance(rng: &mut ChaCha8Rng, constant_costs: bool) -> CTLPInstance {
    let bp = Breakpoints::new(vec![0.0, 1.0, 2.0]).unwrap();
    let n = rng.gen_range(1..=2usize);
    let extra = rng.gen_range(1..=2usize);

    let constant = |v: f64| Poly::constant(v);
    let affine =
        |rng: &mut ChaCha8Rng| Poly::new(vec![rng.gen_range(0.5..2.0), rng.gen_range(-0.2..0.2)]);

    let mut a: Vec<Vec<PiecewiseFn>> = Vec::new();
    let mut b: Vec<PiecewiseFn> = Vec::new();
    // box rows keep every pointwise region bounded
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let row: Vec<PiecewiseFn> = (0..n)
                .map(|jj| {
                    let v = if jj == j { sign } else { 0.0 };
                    PiecewiseFn::new(bp.clone(), vec![constant(v), constant(v)]).unwrap()
                })
                .collect();
            a.push(row);
            b.push(PiecewiseFn::new(bp.clone(), vec![affine(rng), affine(rng)]).unwrap());
        }
    }
    for _ in 0..extra {
        let row: Vec<PiecewiseFn> = (0..n)
            .map(|_| {
                let left = rng.gen_range(-2..=2) as f64;
                let right = rng.gen_range(-2..=2) as f64;
                PiecewiseFn::new(bp.clone(), vec![constant(left), constant(right)]).unwrap()
            })
            .collect();
        a.push(row);
        b.push(PiecewiseFn::new(bp.clone(), vec![affine(rng), affine(rng)]).unwrap());
    }

    let c: Vec<PiecewiseFn> = (0..n)
        .map(|_| {
            let piece = |rng: &mut ChaCha8Rng| {
                if constant_costs {
                    constant(rng.gen_range(-2.0..2.0))
                } else {
                    Poly::new(vec![rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0)])
                }
            };
            PiecewiseFn::new(bp.clone(), vec![piece(rng), piece(rng)]).unwrap()
        })
        .collect();

    CTLPInstance::new(a, b, c).unwrap()
}

/// Eigenvalues of a symmetric matrix by classical two-sided Jacobi,
/// non-increasing. Independent of the SVD path under test.
pub fn sym_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    for _ in 0..100 {
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m.get(i, j).abs());
            }
        }
        if off <= 1e-14 * (1.0 + m.max_abs()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}

/// Print the per-criterion verdict line and assert it.
pub fn criterion(name: &str, pass: bool, detail: String) {
    println!("{name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}
