//! Piecewise-polynomial scalar functions of time on `[0, T]`.
//!
//! All time-varying problem data is represented as polynomial pieces over a
//! shared breakpoint partition. Evaluation at a breakpoint uses the piece
//! starting there (right-continuous convention); the horizon `T` belongs to
//! the last piece. Integration is exact: every integrand arising here is
//! itself piecewise polynomial, so closed-form antiderivatives apply.

use crate::error::{Error, Result};

/// Highest polynomial degree accepted for instance data.
pub const MAX_DATA_DEGREE: usize = 3;

/// Ordered partition `0 = t_0 < t_1 < ... < t_k = T` of the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints {
    points: Vec<f64>,
}

impl Breakpoints {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::input("breakpoints need at least two points"));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::input("breakpoints must be finite"));
        }
        if points[0] != 0.0 {
            return Err(Error::input(format!(
                "breakpoints must start at 0, got {}",
                points[0]
            )));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("breakpoints must be strictly increasing"));
        }
        Ok(Breakpoints { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn interval_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn interval_bounds(&self, i: usize) -> (f64, f64) {
        (self.points[i], self.points[i + 1])
    }

    /// Index of the piece owning `t` under the right-continuous convention.
    pub fn interval_of(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon()).contains(&t) {
            return Err(Error::domain(format!(
                "t = {t} outside [0, {}]",
                self.horizon()
            )));
        }
        let idx = self.points.partition_point(|p| *p <= t);
        Ok(idx.saturating_sub(1).min(self.interval_count() - 1))
    }

    /// Exact-match lookup of a breakpoint.
    pub fn position_of(&self, t: f64) -> Option<usize> {
        self.points.iter().position(|p| *p == t)
    }

    /// Union of two partitions over the same horizon.
    pub fn merge(&self, other: &Breakpoints) -> Result<Breakpoints> {
        if self.horizon() != other.horizon() {
            return Err(Error::input(format!(
                "cannot merge breakpoints with horizons {} and {}",
                self.horizon(),
                other.horizon()
            )));
        }
        let mut all: Vec<f64> = self
            .points
            .iter()
            .chain(other.points.iter())
            .copied()
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.dedup();
        Breakpoints::new(all)
    }
}

/// Dense polynomial with ascending coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        if coeffs.is_empty() {
            return Poly { coeffs: vec![0.0] };
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![0.0] }
    }

    pub fn constant(v: f64) -> Self {
        Poly { coeffs: vec![v] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        let mut d = self.coeffs.len() - 1;
        while d > 0 && self.coeffs[d] == 0.0 {
            d -= 1;
        }
        d
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let a = self.coeffs.get(i).copied().unwrap_or(0.0);
            let b = other.coeffs.get(i).copied().unwrap_or(0.0);
            *slot = a + b;
        }
        Poly::new(out)
    }

    pub fn scale(&self, k: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0; self.coeffs.len() + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i + 1] = c / (i as f64 + 1.0);
        }
        Poly::new(out)
    }

    /// Exact integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let f = self.antiderivative();
        f.eval(b) - f.eval(a)
    }
}

/// Scalar function of time: one polynomial per breakpoint interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    breakpoints: Breakpoints,
    pieces: Vec<Poly>,
}

impl PiecewiseFn {
    pub fn new(breakpoints: Breakpoints, pieces: Vec<Poly>) -> Result<Self> {
        if pieces.len() != breakpoints.interval_count() {
            return Err(Error::input(format!(
                "expected {} pieces, got {}",
                breakpoints.interval_count(),
                pieces.len()
            )));
        }
        for (i, p) in pieces.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::input(format!(
                    "piece {i} has non-finite coefficients"
                )));
            }
            if p.degree() > MAX_DATA_DEGREE {
                return Err(Error::input(format!(
                    "piece {i} has degree {} > {MAX_DATA_DEGREE}",
                    p.degree()
                )));
            }
        }
        Ok(PiecewiseFn {
            breakpoints,
            pieces,
        })
    }

    pub fn constant(breakpoints: Breakpoints, v: f64) -> Result<Self> {
        let n = breakpoints.interval_count();
        PiecewiseFn::new(breakpoints, vec![Poly::constant(v); n])
    }

    pub fn breakpoints(&self) -> &Breakpoints {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    pub fn horizon(&self) -> f64 {
        self.breakpoints.horizon()
    }

    /// Value at `t`, with the piece chosen right-continuously.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let i = self.breakpoints.interval_of(t)?;
        Ok(self.pieces[i].eval(t))
    }

    /// Value of a specific piece at `t`. Used for one-sided limits at
    /// breakpoints; `t` may be the closed right endpoint of piece `i`.
    pub fn eval_piece(&self, i: usize, t: f64) -> f64 {
        self.pieces[i].eval(t)
    }

    /// Exact integral over `[a, b]`, summed across the pieces it intersects.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&a) || !(0.0..=horizon).contains(&b) {
            return Err(Error::domain(format!("[{a}, {b}] outside [0, {horizon}]")));
        }
        if a > b {
            return Err(Error::domain(format!(
                "integration bounds reversed: {a} > {b}"
            )));
        }
        let mut total = 0.0;
        for (i, piece) in self.pieces.iter().enumerate() {
            let (lo, hi) = self.breakpoints.interval_bounds(i);
            let left = a.max(lo);
            let right = b.min(hi);
            if left < right {
                total += piece.integrate(left, right);
            }
        }
        Ok(total)
    }

    /// Re-express on a refined partition. Lossless: each new interval copies
    /// the polynomial of the old piece containing it.
    pub fn subdivide(&self, onto: &Breakpoints) -> Result<PiecewiseFn> {
        for p in self.breakpoints.points() {
            if onto.position_of(*p).is_none() {
                return Err(Error::input(format!(
                    "target breakpoints drop original point {p}"
                )));
            }
        }
        let mut pieces = Vec::with_capacity(onto.interval_count());
        for i in 0..onto.interval_count() {
            let (lo, _) = onto.interval_bounds(i);
            let owner = self.breakpoints.interval_of(lo)?;
            pieces.push(self.pieces[owner].clone());
        }
        Ok(PiecewiseFn {
            breakpoints: onto.clone(),
            pieces,
        })
    }

    pub fn add(&self, other: &PiecewiseFn) -> Result<PiecewiseFn> {
        if self.breakpoints != other.breakpoints {
            return Err(Error::input(
                "piecewise functions have different breakpoints",
            ));
        }
        let pieces = self
            .pieces
            .iter()
            .zip(&other.pieces)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(PiecewiseFn {
            breakpoints: self.breakpoints.clone(),
            pieces,
        })
    }

    pub fn scale(&self, k: f64) -> PiecewiseFn {
        PiecewiseFn {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.scale(k)).collect(),
        }
    }
}

/// A grid node: a time and the breakpoint interval that owns it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    pub t: f64,
    pub interval: usize,
}

/// Sample times for pointwise work, each tagged with its owning interval so
/// piecewise data never straddles pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<GridNode>,
}

impl TimeGrid {
    pub fn new(nodes: Vec<GridNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::input("time grid must be nonempty"));
        }
        if nodes.windows(2).any(|w| w[0].t > w[1].t) {
            return Err(Error::input("time grid must be sorted"));
        }
        Ok(TimeGrid { nodes })
    }

    pub fn nodes(&self) -> &[GridNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.t).collect()
    }

    pub fn contains_time(&self, t: f64) -> bool {
        self.nodes.iter().any(|n| n.t == t)
    }

    /// True when every breakpoint appears among the grid times.
    pub fn covers_breakpoints(&self, bp: &Breakpoints) -> bool {
        bp.points().iter().all(|p| self.contains_time(*p))
    }
}

/// Grid containing every breakpoint plus `nodes_per_interval - 1` equally
/// spaced interior nodes per interval.
pub fn refine_grid(bp: &Breakpoints, nodes_per_interval: usize) -> Result<TimeGrid> {
    if nodes_per_interval < 1 {
        return Err(Error::input("nodes_per_interval must be >= 1"));
    }
    let mut nodes = Vec::new();
    for i in 0..bp.interval_count() {
        let (lo, hi) = bp.interval_bounds(i);
        let h = (hi - lo) / nodes_per_interval as f64;
        for k in 0..nodes_per_interval {
            // k = 0 reproduces the breakpoint exactly
            nodes.push(GridNode {
                t: lo + k as f64 * h,
                interval: i,
            });
        }
    }
    nodes.push(GridNode {
        t: bp.horizon(),
        interval: bp.interval_count() - 1,
    });
    TimeGrid::new(nodes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bp(points: &[f64]) -> Breakpoints {
        Breakpoints::new(points.to_vec()).unwrap()
    }

    #[test]
    fn eval_uses_right_continuous_piece() {
        // pieces: t - 1 on [0,1), -t + 1 on [1,2]
        let f = PiecewiseFn::new(
            bp(&[0.0, 1.0, 2.0]),
            vec![Poly::new(vec![-1.0, 1.0]), Poly::new(vec![1.0, -1.0])],
        )
        .unwrap();
        assert_eq!(f.eval(0.0).unwrap(), -1.0);
        assert_eq!(f.eval(1.0).unwrap(), 0.0); // right piece owns t = 1
        assert_eq!(f.eval(2.0).unwrap(), -1.0); // horizon owned by last piece
    }

    #[test]
    fn eval_constant_and_monomial() {
        let c = PiecewiseFn::constant(bp(&[0.0, 2.0]), 5.0).unwrap();
        assert_eq!(c.eval(1.7).unwrap(), 5.0);

        let sq = PiecewiseFn::new(bp(&[0.0, 2.0]), vec![Poly::new(vec![0.0, 0.0, 1.0])]).unwrap();
        assert_eq!(sq.eval(1.5).unwrap(), 2.25);
    }

    #[test]
    fn eval_outside_domain_is_error() {
        let c = PiecewiseFn::constant(bp(&[0.0, 2.0]), 1.0).unwrap();
        assert!(c.eval(-0.1).is_err());
        assert!(c.eval(2.1).is_err());
    }

    #[test]
    fn integrate_quadratic_pieces_exactly() {
        // -(5/8)t^2 + (11/4)t - 3 on [0,1]
        let f =
            PiecewiseFn::new(bp(&[0.0, 1.0]), vec![Poly::new(vec![-3.0, 2.75, -0.625])]).unwrap();
        let v = f.integrate(0.0, 1.0).unwrap();
        assert!((v - (-11.0 / 6.0)).abs() < 1e-15, "got {v}");

        // -(5/8)t^2 - (1/4)t on [1,2] (shift domain to [0,2] with two pieces)
        let g = PiecewiseFn::new(
            bp(&[0.0, 1.0, 2.0]),
            vec![Poly::zero(), Poly::new(vec![0.0, -0.25, -0.625])],
        )
        .unwrap();
        let v = g.integrate(1.0, 2.0).unwrap();
        assert!((v - (-11.0 / 6.0)).abs() < 1e-15, "got {v}");
    }

    #[test]
    fn integrate_zero_function() {
        let z = PiecewiseFn::constant(bp(&[0.0, 1.0, 2.0]), 0.0).unwrap();
        assert_eq!(z.integrate(0.3, 1.8).unwrap(), 0.0);
    }

    #[test]
    fn integrate_rejects_reversed_bounds() {
        let z = PiecewiseFn::constant(bp(&[0.0, 2.0]), 1.0).unwrap();
        assert!(z.integrate(1.5, 0.5).is_err());
    }

    #[test]
    fn refine_grid_examples() {
        let g = refine_grid(&bp(&[0.0, 1.0, 2.0]), 2).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(
            g.nodes().iter().map(|n| n.interval).collect::<Vec<_>>(),
            vec![0, 0, 1, 1, 1]
        );

        let g = refine_grid(&bp(&[0.0, 2.0]), 1).unwrap();
        assert_eq!(g.times(), vec![0.0, 2.0]);

        let points = [0.0, 1.0, 1.9, 2.0];
        let g = refine_grid(&bp(&points), 1).unwrap();
        assert_eq!(g.times(), points.to_vec());
    }

    #[test]
    fn refine_grid_requires_positive_density() {
        assert!(refine_grid(&bp(&[0.0, 1.0]), 0).is_err());
    }

    fn random_pw(rng: &mut ChaCha8Rng) -> PiecewiseFn {
        let b = bp(&[0.0, 0.7, 1.3, 2.0]);
        let pieces = (0..3)
            .map(|_| Poly::new((0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()))
            .collect();
        PiecewiseFn::new(b, pieces).unwrap()
    }

    #[test]
    fn integral_is_additive_over_split_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let f = random_pw(&mut rng);
            let (a, c, b) = {
                let mut v = [
                    rng.gen_range(0.0..2.0),
                    rng.gen_range(0.0..2.0),
                    rng.gen_range(0.0..2.0),
                ];
                v.sort_by(|x, y| x.partial_cmp(y).unwrap());
                (v[0], v[1], v[2])
            };
            let whole = f.integrate(a, b).unwrap();
            let split = f.integrate(a, c).unwrap() + f.integrate(c, b).unwrap();
            let scale = 1.0_f64.max(whole.abs());
            assert!((whole - split).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn integral_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let f = random_pw(&mut rng);
            let g = random_pw(&mut rng);
            let alpha: f64 = rng.gen_range(-3.0..3.0);
            let lhs = f.scale(alpha).add(&g).unwrap().integrate(0.0, 2.0).unwrap();
            let rhs = alpha * f.integrate(0.0, 2.0).unwrap() + g.integrate(0.0, 2.0).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn breakpoint_eval_matches_owning_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let f = random_pw(&mut rng);
            for (i, p) in f.breakpoints().points().iter().enumerate().skip(1) {
                let piece = i.min(f.pieces().len() - 1);
                assert_eq!(f.eval(*p).unwrap(), f.pieces()[piece].eval(*p));
            }
        }
    }

    #[test]
    fn subdivide_preserves_values() {
        let f = PiecewiseFn::new(
            bp(&[0.0, 1.0, 2.0]),
            vec![Poly::new(vec![-1.0, 1.0]), Poly::new(vec![1.0, -1.0])],
        )
        .unwrap();
        let fine = f.subdivide(&bp(&[0.0, 0.5, 1.0, 1.5, 2.0])).unwrap();
        for t in [0.0, 0.25, 0.5, 0.99, 1.0, 1.5, 2.0] {
            assert_eq!(f.eval(t).unwrap(), fine.eval(t).unwrap());
        }
    }

    #[test]
    fn data_degree_is_capped() {
        let r = PiecewiseFn::new(bp(&[0.0, 1.0]), vec![Poly::new(vec![0.0; 5])]);
        assert!(r.is_ok()); // degree collapses to 0: trailing zeros
        let r = PiecewiseFn::new(
            bp(&[0.0, 1.0]),
            vec![Poly::new(vec![0.0, 0.0, 0.0, 0.0, 1.0])],
        );
        assert!(r.is_err());
    }

    #[test]
    fn breakpoint_validation() {
        assert!(Breakpoints::new(vec![0.0]).is_err());
        assert!(Breakpoints::new(vec![0.5, 1.0]).is_err());
        assert!(Breakpoints::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(Breakpoints::new(vec![0.0, 2.0, 1.0]).is_err());
    }
}
