//! Solver and optimality certifier for continuous-time linear programs with
//! piecewise-polynomial data.
//!
//! The problem: minimize `F(z) = integral_0^T c(t)' z(t) dt` over essentially
//! bounded `z` subject to `A(t) z(t) <= b(t)` almost everywhere in `[0, T]`,
//! where the entries of `A`, `b`, `c` are piecewise polynomials. Because
//! neither the constraint nor the objective couples time instants, the
//! problem decomposes into independent finite LPs, one per grid node.
//!
//! On top of the solver sit the certification tools: beta-active sets,
//! full-rank and cone-regularity certificates with explicit numeric
//! witnesses, Lagrange multiplier recovery through the Moore-Penrose
//! pseudo-inverse, KKT verification, and the duality suite (weak/strong
//! duality, complementary slackness, a dual-side full-rank hypothesis).
//!
//! Everything stated "almost everywhere" is asserted at grid nodes only.
//! Trajectories may carry two rows at an interior breakpoint for the two
//! one-sided limits of a jump.

pub mod certify;
pub mod duality;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod simplex;
pub mod solver;
pub mod timefunc;

pub use error::{Error, Result};
