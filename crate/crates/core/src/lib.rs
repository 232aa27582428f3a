//! Numerical toolkit for the dynamics of complex polynomial iteration.
//!
//! The crate computes, at double precision and desk scale:
//!
//! * escape-rate (Green) functions `G_f` of the basin of infinity and
//!   their holomorphic derivative `g = ∂G_f/∂z` ([`green`]),
//! * Schwarzian derivatives and nonlinearities of iterates `f^n`,
//!   normalized by `d^{2n}` resp. `d^n`, accumulated overflow-safely
//!   through an extended-exponent representation ([`schwarzian`],
//!   [`scaled`]),
//! * level curves of `G_f`, their flat-metric circumferences and the
//!   annulus invariants of the induced tree structure ([`levelset`]),
//! * curve lengths and area integrals in the conformal metrics of
//!   quadratic differentials ([`metric`]),
//! * the affine equivalence of polynomials through their critical
//!   multisets ([`equiv`]).
//!
//! Grid sweeps (`green::green_grid`, `metric::l_half_distance`,
//! `metric::convergence_table`) run data-parallel under the default
//! `parallel` feature and fall back to sequential loops without it.
//! Both paths produce bit-identical results: per-node work is
//! independent and reductions use a fixed pairwise summation order.

pub mod equiv;
pub mod error;
pub mod green;
pub mod levelset;
pub mod metric;
pub(crate) mod par;
pub mod poly;
pub mod region;
pub mod scaled;
pub mod schwarzian;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use poly::{AffineMap, CriticalPoint, Poly};
pub use region::Region;
pub use scaled::ScaledComplex;
