//! Monic orthogonal polynomials for Laguerre-type, Jacobi-type, and
//! shifted-Jacobi-type weights with all endpoint exponents in (-1, inf),
//! evaluated at arbitrary working precision.
//!
//! The crate constructs recurrence tables by the Stieltjes inner-product
//! recursion over absorbed-singularity Gauss quadrature, evaluates the
//! ladder-operator coefficients A_n(z), B_n(z) for all three families
//! (including jump and Fisher-Hartwig corrections), assembles the
//! Riemann-Hilbert matrix Y(z) from Cauchy transforms, and verifies the
//! ladder relations, the compatibility conditions S1/S2/S2', det Y = 1, the
//! Cauchy commutation identity, the closed-form R(z) = Y'(z) Y(z)^-1 element
//! formulas, and the t-differential identities of the named example families
//! to working precision.

// Comparisons written as `!(x > 0)` are deliberate: they reject NaN along
// with non-positive values, which `x <= 0` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod closedforms;
pub mod error;
pub mod ladder;
pub mod opcore;
pub mod precision;
pub mod presets;
pub mod quadrature;
pub mod rhp;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use precision::{CFloat, Ctx, Real};
pub use weights::{Atom, Exponents, Family, FhSpec, JumpPoint, JumpSpec, WeightSpec};
