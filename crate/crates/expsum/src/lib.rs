//! L functions of one-variable exponential sums over finite fields,
//! computed two independent ways and compared on their q-adic Newton
//! polygons.
//!
//! The exact route ([`charsum`]) enumerates character sums in Z[zeta_p].
//! The p-adic route ([`dwork`]) builds a semilinear Frobenius matrix over
//! a two-step local tower ([`padic`]) and applies the trace formula. The
//! [`semilinear`] module triangularizes twisted matrices and verifies that
//! the q-adic polygon of the twisted power equals the p-adic polygon of
//! the single matrix; [`gnp`] evaluates the residue combinatorics behind
//! the asymptotic generic Newton polygon. All polygon arithmetic is exact
//! rational ([`polygon`]).

pub mod charsum;
pub mod cyclotomic;
pub mod dwork;
pub mod error;
pub mod fields;
pub mod gnp;
pub mod padic;
pub mod polygon;
pub mod semilinear;
pub mod util;

pub use charsum::{MonicPoly, Oracle};
pub use error::{Error, Result};
pub use polygon::{Ordinate, Polygon};
