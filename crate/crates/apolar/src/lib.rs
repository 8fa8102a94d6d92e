//! Exact evaluation of apolar inner products `<det X, g>` for symbolic
//! matrices `X` and skew-circuit-encoded polynomials `g`, the parameterized
//! detection problems that reduce to such an evaluation, and a laboratory
//! for the bilinear complexity of apolar algebras.
//!
//! The two engines differentiate `det X` gate by gate through the circuit:
//! the general engine keeps state over the `C(2d,d)` minors of `X`, and the
//! Hankel engine over the `F(2d+1) < phi^{2d}` maximal minors of the
//! triangular arrangement of a symbolic Hankel matrix. Everything defaults
//! to exact arbitrary-precision arithmetic; a modular mode is available as
//! an explicitly one-sided accelerator.

pub mod algebra;
pub mod circuit;
pub mod comb;
pub mod detect;
pub mod error;
pub mod formats;
pub mod hankel;
pub mod minor;
pub mod monomial;
pub mod poly;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{ArithMode, ExactScalar};
