//! Spectral computations on quantum trees of finite cone type.
//!
//! The crate models Schrödinger operators −d²/dx² + W with δ-couplings on
//! metric trees whose forward subtrees fall into finitely many isomorphism
//! classes, e.g. universal covers of finite quantum graphs. It computes:
//!
//! * fundamental solutions and Dirichlet spectra on single edges ([`edge`]),
//! * cone systems and structural conditions of base graphs ([`graph`]),
//! * the finite polynomial system for the per-label multipliers, its boundary
//!   values on the real axis and the resulting spectral bands ([`cone`]),
//! * Weyl-Titchmarsh functions, multipliers and Green's functions on explicit
//!   truncated trees, plus a residual suite for the algebraic identities that
//!   tie them together ([`green`]),
//! * seeded Monte Carlo diagnostics for random edge-length/coupling disorder:
//!   hyperbolic-metric continuity, inverse moments, distribution bounds and
//!   contraction coefficients ([`perturb`]),
//! * independent brute-force oracles: a dense finite-difference resolvent,
//!   the discrete vertex reduction of finite graphs, star-graph ground
//!   states and the closed-form regular tree ([`oracle`]).

pub mod cone;
pub mod edge;
pub mod energy;
pub mod error;
pub mod graph;
pub mod green;
pub mod hyperbolic;
pub mod ode;
pub mod oracle;
pub mod perturb;
pub mod potential;
pub mod quad;
pub mod tree;

pub use energy::ComplexEnergy;
pub use error::{Error, Result};
pub use potential::PotentialSpec;
