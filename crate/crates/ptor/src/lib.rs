//! Abelian p-ramification torsion for real quadratic fields.
//!
//! The central quantity is v_p(#T_K), computed by the algebraic
//! decomposition v_p(#T_K) = v_p(#Cl^c_K) + delta_p(eps_K) + v_p(#W_K):
//! class numbers come from reduced-form cycles, the regulator part from
//! Fermat-quotient style valuations of the fundamental unit carried mod
//! p^N, and the root-of-unity part from a congruence rule. On top sit
//! the discriminant-range scans (successive extrema of delta_p and of
//! the gap Delta_p), the explicit-unit families, the cyclic cubic
//! enumeration, and the archimedean Brauer-Siegel comparator.
//!
//! Scans are data-parallel over rayon (default feature `parallel`) with
//! a sequential fold, so results are identical for any worker count.

pub mod archimedean;
pub mod cubic;
pub mod error;
pub mod exec;
pub mod families;
pub mod harness;
pub mod intbase;
pub mod quadfield;
pub mod torsion;

pub use error::{Error, Result};
