//! Exact Fourier coefficients of vector-valued Eisenstein series for the dual
//! Weil representation of an even lattice, and the classification of
//! holomorphic Borcherds products of singular weight over the catalog of
//! simple lattices of signature (2, n), n >= 3.
//!
//! The crate is organized around the pipeline
//!
//! ```text
//! lattice   -- catalog, discriminant groups L'/L, Q: L'/L -> Q/Z
//! local     -- representation numbers N_{gamma,n}(p^nu), local densities
//! arith     -- Kronecker symbol, Bernoulli numbers, exact L-values
//! eisenstein-- exact rational coefficients a_E(gamma, n), orbit tables
//! bounds    -- coefficient lower-bound constants and search caps
//! classify  -- singular-weight principal-part enumeration
//! theta     -- genus-2 theta constants and divisor verification
//! ```
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability, and `src/main.rs` for the batch command-line interface.

pub mod arith;
pub mod bounds;
pub mod classify;
pub mod cli;
pub mod eisenstein;
pub mod error;
pub mod lattice;
pub mod local;
pub mod theta;

pub use error::{Error, Result};
