//! Exact and sampled analysis of s-wide replacement walks over F_2 Cayley
//! graphs, with the bias-amplification code built on top of them.
//!
//! ```
//! use widewalk::amplify::{check_bias_reduction_lemma, SignedFn, DEFAULT_DP_BUDGET};
//! use widewalk::walks::{ReplacementSystem, WalkParams};
//!
//! let sys = ReplacementSystem::standard(WalkParams::new(2, 3, 3, 6).unwrap()).unwrap();
//! let f = SignedFn::balanced(sys.outer_size()).unwrap();
//! let report = check_bias_reduction_lemma(&sys, &f, 6, DEFAULT_DP_BUDGET).unwrap();
//! assert!(report.rows[0].epsilon <= 1.0);
//! ```

pub mod amplify;
pub mod code;
pub mod config;
pub mod error;
pub mod gf2;
pub mod graphs;
pub mod hitting;
mod par;
pub mod report;
pub mod walks;

pub use error::{Error, Result};
