//! Simulation lab for panel-based benchmark channels.
//!
//! A benchmark is a panel distribution, a micro-instrument, an aggregation
//! map, and a panel size. This crate runs such benchmarks, controls what an
//! adaptive method may observe and what the evaluator may see, tests whether
//! swapping two benchmarks changes anything a method could notice, and plans
//! how many evaluation calls a comparison needs.
//!
//! | module | what it covers |
//! |---|---|
//! | [`channel`] | benchmark tuples, single calls, kernel estimates |
//! | [`guard`] | observation policies, canonicalization, seeded evaluation |
//! | [`agents`] | submit/observe loops and mean comparison |
//! | [`jpc`] | transcript-law audits and literal panel-change pairs |
//! | [`discrim`] | Gaussian KL, SNR, discriminability, sample-size planning |
//! | [`prompt_space`] | clause edit distance and prompt neighborhoods |
//! | [`audit`] | placebo provenance and drift tests |
//! | [`io`], [`judge`], [`experiments`] | files, judge endpoint, canned runs |

pub mod agents;
pub mod audit;
pub mod channel;
pub mod discrim;
pub mod experiments;
pub mod error;
pub mod guard;
pub mod io;
pub mod jpc;
pub mod judge;
pub mod prompt_space;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
