//! Hidden-variable sequence states and the collapse dynamics built on them.
//!
//! A physical state is an ordered sequence `gamma` of site labels plus one
//! phase per site. The wave function is derived from the label frequencies,
//! so many sequences map onto the same wave vector. Three stochastic update
//! rules act on the sequence (or directly on its frequencies) and drive it
//! to a single site with probability equal to the initial squared amplitude:
//!
//! * [`resample`]: regenerate the whole sequence from its own frequencies.
//! * [`randomwalk`]: zero-sum random increments on the frequencies.
//! * [`window`]: a sliding window that drops the first label and appends
//!   either a copy of the last one or a fresh draw.
//!
//! [`lattice`] holds the linear (non-collapsing) regime: a hard-wall
//! tridiagonal Hamiltonian and two time-stepping schemes. [`harness`] runs
//! many seeded trials of an engine, in parallel when the `parallel` feature
//! is enabled, and scores the outcome against the Born prediction.

pub mod draw;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod output;
pub mod randomwalk;
pub mod resample;
pub mod seed;
pub mod state;
pub mod stats;
pub mod trial;
pub mod window;

pub use draw::Draw;
pub use error::{Error, Result};
pub use state::{HiddenState, ProbVector, SampleMode, Site, WaveVector};
pub use trial::{Outcome, TrialResult};
