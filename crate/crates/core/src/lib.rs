//! Round-level simulation of speculative windowed decoding for surface-code
//! lattice-surgery programs.
//!
//! The crate is layered bottom-up:
//!
//! * [`program`] - instruction IR, JSON format and builtin programs
//! * [`graph`] - per-window matching graphs, noise sampling, boundary planes
//! * [`matching`] - reference minimum-weight matcher
//! * [`predictor`] - constant-depth boundary predictors
//! * [`windowing`] - spacetime tiling and source/sink assignment
//! * [`sim`] - the discrete-event pipeline engine
//! * [`experiments`] - harnesses behind the command-line tool

pub mod program;
pub mod graph;
pub mod matching;
pub mod predictor;
pub mod seed;
pub mod sim;
pub mod experiments;
pub mod windowing;
