//! Length spectrum of random octahedral hyperbolic 3-manifolds.
//!
//! A random 3-manifold is built by uniformly gluing `n` ideal right-angled
//! octahedra along their four non-adjacent faces, with a uniformly random
//! orientation per gluing. Closed geodesics correspond to cycles in the dual
//! 4-regular graph, and each cycle is labelled by a word over nine gluing
//! isometries in `SL(2, Z[i])`. As `n` grows, the number of geodesics with
//! length in a fixed window converges to a Poisson random variable whose
//! intensity is an explicit sum over equivalence classes of words.
//!
//! The crate computes that intensity exactly — enumeration of word classes
//! with geometric pruning, exact traces and translation lengths — and checks
//! the Poisson prediction against Monte-Carlo simulation of the gluing model.
//!
//! Modules:
//! - [`exactalg`]: Gaussian-integer matrices, traces, translation lengths.
//! - [`hypgeo`]: plane distances in the upper half-space, nesting, the
//!   length lower bound `J(r)` and its inverse.
//! - [`words`]: the word equivalence calculus and interval class enumeration.
//! - [`intensity`]: intensity of the limiting Poisson point process.
//! - [`randcomplex`]: the random gluing sampler, dual-graph cycles, cycle
//!   words and per-class counts.
//! - [`stats`]: factorial moments, Poisson fit diagnostics, covariances.

pub mod exactalg;
pub mod hypgeo;
pub mod intensity;
pub mod randcomplex;
pub mod stats;
pub mod words;

mod kahan;

use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum Error {
    #[error("cannot parse {input:?} as a word (unexpected {offending:?})")]
    WordParse { input: String, offending: char },

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("interval end {b} exceeds the feasibility ceiling {ceiling}")]
    IntervalCeiling { b: f64, ceiling: f64 },

    #[error("orbit of a length-{len} word has up to {bound} members; cap is {cap}")]
    OrbitTooLarge { len: usize, bound: u128, cap: u128 },

    #[error("orbit size of a length-{len} word does not fit in 128 bits")]
    OrbitSizeOverflow { len: usize },

    #[error("degenerate ideal triple: boundary points coincide")]
    DegenerateTriple,

    #[error("cycle length cap {requested} exceeds the supported maximum {max}")]
    CycleLengthCap { requested: usize, max: usize },

    #[error("number of cycles exceeds the cap {cap}")]
    CycleCountCap { cap: usize },

    #[error("gluing needs at least one octahedron")]
    EmptyGluing,
}

pub type Result<T> = std::result::Result<T, Error>;

pub use exactalg::{
    classify_isometry, letter_matrix, trace, translation_length, translation_length_of_trace,
    word_matrix, Direction, GaussInt, IsometryKind, Letter, Mat2, Word,
};
pub use hypgeo::{
    halfspace_nested, image_triple, j_of_r, plane_distance, plane_through, r_of_j,
    word_plane_distance, BoundaryPoint, IdealTriple, Plane,
};
pub use intensity::{class_intensity, interval_intensity, IntensityReport};
pub use randcomplex::{
    class_counts, collect_trial_batch, cycle_word, enumerate_cycles, is_simple, is_tangle_free,
    sample_gluing, Cycle, DualGraph, Gluing, TrialBatch, TrialConfig, Traversal,
};
pub use stats::{cross_covariance, factorial_moments, poisson_fit, ClassFit, FitReport};
pub use words::{
    a_transform, canonical, class_of, enumerate_classes, enumerate_classes_opts, orbit, star,
    EnumerationOptions, HyperbolicityFilter, SpectralLine, WordClass,
};
