//! Isoperimetric, spectral and Littlewood-norm invariants of Cayley graphs.
//!
//! The crate is organised by subsystem:
//!
//! * [`groups`]: group backends with canonical normal forms, symmetric sets, balls;
//! * [`cayley`]: boundary/edge/loop counts, Cheeger upper bounds, `e` and `mad`;
//! * [`spectral`]: convolution, return probabilities, compression norms, Cheeger
//!   inequality checks and the rapid-decay ratio scan;
//! * [`littlewood`]: `l^p` norms, the `N'` norm, the box trick, the free-group
//!   `T_1` decomposition and the quotient lift;
//! * [`cogrowth`]: reduced-word kernel counts and Grigorchuk's formula;
//! * [`forests`]: uniform spanning trees and the forest norm inequality;
//! * [`colouring`]: degeneracy colouring on Cayley balls;
//! * [`exponents`]: per-set exponent terms and threshold classification;
//! * [`cli`]: job configs, reports and the self-check battery.

pub mod cayley;
pub mod cli;
pub mod cogrowth;
pub mod colouring;
pub mod error;
pub mod exponents;
pub mod forests;
pub mod graph;
pub mod groups;
pub mod littlewood;
pub mod provenance;
pub mod spectral;

pub use error::{Error, Result};
