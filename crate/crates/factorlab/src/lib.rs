//! Clique factors in randomly perturbed graphs, at desk scale.
//!
//! The crate provides:
//! - a dense bitset [`graph::Graph`] with clique enumeration, embedding
//!   counting and small structural utilities,
//! - generators for the extremal host families ([`hosts`]),
//! - a seeded, per-edge-coupled perturbation ([`perturb`]) making factor
//!   existence monotone in `p` for each seed,
//! - an exact three-valued `K_r`-factor engine ([`factor`]),
//! - the constructive procedures: local-search covers and absorbers
//!   ([`cover`]), the clique-harvest pipeline ([`harvest`]), spread-measure
//!   samplers and packings ([`spread`]), the extremal/non-extremal
//!   classification ([`classify`]),
//! - threshold experiments: sweeps, per-seed crossing bisection and
//!   exponent fits ([`lab`]).
//!
//! The `examples/` directory has one runnable example per capability, and
//! the thin `factorlab` binary exposes the same operations as subcommands.

pub mod bounds;
pub mod census;
pub mod classify;
pub mod cover;
pub mod elist;
pub mod error;
pub mod factor;
pub mod graph;
pub mod harvest;
pub mod hosts;
pub mod lab;
pub mod perturb;
pub mod rng;
pub mod spread;

pub use error::{Error, Result};
pub use graph::{Clique, Graph, VertexSet};
