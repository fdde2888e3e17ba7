//! Simulation and certification of genuine multipartite entanglement (GME)
//! from bipartite Bell tests.
//!
//! The protocol implemented here dissociates a multipartite Bell experiment
//! into bipartite pieces: a covering graph assigns a Bell test to each edge,
//! the parties outside an edge are measured first (preparing a conditional
//! bipartite state per outcome branch), and the certified quantity is the
//! average Bell score over the covering. Biseparable states cannot push that
//! average above a bound fixed by the covering's global mincut, so exceeding
//! the bound certifies GME and lower-bounds the GME fraction of the source.

pub mod bell;
pub mod cli;
pub mod covering;
pub mod error;
pub mod fairsampling;
pub mod protocol;
pub mod qcore;
pub mod states;

pub use error::{Error, Result};
