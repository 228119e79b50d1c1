//! Green functions of discrete Schrödinger operators `H = −Δ + q` on the
//! half-line, on general sphere-decomposable graphs, on k-ary and percolated
//! trees and on loop-decorated binary trees, computed by backward Möbius
//! recursions and checked against finite truncations.

pub mod chain1d;
pub mod dist;
pub mod error;
pub mod halfplane;
pub mod looptree;
pub mod oracle;
pub mod percolation;
pub mod siegelgraph;
pub mod stream;
pub mod tree;

pub use error::{Error, Result};
pub use halfplane::{HPoint, SpectralParam};
