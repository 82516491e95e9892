//! Reconstruction of the state matrix and interaction graph of symmetric
//! linear networks `x' = X x` from a single measured trajectory.

pub mod cli;
pub mod dynsim;
pub mod error;
pub mod gramian;
pub mod io;
pub mod lpsolve;
pub mod lyap;
pub mod matrix;
pub mod netgraph;
pub mod reconstruct;

pub use dynsim::{expm_sym, simulate, simulate_discrete, sym_eig, SymEig, Trajectory};
pub use error::{Error, Result};
pub use matrix::{Matrix, SymMatrix};
pub use netgraph::{Graph, MatrixClass};
