//! Lattice Boltzmann solvers for diffusion and advection-diffusion, with
//! property checkers for the discrete solutions.

pub mod boundary;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod lattice;
pub mod mrt;
pub mod reaction;
pub mod tensor;
pub mod transport;

pub use error::{LbmError, Result};
pub use lattice::{build_lattice, DistributionField, Grid, LatticeKind, LatticeModel, LatticeScale, NodeTag};
pub use tensor::Tensor2;
