//! Exact computations in the lattice vertex superalgebras `V_{sqrt(D) Z}`:
//! Fibonacci-configuration bases, vertex-operator modes on Fock modules,
//! straightening of mode monomials and the functional realization of the
//! dual of the basic subspace.

pub mod dual;
pub mod error;
pub mod fib;
pub mod fock;
pub mod lattice;
pub mod linalg;
pub mod modes;
pub mod partitions;
pub mod quad;
pub mod series;
pub mod straighten;

pub use error::{Error, Result};
pub use lattice::Lattice;
pub use quad::QuadScalar;
