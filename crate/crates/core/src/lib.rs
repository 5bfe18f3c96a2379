//! Exact and certified computations for straight-line flow directions on
//! cyclic branched covers of the square torus: continued fractions of
//! saddle-connection directions, shortest-vector profiles along the
//! Teichmüller geodesic, lattice-point densities, and two tree/path
//! constructions of directions with prescribed divergence behaviour.

pub mod calibrate;
pub mod certificate;
pub mod cfrac;
pub mod constants;
pub mod density;
pub mod enumerate;
pub mod error;
pub mod expr;
pub mod lattice;
pub mod nonergodic;
pub mod profile;
pub mod real;
pub mod slow;

pub use error::{Error, Result};
pub use expr::Expr;
pub use lattice::{Direction, IntVec2, SVec, SlitConfig, VSet, WVec};
pub use real::Real;
