//! Spectral tools for parabolic evolution families generated by
//! pseudo-differential operators, Littlewood-Paley square functions and their
//! maximal-function bounds.

pub mod error;
pub mod grid;
pub mod quadrature;
pub mod rademacher;
pub mod evolution;
pub mod lp_decomp;
pub mod maximal_sharp;
pub mod square_function;
pub mod symbols;
pub mod util;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{ScalarField, SpaceTimeField, SpatialField, SpectralGrid};
pub use symbols::{Symbol, SymbolClass, SymbolSpec, TimeModulation};
