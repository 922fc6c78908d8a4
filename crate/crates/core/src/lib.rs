//! Finite combinatorics and entropy for actions of amenable groups.
//!
//! The crate covers integer lattices and the discrete Heisenberg group:
//! Følner invariance, quasi-tilings, spread sets, shift systems with exact
//! window distributions, flat distributions, and castles on finite torus
//! models together with an explicit orbit change to a cyclic action.

pub mod castles;
pub mod error;
pub mod flatness;
pub mod foelner;
pub mod group;
pub mod quasitile;
pub mod model;
pub mod ratio;
pub mod spreadset;
pub mod symbolic;
pub mod subset;

pub use error::{Error, Result};
pub use group::{enumerate, GroupElement, GroupSpec};
pub use ratio::Ratio;
pub use subset::{diff_set, inv_set, product_set, FiniteSubset};
