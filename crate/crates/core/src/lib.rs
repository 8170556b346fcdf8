//! Maxitive set functions, maxitive integrals and monotone large deviations.

pub mod analysis;
pub mod asymptotics;
pub mod concentration;
pub mod convex;
pub mod cramer;
pub mod error;
pub mod ext;
pub mod fixtures;
pub mod generate;
pub mod integral;
pub mod nonlinear;
pub mod numeric;
pub mod preorder;

pub use concentration::{
    capacity_from_concentration, concentration_from_capacity, Capacity, Concentration,
    ConcentrationDoc, IncreasingFn, RateFunction,
};
pub use error::{Error, Result};
pub use ext::ExtReal;
pub use preorder::{FinitePreorder, Subset, UpSetFamily};
