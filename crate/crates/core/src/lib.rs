pub mod constants;
pub mod driver;
pub mod error;
pub mod functionals;
pub mod inequalities;
pub mod manifold;
pub mod radial;
pub mod rearrange;

pub use error::{Error, Result};
