//! Numerical laboratory for a maximally modulated singular integral along the
//! moment curve: frequency decomposition, Gabor wave-packet model form with a
//! sparse-uniform dichotomy, time-frequency correlation level-set estimates,
//! and point-parabola incidence counting.

pub mod error;
pub mod fields;
pub mod gabor;
pub mod incidence;
pub mod levelset;
pub mod modelform;
pub mod numerics;
pub mod runner;
pub mod transform;
pub mod util;

pub use error::{LgcError, Result};
