//! Factor-number estimation for matrix-valued time series: simulation,
//! one-step and two-step ratio estimators, Monte Carlo and cross-validation
//! harnesses, and CSV/JSON plumbing.

pub mod dgp;
pub mod error;
pub mod estimation;
pub mod evaluation;
pub mod io;
pub mod linalg;
pub mod series;
