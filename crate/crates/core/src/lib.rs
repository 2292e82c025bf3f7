pub mod baselines;
pub mod bench;
pub mod cli;
pub mod densities;
pub mod error;
pub mod estimator;
pub mod kernels;
pub mod linprog;
pub mod lower_bound;
pub mod numeric;
pub mod oracle;
pub mod parallel;
pub mod poly_approx;
pub mod u_stats;

pub use error::{Error, Result};
