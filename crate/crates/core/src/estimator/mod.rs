//! The minimax-rate entropy estimator.
//!
//! The sample is split into three blocks of `n` points. The first block
//! decides, point by point, whether `f_h(x)` is small (non-smooth regime)
//! or not. Small values are handled by an unbiased estimate of the best
//! polynomial approximation of `-t ln t` built from the second block; the
//! rest by a second-order Taylor-corrected plug-in that uses the second
//! and third blocks. The pointwise map is then integrated over the
//! support of `f_h`.

mod integrate;
mod params;
mod pointwise;
mod unbounded;

pub use integrate::{estimate_entropy, EstimateResult};
pub use params::{
    classify_regime, h2_smooth, select_parameters, EstimatorConfig, IntegrationMode, Parameters, Regime,
};
pub use pointwise::{pointwise_estimate, PointEstimate, PointwiseEvaluator, SplitSamples};
pub use unbounded::{estimate_entropy_unbounded, OrliczTail};

pub(crate) use integrate::{cached_poly, domain, exact_nodes_1d, grid_nodes, grid_size, weighted_sum};
