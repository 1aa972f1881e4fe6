//! Finite-sample validation: synthetic data, AMP, IRLS and Monte Carlo.

pub mod dataset;
pub mod interior_point;
pub mod irls;
pub mod iteration;
pub mod monte_carlo;

pub use dataset::{gen_dataset, gen_dataset_with, Dataset, DatasetSpec, Placement, Truth};
pub use interior_point::{interior_point_fit, InteriorPointFit};
pub use irls::{irls_fit, irls_fit_detailed, objective, IrlsFit};
pub use iteration::{amp_fit, empirical_slope, empirical_slope_root, AmpState};
pub use monte_carlo::{monte_carlo, monte_carlo_with, McConfig, McSummary, Solver, DEFAULT_REPS};
