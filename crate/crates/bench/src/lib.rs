//! Measurement harness: operation counts and sizes against the published
//! cost tables, and wall-clock scaling experiments.

pub mod complexity;
pub mod fit;
pub mod grid;
pub mod scaling;
pub mod synth;

pub use complexity::{
    run_complexity_suite, write_complexity_csv, ComplexityRow, Operation, Scheme,
};
pub use fit::{linear_fit, LinearFit};
pub use grid::Grid;
pub use scaling::{run_scaling_suite, ScalingConfig, ScalingReport, Series};
