//! 2D FDTD workbench for learned absorbing boundaries.
//!
//! The crate simulates TEz electromagnetics on a Yee grid, truncated either
//! by a conventional convolutional PML, by a plain PEC wall, or by a one-cell
//! boundary layer driven by a trained differentiable decision forest. The
//! forest is trained on field data harvested at the PML interface of a
//! teacher run, and schemes are compared through a relative reflection-error
//! metric against an oversized reference grid.
//!
//! All numeric kernels are generic over the scalar type (`f32` or `f64`);
//! the `*64` aliases below fix the double-precision variants used by the
//! on-disk formats and the CLI.

pub mod dataset;
pub mod error;
pub mod forest;
pub mod grid;
pub mod harness;
pub mod learned;
pub mod pml;
pub mod scalar;
pub mod scene;
pub mod sim;
pub mod stencil;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type GridSpec64 = grid::GridSpec<f64>;
pub type FieldGrid64 = grid::FieldGrid<f64>;
pub type SourceSpec64 = grid::SourceSpec<f64>;
pub type Simulation64 = sim::Simulation<f64>;
pub type ProbeRecord64 = sim::ProbeRecord<f64>;
pub type PmlParams64 = pml::PmlParams<f64>;
pub type CpmlBoundary64 = pml::CpmlBoundary<f64>;
pub type Forest64 = forest::Forest<f64>;
pub type TrainConfig64 = forest::TrainConfig<f64>;
pub type SampleSet64 = dataset::SampleSet<f64>;
pub type DdfBoundary64 = learned::DdfBoundary<f64>;
pub type SceneSpec64 = scene::SceneSpec<f64>;
pub type ReflectionReport64 = harness::ReflectionReport<f64>;
