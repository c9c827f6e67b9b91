//! Event-camera and intensity-frame fusion (EAS) plus a sparse optical-flow
//! 3-DoF rotation estimator and the tooling needed to evaluate it.
//!
//! The crate is organised bottom-up:
//!
//! - [`dataset_io`]: on-disk dataset layout, domain types, trajectory/plot writers
//! - [`representations`]: event slices, time surfaces, SITS, histogram equalization
//! - [`fusion`]: Events Aggregation and Superimposition
//! - [`tracking`]: Shi-Tomasi corners and pyramidal Lucas-Kanade
//! - [`rotation_estimation`]: essential matrix RANSAC, rotation recovery, chaining
//! - [`evaluation`]: association, alignment, APE, Euler export
//! - [`synthetic`]: rotating-camera simulator used as a ground-truth oracle
//! - [`experiment`]: per-source driver that ties everything together

pub mod dataset_io;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod fusion;
pub mod geometry;
pub mod image;
pub mod representations;
pub mod rotation_estimation;
pub mod synthetic;
pub mod tracking;

pub use error::{Error, Result};
