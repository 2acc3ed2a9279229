//! Ricci-flow-guided manifold autoencoders for time-dependent PDE data.

pub mod autodiff;
pub mod closed_forms;
pub mod error;
pub mod eval_export;
pub mod geometry;
pub mod nn;
pub mod pde_data;
pub mod training;

pub use error::{Error, Result};
