//! Recovering the core order of tensor-ring and tensor-train
//! representations from entry queries.

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod matricize;
pub mod oracle;
pub mod recover;
pub mod seed;
pub mod tensor_core;

pub use error::{Error, Result};
