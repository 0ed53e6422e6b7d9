pub mod criteria;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod mes;
pub mod preprocess;
pub mod regressors;
pub mod search;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::Matrix;
