pub mod cli;
pub mod design;
pub mod destructive;
pub mod error;
pub mod estimation;
pub mod failure;
pub mod linalg;
mod lp;
pub mod model;
pub mod optim;
pub mod presets;
pub mod scenario;
pub mod stress;
pub mod time_plan;

pub use error::{Error, Result};
