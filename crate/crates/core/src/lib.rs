pub mod complexity;
pub mod dynamics;
pub mod entropy;
pub mod error;
pub mod measure;
pub mod numerics;
pub mod report;
pub mod space;
pub mod stats;
pub mod symbolic;

pub use error::{Error, Result};
