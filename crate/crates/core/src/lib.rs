// `!(x >= 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod mc;
pub mod algebra;
pub mod formulas;
pub mod measure;
pub mod memory;
pub mod numerics;
pub mod poisson1;
pub mod poisson2;
pub mod report;
pub mod suite;
pub mod walk;

pub use error::{Error, Result};
