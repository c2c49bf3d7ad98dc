//! Tuning-free variable screening by multiple grouping.
//!
//! [`screening::mug_screen`] intersects the Lasso support with group-Lasso
//! supports over `K` partitions of the variables, each selected at the path
//! point with `n` active groups. The `book/` directory of the repository is a
//! guide with runnable examples.

pub mod datagen;
pub mod error;
pub mod experiment;
pub mod grouping;
pub mod metrics;
pub mod partition;
pub mod problem;
pub mod screening;
pub mod solver;
pub mod support;

pub use error::{MugError, Result};
pub use partition::{group_support_to_variables, Grouping};
pub use problem::{normalize_columns, DesignProblem, GroundTruth};
pub use support::{intersect_supports, SupportSet};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/supports.md")]
    mod supports {}
    #[doc = include_str!("../../../book/src/groupings.md")]
    mod groupings {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/screening.md")]
    mod screening {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
}
