//! Metric-space toolkit built around compressed cover trees: k-nearest
//! neighbors, minimum spanning trees, single-linkage mergegrams, kernel
//! density estimation and skeletonization of noisy graph samples.

pub mod cli;
pub mod cover_tree;
pub mod datasets;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod io;
pub mod kde;
pub mod knn;
pub mod mergegram;
pub mod metric;
pub mod mst;
pub mod skeleton;

pub use error::{Error, Result};

/// Guide chapters compiled as doc-tests so their examples stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/metric.md")]
    mod metric {}
    #[doc = include_str!("../../../book/src/cover_tree.md")]
    mod cover_tree {}
    #[doc = include_str!("../../../book/src/knn.md")]
    mod knn {}
    #[doc = include_str!("../../../book/src/mst.md")]
    mod mst {}
    #[doc = include_str!("../../../book/src/mergegram.md")]
    mod mergegram {}
    #[doc = include_str!("../../../book/src/kde.md")]
    mod kde {}
    #[doc = include_str!("../../../book/src/skeleton.md")]
    mod skeleton {}
    #[doc = include_str!("../../../book/src/datasets_cli.md")]
    mod datasets_cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
