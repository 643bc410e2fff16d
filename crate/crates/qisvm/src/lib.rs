//! Sampling-based least-squares SVM.
//!
//! This crate trains and evaluates a least-squares support vector machine
//! without ever forming the kernel matrix. It keeps the data in sampling
//! trees that support length-square draws in logarithmic time, sketches
//! the Gram structure through a two-stage column/row subsample, estimates
//! every inner product with a median-of-means trace estimator, and scores
//! query points from the sketch alone. Exact dense solvers, a dataset
//! generator and experiment harnesses are included for reference and
//! testing.
//!
//! The narrative guide in `book/` walks through each stage; its code
//! snippets are compiled as doc-tests via [`guide`].

pub mod access;
pub mod baseline;
pub mod error;
pub mod kernels;
pub mod model;
pub mod rng;
pub mod sketch;
pub mod store;
pub mod subsample;

pub use access::SampleAccess;
pub use error::{Error, Result};
