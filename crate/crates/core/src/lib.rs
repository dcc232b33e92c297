//! Quaternion-valued neural networks trained with GHR-calculus gradients.
//!
//! - [`quat`]: Hamilton quaternions, vectors and left-multiplying matrices.
//! - [`identities`]: involution identities used as a sanity suite.
//! - [`ghr`]: HR and GHR derivatives built from component partials, plus a
//!   finite-difference engine to check them.
//! - [`failures`]: routes where naive or HR product/chain rules go wrong,
//!   next to the GHR route that does not.
//! - [`nn`]: dense layers, split activations, analytic backward pass and a
//!   gradient checker.
//! - [`data`], [`model_io`]: teacher networks, synthetic datasets, text formats.
//! - [`train`]: the teacher-student SGD loop and its metrics.

pub mod data;
pub mod error;
pub mod failures;
pub mod ghr;
pub mod identities;
pub mod model_io;
pub mod nn;
pub mod quat;
pub mod rng;
mod textfmt;
pub mod train;

pub use data::{gen_dataset, load_dataset, make_teacher, save_dataset, Dataset};
pub use error::{Error, Result};
pub use failures::{demonstrate_rule_failures, FailureReport, RouteResult, Verdict};
pub use ghr::{
    ghr_derivative, hr_conjugate_derivative, hr_derivative, ComponentGradient, GhrDirection,
    HrVariant,
};
pub use model_io::{load_network, save_network};
pub use nn::{gradient_check, Activation, CheckReport, DenseLayer, Network};
pub use quat::{Axis, QMatrix, QVector, Quaternion};
pub use train::{train, EpochMetrics, TrainConfig, TrainOutcome};
