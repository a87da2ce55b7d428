//! Histogram-based differential entropy estimation with finite-sample
//! confidence bounds for Lipschitz densities.
//!
//! All entropies are in nats. The bound arithmetic, quantizer and plug-in
//! entropy are generic over [`Scalar`] (`f32` or `f64`); density models,
//! quadrature and the demonstration harnesses work in `f64`.
//!
//! ```
//! use entrobound::{estimators, DensityModel};
//!
//! let tent = DensityModel::tent(1).unwrap();
//! let samples = tent.sample(10_000, 7).unwrap();
//! let report = estimators::estimate_entropy_certified(&samples, 4.0, 0.1, None).unwrap();
//! let truth = tent.analytic_entropy().unwrap();
//! assert!((report.estimate - truth).abs() <= report.bound.total);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod densities;
pub mod error;
pub mod estimators;
pub mod histogram;
pub mod oracle;
pub mod rng;
pub mod samples;
pub mod scalar;

pub use bounds::{BoundParams, ConfidenceBound, DiscreteEntropyBounds};
pub use densities::{ContaminationSpec, DensityModel};
pub use error::{Error, Result};
pub use estimators::{DemoReport, EstimateKind, EstimateReport};
pub use histogram::{BinIndex, SparseHistogram};
pub use samples::{BoxSupport, Samples};
pub use scalar::Scalar;

pub type BoundParams64 = BoundParams<f64>;
pub type BoundParams32 = BoundParams<f32>;
pub type ConfidenceBound64 = ConfidenceBound<f64>;
pub type ConfidenceBound32 = ConfidenceBound<f32>;
pub type Samples64 = Samples<f64>;
pub type Samples32 = Samples<f32>;
pub type BoxSupport64 = BoxSupport<f64>;
