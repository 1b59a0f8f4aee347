//! Classification of Hopf bifurcations in one-parameter families of
//! polynomial planar vector fields.
//!
//! The crate computes the averaging coefficients of the equivalent
//! second-order oscillator, measures the same discriminant directly from the
//! flow, classifies the bifurcation as non-degenerate or degenerate of first
//! or second kind, and checks predicted cycles against return maps.

pub mod atlas;
pub mod averaging;
pub mod canonical;
pub mod classify;
pub mod error;
pub mod field;
pub mod linalg;
pub mod ode;
pub mod poly;
pub mod quadrature;
pub mod regression;
pub mod report;
pub mod roots;
pub mod tracking;
pub mod verify;

pub use error::{Error, Result};
pub use field::{ParamCurve, ParamField, PlanarField, SignedPower};
