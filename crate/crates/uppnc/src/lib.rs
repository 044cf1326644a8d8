//! Exact min-plus operators on ultimately pseudo-periodic piecewise-affine
//! curves, with window flow-control analysis built on top.

pub mod curves;
pub mod minimize;
pub mod minplus;
pub mod cli;
pub mod error;
pub mod flowcontrol;
pub mod numerics;
pub mod oracles;
pub mod subadd;

pub use curves::{Curve, Element, Interval, Point, Segment, Sequence};
pub use error::{Error, Result};
pub use numerics::{ExtendedRational, Rational};
