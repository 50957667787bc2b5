//! Full-state-constrained formation control for vehicle platoons.
//!
//! The pipeline, per vehicle and axis:
//!
//! 1. [`graph`]: neighbor-based formation error `z1`.
//! 2. [`constraint`]: logarithmic map of the constrained velocity (and
//!    spacing) onto the real line.
//! 3. [`controller`]: backstepping, `alpha = -k1 z1`, `z2 = s_v - alpha`,
//!    input `u = m (-k2 z2 - W^T phi + alpha')`.
//! 4. [`rbf`]: online Gaussian RBF estimate of the unknown dynamics with a
//!    leakage-modified adaptive law.
//! 5. [`setm`]: switched event-triggered sample-and-hold of `u`.
//!
//! [`sim`] runs the closed loop against [`plant`] at a fixed step and
//! audits the result; [`scenario`] and [`report`] handle files.

pub mod constraint;
pub mod controller;
pub mod error;
pub mod graph;
pub mod plant;
pub mod rbf;
pub mod report;
pub mod scenario;
pub mod setm;
pub mod sim;

pub use error::{Error, Result};
pub use graph::Vec2;
