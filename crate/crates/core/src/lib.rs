//! Effective atom number of a falling, expanding cold-atom cloud seen by a
//! Gaussian probe beam: mean values, saturation, fluctuations, cavity noise
//! and a Monte Carlo particle oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod cavity;
pub mod cloud;
pub mod effnum;
pub mod error;
pub mod fluct;
pub mod mc;
pub mod quad;
pub mod saturation;
pub mod special;

pub use beam::BeamParams;
pub use cavity::CavityParams;
pub use cloud::{time_scales, CloudParams, FallScale, TimeScales};
pub use effnum::EffNumInputs;
pub use error::{Error, Result};
pub use fluct::{ScaledFluctParams, Terms};
pub use saturation::OpticalParams;
