//! Centroidal quadruped simulation with a QP force-balance controller and an
//! L1 adaptive augmentation.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptive;
pub mod controller;
pub mod gait;
pub mod plant;
pub mod qp;
pub mod scenario;
pub mod sim;
pub mod so3;
pub mod stability;
