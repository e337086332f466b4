//! Kinematic-feasibility simulator for mobile manipulation.

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod ee_motion;
pub mod env;
pub mod geometry;
pub mod gridmap;
pub mod robot;
pub mod worldgen;
