//! Headless traffic digital-twin kernel.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod behavior;
pub mod cosim;
pub mod experiment;
pub mod ingest;
pub mod model;
pub mod procgen;
pub mod signals;
pub mod sim;
pub mod v2x;
