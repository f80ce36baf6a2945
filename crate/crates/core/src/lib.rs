//! Trilinear partially penalized immersed finite elements for 3D elliptic
//! interface problems on Cartesian meshes.

// index loops mirror the matrix notation; `!(a < b)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod config;
pub mod error;
pub mod error_analysis;
pub mod export;
pub mod geometry;
pub mod ife;
pub mod levelset;
pub mod mesh;
pub mod pointcloud;
pub mod poly;
pub mod problems;
pub mod quadrature;
pub mod runner;
pub mod solver;

pub type Point = nalgebra::Vector3<f64>;

pub use error::{Error, Result};
