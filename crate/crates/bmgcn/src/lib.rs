//! Block-modeling guided graph convolutional networks.
//!
//! The crate bundles a small tape-based reverse-mode autodiff engine over
//! dense `f64` tensors with sparse-aware graph ops, a stochastic block model
//! generator for synthetic benchmarks, the BM-GCN model itself (an MLP that
//! learns soft labels, a class-to-class block matrix estimated from them, and
//! a convolution stack that aggregates over the block-refined topology), plus
//! baselines and an experiment CLI.

pub mod adam;
pub mod blockmodel;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod gnn;
pub mod gradcheck;
pub mod graph;
pub mod sparse;
pub mod synth;
pub mod tape;
pub mod tensor;
