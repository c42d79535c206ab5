//! Core building blocks for full-graph GNN inference.
//!
//! The crate is split along the pipeline it implements:
//!
//! - [`matrix`] / [`kernels`]: a row-major `f32` matrix and the dense kernels
//!   (matmul, elementwise ops, segment reductions, segment softmax) with a
//!   fixed, documented accumulation order so every result is reproducible
//!   bit for bit.
//! - [`ir`] / [`program`]: a small tensor-op IR for vertex/edge modules, a
//!   reference interpreter, an elementwise fusion pass, and a compiler that
//!   lowers a module to a flat, slot-bound [`program::FusedProgram`].
//! - [`graph`] / [`partition`] / [`feature`]: CSR+CSC graph storage with
//!   stable edge ids, contiguous vertex-range partitioning with boundary
//!   send lists, and a named feature store instrumented with a data-read
//!   counter.
//! - [`plan`] / [`interp`]: the deferred execution plan built from
//!   `get_vertex` / `get_edge` / `transform` / `message_passing` /
//!   `edge_softmax`, plus a single-threaded reference executor.
//! - [`zoo`] / [`reference`]: decomposed GAT and GCN plans, deterministic
//!   parameter initialization, and independent per-node-loop oracles.
//! - [`sampling`]: a k-hop subgraph sampling baseline with redundancy and
//!   FLOP accounting.
//! - [`flops`]: the closed-form FLOP model shared by the engine counters and
//!   the sampling baseline.
//!
//! Everything here is pure computation over `alloc` containers; IO, threads,
//! and the CLI live in the companion engine crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod feature;
pub mod flops;
pub mod graph;
pub mod interp;
pub mod ir;
pub mod kernels;
pub mod matrix;
pub mod modulegen;
pub mod partition;
pub mod plan;
pub mod program;
pub mod reference;
pub mod rng;
pub mod sampling;
pub mod zoo;

pub use feature::{FeatureStore, Scope, StoreError};
pub use graph::{Graph, GraphError, ParseError};
pub use matrix::Matrix;
pub use partition::{PartError, PartitionedGraph};
pub use plan::{Aggregator, FeatureRef, Plan, PlanBuildError, ValidationIssue};
