//! Core library for edge-directed multi-head graph attention over network
//! flows.
//!
//! Everything in this crate is pure computation: it turns already-parsed flow
//! records into a directed socket graph, runs the attention model over it with
//! reverse-mode autodiff, and scores the resulting edge classifications. File
//! formats, CSV parsing, and the command line live in the companion `edgmat`
//! crate.
//!
//! The crate is `no_std` (with `alloc`); float math goes through `libm` and
//! all randomness comes from the seeded counter generator in [`rng`], so
//! results are bit-reproducible across platforms.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod checkpoint;
pub mod graph;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod pca;
pub mod record;
pub mod rng;
pub mod schema;
pub mod tape;
pub mod tensor;

pub use graph::{EdgeMask, FlowEdge, FlowGraph, InitRule, SocketKey, SocketNode};
pub use metrics::{ConfusionMatrix, EvalReport};
pub use model::{EdgmatLayerParams, EdgmatModel, ModelConfig, Predictions};
pub use optim::{AdamConfig, Parameter};
pub use record::{FlowRecord, NormStats, SplitMode, SplitSpec};
pub use rng::StreamRng;
pub use schema::DatasetSchema;
pub use tape::{Tape, VarId};
pub use tensor::Tensor;
