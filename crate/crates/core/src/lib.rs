//! Boolean matrix evaluation of dyadic datalog programs.
//!
//! Facts over a single typed universe are compiled into bit-packed square
//! matrices ([`bitmat`]), recursive programs are evaluated by the closure
//! modules in [`engine`], and composite programs are expressed as pipelines
//! of matrix operations. [`oracle`] is an independent semi-naive evaluator
//! used to check the matrix results; [`benchgen`] generates random graph
//! workloads and ingests knowledge-graph triples.

pub mod benchgen;
pub mod bitmat;
pub mod datalog;
pub mod engine;
mod error;
pub mod oracle;

pub use bitmat::{BitMatrix, BitVector};
pub use datalog::{Constant, Fact, FactBase, SymbolTable};
pub use engine::{rms, smp, Pipeline, RmsResult, SmpResult};
pub use error::{Error, Result};
