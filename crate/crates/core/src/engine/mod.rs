//! The closure modules and the pipeline combinator that composes them with
//! matrix operators.

mod modules;
mod pipeline;

pub use modules::{rms, smp, RmsResult, SmpResult};
pub(crate) use modules::{rms_until, smp_until};
pub(crate) use pipeline::execute;
pub use pipeline::{
    run_pipeline, run_pipeline_with, NoCache, Op, Pipeline, PipelineOutputs, Step, StepCache,
    IS_FOREIGN_PIPELINE,
};
