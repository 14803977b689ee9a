//! File formats, configuration and the end-to-end stages behind the `scanrig` binary.

pub mod cli;
mod commands;
mod config;
pub mod formats;
pub mod synth;

pub use commands::{
    evaluate, load_body, load_scan, run_animate, run_demo, run_eval, run_fit, run_generate, run_place,
    run_retarget, sample_betas, DemoOptions, FitInputs, GENERATED_CLIPS,
};
pub use config::{pick, PipelineConfig};
