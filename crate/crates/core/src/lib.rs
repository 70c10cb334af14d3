pub mod dicom;
pub mod matrix;
pub mod rng;
pub mod quality;
pub mod dataset;
pub mod learners;
pub mod eval;
pub mod shap;
pub mod synth;
pub mod config;
pub mod pipeline;
pub mod report;
