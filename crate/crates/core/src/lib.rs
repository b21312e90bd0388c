//! Classification of one-dimensional profiles by their Tsallis entropy spectrum.
//!
//! A profile's amplitudes are quantized into an equal-width histogram, the
//! histogram is summarized by Tsallis entropies over a grid of `q` values,
//! and those features feed a Gaussian naive Bayes classifier scored by
//! stratified k-fold cross-validation. PCA is available for dimensionality
//! reduction and scatter plots, and [`synth`] generates two-class
//! polarization-curve datasets to run the whole chain on.

pub mod classify;
pub mod entropy;
pub mod error;
pub mod eval;
pub mod exec;
pub mod pca;
pub mod pipeline;
pub mod profile;
pub mod synth;

pub use classify::{predict_nb, train_nb, NbModel, Prediction};
pub use entropy::{multiq_vector, tsallis_entropy, FeatureVector, QGrid};
pub use error::{Error, Result};
pub use eval::{cross_validate, cross_validate_with, stratified_folds, CvOptions, CvReport, FoldAssignment};
pub use exec::Execution;
pub use pca::{fit_pca, project, PcaModel};
pub use pipeline::{run_pipeline, run_table, FeatureKind, PipelineConfig, RangeSpec};
pub use profile::{
    load_dataset, load_profile, quantize_histogram, slice_by_potential, Histogram, Label,
    PotentialRange, Profile,
};
pub use synth::{generate_curve, generate_dataset, CurveParams, SynthConfig};
