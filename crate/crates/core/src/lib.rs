//! Multi-class spiking neural classifier with time-varying synaptic weights.
//!
//! Real-valued inputs are population-encoded into spike times, classified by
//! the output neuron that fires first, and trained with a modified STDP rule.
//! A trained model can be turned into per-feature Feature Strength Functions
//! that classify directly in the feature domain and explain each prediction.

pub mod cli;
pub mod data;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fsf;
pub mod learning;
pub mod neuron;
pub mod persist;

pub use data::{load_csv, load_idx, normalize_minmax, random_folds, Dataset, FeatureScaling, LabelColumn, Split};
pub use encoding::{encode, inverse_encode, make_config, rf_activation, EncodingConfig, SpikePattern};
pub use error::{Result, SefronError};
pub use eval::{evaluate, Classifier, Evaluation};
pub use experiment::{cross_validate, run_fold, FoldResult, Readout, Summary};
pub use fsf::{classify_fsf, extract_fsf, heatmap, sample_fsf, select_t_o, Explanation, FsfSet};
pub use learning::{
    apply_update, init_class, normalized_stdp, train, train_sample, weight_update_delta, LearningConfig, Model,
    TrainOutcome, UpdateReport,
};
pub use neuron::{fire_time, predict_time_domain, psp, sample_weight, spike_response, EfficacyFunction, NeuronParams, TimeGrid};
