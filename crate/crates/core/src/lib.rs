//! Core algorithms for evaluating speech-based depression screening models.
//!
//! Everything in this crate is pure computation over in-memory values and
//! only needs `alloc`: corpus rules (PHQ-8 labeling, speaker-disjoint
//! partitioning, stratification), a log mel filter-bank front end, a small
//! staged trainer with freeze/unfreeze control, ROC/AUC with DeLong testing,
//! and Table-style subgroup robustness reports.
//!
//! File formats, the CLI and parallel drivers live in the `screeneval` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod corpus;
pub mod dsp;
pub mod math;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod robustness;

pub use corpus::{
    binarize_phq, corpus_stats, derive_time_buckets, mean_phq_first_session, partition_speakers,
    stratify, synth_corpus, CivilDateTime, Corpus, CorpusError, DepressionLabel, Partition,
    Session, Split, StatsTable, SynthConfig, SyntheticCorpus,
};
pub use dsp::{
    frame_signal, segment_stream, DspError, FeatureMatrix, FilterBank, FrontEndConfig, Segment,
    Waveform,
};
pub use metrics::{
    auc, delong_test_paired, delong_test_unpaired, delong_variance, eer, midranks, roc_curve,
    sensitivity_specificity_at, AucEstimate, DeLongResult, EerPoint, MetricsError, RocCurve,
    ScoredSample,
};
pub use model::{
    aggregate_session, discriminative_lrs, grad_check, gradual_unfreeze, train_stage,
    LayeredModel, ModelError, ParameterGroup, SessionScore, TrainConfig,
};
pub use rng::SplitMix64;
pub use robustness::{
    render_report, significance_mark, subset_auc_report, ReportFormat, RobustnessError,
    SubsetReport, SubsetRow,
};
