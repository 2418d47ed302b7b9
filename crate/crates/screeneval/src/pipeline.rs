//! Drivers that run core operations over whole corpora, in parallel where
//! the operation is pure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use screeneval_core::corpus::synth::{latent_transcript, latent_waveform, SynthAudioConfig};
use screeneval_core::corpus::Session;
use screeneval_core::dsp::{FeatureMatrix, FilterBank, FrontEndConfig};
use screeneval_core::model::{
    gradual_unfreeze, pretrain_encoder, score_sessions, segment_scores, text_features, Aggregator, Example,
    InputScaler, LayeredModel, ModelError, ModelSpec, PooledSegment, SessionScore, TrainConfig,
};
use screeneval_core::rng::SplitMix64;

use crate::checkpoint::Checkpoint;
use crate::config::{AggregatorKind, ModelConfig, TextConfig};
use crate::features::{filterbank_sidecar, pooled_from, text_sidecar, FeatureKind, FeatureSidecar};
use crate::wav::read_wav;

pub const THREADS_ENV: &str = "SCREENEVAL_THREADS";

/// Runs `f` on a pool capped by `SCREENEVAL_THREADS`, or on rayon's
/// default pool when the variable is unset.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R, String> {
    let cap = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?,
        ),
        Err(_) => None,
    };
    match cap {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Per-session seed from a run seed and the session id (FNV-1a over the id).
pub fn session_seed(seed: u64, session_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in session_id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    SplitMix64::new(seed ^ h).next_u64()
}

/// Where raw session material comes from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    /// Render synthetic audio or text from the hidden latent values.
    Latent(&'a BTreeMap<String, f64>),
    /// Read `audio_ref` / `transcript_ref`, relative to `base_dir`.
    Files { base_dir: &'a Path },
}

#[derive(Debug, Clone)]
pub struct FeaturizeOptions {
    pub kind: FeatureKind,
    pub frontend: FrontEndConfig,
    pub audio: SynthAudioConfig,
    pub text: TextConfig,
    pub seed: u64,
}

fn resolve(base: &Path, reference: &str) -> PathBuf {
    let p = Path::new(reference);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Features for one session plus the sidecar describing its segments.
pub fn featurize_session(
    session: &Session,
    source: Source<'_>,
    opts: &FeaturizeOptions,
) -> Result<(FeatureMatrix, FeatureSidecar), String> {
    let id = session.session_id.as_str();
    let seed = session_seed(opts.seed, id);
    match opts.kind {
        FeatureKind::Filterbank => {
            let wave = match source {
                Source::Latent(latent) => {
                    let z = latent.get(id).ok_or_else(|| format!("no latent value for session {id}"))?;
                    latent_waveform(*z, &opts.audio, seed)
                }
                Source::Files { base_dir } => {
                    let r = session.audio_ref.as_deref().ok_or_else(|| format!("session {id} has no audio_ref"))?;
                    read_wav(&resolve(base_dir, r))?
                }
            };
            wave.validate().map_err(|e| format!("session {id}: {e}"))?;
            let bank = FilterBank::new(opts.frontend.clone(), wave.sample_rate_hz).map_err(|e| e.to_string())?;
            let m = bank.extract(&wave).map_err(|e| format!("session {id}: {e}"))?;
            let side = filterbank_sidecar(id, &m, opts.frontend.frames_per_segment())?;
            Ok((m, side))
        }
        FeatureKind::Text => {
            let text = match source {
                Source::Latent(latent) => {
                    let z = latent.get(id).ok_or_else(|| format!("no latent value for session {id}"))?;
                    latent_transcript(*z, opts.text.synth_words, seed)
                }
                Source::Files { base_dir } => {
                    let r = session
                        .transcript_ref
                        .as_deref()
                        .ok_or_else(|| format!("session {id} has no transcript_ref"))?;
                    let p = resolve(base_dir, r);
                    std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?
                }
            };
            let pooled = text_features(&text, opts.text.dim);
            let m = FeatureMatrix::from_vector(pooled.input.iter().map(|v| *v as f32).collect());
            Ok((m, text_sidecar(id, !pooled.is_empty())))
        }
    }
}

/// Featurizes every session in parallel, keeping input order.
pub fn featurize_all(
    sessions: &[Session],
    source: Source<'_>,
    opts: &FeaturizeOptions,
) -> Vec<Result<(FeatureMatrix, FeatureSidecar), String>> {
    sessions.par_iter().map(|s| featurize_session(s, source, opts)).collect()
}

/// Featurizes and pools in memory, without touching disk.
pub fn pooled_store(
    sessions: &[Session],
    source: Source<'_>,
    opts: &FeaturizeOptions,
) -> Result<BTreeMap<String, Vec<PooledSegment>>, String> {
    sessions
        .par_iter()
        .map(|s| {
            let (m, side) = featurize_session(s, source, opts)?;
            Ok((s.session_id.clone(), pooled_from(&m, &side)?))
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("features missing for {} session(s): {}", .0.len(), .0.join(", "))]
    MissingFeatures(Vec<String>),
    #[error("no segments in the training sessions")]
    NoSegments,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainLog {
    pub n_sessions: usize,
    pub n_segments: usize,
    pub pretrain_losses: Vec<f64>,
    pub stages: Vec<Vec<usize>>,
    pub stage_losses: Vec<Vec<f64>>,
    pub permuted_labels: bool,
}

/// Session labels, shuffled across sessions when `permute` is set.
pub fn training_labels(sessions: &[&Session], permute: bool, seed: u64) -> Vec<bool> {
    let mut labels: Vec<bool> = sessions.iter().map(|s| s.label().is_positive()).collect();
    if permute {
        SplitMix64::new(seed).fork(0x7065_726d).shuffle(&mut labels);
    }
    labels
}

/// Pre-training (optional), staged supervised training with gradual
/// unfreezing, then the session aggregator. Every segment inherits its
/// session's label.
pub fn train_model(
    sessions: &[&Session],
    store: &BTreeMap<String, Vec<PooledSegment>>,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    feature_kind: FeatureKind,
    permute_labels: bool,
) -> Result<(Checkpoint, TrainLog), PipelineError> {
    train_cfg.validate()?;
    let missing: Vec<String> = sessions
        .iter()
        .filter(|s| !store.contains_key(&s.session_id))
        .map(|s| s.session_id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(PipelineError::MissingFeatures(missing));
    }
    let labels = training_labels(sessions, permute_labels, train_cfg.seed);
    let mut examples = Vec::new();
    for (s, &y) in sessions.iter().zip(&labels) {
        for seg in &store[&s.session_id] {
            examples.push(Example::new(seg.clone(), y));
        }
    }
    let input_dim = examples.first().ok_or(PipelineError::NoSegments)?.input.input.len();
    let mut model = LayeredModel::new(
        ModelSpec {
            input_dim,
            hidden: model_cfg.hidden.clone(),
        },
        train_cfg.seed,
    )?;
    model.scaler = if model_cfg.standardize {
        InputScaler::fit(
            input_dim,
            examples
                .iter()
                .filter(|e| !e.input.is_empty() && e.input.input.len() == input_dim)
                .map(|e| e.input.input.as_slice()),
        )
    } else {
        InputScaler::identity(input_dim)
    };
    let mut pretrain_losses = Vec::new();
    if model_cfg.pretrain_epochs > 0 {
        let cfg = TrainConfig {
            epochs_per_stage: model_cfg.pretrain_epochs,
            ..train_cfg.clone()
        };
        let inputs: Vec<PooledSegment> = examples.iter().map(|e| e.input.clone()).collect();
        pretrain_losses = pretrain_encoder(&mut model, &inputs, &cfg)?.losses;
    }
    let report = gradual_unfreeze(&mut model, &examples, train_cfg)?;
    let aggregator = match model_cfg.aggregator {
        AggregatorKind::Mean => Aggregator::Mean,
        AggregatorKind::Learned => {
            let per_session = sessions
                .iter()
                .zip(&labels)
                .map(|(s, &y)| {
                    let (sc, w) = segment_scores(&model, &store[&s.session_id])?;
                    Ok((sc, w, y))
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            Aggregator::fit_learned(&per_session, train_cfg)?
        }
    };
    let log = TrainLog {
        n_sessions: sessions.len(),
        n_segments: examples.len(),
        pretrain_losses,
        stages: report.stages,
        stage_losses: report.losses,
        permuted_labels: permute_labels,
    };
    let ck = Checkpoint {
        model,
        aggregator,
        train: train_cfg.clone(),
        feature_kind: feature_kind.as_str().into(),
    };
    Ok((ck, log))
}

/// Scores sessions in parallel. Any session without features fails the
/// whole call with the full list of missing ids.
pub fn score_all<S>(checkpoint: &Checkpoint, ids: &[&str], store: &S) -> Result<Vec<SessionScore>, PipelineError>
where
    S: screeneval_core::model::SegmentStore + Sync + ?Sized,
{
    let results: Vec<Result<SessionScore, ModelError>> = ids
        .par_chunks(64)
        .flat_map_iter(|chunk| score_sessions(&checkpoint.model, &checkpoint.aggregator, chunk, store))
        .collect();
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(s) => out.push(s),
            Err(ModelError::MissingFeatures(id)) => missing.push(id),
            Err(e) => return Err(e.into()),
        }
    }
    if !missing.is_empty() {
        return Err(PipelineError::MissingFeatures(missing));
    }
    Ok(out)
}
