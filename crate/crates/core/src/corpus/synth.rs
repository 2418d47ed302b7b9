//! Seeded synthetic corpora with planted structure.
//!
//! The generator mimics the shape of a real screening collection: a skewed
//! PHQ-8 histogram, a smooth time-of-day effect on PHQ, repeat speakers with
//! correlated scores, and categorical user metadata with missing values.
//! Each session also carries a hidden latent feature whose class-conditional
//! mean differs by `planted_signal_strength`, which downstream tests render
//! into audio or text so that a trained scorer has something to find.
//!
//! Per-session PHQ is `clamp(round(base + hour_offset + speaker_effect +
//! category_offsets), 0, 24)` where `base` is drawn from
//! `base_phq_distribution`. Base draws are stratified over the whole corpus
//! (one uniform per equal-probability stratum, strata shuffled), so the
//! empirical base histogram tracks the configured one far more tightly than
//! independent draws would.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{
    is_leap_year, Corpus, CorpusError, CivilDateTime, Session, PHQ8_DEPRESSION_CUTOFF, PHQ8_MAX,
};
use crate::dsp::Waveform;
use crate::math;
use crate::rng::SplitMix64;

const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_speakers: usize,
    /// Probability that a speaker contributes more than one session.
    pub multi_session_fraction: f64,
    /// Repeat speakers contribute between 2 and this many sessions.
    pub max_sessions_per_speaker: u32,
    /// 25 probabilities for PHQ-8 totals 0..=24.
    pub base_phq_distribution: Vec<f64>,
    /// 24 additive PHQ offsets indexed by local hour.
    pub time_of_day_effect: Vec<f64>,
    /// 24 probabilities of recording in each local hour.
    pub hour_weights: Vec<f64>,
    /// key → category → probability.
    pub metadata_priors: BTreeMap<String, BTreeMap<String, f64>>,
    /// key → category → additive PHQ offset.
    pub category_phq_offset: BTreeMap<String, BTreeMap<String, f64>>,
    /// Probability that a speaker leaves a metadata key unanswered.
    pub metadata_missing_rate: f64,
    /// Standard deviation of the per-speaker PHQ offset.
    pub speaker_effect_sd: f64,
    /// Difference in latent-feature means between Dep+ and Dep- sessions.
    pub planted_signal_strength: f64,
    pub mean_duration_seconds: f64,
    pub words_per_second: f64,
    pub year: i32,
    pub seed: u64,
}

fn normalized(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

fn prior(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    let total: f64 = pairs.iter().map(|(_, w)| w).sum();
    pairs.iter().map(|(k, w)| (k.to_string(), w / total)).collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        // Geometric decay over PHQ totals: about a quarter of sessions at or above 10.
        let base: Vec<f64> = (0..25).map(|k| math::powi(0.88, k)).collect();
        let time_of_day_effect = (0..24)
            .map(|h| 0.6 * math::cos(core::f64::consts::TAU * (h as f64 - 3.0) / 24.0))
            .collect();
        // Few morning sessions, most in the afternoon and evening.
        let bucket = |h: usize| match h {
            0..=5 => 0.22,
            6..=11 => 0.11,
            12..=17 => 0.31,
            _ => 0.36,
        };
        let hour_weights = normalized(&(0..24).map(bucket).collect::<Vec<_>>());
        let mut metadata_priors = BTreeMap::new();
        metadata_priors.insert("gender".into(), prior(&[("female", 0.58), ("male", 0.42)]));
        metadata_priors.insert(
            "age_group".into(),
            prior(&[("18-25", 0.28), ("26-35", 0.43), ("36-45", 0.19), ("46-65", 0.10)]),
        );
        metadata_priors.insert("smoking".into(), prior(&[("non-smoker", 0.68), ("smoker", 0.32)]));
        metadata_priors.insert(
            "state".into(),
            prior(&[
                ("California", 0.12),
                ("Florida", 0.11),
                ("Texas", 0.10),
                ("New York", 0.08),
                ("other", 0.59),
            ]),
        );
        metadata_priors.insert(
            "ethnicity".into(),
            prior(&[
                ("Caucasian", 0.70),
                ("African American", 0.08),
                ("Hispanic", 0.08),
                ("Asian American", 0.07),
                ("Mixed", 0.07),
            ]),
        );
        metadata_priors.insert(
            "marital".into(),
            prior(&[("never_married", 0.6), ("married", 0.4)]),
        );
        SynthConfig {
            n_speakers: 1000,
            multi_session_fraction: 0.2,
            max_sessions_per_speaker: 4,
            base_phq_distribution: normalized(&base),
            time_of_day_effect,
            hour_weights,
            metadata_priors,
            category_phq_offset: BTreeMap::new(),
            metadata_missing_rate: 0.05,
            speaker_effect_sd: 1.5,
            planted_signal_strength: 1.0,
            mean_duration_seconds: 270.0,
            words_per_second: 2.3,
            year: 2019,
            seed: 0,
        }
    }
}

fn check_distribution(name: &str, p: &[f64], len: Option<usize>) -> Result<(), CorpusError> {
    if let Some(len) = len {
        if p.len() != len {
            return Err(CorpusError::InvalidConfig(format!(
                "{name} has {} entries, expected {len}",
                p.len()
            )));
        }
    }
    if p.is_empty() || p.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(CorpusError::InvalidConfig(format!(
            "{name} must be non-empty with finite non-negative weights"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(CorpusError::InvalidConfig(format!(
            "{name} sums to {total}, expected 1"
        )));
    }
    Ok(())
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |msg: &str| Err(CorpusError::InvalidConfig(msg.to_string()));
        if self.n_speakers == 0 {
            return bad("n_speakers must be positive");
        }
        if !(0.0..=1.0).contains(&self.multi_session_fraction) {
            return bad("multi_session_fraction must lie in [0, 1]");
        }
        if self.max_sessions_per_speaker < 2 {
            return bad("max_sessions_per_speaker must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.metadata_missing_rate) {
            return bad("metadata_missing_rate must lie in [0, 1]");
        }
        if !(self.speaker_effect_sd.is_finite() && self.speaker_effect_sd >= 0.0) {
            return bad("speaker_effect_sd must be finite and non-negative");
        }
        if !(self.planted_signal_strength.is_finite() && self.planted_signal_strength >= 0.0) {
            return bad("planted_signal_strength must be finite and non-negative");
        }
        if !(self.mean_duration_seconds.is_finite() && self.mean_duration_seconds > 0.0) {
            return bad("mean_duration_seconds must be positive");
        }
        if !(self.words_per_second.is_finite() && self.words_per_second >= 0.0) {
            return bad("words_per_second must be non-negative");
        }
        check_distribution("base_phq_distribution", &self.base_phq_distribution, Some(25))?;
        check_distribution("hour_weights", &self.hour_weights, Some(24))?;
        if self.time_of_day_effect.len() != 24 || self.time_of_day_effect.iter().any(|x| !x.is_finite()) {
            return bad("time_of_day_effect must hold 24 finite offsets");
        }
        for (key, p) in &self.metadata_priors {
            if !super::USER_KEYS.contains(&key.as_str()) {
                return Err(CorpusError::UnknownMetadataKey(key.clone()));
            }
            let weights: Vec<f64> = p.values().copied().collect();
            check_distribution(&format!("metadata_priors.{key}"), &weights, None)?;
        }
        for (key, offsets) in &self.category_phq_offset {
            if !self.metadata_priors.contains_key(key) {
                return Err(CorpusError::InvalidConfig(format!(
                    "category_phq_offset.{key} has no matching prior"
                )));
            }
            if offsets.values().any(|x| !x.is_finite()) {
                return bad("category offsets must be finite");
            }
        }
        Ok(())
    }
}

/// A generated corpus plus the hidden per-session latent feature.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub latent: BTreeMap<String, f64>,
}

struct Draft {
    speaker: usize,
    at: CivilDateTime,
    hour_offset: f64,
    person_offset: f64,
    metadata: BTreeMap<String, String>,
    duration_seconds: f64,
    word_count: u64,
}

pub fn synth_corpus(config: &SynthConfig) -> Result<SyntheticCorpus, CorpusError> {
    config.validate()?;
    let root = SplitMix64::new(config.seed);
    let days_in_year = if is_leap_year(config.year) { 366 } else { 365 };

    let mut drafts: Vec<Draft> = Vec::new();
    for spk in 0..config.n_speakers {
        let mut rng = root.fork(spk as u64);
        let n_sessions = if rng.bernoulli(config.multi_session_fraction) {
            2 + rng.below(config.max_sessions_per_speaker as u64 - 1) as usize
        } else {
            1
        };
        let speaker_effect = config.speaker_effect_sd * rng.normal();
        let mut metadata = BTreeMap::new();
        let mut category_offset = 0.0;
        for (key, p) in &config.metadata_priors {
            let answered = !rng.bernoulli(config.metadata_missing_rate);
            let cats: Vec<(&String, &f64)> = p.iter().collect();
            let weights: Vec<f64> = cats.iter().map(|(_, w)| **w).collect();
            let idx = rng.categorical(&weights);
            if answered {
                let category = cats[idx].0;
                category_offset += config
                    .category_phq_offset
                    .get(key)
                    .and_then(|m| m.get(category))
                    .copied()
                    .unwrap_or(0.0);
                metadata.insert(key.clone(), category.clone());
            }
        }
        let mut times: Vec<CivilDateTime> = (0..n_sessions)
            .map(|_| {
                let day = rng.below(days_in_year) as u32;
                let hour = rng.categorical(&config.hour_weights) as u8;
                let minute = rng.below(60) as u8;
                let second = rng.below(60) as u8;
                CivilDateTime::from_day_of_year(config.year, day, hour, minute, second)
            })
            .collect::<Result<_, _>>()?;
        times.sort();
        for at in times {
            let duration_seconds = (config.mean_duration_seconds
                * math::exp(0.25 * rng.normal() - 0.03125))
            .max(1.0);
            let word_count =
                math::round(duration_seconds * config.words_per_second * math::exp(0.15 * rng.normal()))
                    as u64;
            drafts.push(Draft {
                speaker: spk,
                at,
                hour_offset: config.time_of_day_effect[at.hour as usize],
                person_offset: speaker_effect + category_offset,
                metadata: metadata.clone(),
                duration_seconds,
                word_count,
            });
        }
    }

    // Stratified base draws: stratum k covers [k/n, (k+1)/n).
    let n = drafts.len();
    let mut strata: Vec<usize> = (0..n).collect();
    let mut rng = root.fork(u64::MAX);
    rng.shuffle(&mut strata);
    let cdf: Vec<f64> = config
        .base_phq_distribution
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let mut sessions = Vec::with_capacity(n);
    let mut latent = BTreeMap::new();
    for (i, d) in drafts.into_iter().enumerate() {
        let u = (strata[i] as f64 + rng.next_f64()) / n as f64;
        let base = cdf.iter().position(|c| u < *c).unwrap_or(cdf.len() - 1) as f64;
        let raw = base + d.hour_offset + d.person_offset;
        let phq = math::round(raw).clamp(0.0, PHQ8_MAX as f64) as u8;
        let positive = phq >= PHQ8_DEPRESSION_CUTOFF;
        let signal = if positive { config.planted_signal_strength } else { 0.0 };
        let session_id = format!("ses{i:07}");
        latent.insert(session_id.clone(), signal + rng.normal());
        let mut s = Session {
            session_id,
            speaker_id: format!("spk{:06}", d.speaker),
            phq8_total: phq,
            recorded_at: d.at,
            duration_seconds: d.duration_seconds,
            word_count: d.word_count,
            metadata: d.metadata,
            audio_ref: None,
            transcript_ref: None,
        };
        s.fill_derived_metadata();
        sessions.push(s);
    }
    Ok(SyntheticCorpus {
        corpus: Corpus::new(sessions)?,
        latent,
    })
}

/// How a latent value is rendered into a synthetic waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthAudioConfig {
    pub sample_rate_hz: u32,
    pub seconds: f64,
    /// Frequency of the tone whose level carries the latent value.
    pub marker_hz: f64,
    /// Natural-log amplitude change of the marker tone per latent unit.
    pub latent_gain: f64,
}

impl Default for SynthAudioConfig {
    fn default() -> Self {
        SynthAudioConfig {
            sample_rate_hz: 8000,
            seconds: 4.0,
            marker_hz: 1250.0,
            latent_gain: 0.5,
        }
    }
}

/// Voiced-like harmonic source plus noise, with one marker tone whose level
/// scales as `exp(latent_gain · latent)`. A random overall gain per session
/// acts as a nuisance factor. Peaks are scaled to stay within ±0.99.
pub fn latent_waveform(latent: f64, config: &SynthAudioConfig, seed: u64) -> Waveform {
    let mut rng = SplitMix64::new(seed);
    let sr = config.sample_rate_hz as f64;
    let n = math::round(config.seconds * sr).max(1.0) as usize;
    let f0 = rng.uniform(100.0, 220.0);
    let phases: Vec<f64> = (0..8).map(|_| rng.uniform(0.0, core::f64::consts::TAU)).collect();
    let marker_phase = rng.uniform(0.0, core::f64::consts::TAU);
    let gain = 0.3 * math::exp(0.25 * rng.normal());
    let marker_amp = 0.15 * math::exp(config.latent_gain * latent);
    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let mut x = 0.0;
            for (k, ph) in phases.iter().enumerate() {
                let f = f0 * (k + 1) as f64;
                if f < sr / 2.0 {
                    x += math::sin(core::f64::consts::TAU * f * t + ph) / (k + 1) as f64;
                }
            }
            x += marker_amp * math::sin(core::f64::consts::TAU * config.marker_hz * t + marker_phase);
            x += 0.05 * rng.normal();
            gain * x
        })
        .collect();
    let peak = samples.iter().fold(0.0f64, |m, x| m.max(math::abs(*x)));
    if peak > 0.99 {
        let scale = 0.99 / peak;
        samples.iter_mut().for_each(|x| *x *= scale);
    }
    Waveform {
        samples: samples.into_iter().map(|x| x as f32).collect(),
        sample_rate_hz: config.sample_rate_hz,
    }
}

const NEUTRAL_WORDS: [&str; 40] = [
    "i", "the", "and", "my", "work", "today", "went", "to", "with", "friends", "family", "it",
    "was", "a", "good", "day", "we", "talked", "about", "home", "cooking", "dinner", "weekend",
    "walk", "park", "music", "movie", "kids", "job", "plans", "then", "really", "like", "think",
    "time", "week", "call", "visit", "garden", "coffee",
];
const MARKER_WORDS: [&str; 8] = [
    "tired", "alone", "sleep", "hopeless", "worried", "empty", "exhausted", "nothing",
];

/// Transcript-like text in which marker words become more frequent as the
/// latent value grows.
pub fn latent_transcript(latent: f64, n_words: usize, seed: u64) -> String {
    let mut rng = SplitMix64::new(seed);
    let p_marker = math::sigmoid(-3.0 + 0.8 * latent);
    let mut out = String::new();
    for i in 0..n_words {
        if i > 0 {
            out.push(' ');
        }
        let word = if rng.bernoulli(p_marker) {
            MARKER_WORDS[rng.below(MARKER_WORDS.len() as u64) as usize]
        } else {
            NEUTRAL_WORDS[rng.below(NEUTRAL_WORDS.len() as u64) as usize]
        };
        out.push_str(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DepressionLabel, KEY_TIME_OF_DAY};

    fn config(n_speakers: usize, seed: u64) -> SynthConfig {
        SynthConfig {
            n_speakers,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn default_config_is_valid() {
        SynthConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_distributions() {
        let mut c = SynthConfig::default();
        c.base_phq_distribution[0] += 0.01;
        assert!(matches!(c.validate(), Err(CorpusError::InvalidConfig(_))));
        let mut c = SynthConfig::default();
        c.base_phq_distribution.pop();
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.hour_weights[3] = -0.1;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.metadata_priors.get_mut("gender").unwrap().insert("x".into(), 0.5);
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.metadata_priors.insert("shoe".into(), prior(&[("a", 1.0)]));
        assert!(matches!(c.validate(), Err(CorpusError::UnknownMetadataKey(_))));
        let mut c = SynthConfig::default();
        c.planted_signal_strength = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn reproducible_given_seed() {
        let a = synth_corpus(&config(300, 17)).unwrap();
        let b = synth_corpus(&config(300, 17)).unwrap();
        assert_eq!(a, b);
        let c = synth_corpus(&config(300, 18)).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn sessions_are_valid_and_repeat_speakers_exist() {
        let s = synth_corpus(&config(2000, 3)).unwrap();
        assert!(s.corpus.len() > 2000);
        assert!(s.corpus.speaker_index().values().any(|v| v.len() >= 2));
        for sess in s.corpus.sessions() {
            sess.validate().unwrap();
            assert!(sess.phq8_total <= 24);
            assert!(sess.metadata.contains_key(KEY_TIME_OF_DAY));
        }
        assert_eq!(s.latent.len(), s.corpus.len());
    }

    /// Empirical histogram against the configured one when nothing shifts the base draw.
    #[test]
    fn histogram_matches_base_distribution() {
        let mut c = config(10_000, 1);
        c.multi_session_fraction = 0.0;
        c.speaker_effect_sd = 0.0;
        c.time_of_day_effect = vec![0.0; 24];
        let s = synth_corpus(&c).unwrap();
        assert_eq!(s.corpus.len(), 10_000);
        let mut counts = [0usize; 25];
        for sess in s.corpus.sessions() {
            counts[sess.phq8_total as usize] += 1;
        }
        let tv: f64 = counts
            .iter()
            .zip(&c.base_phq_distribution)
            .map(|(k, p)| (*k as f64 / 10_000.0 - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.02, "total variation {tv}");
    }

    fn hourly_means(s: &SyntheticCorpus) -> Vec<(f64, usize)> {
        let mut sums = vec![(0.0, 0usize); 24];
        for sess in s.corpus.sessions() {
            let e = &mut sums[sess.recorded_at.hour as usize];
            e.0 += sess.phq8_total as f64;
            e.1 += 1;
        }
        sums.into_iter().map(|(t, n)| (t / n as f64, n)).collect()
    }

    #[test]
    fn hourly_mean_tracks_time_of_day_effect() {
        // 100k sessions: about 0.1 PHQ standard error per hour. Clamping at
        // 0 lifts every hour alike, so profiles are compared centered.
        let mut c = config(100_000, 2);
        c.multi_session_fraction = 0.0;
        c.hour_weights = vec![1.0 / 24.0; 24];
        let s = synth_corpus(&c).unwrap();
        let means: Vec<f64> = hourly_means(&s).into_iter().map(|(m, _)| m).collect();
        let (m_bar, e_bar) = (math::mean(&means), math::mean(&c.time_of_day_effect));
        for h in 0..24 {
            let (got, expected) = (means[h] - m_bar, c.time_of_day_effect[h] - e_bar);
            assert!((got - expected).abs() < 0.3, "hour {h}: {got} vs {expected}");
        }
    }

    #[test]
    fn zero_effect_gives_flat_profile() {
        let mut c = config(20_000, 4);
        c.multi_session_fraction = 0.0;
        c.time_of_day_effect = vec![0.0; 24];
        c.hour_weights = vec![1.0 / 24.0; 24];
        let s = synth_corpus(&c).unwrap();
        let all: Vec<f64> = s.corpus.sessions().iter().map(|x| x.phq8_total as f64).collect();
        let overall = math::mean(&all);
        let sd = math::sqrt(all.iter().map(|x| (x - overall) * (x - overall)).sum::<f64>() / all.len() as f64);
        for (h, (m, n)) in hourly_means(&s).into_iter().enumerate() {
            let se = sd / math::sqrt(n as f64);
            assert!((m - overall).abs() < 4.0 * se, "hour {h}: {m} vs {overall}");
        }
    }

    #[test]
    fn latent_separation_matches_planted_strength() {
        let mut c = config(20_000, 5);
        c.planted_signal_strength = 1.3;
        let s = synth_corpus(&c).unwrap();
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for sess in s.corpus.sessions() {
            let z = s.latent[&sess.session_id];
            if sess.label() == DepressionLabel::DepPlus {
                pos.push(z);
            } else {
                neg.push(z);
            }
        }
        let gap = math::mean(&pos) - math::mean(&neg);
        assert!((gap - 1.3).abs() < 0.08, "{gap}");
    }

    #[test]
    fn waveform_is_bounded_and_deterministic() {
        let cfg = SynthAudioConfig::default();
        let w = latent_waveform(3.0, &cfg, 9);
        assert_eq!(w.samples.len(), 32_000);
        assert!(w.samples.iter().all(|x| x.abs() <= 1.0));
        assert_eq!(w, latent_waveform(3.0, &cfg, 9));
        w.validate().unwrap();
    }

    #[test]
    fn transcripts_carry_marker_words() {
        let hi = latent_transcript(3.0, 2000, 1);
        let lo = latent_transcript(-3.0, 2000, 1);
        let count = |t: &str| t.split(' ').filter(|w| MARKER_WORDS.contains(w)).count();
        assert!(count(&hi) > 4 * count(&lo));
        assert_eq!(hi.split(' ').count(), 2000);
    }
}
