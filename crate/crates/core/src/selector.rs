//! Keyframe selection under a fixed budget.
//!
//! Utility is a sum of per-frame scores, so the best `N`-subset is simply the
//! `N` highest-scoring frames. Scores come from a pluggable [`FrameScorer`].

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::tensor::VideoTensor;

#[derive(Debug, Error, PartialEq)]
pub enum SelectorError {
    #[error("unknown scorer {0:?} (expected variance, tempdiff or external)")]
    UnknownScorer(String),
    #[error("budget {budget} is invalid for {frames} frames")]
    BudgetExceedsFrames { budget: usize, frames: usize },
    #[error("external scores do not match the video: {0}")]
    ShapeMismatch(String),
    #[error("score file line {line}: {message}")]
    ScoreFile { line: usize, message: String },
    #[error("score for frame {0} is not finite")]
    NonFiniteScore(usize),
    #[error("reading scores: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: usize,
    pub score: f64,
}

/// Scoring contract: one finite score per frame.
pub trait FrameScorer<T: Scalar> {
    fn score(&self, video: &VideoTensor<T>) -> Result<Vec<f64>, SelectorError>;
}

/// Built-in scoring strategies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scorer {
    /// Pixel variance of each frame.
    Variance,
    /// Mean absolute difference to the previous frame; frame 0 scores 0.
    TempDiff,
    /// Scores supplied from outside (for example by a vision-language model).
    External { scores: Vec<FrameScore> },
}

impl Scorer {
    /// Resolves a scorer by name; `external` reads its scores from `sidecar`.
    pub fn from_name(name: &str, sidecar: Option<&Path>) -> Result<Self, SelectorError> {
        match name {
            "variance" => Ok(Self::Variance),
            "tempdiff" => Ok(Self::TempDiff),
            "external" => {
                let path = sidecar.ok_or_else(|| SelectorError::Io("external scorer needs a score file".into()))?;
                let text = std::fs::read_to_string(path).map_err(|e| SelectorError::Io(e.to_string()))?;
                Ok(Self::External { scores: parse_score_file(&text)? })
            }
            other => Err(SelectorError::UnknownScorer(other.to_string())),
        }
    }
}

impl<T: Scalar> FrameScorer<T> for Scorer {
    fn score(&self, video: &VideoTensor<T>) -> Result<Vec<f64>, SelectorError> {
        let frames = video.frames();
        match self {
            Scorer::Variance => Ok(frames
                .iter()
                .map(|f| {
                    // Shifted by the first sample so constant frames score exactly 0.
                    let s = f.as_slice();
                    let n = s.len() as f64;
                    let x0 = s[0].as_f64();
                    let (sum, sq) = s.iter().fold((0.0, 0.0), |(a, b), v| {
                        let d = v.as_f64() - x0;
                        (a + d, b + d * d)
                    });
                    let mean = sum / n;
                    (sq / n - mean * mean).max(0.0)
                })
                .collect()),
            Scorer::TempDiff => {
                let mut out = vec![0.0; frames.len()];
                for t in 1..frames.len() {
                    let (a, b) = (frames[t - 1].as_slice(), frames[t].as_slice());
                    out[t] = a.iter().zip(b).map(|(x, y)| (y.as_f64() - x.as_f64()).abs()).sum::<f64>() / a.len() as f64;
                }
                Ok(out)
            }
            Scorer::External { scores } => {
                let n = frames.len();
                if scores.len() != n {
                    return Err(SelectorError::ShapeMismatch(format!("{} scores for {n} frames", scores.len())));
                }
                let mut out = vec![None; n];
                for s in scores {
                    let slot = out
                        .get_mut(s.frame_index)
                        .ok_or_else(|| SelectorError::ShapeMismatch(format!("frame index {} out of range", s.frame_index)))?;
                    if slot.replace(s.score).is_some() {
                        return Err(SelectorError::ShapeMismatch(format!("duplicate frame index {}", s.frame_index)));
                    }
                }
                Ok(out.into_iter().map(|v| v.expect("every index filled")).collect())
            }
        }
    }
}

/// Parses `frame_index,score` lines. Blank lines and `#` comments are skipped.
pub fn parse_score_file(text: &str) -> Result<Vec<FrameScore>, SelectorError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| SelectorError::ScoreFile { line: i + 1, message: message.to_string() };
        let (idx, score) = line.split_once(',').ok_or_else(|| err("expected frame_index,score"))?;
        let frame_index = idx.trim().parse().map_err(|_| err("bad frame index"))?;
        let score: f64 = score.trim().parse().map_err(|_| err("bad score"))?;
        out.push(FrameScore { frame_index, score });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    /// Number of keyframes `N`.
    pub budget: usize,
    pub scorer: Scorer,
}

/// Scores every frame with the configured built-in scorer.
pub fn score_frames<T: Scalar>(video: &VideoTensor<T>, cfg: &SelectorConfig) -> Result<Vec<FrameScore>, SelectorError> {
    score_frames_with(video, &cfg.scorer)
}

/// Scores every frame with an arbitrary scorer.
pub fn score_frames_with<T: Scalar, S: FrameScorer<T> + ?Sized>(
    video: &VideoTensor<T>,
    scorer: &S,
) -> Result<Vec<FrameScore>, SelectorError> {
    let scores = scorer.score(video)?;
    if scores.len() != video.len() {
        return Err(SelectorError::ShapeMismatch(format!("{} scores for {} frames", scores.len(), video.len())));
    }
    scores
        .into_iter()
        .enumerate()
        .map(
            |(frame_index, score)| {
                if score.is_finite() {
                    Ok(FrameScore { frame_index, score })
                } else {
                    Err(SelectorError::NonFiniteScore(frame_index))
                }
            },
        )
        .collect()
}

/// The `n` highest-scoring frame indices, ascending. Ties favour earlier frames.
pub fn select_keyframes(scores: &[FrameScore], n: usize) -> Result<Vec<usize>, SelectorError> {
    if n == 0 || n > scores.len() {
        return Err(SelectorError::BudgetExceedsFrames { budget: n, frames: scores.len() });
    }
    let mut ranked: Vec<&FrameScore> = scores.iter().collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.frame_index.cmp(&b.frame_index)));
    let mut picked: Vec<usize> = ranked[..n].iter().map(|s| s.frame_index).collect();
    picked.sort_unstable();
    Ok(picked)
}
