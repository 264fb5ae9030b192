//! Maps free-form action strings onto registered action titles by embedding
//! cosine similarity.

use std::sync::Arc;

use thiserror::Error;

use crate::world::{ActionRegistry, ActionSpec};

pub const DEFAULT_THRESHOLD: f64 = 0.80;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbeddingError {
    #[error("embedding dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("cannot compare a zero vector")]
    ZeroVector,
    #[error("embedding is empty or contains non-finite values")]
    InvalidVector,
    #[error("invalid embedding input: {0}")]
    InvalidInput(String),
    #[error("provider returned dimension {got}, expected {expected}")]
    Inconsistent { expected: usize, got: usize },
    #[error("embedding request failed: {0}")]
    Backend(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::InvalidVector);
        }
        Ok(Embedding(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, k: f64) -> Result<Self, EmbeddingError> {
        Embedding::new(self.0.iter().map(|v| v * k).collect())
    }
}

/// Anything that turns text into vectors. Implementations must return equal
/// vectors for equal text within one instance and be safe to share.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError>;
    fn dimension(&self) -> usize;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Arc<P> {
    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        (**self).embed(text)
    }

    fn dimension(&self) -> usize {
        (**self).dimension()
    }
}

pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, EmbeddingError> {
    if a.dimension() != b.dimension() {
        return Err(EmbeddingError::DimensionMismatch(a.dimension(), b.dimension()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.0.iter().zip(&b.0) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Offline provider: bag of lowercase character trigrams hashed into 256
/// buckets, L2-normalised. Text shorter than three characters is a single gram.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramEmbedder;

impl TrigramEmbedder {
    pub const DIMENSION: usize = 256;
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl EmbeddingProvider for TrigramEmbedder {
    fn embed(&self, text: &str) -> Result<Embedding, EmbeddingError> {
        if text.is_empty() {
            return Err(EmbeddingError::InvalidInput("empty text".into()));
        }
        let chars: Vec<char> = text.to_lowercase().chars().collect();
        let mut counts = vec![0.0f64; Self::DIMENSION];
        let mut bump = |gram: &[char]| {
            let s: String = gram.iter().collect();
            counts[(fnv1a(s.as_bytes()) % Self::DIMENSION as u64) as usize] += 1.0;
        };
        if chars.len() < 3 {
            bump(&chars);
        } else {
            chars.windows(3).for_each(bump);
        }
        let norm = counts.iter().map(|c| c * c).sum::<f64>().sqrt();
        Embedding::new(counts.into_iter().map(|c| c / norm).collect())
    }

    fn dimension(&self) -> usize {
        Self::DIMENSION
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub index: usize,
    pub similarity: f64,
}

/// Label embeddings computed once, queried many times.
pub struct LabelIndex {
    provider: Arc<dyn EmbeddingProvider>,
    labels: Vec<String>,
    vectors: Vec<Embedding>,
}

impl std::fmt::Debug for LabelIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LabelIndex")
            .field("labels", &self.labels)
            .finish_non_exhaustive()
    }
}

impl LabelIndex {
    pub fn build<I, S>(provider: Arc<dyn EmbeddingProvider>, labels: I) -> Result<Self, GroundingError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(GroundingError::EmptyRegistry);
        }
        let vectors = labels
            .iter()
            .map(|l| provider.embed(l))
            .collect::<Result<_, _>>()?;
        Ok(LabelIndex {
            provider,
            labels,
            vectors,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Best label for `candidate`; ties go to the earliest label.
    pub fn best(&self, candidate: &str) -> Result<Match, GroundingError> {
        let query = self.provider.embed(candidate)?;
        let mut best = Match {
            index: 0,
            similarity: f64::NEG_INFINITY,
        };
        for (i, v) in self.vectors.iter().enumerate() {
            let s = cosine_similarity(&query, v)?;
            if s > best.similarity {
                best = Match {
                    index: i,
                    similarity: s,
                };
            }
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroundingError {
    #[error("no actions to ground against")]
    EmptyRegistry,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundingOutcome {
    Grounded(Vec<(ActionSpec, f64)>),
    Unmatched {
        index: usize,
        candidate: String,
        best_title: String,
        best_similarity: f64,
    },
}

/// Registry plus its cached title embeddings.
#[derive(Debug)]
pub struct Grounder {
    registry: ActionRegistry,
    index: LabelIndex,
}

impl Grounder {
    pub fn new(
        provider: Arc<dyn EmbeddingProvider>,
        registry: ActionRegistry,
    ) -> Result<Self, GroundingError> {
        let titles: Vec<String> = registry.titles().map(str::to_string).collect();
        let index = LabelIndex::build(provider, titles)?;
        Ok(Grounder { registry, index })
    }

    pub fn registry(&self) -> &ActionRegistry {
        &self.registry
    }

    pub fn ground_action(&self, candidate: &str) -> Result<(&ActionSpec, f64), GroundingError> {
        let m = self.index.best(candidate)?;
        let action = self
            .registry
            .get_index(m.index)
            .expect("index built from registry");
        Ok((action, m.similarity))
    }

    /// Grounds left to right and stops at the first candidate below `threshold`.
    pub fn ground_plan<S: AsRef<str>>(
        &self,
        candidates: &[S],
        threshold: f64,
    ) -> Result<GroundingOutcome, GroundingError> {
        let mut plan = Vec::with_capacity(candidates.len());
        for (i, c) in candidates.iter().enumerate() {
            let (action, sim) = self.ground_action(c.as_ref())?;
            if sim < threshold {
                return Ok(GroundingOutcome::Unmatched {
                    index: i,
                    candidate: c.as_ref().to_string(),
                    best_title: action.title().to_string(),
                    best_similarity: sim,
                });
            }
            plan.push((action.clone(), sim));
        }
        Ok(GroundingOutcome::Grounded(plan))
    }
}

/// One-shot grounding without a cache.
pub fn ground_action<'r>(
    candidate: &str,
    registry: &'r ActionRegistry,
    provider: &dyn EmbeddingProvider,
) -> Result<(&'r ActionSpec, f64), GroundingError> {
    if registry.is_empty() {
        return Err(GroundingError::EmptyRegistry);
    }
    let query = provider.embed(candidate)?;
    let mut best: Option<(&ActionSpec, f64)> = None;
    for action in registry.iter() {
        let s = cosine_similarity(&query, &provider.embed(action.title())?)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((action, s));
        }
    }
    Ok(best.expect("registry nonempty"))
}
