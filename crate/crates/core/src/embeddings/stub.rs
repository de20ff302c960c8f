//! Deterministic offline embedding provider.
//!
//! Vectors are pseudo-random unit vectors seeded from the content digest,
//! so the stub is a pure function of (modality, content). The optional
//! label-leak mode nudges the vector toward a per-class direction whenever
//! the content carries that class's marker string, giving synthetic
//! fixtures a learnable signal.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbeddingError, EmbeddingProvider, EmbeddingVector, Modality, EMBEDDING_DIM};

/// Class-marker leak configuration for the stub provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelLeak {
    /// Marker strings scanned for in the content. Longest match wins, so
    /// `not_hateful` shadows its `hateful` suffix.
    pub classes: Vec<String>,
    /// Offset magnitude added along the class direction before
    /// re-normalization.
    pub strength: f64,
}

impl LabelLeak {
    pub fn new(classes: &[&str], strength: f64) -> Self {
        Self { classes: classes.iter().map(|s| s.to_string()).collect(), strength }
    }

    fn matching_class(&self, content: &str) -> Option<&str> {
        let mut ordered: Vec<&String> = self.classes.iter().collect();
        ordered.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        ordered.into_iter().map(|s| s.as_str()).find(|c| content.contains(*c))
    }
}

pub struct StubProvider {
    model_name: String,
    leak: Option<LabelLeak>,
}

impl StubProvider {
    pub fn new(model_name: &str) -> Self {
        Self { model_name: model_name.to_string(), leak: None }
    }

    pub fn with_leak(mut self, leak: LabelLeak) -> Self {
        self.leak = Some(leak);
        self
    }
}

fn seed_from(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 yields at least 8 bytes"))
}

fn unit_vector(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<f64> =
        (0..EMBEDDING_DIM).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut values {
        *v /= norm;
    }
    values
}

/// Deterministic unit direction for one class marker.
fn class_direction(class: &str) -> Vec<f64> {
    unit_vector(seed_from(&[b"label-leak-direction", class.as_bytes()]))
}

impl EmbeddingProvider for StubProvider {
    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn embed_bytes(
        &self,
        modality: Modality,
        content: &[u8],
    ) -> Result<EmbeddingVector, EmbeddingError> {
        let seed = seed_from(&[modality.as_str().as_bytes(), content]);
        let mut values = unit_vector(seed);
        if let Some(leak) = &self.leak {
            let text = String::from_utf8_lossy(content);
            if let Some(class) = leak.matching_class(&text) {
                let direction = class_direction(class);
                for (v, d) in values.iter_mut().zip(&direction) {
                    *v += leak.strength * d;
                }
                let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
                for v in &mut values {
                    *v /= norm;
                }
            }
        }
        EmbeddingVector::new(values)
    }
}
