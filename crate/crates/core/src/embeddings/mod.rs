//! Per-modality embedding vectors behind a pluggable provider contract.
//!
//! Three provider kinds exist: `remote` (a JSON-over-HTTP endpoint),
//! `stub` (deterministic pseudo-random unit vectors for offline runs and
//! fixtures), and `replay` (answers only from a pre-populated cache).
//! All providers produce 512-dim finite vectors; anything else is a
//! contract violation.

mod cache;
mod remote;
mod stub;

pub use cache::{CacheHeader, ContentDigest, EmbeddingCache};
pub use remote::{EmbeddingTransport, HttpEmbeddingTransport, RemoteProvider};
pub use stub::{LabelLeak, StubProvider};

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Record;
use crate::par;

/// Every modality embeds into this many dimensions.
pub const EMBEDDING_DIM: usize = 512;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("provider returned {actual} values, contract requires {expected}")]
    WrongDimension { expected: usize, actual: usize },
    #[error("provider returned a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("content is empty")]
    EmptyContent,
    #[error("image reference `{path}` cannot be resolved: {msg}")]
    UnresolvableImage { path: String, msg: String },
    #[error("record `{id}` has no image reference")]
    MissingImageRef { id: String },
    #[error("transport failure after {attempts} attempt(s): {msg}")]
    Transport { attempts: u32, msg: String },
    #[error("provider endpoint missing for remote provider `{model}`")]
    MissingEndpoint { model: String },
    #[error("no cached embedding for digest {digest} in replay mode")]
    MissingCacheEntry { digest: String },
    #[error("cache io error at {path}: {msg}")]
    CacheIo { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Text,
    Image,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Image => "image",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A fixed-length vector of finite reals, one per embedded modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Validates the dimension/finiteness contract.
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.len() != EMBEDDING_DIM {
            return Err(EmbeddingError::WrongDimension {
                expected: EMBEDDING_DIM,
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingProviderKind {
    Remote,
    Stub,
    Replay,
}

/// Configuration for one embedding provider.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingProviderSpec {
    pub kind: EmbeddingProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub model_name: String,
    /// Name of the environment variable holding the API key. The key
    /// itself is read lazily and never logged.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Stub-only: inject a class-dependent offset so synthetic fixtures
    /// carry learnable signal.
    #[serde(default)]
    pub label_leak: Option<LabelLeak>,
}

impl EmbeddingProviderSpec {
    pub fn stub(model_name: &str) -> Self {
        Self {
            kind: EmbeddingProviderKind::Stub,
            endpoint: None,
            model_name: model_name.to_string(),
            api_key_env: None,
            label_leak: None,
        }
    }

    pub fn with_leak(mut self, leak: LabelLeak) -> Self {
        self.label_leak = Some(leak);
        self
    }

    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.kind == EmbeddingProviderKind::Remote && self.endpoint.is_none() {
            return Err(EmbeddingError::MissingEndpoint { model: self.model_name.clone() });
        }
        Ok(())
    }
}

/// Maps content bytes of one modality to a 512-dim vector.
///
/// Implementations must be pure in (modality, content): repeated calls
/// with identical inputs return identical vectors.
pub trait EmbeddingProvider: Send + Sync {
    fn model_name(&self) -> &str;

    fn embed_bytes(
        &self,
        modality: Modality,
        content: &[u8],
    ) -> Result<EmbeddingVector, EmbeddingError>;
}

/// Resolves embedding input to raw content bytes.
///
/// Text content is its UTF-8 bytes; image content is the referenced
/// file's bytes (relative references resolve against `base_dir`).
pub fn content_bytes(
    modality: Modality,
    content: &str,
    base_dir: Option<&Path>,
) -> Result<Vec<u8>, EmbeddingError> {
    if content.is_empty() {
        return Err(EmbeddingError::EmptyContent);
    }
    match modality {
        Modality::Text => Ok(content.as_bytes().to_vec()),
        Modality::Image => {
            let direct = Path::new(content);
            let resolved = if direct.is_absolute() || base_dir.is_none() {
                direct.to_path_buf()
            } else {
                base_dir.unwrap().join(direct)
            };
            fs::read(&resolved).map_err(|e| EmbeddingError::UnresolvableImage {
                path: content.to_string(),
                msg: e.to_string(),
            })
        }
    }
}

/// An embedding provider with an optional write-through cache.
///
/// Lookups are keyed by the digest of (modality, model name, content
/// bytes); the pipeline behaves identically with the cache on or off.
pub struct Embedder {
    provider: Box<dyn EmbeddingProvider>,
    cache: Option<EmbeddingCache>,
    replay_only: bool,
}

impl Embedder {
    /// Builds the provider named by `spec`, attaching `cache_dir` when given.
    pub fn from_spec(
        spec: &EmbeddingProviderSpec,
        cache_dir: Option<&Path>,
    ) -> Result<Self, EmbeddingError> {
        spec.validate()?;
        let cache = cache_dir.map(EmbeddingCache::open).transpose()?;
        match spec.kind {
            EmbeddingProviderKind::Stub => {
                let mut stub = StubProvider::new(&spec.model_name);
                if let Some(leak) = &spec.label_leak {
                    stub = stub.with_leak(leak.clone());
                }
                Ok(Self { provider: Box::new(stub), cache, replay_only: false })
            }
            EmbeddingProviderKind::Remote => {
                let provider = RemoteProvider::over_http(spec.clone());
                Ok(Self { provider: Box::new(provider), cache, replay_only: false })
            }
            EmbeddingProviderKind::Replay => {
                let cache = cache.ok_or_else(|| EmbeddingError::CacheIo {
                    path: String::from("<none>"),
                    msg: "replay provider requires a cache directory".into(),
                })?;
                // the inner provider is never reached in replay mode
                let stub = StubProvider::new(&spec.model_name);
                Ok(Self { provider: Box::new(stub), cache: Some(cache), replay_only: true })
            }
        }
    }

    pub fn from_provider(
        provider: Box<dyn EmbeddingProvider>,
        cache: Option<EmbeddingCache>,
    ) -> Self {
        Self { provider, cache, replay_only: false }
    }

    pub fn model_name(&self) -> &str {
        self.provider.model_name()
    }

    /// Embeds one piece of content, consulting the cache first.
    pub fn embed(
        &self,
        modality: Modality,
        content: &str,
        base_dir: Option<&Path>,
    ) -> Result<EmbeddingVector, EmbeddingError> {
        let bytes = content_bytes(modality, content, base_dir)?;
        let digest = cache::content_digest(modality, self.provider.model_name(), &bytes);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&digest) {
                return Ok(hit);
            }
        }
        if self.replay_only {
            return Err(EmbeddingError::MissingCacheEntry { digest: digest.to_string() });
        }
        let vector = self.provider.embed_bytes(modality, &bytes)?;
        if let Some(cache) = &self.cache {
            cache.put(
                &digest,
                &CacheHeader::new(modality, self.provider.model_name()),
                &vector,
            )?;
        }
        Ok(vector)
    }

    /// Embeds the chosen modality of every record, in record order.
    ///
    /// Runs data-parallel when the `parallel` feature is on; output order
    /// and values are identical either way.
    pub fn embed_records(
        &self,
        records: &[Record],
        modality: Modality,
        base_dir: Option<&Path>,
    ) -> Result<Vec<EmbeddingVector>, EmbeddingError> {
        let results = par::map_collect(records, |record| match modality {
            Modality::Text => self.embed(Modality::Text, &record.text, base_dir),
            Modality::Image => {
                let image = record.image_ref.as_deref().ok_or_else(|| {
                    EmbeddingError::MissingImageRef { id: record.id.clone() }
                })?;
                self.embed(Modality::Image, image, base_dir)
            }
        });
        results.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stub_is_deterministic() {
        let stub = StubProvider::new("stub-v1");
        let a = stub.embed_bytes(Modality::Text, b"abc").unwrap();
        let b = stub.embed_bytes(Modality::Text, b"abc").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stub_output_is_unit_norm_512() {
        let stub = StubProvider::new("stub-v1");
        for content in ["abc", "xyz", "\u{0645}\u{0631}\u{062d}\u{0628}\u{0627}"] {
            let v = stub.embed_bytes(Modality::Text, content.as_bytes()).unwrap();
            assert_eq!(v.values().len(), EMBEDDING_DIM);
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn modality_changes_the_vector() {
        let stub = StubProvider::new("stub-v1");
        let t = stub.embed_bytes(Modality::Text, b"abc").unwrap();
        let i = stub.embed_bytes(Modality::Image, b"abc").unwrap();
        assert_ne!(t, i);
    }

    #[test]
    fn wrong_dimension_is_a_contract_violation() {
        struct Short;
        impl EmbeddingProvider for Short {
            fn model_name(&self) -> &str {
                "short"
            }
            fn embed_bytes(
                &self,
                _modality: Modality,
                _content: &[u8],
            ) -> Result<EmbeddingVector, EmbeddingError> {
                EmbeddingVector::new(vec![0.5; 256])
            }
        }
        let embedder = Embedder::from_provider(Box::new(Short), None);
        let err = embedder.embed(Modality::Text, "abc", None).unwrap_err();
        assert!(matches!(err, EmbeddingError::WrongDimension { expected: 512, actual: 256 }));
    }

    #[test]
    fn empty_content_is_rejected() {
        let embedder =
            Embedder::from_spec(&EmbeddingProviderSpec::stub("stub-v1"), None).unwrap();
        assert!(matches!(
            embedder.embed(Modality::Text, "", None),
            Err(EmbeddingError::EmptyContent)
        ));
    }

    #[test]
    fn unresolvable_image_is_an_input_error() {
        let embedder =
            Embedder::from_spec(&EmbeddingProviderSpec::stub("stub-v1"), None).unwrap();
        let err = embedder.embed(Modality::Image, "/no/such/file.ppm", None).unwrap_err();
        assert!(matches!(err, EmbeddingError::UnresolvableImage { .. }));
    }

    #[test]
    fn remote_spec_requires_endpoint() {
        let spec = EmbeddingProviderSpec {
            kind: EmbeddingProviderKind::Remote,
            endpoint: None,
            model_name: "m".into(),
            api_key_env: None,
            label_leak: None,
        };
        assert!(matches!(spec.validate(), Err(EmbeddingError::MissingEndpoint { .. })));
    }

    #[test]
    fn label_leak_prefers_longest_marker() {
        let leak = LabelLeak::new(&["hateful", "not_hateful"], 1.0);
        let stub = StubProvider::new("stub-v1").with_leak(leak.clone());
        let plain = StubProvider::new("stub-v1");

        let not_hateful = stub
            .embed_bytes(Modality::Text, "label not_hateful text".as_bytes())
            .unwrap();
        let hateful = stub.embed_bytes(Modality::Text, "label hateful text".as_bytes()).unwrap();

        // same class marker pulls different contents together
        let not_hateful2 =
            stub.embed_bytes(Modality::Text, "other not_hateful words".as_bytes()).unwrap();
        let dot = |a: &EmbeddingVector, b: &EmbeddingVector| -> f64 {
            a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum()
        };
        assert!(dot(&not_hateful, &not_hateful2) > dot(&not_hateful, &hateful));

        // content without any marker is untouched relative to the plain stub
        let free = stub.embed_bytes(Modality::Text, b"nothing to see").unwrap();
        let free_plain = plain.embed_bytes(Modality::Text, b"nothing to see").unwrap();
        assert_eq!(free, free_plain);
    }

    proptest! {
        #[test]
        fn distinct_texts_get_distinct_digests(a in "[a-z]{1,16}", b in "[a-z]{1,16}") {
            prop_assume!(a != b);
            let da = cache::content_digest(Modality::Text, "m", a.as_bytes());
            let db = cache::content_digest(Modality::Text, "m", b.as_bytes());
            prop_assert_ne!(da.to_string(), db.to_string());
        }
    }
}
