//! Remote embedding provider over a generic JSON contract.
//!
//! The wire format is deliberately vendor-neutral: POST to the endpoint
//! with `{"model", "modality", "content_hex"}` and read back
//! `{"values": [..]}`. Transport failures are retried with exponential
//! backoff; a response of the wrong dimensionality fails fast as a
//! contract violation.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    EmbeddingError, EmbeddingProvider, EmbeddingProviderSpec, EmbeddingVector, Modality,
};

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub model: &'a str,
    pub modality: Modality,
    pub content_hex: String,
}

#[derive(Debug, Deserialize)]
struct EmbedResponse {
    values: Vec<f64>,
}

/// Transport boundary for remote embedding calls; test doubles implement
/// this to exercise retry and contract checks without sockets.
pub trait EmbeddingTransport: Send + Sync {
    fn fetch(
        &self,
        endpoint: &str,
        api_key: Option<&str>,
        request: &EmbedRequest<'_>,
    ) -> Result<Vec<f64>, String>;
}

/// Blocking HTTP JSON transport.
pub struct HttpEmbeddingTransport;

impl EmbeddingTransport for HttpEmbeddingTransport {
    fn fetch(
        &self,
        endpoint: &str,
        api_key: Option<&str>,
        request: &EmbedRequest<'_>,
    ) -> Result<Vec<f64>, String> {
        let mut call = ureq::post(endpoint);
        if let Some(key) = api_key {
            call = call.set("authorization", &format!("Bearer {key}"));
        }
        let response = call
            .send_json(serde_json::to_value(request).expect("request serializes"))
            .map_err(|e| match e {
                // never echo the request or headers: the key must not leak
                ureq::Error::Status(code, _) => format!("endpoint returned status {code}"),
                ureq::Error::Transport(t) => format!("transport: {t}"),
            })?;
        let parsed: EmbedResponse =
            response.into_json().map_err(|e| format!("malformed response body: {e}"))?;
        Ok(parsed.values)
    }
}

pub struct RemoteProvider<T: EmbeddingTransport> {
    spec: EmbeddingProviderSpec,
    transport: T,
    max_attempts: u32,
    backoff: Duration,
}

impl RemoteProvider<HttpEmbeddingTransport> {
    pub fn over_http(spec: EmbeddingProviderSpec) -> Self {
        Self::with_transport(spec, HttpEmbeddingTransport)
    }
}

impl<T: EmbeddingTransport> RemoteProvider<T> {
    pub fn with_transport(spec: EmbeddingProviderSpec, transport: T) -> Self {
        Self { spec, transport, max_attempts: 3, backoff: Duration::from_millis(200) }
    }

    pub fn with_retry(mut self, max_attempts: u32, backoff: Duration) -> Self {
        self.max_attempts = max_attempts.max(1);
        self.backoff = backoff;
        self
    }

    fn api_key(&self) -> Option<String> {
        self.spec.api_key_env.as_deref().and_then(|name| std::env::var(name).ok())
    }
}

impl<T: EmbeddingTransport> EmbeddingProvider for RemoteProvider<T> {
    fn model_name(&self) -> &str {
        &self.spec.model_name
    }

    fn embed_bytes(
        &self,
        modality: Modality,
        content: &[u8],
    ) -> Result<EmbeddingVector, EmbeddingError> {
        let endpoint = self.spec.endpoint.as_deref().ok_or_else(|| {
            EmbeddingError::MissingEndpoint { model: self.spec.model_name.clone() }
        })?;
        let request = EmbedRequest {
            model: &self.spec.model_name,
            modality,
            content_hex: hex::encode(content),
        };
        let api_key = self.api_key();
        let mut last_err = String::new();
        for attempt in 1..=self.max_attempts {
            match self.transport.fetch(endpoint, api_key.as_deref(), &request) {
                Ok(values) => return EmbeddingVector::new(values),
                Err(msg) => {
                    log::warn!(
                        "embedding fetch attempt {attempt}/{} failed: {msg}",
                        self.max_attempts
                    );
                    last_err = msg;
                    if attempt < self.max_attempts {
                        thread::sleep(self.backoff * 2u32.pow(attempt - 1));
                    }
                }
            }
        }
        Err(EmbeddingError::Transport { attempts: self.max_attempts, msg: last_err })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        failures_before_success: u32,
        calls: AtomicU32,
        dim: usize,
    }

    impl EmbeddingTransport for Flaky {
        fn fetch(
            &self,
            _endpoint: &str,
            _api_key: Option<&str>,
            _request: &EmbedRequest<'_>,
        ) -> Result<Vec<f64>, String> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures_before_success {
                Err("connection reset".into())
            } else {
                Ok(vec![0.25; self.dim])
            }
        }
    }

    fn remote_spec() -> EmbeddingProviderSpec {
        EmbeddingProviderSpec {
            kind: super::super::EmbeddingProviderKind::Remote,
            endpoint: Some("http://provider.invalid/embed".into()),
            model_name: "remote-m".into(),
            api_key_env: None,
            label_leak: None,
        }
    }

    #[test]
    fn retries_then_succeeds() {
        let transport = Flaky { failures_before_success: 2, calls: AtomicU32::new(0), dim: 512 };
        let provider = RemoteProvider::with_transport(remote_spec(), transport)
            .with_retry(3, Duration::from_millis(0));
        let v = provider.embed_bytes(Modality::Text, b"abc").unwrap();
        assert_eq!(v.values().len(), 512);
    }

    #[test]
    fn exhausted_retries_surface_transport_error() {
        let transport = Flaky { failures_before_success: 99, calls: AtomicU32::new(0), dim: 512 };
        let provider = RemoteProvider::with_transport(remote_spec(), transport)
            .with_retry(3, Duration::from_millis(0));
        let err = provider.embed_bytes(Modality::Text, b"abc").unwrap_err();
        assert!(matches!(err, EmbeddingError::Transport { attempts: 3, .. }));
    }

    #[test]
    fn wrong_dimension_fails_without_retry_storm() {
        let transport = Flaky { failures_before_success: 0, calls: AtomicU32::new(0), dim: 256 };
        let provider = RemoteProvider::with_transport(remote_spec(), transport)
            .with_retry(3, Duration::from_millis(0));
        let err = provider.embed_bytes(Modality::Text, b"abc").unwrap_err();
        assert!(matches!(err, EmbeddingError::WrongDimension { actual: 256, .. }));
    }
}
