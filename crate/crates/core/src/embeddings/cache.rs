//! Content-addressed on-disk embedding cache.
//!
//! One file per entry, named by the hex digest of (modality, model name,
//! content bytes). Each file holds a one-line JSON header followed by the
//! 512 values in shortest round-trip decimal encoding, so stored vectors
//! come back bit-exact. Corrupted entries are dropped with a warning and
//! treated as misses.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{EmbeddingError, EmbeddingVector, Modality, EMBEDDING_DIM};

const CACHE_VERSION: u32 = 1;

/// Hex digest identifying one (modality, model, content) triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContentDigest(String);

impl fmt::Display for ContentDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Digest of (modality, provider model name, content bytes). Keyed on
/// content, not record id: identical content under different ids maps to
/// the same entry.
pub fn content_digest(modality: Modality, model_name: &str, content: &[u8]) -> ContentDigest {
    let mut hasher = Sha256::new();
    hasher.update(modality.as_str().as_bytes());
    hasher.update([0u8]);
    hasher.update(model_name.as_bytes());
    hasher.update([0u8]);
    hasher.update(content);
    ContentDigest(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheHeader {
    pub version: u32,
    pub modality: Modality,
    pub model_name: String,
    /// Unix seconds at write time.
    pub created_at: u64,
}

impl CacheHeader {
    pub fn new(modality: Modality, model_name: &str) -> Self {
        let created_at =
            SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self { version: CACHE_VERSION, modality, model_name: model_name.to_string(), created_at }
    }
}

/// Directory-backed cache with concurrent readers and serialized writers.
pub struct EmbeddingCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl EmbeddingCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| EmbeddingError::CacheIo {
            path: dir.display().to_string(),
            msg: e.to_string(),
        })?;
        Ok(Self { dir, write_lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn entry_path(&self, digest: &ContentDigest) -> PathBuf {
        self.dir.join(&digest.0)
    }

    /// Looks an entry up; any malformed entry is dropped and reported as
    /// a miss.
    pub fn get(&self, digest: &ContentDigest) -> Option<EmbeddingVector> {
        let path = self.entry_path(digest);
        let raw = fs::read_to_string(&path).ok()?;
        match parse_entry(&raw) {
            Ok((_, vector)) => Some(vector),
            Err(msg) => {
                log::warn!(
                    "dropping corrupted cache entry {} ({msg})",
                    path.display()
                );
                let _ = fs::remove_file(&path);
                None
            }
        }
    }

    /// Stores an entry. Writes go through a temp file plus rename so
    /// readers never observe partial entries.
    pub fn put(
        &self,
        digest: &ContentDigest,
        header: &CacheHeader,
        vector: &EmbeddingVector,
    ) -> Result<(), EmbeddingError> {
        let _guard = self.write_lock.lock().expect("cache write lock poisoned");
        let path = self.entry_path(digest);
        let tmp = self.dir.join(format!(".{}.tmp", digest.0));
        let io_err = |e: std::io::Error| EmbeddingError::CacheIo {
            path: path.display().to_string(),
            msg: e.to_string(),
        };
        let mut body = serde_json::to_string(header).expect("header serialization cannot fail");
        body.push('\n');
        for v in vector.values() {
            body.push_str(&format!("{v}"));
            body.push('\n');
        }
        fs::write(&tmp, body).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(io_err)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .map(|entries| {
                entries
                    .filter_map(|e| e.ok())
                    .filter(|e| !e.file_name().to_string_lossy().starts_with('.'))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn parse_entry(raw: &str) -> Result<(CacheHeader, EmbeddingVector), String> {
    let mut lines = raw.lines();
    let header_line = lines.next().ok_or("empty entry")?;
    let header: CacheHeader =
        serde_json::from_str(header_line).map_err(|e| format!("bad header: {e}"))?;
    if header.version != CACHE_VERSION {
        return Err(format!("unsupported cache version {}", header.version));
    }
    let mut values = Vec::with_capacity(EMBEDDING_DIM);
    for line in lines {
        if line.is_empty() {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|e| format!("bad value `{line}`: {e}"))?);
    }
    let vector = EmbeddingVector::new(values).map_err(|e| e.to_string())?;
    Ok((header, vector))
}
