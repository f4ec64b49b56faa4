//! Content-addressed response cache.
//!
//! Layout: one `<digest>.json` file per key under the cache directory. Each
//! payload carries a schema version header. Writes go through a temp file and
//! an atomic rename, serialized by a process-wide lock; readers never block.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BackendConfig, GatewayError, SampledResponse, SamplingParams};

pub const CACHE_SCHEMA_VERSION: u32 = 1;

/// Stable digest of everything that influences a generation call.
pub fn cache_key(backend: &BackendConfig, prompt: &str, params: &SamplingParams) -> String {
    let mut hasher = Sha256::new();
    let mut field = |name: &str, value: &[u8]| {
        hasher.update(name.as_bytes());
        hasher.update((value.len() as u64).to_le_bytes());
        hasher.update(value);
    };
    field("schema", &CACHE_SCHEMA_VERSION.to_le_bytes());
    field("kind", backend.kind.as_str().as_bytes());
    field(
        "endpoint",
        backend.endpoint.as_deref().unwrap_or("").as_bytes(),
    );
    field("model_id", backend.model_id.as_bytes());
    field("prompt", prompt.as_bytes());
    field("temperature", &params.temperature.to_bits().to_le_bytes());
    field("max_tokens", &params.max_tokens.to_le_bytes());
    field("n", &(params.n as u64).to_le_bytes());
    match params.seed {
        Some(seed) => field("seed", &seed.to_le_bytes()),
        None => field("seed", b"none"),
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub schema_version: u32,
    pub key: String,
    pub model_id: String,
    pub prompt: String,
    pub responses: Vec<SampledResponse>,
}

#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)
            .map_err(|e| GatewayError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Returns `None` on a miss. Entries with another schema version are
    /// treated as misses.
    pub fn lookup(&self, key: &str) -> Result<Option<CacheEntry>, GatewayError> {
        let path = self.path_for(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(GatewayError::Cache(format!("{}: {e}", path.display()))),
        };
        let entry: CacheEntry = serde_json::from_slice(&bytes)
            .map_err(|e| GatewayError::Cache(format!("{}: {e}", path.display())))?;
        if entry.schema_version != CACHE_SCHEMA_VERSION || entry.key != key {
            return Ok(None);
        }
        Ok(Some(entry))
    }

    pub fn store(&self, entry: &CacheEntry) -> Result<(), GatewayError> {
        let payload =
            serde_json::to_vec_pretty(entry).map_err(|e| GatewayError::Cache(e.to_string()))?;
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let tmp = self.dir.join(format!(".{}.tmp", entry.key));
        let path = self.path_for(&entry.key);
        fs::write(&tmp, payload)
            .and_then(|_| fs::rename(&tmp, &path))
            .map_err(|e| GatewayError::Cache(format!("{}: {e}", path.display())))
    }

    pub fn keys(&self) -> Result<Vec<String>, GatewayError> {
        let mut keys: Vec<String> = fs::read_dir(&self.dir)
            .map_err(|e| GatewayError::Cache(e.to_string()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let stem = name.strip_suffix(".json")?;
                (!stem.starts_with('.')).then(|| stem.to_string())
            })
            .collect();
        keys.sort();
        Ok(keys)
    }

    /// Removes every cached entry and returns how many were deleted.
    pub fn purge(&self) -> Result<usize, GatewayError> {
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        let keys = self.keys()?;
        for key in &keys {
            fs::remove_file(self.path_for(key)).map_err(|e| GatewayError::Cache(e.to_string()))?;
        }
        Ok(keys.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{BackendKind, FinishReason};

    fn backend() -> BackendConfig {
        BackendConfig::new(BackendKind::ScriptedGeneration, "m")
    }

    #[test]
    fn key_is_stable() {
        let p = SamplingParams::default();
        assert_eq!(
            cache_key(&backend(), "q", &p),
            cache_key(&backend(), "q", &p)
        );
    }

    #[test]
    fn key_sensitive_to_every_field() {
        let p = SamplingParams::default().with_seed(1);
        let base = cache_key(&backend(), "q", &p);
        let variants = [
            cache_key(
                &BackendConfig::new(BackendKind::ScriptedGeneration, "m2"),
                "q",
                &p,
            ),
            cache_key(&backend(), "q2", &p),
            cache_key(
                &backend(),
                "q",
                &SamplingParams {
                    temperature: 0.7,
                    ..p.clone()
                },
            ),
            cache_key(
                &backend(),
                "q",
                &SamplingParams {
                    max_tokens: 64,
                    ..p.clone()
                },
            ),
            cache_key(&backend(), "q", &p.clone().with_n(5)),
            cache_key(&backend(), "q", &p.clone().with_seed(2)),
            cache_key(
                &backend(),
                "q",
                &SamplingParams {
                    seed: None,
                    ..p.clone()
                },
            ),
        ];
        for v in variants {
            assert_ne!(v, base);
        }
    }

    #[test]
    fn store_then_lookup_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let key = cache_key(&backend(), "q", &SamplingParams::default());
        assert!(cache.lookup(&key).unwrap().is_none());
        let entry = CacheEntry {
            schema_version: CACHE_SCHEMA_VERSION,
            key: key.clone(),
            model_id: "m".into(),
            prompt: "q".into(),
            responses: vec![SampledResponse::new(
                "Linda Davis",
                Some(vec![-0.1234567890123, -1e-17]),
                FinishReason::Stop,
            )
            .unwrap()],
        };
        cache.store(&entry).unwrap();
        assert_eq!(cache.lookup(&key).unwrap(), Some(entry));
        assert_eq!(cache.keys().unwrap(), vec![key]);
        assert_eq!(cache.purge().unwrap(), 1);
        assert!(cache.keys().unwrap().is_empty());
    }
}
