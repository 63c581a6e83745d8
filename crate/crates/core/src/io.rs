//! Versioned JSON envelopes for models and checkpoints.
//!
//! Every persisted model is wrapped in an envelope carrying a schema tag and
//! a SHA-256 checksum of the payload, so a truncated or hand-edited file is
//! rejected at load time instead of producing silent garbage.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io error on {path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("schema mismatch in {path}: expected {expected}, found {found}")]
    Schema {
        path: String,
        expected: String,
        found: String,
    },
    #[error("checksum mismatch in {path}: file is corrupt or was edited")]
    Checksum { path: String },
}

#[derive(Debug, Serialize, Deserialize)]
struct Envelope {
    schema: String,
    checksum: String,
    payload: serde_json::Value,
}

fn payload_checksum(payload: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(payload).expect("value serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a byte slice, hex encoded. Used for config/manifest hashes.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_string(&hasher.finalize())
}

/// Writes `value` under the given schema tag.
pub fn save_versioned<T: Serialize>(path: &Path, schema: &str, value: &T) -> Result<(), IoError> {
    let payload = serde_json::to_value(value).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    let envelope = Envelope {
        schema: schema.to_string(),
        checksum: payload_checksum(&payload),
        payload,
    };
    let text = serde_json::to_string(&envelope).expect("envelope serializes");
    fs::write(path, text).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a value written by [`save_versioned`], verifying schema and checksum.
pub fn load_versioned<T: DeserializeOwned>(path: &Path, schema: &str) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    let envelope: Envelope = serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    if envelope.schema != schema {
        return Err(IoError::Schema {
            path: path.display().to_string(),
            expected: schema.to_string(),
            found: envelope.schema,
        });
    }
    if payload_checksum(&envelope.payload) != envelope.checksum {
        return Err(IoError::Checksum {
            path: path.display().to_string(),
        });
    }
    serde_json::from_value(envelope.payload).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Demo {
        a: u32,
        b: Vec<f64>,
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo.json");
        let value = Demo {
            a: 3,
            b: vec![1.5, -2.0],
        };
        save_versioned(&path, "demo/v1", &value).unwrap();
        let back: Demo = load_versioned(&path, "demo/v1").unwrap();
        assert_eq!(back, value);
    }

    #[test]
    fn corrupt_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo.json");
        let value = Demo {
            a: 3,
            b: vec![1.0],
        };
        save_versioned(&path, "demo/v1", &value).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("1.0", "2.0");
        fs::write(&path, text).unwrap();
        let err = load_versioned::<Demo>(&path, "demo/v1").unwrap_err();
        assert!(matches!(err, IoError::Checksum { .. }));
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demo.json");
        save_versioned(&path, "demo/v1", &Demo { a: 1, b: vec![] }).unwrap();
        let err = load_versioned::<Demo>(&path, "demo/v2").unwrap_err();
        assert!(matches!(err, IoError::Schema { .. }));
    }
}
