//! Run manifests: every invocation records its command, parameters, tool
//! version and timestamp; file outputs get a sibling `*.manifest.json`
//! carrying their SHA-256 digests, and JSON payloads embed the manifest
//! inline.
//!
//! Reruns with identical manifests produce bitwise-identical outputs:
//! pin `SOURCE_DATE_EPOCH` to fix the timestamp, and pass the same seed
//! where a command uses one.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub version: String,
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, parameters: impl IntoIterator<Item = (String, String)>) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse::<u64>().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            command: command.to_string(),
            parameters: parameters.into_iter().collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }
}

#[derive(Serialize)]
struct OutputRecord {
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct ManifestFile<'a> {
    #[serde(flatten)]
    manifest: &'a RunManifest,
    outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(data: &[u8]) -> String {
    let digest = Sha256::digest(data);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes the sibling `<first output>.manifest.json` with digests of all
/// payload files just written.
pub fn write_sidecar(manifest: &RunManifest, outputs: &[&Path]) -> std::io::Result<()> {
    let records = outputs
        .iter()
        .map(|path| {
            let data = fs::read(path)?;
            Ok(OutputRecord {
                file: path
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sha256: sha256_hex(&data),
            })
        })
        .collect::<std::io::Result<Vec<_>>>()?;
    let doc = ManifestFile {
        manifest,
        outputs: records,
    };
    let first = outputs.first().expect("at least one output");
    let sidecar = first.with_file_name(format!(
        "{}.manifest.json",
        first.file_name().unwrap_or_default().to_string_lossy()
    ));
    fs::write(sidecar, serde_json::to_string_pretty(&doc).expect("serializable"))
}
