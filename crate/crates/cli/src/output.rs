use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use demofuse::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Writes through a temp file in the destination directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    log::debug!("wrote {}", path.display());
    Ok(())
}

pub fn jsonl<R: Serialize>(records: &[R]) -> Vec<u8> {
    let mut buf = Vec::new();
    demofuse::streams::write_jsonl(records, &mut buf).expect("writing to memory");
    buf
}

pub fn pretty<R: Serialize + ?Sized>(value: &R) -> Vec<u8> {
    let mut buf = serde_json::to_vec_pretty(value).expect("value serializes");
    buf.push(b'\n');
    buf
}

pub fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance record written next to every run's outputs. Holds no timestamps so reruns
/// reproduce it byte for byte.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str, config: serde_json::Value) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(())
    }

    /// Writes `bytes` to `path` and records it as an output.
    pub fn emit(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.outputs.push(path.display().to_string());
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &pretty(self))
    }
}

/// Manifest location for a command whose output is a single file: `<out>.manifest.json`.
pub fn manifest_beside(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.txt");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"second");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn manifest_digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.txt");
        fs::write(&path, b"abc").unwrap();
        let mut m = RunManifest::new("test", serde_json::Value::Null);
        m.input(&path).unwrap();
        assert_eq!(m.inputs[0].sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_name_for_file_output() {
        assert_eq!(manifest_beside(Path::new("out/traj.jsonl")), Path::new("out/traj.jsonl.manifest.json"));
    }
}
