use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::net::NetConfig;
use super::params::ParamEntry;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "checkpoint.json";
pub const STUDENT_FILE: &str = "checkpoint.student.bin";
pub const TEACHER_FILE: &str = "checkpoint.teacher.bin";
pub const MOMENTUM_FILE: &str = "checkpoint.momentum.bin";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub net: NetConfig,
    /// Number of completed optimizer steps.
    pub step: u64,
    pub alpha: f64,
    pub num_params: usize,
    pub params: Vec<ParamEntry>,
    /// Caller-defined training configuration.
    #[serde(default)]
    pub train_config: serde_json::Value,
}

/// Everything needed to resume training: both networks and the optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub manifest: CheckpointManifest,
    pub student: Vec<f32>,
    pub teacher: Vec<f32>,
    pub momentum: Vec<f32>,
}

fn write_f32(path: &Path, values: &[f32]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_f32(path: &Path, expected: usize) -> Result<Vec<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected * 4 {
        return Err(Error::TruncatedPayload {
            path: path.to_path_buf(),
            expected: expected * 4,
            actual: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn save_checkpoint(dir: &Path, ckpt: &Checkpoint) -> Result<()> {
    let n = ckpt.manifest.num_params;
    for (what, v) in [("student", &ckpt.student), ("teacher", &ckpt.teacher), ("momentum", &ckpt.momentum)] {
        if v.len() != n {
            return Err(Error::InvalidState(format!("{what} has {} values, manifest says {n}", v.len())));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_f32(&dir.join(STUDENT_FILE), &ckpt.student)?;
    write_f32(&dir.join(TEACHER_FILE), &ckpt.teacher)?;
    write_f32(&dir.join(MOMENTUM_FILE), &ckpt.momentum)?;
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&ckpt.manifest)?;
    fs::write(&path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text).map_err(|e| Error::MalformedHeader {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let indexed: usize = manifest.params.iter().map(|p| p.len).sum();
    if indexed != manifest.num_params {
        return Err(Error::MalformedHeader {
            path,
            reason: format!("parameter index covers {indexed} values, header says {}", manifest.num_params),
        });
    }
    let n = manifest.num_params;
    Ok(Checkpoint {
        student: read_f32(&dir.join(STUDENT_FILE), n)?,
        teacher: read_f32(&dir.join(TEACHER_FILE), n)?,
        momentum: read_f32(&dir.join(MOMENTUM_FILE), n)?,
        manifest,
    })
}
