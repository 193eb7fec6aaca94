//! Portable volume files: a JSON sidecar plus a raw little-endian payload.
//!
//! ```text
//! case_0000.json  {"id":..,"shape":[..],"spacing":[..],"dtype":"f32"|"u8","order":"C"}
//! case_0000.raw   C-order samples, IEEE-754 binary32 LE or unsigned bytes
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Case, Dataset, Volume};
use crate::geometry::LabelMask;
use crate::{Error, Extents, Result};

/// File name of the dataset manifest inside a dataset directory.
pub const DATASET_MANIFEST: &str = "dataset.json";

#[derive(Clone, Debug, PartialEq)]
pub enum VolumeFile {
    Image(Volume),
    Mask { id: String, mask: LabelMask },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    id: String,
    shape: Vec<usize>,
    spacing: Vec<f64>,
    dtype: String,
    order: String,
}

/// Payload path belonging to a sidecar path.
fn payload_path(sidecar: &Path) -> PathBuf {
    sidecar.with_extension("raw")
}

pub fn save_volume(path: &Path, volume: &VolumeFile) -> Result<()> {
    let (header, payload) = match volume {
        VolumeFile::Image(v) => (
            Header {
                id: v.id.clone(),
                shape: v.extents().axes().to_vec(),
                spacing: v.spacing().to_vec(),
                dtype: "f32".into(),
                order: "C".into(),
            },
            v.data().iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<u8>>(),
        ),
        VolumeFile::Mask { id, mask } => (
            Header {
                id: id.clone(),
                shape: mask.extents().axes().to_vec(),
                spacing: mask.spacing().to_vec(),
                dtype: "u8".into(),
                order: "C".into(),
            },
            mask.data().to_vec(),
        ),
    };
    let json = serde_json::to_vec_pretty(&header)?;
    fs::write(path, json).map_err(|e| Error::io(path, e))?;
    let raw = payload_path(path);
    fs::write(&raw, payload).map_err(|e| Error::io(&raw, e))?;
    Ok(())
}

fn read_header(path: &Path) -> Result<(Header, Extents)> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let malformed = |reason: String| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason,
    };
    let header: Header = serde_json::from_slice(&text).map_err(|e| malformed(e.to_string()))?;
    let extents = Extents::new(&header.shape).map_err(|e| malformed(e.to_string()))?;
    if header.order != "C" {
        return Err(malformed(format!("unsupported order {:?}", header.order)));
    }
    if header.spacing.len() != extents.ndim() || header.spacing.iter().any(|&s| !(s > 0.0)) {
        return Err(malformed(format!("spacing {:?} does not fit shape", header.spacing)));
    }
    if header.dtype != "f32" && header.dtype != "u8" {
        return Err(malformed(format!("unknown dtype {:?}", header.dtype)));
    }
    Ok((header, extents))
}

fn read_payload(path: &Path, expected: usize) -> Result<Vec<u8>> {
    let raw = payload_path(path);
    let bytes = fs::read(&raw).map_err(|e| Error::io(&raw, e))?;
    if bytes.len() != expected {
        return Err(Error::TruncatedPayload {
            path: raw,
            expected,
            actual: bytes.len(),
        });
    }
    Ok(bytes)
}

pub fn load_volume(path: &Path) -> Result<VolumeFile> {
    let (header, extents) = read_header(path)?;
    match header.dtype.as_str() {
        "f32" => {
            let bytes = read_payload(path, extents.len() * 4)?;
            let data: Vec<f32> = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let v = Volume::new(header.id, data, extents)
                .and_then(|v| v.with_spacing(header.spacing))
                .map_err(|e| Error::MalformedHeader {
                    path: path.to_path_buf(),
                    reason: e.to_string(),
                })?;
            Ok(VolumeFile::Image(v))
        }
        _ => {
            let data = read_payload(path, extents.len())?;
            let categories = data.iter().copied().max().unwrap_or(0).saturating_add(1).max(2);
            let mask = LabelMask::new(data, extents, categories)
                .and_then(|m| m.with_spacing(header.spacing))
                .map_err(|e| Error::MalformedHeader {
                    path: path.to_path_buf(),
                    reason: e.to_string(),
                })?;
            Ok(VolumeFile::Mask { id: header.id, mask })
        }
    }
}

pub fn load_image(path: &Path) -> Result<Volume> {
    match load_volume(path)? {
        VolumeFile::Image(v) => Ok(v),
        VolumeFile::Mask { .. } => Err(Error::DtypeMismatch {
            path: path.to_path_buf(),
            expected: "f32".into(),
            found: "u8".into(),
        }),
    }
}

pub fn load_mask(path: &Path) -> Result<(String, LabelMask)> {
    match load_volume(path)? {
        VolumeFile::Mask { id, mask } => Ok((id, mask)),
        VolumeFile::Image(_) => Err(Error::DtypeMismatch {
            path: path.to_path_buf(),
            expected: "u8".into(),
            found: "f32".into(),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One row of the dataset manifest; paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image: String,
    pub mask: Option<String>,
    pub labeled: bool,
    pub split: Split,
}

/// Writes every case of both datasets plus the manifest into `dir`.
pub fn write_dataset(dir: &Path, train: &Dataset, test: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for (ds, split) in [(train, Split::Train), (test, Split::Test)] {
        for (i, case) in ds.cases().iter().enumerate() {
            let id = &case.image.id;
            let image = format!("{id}.image.json");
            save_volume(&dir.join(&image), &VolumeFile::Image(case.image.clone()))?;
            let mask = match &case.mask {
                Some(m) => {
                    let name = format!("{id}.mask.json");
                    save_volume(
                        &dir.join(&name),
                        &VolumeFile::Mask {
                            id: id.clone(),
                            mask: m.clone(),
                        },
                    )?;
                    Some(name)
                }
                None => None,
            };
            entries.push(ManifestEntry {
                id: id.clone(),
                image,
                mask,
                labeled: ds.is_labeled(i),
                split,
            });
        }
    }
    let path = dir.join(DATASET_MANIFEST);
    fs::write(&path, serde_json::to_vec_pretty(&entries)?).map_err(|e| Error::io(&path, e))
}

/// Reads a dataset directory into its train and test parts.
pub fn read_dataset(dir: &Path) -> Result<(Dataset, Dataset)> {
    let path = dir.join(DATASET_MANIFEST);
    let text = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let entries: Vec<ManifestEntry> = serde_json::from_slice(&text).map_err(|e| Error::MalformedHeader {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let mut parts = [(Vec::new(), Vec::new()), (Vec::new(), Vec::new())];
    for entry in entries {
        let image = load_image(&dir.join(&entry.image))?;
        let mask = match &entry.mask {
            Some(m) => Some(load_mask(&dir.join(m))?.1),
            None => None,
        };
        let slot = match entry.split {
            Split::Train => &mut parts[0],
            Split::Test => &mut parts[1],
        };
        if entry.labeled {
            slot.1.push(entry.id.clone());
        }
        slot.0.push(Case { image, mask });
    }
    let [(train_cases, train_ids), (test_cases, test_ids)] = parts;
    Ok((Dataset::new(train_cases, &train_ids)?, Dataset::new(test_cases, &test_ids)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, split_labeled, SynthConfig};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn image_round_trip(h in 1usize..9, w in 1usize..9, seed in any::<u32>()) {
            let dir = tempfile::tempdir().unwrap();
            let data: Vec<f32> = (0..h * w).map(|i| ((i as u32 ^ seed) as f32).sin() * 1e3).collect();
            let v = Volume::new("vol", data, Extents::d2(h, w)).unwrap().with_spacing(vec![0.5, 2.0]).unwrap();
            let p = dir.path().join("v.json");
            save_volume(&p, &VolumeFile::Image(v.clone())).unwrap();
            prop_assert_eq!(load_image(&p).unwrap(), v);
        }
    }

    #[test]
    fn mask_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = LabelMask::new((0..27).map(|i| (i % 3) as u8).collect(), Extents::d3(3, 3, 3), 3).unwrap();
        let p = dir.path().join("m.json");
        save_volume(&p, &VolumeFile::Mask { id: "m".into(), mask: m.clone() }).unwrap();
        let (id, back) = load_mask(&p).unwrap();
        assert_eq!(id, "m");
        assert_eq!(back, m);
        assert!(matches!(load_image(&p), Err(Error::DtypeMismatch { .. })));
    }

    #[test]
    fn shape_payload_disagreement_is_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.json");
        let v = Volume::new("v", vec![1.0; 12], Extents::d2(3, 4)).unwrap();
        save_volume(&p, &VolumeFile::Image(v)).unwrap();
        let text = fs::read_to_string(&p).unwrap().replace("\n    4\n", "\n    5\n");
        fs::write(&p, text).unwrap();
        assert!(matches!(load_volume(&p), Err(Error::TruncatedPayload { expected: 60, actual: 48, .. })));
    }

    #[test]
    fn malformed_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, "{not json").unwrap();
        assert!(matches!(load_volume(&p), Err(Error::MalformedHeader { .. })));
        fs::write(&p, r#"{"id":"x","shape":[2,2],"spacing":[1,1],"dtype":"f64","order":"C"}"#).unwrap();
        assert!(matches!(load_volume(&p), Err(Error::MalformedHeader { .. })));
        fs::write(&p, r#"{"id":"x","shape":[2,2],"spacing":[1,1],"dtype":"u8","order":"F"}"#).unwrap();
        assert!(matches!(load_volume(&p), Err(Error::MalformedHeader { .. })));
    }

    #[test]
    fn dataset_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_synthetic(&SynthConfig {
            num_cases: 6,
            extents: Extents::d2(16, 16),
            ..SynthConfig::default()
        })
        .unwrap();
        let (train, test) = ds.hold_out(2).unwrap();
        let train = split_labeled(&train, 0.5, 3).unwrap();
        write_dataset(dir.path(), &train, &test).unwrap();
        let (a, b) = read_dataset(dir.path()).unwrap();
        assert_eq!(a, train);
        assert_eq!(b, test);
    }
}
