use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DataError, Result};
use crate::record::FeatureRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFiles {
    pub train: String,
    pub dev: String,
    pub test: String,
}

/// Dataset descriptor stored next to the split files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub slots: Vec<String>,
    pub labels: Vec<String>,
    pub splits: SplitSizes,
    pub files: SplitFiles,
    pub sha256: BTreeMap<String, String>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(DataError::Manifest("d must be positive".into()));
        }
        if self.k == 0 {
            return Err(DataError::Manifest("K must be positive".into()));
        }
        if self.labels.len() != self.k {
            return Err(DataError::Manifest(format!(
                "K={} but {} label names",
                self.k,
                self.labels.len()
            )));
        }
        if self.slots.is_empty() {
            return Err(DataError::Manifest("slot set must be nonempty".into()));
        }
        let mut unique = self.slots.clone();
        unique.sort();
        unique.dedup();
        if unique.len() != self.slots.len() {
            return Err(DataError::Manifest("duplicate slot names".into()));
        }
        for (split, size) in [
            ("train", self.splits.train),
            ("dev", self.splits.dev),
            ("test", self.splits.test),
        ] {
            if size == 0 {
                return Err(DataError::Manifest(format!(
                    "{split} split size must be positive"
                )));
            }
        }
        Ok(())
    }
}

/// Loaded dataset: manifest plus validated records per split.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub train: Vec<FeatureRecord>,
    pub dev: Vec<FeatureRecord>,
    pub test: Vec<FeatureRecord>,
}

impl Dataset {
    pub fn split(&self, name: &str) -> Option<&[FeatureRecord]> {
        match name {
            "train" => Some(&self.train),
            "dev" => Some(&self.dev),
            "test" => Some(&self.test),
            _ => None,
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

fn read_split(
    dir: &Path,
    file: &str,
    split: &str,
    manifest: &DatasetManifest,
) -> Result<Vec<FeatureRecord>> {
    let path = dir.join(file);
    let display = path.display().to_string();
    let bytes = fs::read(&path).map_err(|source| DataError::Io {
        path: display.clone(),
        source,
    })?;

    match manifest.sha256.get(file) {
        None => {
            return Err(DataError::Manifest(format!(
                "no sha256 entry for file {file}"
            )))
        }
        Some(expected) => {
            let actual = sha256_hex(&bytes);
            if *expected != actual {
                return Err(DataError::Digest {
                    file: file.to_string(),
                    expected: expected.clone(),
                    actual,
                });
            }
        }
    }

    let mut records = Vec::new();
    for line in BufReader::new(bytes.as_slice()).lines() {
        let line = line.map_err(|source| DataError::Io {
            path: display.clone(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FeatureRecord =
            serde_json::from_str(&line).map_err(|source| DataError::Json {
                path: display.clone(),
                source,
            })?;
        record.validate(manifest.d, manifest.k, &manifest.slots)?;
        records.push(record);
    }

    let declared = match split {
        "train" => manifest.splits.train,
        "dev" => manifest.splits.dev,
        _ => manifest.splits.test,
    };
    if records.len() != declared {
        return Err(DataError::SplitSize {
            split: split.to_string(),
            declared,
            actual: records.len(),
        });
    }
    Ok(records)
}

/// Loads and fully validates a dataset from its manifest path.
pub fn load(manifest_path: impl AsRef<Path>) -> Result<Dataset> {
    let manifest_path = manifest_path.as_ref();
    let display = manifest_path.display().to_string();
    let bytes = fs::read(manifest_path).map_err(|source| DataError::Io {
        path: display.clone(),
        source,
    })?;
    let manifest: DatasetManifest =
        serde_json::from_slice(&bytes).map_err(|source| DataError::Json {
            path: display,
            source,
        })?;
    manifest.validate()?;

    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let train = read_split(dir, &manifest.files.train.clone(), "train", &manifest)?;
    let dev = read_split(dir, &manifest.files.dev.clone(), "dev", &manifest)?;
    let test = read_split(dir, &manifest.files.test.clone(), "test", &manifest)?;
    Ok(Dataset {
        manifest,
        train,
        dev,
        test,
    })
}

fn encode_jsonl(records: &[FeatureRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        let line = serde_json::to_string(r).map_err(|source| DataError::Json {
            path: "<encode>".into(),
            source,
        })?;
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    Ok(out)
}

/// Writes split files plus a manifest (with fresh digests) into `dir`.
/// Returns the manifest path.
pub fn write_dataset(
    dir: impl AsRef<Path>,
    name: &str,
    d: usize,
    slots: &[String],
    labels: &[String],
    train: &[FeatureRecord],
    dev: &[FeatureRecord],
    test: &[FeatureRecord],
) -> Result<std::path::PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|source| DataError::Io {
        path: dir.display().to_string(),
        source,
    })?;

    let mut sha256 = BTreeMap::new();
    for (file, records) in [
        ("train.jsonl", train),
        ("dev.jsonl", dev),
        ("test.jsonl", test),
    ] {
        let bytes = encode_jsonl(records)?;
        sha256.insert(file.to_string(), sha256_hex(&bytes));
        let path = dir.join(file);
        let mut f = fs::File::create(&path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        f.write_all(&bytes).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }

    let manifest = DatasetManifest {
        name: name.to_string(),
        d,
        k: labels.len(),
        slots: slots.to_vec(),
        labels: labels.to_vec(),
        splits: SplitSizes {
            train: train.len(),
            dev: dev.len(),
            test: test.len(),
        },
        files: SplitFiles {
            train: "train.jsonl".into(),
            dev: "dev.jsonl".into(),
            test: "test.jsonl".into(),
        },
        sha256,
    };
    manifest.validate()?;

    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|source| DataError::Json {
        path: path.display().to_string(),
        source,
    })?;
    fs::write(&path, json).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path)
}
