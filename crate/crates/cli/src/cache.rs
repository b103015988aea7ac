//! Append-only JSONL store for scan records. The first line is a header
//! pinning the format version and the hash of the configuration that
//! produced the records.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use syracuse::attractors::{Caps, ScanLine};
use syracuse::PrecisionPolicy;

pub const FORMAT_VERSION: &str = "syracuse-scan/1";

/// Everything that influences a record's content.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub side: String,
    pub policy: PrecisionPolicy,
    pub caps: Caps,
}

impl ScanConfig {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub config_hash: String,
    pub config: ScanConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("{path}: written with config {found}, current config is {expected}; pass --force to discard it")]
    ConfigMismatch { path: PathBuf, found: String, expected: String },
    #[error("{path}: unsupported cache format {found:?}")]
    Format { path: PathBuf, found: String },
    #[error("{path}: line {line} is corrupt: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Open cache: the records already present and an append handle.
pub struct ScanCache {
    path: PathBuf,
    header: Header,
    file: File,
    records: BTreeMap<i64, ScanLine>,
    /// Bytes of a damaged trailing line removed on open.
    pub truncated_bytes: u64,
}

impl ScanCache {
    /// Opens or creates the cache at `path`. With `force`, an existing file
    /// is discarded.
    pub fn open(path: &Path, config: &ScanConfig, force: bool) -> Result<Self, CacheError> {
        let header = Header { format: FORMAT_VERSION.into(), config_hash: config.hash(), config: config.clone() };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let existing = if force { None } else { fs::read(path).ok().filter(|b| !b.is_empty()) };
        let Some(bytes) = existing else {
            let mut file = File::create(path)?;
            writeln!(file, "{}", serde_json::to_string(&header).expect("header serializes"))?;
            file.sync_data()?;
            return Ok(ScanCache { path: path.into(), header, file, records: BTreeMap::new(), truncated_bytes: 0 });
        };

        let corrupt = |line: usize, message: String| CacheError::Corrupt { path: path.into(), line, message };
        let mut lines = Vec::new();
        let mut start = 0;
        while start < bytes.len() {
            let end = bytes[start..].iter().position(|&b| b == b'\n').map(|p| start + p);
            lines.push((start, end.unwrap_or(bytes.len()), end.is_some()));
            start = end.map_or(bytes.len(), |e| e + 1);
        }
        let (hs, he, complete) = lines[0];
        let found: Header = serde_json::from_slice(&bytes[hs..he]).map_err(|e| corrupt(1, e.to_string()))?;
        if !complete {
            return Err(corrupt(1, "header line is incomplete".into()));
        }
        if found.format != FORMAT_VERSION {
            return Err(CacheError::Format { path: path.into(), found: found.format });
        }
        if found.config_hash != header.config_hash {
            return Err(CacheError::ConfigMismatch {
                path: path.into(),
                found: found.config_hash,
                expected: header.config_hash,
            });
        }

        let mut records = BTreeMap::new();
        let mut keep = bytes.len();
        let last = lines.len() - 1;
        for (i, &(s, e, complete)) in lines.iter().enumerate().skip(1) {
            let parsed = serde_json::from_slice::<ScanLine>(&bytes[s..e]);
            match parsed {
                Ok(rec) if complete => {
                    records.entry(rec.n).or_insert(rec);
                }
                Ok(_) | Err(_) if i == last => {
                    keep = s;
                }
                Err(err) => return Err(corrupt(i + 1, err.to_string())),
                Ok(_) => unreachable!("only the last line can lack a newline"),
            }
        }
        let truncated_bytes = (bytes.len() - keep) as u64;
        let file = OpenOptions::new().append(true).open(path)?;
        if truncated_bytes > 0 {
            log::warn!("{}: dropped {truncated_bytes} bytes of a partial trailing record", path.display());
            file.set_len(keep as u64)?;
        }
        Ok(ScanCache { path: path.into(), header, file, records, truncated_bytes })
    }

    pub fn contains(&self, n: i64) -> bool {
        self.records.contains_key(&n)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    /// Appends one record as a single write of a complete line.
    pub fn append(&mut self, rec: &ScanLine) -> Result<(), CacheError> {
        let mut line = serde_json::to_string(rec).expect("record serializes");
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.records.insert(rec.n, rec.clone());
        Ok(())
    }

    /// Records in increasing `n`.
    pub fn records(&self) -> impl Iterator<Item = &ScanLine> {
        self.records.values()
    }

    /// Rewrites the file with the records sorted by `n`, replacing it
    /// atomically.
    pub fn finalize(self) -> Result<Vec<ScanLine>, CacheError> {
        self.file.sync_data()?;
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let mut out = io::BufWriter::new(File::create(&tmp)?);
            writeln!(out, "{}", serde_json::to_string(&self.header).expect("header serializes"))?;
            for rec in self.records.values() {
                writeln!(out, "{}", serde_json::to_string(rec).expect("record serializes"))?;
            }
            out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }
        fs::rename(&tmp, &self.path)?;
        Ok(self.records.into_values().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ScanConfig {
        ScanConfig { side: "positive".into(), policy: PrecisionPolicy::default(), caps: Caps::default() }
    }

    fn line(n: i64) -> ScanLine {
        ScanLine { n, label: "A1".into(), iterations: 3, bits: 128, proche: true, first_divergence_step: None }
    }

    #[test]
    fn roundtrip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.jsonl");
        let mut c = ScanCache::open(&path, &config(), false).unwrap();
        for n in [3, 1, 2] {
            c.append(&line(n)).unwrap();
        }
        drop(c);
        let c = ScanCache::open(&path, &config(), false).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.contains(2) && !c.contains(4));
        let recs = c.finalize().unwrap();
        assert_eq!(recs.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1, 2, 3]);
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().contains("\"n\":1"));
    }

    #[test]
    fn partial_trailing_line_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.jsonl");
        let mut c = ScanCache::open(&path, &config(), false).unwrap();
        c.append(&line(1)).unwrap();
        drop(c);
        let before = fs::metadata(&path).unwrap().len();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"n\":2,\"lab").unwrap();
        drop(f);
        let c = ScanCache::open(&path, &config(), false).unwrap();
        assert_eq!(c.truncated_bytes, 11);
        assert_eq!(c.len(), 1);
        assert_eq!(fs::metadata(&path).unwrap().len(), before);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.jsonl");
        let mut c = ScanCache::open(&path, &config(), false).unwrap();
        c.append(&line(1)).unwrap();
        drop(c);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"garbage\n").unwrap();
        drop(f);
        let mut c = ScanCache::open(&path, &config(), false);
        // a complete but unparseable final line is dropped too
        assert!(c.as_ref().is_ok_and(|c| c.truncated_bytes == 8));
        c.as_mut().unwrap().append(&line(2)).unwrap();
        drop(c);
        let text = fs::read_to_string(&path).unwrap();
        let damaged = text.replacen("\"n\":1", "\"n\":}", 1);
        fs::write(&path, damaged).unwrap();
        assert!(matches!(ScanCache::open(&path, &config(), false), Err(CacheError::Corrupt { line: 2, .. })));
    }

    #[test]
    fn config_mismatch_is_refused_unless_forced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.jsonl");
        ScanCache::open(&path, &config(), false).unwrap().append(&line(1)).unwrap();
        let mut other = config();
        other.policy.max_bits = 4096;
        assert_ne!(other.hash(), config().hash());
        assert!(matches!(ScanCache::open(&path, &other, false), Err(CacheError::ConfigMismatch { .. })));
        let c = ScanCache::open(&path, &other, true).unwrap();
        assert!(c.is_empty());
    }
}
