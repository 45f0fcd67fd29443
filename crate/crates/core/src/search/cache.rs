//! Append-only JSON-lines cache of search results.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CacheRecord {
    pub k: usize,
    pub d: u64,
    pub exists: bool,
    #[serde(
        default,
        with = "crate::serde_big::decimal_opt",
        skip_serializing_if = "Option::is_none"
    )]
    pub min_size: Option<BigUint>,
    pub budget_used: u64,
    pub version: u32,
}

#[derive(Clone, Debug)]
pub struct ResultCache {
    path: PathBuf,
}

impl ResultCache {
    pub fn new(path: impl AsRef<Path>) -> Self {
        ResultCache {
            path: path.as_ref().to_path_buf(),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// All records of the current version; a missing file reads as empty.
    pub fn load(&self) -> Result<Vec<CacheRecord>> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CacheRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if rec.version == CACHE_VERSION {
                out.push(rec);
            }
        }
        Ok(out)
    }

    /// Latest record for `(k, d)`. Records asking for a size win over
    /// existence-only ones.
    pub fn lookup(&self, k: usize, d: u64, need_size: bool) -> Result<Option<CacheRecord>> {
        Ok(self
            .load()?
            .into_iter()
            .rev()
            .find(|r| r.k == k && r.d == d && (!need_size || r.min_size.is_some() || !r.exists)))
    }

    pub fn append(&self, rec: &CacheRecord) -> Result<()> {
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let line = serde_json::to_string(rec).expect("record serializes");
        writeln!(f, "{line}")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn append_and_lookup() {
        let dir = std::env::temp_dir().join(format!("kdsat-cache-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let cache = ResultCache::new(dir.join("c.jsonl"));
        let _ = std::fs::remove_file(cache.path());
        assert!(cache.load().unwrap().is_empty());
        let rec = CacheRecord {
            k: 3,
            d: 4,
            exists: true,
            min_size: Some(BigUint::from(12u32)),
            budget_used: 99,
            version: CACHE_VERSION,
        };
        cache.append(&rec).unwrap();
        cache
            .append(&CacheRecord {
                d: 3,
                exists: false,
                min_size: None,
                ..rec.clone()
            })
            .unwrap();
        assert_eq!(cache.lookup(3, 4, true).unwrap(), Some(rec));
        assert!(!cache.lookup(3, 3, true).unwrap().unwrap().exists);
        assert_eq!(cache.lookup(5, 4, false).unwrap(), None);
        let text = std::fs::read_to_string(cache.path()).unwrap();
        assert!(text.lines().next().unwrap().contains("\"minSize\":\"12\""));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
