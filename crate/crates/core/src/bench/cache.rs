//! On-disk record cache. Each entry is one JSON file named by the hash of
//! its key and carrying a checksum of the stored record.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::BenchRecord;
use crate::error::{Error, Result};
use crate::numtheory::{Modulus, Multiplier};
use crate::synthesis::Method;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheKey {
    canonical: String,
}

impl CacheKey {
    pub fn file_name(&self) -> String {
        format!("{}.json", hex::encode(Sha256::digest(self.canonical.as_bytes())))
    }
}

/// Key for one record. `fingerprint` covers the cost model and every other
/// setting that affects the measured values.
pub fn cache_key(m: &Modulus, c: &Multiplier, method: Method, fingerprint: &str) -> CacheKey {
    CacheKey { canonical: format!("{m}|{c}|{method}|{fingerprint}") }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    checksum: String,
    record: String,
}

fn checksum(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// `Ok(None)` on a miss, `Err(CacheCorrupt)` when the entry does not match
/// its key or checksum.
pub fn cache_lookup(dir: &Path, key: &CacheKey) -> Result<Option<BenchRecord>> {
    let path = dir.join(key.file_name());
    let text = match fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let corrupt = |why: &str| Error::CacheCorrupt(format!("{}: {why}", path.display()));
    let entry: Entry = serde_json::from_str(&text).map_err(|_| corrupt("unreadable entry"))?;
    if entry.key != key.canonical {
        return Err(corrupt("key mismatch"));
    }
    if entry.checksum != checksum(&entry.record) {
        return Err(corrupt("checksum mismatch"));
    }
    serde_json::from_str(&entry.record).map(Some).map_err(|_| corrupt("unreadable record"))
}

/// Writes through a temporary file and renames, so readers never see a
/// partial entry.
pub fn cache_store(dir: &Path, key: &CacheKey, record: &BenchRecord) -> Result<()> {
    let record = serde_json::to_string(record)?;
    let entry = Entry { key: key.canonical.clone(), checksum: checksum(&record), record };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(serde_json::to_string(&entry)?.as_bytes())?;
    tmp.persist(dir.join(key.file_name())).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Modulus, Multiplier, BenchRecord) {
        let m = Modulus::from_u64(21).unwrap();
        let c = Multiplier::from_u64(13, &m).unwrap();
        let record = BenchRecord {
            bits: 5,
            modulus: "21".into(),
            multiplier: "13".into(),
            method: "heuristic".into(),
            toffoli: 90,
            cnot: 5,
            depth: 40,
            ops: 6,
            qubits: 11,
            seconds: 0.25,
            model_hash: "abc".into(),
            error: None,
        };
        (m, c, record)
    }

    #[test]
    fn miss_then_hit() {
        let dir = tempfile::tempdir().unwrap();
        let (m, c, record) = sample();
        let key = cache_key(&m, &c, Method::Heuristic, "f1");
        assert_eq!(cache_lookup(dir.path(), &key).unwrap(), None);
        cache_store(dir.path(), &key, &record).unwrap();
        assert_eq!(cache_lookup(dir.path(), &key).unwrap(), Some(record));
    }

    #[test]
    fn fingerprint_change_misses() {
        let dir = tempfile::tempdir().unwrap();
        let (m, c, record) = sample();
        cache_store(dir.path(), &cache_key(&m, &c, Method::Heuristic, "f1"), &record).unwrap();
        assert_eq!(cache_lookup(dir.path(), &cache_key(&m, &c, Method::Heuristic, "f2")).unwrap(), None);
        assert_eq!(cache_lookup(dir.path(), &cache_key(&m, &c, Method::Baseline, "f1")).unwrap(), None);
    }

    #[test]
    fn tampered_entry_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let (m, c, record) = sample();
        let key = cache_key(&m, &c, Method::Heuristic, "f1");
        cache_store(dir.path(), &key, &record).unwrap();
        let path = dir.path().join(key.file_name());
        let text = fs::read_to_string(&path).unwrap().replace("90", "91");
        fs::write(&path, text).unwrap();
        assert!(matches!(cache_lookup(dir.path(), &key), Err(Error::CacheCorrupt(_))));
        fs::write(&path, "not json").unwrap();
        assert!(matches!(cache_lookup(dir.path(), &key), Err(Error::CacheCorrupt(_))));
    }
}
