//! On-disk memo of GRIP solutions under `FASTRATES_CACHE_DIR`, keyed by a
//! hash of the problem document, η and the tolerance.

use std::path::PathBuf;

use fastrates_core::FiniteProblem;
use serde::{de::DeserializeOwned, Serialize};
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "FASTRATES_CACHE_DIR";

pub fn cache_key(problem: &FiniteProblem, eta: f64, tol: f64, mini: Option<usize>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(problem).expect("problem serializes"));
    h.update(eta.to_bits().to_le_bytes());
    h.update(tol.to_bits().to_le_bytes());
    match mini {
        Some(f) => h.update(format!("mini:{f}").as_bytes()),
        None => h.update(b"grip"),
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn entry(key: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_ENV)?;
    Some(PathBuf::from(dir).join(format!("grip-{key}.json")))
}

/// Returns the cached value, or computes and stores it. Cache failures are
/// silent: the value is simply recomputed.
pub fn memoized<T, E>(key: &str, compute: impl FnOnce() -> Result<T, E>) -> Result<T, E>
where
    T: Serialize + DeserializeOwned,
{
    let path = entry(key);
    if let Some(p) = &path {
        if let Ok(text) = std::fs::read_to_string(p) {
            if let Ok(v) = serde_json::from_str(&text) {
                return Ok(v);
            }
        }
    }
    let v = compute()?;
    if let Some(p) = path {
        if let Some(dir) = p.parent() {
            let _ = std::fs::create_dir_all(dir);
        }
        if let Ok(text) = serde_json::to_string(&v) {
            let _ = std::fs::write(p, text);
        }
    }
    Ok(v)
}
