//! On-disk eigenvalue cache: `eig_k<weight>.csv` plus a `.sha256` sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use super::eigen::{check_weight, eigen_table, EigenTable};
use crate::error::{LabError, Result};

pub const CACHE_VERSION: u32 = 1;
/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "RANKIN_LAB_CACHE";

/// Cache directory from [`CACHE_ENV`], else `.rankin-cache` in the
/// working directory.
pub fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".rankin-cache"))
}

pub fn cache_path(dir: &Path, weight: u32) -> PathBuf {
    dir.join(format!("eig_k{weight}.csv"))
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".sha256");
    PathBuf::from(s)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn render(table: &EigenTable) -> String {
    let mut out = format!(
        "# weight={} nmax={} version={CACHE_VERSION}\n",
        table.weight(),
        table.nmax()
    );
    for (i, a) in table.raw_values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, a));
    }
    out
}

/// Write the table and its checksum. Both files are written to temporaries
/// and renamed into place. An existing cache with a larger `nmax` is kept;
/// returns whether anything was written.
pub fn store(dir: &Path, table: &EigenTable) -> Result<bool> {
    let path = cache_path(dir, table.weight());
    if let Ok(Some(n)) = cached_nmax(&path) {
        if n >= table.nmax() {
            return Ok(false);
        }
    }
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let body = render(table);
    let digest = hex::encode(Sha256::digest(body.as_bytes()));
    let side = sidecar_path(&path);
    write_atomic(&path, body.as_bytes())?;
    write_atomic(
        &side,
        format!("{digest}  {}\n", file_name(&path)).as_bytes(),
    )?;
    Ok(true)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = {
        let mut s = path.as_os_str().to_owned();
        s.push(format!(".tmp{}", std::process::id()));
        PathBuf::from(s)
    };
    let mut f = fs::File::create(&tmp).map_err(|e| LabError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| LabError::io(&tmp, e))?;
    f.sync_all().map_err(|e| LabError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| LabError::io(path, e))
}

fn parse_header(line: &str) -> Option<(u32, u64, u32)> {
    let rest = line.strip_prefix('#')?.trim();
    let (mut w, mut n, mut v) = (None, None, None);
    for part in rest.split_whitespace() {
        let (key, val) = part.split_once('=')?;
        match key {
            "weight" => w = val.parse().ok(),
            "nmax" => n = val.parse().ok(),
            "version" => v = val.parse().ok(),
            _ => return None,
        }
    }
    Some((w?, n?, v?))
}

/// `nmax` recorded in a cache header, if the file exists.
fn cached_nmax(path: &Path) -> Result<Option<u64>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    let first = text.lines().next().unwrap_or("");
    Ok(parse_header(first).map(|(_, n, _)| n))
}

fn corrupt(path: &Path, reason: impl Into<String>) -> LabError {
    LabError::CacheCorrupt {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Load a cached table truncated to `nmax`. `Ok(None)` if there is no cache
/// or it is too short.
pub fn load(dir: &Path, weight: u32, nmax: u64) -> Result<Option<EigenTable>> {
    check_weight(weight)?;
    let path = cache_path(dir, weight);
    if !path.exists() {
        return Ok(None);
    }
    let body = fs::read(&path).map_err(|e| LabError::io(&path, e))?;
    let side = sidecar_path(&path);
    let recorded =
        fs::read_to_string(&side).map_err(|_| corrupt(&side, "missing checksum sidecar"))?;
    let recorded = recorded.split_whitespace().next().unwrap_or("");
    let actual = hex::encode(Sha256::digest(&body));
    if recorded != actual {
        return Err(corrupt(
            &path,
            format!("sha256 {actual} does not match sidecar {recorded}"),
        ));
    }
    let text = String::from_utf8(body).map_err(|_| corrupt(&path, "not UTF-8"))?;
    let mut lines = text.lines();
    let (w, n, v) = lines
        .next()
        .and_then(parse_header)
        .ok_or_else(|| corrupt(&path, "malformed header"))?;
    if v != CACHE_VERSION {
        return Err(corrupt(&path, format!("unknown version {v}")));
    }
    if w != weight {
        return Err(corrupt(
            &path,
            format!("header weight {w} differs from {weight}"),
        ));
    }
    if n < nmax {
        return Ok(None);
    }
    let mut raw = Vec::with_capacity(nmax as usize);
    for (i, line) in lines.take(nmax as usize).enumerate() {
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| corrupt(&path, format!("line {}: expected n,a(n)", i + 2)))?;
        if idx.parse::<u64>().ok() != Some(i as u64 + 1) {
            return Err(corrupt(
                &path,
                format!("line {}: index {idx} out of sequence", i + 2),
            ));
        }
        let a: BigInt = val
            .parse()
            .map_err(|_| corrupt(&path, format!("line {}: bad integer", i + 2)))?;
        raw.push(a);
    }
    if (raw.len() as u64) < nmax {
        return Err(corrupt(&path, "fewer rows than the header promises"));
    }
    EigenTable::from_raw(weight, raw).map(Some)
}

/// Cached table if available, else compute and persist it.
pub fn eigen_table_cached(weight: u32, nmax: u64, dir: &Path) -> Result<EigenTable> {
    if let Some(t) = load(dir, weight, nmax)? {
        return Ok(t);
    }
    let table = eigen_table(weight, nmax)?;
    store(dir, &table)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let t = eigen_table_cached(12, 50, dir.path()).unwrap();
        let text = fs::read_to_string(cache_path(dir.path(), 12)).unwrap();
        assert!(text.starts_with("# weight=12 nmax=50 version=1\n1,1\n2,-24\n"));
        let side = fs::read_to_string(dir.path().join("eig_k12.csv.sha256")).unwrap();
        assert!(side.ends_with("  eig_k12.csv\n"));
        let small = load(dir.path(), 12, 20).unwrap().unwrap();
        assert_eq!(small, t.truncated(20).unwrap());
        assert!(load(dir.path(), 12, 51).unwrap().is_none());
    }

    #[test]
    fn smaller_run_keeps_larger_cache() {
        let dir = tempfile::tempdir().unwrap();
        eigen_table_cached(16, 40, dir.path()).unwrap();
        let before = fs::read(cache_path(dir.path(), 16)).unwrap();
        let small = eigen_table(16, 10).unwrap();
        assert!(!store(dir.path(), &small).unwrap());
        assert_eq!(before, fs::read(cache_path(dir.path(), 16)).unwrap());
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        eigen_table_cached(12, 10, dir.path()).unwrap();
        let path = cache_path(dir.path(), 12);
        let text = fs::read_to_string(&path).unwrap().replace("2,-24", "2,-25");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            load(dir.path(), 12, 5),
            Err(LabError::CacheCorrupt { .. })
        ));
    }
}
