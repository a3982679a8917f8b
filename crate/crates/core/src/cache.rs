//! On-disk store of computed graded pieces, one JSON file per
//! `(r, generators, degree)`.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::generators::Generators;
use crate::io::{parse_cache_entry, serialize_cache_entry, ParseError};
use crate::tpoly::TPolynomial;

/// Environment variable naming the default cache directory.
pub const CACHE_DIR_ENV: &str = "RSPIN_CACHE_DIR";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O failed for {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt cache entry {path}: {source}")]
    Corrupt {
        path: PathBuf,
        #[source]
        source: ParseError,
    },
}

#[derive(Debug, Clone)]
pub struct TauCache {
    dir: PathBuf,
}

impl TauCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        TauCache { dir: dir.into() }
    }

    /// Cache rooted at `$RSPIN_CACHE_DIR`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_DIR_ENV).filter(|v| !v.is_empty()).map(Self::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, r: u32, generators: Generators, degree: u32) -> PathBuf {
        self.dir.join(format!("r{r}_{generators}_deg{degree}.json"))
    }

    /// Returns `Ok(None)` when no entry exists. Entries written under another
    /// format version, or for another `(r, generators, degree)`, are errors.
    pub fn load(&self, r: u32, generators: Generators, degree: u32) -> Result<Option<TPolynomial>, CacheError> {
        let path = self.entry_path(r, generators, degree);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(CacheError::Io { path, source }),
        };
        parse_cache_entry(&bytes, r, generators, degree)
            .map(Some)
            .map_err(|source| CacheError::Corrupt { path, source })
    }

    pub fn store(&self, r: u32, generators: Generators, degree: u32, piece: &TPolynomial) -> Result<(), CacheError> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CacheError::Io { path, source }
        };
        fs::create_dir_all(&self.dir).map_err(io_err(&self.dir))?;
        let path = self.entry_path(r, generators, degree);
        let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
        fs::write(&tmp, serialize_cache_entry(r, generators, degree, piece)).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))?;
        Ok(())
    }
}
