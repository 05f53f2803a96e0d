//! Meme transfer: the pool, selection, variation and imitation operators.

mod imitate;
mod kmeans;
mod select;

pub use imitate::{
    build_population, heuristic_population, imitate, pds_order, random_population, transform,
};
pub use kmeans::{inertia, kmeans};
pub use select::{
    mmd, select_memes, similarities, solve_selection_qp, SelectionWeights, SimilarityParams,
};

use std::fs;
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use fs2::FileExt;

use crate::error::{Error, Result};
use crate::meme::Meme;

/// The persistent, append-only pool of learned memes.
#[derive(Debug, Clone, Default)]
pub struct SocietyOfMemes {
    memes: Vec<Meme>,
}

impl SocietyOfMemes {
    pub fn new() -> SocietyOfMemes {
        SocietyOfMemes::default()
    }

    pub fn len(&self) -> usize {
        self.memes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memes.is_empty()
    }

    pub fn memes(&self) -> &[Meme] {
        &self.memes
    }

    pub fn get(&self, i: usize) -> &Meme {
        &self.memes[i]
    }

    /// Appends a meme, enforcing a uniform dimension. Source names are kept
    /// unique by suffixing repeats.
    pub fn push(&mut self, mut meme: Meme) -> Result<()> {
        if let Some(first) = self.memes.first() {
            if first.dim() != meme.dim() {
                return Err(Error::Dimension(format!(
                    "pool holds {}-d memes, got {}-d",
                    first.dim(),
                    meme.dim()
                )));
            }
        }
        let base = meme.source_name.clone();
        let mut suffix = 1;
        while self.memes.iter().any(|m| m.source_name == meme.source_name) {
            suffix += 1;
            meme.source_name = format!("{}@{}", base, suffix);
        }
        self.memes.push(meme);
        Ok(())
    }

    /// Loads a pool file. A missing file is an empty pool; a file that
    /// exists but fails to decode is a hard error, never a silent reset.
    pub fn load(path: &Path) -> Result<SocietyOfMemes> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Ok(SocietyOfMemes::new())
            }
            Err(e) => return Err(e.into()),
        };
        Self::from_json(&text, path)
    }

    fn from_json(text: &str, path: &Path) -> Result<SocietyOfMemes> {
        if text.trim().is_empty() {
            return Ok(SocietyOfMemes::new());
        }
        let memes: Vec<Meme> =
            serde_json::from_str(text).map_err(|e| Error::CorruptPool {
                path: path.display().to_string(),
                message: e.to_string(),
            })?;
        let mut pool = SocietyOfMemes::new();
        for m in memes {
            pool.push(m)?;
        }
        Ok(pool)
    }

    /// Serializes the pool as a JSON array of meme records.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.memes)?)
    }

    /// Appends one meme to a pool file under an exclusive lock, reading the
    /// current contents first so concurrent appenders cannot clobber each
    /// other.
    pub fn append_to_file(path: &Path, meme: Meme) -> Result<usize> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        let mut file = fs::OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)?;
        file.lock_exclusive()?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;
        let mut pool = Self::from_json(&text, path)?;
        pool.push(meme)?;
        let json = pool.to_json()?;
        file.seek(SeekFrom::Start(0))?;
        file.set_len(0)?;
        file.write_all(json.as_bytes())?;
        file.sync_all()?;
        fs2::FileExt::unlock(&file)?;
        Ok(pool.len())
    }
}
