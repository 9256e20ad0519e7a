//! On-disk corpus index: paired clean/noisy paths with split tags, stored
//! as `index.json` at the corpus root.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INDEX_FILE: &str = "index.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One clean/noisy pair; paths are relative to the corpus root.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub clean: PathBuf,
    pub noisy: PathBuf,
    pub duration_s: f64,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct CorpusIndex {
    root: PathBuf,
    entries: Vec<CorpusEntry>,
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    entries: Vec<CorpusEntry>,
}

impl CorpusIndex {
    pub fn new(root: PathBuf, entries: Vec<CorpusEntry>) -> Self {
        CorpusIndex { root, entries }
    }

    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(INDEX_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::data(format!("cannot read {}: {e}", path.display())))?;
        let file: IndexFile = serde_json::from_str(&text)?;
        let index = CorpusIndex {
            root: root.to_path_buf(),
            entries: file.entries,
        };
        index.validate()?;
        Ok(index)
    }

    pub fn save(&self) -> Result<()> {
        let path = self.root.join(INDEX_FILE);
        let file = IndexFile {
            entries: self.entries.clone(),
        };
        std::fs::write(&path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    /// Checks that every referenced file exists and that no clean file is
    /// claimed by more than one split.
    pub fn validate(&self) -> Result<()> {
        let mut seen: Vec<(&Path, Split)> = Vec::new();
        for e in &self.entries {
            for rel in [&e.clean, &e.noisy] {
                let p = self.root.join(rel);
                if !p.is_file() {
                    return Err(Error::data(format!("missing corpus file {}", p.display())));
                }
            }
            if let Some((_, other)) = seen.iter().find(|(p, _)| *p == e.clean.as_path()) {
                if *other != e.split {
                    return Err(Error::data(format!(
                        "{} appears in two splits",
                        e.clean.display()
                    )));
                }
            }
            seen.push((e.clean.as_path(), e.split));
        }
        Ok(())
    }

    #[inline]
    pub fn root(&self) -> &Path {
        &self.root
    }

    #[inline]
    pub fn entries(&self) -> &[CorpusEntry] {
        &self.entries
    }

    pub fn split(&self, split: Split) -> Vec<&CorpusEntry> {
        self.entries.iter().filter(|e| e.split == split).collect()
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }
}

/// Seeded permutation of `0..len` for one epoch. The multiset of indices
/// is invariant; the order depends on both seed and epoch counter.
pub fn epoch_permutation(len: usize, seed: u64, epoch: u64) -> Vec<usize> {
    // splitmix64 over (seed, epoch) so nearby epochs get unrelated streams.
    let mut z = seed ^ epoch.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    let mut rng = ChaCha8Rng::seed_from_u64(z);
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng);
    order
}
