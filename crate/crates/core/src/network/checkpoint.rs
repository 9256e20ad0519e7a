//! Checkpoint container.
//!
//! Layout: magic bytes `"SBSE"`, version `u32` little-endian, `u32` header
//! length, a JSON header `{kind, band_index, w, h, arrays: [{name, shape,
//! offset}]}`, then the raw little-endian `f32` array data in declared
//! manifest order. `offset` is the byte position of an array within the
//! data section. `band_index` is an integer for teachers and the string
//! `"all"` for the student.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ModelParams;

pub const MAGIC: [u8; 4] = *b"SBSE";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Teacher,
    Student,
}

/// Which band a checkpoint serves: one band for a teacher, all bands for
/// the student.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "BandIndexRepr", try_from = "BandIndexRepr")]
pub enum BandSelector {
    Band(usize),
    All,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BandIndexRepr {
    Index(usize),
    Tag(String),
}

impl From<BandSelector> for BandIndexRepr {
    fn from(b: BandSelector) -> Self {
        match b {
            BandSelector::Band(i) => BandIndexRepr::Index(i),
            BandSelector::All => BandIndexRepr::Tag("all".into()),
        }
    }
}

impl TryFrom<BandIndexRepr> for BandSelector {
    type Error = String;

    fn try_from(r: BandIndexRepr) -> std::result::Result<Self, String> {
        match r {
            BandIndexRepr::Index(i) => Ok(BandSelector::Band(i)),
            BandIndexRepr::Tag(t) if t == "all" => Ok(BandSelector::All),
            BandIndexRepr::Tag(t) => Err(format!("band_index must be a number or \"all\", got {t:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HeaderArray {
    name: String,
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    band_index: BandSelector,
    w: usize,
    h: usize,
    arrays: Vec<HeaderArray>,
}

/// A trained model frozen to disk: 32-bit weights plus identity metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub band: BandSelector,
    pub params: ModelParams<f32>,
}

impl Checkpoint {
    pub fn teacher(band_index: usize, params: ModelParams<f32>) -> Self {
        Checkpoint {
            kind: ModelKind::Teacher,
            band: BandSelector::Band(band_index),
            params,
        }
    }

    pub fn student(params: ModelParams<f32>) -> Self {
        Checkpoint {
            kind: ModelKind::Student,
            band: BandSelector::All,
            params,
        }
    }

    /// Compute-precision copy of the weights.
    pub fn params_f64(&self) -> ModelParams<f64> {
        self.params.convert()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let w = self.params.band_width();
        let h = self.params.hidden();
        let flat = self.params.flat();
        let manifest = ModelParams::<f32>::manifest(w, h);

        let mut arrays = Vec::with_capacity(manifest.len());
        let mut offset = 0u64;
        for ((name, shape), data) in manifest.into_iter().zip(&flat) {
            arrays.push(HeaderArray {
                name,
                shape,
                offset,
            });
            offset += (data.len() * 4) as u64;
        }
        let header = Header {
            kind: self.kind,
            band_index: self.band,
            w,
            h,
            arrays,
        };
        let header_bytes = serde_json::to_vec(&header)?;

        let mut file = File::create(path)?;
        file.write_all(&MAGIC)?;
        file.write_all(&VERSION.to_le_bytes())?;
        file.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
        file.write_all(&header_bytes)?;
        for data in flat {
            let mut bytes = Vec::with_capacity(data.len() * 4);
            for v in data {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            file.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let mut bytes = Vec::new();
        File::open(path)
            .map_err(|e| Error::Checkpoint(format!("cannot open {}: {e}", path.display())))?
            .read_to_end(&mut bytes)?;
        if bytes.len() < 12 || bytes[..4] != MAGIC {
            return Err(Error::Checkpoint(format!(
                "{} is not a checkpoint (bad magic)",
                path.display()
            )));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {version}"
            )));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        if bytes.len() < 12 + header_len {
            return Err(Error::Checkpoint("truncated header".into()));
        }
        let header: Header = serde_json::from_slice(&bytes[12..12 + header_len])?;
        let data = &bytes[12 + header_len..];

        let expected = ModelParams::<f32>::manifest(header.w, header.h);
        if header.arrays.len() != expected.len() {
            return Err(Error::Checkpoint(format!(
                "manifest has {} arrays, expected {}",
                header.arrays.len(),
                expected.len()
            )));
        }

        let mut params = ModelParams::<f32>::zeros(header.w, header.h);
        {
            let mut dst = params.flat_mut();
            for (i, (entry, (name, shape))) in
                header.arrays.iter().zip(expected.iter()).enumerate()
            {
                if &entry.name != name || &entry.shape != shape {
                    return Err(Error::Checkpoint(format!(
                        "array {i} is {}{:?}, expected {}{:?}",
                        entry.name, entry.shape, name, shape
                    )));
                }
                let len: usize = shape.iter().product();
                let start = entry.offset as usize;
                let end = start + len * 4;
                if end > data.len() {
                    return Err(Error::Checkpoint(format!(
                        "array {name} extends past end of file"
                    )));
                }
                for (j, chunk) in data[start..end].chunks_exact(4).enumerate() {
                    dst[i][j] = f32::from_le_bytes(chunk.try_into().unwrap());
                }
            }
        }
        if !params.all_finite() {
            return Err(Error::Checkpoint("checkpoint contains nonfinite values".into()));
        }

        Ok(Checkpoint {
            kind: header.kind,
            band: header.band_index,
            params,
        })
    }
}
