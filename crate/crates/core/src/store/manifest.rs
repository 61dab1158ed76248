//! The TOML manifest written next to the shards.
//!
//! ```toml
//! version = 1
//! scheme = "A"
//! q = 5
//! n = 5
//! k = 3
//! h = 4
//! block_symbols = 4
//! digits_per_byte = 4       # base-q digits per input byte
//! file_length = 12          # bytes
//! padding = 0               # zero symbols appended to fill the last stripe
//! stripe_count = 4
//! seed = 1
//! file_crc32 = 123456789
//! stripe_crc32 = [1, 2, 3, 4]
//!
//! [coefficients]
//! a = [[[1, 0], [0, 1]], ...]   # k matrices, row-major
//! b = [...]
//!
//! [[nodes]]
//! id = 0
//! file = "node0.shard"
//! blocks = [0, 1]
//! super = true
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::code::{BlockId, CodeCoefficients, NodeId};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::Mat;
use crate::schemes::SchemeId;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub a: Vec<Vec<Vec<u32>>>,
    pub b: Vec<Vec<Vec<u32>>>,
}

impl CoefficientTable {
    pub fn from_coeffs(c: &CodeCoefficients) -> Self {
        CoefficientTable {
            a: c.a().iter().map(Mat::to_rows).collect(),
            b: c.b().iter().map(Mat::to_rows).collect(),
        }
    }

    pub fn to_coeffs(&self, field: PrimeField) -> Result<CodeCoefficients> {
        let conv = |ms: &[Vec<Vec<u32>>]| -> Result<Vec<Mat>> {
            ms.iter()
                .map(|rows| {
                    let r = rows.len();
                    let c = rows.first().map_or(0, Vec::len);
                    Mat::from_vec(field, r, c, rows.concat())
                })
                .collect()
        };
        CodeCoefficients::new(conv(&self.a)?, conv(&self.b)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: NodeId,
    pub file: String,
    pub blocks: Vec<BlockId>,
    #[serde(rename = "super")]
    pub is_super: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub scheme: SchemeId,
    pub q: u32,
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub block_symbols: usize,
    pub digits_per_byte: usize,
    pub file_length: u64,
    pub padding: u64,
    pub stripe_count: u64,
    pub seed: u64,
    pub file_crc32: u32,
    pub stripe_crc32: Vec<u32>,
    pub coefficients: CoefficientTable,
    pub nodes: Vec<NodeEntry>,
}

impl Manifest {
    pub fn stripe_symbols(&self) -> usize {
        self.k * self.block_symbols
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::format("manifest", e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text).map_err(|e| Error::format("manifest", e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::format("manifest", reason));
        if self.version != MANIFEST_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.n != self.k + 2 || self.h != self.k + 1 || self.nodes.len() != self.h {
            return bad("inconsistent n, k, h or node list".into());
        }
        if self.stripe_crc32.len() as u64 != self.stripe_count {
            return bad("stripe checksum count differs from stripe count".into());
        }
        let symbols = self.stripe_count * self.stripe_symbols() as u64;
        if symbols != self.file_length * self.digits_per_byte as u64 + self.padding {
            return bad("stripes do not cover file plus padding".into());
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i || node.file.contains(['/', '\\']) {
                return bad(format!("bad node entry {i}"));
            }
        }
        Ok(())
    }
}
