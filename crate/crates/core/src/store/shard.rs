//! Binary shard files: a fixed little-endian header followed by one byte
//! per symbol, stripe-major, then block-major, then symbol order.
//!
//! ```text
//! magic        4  "NHDS"
//! version      u8 1
//! q            u8
//! n, k, h      u8 ×3
//! N            u16
//! scheme       u8 'A' | 'B' | 'C'
//! node id      u8
//! block count  u8, then one u8 per block id
//! stripes      u64
//! crc32        u32 of the payload
//! ```

use std::path::Path;

use crate::code::{BlockId, NodeId};
use crate::error::{Error, Result};
use crate::schemes::SchemeId;

pub const MAGIC: &[u8; 4] = b"NHDS";
pub const VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardHeader {
    pub q: u8,
    pub n: u8,
    pub k: u8,
    pub h: u8,
    pub block_symbols: u16,
    pub scheme: SchemeId,
    pub node: u8,
    pub blocks: Vec<u8>,
    pub stripe_count: u64,
    pub crc32: u32,
}

impl ShardHeader {
    pub fn node_id(&self) -> NodeId {
        self.node as NodeId
    }

    pub fn block_ids(&self) -> Vec<BlockId> {
        self.blocks.iter().map(|&b| b as BlockId).collect()
    }

    /// Payload bytes per stripe.
    pub fn stripe_width(&self) -> usize {
        self.blocks.len() * self.block_symbols as usize
    }

    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(26 + self.blocks.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[VERSION, self.q, self.n, self.k, self.h]);
        out.extend_from_slice(&self.block_symbols.to_le_bytes());
        out.push(self.scheme.as_char() as u8);
        out.push(self.node);
        out.push(self.blocks.len() as u8);
        out.extend_from_slice(&self.blocks);
        out.extend_from_slice(&self.stripe_count.to_le_bytes());
        out.extend_from_slice(&self.crc32.to_le_bytes());
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shard {
    pub header: ShardHeader,
    pub payload: Vec<u8>,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: String,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::format(self.what.clone(), "truncated header"))?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
}

impl Shard {
    pub fn new(header: ShardHeader, payload: Vec<u8>) -> Self {
        let mut header = header;
        header.crc32 = crc32fast::hash(&payload);
        Shard { header, payload }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.header.to_bytes();
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses and validates a shard image; `what` names it in errors.
    pub fn parse(bytes: &[u8], what: &str) -> Result<Self> {
        let mut r = Reader {
            buf: bytes,
            pos: 0,
            what: what.to_string(),
        };
        if r.take(4)? != MAGIC {
            return Err(Error::format(what, "bad magic"));
        }
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::format(what, format!("unsupported version {version}")));
        }
        let (q, n, k, h) = (r.u8()?, r.u8()?, r.u8()?, r.u8()?);
        let block_symbols = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
        let scheme = SchemeId::from_char(r.u8()? as char).ok_or_else(|| Error::format(what, "unknown scheme"))?;
        let node = r.u8()?;
        let count = r.u8()? as usize;
        let blocks = r.take(count)?.to_vec();
        let stripe_count = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let crc32 = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        let header = ShardHeader {
            q,
            n,
            k,
            h,
            block_symbols,
            scheme,
            node,
            blocks,
            stripe_count,
            crc32,
        };
        let payload = bytes[r.pos..].to_vec();
        let want = (header.stripe_count as usize).checked_mul(header.stripe_width());
        if want != Some(payload.len()) {
            return Err(Error::format(
                what,
                format!("payload of {} bytes, header implies {want:?}", payload.len()),
            ));
        }
        if crc32fast::hash(&payload) != header.crc32 {
            return Err(Error::ChecksumMismatch(what.to_string()));
        }
        if payload.iter().any(|&s| s >= q) {
            return Err(Error::format(what, "symbol out of field range"));
        }
        Ok(Shard { header, payload })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&bytes, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Payload bytes of one stripe.
    pub fn stripe(&self, index: usize) -> &[u8] {
        let w = self.header.stripe_width();
        &self.payload[index * w..(index + 1) * w]
    }
}
