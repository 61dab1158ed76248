//! File storage on top of the codes: files are split into stripes, each
//! node's blocks go to one shard file, and a manifest records everything
//! needed to rebuild the code and verify the output.
//!
//! Input bytes are written as `d` little-endian base-`q` digits each, with
//! `d` the smallest count such that `q^d ≥ 256`.

pub mod manifest;
pub mod shard;

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use manifest::{CoefficientTable, Manifest, NodeEntry, MANIFEST_FILE, MANIFEST_VERSION};
pub use shard::{Shard, ShardHeader};

use crate::code::{encode, BlockId, Collector, NodeId, Stripe};
use crate::error::{Error, Result};
use crate::field::{next_prime, PrimeField};
use crate::matrix::Mat;
use crate::repair::{
    repair_double, repair_parity, repair_single, repair_super, HelperSource, Parity, RepairMethod, RepairOutcome,
};
use crate::schemes::{
    build_scheme_a_with, build_scheme_b_53, build_scheme_c_64, verify_constraints, ConstraintReport,
    SchemeId, SchemeInstance, SearchConfig,
};

/// Largest modulus whose symbols are stored one byte each.
pub const MAX_STORE_MODULUS: u32 = 251;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoreConfig {
    pub scheme: SchemeId,
    pub k: usize,
    /// Defaults to the smallest prime `≥ 2k−1` for scheme A and 3 otherwise.
    pub q: Option<u32>,
    /// Defaults to `min(2^(k−1), 4)` for scheme A and 2 otherwise.
    pub block_symbols: Option<usize>,
    pub seed: u64,
}

impl StoreConfig {
    pub fn new(scheme: SchemeId, k: usize) -> Self {
        StoreConfig {
            scheme,
            k,
            q: None,
            block_symbols: None,
            seed: 1,
        }
    }

    /// Field size and block size after defaults and scheme restrictions.
    pub fn resolve(&self) -> Result<(u32, usize)> {
        let k = self.k;
        let (q, n) = match self.scheme {
            SchemeId::A => {
                if k < 3 {
                    return Err(Error::InvalidParams(format!("scheme A needs k >= 3, got {k}")));
                }
                let q = self.q.unwrap_or_else(|| next_prime(2 * k as u32 - 1));
                let n = self.block_symbols.unwrap_or(1 << (k - 1).min(2));
                (q, n)
            }
            SchemeId::B | SchemeId::C => {
                let want_k = if self.scheme == SchemeId::B { 3 } else { 4 };
                if k != want_k {
                    return Err(Error::InvalidParams(format!(
                        "scheme {} is available for k = {want_k} only",
                        self.scheme
                    )));
                }
                let q = self.q.unwrap_or(3);
                let n = self.block_symbols.unwrap_or(2);
                if q != 3 || n != 2 {
                    return Err(Error::InvalidParams(format!(
                        "scheme {} uses q = 3 and N = 2",
                        self.scheme
                    )));
                }
                (q, n)
            }
        };
        if q > MAX_STORE_MODULUS {
            return Err(Error::SymbolOverflow(q));
        }
        PrimeField::new(q)?;
        Ok((q, n))
    }
}

/// Builds the scheme instance a store with these parameters uses.
pub fn build_instance(scheme: SchemeId, k: usize, q: u32, block_symbols: usize, seed: u64) -> Result<SchemeInstance> {
    match scheme {
        SchemeId::A => build_scheme_a_with(k, q, block_symbols, &SearchConfig::with_seed(seed)),
        SchemeId::B => build_scheme_b_53(),
        SchemeId::C => build_scheme_c_64(),
    }
}

/// Digits per byte for GF(q).
pub fn digits_per_byte(q: u32) -> usize {
    let mut d = 1;
    let mut span = q as u64;
    while span < 256 {
        span *= q as u64;
        d += 1;
    }
    d
}

pub fn pack_bytes(bytes: &[u8], q: u32) -> Vec<u8> {
    let d = digits_per_byte(q);
    let mut out = Vec::with_capacity(bytes.len() * d);
    for &b in bytes {
        let mut v = b as u32;
        for _ in 0..d {
            out.push((v % q) as u8);
            v /= q;
        }
    }
    out
}

pub fn unpack_symbols(symbols: &[u8], q: u32) -> Result<Vec<u8>> {
    let d = digits_per_byte(q);
    symbols
        .chunks(d)
        .map(|c| {
            let v = c.iter().rev().fold(0u32, |acc, &s| acc * q + s as u32);
            u8::try_from(v).map_err(|_| Error::format("symbols", format!("digit group decodes to {v}")))
        })
        .collect()
}

/// A store rooted at the directory holding its manifest.
#[derive(Clone, Debug)]
pub struct Store {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub instance: SchemeInstance,
}

fn row_to_bytes(m: &Mat) -> Vec<u8> {
    m.as_slice().iter().map(|&s| s as u8).collect()
}

fn bytes_to_row(field: PrimeField, b: &[u8]) -> Mat {
    Mat::row_vector(field, b.iter().map(|&s| s as u32).collect())
}

/// Writes `path`'s content as shards plus a manifest under `out_dir`.
pub fn store_file(path: &Path, config: &StoreConfig, out_dir: &Path) -> Result<Manifest> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    store_bytes(&data, config, out_dir)
}

pub fn store_bytes(data: &[u8], config: &StoreConfig, out_dir: &Path) -> Result<Manifest> {
    let (q, n) = config.resolve()?;
    let inst = build_instance(config.scheme, config.k, q, n, config.seed)?;
    let field = inst.params.field;
    let m = inst.params.stripe_symbols;
    let mut symbols = pack_bytes(data, q);
    let digits = symbols.len();
    let stripe_count = digits.div_ceil(m);
    symbols.resize(stripe_count * m, 0);

    let layout = &inst.layout;
    let mut payloads: Vec<Vec<u8>> = vec![Vec::new(); layout.h()];
    let mut stripe_crc32 = Vec::with_capacity(stripe_count);
    for chunk in symbols.chunks(m) {
        stripe_crc32.push(crc32fast::hash(chunk));
        let row = bytes_to_row(field, chunk);
        let coded = encode(&Stripe::from_row(&inst.params, &row)?, &inst.coeffs)?;
        for (node, payload) in payloads.iter_mut().enumerate() {
            for &b in layout.blocks(node)? {
                payload.extend(row_to_bytes(&coded.blocks[b]));
            }
        }
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut nodes = Vec::with_capacity(layout.h());
    for (node, payload) in payloads.into_iter().enumerate() {
        let file = format!("node{node}.shard");
        let blocks = layout.blocks(node)?.to_vec();
        let shard = Shard::new(shard_header(&inst, node, stripe_count as u64), payload);
        shard.write(&out_dir.join(&file))?;
        nodes.push(NodeEntry {
            id: node,
            file,
            blocks,
            is_super: node == layout.super_node(),
        });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        scheme: config.scheme,
        q,
        n: inst.params.n,
        k: inst.params.k,
        h: inst.params.h,
        block_symbols: n,
        digits_per_byte: digits_per_byte(q),
        file_length: data.len() as u64,
        padding: (stripe_count * m - digits) as u64,
        stripe_count: stripe_count as u64,
        seed: config.seed,
        file_crc32: crc32fast::hash(data),
        stripe_crc32,
        coefficients: CoefficientTable::from_coeffs(&inst.coeffs),
        nodes,
    };
    manifest.write(&out_dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

fn shard_header(inst: &SchemeInstance, node: NodeId, stripe_count: u64) -> ShardHeader {
    let p = &inst.params;
    ShardHeader {
        q: p.field.q() as u8,
        n: p.n as u8,
        k: p.k as u8,
        h: p.h as u8,
        block_symbols: p.block_symbols as u16,
        scheme: inst.id,
        node: node as u8,
        blocks: inst
            .layout
            .blocks(node)
            .map(|bs| bs.iter().map(|&b| b as u8).collect())
            .unwrap_or_default(),
        stripe_count,
        crc32: 0,
    }
}

impl Store {
    /// Opens the store whose manifest is at `manifest_path` and rebuilds its
    /// code, checking the coefficients match.
    pub fn open(manifest_path: &Path) -> Result<Self> {
        let manifest = Manifest::read(manifest_path)?;
        let dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let instance = build_instance(
            manifest.scheme,
            manifest.k,
            manifest.q,
            manifest.block_symbols,
            manifest.seed,
        )?;
        let recorded = manifest.coefficients.to_coeffs(instance.params.field)?;
        if recorded != instance.coeffs {
            return Err(Error::format("manifest", "coefficients differ from the rebuilt code"));
        }
        for entry in &manifest.nodes {
            if instance.layout.blocks(entry.id)? != entry.blocks.as_slice() {
                return Err(Error::format("manifest", format!("node {} block list differs", entry.id)));
            }
        }
        Ok(Store {
            dir,
            manifest,
            instance,
        })
    }

    pub fn shard_path(&self, node: NodeId) -> Result<PathBuf> {
        let entry = self.manifest.nodes.get(node).ok_or(Error::UnknownNode(node))?;
        Ok(self.dir.join(&entry.file))
    }

    /// Reads one shard; `Ok(None)` when the file is absent.
    pub fn read_shard(&self, node: NodeId) -> Result<Option<Shard>> {
        let path = self.shard_path(node)?;
        if !path.exists() {
            return Ok(None);
        }
        let shard = Shard::read(&path)?;
        let want = shard_header(&self.instance, node, self.manifest.stripe_count);
        let got = ShardHeader {
            crc32: 0,
            ..shard.header.clone()
        };
        if got != want {
            return Err(Error::format(path.display().to_string(), "header disagrees with manifest"));
        }
        Ok(Some(shard))
    }

    fn present_shards(&self) -> Result<BTreeMap<NodeId, Shard>> {
        let mut out = BTreeMap::new();
        for node in self.instance.layout.nodes() {
            if let Some(s) = self.read_shard(node)? {
                out.insert(node, s);
            }
        }
        Ok(out)
    }

    /// Reconstructs the original file from whatever shards are present.
    pub fn restore(&self) -> Result<Vec<u8>> {
        let shards = self.present_shards()?;
        let inst = &self.instance;
        let n = inst.params.block_symbols;
        let field = inst.params.field;
        let mut ids: Vec<BlockId> = Vec::new();
        for node in shards.keys() {
            ids.extend_from_slice(inst.layout.blocks(*node)?);
        }
        ids.sort_unstable();
        if ids.len() < inst.params.k {
            return Err(Error::InsufficientBlocks {
                needed: inst.params.k,
                got: ids.len(),
            });
        }
        let collector = Collector::new(&inst.coeffs, &ids)?;
        let mut symbols = Vec::with_capacity(self.manifest.stripe_count as usize * inst.params.stripe_symbols);
        for s in 0..self.manifest.stripe_count as usize {
            let mut available = BTreeMap::new();
            for (node, shard) in &shards {
                let bytes = shard.stripe(s);
                for (i, &b) in inst.layout.blocks(*node)?.iter().enumerate() {
                    available.insert(b, bytes_to_row(field, &bytes[i * n..(i + 1) * n]));
                }
            }
            let stripe = collector.recover(&available)?;
            let chunk = row_to_bytes(&stripe.as_row());
            if crc32fast::hash(&chunk) != self.manifest.stripe_crc32[s] {
                return Err(Error::ChecksumMismatch(format!("stripe {s}")));
            }
            symbols.extend(chunk);
        }
        let digits = self.manifest.file_length as usize * self.manifest.digits_per_byte;
        symbols.truncate(digits);
        let data = unpack_symbols(&symbols, self.manifest.q)?;
        if crc32fast::hash(&data) != self.manifest.file_crc32 {
            return Err(Error::ChecksumMismatch("file".into()));
        }
        Ok(data)
    }

    /// Regenerates the shards of `failed` (one or two nodes) from the
    /// others, metering every byte that crosses between nodes.
    pub fn repair(&self, failed: &[NodeId]) -> Result<StoreRepairReport> {
        let inst = &self.instance;
        let layout = &inst.layout;
        let set: BTreeSet<NodeId> = failed.iter().copied().collect();
        if set.is_empty() || set.len() != failed.len() || set.len() > 2 {
            return Err(Error::UnsupportedPattern(format!("cannot repair nodes {failed:?}")));
        }
        for &node in &set {
            layout.blocks(node)?;
        }
        let shards: BTreeMap<NodeId, Shard> = self
            .present_shards()?
            .into_iter()
            .filter(|(n, _)| !set.contains(n))
            .collect();
        let n = inst.params.block_symbols;
        let stripes = self.manifest.stripe_count as usize;
        let mut payloads: BTreeMap<NodeId, Vec<u8>> = set.iter().map(|&f| (f, Vec::new())).collect();
        let mut gamma = 0u64;
        let mut per_node: BTreeMap<NodeId, u64> = BTreeMap::new();
        let mut measured: BTreeMap<NodeId, u64> = BTreeMap::new();
        let mut method = None;

        for s in 0..stripes {
            let source = ShardSource {
                shards: &shards,
                stripe: s,
                field: inst.params.field,
                meter: RefCell::new(BTreeMap::new()),
            };
            let outcome = self.repair_stripe(&source, failed)?;
            let mut sent = source.meter.into_inner();
            if let Some(fw) = outcome.forwarded {
                // the first replacement ships the second one's blocks
                let mut wire = Vec::new();
                for &b in layout.blocks(fw.to)? {
                    wire.extend(row_to_bytes(&outcome.restored[&b]));
                }
                *sent.entry(fw.from).or_default() += wire.len() as u64;
            }
            gamma += outcome.report.gamma as u64;
            for (node, c) in &outcome.report.per_node {
                *per_node.entry(*node).or_default() += *c as u64;
            }
            for (node, c) in sent {
                *measured.entry(node).or_default() += c;
            }
            for (&f, payload) in payloads.iter_mut() {
                for &b in layout.blocks(f)? {
                    let blk = outcome.restored.get(&b).ok_or(Error::MissingShard(f))?;
                    debug_assert_eq!(blk.cols(), n);
                    payload.extend(row_to_bytes(blk));
                }
            }
            method = Some(outcome.method);
        }

        for (f, payload) in payloads {
            let shard = Shard::new(shard_header(inst, f, stripes as u64), payload);
            shard.write(&self.shard_path(f)?)?;
        }
        let m = inst.params.stripe_symbols as u64;
        let bound = crate::bounds::gamma1_bound(m, inst.params.k as u64, inst.params.n as u64)
            .map(|r| r.to_integer())
            .unwrap_or(0);
        Ok(StoreRepairReport {
            failed: failed.to_vec(),
            method,
            stripes: stripes as u64,
            gamma,
            per_node,
            measured_bytes: measured.values().sum(),
            measured_per_node: measured,
            bound: bound * stripes as u64,
        })
    }

    fn repair_stripe(&self, source: &ShardSource<'_>, failed: &[NodeId]) -> Result<RepairOutcome> {
        let inst = &self.instance;
        let k = inst.params.k;
        match *failed {
            [f] if f == inst.layout.super_node() => repair_super(inst, source),
            [f] => {
                let block = inst.layout.blocks(f)?[0];
                if inst.id == SchemeId::A && block == k {
                    repair_parity(inst, source, Parity::First)
                } else if inst.id == SchemeId::A && block == k + 1 {
                    repair_parity(inst, source, Parity::Second)
                } else {
                    repair_single(inst, source, f)
                }
            }
            [a, b] => repair_double(inst, source, [a, b]),
            _ => Err(Error::UnsupportedPattern(format!("cannot repair nodes {failed:?}"))),
        }
    }

    /// Constraint/MDS report plus the state of every shard.
    pub fn check(&self) -> CheckReport {
        let shards = self
            .instance
            .layout
            .nodes()
            .map(|node| {
                let status = match self.read_shard(node) {
                    Ok(Some(_)) => ShardStatus::Ok,
                    Ok(None) => ShardStatus::Missing,
                    Err(e) => ShardStatus::Corrupt(e.to_string()),
                };
                (node, status)
            })
            .collect();
        CheckReport {
            constraints: verify_constraints(&self.instance),
            shards,
        }
    }
}

/// Serves helper symbols straight from shard payloads, counting the bytes
/// each node puts on the wire.
struct ShardSource<'a> {
    shards: &'a BTreeMap<NodeId, Shard>,
    stripe: usize,
    field: PrimeField,
    meter: RefCell<BTreeMap<NodeId, u64>>,
}

impl HelperSource for ShardSource<'_> {
    fn send(&self, node: NodeId, projection: Option<&Mat>) -> Result<Mat> {
        let shard = self.shards.get(&node).ok_or(Error::MissingShard(node))?;
        let stored = bytes_to_row(self.field, shard.stripe(self.stripe));
        let out = match projection {
            Some(p) => stored.matmul(p)?,
            None => stored,
        };
        let wire = row_to_bytes(&out);
        *self.meter.borrow_mut().entry(node).or_default() += wire.len() as u64;
        Ok(bytes_to_row(self.field, &wire))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StoreRepairReport {
    pub failed: Vec<NodeId>,
    pub method: Option<RepairMethod>,
    pub stripes: u64,
    /// Symbols received according to the repair reports.
    pub gamma: u64,
    pub per_node: BTreeMap<NodeId, u64>,
    /// Bytes actually serialized by helpers (and forwarded between
    /// replacements).
    pub measured_bytes: u64,
    pub measured_per_node: BTreeMap<NodeId, u64>,
    /// Single-failure lower bound over all stripes.
    pub bound: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ShardStatus {
    Ok,
    Missing,
    Corrupt(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub constraints: ConstraintReport,
    pub shards: Vec<(NodeId, ShardStatus)>,
}

impl CheckReport {
    pub fn conforms(&self) -> bool {
        self.constraints.all_pass()
    }
}

/// Restores the file described by `manifest_path` into `out_path`.
pub fn restore_file(manifest_path: &Path, out_path: &Path) -> Result<u64> {
    let store = Store::open(manifest_path)?;
    let data = store.restore()?;
    std::fs::write(out_path, &data).map_err(|e| Error::io(out_path, e))?;
    Ok(data.len() as u64)
}

/// Regenerates the shard(s) of `failed`.
pub fn repair_node(manifest_path: &Path, failed: &[NodeId]) -> Result<StoreRepairReport> {
    Store::open(manifest_path)?.repair(failed)
}
