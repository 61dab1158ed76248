//! The (k+2, k) storage code: parameters, coefficients, node layout,
//! encoding and data-collector decoding.
//!
//! Blocks are numbered `0..k` for the systematic parts `f_1..f_k`, `k` for
//! the first parity `p_1 = Σ f_i·A_i` and `k+1` for the second parity
//! `p_2 = Σ f_i·B_i`. Nodes sit one layer above blocks: a node failure
//! erases every block the node stores.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::Mat;

pub type NodeId = usize;
pub type BlockId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SystemParams {
    /// Coded blocks per stripe, always `k + 2`.
    pub n: usize,
    /// Source blocks per stripe.
    pub k: usize,
    /// Storage nodes.
    pub h: usize,
    /// Symbols per block (`N`).
    pub block_symbols: usize,
    /// Source symbols per stripe (`M = k·N`).
    pub stripe_symbols: usize,
    pub field: PrimeField,
}

impl SystemParams {
    pub fn new(k: usize, h: usize, block_symbols: usize, field: PrimeField) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParams(format!("k = {k} < 2")));
        }
        if block_symbols == 0 || !block_symbols.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "block size N = {block_symbols} must be even and positive"
            )));
        }
        if h != k + 1 && h != k + 2 {
            return Err(Error::InvalidParams(format!("h = {h} must be k+1 or k+2")));
        }
        Ok(SystemParams {
            n: k + 2,
            k,
            h,
            block_symbols,
            stripe_symbols: k * block_symbols,
            field,
        })
    }

    /// Parameters of the one-super-node system: `h = k + 1`.
    pub fn with_super_node(k: usize, block_symbols: usize, field: PrimeField) -> Result<Self> {
        Self::new(k, k + 1, block_symbols, field)
    }

    pub fn first_parity(&self) -> BlockId {
        self.k
    }

    pub fn second_parity(&self) -> BlockId {
        self.k + 1
    }

    pub fn is_systematic(&self, block: BlockId) -> bool {
        block < self.k
    }
}

/// Coefficient matrices `A_1..A_k`, `B_1..B_k`, each `N × N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeCoefficients {
    a: Vec<Mat>,
    b: Vec<Mat>,
}

impl CodeCoefficients {
    pub fn new(a: Vec<Mat>, b: Vec<Mat>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::InvalidParams(format!(
                "{} A matrices vs {} B matrices",
                a.len(),
                b.len()
            )));
        }
        let n = a[0].rows();
        let field = a[0].field();
        for m in a.iter().chain(&b) {
            if m.rows() != n || m.cols() != n {
                return Err(Error::dims(format!(
                    "coefficient {}x{} but N = {n}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.field() != field {
                return Err(Error::ModulusMismatch {
                    left: field.q(),
                    right: m.field().q(),
                });
            }
        }
        for (i, bi) in b.iter().enumerate() {
            if bi.rank() < n {
                return Err(Error::InvalidParams(format!("B_{} is singular", i + 1)));
            }
        }
        Ok(CodeCoefficients { a, b })
    }

    /// `A_i = I` for every `i`.
    pub fn with_identity_a(b: Vec<Mat>) -> Result<Self> {
        let a = b.iter().map(|m| Mat::identity(m.field(), m.rows())).collect();
        Self::new(a, b)
    }

    pub fn k(&self) -> usize {
        self.a.len()
    }

    pub fn block_symbols(&self) -> usize {
        self.a[0].rows()
    }

    pub fn field(&self) -> PrimeField {
        self.a[0].field()
    }

    pub fn a(&self) -> &[Mat] {
        &self.a
    }

    pub fn b(&self) -> &[Mat] {
        &self.b
    }

    pub fn a_is_identity(&self) -> bool {
        self.a
            .iter()
            .all(|m| *m == Mat::identity(m.field(), m.rows()))
    }

    /// The `M × N` matrix `G_b` with `block_b = f · G_b`, where `f` is the
    /// `1 × M` concatenation of the source blocks.
    pub fn block_generator(&self, block: BlockId) -> Mat {
        let k = self.k();
        let n = self.block_symbols();
        let field = self.field();
        let parts: Vec<Mat> = match block {
            b if b < k => (0..k)
                .map(|i| {
                    if i == b {
                        Mat::identity(field, n)
                    } else {
                        Mat::zeros(field, n, n)
                    }
                })
                .collect(),
            b if b == k => self.a.clone(),
            b if b == k + 1 => self.b.clone(),
            _ => panic!("block {block} out of range for k = {k}"),
        };
        Mat::vstack(&parts).expect("square blocks")
    }

    /// Column concatenation of the generators of `blocks`.
    pub fn generator(&self, blocks: &[BlockId]) -> Mat {
        let parts: Vec<Mat> = blocks.iter().map(|&b| self.block_generator(b)).collect();
        Mat::hstack(&parts).expect("same row count")
    }

    pub fn check_params(&self, params: &SystemParams) -> Result<()> {
        if self.k() != params.k
            || self.block_symbols() != params.block_symbols
            || self.field() != params.field
        {
            return Err(Error::InvalidParams(format!(
                "coefficients (k={}, N={}, q={}) do not match params (k={}, N={}, q={})",
                self.k(),
                self.block_symbols(),
                self.field().q(),
                params.k,
                params.block_symbols,
                params.field.q()
            )));
        }
        Ok(())
    }
}

/// Placement of blocks on nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeLayout {
    assignment: Vec<Vec<BlockId>>,
    super_node: NodeId,
    labels: Vec<String>,
}

impl NodeLayout {
    pub fn new(n: usize, assignment: Vec<Vec<BlockId>>, super_node: NodeId) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (node, blocks) in assignment.iter().enumerate() {
            let want = if node == super_node { 2 } else { 1 };
            if blocks.len() != want {
                return Err(Error::InvalidParams(format!(
                    "node {node} holds {} blocks, expected {want}",
                    blocks.len()
                )));
            }
            for &b in blocks {
                if b >= n || !seen.insert(b) {
                    return Err(Error::InvalidParams(format!(
                        "block {b} out of range or assigned twice"
                    )));
                }
            }
        }
        if seen.len() != n {
            return Err(Error::InvalidParams(format!(
                "layout covers {} of {n} blocks",
                seen.len()
            )));
        }
        let labels = (0..assignment.len()).map(|i| format!("n{i}")).collect();
        Ok(NodeLayout {
            assignment,
            super_node,
            labels,
        })
    }

    /// Super node stores `f_1, f_2`; `s_2..s_{k-1}` store `f_3..f_k`; then
    /// one node per parity.
    pub fn systematic_super(k: usize) -> Self {
        let mut assignment = vec![vec![0, 1]];
        assignment.extend((2..k).map(|b| vec![b]));
        assignment.push(vec![k]);
        assignment.push(vec![k + 1]);
        let mut layout = NodeLayout::new(k + 2, assignment, 0).expect("valid layout");
        layout.labels = std::iter::once("s1".to_string())
            .chain((2..k).map(|i| format!("s{i}")))
            .chain(["p1".to_string(), "p2".to_string()])
            .collect();
        layout
    }

    /// Super node stores both parities; `s_1..s_k` store `f_1..f_k`.
    pub fn parity_super(k: usize) -> Self {
        let mut assignment = vec![vec![k, k + 1]];
        assignment.extend((0..k).map(|b| vec![b]));
        let mut layout = NodeLayout::new(k + 2, assignment, 0).expect("valid layout");
        layout.labels = std::iter::once("super".to_string())
            .chain((1..=k).map(|i| format!("s{i}")))
            .collect();
        layout
    }

    pub fn h(&self) -> usize {
        self.assignment.len()
    }

    pub fn super_node(&self) -> NodeId {
        self.super_node
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.assignment.len()
    }

    pub fn blocks(&self, node: NodeId) -> Result<&[BlockId]> {
        self.assignment
            .get(node)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownNode(node))
    }

    pub fn assignment(&self) -> &[Vec<BlockId>] {
        &self.assignment
    }

    pub fn node_of(&self, block: BlockId) -> Option<NodeId> {
        self.assignment.iter().position(|bs| bs.contains(&block))
    }

    pub fn label(&self, node: NodeId) -> &str {
        self.labels.get(node).map_or("?", String::as_str)
    }

    /// Node whose label is `label` (e.g. `"s2"`, `"p1"`).
    pub fn by_label(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label)
    }

    /// Stored symbols `α_i`.
    pub fn alpha(&self, node: NodeId, block_symbols: usize) -> usize {
        self.assignment[node].len() * block_symbols
    }

    pub fn node_failure_blocks(&self, failed: &BTreeSet<NodeId>) -> Result<BTreeSet<BlockId>> {
        let mut out = BTreeSet::new();
        for &node in failed {
            out.extend(self.blocks(node)?.iter().copied());
        }
        Ok(out)
    }

    /// Each node's stored row (`1 × α_i`) for one coded stripe.
    pub fn node_rows(&self, coded: &CodedStripe) -> BTreeMap<NodeId, Mat> {
        self.nodes()
            .map(|node| {
                let parts: Vec<Mat> = self.assignment[node]
                    .iter()
                    .map(|&b| coded.blocks[b].clone())
                    .collect();
                (node, Mat::hstack(&parts).expect("row vectors"))
            })
            .collect()
    }
}

/// Convenience wrapper over [`NodeLayout::node_failure_blocks`].
pub fn node_failure_blocks(layout: &NodeLayout, failed: &BTreeSet<NodeId>) -> Result<BTreeSet<BlockId>> {
    layout.node_failure_blocks(failed)
}

/// One encoding unit: `k` source blocks of `N` symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stripe {
    pub blocks: Vec<Mat>,
}

impl Stripe {
    pub fn new(params: &SystemParams, blocks: Vec<Vec<u32>>) -> Result<Self> {
        if blocks.len() != params.k || blocks.iter().any(|b| b.len() != params.block_symbols) {
            return Err(Error::dims("stripe shape does not match params"));
        }
        Ok(Stripe {
            blocks: blocks
                .into_iter()
                .map(|b| Mat::row_vector(params.field, b))
                .collect(),
        })
    }

    /// Splits a `1 × M` row into blocks.
    pub fn from_row(params: &SystemParams, row: &Mat) -> Result<Self> {
        if row.rows() != 1 || row.cols() != params.stripe_symbols {
            return Err(Error::dims("source row has wrong length"));
        }
        let blocks = row
            .as_slice()
            .chunks(params.block_symbols)
            .map(|c| c.to_vec())
            .collect();
        Stripe::new(params, blocks)
    }

    pub fn zeros(params: &SystemParams) -> Self {
        Stripe::new(params, vec![vec![0; params.block_symbols]; params.k]).expect("shape")
    }

    pub fn random<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Self {
        let q = params.field.q();
        let blocks = (0..params.k)
            .map(|_| (0..params.block_symbols).map(|_| rng.gen_range(0..q)).collect())
            .collect();
        Stripe::new(params, blocks).expect("shape")
    }

    /// Stripe with a single 1 at source symbol `index`.
    pub fn unit(params: &SystemParams, index: usize) -> Self {
        let mut row = vec![0; params.stripe_symbols];
        row[index] = 1;
        Stripe::from_row(params, &Mat::row_vector(params.field, row)).expect("shape")
    }

    pub fn as_row(&self) -> Mat {
        Mat::hstack(&self.blocks).expect("row vectors")
    }
}

/// All `n` coded blocks of a stripe.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedStripe {
    pub blocks: Vec<Mat>,
}

pub fn encode(stripe: &Stripe, coeffs: &CodeCoefficients) -> Result<CodedStripe> {
    let k = coeffs.k();
    if stripe.blocks.len() != k {
        return Err(Error::dims(format!(
            "stripe has {} blocks, code expects {k}",
            stripe.blocks.len()
        )));
    }
    let mut blocks = stripe.blocks.clone();
    for mats in [coeffs.a(), coeffs.b()] {
        let mut acc = Mat::zeros(coeffs.field(), 1, coeffs.block_symbols());
        for (f, m) in stripe.blocks.iter().zip(mats) {
            acc = acc.add(&f.matmul(m)?)?;
        }
        blocks.push(acc);
    }
    Ok(CodedStripe { blocks })
}

/// Precomputed data-collector map for a fixed set of available blocks.
#[derive(Clone, Debug)]
pub struct Collector {
    blocks: Vec<BlockId>,
    recover: Mat,
    residual: Mat,
    field: PrimeField,
    block_symbols: usize,
}

impl Collector {
    pub fn new(coeffs: &CodeCoefficients, blocks: &[BlockId]) -> Result<Self> {
        let k = coeffs.k();
        if blocks.len() < k {
            return Err(Error::InsufficientBlocks {
                needed: k,
                got: blocks.len(),
            });
        }
        let g = coeffs.generator(blocks);
        let m = g.rows();
        if g.rank() < m {
            return Err(Error::UndecodableSubset(blocks.to_vec()));
        }
        // f·G = d; pick X with G·X = I so that f = d·X
        let recover = g.solve_any(&Mat::identity(g.field(), m))?;
        let residual = Mat::identity(g.field(), g.cols()).sub(&recover.matmul(&g)?)?;
        Ok(Collector {
            blocks: blocks.to_vec(),
            recover,
            residual,
            field: coeffs.field(),
            block_symbols: coeffs.block_symbols(),
        })
    }

    pub fn blocks(&self) -> &[BlockId] {
        &self.blocks
    }

    /// Source row from the available blocks' concatenated data.
    pub fn recover_row(&self, data: &Mat) -> Result<Mat> {
        if !data.matmul(&self.residual)?.is_zero() {
            return Err(Error::CorruptSurvivor);
        }
        data.matmul(&self.recover)
    }

    pub fn recover(&self, available: &BTreeMap<BlockId, Mat>) -> Result<Stripe> {
        let parts = self
            .blocks
            .iter()
            .map(|b| available.get(b).cloned().ok_or(Error::InsufficientBlocks {
                needed: self.blocks.len(),
                got: available.len(),
            }))
            .collect::<Result<Vec<_>>>()?;
        let row = self.recover_row(&Mat::hstack(&parts)?)?;
        let blocks = row
            .as_slice()
            .chunks(self.block_symbols)
            .map(|c| Mat::row_vector(self.field, c.to_vec()))
            .collect();
        Ok(Stripe { blocks })
    }
}

/// Reconstructs the source from any decodable set of coded blocks.
pub fn collect(available: &BTreeMap<BlockId, Mat>, coeffs: &CodeCoefficients) -> Result<Stripe> {
    let ids: Vec<BlockId> = available.keys().copied().collect();
    Collector::new(coeffs, &ids)?.recover(available)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MdsReport {
    pub is_mds: bool,
    /// First undecodable `k`-subset in lexicographic order.
    pub witness: Option<Vec<BlockId>>,
}

pub fn check_mds(coeffs: &CodeCoefficients, params: &SystemParams) -> MdsReport {
    let m = params.stripe_symbols;
    let witness = (0..params.n)
        .combinations(params.k)
        .find(|subset| coeffs.generator(subset).rank() < m);
    MdsReport {
        is_mds: witness.is_none(),
        witness,
    }
}
