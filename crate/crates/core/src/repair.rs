//! Repair execution with symbol-exact bandwidth accounting.
//!
//! A [`RepairPlan`] says which symbols each helper sends (its stored row
//! times a projection matrix) and how the newcomer decodes the lost blocks
//! from the concatenated downloads. Plans are checked operationally: the
//! lost block's generator must lie in the column space of the download
//! matrix.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::bounds;
use crate::code::{encode, BlockId, CodeCoefficients, Collector, NodeId, NodeLayout, Stripe};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::schemes::{SchemeId, SchemeInstance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairPlan {
    pub failed: NodeId,
    pub lost_blocks: Vec<BlockId>,
    /// Helper node → projection (`α_j × β_j`).
    pub downloads: BTreeMap<NodeId, Mat>,
    /// Maps the concatenated downloads (`1 × γ`) to the lost blocks.
    pub decode: Mat,
    /// Null space of the download matrix; redundant symbols must vanish on it.
    checks: Mat,
}

/// Stacks `G_node · P` over the downloads, giving the `M × γ` map from source
/// symbols to downloaded symbols.
fn download_matrix(
    coeffs: &CodeCoefficients,
    layout: &NodeLayout,
    downloads: &BTreeMap<NodeId, Mat>,
) -> Result<Mat> {
    let parts = downloads
        .iter()
        .map(|(&node, p)| coeffs.generator(layout.blocks(node)?).matmul(p))
        .collect::<Result<Vec<_>>>()?;
    if parts.is_empty() {
        return Ok(Mat::zeros(coeffs.field(), coeffs.k() * coeffs.block_symbols(), 0));
    }
    Mat::hstack(&parts)
}

impl RepairPlan {
    /// Builds a plan from helper projections, deriving the decode map.
    pub fn assemble(
        coeffs: &CodeCoefficients,
        layout: &NodeLayout,
        failed: NodeId,
        downloads: BTreeMap<NodeId, Mat>,
    ) -> Result<Self> {
        let lost_blocks = layout.blocks(failed)?.to_vec();
        let n = coeffs.block_symbols();
        for (&node, p) in &downloads {
            if node == failed {
                return Err(Error::InvalidParams(format!("node {node} cannot help itself")));
            }
            if p.rows() != layout.alpha(node, n) || p.cols() > p.rows() {
                return Err(Error::dims(format!(
                    "projection {}x{} for node {node} storing {} symbols",
                    p.rows(),
                    p.cols(),
                    layout.alpha(node, n)
                )));
            }
        }
        let d = download_matrix(coeffs, layout, &downloads)?;
        let target = coeffs.generator(&lost_blocks);
        let decode = match d.solve_any(&target) {
            Ok(x) => x,
            Err(Error::Inconsistent) => {
                let gamma = d.cols();
                return Err(Error::InfeasiblePlan(failed, gamma));
            }
            Err(e) => return Err(e),
        };
        let checks = d.null_space();
        Ok(RepairPlan {
            failed,
            lost_blocks,
            downloads,
            decode,
            checks,
        })
    }

    /// Total downloaded symbols `γ`.
    pub fn bandwidth(&self) -> usize {
        self.downloads.values().map(Mat::cols).sum()
    }

    /// `β_j` per helper.
    pub fn per_node(&self) -> BTreeMap<NodeId, usize> {
        self.downloads.iter().map(|(&n, p)| (n, p.cols())).collect()
    }

    /// Helper side: the symbols node `node` transmits, given its stored row.
    pub fn helper_symbols(&self, node: NodeId, stored: &Mat) -> Result<Mat> {
        let p = self
            .downloads
            .get(&node)
            .ok_or_else(|| Error::InvalidParams(format!("node {node} is not a helper")))?;
        stored.matmul(p)
    }

    /// Newcomer side: decodes the lost blocks from every helper's symbols.
    pub fn decode_downloads(&self, received: &BTreeMap<NodeId, Mat>) -> Result<Vec<Mat>> {
        let mut parts = Vec::with_capacity(self.downloads.len());
        for (&node, p) in &self.downloads {
            let got = received.get(&node).ok_or(Error::MissingShard(node))?;
            if got.cols() != p.cols() {
                return Err(Error::dims(format!(
                    "node {node} sent {} symbols, plan expects {}",
                    got.cols(),
                    p.cols()
                )));
            }
            parts.push(got.clone());
        }
        let row = Mat::hstack(&parts)?;
        if self.checks.cols() > 0 && !row.matmul(&self.checks)?.is_zero() {
            return Err(Error::CorruptSurvivor);
        }
        let out = row.matmul(&self.decode)?;
        let n = out.cols() / self.lost_blocks.len();
        let field = out.field();
        Ok(out
            .as_slice()
            .chunks(n)
            .map(|c| Mat::row_vector(field, c.to_vec()))
            .collect())
    }
}

/// True iff the plan's downloads determine the lost blocks for every stripe
/// and respect each helper's storage.
pub fn verify_plan(inst: &SchemeInstance, plan: &RepairPlan) -> bool {
    verify_plan_parts(&inst.coeffs, &inst.layout, plan)
}

pub(crate) fn verify_plan_parts(coeffs: &CodeCoefficients, layout: &NodeLayout, plan: &RepairPlan) -> bool {
    let n = coeffs.block_symbols();
    if plan.failed >= layout.h() {
        return false;
    }
    for (&node, p) in &plan.downloads {
        if node >= layout.h() || node == plan.failed || p.cols() > layout.alpha(node, n) {
            return false;
        }
        if p.rows() != layout.alpha(node, n) {
            return false;
        }
    }
    let Ok(d) = download_matrix(coeffs, layout, &plan.downloads) else {
        return false;
    };
    let Ok(lost) = layout.blocks(plan.failed) else {
        return false;
    };
    let target = coeffs.generator(lost);
    let spans = d.cols() > 0
        && Mat::hstack(&[d.clone(), target.clone()]).is_ok_and(|m| m.rank() == d.rank());
    spans && d.matmul(&plan.decode).ok().as_ref() == Some(&target)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BandwidthReport {
    /// Total symbols transferred.
    pub gamma: usize,
    /// Symbols sent per node; forwarded hops are attributed to the sender.
    pub per_node: BTreeMap<NodeId, usize>,
    /// Single-failure lower bound `(M/k)·(n−1)/(n−k)` for comparison.
    pub bound: u64,
    /// Update bandwidth `(M/k)·n`.
    pub delta: u64,
}

impl BandwidthReport {
    fn new(inst: &SchemeInstance, per_node: BTreeMap<NodeId, usize>) -> Self {
        let p = &inst.params;
        let m = p.stripe_symbols as u64;
        let bound = bounds::gamma1_bound(m, p.k as u64, p.n as u64)
            .map(|r| r.to_integer())
            .unwrap_or(0);
        BandwidthReport {
            gamma: per_node.values().sum(),
            per_node,
            bound,
            delta: bounds::update_bandwidth(m, p.k as u64, p.n as u64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RepairMethod {
    Projection,
    Viewpoint,
    FullReconstruct,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RepairOutcome {
    pub restored: BTreeMap<BlockId, Mat>,
    pub report: BandwidthReport,
    pub method: RepairMethod,
    /// Second-stage hop of a two-node repair.
    pub forwarded: Option<Forward>,
}

/// Symbols one replacement node passes to another.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Forward {
    pub from: NodeId,
    pub to: NodeId,
    pub symbols: usize,
}

/// Where a newcomer's downloads come from.
pub trait HelperSource {
    /// What `node` transmits: its stored row times `projection`, or the
    /// whole row when `projection` is `None`.
    fn send(&self, node: NodeId, projection: Option<&Mat>) -> Result<Mat>;
}

/// Stored rows held in memory.
impl HelperSource for BTreeMap<NodeId, Mat> {
    fn send(&self, node: NodeId, projection: Option<&Mat>) -> Result<Mat> {
        let stored = self.get(&node).ok_or(Error::MissingShard(node))?;
        match projection {
            Some(p) => stored.matmul(p),
            None => Ok(stored.clone()),
        }
    }
}

/// Runs a projection plan against the helpers, counting every received
/// symbol.
pub fn execute_plan<S: HelperSource + ?Sized>(
    inst: &SchemeInstance,
    plan: &RepairPlan,
    survivors: &S,
) -> Result<(BTreeMap<BlockId, Mat>, BandwidthReport)> {
    let mut received = BTreeMap::new();
    let mut per_node = BTreeMap::new();
    for (&node, p) in &plan.downloads {
        let sent = survivors.send(node, Some(p))?;
        per_node.insert(node, sent.cols());
        received.insert(node, sent);
    }
    let blocks = plan.decode_downloads(&received)?;
    let restored = plan.lost_blocks.iter().copied().zip(blocks).collect();
    Ok((restored, BandwidthReport::new(inst, per_node)))
}

pub fn repair_single<S: HelperSource + ?Sized>(
    inst: &SchemeInstance,
    survivors: &S,
    failed: NodeId,
) -> Result<RepairOutcome> {
    inst.layout.blocks(failed)?;
    if failed == inst.layout.super_node() {
        return Err(Error::UnsupportedPattern(
            "super-node loss is repaired by full reconstruction".into(),
        ));
    }
    let plan = inst.plans.get(&failed).ok_or(Error::MissingPlan(failed))?;
    let (restored, report) = execute_plan(inst, plan, survivors)?;
    Ok(RepairOutcome {
        restored,
        report,
        method: RepairMethod::Projection,
        forwarded: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Parity {
    First,
    Second,
}

impl Parity {
    pub fn block(self, k: usize) -> BlockId {
        match self {
            Parity::First => k,
            Parity::Second => k + 1,
        }
    }
}

/// Repairs a lost parity node of a scheme-A code through the change of
/// variables that makes the parity systematic.
pub fn repair_parity<S: HelperSource + ?Sized>(
    inst: &SchemeInstance,
    survivors: &S,
    parity: Parity,
) -> Result<RepairOutcome> {
    let view = crate::schemes::parity_viewpoint(inst, parity)?;
    let block = parity.block(inst.params.k);
    let node = inst
        .layout
        .node_of(block)
        .ok_or(Error::UnknownNode(block))?;
    let plan = inst.plans.get(&node).ok_or(Error::MissingPlan(node))?;
    let (restored, report) = execute_plan(inst, plan, survivors)?;
    // the restored parity is the pivot coordinate of the viewpoint
    debug_assert_eq!(view.parity, parity);
    Ok(RepairOutcome {
        restored,
        report,
        method: RepairMethod::Viewpoint,
        forwarded: None,
    })
}

/// Downloads every helper in full, reconstructs the stripe and re-encodes.
fn reconstruct<S: HelperSource + ?Sized>(
    inst: &SchemeInstance,
    survivors: &S,
    helpers: &[NodeId],
) -> Result<(Stripe, BTreeMap<NodeId, usize>)> {
    let mut available = BTreeMap::new();
    let mut per_node = BTreeMap::new();
    let n = inst.params.block_symbols;
    for &node in helpers {
        let stored = survivors.send(node, None)?;
        per_node.insert(node, stored.cols());
        for (i, &b) in inst.layout.blocks(node)?.iter().enumerate() {
            let cols: Vec<usize> = (i * n..(i + 1) * n).collect();
            available.insert(b, stored.select_cols(&cols));
        }
    }
    let ids: Vec<BlockId> = available.keys().copied().collect();
    let stripe = Collector::new(&inst.coeffs, &ids)?.recover(&available)?;
    Ok((stripe, per_node))
}

pub fn repair_super<S: HelperSource + ?Sized>(inst: &SchemeInstance, survivors: &S) -> Result<RepairOutcome> {
    let sup = inst.layout.super_node();
    let helpers: Vec<NodeId> = inst.layout.nodes().filter(|&n| n != sup).collect();
    let (stripe, per_node) = reconstruct(inst, survivors, &helpers)?;
    let coded = encode(&stripe, &inst.coeffs)?;
    let restored = inst
        .layout
        .blocks(sup)?
        .iter()
        .map(|&b| (b, coded.blocks[b].clone()))
        .collect();
    Ok(RepairOutcome {
        restored,
        report: BandwidthReport::new(inst, per_node),
        method: RepairMethod::FullReconstruct,
        forwarded: None,
    })
}

/// Two-node repair: the first replacement downloads `k` blocks, decodes and
/// keeps its block, then forwards the second lost block to the other
/// replacement. A replacement parity node always takes the first stage.
pub fn repair_double<S: HelperSource + ?Sized>(
    inst: &SchemeInstance,
    survivors: &S,
    failed: [NodeId; 2],
) -> Result<RepairOutcome> {
    let layout = &inst.layout;
    for &f in &failed {
        layout.blocks(f)?;
    }
    if failed[0] == failed[1] {
        return Err(Error::UnsupportedPattern("the two failed nodes coincide".into()));
    }
    if failed.contains(&layout.super_node()) {
        return Err(Error::UnsupportedPattern(
            "super node plus another node erases three blocks".into(),
        ));
    }
    if inst.id == SchemeId::B {
        return Err(Error::NonMds);
    }
    let k = inst.params.k;
    let holds_parity = |node: NodeId| {
        layout
            .blocks(node)
            .map(|bs| bs.iter().any(|&b| b >= k))
            .unwrap_or(false)
    };
    let [first, second] = if !holds_parity(failed[0]) && holds_parity(failed[1]) {
        [failed[1], failed[0]]
    } else {
        failed
    };
    let down: BTreeSet<NodeId> = failed.into();
    let helpers: Vec<NodeId> = layout.nodes().filter(|n| !down.contains(n)).collect();
    let (stripe, mut per_node) = reconstruct(inst, survivors, &helpers)?;
    let coded = encode(&stripe, &inst.coeffs)?;
    let mut restored = BTreeMap::new();
    for node in [first, second] {
        for &b in layout.blocks(node)? {
            restored.insert(b, coded.blocks[b].clone());
        }
    }
    let forwarded = layout.alpha(second, inst.params.block_symbols);
    *per_node.entry(first).or_default() += forwarded;
    Ok(RepairOutcome {
        restored,
        report: BandwidthReport::new(inst, per_node),
        method: RepairMethod::FullReconstruct,
        forwarded: Some(Forward {
            from: first,
            to: second,
            symbols: forwarded,
        }),
    })
}

/// Products left after eliminating `f_2` and `f_3` from the two parities of
/// a (5,3) code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminatedSystem {
    /// `A_1·A_3⁻¹ − B_1·B_3⁻¹`
    pub c1: Mat,
    /// `A_2·A_3⁻¹ − B_2·B_3⁻¹`
    pub c2: Mat,
    /// `A_1·A_2⁻¹ − B_1·B_2⁻¹`
    pub d1: Mat,
    /// `A_3·A_2⁻¹ − B_3·B_2⁻¹`
    pub d2: Mat,
}

impl EliminatedSystem {
    /// Whether `f_1` is recoverable from `f_1·C_1·V¹` and `f_1·D_1·V²`.
    pub fn recovers_first(&self, v1: &Mat, v2: &Mat) -> Result<bool> {
        let m = Mat::hstack(&[self.c1.matmul(v1)?, self.d1.matmul(v2)?])?;
        Ok(m.rank() == self.c1.rows())
    }
}

pub fn eliminate_53(coeffs: &CodeCoefficients) -> Result<EliminatedSystem> {
    if coeffs.k() != 3 {
        return Err(Error::InvalidParams(format!("elimination needs k = 3, got {}", coeffs.k())));
    }
    let (a, b) = (coeffs.a(), coeffs.b());
    let a2i = a[1].inverse()?;
    let a3i = a[2].inverse()?;
    let b2i = b[1].inverse()?;
    let b3i = b[2].inverse()?;
    let diff = |x: &Mat, xi: &Mat, y: &Mat, yi: &Mat| -> Result<Mat> { x.matmul(xi)?.sub(&y.matmul(yi)?) };
    Ok(EliminatedSystem {
        c1: diff(&a[0], &a3i, &b[0], &b3i)?,
        c2: diff(&a[1], &a3i, &b[1], &b3i)?,
        d1: diff(&a[0], &a2i, &b[0], &b2i)?,
        d2: diff(&a[2], &a2i, &b[2], &b2i)?,
    })
}
