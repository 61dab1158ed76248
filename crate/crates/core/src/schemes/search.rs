//! Projection search for single-node repair.
//!
//! Two surviving blocks act as probes: the newcomer downloads exactly `w`
//! symbols from them (`w` = lost width) and cancels the interference they
//! carry using the remaining survivors, which are systematic in the basis
//! formed by the lost blocks and themselves. Each remaining node then only
//! needs to send the rank of its interference.

use std::collections::BTreeMap;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SearchConfig;
use crate::code::{BlockId, CodeCoefficients, NodeId, NodeLayout};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::{subspaces, Mat};
use crate::repair::RepairPlan;

pub(crate) struct ProbeContext {
    probes: Vec<NodeId>,
    lost_width: usize,
    /// Info nodes and their row ranges in the probe coordinates.
    info: Vec<(NodeId, Vec<usize>)>,
    /// Probe generators expressed in the info-set basis.
    h_probe: Vec<Mat>,
}

impl ProbeContext {
    pub(crate) fn new(
        coeffs: &CodeCoefficients,
        layout: &NodeLayout,
        failed: NodeId,
        probes: &[NodeId],
    ) -> Result<Self> {
        let n = coeffs.block_symbols();
        let lost = layout.blocks(failed)?;
        let mut info_blocks: Vec<BlockId> = lost.to_vec();
        let mut info = Vec::new();
        for node in layout.nodes() {
            if node == failed || probes.contains(&node) {
                continue;
            }
            let start = info_blocks.len() * n;
            let bs = layout.blocks(node)?;
            info.push((node, (start..start + bs.len() * n).collect()));
            info_blocks.extend_from_slice(bs);
        }
        if info_blocks.len() != coeffs.k() {
            return Err(Error::InvalidParams(format!(
                "probes leave {} info blocks, need {}",
                info_blocks.len(),
                coeffs.k()
            )));
        }
        let gi = coeffs.generator(&info_blocks).inverse()?;
        let h_probe = probes
            .iter()
            .map(|&p| gi.matmul(&coeffs.generator(layout.blocks(p)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProbeContext {
            probes: probes.to_vec(),
            lost_width: lost.len() * n,
            info,
            h_probe,
        })
    }

    /// Total bandwidth and downloads for the given probe projections, or
    /// `None` when the probes do not pin down the lost block.
    pub(crate) fn evaluate(&self, projections: &[&Mat]) -> Option<(usize, BTreeMap<NodeId, Mat>)> {
        let parts = self
            .h_probe
            .iter()
            .zip(projections)
            .map(|(h, p)| h.matmul(p))
            .collect::<Result<Vec<_>>>()
            .ok()?;
        let d = Mat::hstack(&parts).ok()?;
        if d.cols() != self.lost_width {
            return None;
        }
        let a = d.select_rows(0..self.lost_width).inverse().ok()?;
        let mut downloads: BTreeMap<NodeId, Mat> = self
            .probes
            .iter()
            .zip(projections)
            .map(|(&node, p)| (node, (*p).clone()))
            .collect();
        let mut total = self.lost_width;
        for (node, rows) in &self.info {
            let r = d.select_rows(rows.iter().copied()).matmul(&a).ok()?;
            let basis = r.column_basis();
            if basis.cols() > 0 {
                total += basis.cols();
                downloads.insert(*node, basis);
            }
        }
        Some((total, downloads))
    }

    /// Candidate second projections aligned with `v1` at some info node.
    fn aligned(&self, v1: &Mat, n: usize) -> Vec<Mat> {
        let mut out = Vec::new();
        for (_, rows) in self.info.iter().filter(|(_, r)| r.len() == n) {
            let h1 = self.h_probe[0].select_rows(rows.iter().copied());
            let h2 = self.h_probe[1].select_rows(rows.iter().copied());
            if let (Ok(h2i), Ok(t)) = (h2.inverse(), h1.matmul(v1)) {
                if let Ok(v2) = h2i.matmul(&t) {
                    let v2 = v2.column_basis();
                    if v2.cols() == v1.cols() && !out.contains(&v2) {
                        out.push(v2);
                    }
                }
            }
        }
        out
    }
}

fn space_size(q: u32, entries: usize) -> u64 {
    (q as u64).checked_pow(entries as u32).unwrap_or(u64::MAX)
}

/// All `d`-dimensional subspaces of `F^rows` when the matrix space is under
/// the cap, else a deduplicated random sample.
pub(crate) fn projection_candidates(
    field: PrimeField,
    rows: usize,
    d: usize,
    config: &SearchConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Mat> {
    if space_size(field.q(), rows * d) <= config.exhaustive_cap {
        return subspaces(field, rows, d);
    }
    let mut out: Vec<Mat> = Vec::with_capacity(config.random_samples);
    for _ in 0..config.random_samples {
        let m = Mat::from_fn(field, rows, d, |_, _| rng.gen_range(0..field.q()));
        let basis = m.column_basis();
        if basis.cols() == d {
            out.push(basis);
        }
    }
    out.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
    out.dedup();
    out
}

/// Builds the plan that uses the given probe projections, letting every
/// other survivor send only what cancels its interference.
pub fn plan_from_probes(
    coeffs: &CodeCoefficients,
    layout: &NodeLayout,
    failed: NodeId,
    probes: &[(NodeId, Mat)],
) -> Result<RepairPlan> {
    let nodes: Vec<NodeId> = probes.iter().map(|(n, _)| *n).collect();
    let ctx = ProbeContext::new(coeffs, layout, failed, &nodes)?;
    let proj: Vec<&Mat> = probes.iter().map(|(_, p)| p).collect();
    let (_, downloads) = ctx
        .evaluate(&proj)
        .ok_or(Error::InfeasiblePlan(failed, 0))?;
    RepairPlan::assemble(coeffs, layout, failed, downloads)
}

/// Searches for a repair plan for `failed` downloading at most `budget`
/// symbols. Enumeration order is lexicographic in the projections, so the
/// first plan found is the smallest one for its probe pair.
pub fn search_projections(
    coeffs: &CodeCoefficients,
    layout: &NodeLayout,
    failed: NodeId,
    budget: usize,
    config: &SearchConfig,
) -> Result<RepairPlan> {
    if failed == layout.super_node() {
        return Err(Error::UnsupportedPattern(
            "super-node repair has no projection plan".into(),
        ));
    }
    let lost = layout.blocks(failed)?;
    let n = coeffs.block_symbols();
    let field = coeffs.field();
    if budget < lost.len() * n {
        return Err(Error::InfeasiblePlan(failed, budget));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let singles = projection_candidates(field, n, n / 2, config, &mut rng);
    let mut doubles: Option<Vec<Mat>> = None;

    let survivors: Vec<BlockId> = (0..coeffs.k() + 2).filter(|b| !lost.contains(b)).collect();
    for pair in survivors.iter().copied().combinations(2) {
        let (Some(n1), Some(n2)) = (layout.node_of(pair[0]), layout.node_of(pair[1])) else {
            continue;
        };
        let found = if n1 == n2 {
            if layout.blocks(n1)?.len() != 2 {
                continue;
            }
            let Ok(ctx) = ProbeContext::new(coeffs, layout, failed, &[n1]) else {
                continue;
            };
            let cands = doubles.get_or_insert_with(|| projection_candidates(field, 2 * n, n, config, &mut rng));
            cands
                .iter()
                .find_map(|p| ctx.evaluate(&[p]).filter(|(t, _)| *t <= budget))
        } else {
            if layout.blocks(n1)?.len() != 1 || layout.blocks(n2)?.len() != 1 {
                continue;
            }
            let Ok(ctx) = ProbeContext::new(coeffs, layout, failed, &[n1, n2]) else {
                continue;
            };
            let full = (singles.len() as u64).saturating_pow(2) <= config.exhaustive_cap;
            singles.iter().find_map(|v1| {
                let aligned: Vec<Mat>;
                let seconds: &[Mat] = if full {
                    &singles
                } else {
                    aligned = std::iter::once(v1.clone()).chain(ctx.aligned(v1, n)).collect();
                    &aligned
                };
                seconds
                    .iter()
                    .find_map(|v2| ctx.evaluate(&[v1, v2]).filter(|(t, _)| *t <= budget))
            })
        };
        if let Some((_, downloads)) = found {
            return RepairPlan::assemble(coeffs, layout, failed, downloads);
        }
    }
    Err(Error::InfeasiblePlan(failed, budget))
}
