//! Randomized search for scheme-A coefficients.
//!
//! With `A_i = I` and one shared projection `V` per failure, every repair
//! reduces to rank conditions on `[E·V, V]` for a few matrices `E`: one must
//! reach full rank `N` and the rest must stay at `N/2` so their interference
//! aligns.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::search::{plan_from_probes, projection_candidates};
use super::{ProjectionPair, SchemeId, SchemeInstance, SearchConfig};
use crate::code::{check_mds, CodeCoefficients, NodeId, NodeLayout};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::Mat;

/// Rank of `[e·v, v]`.
pub(crate) fn shared_rank(e: &Mat, v: &Mat) -> usize {
    let ev = e.matmul(v).expect("square times column block");
    Mat::hstack(&[ev, v.clone()]).expect("same rows").rank()
}

/// The matrices whose rank conditions govern one failure: `full` must give
/// rank `N`, every `half` rank `N/2`.
pub(crate) struct Family {
    pub full: Mat,
    pub half: Vec<Mat>,
}

impl Family {
    pub fn holds(&self, v: &Mat, n: usize) -> bool {
        shared_rank(&self.full, v) == n && self.half.iter().all(|e| shared_rank(e, v) == n / 2)
    }
}

/// Index of the pivot systematic block used by both parity viewpoints.
pub(crate) const PIVOT: usize = 2;

pub(crate) fn systematic_family(b: &[Mat], failed: usize) -> Family {
    Family {
        full: b[failed].clone(),
        half: (PIVOT..b.len())
            .filter(|&j| j != failed)
            .map(|j| b[j].clone())
            .collect(),
    }
}

/// Family for the parity whose viewpoint coefficients are `b`: use `B_i` for
/// the first parity and `B_i⁻¹` for the second.
pub(crate) fn parity_family(b: &[Mat]) -> Family {
    Family {
        full: b[PIVOT].clone(),
        half: (PIVOT + 1..b.len())
            .map(|j| b[j].sub(&b[PIVOT]).expect("same shape"))
            .collect(),
    }
}

fn random_invertible(field: PrimeField, n: usize, rng: &mut ChaCha8Rng) -> Mat {
    loop {
        let m = Mat::from_fn(field, n, n, |_, _| rng.gen_range(0..field.q()));
        if m.rank() == n {
            return m;
        }
    }
}

/// Probes and their projections realizing the shared-`V` repair of `node`.
pub(crate) fn probes_for(
    layout: &NodeLayout,
    b: &[Mat],
    node: NodeId,
    v: &Mat,
) -> Result<Vec<(NodeId, Mat)>> {
    let k = b.len();
    let p1 = layout.node_of(k).ok_or(Error::UnknownNode(k))?;
    let p2 = layout.node_of(k + 1).ok_or(Error::UnknownNode(k + 1))?;
    let pivot = layout.node_of(PIVOT).ok_or(Error::UnknownNode(PIVOT))?;
    let block = layout.blocks(node)?[0];
    Ok(if block == k {
        vec![(pivot, v.clone()), (p2, v.clone())]
    } else if block == k + 1 {
        vec![(pivot, b[PIVOT].matmul(v)?), (p1, v.clone())]
    } else {
        vec![(p1, v.clone()), (p2, v.clone())]
    })
}

/// Per-failure rank families for a scheme-A code, keyed by failed node.
pub(crate) fn families(layout: &NodeLayout, b: &[Mat]) -> Result<BTreeMap<NodeId, Family>> {
    let k = b.len();
    let inv: Vec<Mat> = b.iter().map(Mat::inverse).collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for node in layout.nodes().filter(|&n| n != layout.super_node()) {
        let block = layout.blocks(node)?[0];
        let fam = if block == k {
            parity_family(b)
        } else if block == k + 1 {
            parity_family(&inv)
        } else {
            systematic_family(b, block)
        };
        out.insert(node, fam);
    }
    Ok(out)
}

/// Searches seeded random `B_i` until every non-super node has a shared
/// projection meeting its rank family and the code is MDS.
pub fn build_scheme_a(k: usize, q: u32, n: usize, seed: u64) -> Result<SchemeInstance> {
    build_scheme_a_with(k, q, n, &SearchConfig::with_seed(seed))
}

pub fn build_scheme_a_with(k: usize, q: u32, n: usize, config: &SearchConfig) -> Result<SchemeInstance> {
    if k < 3 {
        return Err(Error::InvalidParams(format!("scheme A needs k >= 3, got {k}")));
    }
    if (q as usize) < 2 * k - 1 {
        return Err(Error::InvalidParams(format!("q = {q} below 2k-1 = {}", 2 * k - 1)));
    }
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!("block size {n} must be even")));
    }
    let field = PrimeField::new(q)?;
    let layout = NodeLayout::systematic_super(k);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cands = projection_candidates(field, n, n / 2, config, &mut rng);

    for _ in 0..config.attempt_budget {
        let b: Vec<Mat> = (0..k).map(|_| random_invertible(field, n, &mut rng)).collect();
        let fams = families(&layout, &b)?;
        let mut chosen = BTreeMap::new();
        for (&node, fam) in &fams {
            match cands.iter().find(|v| fam.holds(v, n)) {
                Some(v) => {
                    chosen.insert(node, v.clone());
                }
                None => break,
            }
        }
        if chosen.len() != fams.len() {
            continue;
        }
        let coeffs = CodeCoefficients::with_identity_a(b.clone())?;
        let mut inst = SchemeInstance::unchecked(SchemeId::A, coeffs)?;
        if !check_mds(&inst.coeffs, &inst.params).is_mds {
            continue;
        }
        let mut ok = true;
        for (node, v) in chosen {
            let probes = probes_for(&layout, &b, node, &v)?;
            match plan_from_probes(&inst.coeffs, &layout, node, &probes) {
                Ok(plan) => {
                    inst.plans.insert(node, plan);
                    inst.designs.insert(node, ProjectionPair { v1: v.clone(), v2: v });
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && inst.validate().is_ok() {
            return Ok(inst);
        }
    }
    Err(Error::SearchExhausted(config.attempt_budget))
}
