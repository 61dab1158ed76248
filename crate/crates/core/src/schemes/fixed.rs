//! The two worked instances over GF(3) with `N = 2`: a (5,3) scheme-B code
//! and a (6,4) scheme-C code.

use std::collections::BTreeMap;

use super::search::{plan_from_probes, projection_candidates};
use super::{ProjectionPair, SchemeId, SchemeInstance, SearchConfig};
use crate::code::{CodeCoefficients, NodeLayout};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::matrix::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gf3() -> PrimeField {
    PrimeField::new(3).expect("3 is prime")
}

fn m(rows: [[i64; 2]; 2]) -> Mat {
    Mat::from_rows(gf3(), &rows).expect("2x2")
}

fn col(v: [i64; 2]) -> Mat {
    Mat::from_rows(gf3(), &[[v[0]], [v[1]]]).expect("2x1")
}

/// (5,3) code with general `A_i`.
pub fn scheme_b_53_coefficients() -> CodeCoefficients {
    let a = vec![m([[2, 0], [2, 1]]), m([[1, 2], [0, 2]]), m([[2, 0], [1, 2]])];
    let b = vec![m([[2, 0], [1, 2]]), m([[1, 1], [2, 1]]), m([[1, 1], [0, 1]])];
    CodeCoefficients::new(a, b).expect("published coefficients are invertible")
}

/// (6,4) code with `A_i = I`.
pub fn scheme_c_64_coefficients() -> CodeCoefficients {
    let b = vec![
        m([[0, 1], [1, 0]]),
        m([[0, 2], [2, 0]]),
        m([[2, 0], [0, 1]]),
        m([[1, 1], [1, 2]]),
    ];
    CodeCoefficients::with_identity_a(b).expect("published coefficients are invertible")
}

/// Projections suggested for the fixed (5,3) example.
pub fn scheme_b_suggested_projections() -> ProjectionPair {
    ProjectionPair {
        v1: col([1, 0]),
        v2: col([1, 2]),
    }
}

/// Smallest nonzero `λ` with `A_1·V¹ = λ·B_1·V²` and `A_2·V¹ = λ·B_2·V²`.
pub fn alignment_scalar(coeffs: &CodeCoefficients, v1: &Mat, v2: &Mat) -> Option<u32> {
    let (a, b) = (coeffs.a(), coeffs.b());
    let lhs: Vec<Mat> = (0..2).map(|i| a[i].matmul(v1)).collect::<Result<_>>().ok()?;
    let rhs: Vec<Mat> = (0..2).map(|i| b[i].matmul(v2)).collect::<Result<_>>().ok()?;
    (1..coeffs.field().q()).find(|&l| (0..2).all(|i| lhs[i] == rhs[i].scale(l)))
}

/// Bandwidth of the (5,3) plan for node `s2` using the given parity
/// projections, or `None` if those projections do not repair it.
fn s2_bandwidth(coeffs: &CodeCoefficients, layout: &NodeLayout, pair: &ProjectionPair) -> Option<usize> {
    let s2 = layout.by_label("s2")?;
    let p1 = layout.by_label("p1")?;
    let p2 = layout.by_label("p2")?;
    plan_from_probes(coeffs, layout, s2, &[(p1, pair.v1.clone()), (p2, pair.v2.clone())])
        .ok()
        .map(|p| p.bandwidth())
}

fn describe(v: &Mat) -> String {
    let vals: Vec<String> = v.as_slice().iter().map(u32::to_string).collect();
    format!("[{}]^T", vals.join(","))
}

pub fn build_scheme_b_53() -> Result<SchemeInstance> {
    build_scheme_b_53_with(&SearchConfig::default())
}

pub(crate) fn build_scheme_b_53_with(config: &SearchConfig) -> Result<SchemeInstance> {
    let coeffs = scheme_b_53_coefficients();
    let mut inst = SchemeInstance::unchecked(SchemeId::B, coeffs.clone())?;
    let layout = inst.layout.clone();
    let budget = inst.expected_gamma1() as usize;
    let s2 = layout.by_label("s2").ok_or(Error::UnknownNode(1))?;
    let p1 = layout.by_label("p1").ok_or(Error::UnknownNode(2))?;
    let p2 = layout.by_label("p2").ok_or(Error::UnknownNode(3))?;

    // joint search over (V1, V2, λ) for the systematic node
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cands = projection_candidates(coeffs.field(), 2, 1, config, &mut rng);
    let mut chosen = None;
    'outer: for v1 in &cands {
        for v2 in &cands {
            let Some(lambda) = alignment_scalar(&coeffs, v1, v2) else {
                continue;
            };
            let Ok(plan) = plan_from_probes(&coeffs, &layout, s2, &[(p1, v1.clone()), (p2, v2.clone())]) else {
                continue;
            };
            if plan.bandwidth() <= budget {
                chosen = Some((plan, v1.clone(), v2.clone(), lambda));
                break 'outer;
            }
        }
    }
    let (plan, v1, v2, lambda) = chosen.ok_or(Error::InfeasiblePlan(s2, budget))?;
    inst.plans.insert(s2, plan);
    inst.designs.insert(s2, ProjectionPair { v1: v1.clone(), v2: v2.clone() });
    inst.lambda = Some(lambda);
    inst.search_missing_plans(config)?;

    let suggested = scheme_b_suggested_projections();
    let transposed = CodeCoefficients::new(
        coeffs.a().iter().map(Mat::transpose).collect(),
        coeffs.b().iter().map(Mat::transpose).collect(),
    )?;
    let verdict = |c: &CodeCoefficients| match (s2_bandwidth(c, &layout, &suggested), alignment_scalar(c, &suggested.v1, &suggested.v2)) {
        (Some(g), Some(l)) if g <= budget => format!("valid ({g} symbols, lambda = {l})"),
        (Some(g), _) if g <= budget => format!("repairs at {g} symbols but no alignment scalar exists"),
        (Some(g), _) => format!("not valid: needs {g} symbols"),
        (None, _) => "not valid: lost block not determined".to_string(),
    };
    inst.notes.push(format!(
        "suggested projections V1 = {}, V2 = {}: row action {}; column action {}",
        describe(&suggested.v1),
        describe(&suggested.v2),
        verdict(&coeffs),
        verdict(&transposed),
    ));
    inst.notes.push(format!(
        "working projections for s2: V1 = {}, V2 = {}, lambda = {lambda}",
        describe(&v1),
        describe(&v2)
    ));
    inst.validate()?;
    Ok(inst)
}

pub fn build_scheme_c_64() -> Result<SchemeInstance> {
    build_scheme_c_64_with(&SearchConfig::default())
}

/// Super-node projection that sends `(p2 − p1·B_2)·V¹` and `(p2 − p1·B_3)·V²`.
pub fn scheme_c_super_projection(coeffs: &CodeCoefficients, v1: &Mat, v2: &Mat) -> Result<Mat> {
    let b = coeffs.b();
    let top = Mat::hstack(&[b[1].matmul(v1)?.neg(), b[2].matmul(v2)?.neg()])?;
    let bottom = Mat::hstack(&[v1.clone(), v2.clone()])?;
    Mat::vstack(&[top, bottom])
}

pub(crate) fn build_scheme_c_64_with(config: &SearchConfig) -> Result<SchemeInstance> {
    let coeffs = scheme_c_64_coefficients();
    let mut inst = SchemeInstance::unchecked(SchemeId::C, coeffs.clone())?;
    let layout = inst.layout.clone();
    let s1 = layout.by_label("s1").ok_or(Error::UnknownNode(1))?;
    let v = col([0, 1]);
    let proj = scheme_c_super_projection(&coeffs, &v, &v)?;
    let plan = plan_from_probes(&coeffs, &layout, s1, &[(layout.super_node(), proj)])?;
    inst.plans.insert(s1, plan);
    inst.designs.insert(s1, ProjectionPair { v1: v.clone(), v2: v });
    inst.search_missing_plans(config)?;
    inst.validate()?;
    Ok(inst)
}

/// Projections per helper of a plan, keyed by node label.
pub fn plan_summary(inst: &SchemeInstance) -> BTreeMap<String, Vec<(String, Vec<u32>)>> {
    inst.plans
        .iter()
        .map(|(&node, plan)| {
            let helpers = plan
                .downloads
                .iter()
                .map(|(&h, p)| (inst.layout.label(h).to_string(), p.as_slice().to_vec()))
                .collect();
            (inst.layout.label(node).to_string(), helpers)
        })
        .collect()
}
