//! Rank-condition checks for each scheme, reported alongside operational
//! plan validity so the two views can be compared.

use std::fmt;

use serde::Serialize;

use super::scheme_a::PIVOT;
use super::{SchemeId, SchemeInstance};
use crate::code::{check_mds, MdsReport};
use crate::matrix::Mat;
use crate::repair::verify_plan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstraintFamily {
    /// `rank[A_f V¹, B_f V²] = N`, other systematic blocks at `N/2`.
    SystematicGeneral,
    /// Same with `A_i = I`, `V¹ = V² = V`.
    SystematicShared,
    FirstParity,
    /// Uses `B'_i = B_i⁻¹`.
    SecondParity,
    /// `A_i V¹ = λ B_i V²` for the super-node blocks.
    Alignment,
    /// Both parities on the super node.
    ParitySuper,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintFamily::SystematicGeneral => "systematic repair",
            ConstraintFamily::SystematicShared => "systematic repair, shared projection",
            ConstraintFamily::FirstParity => "first parity repair",
            ConstraintFamily::SecondParity => "second parity repair",
            ConstraintFamily::Alignment => "super-node alignment",
            ConstraintFamily::ParitySuper => "parity super node",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstraintCheck {
    Rank { expected: usize, actual: usize },
    Equal(bool),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintRow {
    pub family: ConstraintFamily,
    /// Label of the failed node.
    pub node: String,
    pub expression: String,
    pub check: ConstraintCheck,
}

impl ConstraintRow {
    pub fn pass(&self) -> bool {
        match self.check {
            ConstraintCheck::Rank { expected, actual } => expected == actual,
            ConstraintCheck::Equal(b) => b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlanCheck {
    pub node: String,
    pub present: bool,
    pub valid: bool,
    pub bandwidth: usize,
    pub expected: usize,
}

impl PlanCheck {
    pub fn pass(&self) -> bool {
        self.present && self.valid && self.bandwidth == self.expected
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintReport {
    pub scheme: SchemeId,
    pub rows: Vec<ConstraintRow>,
    pub plans: Vec<PlanCheck>,
    pub mds: MdsReport,
    pub notes: Vec<String>,
}

impl ConstraintReport {
    /// Rank rows, plans and (outside scheme B, which trades it away) MDS.
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(ConstraintRow::pass)
            && self.plans.iter().all(PlanCheck::pass)
            && (self.mds.is_mds || self.scheme == SchemeId::B)
    }

    /// Ranks of the rows of one family for one node, in order.
    pub fn ranks(&self, family: ConstraintFamily, node: &str) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.family == family && r.node == node)
            .filter_map(|r| match r.check {
                ConstraintCheck::Rank { actual, .. } => Some(actual),
                ConstraintCheck::Equal(_) => None,
            })
            .collect()
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme {}", self.scheme)?;
        for r in &self.rows {
            let verdict = if r.pass() { "pass" } else { "FAIL" };
            match r.check {
                ConstraintCheck::Rank { expected, actual } => writeln!(
                    f,
                    "  [{verdict}] {} ({}): {} = {actual}, want {expected}",
                    r.family, r.node, r.expression
                )?,
                ConstraintCheck::Equal(_) => {
                    writeln!(f, "  [{verdict}] {} ({}): {}", r.family, r.node, r.expression)?
                }
            }
        }
        for p in &self.plans {
            let verdict = if p.pass() { "pass" } else { "FAIL" };
            if p.present {
                writeln!(
                    f,
                    "  [{verdict}] repair plan {}: valid = {}, {} symbols, want {}",
                    p.node, p.valid, p.bandwidth, p.expected
                )?;
            } else {
                writeln!(f, "  [{verdict}] repair plan {}: missing", p.node)?;
            }
        }
        match &self.mds.witness {
            None => writeln!(f, "  mds: yes")?,
            Some(w) => writeln!(f, "  mds: no, undecodable blocks {w:?}")?,
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

fn rank2(x: &Mat, y: &Mat) -> usize {
    Mat::hstack(&[x.clone(), y.clone()]).map_or(0, |m| m.rank())
}

fn mul(a: &Mat, v: &Mat) -> Mat {
    a.matmul(v).unwrap_or_else(|_| Mat::zeros(v.field(), a.rows(), 0))
}

fn diff(a: &Mat, b: &Mat) -> Mat {
    a.sub(b).unwrap_or_else(|_| a.clone())
}

fn rank_row(family: ConstraintFamily, node: &str, expression: String, expected: usize, actual: usize) -> ConstraintRow {
    ConstraintRow {
        family,
        node: node.to_string(),
        expression,
        check: ConstraintCheck::Rank { expected, actual },
    }
}

pub fn verify_constraints(inst: &SchemeInstance) -> ConstraintReport {
    let k = inst.params.k;
    let n = inst.params.block_symbols;
    let (a, b) = (inst.coeffs.a(), inst.coeffs.b());
    let layout = &inst.layout;
    let mut rows = Vec::new();

    for (&node, design) in &inst.designs {
        let label = layout.label(node).to_string();
        let Ok(blocks) = layout.blocks(node) else { continue };
        let block = blocks[0];
        let (v1, v2) = (&design.v1, &design.v2);
        match inst.id {
            SchemeId::A if block == k || block == k + 1 => {
                let (family, mats, tag): (_, Vec<Mat>, _) = if block == k {
                    (ConstraintFamily::FirstParity, b.to_vec(), "B")
                } else {
                    let inv = b.iter().map(|m| m.inverse().unwrap_or_else(|_| m.clone())).collect();
                    (ConstraintFamily::SecondParity, inv, "B'")
                };
                let p = PIVOT;
                rows.push(rank_row(
                    family,
                    &label,
                    format!("rank[{tag}{}·V, V]", p + 1),
                    n,
                    rank2(&mul(&mats[p], v1), v1),
                ));
                for j in p + 1..k {
                    rows.push(rank_row(
                        family,
                        &label,
                        format!("rank[({tag}{}−{tag}{})·V, V]", j + 1, p + 1),
                        n / 2,
                        rank2(&mul(&diff(&mats[j], &mats[p]), v1), v1),
                    ));
                }
            }
            SchemeId::A | SchemeId::B if block < k => {
                let shared = inst.id == SchemeId::A && inst.coeffs.a_is_identity() && v1 == v2;
                let family = if shared {
                    ConstraintFamily::SystematicShared
                } else {
                    ConstraintFamily::SystematicGeneral
                };
                for j in std::iter::once(block).chain((PIVOT..k).filter(|&j| j != block)) {
                    let want = if j == block { n } else { n / 2 };
                    let (expr, actual) = if shared {
                        (format!("rank[B{}·V, V]", j + 1), rank2(&mul(&b[j], v1), v1))
                    } else {
                        (
                            format!("rank[A{0}·V1, B{0}·V2]", j + 1),
                            rank2(&mul(&a[j], v1), &mul(&b[j], v2)),
                        )
                    };
                    rows.push(rank_row(family, &label, expr, want, actual));
                }
                if inst.id == SchemeId::B {
                    for i in 0..2 {
                        let holds = inst
                            .lambda
                            .is_some_and(|l| mul(&a[i], v1) == mul(&b[i], v2).scale(l));
                        let lam = inst.lambda.map_or("?".to_string(), |l| l.to_string());
                        rows.push(ConstraintRow {
                            family: ConstraintFamily::Alignment,
                            node: label.clone(),
                            expression: format!("A{0}·V1 = {lam}·B{0}·V2", i + 1),
                            check: ConstraintCheck::Equal(holds),
                        });
                    }
                }
            }
            SchemeId::C if inst.coeffs.a_is_identity() && block < k => {
                // interference from f_j after cancelling with the two parities
                let others = |x: usize| -> Vec<usize> { (0..k).filter(|&i| i != x).collect() };
                let rest = others(block);
                if rest.len() < 2 {
                    continue;
                }
                let (r1, r2) = (rest[0], rest[1]);
                for j in std::iter::once(block).chain(rest[2..].iter().copied()) {
                    let want = if j == block { n } else { n / 2 };
                    let x = mul(&diff(&b[j], &b[r1]), v1);
                    let y = mul(&diff(&b[j], &b[r2]), v2);
                    rows.push(rank_row(
                        ConstraintFamily::ParitySuper,
                        &label,
                        format!("rank[(B{0}−B{1})·V1, (B{0}−B{2})·V2]", j + 1, r1 + 1, r2 + 1),
                        want,
                        rank2(&x, &y),
                    ));
                }
            }
            _ => {}
        }
    }

    let expected = inst.expected_gamma1() as usize;
    let plans = layout
        .nodes()
        .filter(|&node| node != layout.super_node())
        .map(|node| {
            let plan = inst.plans.get(&node);
            PlanCheck {
                node: layout.label(node).to_string(),
                present: plan.is_some(),
                valid: plan.is_some_and(|p| verify_plan(inst, p)),
                bandwidth: plan.map_or(0, |p| p.bandwidth()),
                expected,
            }
        })
        .collect();

    ConstraintReport {
        scheme: inst.id,
        rows,
        plans,
        mds: check_mds(&inst.coeffs, &inst.params),
        notes: inst.notes.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::CodeCoefficients;
    use crate::field::PrimeField;
    use crate::schemes::{build_scheme_a, build_scheme_b_53, build_scheme_c_64, ProjectionPair};

    #[test]
    fn scheme_c_super_ranks() {
        let inst = build_scheme_c_64().unwrap();
        let report = verify_constraints(&inst);
        assert_eq!(report.ranks(ConstraintFamily::ParitySuper, "s1"), vec![2, 1]);
        assert!(report.all_pass(), "{report}");
    }

    #[test]
    fn identity_code_fails_first_row() {
        let f = PrimeField::new(5).unwrap();
        let coeffs = CodeCoefficients::with_identity_a(vec![Mat::identity(f, 2); 3]).unwrap();
        let mut inst = SchemeInstance::unchecked(SchemeId::A, coeffs).unwrap();
        let v = Mat::from_rows(f, &[[0], [1]]).unwrap();
        inst.designs.insert(1, ProjectionPair { v1: v.clone(), v2: v });
        let report = verify_constraints(&inst);
        let first = &report.rows[0];
        assert_eq!(first.check, ConstraintCheck::Rank { expected: 2, actual: 1 });
        assert!(!report.all_pass());
    }

    #[test]
    fn scheme_a_all_pass() {
        let inst = build_scheme_a(3, 5, 2, 1).unwrap();
        let report = verify_constraints(&inst);
        assert!(report.all_pass(), "{report}");
        assert_eq!(report.rows.len(), 3);
    }

    #[test]
    fn scheme_b_alignment_rows() {
        let inst = build_scheme_b_53().unwrap();
        let report = verify_constraints(&inst);
        assert!(report.all_pass(), "{report}");
        assert!(report.rows.iter().any(|r| r.family == ConstraintFamily::Alignment));
        assert!(!report.mds.is_mds);
    }
}
