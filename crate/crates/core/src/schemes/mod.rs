//! Constructions for the three super-node layouts and their repair plans.
//!
//! * Scheme A: super node stores `f1, f2`; `A_i = I`; random `B_i` found by
//!   search so every other node repairs at the MSR bound.
//! * Scheme B: same layout, general `A_i`, repair below the bound for the
//!   non-super nodes at the price of MDS.
//! * Scheme C: super node stores both parities.

mod constraints;
pub mod fixed;
mod scheme_a;
mod search;
mod viewpoint;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::code::{CodeCoefficients, NodeId, NodeLayout, SystemParams};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::repair::{verify_plan_parts, RepairPlan};

pub use constraints::{verify_constraints, ConstraintCheck, ConstraintFamily, ConstraintReport, ConstraintRow, PlanCheck};
pub use fixed::{build_scheme_b_53, build_scheme_c_64};
pub use scheme_a::{build_scheme_a, build_scheme_a_with};
pub use search::{plan_from_probes, search_projections};
pub use viewpoint::{parity_viewpoint, ParityViewpoint};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    A,
    B,
    C,
}

impl SchemeId {
    pub fn layout(self, k: usize) -> NodeLayout {
        match self {
            SchemeId::A | SchemeId::B => NodeLayout::systematic_super(k),
            SchemeId::C => NodeLayout::parity_super(k),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            SchemeId::A => 'A',
            SchemeId::B => 'B',
            SchemeId::C => 'C',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(SchemeId::A),
            'B' => Some(SchemeId::B),
            'C' => Some(SchemeId::C),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next().and_then(SchemeId::from_char), chars.next()) {
            (Some(id), None) => Ok(id),
            _ => Err(Error::InvalidParams(format!("unknown scheme '{s}'"))),
        }
    }
}

/// The two projections a failure's design is built around.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionPair {
    pub v1: Mat,
    pub v2: Mat,
}

/// Tunables for the coefficient and projection searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchConfig {
    /// Enumerate every projection when `q^(rows·cols)` is at most this.
    pub exhaustive_cap: u64,
    /// Projections sampled per node when enumeration is over the cap.
    pub random_samples: usize,
    pub seed: u64,
    /// Coefficient candidates tried by the scheme-A builder.
    pub attempt_budget: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            exhaustive_cap: 1 << 16,
            random_samples: 2048,
            seed: 1,
            attempt_budget: 100_000,
        }
    }
}

impl SearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        SearchConfig {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeInstance {
    pub id: SchemeId,
    pub params: SystemParams,
    pub coeffs: CodeCoefficients,
    pub layout: NodeLayout,
    pub plans: BTreeMap<NodeId, RepairPlan>,
    /// Projections each failure's constraint family is evaluated at.
    pub designs: BTreeMap<NodeId, ProjectionPair>,
    /// Scheme B alignment scalar.
    pub lambda: Option<u32>,
    /// Free-form findings recorded during construction.
    pub notes: Vec<String>,
}

impl SchemeInstance {
    /// Assembles an instance without checking its plans.
    pub fn unchecked(id: SchemeId, coeffs: CodeCoefficients) -> Result<Self> {
        let k = coeffs.k();
        let params = SystemParams::with_super_node(k, coeffs.block_symbols(), coeffs.field())?;
        Ok(SchemeInstance {
            id,
            params,
            layout: id.layout(k),
            coeffs,
            plans: BTreeMap::new(),
            designs: BTreeMap::new(),
            lambda: None,
            notes: Vec::new(),
        })
    }

    /// Single-failure bandwidth each registered plan must meet.
    pub fn expected_gamma1(&self) -> u64 {
        let m = self.params.stripe_symbols as u64;
        match self.id {
            SchemeId::B => m / 2,
            SchemeId::A | SchemeId::C => bounds::gamma1_bound(m, self.params.k as u64, self.params.n as u64)
                .map(|r| r.to_integer())
                .unwrap_or(m),
        }
    }

    /// Checks the instance invariants: every non-super node has a valid plan
    /// at the expected bandwidth.
    pub fn validate(&self) -> Result<()> {
        let want = self.expected_gamma1() as usize;
        for node in self.layout.nodes().filter(|&n| n != self.layout.super_node()) {
            let plan = self.plans.get(&node).ok_or(Error::MissingPlan(node))?;
            if !verify_plan_parts(&self.coeffs, &self.layout, plan) || plan.bandwidth() != want {
                return Err(Error::InfeasiblePlan(node, want));
            }
        }
        Ok(())
    }

    /// Fills missing plans by projection search at the expected bandwidth.
    pub fn search_missing_plans(&mut self, config: &SearchConfig) -> Result<()> {
        let budget = self.expected_gamma1() as usize;
        for node in self.layout.nodes().filter(|&n| n != self.layout.super_node()) {
            if self.plans.contains_key(&node) {
                continue;
            }
            let plan = search_projections(&self.coeffs, &self.layout, node, budget, config)?;
            self.plans.insert(node, plan);
        }
        Ok(())
    }
}
