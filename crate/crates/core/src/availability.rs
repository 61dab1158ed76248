//! Probability that a data collector finds at least `k` blocks online, by
//! exhaustive enumeration of online-node subsets, plus the closed
//! forms for the two fixed layouts.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest node count enumerated (`2^h` subsets).
pub const MAX_ENUM_NODES: usize = 25;

#[derive(Clone, Debug, PartialEq)]
pub struct AvailabilityModel {
    /// Online probability per node.
    pub p: Vec<f64>,
    /// Blocks stored per node.
    pub x: Vec<usize>,
}

fn check_prob(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidProbability(p))
    }
}

impl AvailabilityModel {
    pub fn new(p: Vec<f64>, x: Vec<usize>) -> Result<Self> {
        if p.len() != x.len() {
            return Err(Error::dims(format!("{} probabilities for {} nodes", p.len(), x.len())));
        }
        for &v in &p {
            check_prob(v)?;
        }
        Ok(AvailabilityModel { p, x })
    }

    pub fn h(&self) -> usize {
        self.p.len()
    }

    /// `k + 1` nodes, allocation `(2, 1, …, 1)`, super node online with `p1`.
    pub fn super_node(k: usize, p: f64, p1: f64) -> Result<Self> {
        let mut x = vec![1; k + 1];
        x[0] = 2;
        let mut probs = vec![p; k + 1];
        probs[0] = p1;
        Self::new(probs, x)
    }

    /// `k + 2` nodes with one block each; node 0 online with `p1`.
    pub fn one_block_each(k: usize, p: f64, p1: f64) -> Result<Self> {
        let mut probs = vec![p; k + 2];
        probs[0] = p1;
        Self::new(probs, vec![1; k + 2])
    }
}

/// Sum over online subsets holding at least `k` blocks of the subset's
/// probability. Subsets are visited in binary counting order.
pub fn success_prob_enum(model: &AvailabilityModel, k: usize) -> Result<f64> {
    let h = model.h();
    if h > MAX_ENUM_NODES {
        return Err(Error::TooManyNodes {
            got: h,
            max: MAX_ENUM_NODES,
        });
    }
    let mut total = 0.0;
    for mask in 0u32..(1u32 << h) {
        let blocks: usize = (0..h).filter(|i| mask >> i & 1 == 1).map(|i| model.x[i]).sum();
        if blocks < k {
            continue;
        }
        let prob: f64 = (0..h)
            .map(|i| if mask >> i & 1 == 1 { model.p[i] } else { 1.0 - model.p[i] })
            .product();
        total += prob;
    }
    Ok(total)
}

/// Closed-form one-block-per-node expression; not clamped.
pub fn pr_homo_closed(k: usize, p: f64, p1: f64) -> f64 {
    let k = k as i32;
    let kf = k as f64;
    p.powi(k + 1) + (kf + 1.0) * (1.0 - p) * p.powi(k) + kf * (kf + 1.0) / 2.0 * p1 * (1.0 - p).powi(2) * p.powi(k - 1)
}

/// Closed-form super-node expression; not clamped.
pub fn pr_nonhomo_closed(k: usize, p: f64, p1: f64) -> f64 {
    let k = k as i32;
    let kf = k as f64;
    p.powi(k) + kf * p1 * (1.0 - p) * p.powi(k - 1) + kf * (kf + 1.0) / 2.0 * p1 * (1.0 - p).powi(2) * p.powi(k - 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiThreshold {
    pub value: f64,
    /// `p ≤ (k−1)/(k+1)`, where the threshold is at most 1.
    pub in_regime: bool,
}

/// `p / (p + ½(1−p)((k−1) − (k+1)p))`.
pub fn chi_threshold(k: usize, p: f64) -> ChiThreshold {
    let kf = k as f64;
    let value = p / (p + 0.5 * (1.0 - p) * ((kf - 1.0) - (kf + 1.0) * p));
    ChiThreshold {
        value,
        in_regime: p <= (kf - 1.0) / (kf + 1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub chi: f64,
    pub p1: f64,
    pub pr_nonhomo_enum: f64,
    pub pr_homo_enum: f64,
    pub pr_nonhomo_closed: f64,
    pub pr_homo_closed: f64,
}

pub fn sweep(k: usize, p: f64, chi_values: &[f64]) -> Result<Vec<SweepRow>> {
    check_prob(p)?;
    chi_values
        .iter()
        .map(|&chi| {
            let p1 = check_prob(chi * p)?;
            Ok(SweepRow {
                chi,
                p1,
                pr_nonhomo_enum: success_prob_enum(&AvailabilityModel::super_node(k, p, p1)?, k)?,
                pr_homo_enum: success_prob_enum(&AvailabilityModel::one_block_each(k, p, p1)?, k)?,
                pr_nonhomo_closed: pr_nonhomo_closed(k, p, p1),
                pr_homo_closed: pr_homo_closed(k, p, p1),
            })
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "chi,p1,pr_nonhomo_enum,pr_homo_enum,pr_nonhomo_closed,pr_homo_closed";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.12},{:.12},{:.12},{:.12}\n",
            r.chi, r.p1, r.pr_nonhomo_enum, r.pr_homo_enum, r.pr_nonhomo_closed, r.pr_homo_closed
        ));
    }
    out
}
