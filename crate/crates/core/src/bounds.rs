//! Repair-bandwidth bounds and the fragment-size comparison between the
//! super-node schemes and reference homogeneous constructions.

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum-storage regenerating point for `d` helpers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MsrPoint {
    pub alpha: Ratio<u64>,
    pub gamma: Ratio<u64>,
    pub d: u64,
    pub beta: Ratio<u64>,
}

pub fn msr_point(m: u64, k: u64, d: u64) -> Result<MsrPoint> {
    if k == 0 || d < k {
        return Err(Error::InvalidParams(format!("need d >= k >= 1, got d = {d}, k = {k}")));
    }
    let alpha = Ratio::new(m, k);
    let gamma = Ratio::new(m * d, k * (d - k + 1));
    Ok(MsrPoint {
        alpha,
        gamma,
        d,
        beta: gamma / d,
    })
}

/// Single-failure bound `(M/k)·(n−1)/(n−k)` for an `(n = k+2, k)` code.
pub fn gamma1_bound(m: u64, k: u64, n: u64) -> Result<Ratio<u64>> {
    if k == 0 || n != k + 2 {
        return Err(Error::InvalidParams(format!("bound needs n = k + 2, got n = {n}, k = {k}")));
    }
    Ok(Ratio::new(m * (n - 1), k * (n - k)))
}

/// Symbols written when one fragment of `m` symbols changes.
pub fn update_bandwidth(m: u64, k: u64, n: u64) -> u64 {
    m / k * n
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    SchemeAC,
    SchemeB,
    Alex,
    Perm,
    Tamo,
    Crc,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SchemeAC,
        Method::SchemeB,
        Method::Alex,
        Method::Perm,
        Method::Tamo,
        Method::Crc,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::SchemeAC => "Scheme A&C",
            Method::SchemeB => "Scheme B",
            Method::Alex => "Alex",
            Method::Perm => "Perm.",
            Method::Tamo => "Tamo",
            Method::Crc => "C.R.C",
        }
    }

    /// Fragment size and minimum field size at `k`.
    pub fn requirement(self, k: u64) -> (u64, u64) {
        let p = |e: u64| 1u64 << e;
        match self {
            Method::SchemeAC | Method::SchemeB => (p(k - 1) * k, 2 * k - 1),
            Method::Alex => (p(k + 1) * k, 2 * k + 3),
            Method::Perm | Method::Tamo => (p(k) * k, 2 * k + 1),
            Method::Crc => (2 * k, k + 2),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Requirement {
    pub method: Method,
    pub m: u64,
    pub q_min: u64,
}

pub fn scheme_requirements(k: u64) -> Result<Vec<Requirement>> {
    if k < 3 {
        return Err(Error::InvalidParams(format!("requirements table needs k >= 3, got {k}")));
    }
    Ok(Method::ALL
        .iter()
        .map(|&method| {
            let (m, q_min) = method.requirement(k);
            Requirement { method, m, q_min }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseStudyRow {
    pub scheme: String,
    #[serde(rename = "M")]
    pub m: u64,
    pub q_min: u64,
    pub gamma1: Option<u64>,
    pub gamma2: Option<u64>,
    pub delta: u64,
}

pub fn case_study(file_symbols: u64, k: u64, method: Method) -> Result<CaseStudyRow> {
    let (m, q_min) = method.requirement(k);
    if !file_symbols.is_multiple_of(m) {
        return Err(Error::IndivisibleFile {
            file: file_symbols,
            fragment: m,
        });
    }
    let fragments = file_symbols / m;
    let n = k + 2;
    let gamma1 = match method {
        Method::SchemeB => Some(fragments * m / 2),
        Method::Crc => None,
        _ => {
            let g = gamma1_bound(m, k, n)? * fragments;
            Some(g.to_integer())
        }
    };
    let gamma2 = match method {
        Method::SchemeB => None,
        _ => Some(fragments * (m + m / k)),
    };
    Ok(CaseStudyRow {
        scheme: method.label().to_string(),
        m,
        q_min,
        gamma1,
        gamma2,
        delta: update_bandwidth(m, k, n),
    })
}

pub fn case_study_table(file_symbols: u64, k: u64) -> Result<Vec<CaseStudyRow>> {
    Method::ALL
        .iter()
        .map(|&method| case_study(file_symbols, k, method))
        .collect()
}

fn na(v: Option<u64>) -> String {
    v.map_or("N.A".to_string(), |x| x.to_string())
}

pub fn render_text(rows: &[CaseStudyRow]) -> String {
    let mut out = format!(
        "{:<12} {:>5} {:>6} {:>7} {:>7} {:>6}\n",
        "scheme", "M", "q_min", "gamma1", "gamma2", "delta"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:>5} {:>6} {:>7} {:>7} {:>6}\n",
            r.scheme,
            r.m,
            r.q_min,
            na(r.gamma1),
            na(r.gamma2),
            r.delta
        ));
    }
    out
}

pub fn render_json(rows: &[CaseStudyRow]) -> String {
    let values: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            let opt = |v: Option<u64>| v.map_or(serde_json::Value::from("N.A"), serde_json::Value::from);
            serde_json::json!({
                "scheme": r.scheme,
                "M": r.m,
                "q_min": r.q_min,
                "gamma1": opt(r.gamma1),
                "gamma2": opt(r.gamma2),
                "delta": r.delta,
            })
        })
        .collect();
    serde_json::to_string_pretty(&values).expect("plain values serialize")
}
