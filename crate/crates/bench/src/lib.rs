//! Shared fixtures for the benchmarks.

use std::collections::BTreeMap;

use nhdss_core::code::{encode, CodedStripe, Stripe};
use nhdss_core::{build_scheme_a, build_scheme_b_53, build_scheme_c_64, Mat, NodeId, SchemeInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named instances covering every scheme.
pub fn instances() -> Vec<(&'static str, SchemeInstance)> {
    vec![
        ("A(3,5,2)", build_scheme_a(3, 5, 2, 1).expect("scheme A builds")),
        ("A(3,5,4)", build_scheme_a(3, 5, 4, 1).expect("scheme A builds")),
        ("B(5,3)", build_scheme_b_53().expect("scheme B builds")),
        ("C(6,4)", build_scheme_c_64().expect("scheme C builds")),
    ]
}

pub fn random_stripes(inst: &SchemeInstance, count: usize, seed: u64) -> Vec<Stripe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Stripe::random(&inst.params, &mut rng)).collect()
}

pub fn encode_all(inst: &SchemeInstance, stripes: &[Stripe]) -> Vec<CodedStripe> {
    stripes
        .iter()
        .map(|s| encode(s, &inst.coeffs).expect("stripe matches code"))
        .collect()
}

/// Stored rows of every node except `gone`.
pub fn survivors(inst: &SchemeInstance, coded: &CodedStripe, gone: &[NodeId]) -> BTreeMap<NodeId, Mat> {
    let mut rows = inst.layout.node_rows(coded);
    rows.retain(|n, _| !gone.contains(n));
    rows
}

/// Deterministic byte payload.
pub fn payload(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i * 131 + 7) as u8).collect()
}
