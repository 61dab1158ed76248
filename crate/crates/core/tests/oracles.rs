//! Cross-checks against independent reference computations written here
//! from scratch: plain integer Gaussian elimination, brute-force
//! decodability over every source stripe, and recursive availability sums.

use std::collections::BTreeMap;

use nhdss_core::availability::{success_prob_enum, AvailabilityModel};
use nhdss_core::code::{encode, CodeCoefficients, Stripe};
use nhdss_core::repair::eliminate_53;
use nhdss_core::schemes::{parity_viewpoint, ConstraintFamily};
use nhdss_core::{
    build_scheme_a, build_scheme_b_53, build_scheme_c_64, check_mds, verify_constraints, Mat, Parity,
    PrimeField, SchemeInstance,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Rank over GF(q) of a row-major integer matrix.
fn rank_mod(mut m: Vec<Vec<i64>>, q: i64) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| m[i][c].rem_euclid(q) != 0) else {
            continue;
        };
        m.swap(r, p);
        let inv = (1..q).find(|x| (m[r][c] * x).rem_euclid(q) == 1).unwrap();
        for j in 0..cols {
            m[r][j] = (m[r][j] * inv).rem_euclid(q);
        }
        for i in 0..rows {
            if i != r {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] - f * m[r][j]).rem_euclid(q);
                }
            }
        }
        r += 1;
    }
    r
}

fn to_i64(m: &Mat) -> Vec<Vec<i64>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(i64::from).collect()).collect()
}

fn times(a: &[Vec<i64>], b: &[Vec<i64>], q: i64) -> Vec<Vec<i64>> {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|t| row[t] * b[t][j]).sum::<i64>().rem_euclid(q))
                .collect()
        })
        .collect()
}

fn minus(a: &[Vec<i64>], b: &[Vec<i64>], q: i64) -> Vec<Vec<i64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).rem_euclid(q)).collect())
        .collect()
}

fn side_by_side(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    a.iter().zip(b).map(|(x, y)| x.iter().chain(y).copied().collect()).collect()
}

/// True iff no nonzero source stripe vanishes on every kept block, checked
/// by walking all `q^M` stripes.
fn decodable_brute(inst: &SchemeInstance, kept: &[usize]) -> bool {
    let p = &inst.params;
    let q = p.field.q();
    let m = p.stripe_symbols;
    let total = (q as u64).pow(m as u32);
    let mut digits = vec![0u32; m];
    for _ in 1..total {
        // odometer increment
        for d in digits.iter_mut() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
        let row = Mat::row_vector(p.field, digits.clone());
        let stripe = Stripe::from_row(p, &row).unwrap();
        let coded = encode(&stripe, &inst.coeffs).unwrap();
        if kept.iter().all(|&b| coded.blocks[b].is_zero()) {
            return false;
        }
    }
    true
}

fn generator_rank(inst: &SchemeInstance, kept: &[usize]) -> usize {
    let g = inst.coeffs.generator(kept);
    rank_mod(to_i64(&g), inst.params.field.q() as i64)
}

fn two_erasure_mds(inst: &SchemeInstance, brute: bool) -> bool {
    let n = inst.params.n;
    let mut ok = true;
    for a in 0..n {
        for b in a + 1..n {
            let kept: Vec<usize> = (0..n).filter(|&x| x != a && x != b).collect();
            let dec = if brute {
                decodable_brute(inst, &kept)
            } else {
                generator_rank(inst, &kept) == inst.params.stripe_symbols
            };
            ok &= dec;
        }
    }
    ok
}

#[test]
fn mds_matches_brute_force_decodability() {
    let small = [
        build_scheme_b_53().unwrap(),
        build_scheme_c_64().unwrap(),
        build_scheme_a(3, 5, 2, 1).unwrap(),
    ];
    for inst in &small {
        assert_eq!(
            check_mds(&inst.coeffs, &inst.params).is_mds,
            two_erasure_mds(inst, true),
            "scheme {}",
            inst.id
        );
    }
    let b = &small[0];
    assert!(!decodable_brute(b, &[2, 3, 4]));
    assert!(decodable_brute(b, &[0, 1, 2]));
}

#[test]
fn mds_matches_rank_oracle_larger() {
    for (k, q, n) in [(4usize, 7u32, 2usize), (4, 7, 4), (3, 7, 2)] {
        let inst = build_scheme_a(k, q, n, 1).unwrap();
        assert!(check_mds(&inst.coeffs, &inst.params).is_mds);
        assert!(two_erasure_mds(&inst, false));
    }
}

#[test]
fn scheme_c_alignment_ranks_by_hand() {
    let inst = build_scheme_c_64().unwrap();
    let b: Vec<Vec<Vec<i64>>> = inst.coeffs.b().iter().map(to_i64).collect();
    let v = vec![vec![0], vec![1]];
    let rank = |j: usize| {
        let x = times(&minus(&b[j], &b[1], 3), &v, 3);
        let y = times(&minus(&b[j], &b[2], 3), &v, 3);
        rank_mod(side_by_side(&x, &y), 3)
    };
    let oracle = vec![rank(0), rank(3)];
    assert_eq!(oracle, vec![2, 1]);
    let report = verify_constraints(&inst);
    assert_eq!(report.ranks(ConstraintFamily::ParitySuper, "s1"), oracle);
}

#[test]
fn elimination_matches_direct_substitution() {
    let f = PrimeField::new(7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let random_invertible = |rng: &mut ChaCha8Rng| loop {
        let m = Mat::from_fn(f, 2, 2, |_, _| rand::Rng::gen_range(rng, 0..7));
        if rank_mod(to_i64(&m), 7) == 2 {
            return m;
        }
    };
    for _ in 0..20 {
        let a: Vec<Mat> = (0..3).map(|_| random_invertible(&mut rng)).collect();
        let b: Vec<Mat> = (0..3).map(|_| random_invertible(&mut rng)).collect();
        let coeffs = CodeCoefficients::new(a.clone(), b.clone()).unwrap();
        let e = eliminate_53(&coeffs).unwrap();
        let params = nhdss_core::SystemParams::with_super_node(3, 2, f).unwrap();
        for i in 0..6 {
            let s = Stripe::unit(&params, i);
            let c = encode(&s, &coeffs).unwrap();
            let (p1, p2) = (&c.blocks[3], &c.blocks[4]);
            let (f1, f2, f3) = (&s.blocks[0], &s.blocks[1], &s.blocks[2]);
            // drop f3: p1·A3⁻¹ − p2·B3⁻¹ = f1·C1 + f2·C2
            let lhs = p1
                .matmul(&a[2].inverse().unwrap())
                .unwrap()
                .sub(&p2.matmul(&b[2].inverse().unwrap()).unwrap())
                .unwrap();
            let rhs = f1.matmul(&e.c1).unwrap().add(&f2.matmul(&e.c2).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
            // drop f2: p1·A2⁻¹ − p2·B2⁻¹ = f1·D1 + f3·D2
            let lhs = p1
                .matmul(&a[1].inverse().unwrap())
                .unwrap()
                .sub(&p2.matmul(&b[1].inverse().unwrap()).unwrap())
                .unwrap();
            let rhs = f1.matmul(&e.d1).unwrap().add(&f3.matmul(&e.d2).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn viewpoint_pivot_is_plain_sum() {
    let inst = build_scheme_a(3, 5, 2, 1).unwrap();
    let view = parity_viewpoint(&inst, Parity::First).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let s = Stripe::random(&inst.params, &mut rng);
        let y = view.to_view(&s).unwrap();
        let sum: Vec<u32> = (0..2)
            .map(|j| s.blocks.iter().map(|b| b.as_slice()[j]).sum::<u32>() % 5)
            .collect();
        assert_eq!(&y.as_slice()[4..6], sum.as_slice());
    }
}

/// Recursive enumeration: condition on each node in turn.
fn avail_recursive(p: &[f64], x: &[usize], need: isize) -> f64 {
    if need <= 0 {
        return 1.0;
    }
    match p.split_first() {
        None => 0.0,
        Some((&head, rest)) => {
            head * avail_recursive(rest, &x[1..], need - x[0] as isize)
                + (1.0 - head) * avail_recursive(rest, &x[1..], need)
        }
    }
}

fn binomial_tail(h: usize, k: usize, p: f64) -> f64 {
    let choose = |n: usize, r: usize| -> f64 { (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    (k..=h)
        .map(|j| choose(h, j) * p.powi(j as i32) * (1.0 - p).powi((h - j) as i32))
        .sum()
}

#[test]
fn availability_reference_values() {
    let non = AvailabilityModel::super_node(4, 0.6, 0.8).unwrap();
    let homo = AvailabilityModel::one_block_each(4, 0.6, 0.8).unwrap();
    assert!((avail_recursive(&non.p, &non.x, 4) - 0.68256).abs() < 1e-12);
    assert!((avail_recursive(&homo.p, &homo.x, 4) - 0.61344).abs() < 1e-12);
    assert!((success_prob_enum(&non, 4).unwrap() - avail_recursive(&non.p, &non.x, 4)).abs() < 1e-12);
}

#[test]
fn availability_symmetric_grid() {
    for k in [2usize, 3, 4, 5] {
        for p in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let h = k + 2;
            let m = AvailabilityModel::new(vec![p; h], vec![1; h]).unwrap();
            let e = success_prob_enum(&m, k).unwrap();
            assert!((e - binomial_tail(h, k, p)).abs() < 1e-12, "k={k} p={p}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn enumeration_matches_recursion(
        p in proptest::collection::vec(0.0f64..=1.0, 1..9),
        xs in proptest::collection::vec(0usize..3, 9),
        k in 1usize..6,
    ) {
        let x = xs[..p.len()].to_vec();
        let m = AvailabilityModel::new(p.clone(), x.clone()).unwrap();
        let e = success_prob_enum(&m, k).unwrap();
        prop_assert!((e - avail_recursive(&p, &x, k as isize)).abs() < 1e-12);
    }

    #[test]
    fn enumeration_monotone(
        p in proptest::collection::vec(0.0f64..=1.0, 2..8),
        i in 0usize..8,
        bump in 0.0f64..=1.0,
        k in 1usize..6,
    ) {
        let h = p.len();
        let i = i % h;
        let x: Vec<usize> = (0..h).map(|j| 1 + (j == 0) as usize).collect();
        let lo = AvailabilityModel::new(p.clone(), x.clone()).unwrap();
        let mut hp = p.clone();
        hp[i] = p[i] + (1.0 - p[i]) * bump;
        let hi = AvailabilityModel::new(hp, x).unwrap();
        prop_assert!(success_prob_enum(&hi, k).unwrap() >= success_prob_enum(&lo, k).unwrap() - 1e-15);
    }

    #[test]
    fn scheme_c_repairs_exactly(seed in any::<u64>()) {
        let inst = build_scheme_c_64().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Stripe::random(&inst.params, &mut rng);
        let c = encode(&s, &inst.coeffs).unwrap();
        let rows = inst.layout.node_rows(&c);
        for node in 1..5 {
            let surv: BTreeMap<_, _> = rows.iter().filter(|(n, _)| **n != node).map(|(n, m)| (*n, m.clone())).collect();
            let out = nhdss_core::repair_single(&inst, &surv, node).unwrap();
            prop_assert_eq!(&out.restored[&(node - 1)], &c.blocks[node - 1]);
        }
    }
}
