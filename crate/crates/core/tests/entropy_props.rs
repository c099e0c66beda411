use equisum_core::entropy::{
    chain_rule_rhs, coset_entropy, gibbs_gap, ln_big, multinomial, shannon, softmax, submodularity_defect, Measure,
};
use equisum_core::qlinalg::Subspace;
use proptest::prelude::*;

const K: usize = 4;

fn measure() -> impl Strategy<Value = Measure> {
    prop::collection::vec(0u32..=5, 1 << K).prop_filter_map("empty", |w| {
        let t: u32 = w.iter().sum();
        (t > 0).then(|| Measure::normalized(K, w.iter().enumerate().map(|(x, &c)| (x as u64, c as f64))).unwrap())
    })
}

fn cube_space() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0u64..(1 << K), 0..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn submodular(nu in measure(), a in cube_space(), b in cube_space()) {
        let w1 = Subspace::span_bits(K, &a);
        let w2 = Subspace::span_bits(K, &b);
        prop_assert!(submodularity_defect(&nu, &w1, &w2).unwrap() >= -1e-10);
    }

    #[test]
    fn chain_rule(nu in measure(), a in cube_space(), b in cube_space()) {
        let small = Subspace::span_bits(K, &a);
        let mut all = a.clone();
        all.extend(&b);
        let big = Subspace::span_bits(K, &all);
        let lhs = coset_entropy(&nu, &small).unwrap();
        prop_assert!((lhs - chain_rule_rhs(&nu, &big, &small).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn gibbs(a in prop::collection::vec(-5.0f64..5.0, 1..8), w in prop::collection::vec(0.0f64..1.0, 8)) {
        let w = &w[..a.len()];
        let t: f64 = w.iter().sum();
        prop_assume!(t > 1e-6);
        let p: Vec<f64> = w.iter().map(|x| x / t).collect();
        prop_assert!(gibbs_gap(&a, &p) >= -1e-12);
        prop_assert!(gibbs_gap(&a, &softmax(&a)).abs() < 1e-12);
    }

    #[test]
    fn multinomial_bound(counts in prop::collection::vec(0u64..=15, 1..=4)) {
        let n: u64 = counts.iter().sum();
        prop_assume!(n > 0 && n <= 60);
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
        prop_assert!(ln_big(&multinomial(&counts)) <= shannon(&p) * n as f64 + 1e-9);
    }
}

#[test]
fn trivial_defects() {
    let nu = Measure::uniform(K, &[0, 3, 5, 6, 9, 15]).unwrap();
    let w1 = Subspace::span_bits(K, &[3]);
    let w2 = Subspace::span_bits(K, &[3, 5]);
    assert_eq!(submodularity_defect(&nu, &w1, &w1).unwrap(), 0.0);
    assert!(submodularity_defect(&nu, &w1, &w2).unwrap().abs() < 1e-15);
}

#[test]
fn multinomial_exact() {
    assert_eq!(multinomial(&[2, 3, 1]), 60u32.into());
    assert_eq!(multinomial(&[60]), 1u32.into());
}
