use equisum_core::flags::{
    automorphism_generators, binary_flag, cells_at_level, cells_with_genotype_count, children_with_genotype_count,
    superset_weight_sum, total_children_count, Genotype,
};
use num_bigint::BigUint;
use num_rational::BigRational;
use std::collections::BTreeMap;

#[test]
fn partition_and_sizes() {
    for r in 1..=3 {
        let f = binary_flag(r).unwrap();
        let k = f.ambient_dim();
        for i in 0..=r {
            let cells = cells_at_level(&f, i).unwrap();
            let mut seen = vec![false; 1 << k];
            for c in &cells {
                let g = c.genotype.as_ref().unwrap();
                assert_eq!(c.len() as u64, 1u64 << g.size());
                for &x in &c.members {
                    assert!(!seen[x as usize]);
                    seen[x as usize] = true;
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }
}

#[test]
fn census_matches_closed_forms() {
    for r in 1..=3 {
        let f = binary_flag(r).unwrap();
        for i in 0..=r {
            let cells = cells_at_level(&f, i).unwrap();
            let mut census: BTreeMap<u64, u64> = BTreeMap::new();
            for c in &cells {
                *census.entry(c.genotype.as_ref().unwrap().mask().unwrap()).or_default() += 1;
            }
            for mask in 0..(1u64 << (1u32 << i)) {
                let g = Genotype::from_mask(i, mask);
                let want = cells_with_genotype_count(r, &g);
                let got = BigUint::from(census.get(&mask).copied().unwrap_or(0));
                assert_eq!(got, want, "r={r} i={i} mask={mask:b}");
            }
        }
    }
}

#[test]
fn child_counts_match_closed_forms() {
    for r in 1..=3 {
        let f = binary_flag(r).unwrap();
        for i in 1..=r {
            let upper = cells_at_level(&f, i).unwrap();
            let lower = cells_at_level(&f, i - 1).unwrap();
            let mut owner = vec![0usize; 1 << f.ambient_dim()];
            for (n, c) in upper.iter().enumerate() {
                for &x in &c.members {
                    owner[x as usize] = n;
                }
            }
            let mut kids: Vec<BTreeMap<u64, u64>> = vec![BTreeMap::new(); upper.len()];
            for c in &lower {
                let m = c.genotype.as_ref().unwrap().mask().unwrap();
                *kids[owner[c.members[0] as usize]].entry(m).or_default() += 1;
            }
            for (c, ks) in upper.iter().zip(&kids) {
                let g = c.genotype.as_ref().unwrap();
                let total: u64 = ks.values().sum();
                assert_eq!(BigUint::from(total), total_children_count(g));
                for (&m, &n) in ks {
                    let gc = Genotype::from_mask(i - 1, m);
                    assert_eq!(BigUint::from(n), children_with_genotype_count(g, &gc).unwrap());
                }
            }
        }
    }
}

#[test]
fn small_calc_gen_exact() {
    assert_eq!(superset_weight_sum(1, &Genotype::empty(0).unwrap()), BigRational::new(7.into(), 2.into()));
    for j in 1..=4usize {
        let half = 1u32 << (j - 1);
        for gp in 0..(1u64 << half) {
            let g = Genotype::from_mask(j - 1, gp);
            let want = BigRational::new(
                num_bigint::BigInt::from(7u32).pow(half - gp.count_ones()),
                num_bigint::BigInt::from(1u32) << half,
            );
            assert_eq!(superset_weight_sum(j, &g), want, "j={j} g'={gp:b}");
        }
    }
}

#[test]
fn automorphisms_permute_cells() {
    for r in 1..=3 {
        let f = binary_flag(r).unwrap();
        for i in 0..=r {
            let cells = cells_at_level(&f, i).unwrap();
            let mut sets: Vec<Vec<u64>> = cells
                .iter()
                .map(|c| {
                    let mut m = c.members.clone();
                    m.sort_unstable();
                    m
                })
                .collect();
            sets.sort();
            for g in automorphism_generators(&f).unwrap() {
                let mut img: Vec<Vec<u64>> = sets
                    .iter()
                    .map(|s| {
                        let mut m: Vec<u64> = s.iter().map(|&x| g.apply_bits(x)).collect();
                        m.sort_unstable();
                        m
                    })
                    .collect();
                img.sort();
                assert_eq!(img, sets);
            }
        }
    }
}

#[test]
fn binary_r3_membership_rule() {
    // x in V_i iff x_S = x_(S cap [i]) for every S; check all 256 cube points
    let r = 3;
    let f = binary_flag(r).unwrap();
    for i in 0..=r {
        for x in 0u64..256 {
            let rule = (0..8u64).all(|p| {
                let q = (p >> (r - i)) << (r - i);
                (x >> p & 1) == (x >> q & 1)
            });
            assert_eq!(f.space(i).contains_bits(x), rule);
        }
    }
}
