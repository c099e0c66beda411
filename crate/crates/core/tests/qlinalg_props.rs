use equisum_core::qlinalg::{RationalVector, Subspace};
use proptest::prelude::*;

fn vecs(k: usize, n: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(-3i64..=3, k), 0..=n)
}

fn span(k: usize, g: &[Vec<i64>]) -> Subspace {
    let v: Vec<RationalVector> = g.iter().map(|x| RationalVector::from_ints(x)).collect();
    Subspace::span_in(k, &v).unwrap()
}

fn with_ones(k: usize, g: &[Vec<i64>]) -> Subspace {
    let mut g = g.to_vec();
    g.push(vec![1; k]);
    span(k, &g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn respan_is_identity(g in vecs(5, 6)) {
        let w = span(5, &g);
        prop_assert_eq!(Subspace::span_in(5, &w.basis()).unwrap(), w);
    }

    #[test]
    fn order_does_not_matter(g in vecs(5, 6)) {
        let mut h = g.clone();
        h.reverse();
        prop_assert_eq!(span(5, &g), span(5, &h));
    }

    #[test]
    fn generators_are_members(g in vecs(4, 5)) {
        let w = span(4, &g);
        for x in &g {
            prop_assert!(w.contains(&RationalVector::from_ints(x)).unwrap());
        }
    }

    #[test]
    fn dimension_is_modular(a in vecs(5, 3), b in vecs(5, 3)) {
        let w1 = with_ones(5, &a);
        let w2 = with_ones(5, &b);
        let s = w1.sum(&w2).unwrap();
        let i = w1.intersect(&w2).unwrap();
        prop_assert_eq!(w1.dim() + w2.dim(), s.dim() + i.dim());
        prop_assert!(i.is_subspace_of(&w1).unwrap() && i.is_subspace_of(&w2).unwrap());
        prop_assert!(w1.is_subspace_of(&s).unwrap() && w2.is_subspace_of(&s).unwrap());
    }

    #[test]
    fn cube_bound(g in vecs(6, 4)) {
        let w = span(6, &g);
        let pts = w.cube_point_bits().unwrap();
        prop_assert!(pts.len() <= 1 << w.dim());
        for x in 0u64..64 {
            prop_assert_eq!(w.contains_bits(x), pts.binary_search(&x).is_ok());
        }
    }
}

#[test]
fn rank_oracle_for_sum() {
    // sum of <1100, 0011> and <1010, 0101> in Q^4: rank of the stacked 4x4 matrix is 3
    let p = |s: &str| RationalVector::parse01(s).unwrap();
    let a = Subspace::span(&[p("1100"), p("0011")]).unwrap();
    let b = Subspace::span(&[p("1010"), p("0101")]).unwrap();
    assert_eq!(a.sum(&b).unwrap().dim(), 3);
    assert_eq!(a.intersect(&b).unwrap(), Subspace::span(&[p("1111")]).unwrap());
}
