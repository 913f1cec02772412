//! Property tests for the structural invariants: sign symmetry of inner
//! products, support counts, enumeration cardinality, serialization
//! round-trips, verification consistency, and distribution totals.

use std::collections::HashSet;

use num::traits::{One, Zero};
use proptest::prelude::*;

use hypercover::anticoncentration::{magnitude, sum_distribution, BiasVector};
use hypercover::cover::{inner_product, support, Cover, Hyperplane};
use hypercover::cube::{enumerate_vertices, Vertex};
use hypercover::matrix::Matrix;
use hypercover::scalar::{pow10, ratio, Scalar};
use hypercover::verify;

fn arb_scalar() -> impl Strategy<Value = Scalar> {
    (-50i64..=50, 1i64..=9).prop_map(|(p, q)| ratio(p, q))
}

fn arb_nonzero_scalar() -> impl Strategy<Value = Scalar> {
    arb_scalar().prop_filter("non-zero", |s| !s.is_zero())
}

fn arb_plane(n: usize) -> impl Strategy<Value = Hyperplane> {
    (
        prop::collection::vec(arb_scalar(), n),
        arb_scalar(),
        0..n,
        arb_nonzero_scalar(),
    )
        .prop_map(|(mut coeffs, offset, fix, nz)| {
            if coeffs.iter().all(|c| c.is_zero()) {
                coeffs[fix] = nz;
            }
            Hyperplane::new(coeffs, offset).expect("non-zero by construction")
        })
}

fn arb_cover() -> impl Strategy<Value = Cover> {
    (1usize..=6).prop_flat_map(|n| {
        prop::collection::vec(arb_plane(n), 1..=5)
            .prop_map(move |planes| Cover::new(n, planes).unwrap())
    })
}

proptest! {
    #[test]
    fn inner_product_negates_under_complement(
        v in prop::collection::vec(arb_scalar(), 1..=10),
        mask in any::<u32>(),
    ) {
        let n = v.len();
        let x = Vertex::from_mask(mask & ((1u32 << n) - 1), n).unwrap();
        let a = inner_product(&v, &x).unwrap();
        let b = inner_product(&v, &x.complement()).unwrap();
        prop_assert!((a + b).is_zero());
    }

    #[test]
    fn support_counts_zeros(v in prop::collection::vec(arb_scalar(), 0..=12)) {
        let zeros = v.iter().filter(|c| c.is_zero()).count();
        prop_assert_eq!(support(&v).len(), v.len() - zeros);
    }

    #[test]
    fn enumeration_yields_all_distinct(n in 1usize..=16) {
        let masks: HashSet<u32> = enumerate_vertices(n).unwrap().map(|v| v.mask()).collect();
        prop_assert_eq!(masks.len(), 1 << n);
    }

    #[test]
    fn cover_text_round_trip(cover in arb_cover()) {
        let text = cover.to_text();
        let parsed = Cover::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &cover);
        prop_assert_eq!(parsed.to_text(), text);
    }

    #[test]
    fn matrix_text_round_trip(
        rows in prop::collection::vec(prop::collection::vec(arb_scalar(), 3), 1..=4)
    ) {
        let m = Matrix::from_rows(rows).unwrap();
        let text = m.to_text();
        prop_assert_eq!(Matrix::parse(&text).unwrap(), m);
    }

    #[test]
    fn verification_is_internally_consistent(cover in arb_cover()) {
        let (e1, missed) = verify::check_e1(&cover).unwrap();
        let uncovered = verify::find_uncovered(&cover).unwrap();
        prop_assert_eq!(e1, uncovered.is_none());
        prop_assert_eq!(missed, uncovered);

        // Present witnesses are pairwise distinct: a witness lies on exactly
        // one plane, so two planes cannot share one.
        let (_, witnesses) = verify::check_e3(&cover).unwrap();
        let present: Vec<u32> = witnesses.iter().flatten().map(|w| w.mask()).collect();
        let unique: HashSet<u32> = present.iter().copied().collect();
        prop_assert_eq!(present.len(), unique.len());

        if e1 {
            let minimal = verify::essentialize(&cover).unwrap();
            let report = verify::verify_cover(&minimal).unwrap();
            prop_assert!(report.e1_ok);
            prop_assert!(report.e3_ok);
            prop_assert!(minimal.len() <= cover.len());
        }
    }

    #[test]
    fn distribution_total_is_one(
        v in prop::collection::vec(arb_scalar(), 1..=8),
        seeds in prop::collection::vec(2i64..=4, 1..=8),
    ) {
        let n = v.len();
        let p = BiasVector::new(
            seeds.into_iter().cycle().take(n).map(|num| ratio(num, 6)).collect()
        ).unwrap();
        let dist = sum_distribution(&v, &p).unwrap();
        prop_assert!(dist.total().is_one());
        // Probabilities are non-negative rationals.
        for prob in dist.support().values() {
            prop_assert!(prob > &Scalar::zero());
        }
    }

    #[test]
    fn magnitude_is_shift_invariant(
        num in 1i64..=99, den in 1i64..=99, j in -6i32..=6, negative in any::<bool>(),
    ) {
        let mut r = ratio(num, den);
        // Normalize the mantissa into [1, 10): magnitude 0 by definition.
        while r >= ratio(10, 1) { r /= ratio(10, 1); }
        while r < ratio(1, 1) { r *= ratio(10, 1); }
        if negative { r = -r; }
        let x = &r * pow10(j);
        prop_assert_eq!(magnitude(&x).unwrap(), j as i64);
    }
}

#[test]
fn skew_cover_essentializes_above_half_n() {
    for n in 1..=12usize {
        let c = hypercover::constructions::skew_cover(n).unwrap();
        let minimal = verify::essentialize(&c).unwrap();
        assert!(
            minimal.len() >= n.div_ceil(2),
            "n={n}: {} planes below ⌈n/2⌉",
            minimal.len()
        );
    }
}
