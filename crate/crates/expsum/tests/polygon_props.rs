use expsum::polygon::{Ordinate, Polygon};
use expsum::util::rat;
use proptest::prelude::*;

fn arb_points() -> impl Strategy<Value = Vec<(u64, Ordinate)>> {
    // distinct abscissae 0..n with rational ordinates, origin pinned
    (2usize..8, proptest::collection::vec((0i64..60, 1i64..12), 7)).prop_map(|(n, raw)| {
        let mut pts = vec![(0u64, Ordinate::Finite(rat(0, 1)))];
        for (x, (num, den)) in raw.into_iter().take(n - 1).enumerate() {
            pts.push((x as u64 + 1, Ordinate::Finite(rat(num, den))));
        }
        pts
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hull_is_convex_and_idempotent(pts in arb_points()) {
        let hull = Polygon::lower_hull(&pts).unwrap().polygon;
        // slopes non-decreasing comes free from construction; hull of the
        // hull's own vertices must be the hull again
        let again = Polygon::from_vertices(hull.vertices().to_vec()).unwrap();
        prop_assert_eq!(&again, &hull);
        // every input point lies on or above the hull
        for (x, o) in &pts {
            if let Ordinate::Finite(y) = o {
                if *x <= hull.span() {
                    prop_assert!(y >= &hull.eval_at(*x).unwrap());
                }
            }
        }
    }

    #[test]
    fn dilation_composes(pts in arb_points(), j in 1u64..4, k in 1u64..4) {
        let hull = Polygon::lower_hull(&pts).unwrap().polygon;
        prop_assert_eq!(hull.dilate(j).dilate(k), hull.dilate(j * k));
        prop_assert_eq!(hull.dilate(1), hull);
    }

    #[test]
    fn hull_lies_above_is_reflexive(pts in arb_points()) {
        let hull = Polygon::lower_hull(&pts).unwrap().polygon;
        prop_assert!(hull.lies_above(&hull).unwrap().holds);
    }

    #[test]
    fn json_round_trip(pts in arb_points()) {
        let hull = Polygon::lower_hull(&pts).unwrap().polygon;
        let s = serde_json::to_string(&hull).unwrap();
        let back: Polygon = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, hull);
    }
}
