use proptest::prelude::*;

use segcons::evaluation::{asd, case_metrics, dice, hd95, jaccard, MetricReport, OverlapCounts};
use segcons::geometry::LabelMask;
use segcons::Extents;

fn pair_strategy() -> impl Strategy<Value = (Extents, Vec<bool>, Vec<bool>)> {
    (1usize..=10, 1usize..=10, 1usize..=4).prop_flat_map(|(h, w, d)| {
        let e = if d == 1 { Extents::d2(h, w) } else { Extents::d3(d, h, w) };
        let n = e.len();
        (
            Just(e),
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(any::<bool>(), n),
        )
    })
}

fn mask(e: &Extents, fg: &[bool]) -> LabelMask {
    LabelMask::from_bools(fg, e.clone()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn overlap_metrics_are_symmetric_and_bounded((e, a, b) in pair_strategy()) {
        let (ma, mb) = (mask(&e, &a), mask(&e, &b));
        let d = dice(&ma, &mb, 1).unwrap();
        let j = jaccard(&ma, &mb, 1).unwrap();
        prop_assert_eq!(d, dice(&mb, &ma, 1).unwrap());
        prop_assert_eq!(j, jaccard(&mb, &ma, 1).unwrap());
        prop_assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&j));
        prop_assert!(j <= d);
        prop_assert!((j - d / (2.0 - d)).abs() <= 4.0 * f64::EPSILON);
        // The identity in exact integer arithmetic: I / U = (2I / S) / (2 - 2I / S).
        let c = OverlapCounts::of(&a, &b);
        prop_assert_eq!(c.intersection * (2 * (c.a + c.b) - 2 * c.intersection), 2 * c.intersection * c.union());
    }

    #[test]
    fn surface_metrics_are_symmetric((e, a, b) in pair_strategy()) {
        prop_assume!(a.iter().any(|&x| x) && b.iter().any(|&x| x));
        let (ma, mb) = (mask(&e, &a), mask(&e, &b));
        let x = asd(&ma, &mb, 1).unwrap();
        let y = hd95(&ma, &mb, 1).unwrap();
        prop_assert!((x - asd(&mb, &ma, 1).unwrap()).abs() < 1e-12);
        prop_assert_eq!(y, hd95(&mb, &ma, 1).unwrap());
        prop_assert!(x >= 0.0 && y >= 0.0);
        let m = case_metrics("c", &ma, &mb, 1).unwrap();
        prop_assert!(m.jaccard <= m.dice);
    }
}

#[test]
fn identical_masks_score_perfectly() {
    let e = Extents::d2(6, 6);
    let fg: Vec<bool> = (0..36).map(|i| i % 7 < 3).collect();
    let m = mask(&e, &fg);
    let c = case_metrics("same", &m, &m, 1).unwrap();
    assert_eq!((c.dice, c.jaccard, c.asd, c.hd95), (1.0, 1.0, Some(0.0), Some(0.0)));
}

#[test]
fn report_csv_is_stable() {
    let e = Extents::d2(4, 4);
    let a = mask(&e, &(0..16).map(|i| i < 8).collect::<Vec<_>>());
    let b = mask(&e, &(0..16).map(|i| i < 4).collect::<Vec<_>>());
    let cases = vec![
        case_metrics("a", &a, &a, 1).unwrap(),
        case_metrics("b", &b, &a, 1).unwrap(),
    ];
    let r1 = MetricReport::new(cases.clone(), "f".into());
    let r2 = MetricReport::new(cases, "f".into());
    assert_eq!(r1.to_csv(), r2.to_csv());
    assert!(r1.to_csv().contains("__mean__"));
}
