//! Library evaluation checked against the brute-force oracles in the testkit.

use std::collections::HashMap;

use proptest::prelude::*;
use pseudobox::metrics::{
    average_precision_11pt, average_precision_area, match_detections, precision_recall,
    MatchOutcome,
};
use pseudobox::{
    evaluate, iou, BoundingBox, ClassLabel, Dataset, Detection, DetectionSet, EvalConfig, GtObject,
};
use pseudobox_testkit::oracle::{self, Flag};
use pseudobox_testkit::synth;

fn gt_of_class(gt: &Dataset, class: ClassLabel) -> HashMap<String, Vec<GtObject>> {
    gt.iter()
        .map(|img| {
            (
                img.image_id.clone(),
                img.objects
                    .iter()
                    .filter(|o| o.class == class)
                    .cloned()
                    .collect::<Vec<_>>(),
            )
        })
        .filter(|(_, v)| !v.is_empty())
        .collect()
}

fn to_flag(o: MatchOutcome) -> Flag {
    match o {
        MatchOutcome::TruePositive => Flag::Tp,
        MatchOutcome::FalsePositive => Flag::Fp,
        MatchOutcome::Ignored => Flag::Ignored,
    }
}

#[test]
fn iou_pixel_counting_example() {
    let a = BoundingBox::new(0, 0, 9, 9).unwrap();
    let b = BoundingBox::new(5, 5, 14, 14).unwrap();
    assert_eq!(oracle::pixel_iou(&a, &b), 25.0 / 175.0);
    assert_eq!(iou(&a, &b), oracle::pixel_iou(&a, &b));
}

#[test]
fn matching_equals_naive_replay() {
    let mut rng = synth::rng(0xA11CE);
    for _ in 0..500 {
        let (gt, dets) = synth::small_instance(&mut rng);
        for class in [ClassLabel::Cat, ClassLabel::Dog, ClassLabel::Person] {
            let of_class: Vec<&Detection> = dets.iter().filter(|d| d.class == class).collect();
            let flags = match_detections(of_class.iter().copied(), &gt_of_class(&gt, class), 0.5);
            let (expected, npos) = oracle::replay_matching(&of_class, &gt, class, 0.5);
            assert_eq!(flags.npos, npos);
            let got: Vec<Flag> = flags.outcomes.iter().copied().map(to_flag).collect();
            assert_eq!(got, expected);
        }
    }
}

#[test]
fn area_ap_equals_grid_integration() {
    let mut rng = synth::rng(77);
    for _ in 0..300 {
        let (gt, dets) = synth::small_instance(&mut rng);
        for class in [ClassLabel::Cat, ClassLabel::Dog, ClassLabel::Person] {
            let of_class: Vec<&Detection> = dets.iter().filter(|d| d.class == class).collect();
            let flags = match_detections(of_class.iter().copied(), &gt_of_class(&gt, class), 0.5);
            let curve = precision_recall(&flags);
            let (oflags, npos) = oracle::replay_matching(&of_class, &gt, class, 0.5);
            let expected = oracle::grid_area_ap(&oflags, npos, 1000);
            assert!((average_precision_area(&curve) - expected).abs() < 1e-9);
        }
    }
}

#[test]
fn evaluate_composes_the_oracles() {
    let mut rng = synth::rng(5);
    for _ in 0..300 {
        let (gt, dets) = synth::small_instance(&mut rng);
        let report = evaluate(
            &DetectionSet::new(dets.clone(), "r"),
            &gt,
            EvalConfig::default(),
        )
        .unwrap();
        for c in &report.per_class {
            let expected = oracle::class_ap(&dets, &gt, c.class, 0.5);
            assert_eq!(c.included, expected.is_some());
            if let Some(e) = expected {
                assert!(
                    (c.ap - e).abs() <= 1e-12,
                    "{:?}: {} vs {}",
                    c.class,
                    c.ap,
                    e
                );
            }
        }
        assert!((report.map - oracle::map(&dets, &gt, 0.5)).abs() <= 1e-12);
    }
}

#[test]
fn perfect_and_empty_detections() {
    let gt = synth::voc_like(30, 9);
    let perfect: Vec<Detection> = gt
        .iter()
        .flat_map(|img| {
            img.objects
                .iter()
                .filter(|o| !o.difficult)
                .map(|o| Detection::new(img.image_id.clone(), o.class, 1.0, o.bbox).unwrap())
        })
        .collect();
    let report = evaluate(&DetectionSet::new(perfect, "p"), &gt, EvalConfig::default()).unwrap();
    for c in &report.per_class {
        if c.npos > 0 {
            assert_eq!(c.ap, 1.0, "{:?}", c.class);
        }
    }

    let report = evaluate(&DetectionSet::default(), &gt, EvalConfig::default()).unwrap();
    for c in &report.per_class {
        if c.npos > 0 {
            assert_eq!(c.ap, 0.0);
            assert!(c.included);
        } else {
            assert!(!c.included);
        }
    }
}

#[test]
fn unknown_image_is_rejected() {
    let gt = synth::voc_like(3, 1);
    let d = Detection::new(
        "nope",
        ClassLabel::Dog,
        0.5,
        BoundingBox::new(1, 1, 2, 2).unwrap(),
    )
    .unwrap();
    let err = evaluate(&DetectionSet::new(vec![d], "x"), &gt, EvalConfig::default()).unwrap_err();
    assert!(matches!(err, pseudobox::Error::UnknownImage(id) if id == "nope"));
}

#[test]
fn class_with_only_difficult_objects_and_detections_scores_zero() {
    let gt = Dataset::new(
        "t",
        vec![pseudobox::ImageRecord {
            image_id: "a".into(),
            size: None,
            objects: vec![GtObject {
                class: ClassLabel::Cow,
                bbox: BoundingBox::new(1, 1, 10, 10).unwrap(),
                difficult: true,
            }],
        }],
    )
    .unwrap();
    let d = Detection::new(
        "a",
        ClassLabel::Cow,
        0.5,
        BoundingBox::new(1, 1, 10, 10).unwrap(),
    )
    .unwrap();
    let report = evaluate(&DetectionSet::new(vec![d], "x"), &gt, EvalConfig::default()).unwrap();
    let cow = report
        .per_class
        .iter()
        .find(|c| c.class == ClassLabel::Cow)
        .unwrap();
    assert!(cow.included);
    assert_eq!(cow.ap, 0.0);
    assert_eq!(report.map, 0.0);
    assert_eq!(report.per_class.iter().filter(|c| c.included).count(), 1);
}

fn arb_instance() -> impl Strategy<Value = (Dataset, Vec<Detection>)> {
    any::<u64>().prop_map(|s| synth::small_instance(&mut synth::rng(s)))
}

fn distinct_scores(dets: &mut [Detection]) {
    let n = dets.len() as f64;
    for (i, d) in dets.iter_mut().enumerate() {
        d.score = (i as f64 + 1.0) / (n + 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn iou_matches_pixel_count(a in (0i32..30, 0i32..30, 0i32..15, 0i32..15), b in (0i32..30, 0i32..30, 0i32..15, 0i32..15)) {
        let ba = BoundingBox::new(a.0, a.1, a.0 + a.2, a.1 + a.3).unwrap();
        let bb = BoundingBox::new(b.0, b.1, b.0 + b.2, b.1 + b.3).unwrap();
        prop_assert_eq!(iou(&ba, &bb), oracle::pixel_iou(&ba, &bb));
        prop_assert_eq!(iou(&ba, &ba), 1.0);
        prop_assert_eq!(iou(&ba, &bb), iou(&bb, &ba));
    }

    #[test]
    fn ap_in_unit_interval_and_rank_only((gt, dets) in arb_instance()) {
        let cfg = EvalConfig::default();
        let base = evaluate(&DetectionSet::new(dets.clone(), "r"), &gt, cfg).unwrap();
        for c in &base.per_class {
            prop_assert!((0.0..=1.0).contains(&c.ap));
        }
        // strictly increasing transform of every score
        let squashed: Vec<Detection> = dets
            .iter()
            .map(|d| Detection { score: (d.score * d.score + d.score) / 2.0, ..d.clone() })
            .collect();
        let other = evaluate(&DetectionSet::new(squashed, "r"), &gt, cfg).unwrap();
        prop_assert_eq!(base.per_class, other.per_class);
    }

    #[test]
    fn duplicate_with_lower_score_never_helps((gt, dets) in arb_instance(), pick in any::<prop::sample::Index>()) {
        prop_assume!(!dets.is_empty());
        let cfg = EvalConfig::default();
        let base = evaluate(&DetectionSet::new(dets.clone(), "r"), &gt, cfg).unwrap();
        let src = pick.get(&dets).clone();
        let mut more = dets.clone();
        more.push(Detection { score: src.score * 0.5, ..src.clone() });
        let after = evaluate(&DetectionSet::new(more, "r"), &gt, cfg).unwrap();
        prop_assert!(after.ap(src.class).unwrap() <= base.ap(src.class).unwrap() + 1e-15);
    }

    #[test]
    fn detection_on_absent_class_never_helps((gt, dets) in arb_instance(), s in 0.0f64..=1.0, cls in 0usize..20, img in any::<prop::sample::Index>()) {
        let image = img.get(gt.images());
        let class = ClassLabel::ALL[cls];
        prop_assume!(image.objects.iter().all(|o| o.class != class));
        let cfg = EvalConfig::default();
        let base = evaluate(&DetectionSet::new(dets.clone(), "r"), &gt, cfg).unwrap();
        let mut more = dets.clone();
        more.push(Detection::new(image.image_id.clone(), class, s, BoundingBox::new(1, 1, 20, 20).unwrap()).unwrap());
        let after = evaluate(&DetectionSet::new(more, "r"), &gt, cfg).unwrap();
        prop_assert!(after.ap(class).unwrap() <= base.ap(class).unwrap_or(0.0) + 1e-15);
    }

    #[test]
    fn permutation_invariant_with_distinct_scores((gt, mut dets) in arb_instance(), seed in any::<u64>()) {
        distinct_scores(&mut dets);
        let cfg = EvalConfig::default();
        let base = evaluate(&DetectionSet::new(dets.clone(), "r"), &gt, cfg).unwrap();
        let mut rng = synth::rng(seed);
        let mut shuffled = dets.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rand::Rng::random_range(&mut rng, 0..=i);
            shuffled.swap(i, j);
        }
        let other = evaluate(&DetectionSet::new(shuffled, "r"), &gt, cfg).unwrap();
        prop_assert_eq!(base.per_class, other.per_class);
    }

    #[test]
    fn area_within_sanity_band_of_11pt(prec in prop::collection::vec(0.0f64..=1.0, 1..12), npos in 1usize..12) {
        // a curve whose precision is non-increasing in recall
        let mut p = prec;
        p.sort_by(|a, b| b.total_cmp(a));
        let n = p.len();
        let recall: Vec<f64> = (1..=n).map(|i| (i.min(npos)) as f64 / npos as f64).collect();
        let curve = pseudobox::metrics::PrCurve { recall, precision: p };
        prop_assert!(average_precision_area(&curve) >= average_precision_11pt(&curve) - 1.0 / 11.0);
    }
}
