//! Property tests for the structural invariants of each stage.

use proptest::collection::vec;
use proptest::prelude::*;

use depthgest::classify::{load_model, save_model, FeatureVector, TemplateModel};
use depthgest::depthio::{load_dseq, save_dseq, DepthFrame, DepthSequence};
use depthgest::eval::{format_annotations, parse_annotation_text, AnnotationSet, LabeledInterval};
use depthgest::idmm::{build_idmm, normalize, quantize, rainbow, Idmm};
use depthgest::qomseg::{global_qom, qom_pair, segment, SegmentationParams};

fn frame_strategy(w: u32, h: u32, max: u16) -> impl Strategy<Value = DepthFrame> {
    vec(0..=max, (w * h) as usize).prop_map(move |data| DepthFrame::new(w, h, data).unwrap())
}

fn seq_strategy(w: u32, h: u32, len: std::ops::Range<usize>) -> impl Strategy<Value = DepthSequence> {
    vec(frame_strategy(w, h, 5000), len).prop_map(|frames| DepthSequence::new(frames, "p").unwrap())
}

proptest! {
    // -- QOM --------------------------------------------------------------

    #[test]
    fn qom_is_symmetric(a in frame_strategy(6, 5, 3000),
                        b in frame_strategy(6, 5, 3000),
                        t in 1u16..500) {
        prop_assert_eq!(qom_pair(&a, &b, t).unwrap(), qom_pair(&b, &a, t).unwrap());
    }

    #[test]
    fn qom_never_exceeds_pixel_count(a in frame_strategy(7, 4, 3000),
                                     b in frame_strategy(7, 4, 3000),
                                     t in 1u16..500) {
        prop_assert!(qom_pair(&a, &b, t).unwrap() <= 28);
    }

    #[test]
    fn qom_monotone_in_threshold(a in frame_strategy(6, 6, 3000),
                                 b in frame_strategy(6, 6, 3000),
                                 t in 1u16..400) {
        prop_assert!(qom_pair(&a, &b, t).unwrap() >= qom_pair(&a, &b, t + 50).unwrap());
    }

    #[test]
    fn qom_profile_starts_at_zero(seq in seq_strategy(5, 5, 1..12), t in 1u16..300) {
        prop_assert_eq!(global_qom(&seq, t).values()[0], 0);
    }

    #[test]
    fn qom_invariant_under_depth_translation(a in frame_strategy(6, 5, 3000),
                                             b in frame_strategy(6, 5, 3000),
                                             t in 1u16..500,
                                             shift in 0u16..10000) {
        let lift = |f: &DepthFrame| DepthFrame::new(
            f.width(), f.height(), f.data().iter().map(|&v| v + shift).collect()).unwrap();
        prop_assert_eq!(qom_pair(&a, &b, t).unwrap(),
                        qom_pair(&lift(&a), &lift(&b), t).unwrap());
    }

    // -- segmentation -----------------------------------------------------

    #[test]
    fn segmentation_structure(seq in seq_strategy(6, 6, 4..30)) {
        let params = SegmentationParams::with_mean_length(6).unwrap();
        let result = segment(&seq, &params).unwrap();
        let d = result.delimiters();
        prop_assert_eq!(d[0], 0);
        prop_assert_eq!(*d.last().unwrap(), seq.len() - 1);
        prop_assert!(d.windows(2).all(|w| w[0] < w[1]));
        let segs = result.segments();
        prop_assert!(!segs.is_empty());
        prop_assert_eq!(segs[0].0, 0);
        prop_assert_eq!(segs.last().unwrap().1, seq.len() - 1);
        for &(s, e) in segs {
            prop_assert!(e - s >= 1, "degenerate segment {}..{}", s, e);
        }
        for pair in segs.windows(2) {
            prop_assert_eq!(pair[0].1, pair[1].0, "segments must share boundary frames");
        }
    }

    // -- IDMM and pseudo-coloring -----------------------------------------

    #[test]
    fn idmm_zero_iff_constant_sequence(f in frame_strategy(5, 5, 2000), n in 1usize..8) {
        let seq = DepthSequence::new(vec![f; n], "c").unwrap();
        prop_assert!(build_idmm(&seq).unwrap().data().iter().all(|&v| v == 0));
    }

    #[test]
    fn idmm_invariant_under_depth_translation(seq in seq_strategy(5, 5, 1..10),
                                              shift in 0u16..10000) {
        let lifted = DepthSequence::new(
            seq.frames().iter().map(|f| DepthFrame::new(
                f.width(), f.height(),
                f.data().iter().map(|&v| v + shift).collect()).unwrap()).collect(),
            "lifted").unwrap();
        prop_assert_eq!(build_idmm(&seq).unwrap(), build_idmm(&lifted).unwrap());
    }

    #[test]
    fn normalize_hits_both_extremes(data in vec(0u64..100000, 12..40)) {
        let n = data.len() as u32;
        let idmm = Idmm::new(n, 1, data.clone()).unwrap();
        let out = normalize(&idmm);
        let lo = out.data().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = out.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo >= 0.0 && hi <= 255.0);
        if data.iter().min() != data.iter().max() {
            prop_assert!(lo.abs() < 1e-12 && (hi - 255.0).abs() < 1e-12);
        } else {
            prop_assert!(out.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rainbow_channels_in_unit_interval(i in 0.0f64..=255.0) {
        let (r, g, b) = rainbow(i).unwrap();
        for c in [r, g, b] {
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn quantize_is_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo) <= quantize(hi));
    }

    // -- round-trips ------------------------------------------------------

    #[test]
    fn dseq_roundtrip_preserves_sequence(seq in seq_strategy(4, 3, 1..6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.dseq");
        save_dseq(&seq, &path).unwrap();
        let back = load_dseq(&path).unwrap();
        prop_assert_eq!(back.frames(), seq.frames());
    }

    #[test]
    fn model_roundtrip_preserves_templates(
        side in 1u16..4,
        labels in vec(1u32..50, 1..5),
        raw in vec(0u16..1000, 48..200),
    ) {
        let feat_len = 3 * side as usize * side as usize;
        let templates: Vec<(u32, FeatureVector)> = labels.iter().enumerate().map(|(i, &l)| {
            let values = (0..feat_len)
                .map(|j| raw[(i * feat_len + j) % raw.len()] as f32 / 4.0)
                .collect();
            (l, FeatureVector { values })
        }).collect();
        let model = TemplateModel::from_templates(side, templates).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.idnn");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        prop_assert_eq!(back.side(), model.side());
        prop_assert_eq!(back.templates(), model.templates());
    }

    #[test]
    fn annotation_text_roundtrip(
        ids in vec("[a-z]{1,6}", 1..4),
        starts in vec(1u32..80, 1..6),
        lens in vec(0u32..20, 1..6),
        labels in vec(1u32..30, 1..6),
    ) {
        let mut set = AnnotationSet::new();
        for id in ids {
            let intervals = starts.iter().zip(&lens).zip(&labels)
                .map(|((&s, &n), &l)| LabeledInterval::new(s, s + n, l).unwrap())
                .collect();
            set.insert(id, intervals);
        }
        let text = format_annotations(&set);
        let back = parse_annotation_text(&text, "mem").unwrap();
        prop_assert_eq!(back.sequences(), set.sequences());
    }
}
