use std::collections::HashMap;

use proptest::prelude::*;
use stripes::context::{
    assign_context, label_entropy, mi_report, mutual_information, pitch_entropy, ContextOptions, ContextType, LabeledEvents,
};
use stripes::metrics::evaluate;
use stripes::pianoroll::{load_annotated, load_pianoroll, to_json, Pianoroll};
use stripes::Error;

const EVERYWHERE_ONSET: &[u8] = include_bytes!("fixtures/a.json");
const CADENCE: &[u8] = include_bytes!("fixtures/cadence.json");
const TOL: f64 = 1e-9;

fn roll_strategy() -> impl Strategy<Value = Pianoroll> {
    (1usize..3, 4usize..40, prop::collection::vec((0usize..2, 36usize..84, 0usize..40, 1usize..8), 0..40)).prop_map(
        |(tracks, length, notes)| {
            let mut roll = Pianoroll::zeros(tracks, 4, length).unwrap();
            for (track, pitch, onset, dur) in notes {
                let onset = onset % length;
                roll.add_note(track % tracks, pitch, onset, (onset + dur).min(length)).unwrap();
            }
            roll
        },
    )
}

fn events_strategy() -> impl Strategy<Value = LabeledEvents> {
    prop::collection::vec((0u8..12, 0u64..6), 1..200).prop_map(|pairs| LabeledEvents { pairs })
}

#[test]
fn identity_bundle_on_fixture() {
    let roll = load_pianoroll(EVERYWHERE_ONSET).unwrap();
    let b = evaluate(&roll, &roll).unwrap();
    assert_eq!((b.ssmd, b.cs, b.gs, b.ndd), (0.0, 100.0, 100.0, 0.0));
}

#[test]
fn empty_prediction_bundle() {
    let target = load_pianoroll(EVERYWHERE_ONSET).unwrap();
    let empty = Pianoroll::zeros(1, 4, target.length()).unwrap();
    let b = evaluate(&target, &empty).unwrap();
    assert_eq!((b.cs, b.gs, b.ndd), (0.0, 0.0, 100.0));
}

#[test]
fn cadence_fixture_round_trips() {
    let (roll, ann) = load_annotated(CADENCE).unwrap();
    let ann = ann.unwrap();
    ann.check_coverage(roll.length()).unwrap();
    let again = to_json(&roll, Some(&ann)).unwrap();
    let (roll2, ann2) = load_annotated(again.as_bytes()).unwrap();
    assert_eq!(roll, roll2);
    assert_eq!(Some(ann), ann2);
}

#[test]
fn cadence_context_ordering() {
    let (roll, ann) = load_annotated(CADENCE).unwrap();
    let mi = |ctx| mi_report(&roll, ann.as_ref(), ctx, ContextOptions::default()).unwrap().mi_nats;
    let (time, rep, key, bin) = (mi(ContextType::Time), mi(ContextType::Rep), mi(ContextType::Key), mi(ContextType::Bin));
    assert!((rep - key).abs() < TOL && (rep - bin).abs() < TOL);
    assert!(time >= bin);
}

#[test]
fn key_context_needs_key() {
    let roll = load_pianoroll(EVERYWHERE_ONSET).unwrap();
    let err = mi_report(&roll, None, ContextType::Key, ContextOptions::default()).unwrap_err();
    assert!(matches!(err, Error::MissingAnnotation | Error::MissingKey), "{err:?}");
}

#[test]
fn one_event_has_zero_mi() {
    let events = LabeledEvents { pairs: vec![(60, 0)] };
    assert_eq!(mutual_information(&events).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn metric_ranges(t in roll_strategy(), p in roll_strategy()) {
        prop_assume!(t.steps_per_quarter() == p.steps_per_quarter());
        if let Ok(b) = evaluate(&t, &p) {
            for v in [b.ssmd, b.cs, b.gs, b.ndd] {
                prop_assert!((0.0..=100.0).contains(&v), "{b:?}");
            }
        }
    }

    #[test]
    fn self_comparison_is_perfect(t in roll_strategy()) {
        let b = evaluate(&t, &t).unwrap();
        prop_assert_eq!((b.ssmd, b.gs, b.ndd), (0.0, 100.0, 0.0));
    }

    #[test]
    fn tiling_keeps_metrics(t in roll_strategy(), p in roll_strategy(), k in 2usize..4) {
        let period = 8;
        let trim = |r: &Pianoroll| {
            let len = (r.length() / period).max(1) * period;
            let mut out = Pianoroll::zeros(2, 4, len).unwrap();
            for [track, pitch, on, off] in r.notes() {
                let off = off.min(len - 1);
                if on < off {
                    out.add_note(track, pitch, on, off).unwrap();
                }
            }
            out
        };
        let (t, p) = (trim(&t), trim(&p));
        prop_assume!(t.length() == p.length());
        let once = evaluate(&t, &p).unwrap();
        let tiled = evaluate(&t.tiled(k).unwrap(), &p.tiled(k).unwrap()).unwrap();
        prop_assert!((once.ssmd - tiled.ssmd).abs() < TOL);
        prop_assert!((once.cs - tiled.cs).abs() < TOL);
        prop_assert!((once.gs - tiled.gs).abs() < TOL);
        prop_assert!((once.ndd - tiled.ndd).abs() < TOL);
    }

    #[test]
    fn mi_bounds(events in events_strategy()) {
        let mi = mutual_information(&events).unwrap();
        let bound = pitch_entropy(&events).unwrap().min(label_entropy(&events).unwrap());
        prop_assert!(mi >= 0.0 && mi <= bound + 1e-12);
    }

    #[test]
    fn mi_ignores_label_names(events in events_strategy(), salt in any::<u64>()) {
        let mut table: HashMap<u64, u64> = HashMap::new();
        let relabeled = LabeledEvents {
            pairs: events
                .pairs
                .iter()
                .map(|&(p, l)| (p, *table.entry(l).or_insert_with(|| salt.wrapping_mul(l + 1) ^ 0x5bd1e995)))
                .collect(),
        };
        prop_assume!(table.values().collect::<std::collections::HashSet<_>>().len() == table.len());
        let a = mutual_information(&events).unwrap();
        let b = mutual_information(&relabeled).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn time_labels_follow_steps(t in roll_strategy()) {
        let ev = assign_context(&t, None, ContextType::Time, ContextOptions::default()).unwrap();
        let active: usize = t.grid().iter().map(|&v| v as usize).sum();
        prop_assert!(ev.pairs.len() <= active);
        prop_assert!(ev.pairs.iter().all(|&(p, l)| t.get(0, p as usize, l as usize) || t.tracks() > 1));
    }
}
