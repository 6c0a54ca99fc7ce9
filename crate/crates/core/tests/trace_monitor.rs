use doxa_core::trace_logic::{
    check_stop, detect_oscillation, detect_steady_state, eval_ltlf, parse_ltlf, ClassTrace, LtlfFormula, StopConfig,
    StopReason,
};
use doxa_core::PatientClass;
use proptest::prelude::*;
use regex::Regex;

fn class() -> impl Strategy<Value = PatientClass> {
    prop_oneof![Just(PatientClass::Healthy), Just(PatientClass::MildNcd), Just(PatientClass::MajorNcd)]
}

fn trace(max: usize) -> impl Strategy<Value = ClassTrace> {
    prop::collection::vec(class(), 0..=max).prop_map(ClassTrace::new)
}

/// Oscillation with gaps anywhere, first symbol at the start of the trace.
fn regex_oscillates(s: &str) -> bool {
    let pairs = [("h", "m"), ("h", "M"), ("m", "h"), ("m", "M"), ("M", "h"), ("M", "m")];
    pairs.iter().any(|(a, b)| Regex::new(&format!("^(?:{a}.*{b}.*){{4}}$")).unwrap().is_match(s))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 10_000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn oscillation_agrees_with_regex(t in trace(15)) {
        prop_assert_eq!(detect_oscillation(&t).stopped, regex_oscillates(&t.to_string()));
    }

    #[test]
    fn oscillation_agrees_with_nested_future(t in prop::collection::vec(class(), 1..=15).prop_map(ClassTrace::new)) {
        let by_formula = PatientClass::ALL.iter().any(|&a| {
            PatientClass::ALL.iter().any(|&b| {
                a != b && eval_ltlf(&t, &LtlfFormula::oscillation(a, b, 4), 0).unwrap()
            })
        });
        prop_assert_eq!(detect_oscillation(&t).stopped, by_formula);
    }

    #[test]
    fn oscillation_witness_alternates(t in trace(15)) {
        let d = detect_oscillation(&t);
        if d.stopped {
            prop_assert_eq!(d.detail.len(), 8);
            prop_assert_eq!(d.detail[0], 0);
            let e = t.entries();
            for w in d.detail.windows(2) {
                prop_assert!(w[0] < w[1]);
            }
            for (k, &p) in d.detail.iter().enumerate() {
                prop_assert_eq!(e[p], e[d.detail[k % 2]]);
            }
            prop_assert_ne!(e[d.detail[0]], e[d.detail[1]]);
        } else {
            prop_assert!(d.detail.is_empty());
        }
    }

    #[test]
    fn steady_state_is_monotone_in_k(t in trace(15), k in 2usize..6) {
        if detect_steady_state(&t, k).stopped {
            prop_assert!(detect_steady_state(&t, k - 1).stopped);
        }
    }

    #[test]
    fn steady_state_matches_formula(t in trace(12), k in 1usize..5) {
        let expected = t.len() >= k
            && eval_ltlf(&t, &LtlfFormula::repeated(t.last().unwrap(), k), t.len() - k).unwrap();
        prop_assert_eq!(detect_steady_state(&t, k).stopped, expected);
    }

    #[test]
    fn check_stop_is_deterministic(t in trace(15)) {
        let cfg = StopConfig::default();
        let a = check_stop(&t, &cfg);
        let b = check_stop(&t.clone(), &cfg.clone());
        prop_assert_eq!(a.stopped, a.reason != StopReason::None);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn weak_and_strong_next_differ_only_at_the_end(
        t in prop::collection::vec(class(), 1..=8).prop_map(ClassTrace::new),
        i in 0usize..8,
    ) {
        let i = i % t.len();
        let strong = eval_ltlf(&t, &parse_ltlf("X h").unwrap(), i).unwrap();
        let weak = eval_ltlf(&t, &parse_ltlf("WX h").unwrap(), i).unwrap();
        if i + 1 == t.len() {
            prop_assert!(!strong && weak);
        } else {
            prop_assert_eq!(strong, weak);
        }
    }
}

#[test]
fn steady_state_formula_at_third_to_last() {
    let f = parse_ltlf("h and X(h and X h)").unwrap();
    let t: ClassTrace = "mMhhh".parse().unwrap();
    assert!(eval_ltlf(&t, &f, t.len() - 3).unwrap());
    assert_eq!(check_stop(&t, &StopConfig::default()).reason, StopReason::SteadyState);
}

#[test]
fn trace_file_with_symbols_per_line() {
    let t = ClassTrace::parse_lines("m\nM\nm\nM\nm\nM\nm\nM\n").unwrap();
    let json = serde_json::to_value(check_stop(&t, &StopConfig::default())).unwrap();
    assert_eq!(json["stopped"], true);
    assert_eq!(json["reason"], "Oscillation");
}
