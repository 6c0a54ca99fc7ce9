use std::fmt;

use serde::{Deserialize, Serialize};

use super::ClassTrace;
use crate::class::PatientClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StopReason {
    Oscillation,
    MaxTests,
    SteadyState,
    None,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Oscillation => "Oscillation",
            StopReason::MaxTests => "MaxTests",
            StopReason::SteadyState => "SteadyState",
            StopReason::None => "None",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of a stop check. `detail` holds the witnessing trace positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopDecision {
    pub stopped: bool,
    pub reason: StopReason,
    #[serde(default)]
    pub detail: Vec<usize>,
}

impl StopDecision {
    pub fn none() -> Self {
        StopDecision { stopped: false, reason: StopReason::None, detail: Vec::new() }
    }

    fn fired(reason: StopReason, detail: Vec<usize>) -> Self {
        StopDecision { stopped: true, reason, detail }
    }
}

impl Default for StopDecision {
    fn default() -> Self {
        Self::none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConfig {
    pub max_tests: usize,
    pub steady_k: usize,
    pub oscillation_cycles: usize,
    /// Look for an oscillation starting anywhere, not only at the first test.
    pub sliding_oscillation: bool,
    /// Conditions in the order they are tried; omitted ones never fire.
    pub priority: Vec<StopReason>,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            max_tests: 10,
            steady_k: 3,
            oscillation_cycles: 4,
            sliding_oscillation: false,
            priority: vec![StopReason::MaxTests, StopReason::Oscillation, StopReason::SteadyState],
        }
    }
}

/// Alternation `c1 c2 c1 c2 ...` (gaps allowed) four times over, starting at
/// the first entry of the trace.
pub fn detect_oscillation(trace: &ClassTrace) -> StopDecision {
    detect_oscillation_with(trace, 4, false)
}

pub fn detect_oscillation_with(trace: &ClassTrace, cycles: usize, sliding: bool) -> StopDecision {
    let t = trace.entries();
    if cycles == 0 || t.is_empty() {
        return StopDecision::none();
    }
    let mut best: Option<Vec<usize>> = None;
    for first in PatientClass::ALL {
        for second in PatientClass::ALL {
            if first == second {
                continue;
            }
            let start = if sliding {
                match t.iter().position(|&c| c == first) {
                    Some(p) => p,
                    None => continue,
                }
            } else if t[0] == first {
                0
            } else {
                continue;
            };
            if let Some(w) = greedy_alternation(t, start, first, second, cycles) {
                let better = match &best {
                    None => true,
                    Some(b) => w.last() < b.last(),
                };
                if better {
                    best = Some(w);
                }
            }
        }
    }
    match best {
        Some(w) => StopDecision::fired(StopReason::Oscillation, w),
        None => StopDecision::none(),
    }
}

fn greedy_alternation(
    t: &[PatientClass],
    start: usize,
    first: PatientClass,
    second: PatientClass,
    cycles: usize,
) -> Option<Vec<usize>> {
    let mut out = vec![start];
    let mut i = start + 1;
    for k in 1..2 * cycles {
        let want = if k % 2 == 0 { first } else { second };
        let p = i + t[i..].iter().position(|&c| c == want)?;
        out.push(p);
        i = p + 1;
    }
    Some(out)
}

pub fn detect_max_tests(trace: &ClassTrace, max_tests: usize) -> StopDecision {
    if trace.len() >= max_tests {
        StopDecision::fired(StopReason::MaxTests, vec![trace.len().saturating_sub(1)])
    } else {
        StopDecision::none()
    }
}

/// The last `k` entries are the same class.
pub fn detect_steady_state(trace: &ClassTrace, k: usize) -> StopDecision {
    let t = trace.entries();
    if k == 0 || t.len() < k {
        return StopDecision::none();
    }
    let tail = &t[t.len() - k..];
    if tail.iter().all(|&c| c == tail[0]) {
        StopDecision::fired(StopReason::SteadyState, (t.len() - k..t.len()).collect())
    } else {
        StopDecision::none()
    }
}

pub fn check_stop(trace: &ClassTrace, config: &StopConfig) -> StopDecision {
    for reason in &config.priority {
        let d = match reason {
            StopReason::MaxTests => detect_max_tests(trace, config.max_tests),
            StopReason::Oscillation => {
                detect_oscillation_with(trace, config.oscillation_cycles, config.sliding_oscillation)
            }
            StopReason::SteadyState => detect_steady_state(trace, config.steady_k),
            StopReason::None => continue,
        };
        if d.stopped {
            return d;
        }
    }
    StopDecision::none()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> ClassTrace {
        s.parse().unwrap()
    }

    #[test]
    fn oscillation_examples() {
        let d = detect_oscillation(&t("mMmMmMmM"));
        assert!(d.stopped);
        assert_eq!(d.reason, StopReason::Oscillation);
        assert_eq!(d.detail, (0..8).collect::<Vec<_>>());
        assert!(!detect_oscillation(&t("mmm")).stopped);
        let d = detect_oscillation(&t("mhMmMmMmM"));
        assert!(d.stopped);
        assert_eq!(d.detail, vec![0, 2, 3, 4, 5, 6, 7, 8]);
    }

    #[test]
    fn oscillation_is_anchored_unless_sliding() {
        let trace = t("hmMmMmMmM");
        assert!(!detect_oscillation(&trace).stopped);
        let d = detect_oscillation_with(&trace, 4, true);
        assert!(d.stopped);
        assert_eq!(d.detail[0], 1);
    }

    #[test]
    fn max_tests_threshold() {
        assert!(detect_max_tests(&t("hhhhhhhhhh"), 10).stopped);
        assert!(!detect_max_tests(&t("hhhhhhhhh"), 10).stopped);
    }

    #[test]
    fn steady_state_any_class() {
        assert!(detect_steady_state(&t("mhhh"), 3).stopped);
        assert!(!detect_steady_state(&t("hhm"), 3).stopped);
        assert!(detect_steady_state(&t("MMM"), 3).stopped);
        assert!(detect_steady_state(&t("mmm"), 3).stopped);
        assert!(!detect_steady_state(&t("hh"), 3).stopped);
    }

    #[test]
    fn priority_order() {
        let cfg = StopConfig::default();
        assert_eq!(check_stop(&t("mMmMmMmMmM"), &cfg).reason, StopReason::MaxTests);
        assert_eq!(check_stop(&t("hhh"), &cfg).reason, StopReason::SteadyState);
        assert_eq!(check_stop(&t("mM"), &cfg), StopDecision::none());
        let swapped = StopConfig {
            priority: vec![StopReason::Oscillation, StopReason::MaxTests],
            ..StopConfig::default()
        };
        assert_eq!(check_stop(&t("mMmMmMmMmM"), &swapped).reason, StopReason::Oscillation);
    }

    #[test]
    fn decision_json_shape() {
        let d = detect_oscillation(&t("mMmMmMmM"));
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v["stopped"], true);
        assert_eq!(v["reason"], "Oscillation");
    }
}
