use std::path::Path;

use serde::{Deserialize, Serialize};

use super::delta::{delta_score, DeltaWeights};
use super::ProtocolError;
use crate::class::PatientClass;
use crate::game_model::Word;

/// `v + a / (b + c e^(d Δ + z))` above `threshold`, `saturation` below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefCurve {
    pub threshold: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub v: f64,
    pub z: f64,
    pub saturation: f64,
}

impl BeliefCurve {
    pub fn denominator(&self, delta: f64) -> f64 {
        self.b + self.c * (self.d * delta + self.z).exp()
    }

    pub fn eval(&self, delta: f64) -> f64 {
        if delta < self.threshold {
            return self.saturation;
        }
        let e = (self.d * delta + self.z).exp();
        if !e.is_finite() {
            return self.v;
        }
        let den = self.b + self.c * e;
        if !den.is_finite() {
            return self.v;
        }
        self.v + self.a / den
    }
}

/// One column of the factor table: the healthy curve (`*_h`) and the major
/// curve (`*_M`) of a meta-state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefFactors {
    pub delta_h: f64,
    pub a_h: f64,
    pub b_h: f64,
    pub c_h: f64,
    pub d_h: f64,
    pub v_h: f64,
    pub z_h: f64,
    #[serde(rename = "delta_M")]
    pub delta_major: f64,
    #[serde(rename = "a_M")]
    pub a_major: f64,
    #[serde(rename = "b_M")]
    pub b_major: f64,
    #[serde(rename = "c_M")]
    pub c_major: f64,
    #[serde(rename = "d_M")]
    pub d_major: f64,
    #[serde(rename = "v_M")]
    pub v_major: f64,
    #[serde(rename = "z_M")]
    pub z_major: f64,
}

impl BeliefFactors {
    pub fn healthy_curve(&self) -> BeliefCurve {
        BeliefCurve {
            threshold: self.delta_h,
            a: self.a_h,
            b: self.b_h,
            c: self.c_h,
            d: self.d_h,
            v: self.v_h,
            z: self.z_h,
            saturation: 1.0,
        }
    }

    pub fn major_curve(&self) -> BeliefCurve {
        BeliefCurve {
            threshold: self.delta_major,
            a: self.a_major,
            b: self.b_major,
            c: self.c_major,
            d: self.d_major,
            v: self.v_major,
            z: self.z_major,
            saturation: 0.0,
        }
    }

    fn values(&self) -> [(&'static str, f64); 14] {
        [
            ("delta_h", self.delta_h),
            ("a_h", self.a_h),
            ("b_h", self.b_h),
            ("c_h", self.c_h),
            ("d_h", self.d_h),
            ("v_h", self.v_h),
            ("z_h", self.z_h),
            ("delta_M", self.delta_major),
            ("a_M", self.a_major),
            ("b_M", self.b_major),
            ("c_M", self.c_major),
            ("d_M", self.d_major),
            ("v_M", self.v_major),
            ("z_M", self.z_major),
        ]
    }
}

/// Belief factors for the three meta-states plus the score weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefProfile {
    #[serde(default)]
    pub weights: DeltaWeights,
    #[serde(rename = "A_h")]
    pub healthy: BeliefFactors,
    #[serde(rename = "A_m")]
    pub mild: BeliefFactors,
    #[serde(rename = "A_M")]
    pub major: BeliefFactors,
}

impl Default for BeliefProfile {
    fn default() -> Self {
        BeliefProfile {
            weights: DeltaWeights::default(),
            healthy: BeliefFactors {
                delta_h: 2.016,
                a_h: 0.5,
                b_h: -3.6,
                c_h: 1.0,
                d_h: 0.7,
                v_h: 0.0,
                z_h: 0.0,
                delta_major: 6.256,
                a_major: 2.4,
                b_major: 2.1,
                c_major: -1.0,
                d_major: 0.24,
                v_major: 1.0,
                z_major: 0.0,
            },
            mild: BeliefFactors {
                delta_h: 0.0,
                a_h: 1.0,
                b_h: 1.2,
                c_h: 0.3,
                d_h: 2.2,
                v_h: 0.0,
                z_h: -1.0,
                delta_major: 0.0,
                a_major: -1.0,
                b_major: 1.0,
                c_major: 1.4,
                d_major: 0.8,
                v_major: 1.0,
                z_major: -6.3,
            },
            major: BeliefFactors {
                delta_h: 0.0,
                a_h: -0.1,
                b_h: 0.1,
                c_h: 0.1,
                d_h: -2.4,
                v_h: 1.0,
                z_h: 1.1,
                delta_major: 3.769,
                a_major: -6.6,
                b_major: 0.4,
                c_major: 0.01,
                d_major: 1.6,
                v_major: 1.0,
                z_major: 0.4,
            },
        }
    }
}

/// Step used when scanning curve denominators for sign changes.
pub const DENOMINATOR_SCAN_STEP: f64 = 1e-3;

impl BeliefProfile {
    pub fn factors(&self, meta: PatientClass) -> &BeliefFactors {
        match meta {
            PatientClass::Healthy => &self.healthy,
            PatientClass::MildNcd => &self.mild,
            PatientClass::MajorNcd => &self.major,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ProtocolError> {
        let profile: BeliefProfile = toml::from_str(text).map_err(|e| ProtocolError::Profile(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("profile serializes")
    }

    pub fn read(path: &Path) -> Result<Self, ProtocolError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ProtocolError::Profile(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Rejects non-finite factors, invalid weights, curves whose denominator
    /// vanishes on the part of the score range where they are evaluated, and
    /// profiles that do not reproduce the three reference classifications.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        self.weights.check()?;
        let m = self.weights.m;
        for meta in PatientClass::ALL {
            let f = self.factors(meta);
            for (name, x) in f.values() {
                if !x.is_finite() {
                    return Err(ProtocolError::Profile(format!("{}: {name} is not finite", meta.test_name())));
                }
            }
            for (label, curve) in [("h", f.healthy_curve()), ("M", f.major_curve())] {
                if let Some(at) = vanishing_denominator(&curve, m) {
                    return Err(ProtocolError::Profile(format!(
                        "{}: denominator of the {label} curve vanishes near score {at:.3}",
                        meta.test_name()
                    )));
                }
            }
        }
        for (meta, word, expected) in reference_scenarios() {
            let got = next_test(&belief_distribution(self, meta, &word)?.distribution, meta);
            if got != expected {
                return Err(ProtocolError::Profile(format!(
                    "{} with `{word}` suggests {got}, expected {expected}",
                    meta.test_name()
                )));
            }
        }
        Ok(())
    }
}

/// The poor, perfect and medium sessions with the transitions they must
/// produce: `(meta-state, word, expected next test)`.
pub fn reference_scenarios() -> [(PatientClass, Word, PatientClass); 3] {
    let w = |s: &str| s.parse::<Word>().expect("literal word");
    [
        (PatientClass::Healthy, w("bggbbbgbbbbbgb"), PatientClass::MajorNcd),
        (PatientClass::MajorNcd, w("aaaaaaaaaa"), PatientClass::Healthy),
        (PatientClass::MildNcd, w("ababababab"), PatientClass::MildNcd),
    ]
}

fn vanishing_denominator(curve: &BeliefCurve, m: f64) -> Option<f64> {
    let start = curve.threshold.max(0.0);
    if start > m {
        return None;
    }
    let n = ((m - start) / DENOMINATOR_SCAN_STEP).ceil() as usize;
    let mut prev = curve.denominator(start);
    if prev == 0.0 {
        return Some(start);
    }
    for i in 1..=n {
        let x = (start + i as f64 * DENOMINATOR_SCAN_STEP).min(m);
        let den = curve.denominator(x);
        if den == 0.0 || den.signum() != prev.signum() {
            return Some(x);
        }
        prev = den;
    }
    None
}

/// Unclamped belief of `target` at meta-state `meta` for score `delta`. The
/// mild belief is the residual of the other two.
pub fn belief_raw(
    profile: &BeliefProfile,
    meta: PatientClass,
    target: PatientClass,
    delta: f64,
) -> Result<f64, ProtocolError> {
    if !(0.0..=profile.weights.m).contains(&delta) {
        return Err(ProtocolError::ScoreOutOfRange { delta, max: profile.weights.m });
    }
    let f = profile.factors(meta);
    let h = || f.healthy_curve().eval(delta);
    let big = || f.major_curve().eval(delta);
    Ok(match target {
        PatientClass::Healthy => h(),
        PatientClass::MajorNcd => big(),
        PatientClass::MildNcd => 1.0 - h() - big(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefDistribution {
    pub h: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub major: f64,
}

impl BeliefDistribution {
    pub fn get(&self, class: PatientClass) -> f64 {
        match class {
            PatientClass::Healthy => self.h,
            PatientClass::MildNcd => self.m,
            PatientClass::MajorNcd => self.major,
        }
    }

    pub fn sum(&self) -> f64 {
        self.h + self.m + self.major
    }

    /// Clamps the healthy and major beliefs to [0, 1], takes the residual as
    /// the mild belief, clamps it, and rescales so the three sum to 1. The
    /// flag tells whether anything had to be adjusted.
    pub fn from_raw(h: f64, major: f64) -> (Self, bool) {
        let hc = h.clamp(0.0, 1.0);
        let bc = major.clamp(0.0, 1.0);
        let residual = 1.0 - hc - bc;
        let mc = residual.clamp(0.0, 1.0);
        let mut clamped = hc != h || bc != major || mc != residual;
        let total = hc + mc + bc;
        let mut d = BeliefDistribution { h: hc, m: mc, major: bc };
        if total != 1.0 {
            d = BeliefDistribution { h: hc / total, m: mc / total, major: bc / total };
            clamped = clamped || (total - 1.0).abs() > 1e-12;
        }
        (d, clamped)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefEvaluation {
    pub delta: f64,
    pub distribution: BeliefDistribution,
    pub clamped: bool,
}

pub fn distribution_at(
    profile: &BeliefProfile,
    meta: PatientClass,
    delta: f64,
) -> Result<(BeliefDistribution, bool), ProtocolError> {
    let h = belief_raw(profile, meta, PatientClass::Healthy, delta)?;
    let big = belief_raw(profile, meta, PatientClass::MajorNcd, delta)?;
    Ok(BeliefDistribution::from_raw(h, big))
}

pub fn belief_distribution(
    profile: &BeliefProfile,
    meta: PatientClass,
    word: &Word,
) -> Result<BeliefEvaluation, ProtocolError> {
    let delta = delta_score(word, &profile.weights)?;
    let (distribution, clamped) = distribution_at(profile, meta, delta)?;
    if clamped {
        log::info!("{}: beliefs clamped at score {delta}", meta.test_name());
    }
    Ok(BeliefEvaluation { delta, distribution, clamped })
}

/// Most believed class; ties go to `current`, then to the milder class.
pub fn next_test(dist: &BeliefDistribution, current: PatientClass) -> PatientClass {
    let best = PatientClass::ALL.iter().map(|&c| dist.get(c)).fold(f64::NEG_INFINITY, f64::max);
    if dist.get(current) == best {
        return current;
    }
    PatientClass::ALL.into_iter().find(|&c| dist.get(c) == best).unwrap_or(current)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub delta: f64,
    pub h: f64,
    pub m: f64,
    #[serde(rename = "M")]
    pub major: f64,
}

/// Post-clamp beliefs sampled over `[0, m]`; the last row is always `m`.
pub fn sample_belief_curves(
    profile: &BeliefProfile,
    meta: PatientClass,
    step: f64,
) -> Result<Vec<CurveRow>, ProtocolError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(ProtocolError::InvalidStep(step));
    }
    let m = profile.weights.m;
    let n = (m / step - 1e-9).ceil() as usize;
    (0..=n)
        .map(|i| {
            let delta = (i as f64 * step).min(m);
            let (d, _) = distribution_at(profile, meta, delta)?;
            Ok(CurveRow { delta, h: d.h, m: d.m, major: d.major })
        })
        .collect()
}

/// Score interval on which one class is the suggested next test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxBand {
    pub class: PatientClass,
    pub from: f64,
    pub to: f64,
}

/// Splits `[0, m]` into maximal intervals with a constant suggestion.
/// Boundaries are located by a scan at `step` and refined by bisection.
pub fn argmax_bands(profile: &BeliefProfile, meta: PatientClass, step: f64) -> Result<Vec<ArgmaxBand>, ProtocolError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(ProtocolError::InvalidStep(step));
    }
    let m = profile.weights.m;
    let choice = |x: f64| -> Result<PatientClass, ProtocolError> {
        Ok(next_test(&distribution_at(profile, meta, x)?.0, meta))
    };
    let mut bands = Vec::new();
    let mut start = 0.0;
    let mut current = choice(0.0)?;
    let mut prev = 0.0;
    let n = (m / step).ceil() as usize;
    for i in 1..=n {
        let x = (i as f64 * step).min(m);
        let c = choice(x)?;
        if c != current {
            let (mut lo, mut hi) = (prev, x);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if choice(mid)? == current {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            bands.push(ArgmaxBand { class: current, from: start, to: hi });
            start = hi;
            current = c;
        }
        prev = x;
    }
    bands.push(ArgmaxBand { class: current, from: start, to: m });
    Ok(bands)
}
