//! JSON shapes of the API. Numbers are rounded to 9 significant digits.

use doxa_core::game_model::{ClassParams, GameShape};
use doxa_core::protocol::{BeliefDistribution, CurveRow, ProtocolSession, ProtocolStep};
use doxa_core::trace_logic::StopDecision;
use doxa_core::PatientClass;
use serde_json::{json, Value};

/// `x` rounded to 9 significant digits; the shortest representation of the
/// result is what gets serialized.
pub fn round9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

pub fn beliefs_json(d: &BeliefDistribution) -> Value {
    json!({ "h": round9(d.h), "m": round9(d.m), "M": round9(d.major) })
}

pub fn stop_json(stop: &StopDecision) -> Value {
    json!({ "stopped": stop.stopped, "reason": stop.reason.name(), "detail": stop.detail })
}

pub fn step_json(index: usize, step: &ProtocolStep) -> Value {
    json!({
        "index": index,
        "meta_state": step.meta_state,
        "word": step.word.to_string(),
        "delta": round9(step.delta),
        "beliefs": beliefs_json(&step.beliefs),
        "chosen": step.chosen,
        "stop": stop_json(&step.stop),
    })
}

/// Session metadata kept alongside the step log.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SessionMeta {
    pub id: String,
    pub hypothesis: PatientClass,
    pub created_at_ms: u64,
    pub updated_at_ms: u64,
}

pub fn session_json(meta: &SessionMeta, session: &ProtocolSession) -> Value {
    json!({
        "id": meta.id,
        "hypothesis": session.hypothesis,
        "meta_state": session.meta_state,
        "test": session.meta_state.test_name(),
        "next_test": session.next_test().test_name(),
        "class_trace": session.class_trace.to_string(),
        "stopped": session.is_stopped(),
        "stop": stop_json(&session.stop),
        "steps": session.steps.iter().enumerate().map(|(i, s)| step_json(i, s)).collect::<Vec<_>>(),
        "created_at_ms": meta.created_at_ms,
        "updated_at_ms": meta.updated_at_ms,
    })
}

pub fn curves_json(meta: PatientClass, step: f64, rows: &[CurveRow]) -> Value {
    json!({
        "meta_state": meta,
        "test": meta.test_name(),
        "step": step,
        "rows": rows.iter().map(|r| json!({
            "delta": round9(r.delta), "h": round9(r.h), "m": round9(r.m), "M": round9(r.major)
        })).collect::<Vec<_>>(),
    })
}

pub fn models_json(shape: GameShape, states: &[usize; 3]) -> Value {
    json!({
        "shape": { "rounds": shape.rounds, "step_cap": shape.step_cap },
        "classes": PatientClass::ALL.iter().map(|&c| {
            let p = ClassParams::table1(c);
            json!({
                "class": c,
                "name": c.name(),
                "test": c.test_name(),
                "params": { "alpha": p.p_alpha, "beta": p.p_beta, "gamma": p.p_gamma, "theta": p.p_theta },
                "states": states[c.index()],
            })
        }).collect::<Vec<_>>(),
    })
}
