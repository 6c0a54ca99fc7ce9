use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::{run_rng, WalkTable, RNG_DESCRIPTION};
use super::SimulationError;
use crate::class::PatientClass;
use crate::game_model::{build_match_items, ClassParams, GameShape};
use crate::protocol::{BeliefProfile, ProtocolConfig, ProtocolEngine};
use crate::trace_logic::{StopConfig, StopReason};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub true_class: PatientClass,
    pub hypothesis: PatientClass,
    pub runs: u64,
    pub seed: u64,
    #[serde(default)]
    pub shape: GameShape,
    #[serde(default)]
    pub stop: StopConfig,
}

impl SimulationConfig {
    pub fn new(true_class: PatientClass, hypothesis: PatientClass, runs: u64, seed: u64) -> Self {
        SimulationConfig {
            true_class,
            hypothesis,
            runs,
            seed,
            shape: GameShape::default(),
            stop: StopConfig::default(),
        }
    }
}

/// Running sums for the score observed at one test index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DeltaStats {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl DeltaStats {
    fn add(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn merge(&mut self, other: &DeltaStats) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NAN;
        }
        self.sum / self.count as f64
    }

    /// Sample standard deviation; zero for fewer than two observations.
    pub fn stddev(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub rng: String,
    pub runs: u64,
    /// `classification_matrix[true][final]`, indexed h, m, M.
    pub classification_matrix: [[u64; 3]; 3],
    /// Number of tests per protocol run.
    pub sessions_histogram: BTreeMap<usize, u64>,
    pub stop_reasons: BTreeMap<StopReason, u64>,
    /// Score statistics per test index, starting at 0.
    pub delta_by_test: Vec<DeltaStats>,
}

impl SimulationReport {
    fn empty() -> Self {
        SimulationReport {
            rng: RNG_DESCRIPTION.to_string(),
            runs: 0,
            classification_matrix: [[0; 3]; 3],
            sessions_histogram: BTreeMap::new(),
            stop_reasons: BTreeMap::new(),
            delta_by_test: Vec::new(),
        }
    }

    fn add_run(&mut self, true_class: PatientClass, run: &RunOutcome) {
        self.runs += 1;
        self.classification_matrix[true_class.index()][run.final_class.index()] += 1;
        *self.sessions_histogram.entry(run.deltas.len()).or_default() += 1;
        *self.stop_reasons.entry(run.reason).or_default() += 1;
        if self.delta_by_test.len() < run.deltas.len() {
            self.delta_by_test.resize(run.deltas.len(), DeltaStats::default());
        }
        for (s, &d) in self.delta_by_test.iter_mut().zip(&run.deltas) {
            s.add(d);
        }
    }

    /// Adds the counts of `other`, e.g. to pool several true classes.
    pub fn merge(&mut self, other: &SimulationReport) {
        self.runs += other.runs;
        for i in 0..3 {
            for j in 0..3 {
                self.classification_matrix[i][j] += other.classification_matrix[i][j];
            }
        }
        for (k, v) in &other.sessions_histogram {
            *self.sessions_histogram.entry(*k).or_default() += v;
        }
        for (k, v) in &other.stop_reasons {
            *self.stop_reasons.entry(*k).or_default() += v;
        }
        if self.delta_by_test.len() < other.delta_by_test.len() {
            self.delta_by_test.resize(other.delta_by_test.len(), DeltaStats::default());
        }
        for (s, o) in self.delta_by_test.iter_mut().zip(&other.delta_by_test) {
            s.merge(o);
        }
    }

    pub fn row(&self, true_class: PatientClass) -> [u64; 3] {
        self.classification_matrix[true_class.index()]
    }

    /// True when every non-empty row has its largest count strictly on the
    /// diagonal.
    pub fn diagonal_dominates(&self) -> bool {
        PatientClass::ALL.iter().all(|&c| {
            let row = self.row(c);
            row.iter().sum::<u64>() == 0
                || PatientClass::ALL.iter().all(|&o| o == c || row[c.index()] > row[o.index()])
        })
    }

    pub fn modal_stop_reason(&self) -> Option<StopReason> {
        self.stop_reasons.iter().max_by_key(|(r, n)| (**n, std::cmp::Reverse(**r))).map(|(r, _)| *r)
    }

    pub fn to_json(&self) -> String {
        let v = serde_json::json!({
            "rng": self.rng,
            "runs": self.runs,
            "classification_matrix": PatientClass::ALL.iter().map(|&c| {
                let row = self.row(c);
                (c.symbol().to_string(), serde_json::json!({"h": row[0], "m": row[1], "M": row[2]}))
            }).collect::<serde_json::Map<_, _>>(),
            "sessions_histogram": self.sessions_histogram.iter().map(|(k, v)| (k.to_string(), serde_json::json!(v))).collect::<serde_json::Map<_, _>>(),
            "stop_reasons": self.stop_reasons.iter().map(|(k, v)| (k.name().to_string(), serde_json::json!(v))).collect::<serde_json::Map<_, _>>(),
            "delta_by_test": self.delta_by_test.iter().enumerate().map(|(i, s)| serde_json::json!({
                "test": i + 1, "count": s.count, "mean": s.mean(), "stddev": s.stddev()
            })).collect::<Vec<_>>(),
        });
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn matrix_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["true_class", "h", "m", "M"]).expect("in-memory write");
        for c in PatientClass::ALL {
            let row = self.row(c);
            w.write_record([c.symbol().to_string(), row[0].to_string(), row[1].to_string(), row[2].to_string()])
                .expect("in-memory write");
        }
        into_string(w)
    }

    pub fn histogram_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["tests", "runs"]).expect("in-memory write");
        for (k, v) in &self.sessions_histogram {
            w.write_record([k.to_string(), v.to_string()]).expect("in-memory write");
        }
        into_string(w)
    }

    pub fn stop_reasons_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["reason", "runs"]).expect("in-memory write");
        for (k, v) in &self.stop_reasons {
            w.write_record([k.name().to_string(), v.to_string()]).expect("in-memory write");
        }
        into_string(w)
    }

    pub fn delta_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["test", "count", "mean", "stddev"]).expect("in-memory write");
        for (i, s) in self.delta_by_test.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                s.count.to_string(),
                format!("{:.9}", s.mean()),
                format!("{:.9}", s.stddev()),
            ])
            .expect("in-memory write");
        }
        into_string(w)
    }

    /// Writes `report.json` plus one CSV per table into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), SimulationError> {
        std::fs::create_dir_all(dir).map_err(|e| SimulationError::Io(format!("{}: {e}", dir.display())))?;
        for (name, body) in [
            ("report.json", self.to_json() + "\n"),
            ("matrix.csv", self.matrix_csv()),
            ("histogram.csv", self.histogram_csv()),
            ("stop_reasons.csv", self.stop_reasons_csv()),
            ("delta.csv", self.delta_csv()),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| SimulationError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

struct RunOutcome {
    final_class: PatientClass,
    reason: StopReason,
    deltas: Vec<f64>,
}

/// Patient behaviour on a given test: the Table 1 parameters of the true
/// class, whatever test is administered.
pub fn identity_behaviour(true_class: PatientClass, _test: PatientClass) -> ClassParams {
    ClassParams::table1(true_class)
}

pub fn simulate_protocol(config: &SimulationConfig, profile: &BeliefProfile) -> Result<SimulationReport, SimulationError> {
    simulate_protocol_with(config, profile, identity_behaviour)
}

/// Runs `config.runs` protocols. `behaviour(true_class, test)` gives the
/// action probabilities of the patient while playing `test`.
pub fn simulate_protocol_with<F>(
    config: &SimulationConfig,
    profile: &BeliefProfile,
    behaviour: F,
) -> Result<SimulationReport, SimulationError>
where
    F: Fn(PatientClass, PatientClass) -> ClassParams,
{
    if config.runs == 0 {
        return Err(SimulationError::ZeroRuns);
    }
    let engine = ProtocolEngine::new(
        profile.clone(),
        ProtocolConfig { shape: config.shape, stop: config.stop.clone(), ..ProtocolConfig::default() },
    )
    .map_err(SimulationError::Protocol)?;
    let tables = PatientClass::ALL
        .iter()
        .map(|&test| {
            let params = behaviour(config.true_class, test);
            build_match_items(params, config.shape).map(|m| WalkTable::new(&m))
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(SimulationError::Model)?;
    let guard = config.stop.max_tests.max(1).saturating_mul(100);
    let outcomes: Vec<Result<RunOutcome, SimulationError>> = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_rng(config.seed, run);
            let mut session = engine.start_session(config.hypothesis);
            while !session.is_stopped() {
                if session.steps.len() >= guard {
                    return Err(SimulationError::NoStop { run });
                }
                let word = tables[session.meta_state.index()].sample(&mut rng);
                session = engine.step(&session, &word).map_err(SimulationError::Protocol)?;
            }
            Ok(RunOutcome {
                final_class: session.meta_state,
                reason: session.stop.reason,
                deltas: session.steps.iter().map(|s| s.delta).collect(),
            })
        })
        .collect();
    let mut report = SimulationReport::empty();
    for o in outcomes {
        report.add_run(config.true_class, &o?);
    }
    Ok(report)
}
