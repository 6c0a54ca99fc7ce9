use std::fmt::Display;
use std::io::{BufRead, IsTerminal, Write};
use std::net::SocketAddr;
use std::path::Path;

use doxa_core::game_model::{
    build_match_items, params_from_json, read_model, validate_pdfa, write_model, ClassParams, GameShape, Pdfa, Word,
};
use doxa_core::pctl::{parse_corpus, Checker, PctlResult, DEFAULT_CORPUS};
use doxa_core::protocol::{
    append_step, read_log, replay, sample_belief_curves, BeliefProfile, ProtocolConfig, ProtocolEngine, ProtocolError,
    ProtocolSession, ProtocolStep,
};
use doxa_core::simulator::{simulate_protocol, SimulationConfig};
use doxa_core::trace_logic::{check_stop, ClassTrace, StopConfig};
use doxa_core::PatientClass;
use doxa_service::ServiceConfig;

use crate::{Cli, Command, ShapeArgs, StopArgs};

pub const OK: u8 = 0;
pub const FAILED: u8 = 1;
pub const USAGE: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn usage(message: impl Display) -> Failure {
    Failure { code: USAGE, message: message.to_string() }
}

fn domain(message: impl Display) -> Failure {
    Failure { code: FAILED, message: message.to_string() }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn shape(args: ShapeArgs) -> Result<GameShape, Failure> {
    GameShape::new(args.rounds, args.step_cap).map_err(usage)
}

fn stop_config(args: StopArgs) -> StopConfig {
    StopConfig {
        max_tests: args.max_tests,
        steady_k: args.steady_k,
        oscillation_cycles: args.cycles,
        sliding_oscillation: args.sliding,
        ..StopConfig::default()
    }
}

fn profile(path: Option<&Path>) -> Result<BeliefProfile, Failure> {
    match path {
        Some(p) => BeliefProfile::read(p).map_err(|e| at_path(p, e)),
        None => Ok(BeliefProfile::default()),
    }
}

pub fn run(cli: Cli) -> Result<u8, Failure> {
    let profile_path = cli.profile.as_deref();
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Validate { model } => validate(&model, &mut out),
        Command::Check { model, class, shape: s, properties, state } => {
            let model = match (model, class) {
                (Some(path), _) => read_model(&path).map_err(|e| at_path(&path, e))?,
                (None, Some(c)) => build_match_items(ClassParams::table1(c), shape(s)?).map_err(usage)?,
                (None, None) => return Err(usage("a model file or --class is required")),
            };
            let corpus = match properties {
                Some(p) => read_text(&p)?,
                None => DEFAULT_CORPUS.to_string(),
            };
            check(&model, &corpus, state.as_deref(), &mut out)
        }
        Command::Protocol { hypothesis, input, log, resume, shape: s, stop } => {
            let config = ProtocolConfig { shape: shape(s)?, stop: stop_config(stop), ..ProtocolConfig::default() };
            let engine = ProtocolEngine::new(profile(profile_path)?, config).map_err(usage)?;
            let session = open_session(&engine, hypothesis, &log, resume)?;
            match input {
                Some(path) => {
                    let file = std::fs::File::open(&path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                    protocol(&engine, session, std::io::BufReader::new(file), false, &log, &mut out)
                }
                None => {
                    let stdin = std::io::stdin();
                    let interactive = stdin.is_terminal();
                    protocol(&engine, session, stdin.lock(), interactive, &log, &mut out)
                }
            }
        }
        Command::Simulate { true_class, hypothesis, runs, seed, shape: s, stop, out: dir } => {
            let mut config = SimulationConfig::new(true_class, hypothesis, runs, seed);
            config.shape = shape(s)?;
            config.stop = stop_config(stop);
            let report = simulate_protocol(&config, &profile(profile_path)?).map_err(usage)?;
            if let Some(dir) = dir {
                report.write_dir(&dir).map_err(usage)?;
            }
            writeln!(out, "rng: {}", report.rng).map_err(io)?;
            writeln!(out, "runs: {}", report.runs).map_err(io)?;
            writeln!(out, "\n# classification (true class by final class)\n{}", report.matrix_csv()).map_err(io)?;
            writeln!(out, "# stop reasons\n{}", report.stop_reasons_csv()).map_err(io)?;
            writeln!(out, "# tests per session\n{}", report.histogram_csv()).map_err(io)?;
            write!(out, "# delta by test\n{}", report.delta_csv()).map_err(io)?;
            Ok(OK)
        }
        Command::Monitor { trace, stop } => {
            let trace = ClassTrace::read(&trace).map_err(|e| at_path(&trace, e))?;
            let decision = check_stop(&trace, &stop_config(stop));
            writeln!(out, "{}", serde_json::to_string(&decision).expect("decision serializes")).map_err(io)?;
            Ok(OK)
        }
        Command::Curves { meta, step, out: file } => {
            let csv = curves_csv(&profile(profile_path)?, meta, step)?;
            match file {
                Some(path) => std::fs::write(&path, csv).map_err(|e| usage(format!("{}: {e}", path.display())))?,
                None => out.write_all(csv.as_bytes()).map_err(io)?,
            }
            Ok(OK)
        }
        Command::Serve { host, port, allow_external, data_dir, cors_origins, shape: s, stop } => {
            if !host.is_loopback() && !allow_external {
                return Err(usage(format!("refusing to bind to {host}; pass --allow-external to serve beyond loopback")));
            }
            let mut config = ServiceConfig {
                data_dir,
                profile: profile(profile_path)?,
                protocol: ProtocolConfig { shape: shape(s)?, stop: stop_config(stop), ..ProtocolConfig::default() },
                ..ServiceConfig::default()
            };
            if !cors_origins.is_empty() {
                config.cors_origins = cors_origins;
            }
            drop(out);
            serve(config, SocketAddr::new(host, port))
        }
        Command::ExportModels { out: dir, params, shape: s } => {
            let shape = shape(s)?;
            let params = match params {
                Some(p) => {
                    let file = params_from_json(&read_text(&p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                    PatientClass::ALL
                        .iter()
                        .map(|c| {
                            file.get(&c.symbol().to_string())
                                .copied()
                                .ok_or_else(|| usage(format!("{}: no parameters for class `{}`", p.display(), c.symbol())))
                        })
                        .collect::<Result<Vec<_>, _>>()?
                }
                None => PatientClass::ALL.iter().map(|&c| ClassParams::table1(c)).collect(),
            };
            std::fs::create_dir_all(&dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
            for (c, p) in PatientClass::ALL.iter().zip(params) {
                let model = build_match_items(p, shape).map_err(usage)?;
                let path = dir.join(format!("{}.json", c.test_name()));
                write_model(&path, &model).map_err(|e| at_path(&path, e))?;
                writeln!(out, "{}", path.display()).map_err(io)?;
            }
            Ok(OK)
        }
    }
}

/// Usage failure naming `path`, unless the message already does.
fn at_path(path: &Path, e: impl Display) -> Failure {
    let msg = e.to_string();
    let shown = path.display().to_string();
    if msg.contains(&shown) {
        usage(msg)
    } else {
        usage(format!("{shown}: {msg}"))
    }
}

fn io(e: std::io::Error) -> Failure {
    usage(format!("write failed: {e}"))
}

pub fn validate(path: &Path, out: &mut impl Write) -> Result<u8, Failure> {
    let model = read_model(path).map_err(|e| at_path(path, e))?;
    let report = validate_pdfa(&model);
    if report.is_valid() {
        writeln!(out, "{}: valid ({} states)", path.display(), model.num_states()).map_err(io)?;
        return Ok(OK);
    }
    writeln!(out, "{}: {} violation(s)", path.display(), report.violations.len()).map_err(io)?;
    for v in &report.violations {
        writeln!(out, "  {v}").map_err(io)?;
    }
    Ok(FAILED)
}

/// The CSV cell for a result and whether it counts as holding.
fn result_cell(result: PctlResult) -> (String, bool) {
    match result {
        PctlResult::Probability(p) => (format!("{p:.9}"), true),
        PctlResult::Verdict(v) => (v.to_string(), v),
    }
}

pub fn check(model: &Pdfa, corpus: &str, state: Option<&str>, out: &mut impl Write) -> Result<u8, Failure> {
    let properties = parse_corpus(corpus).map_err(|e| usage(format!("properties: {e}")))?;
    let at = match state {
        Some(name) => model.state_id(name).ok_or_else(|| usage(format!("unknown state `{name}`")))?,
        None => model.initial(),
    };
    let checker = Checker::new(model);
    let mut rows = Vec::new();
    let mut all_hold = true;
    for p in &properties {
        let result = checker.check(&p.formula, at).map_err(|e| usage(format!("{}: {e}", p.name)))?;
        let (cell, holds) = result_cell(result);
        all_hold &= holds;
        rows.push((p.name.clone(), cell));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["name", "state", "result"]).map_err(usage)?;
    for (name, cell) in rows {
        w.write_record([name.as_str(), model.state_name(at), cell.as_str()]).map_err(usage)?;
    }
    out.write_all(&w.into_inner().expect("in-memory CSV")).map_err(io)?;
    Ok(if all_hold { OK } else { FAILED })
}

fn open_session(
    engine: &ProtocolEngine,
    hypothesis: Option<PatientClass>,
    log: &Path,
    resume: bool,
) -> Result<ProtocolSession, Failure> {
    let existing = log.metadata().map(|m| m.len() > 0).unwrap_or(false);
    if resume {
        let steps = read_log(log).map_err(|e| at_path(log, e))?;
        let Some(first) = steps.first() else {
            return Err(usage(format!("{}: nothing to resume", log.display())));
        };
        if hypothesis.is_some_and(|h| h != first.meta_state) {
            return Err(usage(format!("{}: the logged session started at {}", log.display(), first.meta_state.test_name())));
        }
        return replay(engine, &steps).map_err(|e| usage(format!("{}: {e}", log.display())));
    }
    if existing {
        return Err(usage(format!(
            "{} already holds a session; pass --resume to continue it or choose another --log",
            log.display()
        )));
    }
    Ok(engine.start_session(hypothesis.expect("hypothesis is required without --resume")))
}

pub fn format_step(index: usize, step: &ProtocolStep) -> String {
    let b = &step.beliefs;
    format!(
        "test {} {} word {} delta {:.9} beliefs h={:.9} m={:.9} M={:.9} next {} stop {}",
        index + 1,
        step.meta_state.test_name(),
        step.word,
        step.delta,
        b.h,
        b.m,
        b.major,
        step.chosen.test_name(),
        step.stop.reason.name()
    )
}

pub fn protocol(
    engine: &ProtocolEngine,
    mut session: ProtocolSession,
    input: impl BufRead,
    interactive: bool,
    log: &Path,
    out: &mut impl Write,
) -> Result<u8, Failure> {
    let prompt = |s: &ProtocolSession| {
        if interactive {
            eprint!("{}> ", s.next_test().test_name());
            let _ = std::io::stderr().flush();
        }
    };
    if session.is_stopped() {
        writeln!(out, "stopped: {}", session.stop.reason.name()).map_err(io)?;
    } else {
        prompt(&session);
    }
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| usage(format!("input: {e}")))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            if !session.is_stopped() {
                prompt(&session);
            }
            continue;
        }
        if session.is_stopped() {
            return Err(domain(format!(
                "line {}: the session has stopped ({}); further input refused",
                n + 1,
                session.stop.reason.name()
            )));
        }
        let stepped = text
            .parse::<Word>()
            .map_err(|e| e.to_string())
            .and_then(|w| engine.step(&session, &w).map_err(|e: ProtocolError| e.to_string()));
        match stepped {
            Ok(next) => {
                session = next;
                let step = session.steps.last().expect("step just taken");
                append_step(log, step).map_err(|e| at_path(log, e))?;
                writeln!(out, "{}", format_step(session.steps.len() - 1, step)).map_err(io)?;
                if session.is_stopped() {
                    writeln!(out, "stopped: {}", session.stop.reason.name()).map_err(io)?;
                } else {
                    prompt(&session);
                }
            }
            Err(e) if interactive => {
                eprintln!("invalid word: {e}");
                prompt(&session);
            }
            Err(e) => return Err(usage(format!("line {}: {e}", n + 1))),
        }
    }
    Ok(OK)
}

pub fn curves_csv(profile: &BeliefProfile, meta: PatientClass, step: f64) -> Result<String, Failure> {
    let rows = sample_belief_curves(profile, meta, step).map_err(usage)?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["delta", "h", "m", "M"]).map_err(usage)?;
    for r in rows {
        w.write_record([r.delta, r.h, r.m, r.major].map(|x| format!("{x:.9}"))).map_err(usage)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8"))
}

fn serve(config: ServiceConfig, addr: SocketAddr) -> Result<u8, Failure> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(usage)?;
    runtime
        .block_on(doxa_service::run(config, addr, |bound| {
            println!("listening on http://{bound}");
            let _ = std::io::stdout().flush();
        }))
        .map_err(usage)?;
    Ok(OK)
}
