//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! non-zero status if any criterion fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use doxa_core::game_model::{
    build_match_items, params_from_json, validate_pdfa, ActionSymbol, ClassParams, GameShape, Pdfa, PdfaBuilder, Word,
};
use doxa_core::pctl::{check, parse_pctl, PctlFormula, PctlResult};
use doxa_core::protocol::{
    belief_distribution, belief_raw, delta_score, distribution_at, log_to_string, next_test, parse_log, replay,
    BeliefProfile, DeltaWeights, ProtocolConfig, ProtocolEngine,
};
use doxa_core::simulator::{estimate_until, run_rng, simulate_protocol, SimulationConfig, SimulationReport, WalkTable};
use doxa_core::trace_logic::{
    check_stop, detect_max_tests, detect_oscillation, detect_steady_state, ClassTrace, StopConfig, StopReason,
};
use doxa_core::PatientClass::{self, *};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn table1_stochasticity() -> Outcome {
    let text = std::fs::read_to_string(data_dir().join("class_params.json")).map_err(|e| e.to_string())?;
    let file = params_from_json(&text).map_err(|e| e.to_string())?;
    let mut sums = Vec::new();
    for c in PatientClass::ALL {
        let p = file.get(&c.symbol().to_string()).ok_or(format!("class {c} missing"))?;
        ensure(*p == ClassParams::table1(c), format!("class {c} differs from the built-in table"))?;
        let sum = p.p_alpha + p.p_beta + p.p_gamma + p.p_theta;
        ensure(sum == 1.0, format!("class {c} sums to {sum:?}"))?;
        let model = build_match_items(*p, GameShape::default()).map_err(|e| e.to_string())?;
        let report = validate_pdfa(&model);
        ensure(report.is_valid(), format!("class {c}: {:?}", report.violations.first()))?;
        sums.push(format!("{c}={sum}"));
    }
    Ok(sums.join(" "))
}

fn delta_regression() -> Outcome {
    let w = DeltaWeights::default();
    let score = |s: &str| delta_score(&s.parse::<Word>().unwrap(), &w).unwrap();
    let cases = [("aaaaaaaaaa", 0.0), ("ababababab", 5.0), ("bggbbbgbbbbbgb", 10.0), ("t", 10.0), ("aaaaabgt", 10.0)];
    for (word, want) in cases {
        let got = score(word);
        ensure(got == want, format!("Δ({word}) = {got}, expected {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = rng.gen_range(0..30);
        let mut actions: Vec<ActionSymbol> = (0..n).map(|_| ActionSymbol::ALL[rng.gen_range(0..3)]).collect();
        actions.push(ActionSymbol::Theta);
        let got = delta_score(&Word::new(actions).unwrap(), &w).unwrap();
        ensure(got == 10.0, "word with θ did not score 10")?;
    }
    Ok("0, 5, 10, 10 exact".into())
}

/// Independent transcription of the factor table.
fn oracle_belief(meta: PatientClass, target: PatientClass, x: f64) -> f64 {
    let (h, big): ([f64; 7], [f64; 7]) = match meta {
        Healthy => ([2.016, 0.5, -3.6, 1.0, 0.7, 0.0, 0.0], [6.256, 2.4, 2.1, -1.0, 0.24, 1.0, 0.0]),
        MildNcd => ([0.0, 1.0, 1.2, 0.3, 2.2, 0.0, -1.0], [0.0, -1.0, 1.0, 1.4, 0.8, 1.0, -6.3]),
        MajorNcd => ([0.0, -0.1, 0.1, 0.1, -2.4, 1.0, 1.1], [3.769, -6.6, 0.4, 0.01, 1.6, 1.0, 0.4]),
    };
    let f = |k: &[f64; 7], below: f64| if x < k[0] { below } else { k[5] + k[1] / (k[2] + k[3] * (k[4] * x + k[6]).exp()) };
    match target {
        Healthy => f(&h, 1.0),
        MajorNcd => f(&big, 0.0),
        MildNcd => 1.0 - f(&h, 1.0) - f(&big, 0.0),
    }
}

fn belief_regression() -> Outcome {
    let p = BeliefProfile::default();
    let raw = |q, t, x| belief_raw(&p, q, t, x).unwrap();
    let checks = [
        ("B_A_M(0,h)", raw(MajorNcd, Healthy, 0.0), 0.75, 0.005),
        ("B_A_m(5,m)", raw(MildNcd, MildNcd, 5.0), 0.8765, 0.002),
        ("B_A_h(10,M)", raw(Healthy, MajorNcd, 10.0), 0.72, 0.02),
        ("B_A_h(10,m)", raw(Healthy, MildNcd, 10.0), 0.28, 0.02),
    ];
    let mut parts = Vec::new();
    for (name, got, want, tol) in checks {
        ensure((got - want).abs() <= tol, format!("{name} = {got}, expected {want} ± {tol}"))?;
        parts.push(format!("{name}={got:.4}"));
    }
    let mut worst: f64 = 0.0;
    for q in PatientClass::ALL {
        for t in PatientClass::ALL {
            for i in 0..=10_000 {
                let x = i as f64 * 1e-3;
                worst = worst.max((raw(q, t, x) - oracle_belief(q, t, x)).abs());
            }
        }
    }
    ensure(worst <= 1e-9, format!("evaluator disagreement {worst:e}"))?;
    parts.push(format!("max |lib - oracle| = {worst:e}"));
    Ok(parts.join(", "))
}

fn trace_classifications() -> Outcome {
    let p = BeliefProfile::default();
    let cases = [
        (Healthy, "bggbbbgbbbbbgb", MajorNcd),
        (MajorNcd, "aaaaaaaaaa", Healthy),
        (MildNcd, "ababababab", MildNcd),
    ];
    let mut parts = Vec::new();
    for (meta, word, want) in cases {
        let d = belief_distribution(&p, meta, &word.parse().unwrap()).map_err(|e| e.to_string())?.distribution;
        let got = next_test(&d, meta);
        ensure(got == want, format!("{} with {word} -> {got}, expected {want}", meta.test_name()))?;
        parts.push(format!("{}->{got}", meta.test_name()));
    }
    Ok(parts.join(" "))
}

fn normalization_sweep() -> Outcome {
    let p = BeliefProfile::default();
    let mut worst: f64 = 0.0;
    let mut clamped = 0;
    for q in PatientClass::ALL {
        for i in 0..=10_000 {
            let x = i as f64 * 1e-3;
            let (d, c) = distribution_at(&p, q, x).map_err(|e| e.to_string())?;
            clamped += c as usize;
            worst = worst.max((d.sum() - 1.0).abs());
            for t in PatientClass::ALL {
                ensure((0.0..=1.0).contains(&d.get(t)), format!("{} at {x}: {t} = {}", q.test_name(), d.get(t)))?;
            }
        }
    }
    ensure(worst <= 1e-9, format!("sum off by {worst:e}"))?;
    Ok(format!("30003 points, max |sum - 1| = {worst:e}, {clamped} clamped"))
}

fn class_models() -> Vec<Pdfa> {
    PatientClass::ALL
        .iter()
        .map(|&c| build_match_items(ClassParams::table1(c), GameShape::default()).unwrap())
        .collect()
}

fn final_reachability() -> Outcome {
    let f = parse_pctl("P =1 [F (a1 or a2)]").unwrap();
    for (c, m) in PatientClass::ALL.iter().zip(class_models()) {
        let r = check(&m, &f, m.initial()).map_err(|e| e.to_string())?;
        ensure(r == PctlResult::Verdict(true), format!("{c}: {r:?}"))?;
    }
    Ok("holds on h, m, M".into())
}

fn monte_carlo_oracle() -> Outcome {
    let props = ["P =? [F a2]", "P =? [(not b) U a1]"];
    let mut parts = Vec::new();
    for (c, m) in PatientClass::ALL.iter().zip(class_models()) {
        for text in props {
            let f = parse_pctl(text).unwrap();
            let exact = check(&m, &f, m.initial()).map_err(|e| e.to_string())?.probability().unwrap();
            let PctlFormula::Prob { path, .. } = &f else { unreachable!() };
            let (a, b) = match path.as_ref() {
                PctlFormula::Future(b) => (PctlFormula::True, b.as_ref().clone()),
                PctlFormula::Until(a, b) => (a.as_ref().clone(), b.as_ref().clone()),
                _ => unreachable!(),
            };
            let est = estimate_until(&m, &a, &b, 1_000_000, 20_240_601).map_err(|e| e.to_string())?;
            ensure(
                est.agrees(exact, 3.0),
                format!("{c} {text}: checker {exact}, estimate {} ± {}", est.estimate, est.std_error),
            )?;
            let se = est.std_error.max((exact * (1.0 - exact) / est.runs as f64).sqrt());
            parts.push(format!("{c}:{:.2}σ", (est.estimate - exact).abs() / se));
        }
    }
    Ok(parts.join(" "))
}

fn random_dtmc(rng: &mut ChaCha8Rng) -> Pdfa {
    let mut b = PdfaBuilder::new();
    let ids: Vec<_> = (0..8).map(|i| b.state(&format!("s{i}"))).collect();
    b.set_initial(ids[0]);
    for (i, &s) in ids.iter().enumerate() {
        let k = rng.gen_range(1..=4);
        let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for (j, w) in weights.iter().enumerate() {
            let to = ids[rng.gen_range(0..8)];
            let a = ActionSymbol::ALL[j];
            b.transition(s, a, to, w / total).unwrap();
        }
        if i == 0 || rng.gen_bool(0.7) {
            b.label(s, "p");
        }
        if i == 7 || rng.gen_bool(0.2) {
            b.label(s, "q");
        }
    }
    b.build().unwrap()
}

/// Probability mass of `p U q` decided within `depth` steps, summed over
/// all paths of that length (paths sharing a prefix end state are summed
/// together), and the mass of paths still undecided at that depth.
/// Mass sitting in states that cannot reach `q` through `p` states is
/// dropped: it can never contribute.
fn enumerate_until(m: &Pdfa, depth: usize) -> (f64, f64) {
    let n = m.num_states();
    let mut hopeful: Vec<bool> = m.state_ids().map(|s| m.has_label(s, "q")).collect();
    loop {
        let mut changed = false;
        for s in m.state_ids() {
            if !hopeful[s.0] && m.has_label(s, "p") && m.successor_distribution(s).iter().any(|(t, _)| hopeful[t.0]) {
                hopeful[s.0] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut mass = vec![0.0; n];
    mass[m.initial().0] = 1.0;
    let mut decided = 0.0;
    for step in 0..=depth {
        let mut next = vec![0.0; n];
        for s in m.state_ids() {
            let x = mass[s.0];
            if x == 0.0 {
                continue;
            }
            if m.has_label(s, "q") {
                decided += x;
                mass[s.0] = 0.0;
            } else if !m.has_label(s, "p") || !hopeful[s.0] {
                mass[s.0] = 0.0;
            } else if step < depth {
                for (t, p) in m.successor_distribution(s) {
                    next[t.0] += x * p;
                }
            }
        }
        if step < depth {
            mass = next;
        }
    }
    (decided, mass.iter().sum())
}

fn brute_force_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f = parse_pctl("P =? [p U q]").unwrap();
    let mut worst: f64 = 0.0;
    let mut widest: f64 = 0.0;
    let mut total_width = 0.0;
    let mut deep_widest: f64 = 0.0;
    for n in 0..100 {
        let m = random_dtmc(&mut rng);
        let got = check(&m, &f, m.initial()).map_err(|e| e.to_string())?.probability().unwrap();
        let (lower, undecided) = enumerate_until(&m, 20);
        let excess = if got < lower { lower - got } else { (got - lower - undecided).max(0.0) };
        worst = worst.max(excess);
        widest = widest.max(undecided);
        total_width += undecided;
        let (deep_lower, deep_undecided) = enumerate_until(&m, 2000);
        deep_widest = deep_widest.max(deep_undecided);
        ensure(
            got >= deep_lower - 1e-6 && got <= deep_lower + deep_undecided + 1e-6,
            format!("chain {n}: checker {got}, depth-2000 enumeration [{deep_lower}, {}]", deep_lower + deep_undecided),
        )?;
        ensure(
            excess <= 1e-6,
            format!("chain {n}: checker {got}, enumeration [{lower}, {}]", lower + undecided),
        )?;
    }
    Ok(format!("100 chains, worst excess {worst:e}, depth-20 bound mean {:.1e} max {widest:.1e}, depth-2000 bound max {deep_widest:.1e}", total_width / 100.0))
}

fn stop_conditions() -> Outcome {
    let cfg = StopConfig::default();
    let mut n = 0;
    for a in PatientClass::ALL {
        for b in PatientClass::ALL {
            if a == b {
                continue;
            }
            let gap = PatientClass::ALL.into_iter().find(|&c| c != a && c != b).unwrap();
            let plain: Vec<_> = (0..8).map(|i| if i % 2 == 0 { a } else { b }).collect();
            let mut gapped = Vec::new();
            for (i, &c) in plain.iter().enumerate() {
                gapped.push(c);
                if i % 3 == 1 && i < 7 {
                    gapped.push(gap);
                }
            }
            for t in [plain, gapped] {
                let t = ClassTrace::new(t);
                let d = detect_oscillation(&t);
                ensure(d.stopped && d.reason == StopReason::Oscillation, format!("{t} did not oscillate"))?;
                n += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let random = |rng: &mut ChaCha8Rng, len: usize| {
        ClassTrace::new((0..len).map(|_| PatientClass::ALL[rng.gen_range(0..3)]).collect())
    };
    for _ in 0..100 {
        let t = random(&mut rng, 10);
        ensure(detect_max_tests(&t, 10).stopped, "length 10 without MaxTests")?;
        ensure(check_stop(&t, &cfg).reason == StopReason::MaxTests, "MaxTests not first")?;
        let len = rng.gen_range(0..7);
        let mut s = random(&mut rng, len).entries().to_vec();
        let c = PatientClass::ALL[rng.gen_range(0..3)];
        s.extend([c, c, c]);
        ensure(detect_steady_state(&ClassTrace::new(s), 3).stopped, "3-repeat suffix without SteadyState")?;
    }
    let pairs: Vec<(PatientClass, Regex)> = PatientClass::ALL
        .iter()
        .flat_map(|&a| PatientClass::ALL.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
        .map(|(a, b)| (a, Regex::new(&format!("^(?:{a}.*{b}.*){{4}}$")).unwrap()))
        .collect();
    for _ in 0..10_000 {
        let len = rng.gen_range(0..=15);
        let t = random(&mut rng, len);
        let s = t.to_string();
        let by_regex = pairs.iter().any(|(_, r)| r.is_match(&s));
        ensure(detect_oscillation(&t).stopped == by_regex, format!("regex oracle disagrees on {s}"))?;
    }
    Ok(format!("{n} oscillating traces, 10^4 random traces agree"))
}

fn protocol_end_to_end() -> Outcome {
    let profile = BeliefProfile::default();
    let mut total: Option<SimulationReport> = None;
    let mut rows = Vec::new();
    for t in PatientClass::ALL {
        for h in PatientClass::ALL {
            let cfg = SimulationConfig::new(t, h, 10_000, 42);
            let r = simulate_protocol(&cfg, &profile).map_err(|e| e.to_string())?;
            ensure(r.diagonal_dominates(), format!("true {t}, hypothesis {h}: row {:?}", r.row(t)))?;
            let again = simulate_protocol(&cfg, &profile).map_err(|e| e.to_string())?;
            ensure(again == r && again.to_json() == r.to_json(), format!("true {t}, hypothesis {h} not reproducible"))?;
            match &mut total {
                Some(acc) => acc.merge(&r),
                None => total = Some(r),
            }
        }
    }
    let total = total.unwrap();
    ensure(total.diagonal_dominates(), format!("pooled matrix {:?}", total.classification_matrix))?;
    for c in PatientClass::ALL {
        rows.push(format!("{c}:{:?}", total.row(c)));
    }
    Ok(rows.join(" "))
}

fn session_replay() -> Outcome {
    let engine = ProtocolEngine::new(BeliefProfile::default(), ProtocolConfig::default()).map_err(|e| e.to_string())?;
    let fresh = ProtocolEngine::new(BeliefProfile::default(), ProtocolConfig::default()).map_err(|e| e.to_string())?;
    let tables: Vec<WalkTable> = class_models().iter().map(WalkTable::new).collect();
    let mut steps = 0;
    for run in 0..1000u64 {
        let mut rng = run_rng(77, run);
        let mut s = engine.start_session(PatientClass::ALL[(run % 3) as usize]);
        let patient = &tables[(run / 3 % 3) as usize];
        while !s.is_stopped() {
            s = engine.step(&s, &patient.sample(&mut rng)).map_err(|e| e.to_string())?;
        }
        steps += s.steps.len();
        let log = parse_log(&log_to_string(&s.steps)).map_err(|e| e.to_string())?;
        let back = replay(&fresh, &log).map_err(|e| format!("run {run}: {e}"))?;
        ensure(back == s, format!("run {run}: replayed session differs"))?;
    }
    Ok(format!("1000 sessions, {steps} steps replayed"))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { name: "Table 1 stochasticity", limit: secs(1), run: table1_stochasticity },
        Criterion { name: "Δ regression", limit: secs(1), run: delta_regression },
        Criterion { name: "Belief regression", limit: None, run: belief_regression },
        Criterion { name: "Trace classifications", limit: None, run: trace_classifications },
        Criterion { name: "Belief normalization sweep", limit: secs(5), run: normalization_sweep },
        Criterion { name: "PCTL final-state reachability", limit: secs(1), run: final_reachability },
        Criterion { name: "Checker vs Monte Carlo", limit: secs(60), run: monte_carlo_oracle },
        Criterion { name: "Brute-force PCTL oracle", limit: secs(30), run: brute_force_oracle },
        Criterion { name: "Stop conditions", limit: secs(10), run: stop_conditions },
        Criterion { name: "Protocol end-to-end", limit: secs(120), run: protocol_end_to_end },
        Criterion { name: "Session replay", limit: None, run: session_replay },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS  {:<32} {:>9.2?}  {detail}", c.name, elapsed),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:<32} {:>9.2?}  {why}", c.name, elapsed);
            }
        }
    }
    println!("{} of {} acceptance criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
