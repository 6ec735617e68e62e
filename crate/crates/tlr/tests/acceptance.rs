//! Acceptance checks. Prints one PASS/FAIL line per criterion.
//! `TLR_ACCEPTANCE=1,3` runs a subset; `TLR_ACCEPTANCE_STRICT=1` exits
//! non-zero when any fails, otherwise the remaining test targets still run.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng as _;
use tlr::clock::SystemClock;
use tlr::drivers::{gen_demos, run_ablation_regularization, AblationConfig, TrainSetup, ABLATION_PREDICATES};
use tlr::parallel::{default_threads, par_map};
use tlr_core::extract::{
    concretize, concretize_with_warnings, equivalent, simplify, theorem1_construct, theorem1_target,
    to_condition_action_pairs, Abstraction, Connective, Pair, RuleSet,
};
use tlr_core::formula::{atom, Formula};
use tlr_core::network::{EnsembleStructure, LogicOp, LogicStructure, Model, TemporalOp};
use tlr_core::predicates::{register_builtin_predicates, PredicateKind};
use tlr_core::rng::{seeded, Rng};
use tlr_core::scoring::{Monitor, Scorer};
use tlr_core::semantics::{eval_hard, eval_sequence, eval_soft, Semantics, Signals, DEFAULT_KAPPA};
use tlr_core::sim::demos::demo_trace;
use tlr_core::sim::{
    at_sampler, comfort_teacher, full_rules, generate_scenario, run_closed_loop, teacher_registry,
    three_rule_teacher, AtSampler, DemoConfig, LoopConfig, NullClock, RandomProposer, ScenarioKind, ScenarioSpec,
};
use tlr_core::trace::{horizon_steps, DEFAULT_HORIZON_S};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("P{i}")).collect()
}

fn within(elapsed: f64, limit_s: f64) -> String {
    format!("{elapsed:.1}s of {limit_s:.0}s")
}

// 1. reverse-mode gradients against central differences

fn c1_gradients() -> Outcome {
    let t0 = Instant::now();
    let reg = register_builtin_predicates();
    let ids = reg.ids();
    let mut rng = seeded(1);
    let (mut checked, mut ties, mut failures) = (0usize, 0usize, Vec::new());
    let sem = Semantics::soft(DEFAULT_KAPPA).unwrap();
    let h = 1e-5;
    for inst in 0..100u64 {
        let n = rng.gen_range(3..=5);
        let depth = rng.gen_range(1..=2);
        let mut pool = ids.clone();
        let mut chosen = Vec::new();
        for _ in 0..n {
            chosen.push(pool.swap_remove(rng.gen_range(0..pool.len())));
        }
        let mut s = EnsembleStructure::build(&chosen, depth, rng.gen_range(1..=2), inst).unwrap();
        let w: Vec<f64> = s.flat_weights().iter().map(|w| w * rng.gen_range(1.0..8.0)).collect();
        s.set_flat_weights(&w).unwrap();
        let refs: Vec<&str> = chosen.iter().map(String::as_str).collect();
        let mut preds = reg.subset(&refs).unwrap();
        for p in preds.iter_mut() {
            for (th, spec) in p.theta.iter_mut().zip(&p.params) {
                *th = rng.gen_range(spec.lower..=spec.upper);
            }
        }
        let mut model = Model::new(s, preds).unwrap();
        let kind = ScenarioKind::ALL[rng.gen_range(0..ScenarioKind::ALL.len())];
        let scn = generate_scenario(ScenarioSpec::new(kind, inst));
        let len = horizon_steps(scn.rate_hz, DEFAULT_HORIZON_S) + 1 + 20;
        let plan = RandomProposer::new(&scn, 1, len, inst).sample(&scn.ego);
        let trace = demo_trace(&scn, &plan, 20).unwrap();
        let traces = [trace];
        let (_, g) = model.network_gradient(&traces, sem).unwrap();

        let probe = |model: &Model| model.forward(&traces[0], sem).unwrap();
        let f0 = probe(&model);
        let mut check = |label: String, an: f64, plus: f64, minus: f64| {
            let fd = (plus - minus) / (2.0 * h);
            let (dp, dm) = ((plus - f0) / h, (f0 - minus) / h);
            let scale = fd.abs().max(an.abs()).max(1e-6);
            if (dp - dm).abs() > 1e-2 * dp.abs().max(dm.abs()).max(1e-3) {
                ties += 1;
                return;
            }
            checked += 1;
            if (fd - an).abs() / scale >= 1e-4 {
                failures.push(format!("{label}: fd {fd:.6e} vs {an:.6e}"));
            }
        };
        let w0 = model.structure.flat_weights();
        for k in 0..w0.len() {
            let mut w = w0.clone();
            w[k] = w0[k] + h;
            model.structure.set_flat_weights(&w).unwrap();
            let p = probe(&model);
            w[k] = w0[k] - h;
            model.structure.set_flat_weights(&w).unwrap();
            let m = probe(&model);
            model.structure.set_flat_weights(&w0).unwrap();
            check(format!("instance {inst} weight {k}"), g.weights[k], p, m);
        }
        let th0 = model.theta();
        for k in 0..th0.len() {
            let mut th = th0.clone();
            th[k] = th0[k] + h;
            model.set_theta(&th);
            let p = probe(&model);
            th[k] = th0[k] - h;
            model.set_theta(&th);
            let m = probe(&model);
            model.set_theta(&th0);
            check(format!("instance {inst} theta {k}"), g.theta[k], p, m);
        }
    }
    let el = t0.elapsed().as_secs_f64();
    let mut detail = format!(
        "{checked} components checked, {ties} near ties skipped, {} mismatches, {}",
        failures.len(),
        within(el, 120.0)
    );
    if let Some(f) = failures.first() {
        detail.push_str(&format!("; first: {f}"));
    }
    outcome(failures.is_empty() && el < 120.0, detail)
}

// 2. semantics identities and soft-to-hard gap

fn random_formula(rng: &mut Rng, atoms: &[&str], depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return atom(atoms[rng.gen_range(0..atoms.len())]);
    }
    let sub = |rng: &mut Rng| random_formula(rng, atoms, depth - 1);
    match rng.gen_range(0..5) {
        0 => sub(rng).not(),
        1 => sub(rng).g(),
        2 => sub(rng).f(),
        3 => sub(rng).and(sub(rng)),
        _ => sub(rng).or(sub(rng)),
    }
}

fn random_signals(rng: &mut Rng, atoms: &[&str], len: usize) -> Signals {
    atoms
        .iter()
        .map(|a| (a.to_string(), (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()))
        .collect()
}

/// Strong until by direct recursion over the suffix.
fn strong_until(l: &[f64], r: &[f64], t: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let mut prefix = f64::INFINITY;
    for k in t..l.len() {
        best = best.max(r[k].min(prefix));
        prefix = prefix.min(l[k]);
    }
    best
}

fn c2_semantics() -> Outcome {
    let t0 = Instant::now();
    let atoms = ["A", "B", "C"];
    let mut rng = seeded(2);
    let (mut de_morgan, mut double_neg, mut until) = (0, 0, 0);
    let mut gap: f64 = 0.0;
    for _ in 0..1000 {
        let f = random_formula(&mut rng, &atoms, 4);
        let g = random_formula(&mut rng, &atoms, 4);
        let s = random_signals(&mut rng, &atoms, 15);
        let t = rng.gen_range(0..15);
        let ev = |x: &Formula| eval_hard(x, &s, t).unwrap();
        let nand = ev(&f.clone().and(g.clone()).not()) == ev(&f.clone().not().or(g.clone().not()));
        let nor = ev(&f.clone().or(g.clone()).not()) == ev(&f.clone().not().and(g.clone().not()));
        let ngf = ev(&f.clone().g().not()) == ev(&f.clone().not().f());
        de_morgan += usize::from(!(nand && nor && ngf));
        double_neg += usize::from(ev(&f.clone().not().not()) != ev(&f));
        let lf = eval_sequence(&f, &s, Semantics::Hard).unwrap();
        let lg = eval_sequence(&g, &s, Semantics::Hard).unwrap();
        let derived = ev(&g.clone().f().and(f.clone().or(g.clone()).g()));
        until += usize::from(derived != strong_until(&lf, &lg, t));
        gap = gap.max((eval_soft(&f, &s, t, 100.0).unwrap() - ev(&f)).abs());
    }
    let el = t0.elapsed().as_secs_f64();
    outcome(
        de_morgan == 0 && double_neg == 0 && until == 0 && gap < 0.05 && el < 60.0,
        format!(
            "1000 pairs: De Morgan mismatches {de_morgan}, double negation {double_neg}, until derivation {until}; max soft gap at kappa 100 {gap:.4}; {}",
            within(el, 60.0)
        ),
    )
}

// 3. concretize, simplify and pair extraction keep the truth table

fn kinds_of(id: &str) -> Option<PredicateKind> {
    let k: usize = id.trim_start_matches('P').parse().ok()?;
    Some(if k % 2 == 0 { PredicateKind::Condition } else { PredicateKind::Action })
}

fn worked_example() -> LogicStructure {
    let m = 5.0;
    let mut s = LogicStructure::build(&names(3), 1, 0).unwrap();
    s.set_temporal(0, 0, TemporalOp::G, m);
    s.set_temporal(0, 1, TemporalOp::Id, m);
    s.set_temporal(0, 2, TemporalOp::F, m);
    let negs = [(false, true), (true, false), (true, false)];
    let ops = [LogicOp::Or, LogicOp::And, LogicOp::And];
    for c in 0..3 {
        s.set_negation(c, 0, negs[c].0, m);
        s.set_negation(c, 1, negs[c].1, m);
        s.set_cluster(c, ops[c], m);
    }
    s.set_aggregation(0, LogicOp::Or, m);
    s.set_aggregation(1, LogicOp::Or, m);
    s
}

fn disjuncts(f: &Formula, out: &mut BTreeSet<Formula>) {
    match f {
        Formula::Or(a, b) => {
            disjuncts(a, out);
            disjuncts(b, out);
        }
        other => {
            out.insert(other.clone());
        }
    }
}

fn c3_simplification() -> Outcome {
    let t0 = Instant::now();
    let mut rng = seeded(3);
    let (mut tested, mut over, mut bad) = (0, 0, Vec::new());
    for inst in 0..500u64 {
        let n = rng.gen_range(2..=6);
        let depth = rng.gen_range(1..=2);
        let k = rng.gen_range(1..=2);
        let mut s = EnsembleStructure::build(&names(n), depth, k, inst).unwrap();
        let w: Vec<f64> = s.flat_weights().iter().map(|w| w * rng.gen_range(1.0..20.0)).collect();
        s.set_flat_weights(&w).unwrap();
        let f = concretize(&s);
        if Abstraction::of(&[&f]).map(|a| a.len() > 8).unwrap_or(true) {
            over += 1;
            continue;
        }
        tested += 1;
        let simple = simplify(&f).unwrap();
        let rs = to_condition_action_pairs(&simple, kinds_of).unwrap();
        if !(equivalent(&simple, &f).unwrap() && equivalent(&rs.formula(), &f).unwrap()) {
            bad.push(inst);
        }
    }
    let example = concretize(&EnsembleStructure::from(worked_example()));
    let rs = to_condition_action_pairs(&simplify(&example).unwrap(), |id| {
        Some(if id == "P2" { PredicateKind::Condition } else { PredicateKind::Action })
    })
    .unwrap();
    let mut got = BTreeSet::new();
    let example_ok = rs.pairs.len() == 1 && rs.pairs[0].conditions == vec![atom("P2")] && {
        disjuncts(&rs.pairs[0].action, &mut got);
        got == BTreeSet::from([atom("P1").g(), atom("P3").f()])
    };
    let el = t0.elapsed().as_secs_f64();
    outcome(
        bad.is_empty() && example_ok && el < 120.0,
        format!(
            "{tested} structures within 8 atoms, {} not equivalent ({over} over 8 atoms skipped); worked example: {}; {}",
            bad.len(),
            rs.render().trim(),
            within(el, 120.0)
        ),
    )
}

// 4. constructive coverage of condition-action pairs

fn c4_construction() -> Outcome {
    let t0 = Instant::now();
    let (mut cases, mut bad) = (0, Vec::new());
    for n_cond in 0..=3usize {
        // a lone action needs a one-input structure, which has no cluster
        for n_act in (if n_cond == 0 { 2 } else { 1 })..=2usize {
            for conn in [Connective::And, Connective::Or] {
                for (depth, temporal) in [(1, false), (1, true), (2, true)] {
                    {
                        let mut ids: Vec<String> = (0..n_cond).map(|i| format!("c{i}")).collect();
                        ids.extend((0..n_act).map(|i| format!("a{i}")));
                        let wrap = |id: &str, k: usize| match (temporal, depth, k % 3) {
                            (true, 2, 0) => atom(id).f().g(),
                            (true, _, 0) => atom(id).g(),
                            (true, _, 1) => atom(id).f(),
                            _ => atom(id),
                        };
                        let conds: Vec<Formula> = (0..n_cond).map(|i| wrap(&ids[i], i)).collect();
                        let acts: Vec<Formula> = (0..n_act).map(|i| wrap(&ids[n_cond + i], i + 1)).collect();
                        let s = LogicStructure::build(&ids, depth, cases as u64).unwrap();
                        cases += 1;
                        let label = format!("{n_cond} conditions, {n_act} actions, {conn:?}, depth {depth}");
                        let built = match theorem1_construct(&s, &conds, &acts, conn) {
                            Ok(b) => b,
                            Err(e) => {
                                bad.push(format!("{label}: {e}"));
                                continue;
                            }
                        };
                        let (f, warnings) = concretize_with_warnings(&EnsembleStructure::from(built));
                        let target = theorem1_target(&conds, &acts, conn);
                        let kinds = |id: &str| {
                            Some(if id.starts_with('c') { PredicateKind::Condition } else { PredicateKind::Action })
                        };
                        let pairs = simplify(&f).and_then(|s| to_condition_action_pairs(&s, kinds));
                        let ok = warnings.is_empty()
                            && equivalent(&f, &target).unwrap_or(false)
                            && pairs.map(|rs| equivalent(&rs.formula(), &target).unwrap_or(false)).unwrap_or(false);
                        if !ok {
                            bad.push(format!("{label}: got {f}"));
                        }
                    }
                }
            }
        }
    }
    let el = t0.elapsed().as_secs_f64();
    let mut detail = format!("{cases} constructions, {} not truth-table equal; {}", bad.len(), within(el, 60.0));
    if let Some(b) = bad.first() {
        detail.push_str(&format!("; first: {b}"));
    }
    outcome(bad.is_empty() && el < 60.0, detail)
}

// 5. comfort threshold recovery

fn c5_parameter_recovery(threads: usize) -> Outcome {
    let t0 = Instant::now();
    let teacher = comfort_teacher();
    let want = teacher.theta.iter().find(|(id, _)| id == "Comfortable").unwrap().1.clone();
    let seeds: Vec<u64> = (0..5).collect();
    let runs = par_map(threads, &seeds, |&seed| {
        let specs: Vec<ScenarioSpec> = ScenarioKind::ALL.iter().map(|&k| ScenarioSpec::new(k, seed)).collect();
        let cfg = DemoConfig { seed, ..DemoConfig::default() };
        let (data, _) = gen_demos(&teacher, &specs, 2000, &cfg, 1).unwrap();
        let mut setup = TrainSetup::new(&["Comfortable", "InLane", "InDrivable"], 2, 1);
        setup.cfg.seed = seed;
        let (model, _) = setup.train(&data).unwrap();
        model.predicates.iter().find(|p| p.id == "Comfortable").unwrap().theta.clone()
    });
    let mean: Vec<f64> = (0..want.len())
        .map(|i| runs.iter().map(|r| r[i]).sum::<f64>() / runs.len() as f64)
        .collect();
    // the last component is the lateral-right threshold
    let tol = [0.25, 0.25, 0.25, 0.5];
    let ok = (0..want.len()).all(|i| (mean[i] - want[i]).abs() <= tol[i]);
    let el = t0.elapsed().as_secs_f64();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        ok && el < 900.0,
        format!("teacher [{}], mean recovered [{}] over 5 seeds; {}", fmt(&want), fmt(&mean), within(el, 900.0)),
    )
}

// 6. regularization ablation

fn c6_ablation(threads: usize) -> Outcome {
    let t0 = Instant::now();
    let cfg = AblationConfig {
        grid: vec![(0.0, 0.0), (1e-5, 1e-3)],
        threads,
        ..AblationConfig::default()
    };
    let cells = run_ablation_regularization(&three_rule_teacher(), &cfg).unwrap();
    let (bare, reg) = (&cells[0], &cells[1]);
    let el = t0.elapsed().as_secs_f64();
    outcome(
        bare.trivial_ratio() >= 0.5 && reg.trivial_ratio() == 0.0 && reg.mean_epochs() > bare.mean_epochs() && el < 1800.0,
        format!(
            "alpha=beta=0: trivial {:.1}, {:.1} epochs; alpha=1e-5 beta=1e-3: trivial {:.1}, {:.1} epochs; {}",
            bare.trivial_ratio(),
            bare.mean_epochs(),
            reg.trivial_ratio(),
            reg.mean_epochs(),
            within(el, 1800.0)
        ),
    )
}

// 7. rule recovery from the three-rule teacher

fn any_atom(_: &str) -> bool {
    true
}

fn pair(text: &str) -> Formula {
    Pair::parse(text, &any_atom).unwrap().formula()
}

fn recovered(rs: &RuleSet, targets: &[Formula]) -> bool {
    rs.pairs
        .iter()
        .any(|p| targets.iter().any(|t| equivalent(&p.formula(), t).unwrap_or(false)))
}

fn c7_rule_recovery(threads: usize) -> Outcome {
    let t0 = Instant::now();
    let teacher = three_rule_teacher();
    let specs: Vec<ScenarioSpec> = ScenarioKind::ALL.iter().map(|&k| ScenarioSpec::new(k, 0)).collect();
    let (data, _) = gen_demos(&teacher, &specs, 2000, &DemoConfig::default(), threads).unwrap();
    let first = [pair("T -> G InDrivable")];
    let second = [pair("G SafeTTC -> G Comfortable")];
    let third = [
        pair("!SpeedLimitCompliant -> F OvertakingContext"),
        pair("T -> SpeedLimitCompliant"),
        pair("T -> G SpeedLimitCompliant"),
    ];
    let seeds: Vec<u64> = (0..10).collect();
    let rules = par_map(threads, &seeds, |&seed| {
        let mut setup = TrainSetup::new(&ABLATION_PREDICATES, 2, 1);
        setup.cfg = AblationConfig::default().setup.cfg;
        setup.cfg.alpha = 1e-5;
        setup.cfg.beta = 1e-3;
        setup.cfg.seed = seed;
        let (model, _) = setup.train(&data).unwrap();
        tlr::drivers::extract(&model).unwrap()
    });
    let count = |t: &[Formula]| rules.iter().filter(|rs| recovered(rs, t)).count();
    let (a, b, c) = (count(&first), count(&second), count(&third));
    for (seed, rs) in rules.iter().enumerate() {
        eprintln!("  seed {seed}: {}", rs.render().trim().replace('\n', "; "));
    }
    let el = t0.elapsed().as_secs_f64();
    outcome(
        a >= 8 && b >= 8 && c >= 8 && el < 1800.0,
        format!(
            "drivable rule {a}/10, comfort rule {b}/10, overtaking rule or devolution {c}/10; {}",
            within(el, 1800.0)
        ),
    )
}

// 8. teacher score against the number of proposals

fn c8_proposal_trend(threads: usize) -> Outcome {
    let t0 = Instant::now();
    let teacher = three_rule_teacher();
    let scorer = Scorer::new(&teacher, &teacher_registry(&teacher).unwrap()).unwrap();
    let counts = [3usize, 5, 10, 15, 30];
    let specs: Vec<ScenarioSpec> = (0..20u64)
        .flat_map(|seed| ScenarioKind::ALL.iter().map(move |&k| ScenarioSpec::new(k, seed)))
        .collect();
    let per_spec = par_map(threads, &specs, |&spec| {
        let scn = generate_scenario(spec);
        counts
            .iter()
            .map(|&n| {
                let mut p = AtSampler::new(&scn, n).unwrap();
                run_closed_loop(&scn, &mut p, scorer.clone(), &scorer, &LoopConfig::new(60), &NullClock)
                    .unwrap()
                    .teacher_score
            })
            .collect::<Vec<f64>>()
    });
    let means: Vec<f64> = (0..counts.len())
        .map(|i| per_spec.iter().map(|r| r[i]).sum::<f64>() / per_spec.len() as f64)
        .collect();
    let monotone = means[..4].windows(2).all(|w| w[1] >= w[0]);
    let plateau = (means[4] - means[3]).abs() / means[3].abs() * 100.0;
    let el = t0.elapsed().as_secs_f64();
    let shown: Vec<String> = counts.iter().zip(&means).map(|(n, m)| format!("n={n} {m:.4}")).collect();
    outcome(
        monotone && plateau < 1.0 && el < 600.0,
        format!("{}; change 15 to 30 {plateau:.2}%; {}", shown.join(", "), within(el, 600.0)),
    )
}

// 9. scoring throughput

fn c9_throughput() -> Outcome {
    let rules = full_rules();
    let reg = teacher_registry(&rules).unwrap();
    let scorer = Scorer::new(&rules, &reg).unwrap();
    let scn = generate_scenario(ScenarioSpec::new(ScenarioKind::Traversing, 9));
    let steps = horizon_steps(scn.rate_hz, DEFAULT_HORIZON_S);
    let env = scn.initial_frame(steps);
    let mut monitor = Monitor::new(scorer, scn.rate_hz);
    let clock = SystemClock::new();
    let mut proposer = |f: &tlr_core::trace::Frame| at_sampler(&scn, f, 15);
    let mut times = Vec::new();
    let mut sizes = BTreeSet::new();
    for _ in 0..200 {
        let rec = monitor.step(&env, &mut proposer, &clock);
        if let Some(e) = rec.error {
            return outcome(false, format!("cycle {} failed: {e}", rec.cycle));
        }
        sizes.insert(rec.n_candidates);
        times.push(rec.elapsed_ms);
    }
    let plan_len = monitor.held.as_ref().map_or(0, Vec::len);
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let max = times.iter().cloned().fold(0.0, f64::max);
    outcome(
        max < 50.0 && sizes == BTreeSet::from([15]),
        format!(
            "200 cycles of 15 candidates x {plan_len} points, {} rule pairs: mean {mean:.2} ms, max {max:.2} ms per cycle",
            rules.pairs.len()
        ),
    )
}

const NAMES: [&str; 9] = [
    "gradient correctness",
    "semantics oracle",
    "simplification equivalence",
    "constructive coverage",
    "parameter recovery",
    "regularization ablation",
    "rule recovery",
    "proposal-count trend",
    "monitoring throughput",
];

fn main() {
    let selected: Vec<usize> = match std::env::var("TLR_ACCEPTANCE") {
        Ok(s) if !s.trim().is_empty() => s.split(',').filter_map(|x| x.trim().parse().ok()).collect(),
        _ => (1..=9).collect(),
    };
    let threads = default_threads();
    // timing first, while nothing else runs
    let order = [9, 1, 2, 3, 4, 5, 6, 7, 8];
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    for id in order.into_iter().filter(|id| selected.contains(id)) {
        eprintln!("criterion {id}: running");
        let o = match id {
            1 => c1_gradients(),
            2 => c2_semantics(),
            3 => c3_simplification(),
            4 => c4_construction(),
            5 => c5_parameter_recovery(threads),
            6 => c6_ablation(threads),
            7 => c7_rule_recovery(threads),
            8 => c8_proposal_trend(threads),
            _ => c9_throughput(),
        };
        eprintln!("criterion {id}: {}", if o.pass { "pass" } else { "fail" });
        results.push((id, o));
    }
    results.sort_by_key(|(id, _)| *id);
    let mut failed = 0;
    for (id, o) in &results {
        println!(
            "criterion {id} {} {}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            NAMES[id - 1],
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 && std::env::var("TLR_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
