//! Command-line entry point.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;
use serde::Serialize;
use sha2::{Digest, Sha256};
use tlr_core::predicates::register_builtin_predicates;
use tlr_core::scoring::{select, CandidateSet, Scorer};
use tlr_core::sim::{DemoConfig, ScenarioKind, ScenarioSpec};
use tlr_core::trace::{resample, validate_trace, EgoPlanPoint};
use tlr_core::training::{StopRule, ThetaStep, TrainConfig};

use crate::checkpoint::{load_checkpoint, metrics_path, save_checkpoint, write_metrics};
use crate::drivers::{
    gen_demos, parse_kinds, run_ablation_regularization, run_end_to_end, simulate, AblationConfig, E2eOptions,
    Episode, ProposerKind, TrainSetup, E2E_PREDICATES,
};
use crate::error::{CliError, CliResult, EXIT_OK};
use crate::header::Header;
use crate::parallel::default_threads;
use crate::rules::{load_rules, render_rules_file, rules_registry, write_rules_file};
use crate::traces::{read_traces_file, write_traces};

#[derive(Debug, Parser)]
#[command(name = "tlr", version, about = "Learn, extract and apply temporal-logic scoring rules")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "info")]
    pub log_level: LevelFilter,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a trace file and report its contents.
    Ingest(IngestArgs),
    /// Inspect the predicate registry.
    Predicates {
        #[command(subcommand)]
        cmd: PredicatesCmd,
    },
    /// Rejection-sample demonstrations that satisfy a teacher rule set.
    GenDemos(GenDemosArgs),
    /// Learn a logic structure and predicate parameters from demonstrations.
    Train(TrainArgs),
    /// Turn a checkpoint into a rule file.
    Extract(ExtractArgs),
    /// Score candidate plans against a rule file.
    Score(ScoreArgs),
    /// Run closed-loop episodes in the synthetic world.
    Simulate(SimulateArgs),
    /// Regularization ablation over (alpha, beta) cells.
    Ablate(AblateArgs),
    /// gen-demos, train, extract and simulate in one go.
    E2e(E2eArgs),
}

#[derive(Debug, Subcommand)]
pub enum PredicatesCmd {
    /// Print every builtin predicate with its parameters.
    List,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Check every trace invariant and list all violations.
    #[arg(long)]
    pub validate: bool,
    /// Decimate to this rate before writing.
    #[arg(long)]
    pub resample: Option<u32>,
    /// Write the traces back in canonical form.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenDemosArgs {
    /// Rule file, or builtin:comfort / builtin:three / builtin:full.
    #[arg(long, default_value = "builtin:three")]
    pub teacher: String,
    /// `all` or comma-separated scenario kinds.
    #[arg(long, default_value = "all")]
    pub kinds: String,
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Required robustness margin per teacher pair.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated predicate ids.
    #[arg(long, default_value_t = E2E_PREDICATES.join(","))]
    pub predicates: String,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 10)]
    pub ensemble: usize,
    #[arg(long, default_value_t = TrainConfig::default().lr)]
    pub lr: f64,
    /// Step size for theta; 0 switches theta to Adam at `--lr`.
    #[arg(long, default_value_t = tlr_core::training::DEFAULT_THETA_LR)]
    pub theta_lr: f64,
    #[arg(long, default_value_t = TrainConfig::default().alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = TrainConfig::default().beta)]
    pub beta: f64,
    #[arg(long, default_value_t = TrainConfig::default().w_max)]
    pub wmax: f64,
    #[arg(long, default_value_t = TrainConfig::default().batch_size)]
    pub batch: usize,
    #[arg(long, default_value_t = TrainConfig::default().patience)]
    pub patience: usize,
    #[arg(long, default_value_t = TrainConfig::default().max_epochs)]
    pub max_epochs: usize,
    /// Keep the best-validation snapshot instead of stopping on a plateau.
    #[arg(long)]
    pub best_validation: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub rules: String,
    /// Trace file; the environment is frame `--frame` of its first trace.
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub frame: usize,
    #[arg(long)]
    pub candidates: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// A scenario kind or `all`.
    #[arg(long, default_value = "following")]
    pub kind: String,
    #[arg(long, default_value = "builtin:three")]
    pub rules: String,
    /// Rule set grading the executed plans.
    #[arg(long, default_value = "builtin:three")]
    pub teacher: String,
    #[arg(long, default_value = "at")]
    pub proposer: ProposerKind,
    #[arg(long, default_value_t = 15)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Episodes per kind, seeded `seed`, `seed + 1`, ...
    #[arg(long, default_value_t = 1)]
    pub episodes: u64,
    #[arg(long)]
    pub metrics: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, default_value = "builtin:three")]
    pub teacher: String,
    /// `alpha,beta` cell; repeatable. Defaults to the standard grid.
    #[arg(long = "cell", value_parser = parse_cell)]
    pub cells: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value = "following")]
    pub kind: ScenarioKind,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct E2eArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub ensemble: usize,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Directory for the intermediate artifacts and the summary.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn parse_cell(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `alpha,beta`")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("alpha: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("beta: {e}"))?;
    Ok((a, b))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::internal(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn write_json_line(out: &mut impl Write, v: &impl Serialize) -> CliResult<()> {
    serde_json::to_writer(&mut *out, v).map_err(CliError::internal)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn ingest(a: &IngestArgs) -> CliResult<()> {
    let data = read_traces_file(&a.input, !a.validate)?;
    if a.validate {
        let mut bad = 0;
        for (i, t) in data.traces.iter().enumerate() {
            for v in validate_trace(t) {
                println!("trace {i}: frame {}: {}: {}", v.frame, v.field, v.message);
                bad += 1;
            }
        }
        if bad > 0 {
            return Err(CliError::input(format!("{bad} violation(s) in {}", a.input.display())));
        }
    }
    let mut traces = data.traces;
    if let Some(hz) = a.resample {
        traces = traces.iter().map(|t| resample(t, hz)).collect::<Result<_, _>>()?;
    }
    for (i, t) in traces.iter().enumerate() {
        println!(
            "trace {i}: {} frames at {} Hz, horizon {} s (T = {})",
            t.len(),
            t.rate_hz,
            t.horizon_s,
            t.horizon_steps()
        );
    }
    println!("{} trace(s) ok", traces.len());
    if let Some(out) = &a.out {
        let mut w = create(out)?;
        write_traces(&mut w, &traces)?;
        w.flush()?;
    }
    Ok(())
}

fn predicates_list() {
    let reg = register_builtin_predicates();
    println!("{:<22} {:<9} {:<12} {:<7} {:>8} {:>8} {:>8}", "id", "kind", "param", "unit", "lower", "upper", "default");
    for p in reg.iter() {
        for (i, s) in p.params.iter().enumerate() {
            let (id, kind) = if i == 0 { (p.id.as_str(), p.kind.as_str()) } else { ("", "") };
            println!(
                "{:<22} {:<9} {:<12} {:<7} {:>8} {:>8} {:>8}",
                id, kind, s.name, s.unit, s.lower, s.upper, s.default
            );
        }
    }
}

fn gen_demos_cmd(a: &GenDemosArgs, seed: u64, threads: usize) -> CliResult<()> {
    let teacher = load_rules(&a.teacher)?;
    let specs: Vec<ScenarioSpec> = parse_kinds(&a.kinds)?
        .into_iter()
        .map(|k| ScenarioSpec::new(k, seed))
        .collect();
    let cfg = DemoConfig {
        delta: a.delta,
        seed,
        ..DemoConfig::default()
    };
    let (data, report) = gen_demos(&teacher, &specs, a.n, &cfg, threads)?;
    for s in &report.per_spec {
        println!("{}: accepted {} of {} ({:.2}%)", s.spec, s.accepted, s.attempts, 100.0 * s.rate());
    }
    let mut w = create(&a.out)?;
    write_traces(&mut w, &data.traces)?;
    w.flush()?;
    println!("wrote {} demonstrations to {}", data.len(), a.out.display());
    Ok(())
}

fn train_cmd(a: &TrainArgs, seed: u64) -> CliResult<()> {
    let data = read_traces_file(&a.data, true)?;
    let ids: Vec<&str> = a.predicates.split(',').map(str::trim).collect();
    let mut setup = TrainSetup::new(&ids, a.depth, a.ensemble);
    setup.cfg = TrainConfig {
        lr: a.lr,
        theta_step: if a.theta_lr > 0.0 {
            ThetaStep::Sgd { lr: a.theta_lr }
        } else {
            ThetaStep::Adam
        },
        alpha: a.alpha,
        beta: a.beta,
        w_max: a.wmax,
        batch_size: a.batch,
        patience: a.patience,
        max_epochs: a.max_epochs,
        stop_rule: if a.best_validation {
            StopRule::BestValidation
        } else {
            StopRule::Plateau
        },
        seed,
        ..TrainConfig::default()
    };
    setup.cfg.validate()?;
    log::info!("training config: {setup:?}");
    let (model, report) = setup.train(&data)?;
    save_checkpoint(&a.out, &model)?;
    let mpath = metrics_path(&a.out);
    let mut w = create(&mpath)?;
    write_metrics(&mut w, &report)?;
    w.flush()?;
    println!(
        "stopped after {} epochs; best validation {:.6} at epoch {}",
        report.stop_epoch, report.best_val, report.best_epoch
    );
    for p in &model.predicates {
        println!("theta {} {:?}", p.id, p.theta);
    }
    println!("wrote {} and {}", a.out.display(), mpath.display());
    Ok(())
}

fn extract_cmd(a: &ExtractArgs, seed: u64) -> CliResult<()> {
    let reg = register_builtin_predicates();
    let model = load_checkpoint(&a.ckpt, &reg)?;
    let bytes = std::fs::read(&a.ckpt)?;
    let mut rules = crate::drivers::extract(&model)?;
    rules.provenance = format!(
        "extract ckpt={} sha256={} seed={seed}",
        a.ckpt.display(),
        hex::encode(Sha256::digest(&bytes))
    );
    write_rules_file(&a.out, &rules, &reg)?;
    print!("{}", rules.render());
    if rules.is_trivial()? {
        log::warn!("extracted rules are trivial (always true)");
    }
    Ok(())
}

fn read_candidates(path: &Path) -> CliResult<Vec<Vec<EgoPlanPoint>>> {
    let f = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let n = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if n == 1 {
            if let Some(h) = Header::detect(&line) {
                h.expect(CANDIDATES_FORMAT, 1)
                    .map_err(|e| CliError::input(format!("{}: line 1: {e}", path.display())))?;
                continue;
            }
        }
        let pts: Vec<[f64; 4]> = serde_json::from_str(&line)
            .map_err(|e| CliError::input(format!("{}: line {n}: {e}", path.display())))?;
        out.push(pts.iter().map(|p| EgoPlanPoint::new(p[0], p[1], p[2], p[3])).collect());
    }
    Ok(out)
}

pub const CANDIDATES_FORMAT: &str = "tlr-candidates";
pub const SCORE_REPORT_FORMAT: &str = "tlr-score-report";
pub const SIM_METRICS_FORMAT: &str = "tlr-sim-metrics";
pub const ABLATION_FORMAT: &str = "tlr-ablation";

/// Candidate file: header line, then one `[[x,y,v,heading],...]` plan per line.
pub fn write_candidates(out: &mut impl Write, plans: &[Vec<EgoPlanPoint>]) -> CliResult<()> {
    Header::new(CANDIDATES_FORMAT, 1).write(out)?;
    for p in plans {
        let pts: Vec<[f64; 4]> = p.iter().map(|q| [q.x, q.y, q.v, q.heading]).collect();
        write_json_line(out, &pts)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CandidateScore {
    index: usize,
    score: f64,
    pair_scores: Vec<f64>,
    violated: Vec<String>,
}

#[derive(Serialize)]
struct ScoreReport {
    selected: usize,
    candidates: Vec<CandidateScore>,
}

fn score_cmd(a: &ScoreArgs) -> CliResult<()> {
    let rules = load_rules(&a.rules)?;
    let scorer = Scorer::new(&rules, &rules_registry(&rules)?)?;
    let scene = read_traces_file(&a.scene, true)?;
    let trace = scene
        .traces
        .first()
        .ok_or_else(|| CliError::input(format!("{}: no traces", a.scene.display())))?;
    let env = trace
        .frames
        .get(a.frame)
        .ok_or_else(|| CliError::input(format!("scene has no frame {}", a.frame)))?
        .clone();
    let candidates = read_candidates(&a.candidates)?;
    let mut cs = CandidateSet::new(env, candidates, trace.rate_hz);
    cs.horizon_s = trace.horizon_s;
    cs.validate()?;
    let breakdowns = scorer.score_candidates(&cs)?;
    let selected = select(&breakdowns)?;
    let report = ScoreReport {
        selected,
        candidates: breakdowns
            .iter()
            .enumerate()
            .map(|(index, b)| CandidateScore {
                index,
                score: b.total,
                pair_scores: b.pairs.clone(),
                violated: b.violated.iter().map(|&k| rules.pairs[k].to_string()).collect(),
            })
            .collect(),
    };
    let mut w = create(&a.report)?;
    Header::new(SCORE_REPORT_FORMAT, 1).write(&mut w)?;
    write_json_line(&mut w, &report)?;
    w.flush()?;
    for c in &report.candidates {
        println!("candidate {:>3}: score {:+.6} violated {}", c.index, c.score, c.violated.len());
    }
    println!("selected {selected}");
    Ok(())
}

#[derive(Serialize)]
struct CycleLine<'a> {
    scenario: String,
    cycle: usize,
    n_candidates: usize,
    selected: Option<usize>,
    elapsed_ms: f64,
    over_budget: bool,
    error: &'a Option<String>,
}

#[derive(Serialize)]
struct EpisodeLine {
    scenario: String,
    collision: bool,
    drivable_exit: bool,
    comfort_violations: usize,
    progress: f64,
    teacher_score: f64,
    over_budget: usize,
}

fn episode_line(e: &Episode) -> EpisodeLine {
    let m = &e.metrics;
    EpisodeLine {
        scenario: e.spec.to_string(),
        collision: m.collision,
        drivable_exit: m.drivable_exit,
        comfort_violations: m.comfort_violations,
        progress: m.progress,
        teacher_score: m.teacher_score,
        over_budget: m.over_budget(),
    }
}

fn simulate_cmd(a: &SimulateArgs, seed: u64, threads: usize) -> CliResult<()> {
    let rules = load_rules(&a.rules)?;
    let teacher = load_rules(&a.teacher)?;
    let kinds = parse_kinds(&a.kind)?;
    let specs: Vec<ScenarioSpec> = kinds
        .iter()
        .flat_map(|&k| (0..a.episodes).map(move |e| ScenarioSpec::new(k, seed.wrapping_add(e))))
        .collect();
    let episodes = simulate(&specs, &rules, &teacher, a.proposer, a.n, a.steps, threads)?;
    let mut w = create(&a.metrics)?;
    Header::new(SIM_METRICS_FORMAT, 1).write(&mut w)?;
    for e in &episodes {
        for c in &e.metrics.cycles {
            write_json_line(
                &mut w,
                &CycleLine {
                    scenario: e.spec.to_string(),
                    cycle: c.cycle,
                    n_candidates: c.n_candidates,
                    selected: c.selected,
                    elapsed_ms: c.elapsed_ms,
                    over_budget: c.over_budget,
                    error: &c.error,
                },
            )?;
        }
    }
    for e in &episodes {
        let line = episode_line(e);
        write_json_line(&mut w, &serde_json::json!({ "episode": line }))?;
        println!(
            "{}: collision {} drivable_exit {} comfort_violations {} progress {:.2} m teacher_score {:.4}",
            line.scenario, line.collision, line.drivable_exit, line.comfort_violations, line.progress, line.teacher_score
        );
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AblationRow {
    alpha: f64,
    beta: f64,
    convergence_epochs: f64,
    trivial_ratio: f64,
    epochs: Vec<usize>,
    trivial: Vec<bool>,
}

fn ablate_cmd(a: &AblateArgs, seed: u64, threads: usize) -> CliResult<()> {
    let teacher = load_rules(&a.teacher)?;
    let mut cfg = AblationConfig {
        seeds: a.seeds,
        n_demos: a.n,
        kind: a.kind,
        data_seed: seed,
        threads,
        ..AblationConfig::default()
    };
    if !a.cells.is_empty() {
        cfg.grid.clone_from(&a.cells);
    }
    log::info!("ablation config: {cfg:?}");
    let cells = run_ablation_regularization(&teacher, &cfg)?;
    let mut w = create(&a.out)?;
    Header::new(ABLATION_FORMAT, 1).write(&mut w)?;
    println!("{:>10} {:>10} {:>10} {:>8}", "alpha", "beta", "conv", "triv");
    for c in &cells {
        write_json_line(
            &mut w,
            &AblationRow {
                alpha: c.alpha,
                beta: c.beta,
                convergence_epochs: c.mean_epochs(),
                trivial_ratio: c.trivial_ratio(),
                epochs: c.epochs.clone(),
                trivial: c.trivial.clone(),
            },
        )?;
        println!("{:>10.0e} {:>10.0e} {:>10.1} {:>8.2}", c.alpha, c.beta, c.mean_epochs(), c.trivial_ratio());
    }
    w.flush()?;
    Ok(())
}

fn e2e_cmd(a: &E2eArgs, seed: u64, threads: usize) -> CliResult<()> {
    let mut opts = E2eOptions::new(seed);
    opts.n_demos = a.n;
    opts.setup.ensemble = a.ensemble;
    opts.steps = a.steps;
    opts.threads = threads;
    log::info!("e2e options: {opts:?}");
    let summary = run_end_to_end(&opts)?;
    let text = summary.render();
    print!("{text}");
    if let Some(dir) = &a.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::internal(format!("{}: {e}", dir.display())))?;
        let reg = register_builtin_predicates();
        std::fs::write(dir.join("rules.tlr"), render_rules_file(&summary.rules, &reg))?;
        let mut w = create(&dir.join("summary.txt"))?;
        w.write_all(format!("tlr-e2e-summary 1\n{text}").as_bytes())?;
        w.flush()?;
        let mut m = create(&dir.join("train.metrics.jsonl"))?;
        write_metrics(&mut m, &summary.train)?;
        m.flush()?;
    }
    Ok(())
}

/// Runs the parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let _ = env_logger::Builder::new().filter_level(cli.log_level).try_init();
    let threads = cli.threads.unwrap_or_else(default_threads).max(1);
    log::info!("resolved config: threads={threads} {cli:?}");
    let seed = cli.seed;
    let out = match &cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Predicates { cmd: PredicatesCmd::List } => {
            predicates_list();
            Ok(())
        }
        Command::GenDemos(a) => gen_demos_cmd(a, seed, threads),
        Command::Train(a) => train_cmd(a, seed),
        Command::Extract(a) => extract_cmd(a, seed),
        Command::Score(a) => score_cmd(a),
        Command::Simulate(a) => simulate_cmd(a, seed, threads),
        Command::Ablate(a) => ablate_cmd(a, seed, threads),
        Command::E2e(a) => e2e_cmd(a, seed, threads),
    };
    match out {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

/// Parses `args` (program name first) and runs; clap usage errors exit 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flags_are_rejected() {
        assert!(Cli::try_parse_from(["tlr", "predicates", "list", "--bogus"]).is_err());
        assert_eq!(main_with_args(["tlr", "train", "--nope"]), 2);
    }

    #[test]
    fn globals_parse_anywhere() {
        let cli = Cli::try_parse_from(["tlr", "predicates", "list", "--seed", "7", "--threads", "2"]).unwrap();
        assert_eq!((cli.seed, cli.threads), (7, Some(2)));
    }

    #[test]
    fn cells_parse() {
        assert_eq!(parse_cell("1e-5, 0.001").unwrap(), (1e-5, 1e-3));
        assert!(parse_cell("1e-5").is_err());
    }
}
