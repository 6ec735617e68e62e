//! Multi-stage experiment drivers: demonstrations, training sweeps, the
//! regularization ablation and the end-to-end pipeline.

use serde::Serialize;
use tlr_core::extract::{extract_rules, registry_kinds, RuleSet};
use tlr_core::network::{EnsembleStructure, Model};
use tlr_core::predicates::{register_builtin_predicates, PredicateRegistry};
use tlr_core::scoring::Scorer;
use tlr_core::sim::{
    generate_demonstrations, generate_scenario, run_closed_loop, AtSampler, DemoConfig, DemoReport, LoopConfig,
    RandomProposer, RunMetrics, ScenarioKind, ScenarioSpec, SpecAcceptance,
};
use tlr_core::trace::{horizon_steps, Dataset, DEFAULT_HORIZON_S};
use tlr_core::training::{train, TrainConfig, TrainReport};

use crate::clock::SystemClock;
use crate::error::{CliError, CliResult};
use crate::parallel::par_map;
use crate::rules::rules_registry;

/// Inputs of the regularization ablation: the predicates of the three-rule
/// teacher.
pub const ABLATION_PREDICATES: [&str; 5] = [
    "InDrivable",
    "SafeTTC",
    "Comfortable",
    "SpeedLimitCompliant",
    "OvertakingContext",
];

/// Inputs of the end-to-end run.
pub const E2E_PREDICATES: [&str; 3] = ["Comfortable", "InLane", "InDrivable"];

/// `all` or a comma-separated list of scenario kinds.
pub fn parse_kinds(s: &str) -> CliResult<Vec<ScenarioKind>> {
    if s.trim() == "all" {
        return Ok(ScenarioKind::ALL.to_vec());
    }
    s.split(',')
        .map(|k| k.trim().parse::<ScenarioKind>().map_err(CliError::from))
        .collect()
}

/// Demonstrations for `specs`, one worker per spec. Each spec draws its
/// scenes from its own sequence, so the result equals the sequential
/// generator's for any thread count.
pub fn gen_demos(
    teacher: &RuleSet,
    specs: &[ScenarioSpec],
    n: usize,
    cfg: &DemoConfig,
    threads: usize,
) -> CliResult<(Dataset, DemoReport)> {
    if specs.is_empty() {
        return Err(CliError::input("no scenario specs given"));
    }
    let reg = rules_registry(teacher)?;
    let scorer = Scorer::new(teacher, &reg)?;
    let jobs: Vec<(ScenarioSpec, usize)> = specs
        .iter()
        .enumerate()
        .map(|(k, &s)| (s, n / specs.len() + usize::from(k < n % specs.len())))
        .collect();
    let parts = par_map(threads, &jobs, |(spec, n_k)| {
        generate_demonstrations(&scorer, std::slice::from_ref(spec), *n_k, cfg)
    });
    let mut per_spec: Vec<std::vec::IntoIter<_>> = Vec::with_capacity(parts.len());
    let mut report = DemoReport::default();
    for part in parts {
        let (data, rep) = part?;
        per_spec.push(data.traces.into_iter());
        report.per_spec.extend(rep.per_spec);
    }
    let traces = (0..n)
        .map(|i| per_spec[i % specs.len()].next().expect("per-spec count matches"))
        .collect();
    Ok((Dataset::new(traces), report))
}

/// What to train: inputs, architecture and optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSetup {
    pub predicates: Vec<String>,
    pub depth: usize,
    pub ensemble: usize,
    pub cfg: TrainConfig,
}

impl TrainSetup {
    pub fn new(predicates: &[&str], depth: usize, ensemble: usize) -> Self {
        Self {
            predicates: predicates.iter().map(|s| s.to_string()).collect(),
            depth,
            ensemble,
            cfg: TrainConfig::default(),
        }
    }

    /// A fresh model seeded by `cfg.seed`, predicates at their defaults.
    pub fn model(&self, reg: &PredicateRegistry) -> CliResult<Model> {
        let s = EnsembleStructure::build(&self.predicates, self.depth, self.ensemble, self.cfg.seed)?;
        let ids: Vec<&str> = self.predicates.iter().map(String::as_str).collect();
        Ok(Model::new(s, reg.subset(&ids)?)?)
    }

    pub fn train(&self, data: &Dataset) -> CliResult<(Model, TrainReport)> {
        let model = self.model(&register_builtin_predicates())?;
        Ok(train(data, model, &self.cfg)?)
    }
}

/// Extracted rules of a trained model, with its parameters attached.
pub fn extract(model: &Model) -> CliResult<RuleSet> {
    let reg = register_builtin_predicates();
    Ok(extract_rules(&model.structure, &model.predicates, registry_kinds(&reg))?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationCell {
    pub alpha: f64,
    pub beta: f64,
    /// Convergence epoch per seed.
    pub epochs: Vec<usize>,
    /// Whether each seed's extracted rules are a tautology.
    pub trivial: Vec<bool>,
}

impl AblationCell {
    pub fn mean_epochs(&self) -> f64 {
        self.epochs.iter().sum::<usize>() as f64 / self.epochs.len().max(1) as f64
    }

    pub fn trivial_ratio(&self) -> f64 {
        self.trivial.iter().filter(|&&t| t).count() as f64 / self.trivial.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    /// (alpha, beta) cells.
    pub grid: Vec<(f64, f64)>,
    pub seeds: u64,
    pub n_demos: usize,
    pub kind: ScenarioKind,
    pub data_seed: u64,
    pub setup: TrainSetup,
    pub threads: usize,
}

/// The alpha sweep at beta 1e-3, the beta sweep at alpha 1e-5, and the
/// unregularized cell.
pub fn default_ablation_grid() -> Vec<(f64, f64)> {
    let mut g: Vec<(f64, f64)> = [1e-4, 1e-5, 1e-6, 1e-7, 0.0].iter().map(|&a| (a, 1e-3)).collect();
    g.extend([1e-2, 1e-4, 1e-5, 0.0].iter().map(|&b| (1e-5, b)));
    g.push((0.0, 0.0));
    g
}

impl Default for AblationConfig {
    fn default() -> Self {
        let mut setup = TrainSetup::new(&ABLATION_PREDICATES, 2, 1);
        setup.cfg.lr = 5e-4;
        setup.cfg.steps_per_epoch = Some(150);
        Self {
            grid: default_ablation_grid(),
            seeds: 10,
            n_demos: 1000,
            kind: ScenarioKind::Following,
            data_seed: 0,
            setup,
            threads: 1,
        }
    }
}

/// Trains every (cell, seed) on one teacher dataset and reports convergence
/// epochs and the trivial-rule ratio per cell.
pub fn run_ablation_regularization(teacher: &RuleSet, cfg: &AblationConfig) -> CliResult<Vec<AblationCell>> {
    if cfg.grid.is_empty() || cfg.seeds == 0 {
        return Err(CliError::input("ablation needs at least one cell and one seed"));
    }
    let demo_cfg = DemoConfig {
        seed: cfg.data_seed,
        ..DemoConfig::default()
    };
    let specs = [ScenarioSpec::new(cfg.kind, cfg.data_seed)];
    let (data, _) = gen_demos(teacher, &specs, cfg.n_demos, &demo_cfg, cfg.threads)?;
    let jobs: Vec<(usize, u64)> = (0..cfg.grid.len())
        .flat_map(|c| (0..cfg.seeds).map(move |s| (c, s)))
        .collect();
    let results = par_map(cfg.threads, &jobs, |&(c, seed)| -> CliResult<(usize, bool)> {
        let (alpha, beta) = cfg.grid[c];
        let mut setup = cfg.setup.clone();
        setup.cfg.alpha = alpha;
        setup.cfg.beta = beta;
        setup.cfg.seed = seed;
        let (model, report) = setup.train(&data)?;
        let trivial = extract(&model)?.is_trivial()?;
        log::info!(
            "ablation alpha={alpha:e} beta={beta:e} seed={seed}: {} epochs, trivial={trivial}",
            report.convergence_epoch()
        );
        Ok((report.convergence_epoch(), trivial))
    });
    let mut cells: Vec<AblationCell> = cfg
        .grid
        .iter()
        .map(|&(alpha, beta)| AblationCell {
            alpha,
            beta,
            epochs: Vec::new(),
            trivial: Vec::new(),
        })
        .collect();
    for (&(c, _), r) in jobs.iter().zip(results) {
        let (e, t) = r?;
        cells[c].epochs.push(e);
        cells[c].trivial.push(t);
    }
    Ok(cells)
}

/// Which proposer a closed-loop run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposerKind {
    At,
    Random,
}

impl std::str::FromStr for ProposerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "at" => Ok(Self::At),
            "random" => Ok(Self::Random),
            _ => Err(format!("unknown proposer `{s}` (expected at or random)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub spec: ScenarioSpec,
    pub metrics: RunMetrics,
}

/// One closed-loop episode per spec; `rules` select, `teacher` grades.
pub fn simulate(
    specs: &[ScenarioSpec],
    rules: &RuleSet,
    teacher: &RuleSet,
    proposer: ProposerKind,
    n: usize,
    steps: usize,
    threads: usize,
) -> CliResult<Vec<Episode>> {
    let scorer = Scorer::new(rules, &rules_registry(rules)?)?;
    let grader = Scorer::new(teacher, &rules_registry(teacher)?)?;
    let cfg = LoopConfig::new(steps);
    let clock = SystemClock::new();
    par_map(threads, specs, |&spec| -> CliResult<Episode> {
        let scn = generate_scenario(spec);
        let metrics = match proposer {
            ProposerKind::At => {
                let mut p = AtSampler::new(&scn, n)?;
                run_closed_loop(&scn, &mut p, scorer.clone(), &grader, &cfg, &clock)?
            }
            ProposerKind::Random => {
                let len = horizon_steps(scn.rate_hz, DEFAULT_HORIZON_S) + 1;
                let mut p = RandomProposer::new(&scn, n, len, spec.seed);
                run_closed_loop(&scn, &mut p, scorer.clone(), &grader, &cfg, &clock)?
            }
        };
        Ok(Episode { spec, metrics })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2eOptions {
    pub seed: u64,
    pub teacher: RuleSet,
    pub kinds: Vec<ScenarioKind>,
    pub n_demos: usize,
    pub setup: TrainSetup,
    pub n_proposals: usize,
    pub steps: usize,
    pub threads: usize,
}

impl E2eOptions {
    pub fn new(seed: u64) -> Self {
        let mut setup = TrainSetup::new(&E2E_PREDICATES, 2, 10);
        setup.cfg.seed = seed;
        Self {
            seed,
            teacher: tlr_core::sim::comfort_teacher(),
            kinds: ScenarioKind::ALL.to_vec(),
            n_demos: 2000,
            setup,
            n_proposals: 15,
            steps: 100,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2eSummary {
    pub seed: u64,
    pub acceptance: Vec<SpecAcceptance>,
    pub train: TrainReport,
    pub teacher_theta: Vec<(String, Vec<f64>)>,
    pub rules: RuleSet,
    pub trivial: bool,
    pub episodes: Vec<Episode>,
}

impl E2eSummary {
    /// (teacher, recovered) Comfortable thresholds, when both exist.
    pub fn comfort_theta(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let find = |v: &[(String, Vec<f64>)]| v.iter().find(|(id, _)| id == "Comfortable").map(|(_, t)| t.clone());
        Some((find(&self.teacher_theta)?, find(&self.rules.theta)?))
    }

    pub fn render(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        let _ = writeln!(s, "seed {}", self.seed);
        for a in &self.acceptance {
            let _ = writeln!(s, "demos {}: accepted {} of {}", a.spec, a.accepted, a.attempts);
        }
        let _ = writeln!(
            s,
            "train: {} epochs, best validation {:.6} at epoch {}",
            self.train.stop_epoch, self.train.best_val, self.train.best_epoch
        );
        if let Some((t, r)) = self.comfort_theta() {
            let _ = writeln!(s, "comfort theta teacher   {}", fmt_vec(&t));
            let _ = writeln!(s, "comfort theta recovered {}", fmt_vec(&r));
        }
        for (id, theta) in &self.rules.theta {
            let _ = writeln!(s, "theta {id} {}", fmt_vec(theta));
        }
        let _ = writeln!(s, "rules (trivial: {}):", self.trivial);
        for line in self.rules.render().lines() {
            let _ = writeln!(s, "  {line}");
        }
        for e in &self.episodes {
            let m = &e.metrics;
            let _ = writeln!(
                s,
                "episode {}: collision {} drivable_exit {} comfort_violations {} progress {:.3} teacher_score {:.6}",
                e.spec, m.collision, m.drivable_exit, m.comfort_violations, m.progress, m.teacher_score
            );
        }
        s
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn stage<T>(name: &str, r: CliResult<T>) -> CliResult<T> {
    r.map_err(|e| e.context(format!("stage {name}")))
}

/// gen-demos, train, extract, then one closed-loop episode per kind with the
/// extracted rules.
pub fn run_end_to_end(opts: &E2eOptions) -> CliResult<E2eSummary> {
    let specs: Vec<ScenarioSpec> = opts.kinds.iter().map(|&k| ScenarioSpec::new(k, opts.seed)).collect();
    let demo_cfg = DemoConfig {
        seed: opts.seed,
        ..DemoConfig::default()
    };
    let (data, report) = stage(
        "gen-demos",
        gen_demos(&opts.teacher, &specs, opts.n_demos, &demo_cfg, opts.threads),
    )?;
    let (model, train_report) = stage("train", opts.setup.train(&data))?;
    let rules = stage("extract", extract(&model))?;
    let trivial = stage("extract", rules.is_trivial().map_err(CliError::from))?;
    let episodes = stage(
        "simulate",
        simulate(
            &specs,
            &rules,
            &opts.teacher,
            ProposerKind::At,
            opts.n_proposals,
            opts.steps,
            opts.threads,
        ),
    )?;
    Ok(E2eSummary {
        seed: opts.seed,
        acceptance: report.per_spec,
        train: train_report,
        teacher_theta: opts.teacher.theta.clone(),
        rules,
        trivial,
        episodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tlr_core::sim::comfort_teacher;

    #[test]
    fn kinds_parse() {
        assert_eq!(parse_kinds("all").unwrap().len(), 9);
        assert_eq!(
            parse_kinds("following,turn").unwrap(),
            vec![ScenarioKind::Following, ScenarioKind::Turn]
        );
        assert!(parse_kinds("flying").is_err());
    }

    #[test]
    fn parallel_demos_match_sequential() {
        let teacher = comfort_teacher();
        let specs: Vec<_> = ScenarioKind::ALL.iter().map(|&k| ScenarioSpec::new(k, 4)).collect();
        let cfg = DemoConfig::default();
        let scorer = Scorer::new(&teacher, &rules_registry(&teacher).unwrap()).unwrap();
        let (seq, seq_rep) = generate_demonstrations(&scorer, &specs, 22, &cfg).unwrap();
        let (par, par_rep) = gen_demos(&teacher, &specs, 22, &cfg, 4).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq_rep, par_rep);
    }

    #[test]
    fn default_grid_cells() {
        let g = default_ablation_grid();
        assert_eq!(g.len(), 10);
        assert!(g.contains(&(0.0, 0.0)) && g.contains(&(1e-5, 1e-3)));
    }

    #[test]
    fn single_cell_single_seed_gives_one_row() {
        let cfg = AblationConfig {
            grid: vec![(1e-5, 1e-3)],
            seeds: 1,
            n_demos: 40,
            setup: TrainSetup {
                cfg: TrainConfig {
                    max_epochs: 3,
                    ..AblationConfig::default().setup.cfg
                },
                ..AblationConfig::default().setup
            },
            ..AblationConfig::default()
        };
        let rows = run_ablation_regularization(&tlr_core::sim::three_rule_teacher(), &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].epochs.len(), 1);
        assert!(rows[0].epochs[0] <= 3);
    }
}
