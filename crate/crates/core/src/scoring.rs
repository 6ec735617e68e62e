//! Online ranking of candidate plans under a rule set, hard semantics.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::extract::{Connective, RuleSet};
use crate::formula::Formula;
use crate::predicates::{PredicateDescriptor, PredicateRegistry};
use crate::semantics::{eval_hard, Signals};
use crate::trace::{EgoPlanPoint, Frame, Trace, DEFAULT_HORIZON_S};

/// Frames per scored trace unless a candidate set says otherwise.
pub const DEFAULT_FRAMES: usize = 20;
pub const DEFAULT_BUDGET_MS: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub env: Frame,
    pub candidates: Vec<Vec<EgoPlanPoint>>,
    pub rate_hz: u32,
    pub horizon_s: f64,
    pub n_frames: usize,
}

impl CandidateSet {
    pub fn new(env: Frame, candidates: Vec<Vec<EgoPlanPoint>>, rate_hz: u32) -> Self {
        Self {
            env,
            candidates,
            rate_hz,
            horizon_s: DEFAULT_HORIZON_S,
            n_frames: DEFAULT_FRAMES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.candidates.first() else {
            return Err(invalid("candidate set is empty"));
        };
        if self.candidates.iter().any(|c| c.len() != first.len()) {
            return Err(invalid("candidates differ in horizon length"));
        }
        if first.len() < 3 {
            return Err(invalid("candidates need at least 3 points"));
        }
        Ok(())
    }

    pub fn trace(&self, k: usize) -> Result<Trace> {
        Trace::from_plan(&self.env, &self.candidates[k], self.n_frames, self.rate_hz, self.horizon_s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    pub total: f64,
    pub pairs: Vec<f64>,
    /// Indices of pairs with negative robustness.
    pub violated: Vec<usize>,
}

/// A rule set bound to the predicate descriptors it needs.
#[derive(Debug, Clone)]
pub struct Scorer {
    rules: RuleSet,
    pair_formulas: Vec<Formula>,
    predicates: Vec<PredicateDescriptor>,
}

impl Scorer {
    /// Fails with a configuration error when a rule atom is not registered.
    pub fn new(rules: &RuleSet, registry: &PredicateRegistry) -> Result<Self> {
        let mut reg = registry.clone();
        rules.apply_theta(&mut reg).map_err(config)?;
        let predicates = rules
            .atoms()
            .iter()
            .map(|id| reg.require(id).cloned())
            .collect::<Result<Vec<_>>>()
            .map_err(config)?;
        Ok(Self {
            rules: rules.clone(),
            pair_formulas: rules.pairs.iter().map(|p| p.formula()).collect(),
            predicates,
        })
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn signals(&self, trace: &Trace) -> Result<Signals> {
        self.predicates
            .iter()
            .map(|p| Ok((p.id.clone(), p.evaluate_signal(trace)?.values)))
            .collect()
    }

    pub fn score_trace(&self, trace: &Trace) -> Result<ScoreBreakdown> {
        let signals = self.signals(trace)?;
        let pairs = self
            .pair_formulas
            .iter()
            .map(|f| eval_hard(f, &signals, 0))
            .collect::<Result<Vec<_>>>()?;
        let total = match (self.rules.connective, pairs.is_empty()) {
            (_, true) => 1.0,
            (Connective::And, false) => pairs.iter().copied().fold(f64::INFINITY, f64::min),
            (Connective::Or, false) => pairs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        };
        let violated = (0..pairs.len()).filter(|&i| pairs[i] < 0.0).collect();
        Ok(ScoreBreakdown { total, pairs, violated })
    }

    pub fn score_candidates(&self, cs: &CandidateSet) -> Result<Vec<ScoreBreakdown>> {
        cs.validate()?;
        (0..cs.candidates.len()).map(|k| self.score_trace(&cs.trace(k)?)).collect()
    }
}

fn config(e: Error) -> Error {
    match e {
        Error::UnknownPredicate(id) => Error::Config(format!("rules use unknown predicate `{id}`")),
        other => Error::Config(other.to_string()),
    }
}

pub fn score_candidates(rules: &RuleSet, registry: &PredicateRegistry, cs: &CandidateSet) -> Result<Vec<ScoreBreakdown>> {
    Scorer::new(rules, registry)?.score_candidates(cs)
}

/// Index of the highest total; ties go to the lowest index.
pub fn select(breakdowns: &[ScoreBreakdown]) -> Result<usize> {
    select_scores(&breakdowns.iter().map(|b| b.total).collect::<Vec<_>>())
}

pub fn select_scores(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(invalid("nothing to select from"));
    }
    let mut best = 0;
    for k in 1..scores.len() {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Wall-clock source for cycle timing.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Emits candidate plans for the current environment.
pub trait Proposer {
    fn propose(&mut self, env: &Frame) -> Result<Vec<Vec<EgoPlanPoint>>>;
}

impl<F: FnMut(&Frame) -> Result<Vec<Vec<EgoPlanPoint>>>> Proposer for F {
    fn propose(&mut self, env: &Frame) -> Result<Vec<Vec<EgoPlanPoint>>> {
        self(env)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub n_candidates: usize,
    pub selected: Option<usize>,
    pub elapsed_ms: f64,
    pub over_budget: bool,
    pub error: Option<String>,
}

/// Cycle-by-cycle propose, score, select loop.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub scorer: Scorer,
    pub rate_hz: u32,
    pub horizon_s: f64,
    pub n_frames: usize,
    pub budget_ms: f64,
    pub cycle: usize,
    /// The last selected plan, held across failed cycles.
    pub held: Option<Vec<EgoPlanPoint>>,
    pub last_breakdowns: Vec<ScoreBreakdown>,
}

impl Monitor {
    pub fn new(scorer: Scorer, rate_hz: u32) -> Self {
        Self {
            scorer,
            rate_hz,
            horizon_s: DEFAULT_HORIZON_S,
            n_frames: DEFAULT_FRAMES,
            budget_ms: DEFAULT_BUDGET_MS,
            cycle: 0,
            held: None,
            last_breakdowns: Vec::new(),
        }
    }

    pub fn step(&mut self, env: &Frame, proposer: &mut impl Proposer, clock: &impl Clock) -> CycleRecord {
        let start = clock.now_ms();
        let outcome = self.run_cycle(env, proposer);
        let elapsed_ms = clock.now_ms() - start;
        let cycle = self.cycle;
        self.cycle += 1;
        let (n_candidates, selected, error) = match outcome {
            Ok((n, k)) => (n, Some(k), None),
            Err(e) => {
                log::warn!("cycle {cycle}: {e}");
                (0, None, Some(e.to_string()))
            }
        };
        CycleRecord {
            cycle,
            n_candidates,
            selected,
            elapsed_ms,
            over_budget: elapsed_ms > self.budget_ms,
            error,
        }
    }

    fn run_cycle(&mut self, env: &Frame, proposer: &mut impl Proposer) -> Result<(usize, usize)> {
        let candidates = proposer.propose(env)?;
        let cs = CandidateSet {
            env: env.clone(),
            candidates,
            rate_hz: self.rate_hz,
            horizon_s: self.horizon_s,
            n_frames: self.n_frames,
        };
        let breakdowns = self.scorer.score_candidates(&cs)?;
        let k = select(&breakdowns)?;
        self.held = Some(cs.candidates[k].clone());
        self.last_breakdowns = breakdowns;
        Ok((cs.candidates.len(), k))
    }
}

pub fn monitor_step(
    monitor: &mut Monitor,
    env: &Frame,
    proposer: &mut impl Proposer,
    clock: &impl Clock,
) -> CycleRecord {
    monitor.step(env, proposer, clock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::Pair;
    use crate::formula::{atom, parse_formula};
    use crate::predicates::register_builtin_predicates;
    use crate::trace::fixtures::{constant_plan, straight_map};
    use alloc::sync::Arc;
    use alloc::vec;
    use core::cell::Cell;

    struct TickClock(Cell<f64>);

    impl Clock for TickClock {
        fn now_ms(&self) -> f64 {
            let t = self.0.get();
            self.0.set(t + 1.0);
            t
        }
    }

    fn env() -> Frame {
        Frame {
            t_index: 0,
            ego_plan: constant_plan(0.0, 0.0, 5.0, 81, 0.05),
            agents: Vec::new(),
            map: Arc::clone(&straight_map()),
        }
    }

    fn drivable_rules() -> RuleSet {
        let reg = register_builtin_predicates();
        let pairs = vec![
            Pair::new(Vec::new(), parse_formula("G InDrivable", &reg).unwrap()),
            Pair::new(vec![parse_formula("G SafeTTC", &reg).unwrap()], parse_formula("G Comfortable", &reg).unwrap()),
        ];
        RuleSet::new(pairs, Connective::And)
    }

    fn lane_change(y_end: f64) -> Vec<EgoPlanPoint> {
        // smooth lateral move to y_end over 4 s at 5 m/s
        (0..81)
            .map(|k| {
                let t = k as f64 * 0.05;
                let s = t / 4.0;
                let y = y_end * (10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5));
                EgoPlanPoint::new(5.0 * t, y, 5.0, 0.0)
            })
            .collect()
    }

    #[test]
    fn leaving_drivable_area_violates_first_pair() {
        let reg = register_builtin_predicates();
        let rules = drivable_rules();
        let cs = CandidateSet::new(env(), vec![constant_plan(0.0, 0.0, 5.0, 81, 0.05), lane_change(30.0)], 20);
        let b = score_candidates(&rules, &reg, &cs).unwrap();
        assert!(b[0].violated.is_empty());
        assert!(b[1].pairs[0] < 0.0);
        assert!(b[1].violated.contains(&0));
        assert_eq!(select(&b).unwrap(), 0);
    }

    #[test]
    fn lateral_acceleration_above_theta_violates_comfort_pair() {
        let reg = register_builtin_predicates();
        let mut rules = drivable_rules();
        rules.theta = vec![("Comfortable".into(), vec![1.23, 1.13, 0.98, 0.98])];
        // the quintic lane change of 3.5 m in 4 s peaks near 1.3 m/s^2 laterally
        let cs = CandidateSet::new(env(), vec![lane_change(3.5)], 20);
        let b = score_candidates(&rules, &reg, &cs).unwrap();
        assert!(b[0].pairs[1] < 0.0, "{:?}", b[0]);
        assert_eq!(b[0].violated, vec![1]);
    }

    #[test]
    fn total_equals_formula_and_duplicates_agree() {
        let reg = register_builtin_predicates();
        let rules = drivable_rules();
        let scorer = Scorer::new(&rules, &reg).unwrap();
        let cs = CandidateSet::new(env(), vec![lane_change(3.0), lane_change(3.0), lane_change(-2.0)], 20);
        let b = scorer.score_candidates(&cs).unwrap();
        assert_eq!(b[0], b[1]);
        for (k, bd) in b.iter().enumerate() {
            let signals = scorer.signals(&cs.trace(k).unwrap()).unwrap();
            assert_eq!(bd.total, eval_hard(&rules.formula(), &signals, 0).unwrap());
        }
    }

    #[test]
    fn unknown_predicate_is_config_error() {
        let reg = register_builtin_predicates();
        let rules = RuleSet::new(vec![Pair::new(Vec::new(), atom("Teleport"))], Connective::And);
        assert!(matches!(Scorer::new(&rules, &reg), Err(Error::Config(_))));
    }

    #[test]
    fn select_rules() {
        assert_eq!(select_scores(&[0.3]).unwrap(), 0);
        assert_eq!(select_scores(&[0.2, 0.9, 0.9]).unwrap(), 1);
        assert!(select_scores(&[]).is_err());
        let s = [0.1, -0.4, 0.7, 0.2];
        let t: Vec<f64> = s.iter().map(|x| libm::exp(3.0 * x) + 2.0).collect();
        assert_eq!(select_scores(&s).unwrap(), select_scores(&t).unwrap());
    }

    #[test]
    fn monitor_holds_selection_on_failure() {
        let reg = register_builtin_predicates();
        let scorer = Scorer::new(&drivable_rules(), &reg).unwrap();
        let mut m = Monitor::new(scorer, 20);
        let clock = TickClock(Cell::new(0.0));
        let mut good = |_: &Frame| Ok(vec![lane_change(-1.5), constant_plan(0.0, 0.0, 5.0, 81, 0.05)]);
        let r = m.step(&env(), &mut good, &clock);
        assert_eq!(r.selected, Some(1));
        assert_eq!(r.elapsed_ms, 1.0);
        let held = m.held.clone();
        let mut empty = |_: &Frame| Ok(Vec::new());
        let r = m.step(&env(), &mut empty, &clock);
        assert_eq!(r.cycle, 1);
        assert!(r.selected.is_none() && r.error.is_some());
        assert_eq!(m.held, held);
    }
}
