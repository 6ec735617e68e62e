//! Closed-loop episodes: propose, score, execute one interval, repeat.

use alloc::vec::Vec;

use rand::Rng as _;

use super::proposer::zero_action;
use super::scenario::{collides, Scenario};
use super::teacher::TEACHER_COMFORT;
use crate::error::{invalid, Error, Result};
use crate::geometry::Point2;
use crate::kinematics::derive_kinematics;
use crate::math;
use crate::predicates::EGO_EXTENT;
use crate::rng;
use crate::scoring::{Clock, CycleRecord, Monitor, Proposer, Scorer};
use crate::trace::{horizon_steps, EgoPlanPoint, Frame, Trace};

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub collision: bool,
    pub drivable_exit: bool,
    /// Cycles whose executed plan broke a comfort threshold.
    pub comfort_violations: usize,
    /// Distance driven, m.
    pub progress: f64,
    /// Mean teacher robustness of the executed plans.
    pub teacher_score: f64,
    pub cycles: Vec<CycleRecord>,
}

impl RunMetrics {
    pub fn over_budget(&self) -> usize {
        self.cycles.iter().filter(|c| c.over_budget).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopConfig {
    pub steps: usize,
    /// Thresholds (forward, backward, left, right) counted as violations.
    pub comfort: [f64; 4],
}

impl LoopConfig {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            comfort: TEACHER_COMFORT,
        }
    }
}

/// Clock that never advances; timing fields read zero.
pub struct NullClock;

impl Clock for NullClock {
    fn now_ms(&self) -> f64 {
        0.0
    }
}

fn corners(p: &EgoPlanPoint) -> [Point2; 4] {
    let (s, c) = (math::sin(p.heading), math::cos(p.heading));
    let f = Point2::new(c, s).scale(EGO_EXTENT.length / 2.0);
    let n = Point2::new(-s, c).scale(EGO_EXTENT.width / 2.0);
    let o = p.pos();
    [o.add(f).add(n), o.add(f).sub(n), o.sub(f).sub(n), o.sub(f).add(n)]
}

/// Runs `cfg.steps` cycles of `scn` with `scorer` choosing among the
/// proposer's candidates. `teacher` only grades the executed plans.
pub fn run_closed_loop(
    scn: &Scenario,
    proposer: &mut impl Proposer,
    scorer: Scorer,
    teacher: &Scorer,
    cfg: &LoopConfig,
    clock: &impl Clock,
) -> Result<RunMetrics> {
    if cfg.steps == 0 {
        return Err(invalid("a closed-loop run needs steps >= 1"));
    }
    let len = horizon_steps(scn.rate_hz, crate::trace::DEFAULT_HORIZON_S) + 1;
    let mut monitor = Monitor::new(scorer, scn.rate_hz);
    let mut ego = scn.ego;
    let mut age = 0usize;
    let mut m = RunMetrics {
        collision: false,
        drivable_exit: false,
        comfort_violations: 0,
        progress: 0.0,
        teacher_score: 0.0,
        cycles: Vec::with_capacity(cfg.steps),
    };
    for k in 0..cfg.steps {
        let env: Frame = scn.frame_at(k, zero_action(scn, &ego, len), len);
        let record = monitor.step(&env, proposer, clock);
        if record.selected.is_some() {
            age = 0;
        } else {
            age += 1;
        }
        let held = match &monitor.held {
            Some(p) => p,
            None => {
                return Err(record.error.clone().map_or(Error::Internal("no plan selected".into()), Error::Internal))
            }
        };
        let plan = &held[age.min(held.len() - 1)..];
        let plan: Vec<EgoPlanPoint> = if plan.len() >= 3 {
            plan.to_vec()
        } else {
            zero_action(scn, &ego, len)
        };
        let trace = Trace::from_plan(&env, &plan, monitor.n_frames, scn.rate_hz, monitor.horizon_s)?;
        m.teacher_score += teacher.score_trace(&trace)?.total;
        let maxima = derive_kinematics(&plan, scn.dt())?.directional_maxima();
        if maxima.iter().zip(&cfg.comfort).any(|(a, lim)| a > lim) {
            m.comfort_violations += 1;
        }
        let next = plan[1];
        m.progress += next.pos().dist(ego.pos());
        ego = next;
        if collides(&ego, &env.agents, 1) {
            m.collision = true;
        }
        if corners(&ego).iter().any(|&c| scn.map.drivable_margin(c) < 0.0) {
            m.drivable_exit = true;
        }
        m.cycles.push(record);
    }
    m.teacher_score /= cfg.steps as f64;
    Ok(m)
}

/// Wraps a proposer and forwards one of its candidates chosen uniformly at
/// random: the no-scoring baseline.
pub struct RandomPick<P> {
    pub inner: P,
    rng: rng::Rng,
}

impl<P> RandomPick<P> {
    pub fn new(inner: P, seed: u64) -> Self {
        Self {
            inner,
            rng: rng::derive(seed, 0x9A2C),
        }
    }
}

impl<P: Proposer> Proposer for RandomPick<P> {
    fn propose(&mut self, env: &Frame) -> Result<Vec<Vec<EgoPlanPoint>>> {
        let mut c = self.inner.propose(env)?;
        if c.is_empty() {
            return Ok(c);
        }
        let k = self.rng.gen_range(0..c.len());
        Ok(alloc::vec![c.swap_remove(k)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicates::register_builtin_predicates;
    use crate::sim::proposer::AtSampler;
    use crate::sim::scenario::{generate_scenario, ScenarioKind, ScenarioSpec};
    use crate::sim::teacher::{teacher_registry, three_rule_teacher};

    fn scorers() -> (Scorer, Scorer) {
        let t = three_rule_teacher();
        let reg = teacher_registry(&t).unwrap();
        let s = Scorer::new(&t, &reg).unwrap();
        (s.clone(), s)
    }

    #[test]
    fn stationary_is_uneventful() {
        let (rules, teacher) = scorers();
        for seed in 0..3 {
            let scn = generate_scenario(ScenarioSpec::new(ScenarioKind::Stationary, seed));
            let mut p = AtSampler::new(&scn, 5).unwrap();
            let m = run_closed_loop(&scn, &mut p, rules.clone(), &teacher, &LoopConfig::new(20), &NullClock).unwrap();
            assert!(!m.collision && !m.drivable_exit);
            assert!(m.progress >= 0.0);
            assert_eq!(m.cycles.len(), 20);
        }
    }

    #[test]
    fn episodes_are_deterministic() {
        let (rules, teacher) = scorers();
        let scn = generate_scenario(ScenarioSpec::new(ScenarioKind::Following, 5));
        let run = || {
            let mut p = RandomPick::new(AtSampler::new(&scn, 10).unwrap(), 3);
            run_closed_loop(&scn, &mut p, rules.clone(), &teacher, &LoopConfig::new(15), &NullClock).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_steps_rejected() {
        let scorer = Scorer::new(&Default::default(), &register_builtin_predicates()).unwrap();
        let scn = generate_scenario(ScenarioSpec::new(ScenarioKind::Following, 0));
        let mut p = AtSampler::new(&scn, 1).unwrap();
        assert!(run_closed_loop(&scn, &mut p, scorer.clone(), &scorer, &LoopConfig::new(0), &NullClock).is_err());
    }

    #[test]
    fn rule_scorer_beats_random_pick_on_following() {
        let (rules, teacher) = scorers();
        let (mut ruled, mut random) = (0.0, 0.0);
        for seed in 0..6 {
            let scn = generate_scenario(ScenarioSpec::new(ScenarioKind::Following, seed));
            let cfg = LoopConfig::new(30);
            let mut p = AtSampler::new(&scn, 15).unwrap();
            ruled += run_closed_loop(&scn, &mut p, rules.clone(), &teacher, &cfg, &NullClock)
                .unwrap()
                .teacher_score;
            let mut q = RandomPick::new(AtSampler::new(&scn, 15).unwrap(), seed);
            random += run_closed_loop(&scn, &mut q, rules.clone(), &teacher, &cfg, &NullClock)
                .unwrap()
                .teacher_score;
        }
        assert!(ruled > random, "{ruled} vs {random}");
    }
}
