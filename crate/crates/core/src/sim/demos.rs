//! Positive-only demonstrations by rejection sampling against a teacher.

use alloc::format;
use alloc::vec::Vec;

use super::proposer::RandomProposer;
use super::scenario::{generate_scenario, Scenario, ScenarioSpec};
use crate::error::{Error, Result};
use crate::scoring::{Scorer, DEFAULT_FRAMES};
use crate::trace::{horizon_steps, Dataset, EgoPlanPoint, Trace, DEFAULT_HORIZON_S};

#[derive(Debug, Clone, PartialEq)]
pub struct DemoConfig {
    /// Required robustness margin on every teacher pair.
    pub delta: f64,
    pub n_frames: usize,
    pub seed: u64,
    /// A spec whose acceptance rate falls below this is infeasible.
    pub min_acceptance: f64,
    /// Attempts before the acceptance rate is judged.
    pub min_attempts: usize,
    /// Attempts on one scene before moving to a fresh one.
    pub tries_per_scene: usize,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            delta: 0.05,
            n_frames: DEFAULT_FRAMES,
            seed: 0,
            min_acceptance: 0.01,
            min_attempts: 300,
            tries_per_scene: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpecAcceptance {
    pub spec: ScenarioSpec,
    pub attempts: usize,
    pub accepted: usize,
}

impl SpecAcceptance {
    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DemoReport {
    pub per_spec: Vec<SpecAcceptance>,
}

/// Seed of the `j`-th scene drawn for a spec.
pub fn scene_seed(spec: &ScenarioSpec, run_seed: u64, j: u64) -> u64 {
    spec.seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(run_seed.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(j)
}

/// The trace a demonstration plan produces in its scene.
pub fn demo_trace(scn: &Scenario, plan: &[EgoPlanPoint], n_frames: usize) -> Result<Trace> {
    let env = scn.frame_at(0, plan.to_vec(), plan.len());
    Trace::from_plan(&env, plan, n_frames, scn.rate_hz, DEFAULT_HORIZON_S)
}

pub fn accepts(teacher: &Scorer, trace: &Trace, delta: f64) -> Result<bool> {
    Ok(teacher.score_trace(trace)?.pairs.iter().all(|&r| r > delta))
}

/// `n` traces, dealt round-robin over `specs`, each satisfying every
/// teacher pair with margin `cfg.delta`.
pub fn generate_demonstrations(
    teacher: &Scorer,
    specs: &[ScenarioSpec],
    n: usize,
    cfg: &DemoConfig,
) -> Result<(Dataset, DemoReport)> {
    if specs.is_empty() && n > 0 {
        return Err(Error::InvalidArgument("no scenario specs given".into()));
    }
    let mut report = DemoReport {
        per_spec: specs
            .iter()
            .map(|&spec| SpecAcceptance {
                spec,
                attempts: 0,
                accepted: 0,
            })
            .collect(),
    };
    let mut scene_counter = alloc::vec![0u64; specs.len()];
    let mut traces = Vec::with_capacity(n);
    let n_points = cfg.n_frames + horizon_steps(20, DEFAULT_HORIZON_S);
    for i in 0..n {
        let k = i % specs.len();
        let spec = specs[k];
        'scene: loop {
            let j = scene_counter[k];
            scene_counter[k] += 1;
            let scn = generate_scenario(ScenarioSpec::new(spec.kind, scene_seed(&spec, cfg.seed, j)));
            let mut proposer = RandomProposer::new(&scn, 1, n_points, scn.spec.seed ^ 0xDE30);
            for _ in 0..cfg.tries_per_scene {
                let acc = &mut report.per_spec[k];
                acc.attempts += 1;
                let plan = proposer.sample(&scn.ego);
                let trace = demo_trace(&scn, &plan, cfg.n_frames)?;
                if accepts(teacher, &trace, cfg.delta)? {
                    acc.accepted += 1;
                    traces.push(trace);
                    break 'scene;
                }
                if acc.attempts >= cfg.min_attempts && acc.rate() < cfg.min_acceptance {
                    return Err(Error::Infeasible(format!(
                        "teacher accepts {} of {} samples for {}",
                        acc.accepted, acc.attempts, spec
                    )));
                }
            }
        }
    }
    for a in &report.per_spec {
        log::info!("{}: accepted {} of {} ({:.1}%)", a.spec, a.accepted, a.attempts, 100.0 * a.rate());
    }
    Ok((Dataset::new(traces), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::RuleSet;
    use crate::kinematics::derive_kinematics;
    use crate::predicates::register_builtin_predicates;
    use crate::sim::scenario::ScenarioKind;
    use crate::sim::teacher::{comfort_teacher, teacher_registry, TEACHER_COMFORT};

    fn all_kinds(seed: u64) -> Vec<ScenarioSpec> {
        ScenarioKind::ALL.iter().map(|&k| ScenarioSpec::new(k, seed)).collect()
    }

    #[test]
    fn comfort_demos_stay_under_thresholds() {
        let teacher = comfort_teacher();
        let scorer = Scorer::new(&teacher, &teacher_registry(&teacher).unwrap()).unwrap();
        let (data, report) = generate_demonstrations(&scorer, &all_kinds(1), 45, &DemoConfig::default()).unwrap();
        assert_eq!(data.len(), 45);
        assert!(report.per_spec.iter().all(|a| a.accepted == 5));
        for t in &data.traces {
            assert!(scorer.score_trace(t).unwrap().pairs.iter().all(|&r| r > 0.05));
            for f in &t.frames {
                let m = derive_kinematics(&f.ego_plan, t.dt()).unwrap().directional_maxima();
                for d in 0..4 {
                    assert!(m[d] < TEACHER_COMFORT[d], "{m:?}");
                }
            }
        }
    }

    #[test]
    fn empty_teacher_accepts_everything() {
        let scorer = Scorer::new(&RuleSet::default(), &register_builtin_predicates()).unwrap();
        let (data, report) = generate_demonstrations(&scorer, &all_kinds(2), 18, &DemoConfig::default()).unwrap();
        assert_eq!(data.len(), 18);
        assert!(report.per_spec.iter().all(|a| a.attempts == a.accepted));
    }

    #[test]
    fn unsatisfiable_teacher_is_infeasible() {
        let reg = register_builtin_predicates();
        let known = |id: &str| reg.contains(id);
        let rules = RuleSet::new(
            alloc::vec![crate::extract::Pair::parse("T -> InDrivable & !InDrivable", &known).unwrap()],
            crate::extract::Connective::And,
        );
        let scorer = Scorer::new(&rules, &reg).unwrap();
        let cfg = DemoConfig {
            min_attempts: 50,
            ..DemoConfig::default()
        };
        let specs = [ScenarioSpec::new(ScenarioKind::Following, 0)];
        match generate_demonstrations(&scorer, &specs, 3, &cfg) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("following#0"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let teacher = comfort_teacher();
        let scorer = Scorer::new(&teacher, &teacher_registry(&teacher).unwrap()).unwrap();
        let a = generate_demonstrations(&scorer, &all_kinds(3), 9, &DemoConfig::default()).unwrap();
        let b = generate_demonstrations(&scorer, &all_kinds(3), 9, &DemoConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
