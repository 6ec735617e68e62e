//! A small synthetic driving world: scenarios, proposers, teacher-filtered
//! demonstrations and a closed-loop harness.

pub mod closed_loop;
pub mod demos;
pub mod path;
pub mod proposer;
pub mod scenario;
pub mod teacher;

pub use closed_loop::{run_closed_loop, LoopConfig, NullClock, RandomPick, RunMetrics};
pub use demos::{generate_demonstrations, DemoConfig, DemoReport, SpecAcceptance};
pub use path::{Path, Piece};
pub use proposer::{at_sampler, rollout, zero_action, AtSampler, Profile, RandomProposer};
pub use scenario::{generate_scenario, AgentScript, Scenario, ScenarioKind, ScenarioSpec};
pub use teacher::{comfort_teacher, full_rules, teacher_registry, three_rule_teacher, TEACHER_COMFORT};
