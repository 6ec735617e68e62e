//! Ground-truth rule sets used to synthesize demonstrations.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::extract::{Connective, Pair, RuleSet};
use crate::predicates::{register_builtin_predicates, PredicateRegistry};

/// Comfort thresholds (forward, backward, left, right), m/s^2.
pub const TEACHER_COMFORT: [f64; 4] = [1.23, 1.13, 0.98, 0.98];
pub const TEACHER_MIN_TTC: f64 = 3.0;

fn rules(lines: &[&str], provenance: &str) -> Result<RuleSet> {
    let reg = register_builtin_predicates();
    let known = |id: &str| reg.contains(id);
    let pairs = lines.iter().map(|l| Pair::parse(l, &known)).collect::<Result<Vec<_>>>()?;
    let mut set = RuleSet::new(pairs, Connective::And);
    set.provenance = String::from(provenance);
    set.theta = teacher_theta(&set.atoms());
    Ok(set)
}

fn teacher_theta(atoms: &[String]) -> Vec<(String, Vec<f64>)> {
    atoms
        .iter()
        .filter_map(|id| match id.as_str() {
            "Comfortable" => Some((id.clone(), TEACHER_COMFORT.to_vec())),
            "SafeTTC" => Some((id.clone(), vec![TEACHER_MIN_TTC])),
            _ => None,
        })
        .collect()
}

/// `T -> G Comfortable` at the teacher thresholds.
pub fn comfort_teacher() -> RuleSet {
    rules(&["T -> G Comfortable"], "teacher:comfort").expect("static rules parse")
}

/// Drivable area, comfort while safe, speeding only when overtaking.
pub fn three_rule_teacher() -> RuleSet {
    rules(
        &[
            "T -> G InDrivable",
            "G SafeTTC -> G Comfortable",
            "!SpeedLimitCompliant -> F OvertakingContext",
        ],
        "teacher:three-rule",
    )
    .expect("static rules parse")
}

/// A rule set touching every builtin predicate.
pub fn full_rules() -> RuleSet {
    rules(
        &[
            "T -> G InDrivable",
            "G SafeTTC -> G Comfortable",
            "!SpeedLimitCompliant -> F OvertakingContext",
            "ApproachingStop & TrafficLightRed -> F Stopped",
            "HighLaneCurvature -> G InLane",
            "NearVRU & AgentNearby -> SpeedLimitCompliant",
            "!InIntersection & !LeadVehicleAhead -> ProgressMade",
            "SlowLeadVehicle -> F InLane",
        ],
        "builtin:full",
    )
    .expect("static rules parse")
}

/// The builtin registry carrying the teacher parameters.
pub fn teacher_registry(teacher: &RuleSet) -> Result<PredicateRegistry> {
    let mut reg = register_builtin_predicates();
    teacher.apply_theta(&mut reg)?;
    Ok(reg)
}
