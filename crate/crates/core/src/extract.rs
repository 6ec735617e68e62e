//! From trained gate weights to condition-action rules.
//!
//! `concretize` replaces every gate by its dominant operator, `simplify`
//! minimizes the propositional skeleton (maximal temporal subtrees are
//! opaque variables), and `to_condition_action_pairs` rewrites the minimal
//! CNF clause by clause as `(conditions) -> actions`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::boolmin::{minimal_sop, Cube, TruthTable, MAX_VARS};
use crate::error::{Error, Result};
use crate::formula::{parse_formula_with, Formula};
use crate::network::{cluster_pairs, EnsembleStructure, LogicOp, LogicStructure, TemporalOp, LOGIC_OPS, TEMPORAL_OPS};
use crate::predicates::{PredicateDescriptor, PredicateKind, PredicateRegistry};

/// Index of the largest weight; exact ties go to the earliest operator.
fn argmax(w: &[f64]) -> (usize, bool) {
    let mut best = 0;
    for k in 1..w.len() {
        if w[k] > w[best] {
            best = k;
        }
    }
    let tied = w.iter().enumerate().any(|(k, &v)| k != best && v == w[best]);
    (best, tied)
}

fn apply_temporal(op: TemporalOp, x: Formula) -> Formula {
    match op {
        TemporalOp::G => x.g(),
        TemporalOp::F => x.f(),
        TemporalOp::Id => x,
    }
}

fn apply_logic(op: LogicOp, a: Formula, b: Formula) -> Formula {
    match op {
        LogicOp::And => a.and(b),
        LogicOp::Or => a.or(b),
    }
}

fn pick_logic(w: &[f64], what: &str, warnings: &mut Vec<String>) -> LogicOp {
    let (k, tied) = argmax(w);
    if tied {
        warnings.push(format!("{what}: tied weights, using {:?}", LOGIC_OPS[k]));
    }
    LOGIC_OPS[k]
}

pub fn concretize_member(s: &LogicStructure, warnings: &mut Vec<String>) -> Formula {
    let n = s.n_inputs();
    let inputs: Vec<Formula> = (0..n)
        .map(|i| {
            let mut x = Formula::Atom(s.predicates[i].clone());
            for l in 0..s.depth {
                let (k, tied) = argmax(s.temporal_gate(l, i));
                if tied {
                    warnings.push(format!("temporal gate {l}/{i}: tied weights, using {:?}", TEMPORAL_OPS[k]));
                }
                x = apply_temporal(TEMPORAL_OPS[k], x);
            }
            x
        })
        .collect();
    let mut acc: Option<Formula> = None;
    for (c, &(i, j)) in cluster_pairs(n).iter().enumerate() {
        let lit = |side: usize, f: &Formula| {
            if s.negation(c, side) < 0.0 {
                f.clone().not()
            } else {
                f.clone()
            }
        };
        let op = pick_logic(s.cluster_gate(c), &format!("cluster {c}"), warnings);
        let cl = apply_logic(op, lit(0, &inputs[i]), lit(1, &inputs[j]));
        acc = Some(match acc {
            None => cl,
            Some(prev) => {
                let op = pick_logic(s.aggregation_gate(c - 1), &format!("aggregation {}", c - 1), warnings);
                apply_logic(op, prev, cl)
            }
        });
    }
    acc.expect("at least one cluster")
}

/// Concretized formula plus one message per exactly tied gate.
pub fn concretize_with_warnings(e: &EnsembleStructure) -> (Formula, Vec<String>) {
    let mut warnings = Vec::new();
    let mut acc: Option<Formula> = None;
    for (m, member) in e.members.iter().enumerate() {
        let f = concretize_member(member, &mut warnings);
        acc = Some(match acc {
            None => f,
            Some(prev) => {
                let op = pick_logic(e.outer_gate(m - 1), &format!("outer {}", m - 1), &mut warnings);
                apply_logic(op, prev, f)
            }
        });
    }
    (acc.expect("non-empty ensemble"), warnings)
}

pub fn concretize(e: &EnsembleStructure) -> Formula {
    let (f, warnings) = concretize_with_warnings(e);
    for w in &warnings {
        log::warn!("{w}");
    }
    f
}

/// Collapses repeated temporal operators: `G G x = G x`, `F F x = F x`.
pub fn normalize_temporal(f: &Formula) -> Formula {
    match f {
        Formula::True | Formula::False | Formula::Atom(_) => f.clone(),
        Formula::G(x) => match normalize_temporal(x) {
            g @ Formula::G(_) => g,
            y => y.g(),
        },
        Formula::F(x) => match normalize_temporal(x) {
            g @ Formula::F(_) => g,
            y => y.f(),
        },
        Formula::Not(x) => normalize_temporal(x).not(),
        Formula::And(a, b) => normalize_temporal(a).and(normalize_temporal(b)),
        Formula::Or(a, b) => normalize_temporal(a).or(normalize_temporal(b)),
    }
}

/// Propositional abstraction: bare atoms and maximal temporal subtrees,
/// ordered by their text.
#[derive(Debug, Clone, PartialEq)]
pub struct Abstraction {
    pub vars: Vec<Formula>,
    index: BTreeMap<Formula, usize>,
}

impl Abstraction {
    pub fn of(formulas: &[&Formula]) -> Result<Self> {
        let mut found = Vec::new();
        for f in formulas {
            collect_vars(f, &mut found);
        }
        found.sort_by_key(|v| v.to_string());
        found.dedup();
        if found.len() > MAX_VARS {
            return Err(Error::Capacity(format!(
                "{} distinct propositional atoms exceed the limit of {MAX_VARS}",
                found.len()
            )));
        }
        let index = found.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        Ok(Self { vars: found, index })
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn table(&self, f: &Formula) -> Result<TruthTable> {
        let n = self.vars.len();
        Ok(match f {
            Formula::True => TruthTable::constant(n, true)?,
            Formula::False => TruthTable::constant(n, false)?,
            Formula::Atom(_) | Formula::G(_) | Formula::F(_) => {
                let i = *self
                    .index
                    .get(f)
                    .ok_or_else(|| Error::Internal(format!("`{f}` is not an abstraction variable")))?;
                TruthTable::var(n, i)?
            }
            Formula::Not(x) => self.table(x)?.not(),
            Formula::And(a, b) => self.table(a)?.and(&self.table(b)?),
            Formula::Or(a, b) => self.table(a)?.or(&self.table(b)?),
        })
    }

    fn literal(&self, var: usize, positive: bool) -> Formula {
        let v = self.vars[var].clone();
        if positive {
            v
        } else {
            v.not()
        }
    }

    fn product(&self, c: &Cube) -> Formula {
        Formula::conjunction(c.literal_list().into_iter().map(|(v, p)| self.literal(v, p)))
    }
}

fn collect_vars(f: &Formula, out: &mut Vec<Formula>) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Atom(_) | Formula::G(_) | Formula::F(_) => out.push(f.clone()),
        Formula::Not(x) => collect_vars(x, out),
        Formula::And(a, b) | Formula::Or(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

/// Minimal sum of products of `f` over its propositional abstraction.
pub fn simplify(f: &Formula) -> Result<Formula> {
    let f = normalize_temporal(f);
    let abs = Abstraction::of(&[&f])?;
    let cover = minimal_sop(&abs.table(&f)?)?;
    Ok(Formula::disjunction(cover.iter().map(|c| abs.product(c))))
}

/// True iff `f` holds under every assignment of its abstraction.
pub fn is_tautology(f: &Formula) -> Result<bool> {
    let f = normalize_temporal(f);
    let abs = Abstraction::of(&[&f])?;
    Ok(abs.table(&f)?.is_true())
}

pub fn equivalent(a: &Formula, b: &Formula) -> Result<bool> {
    let (a, b) = (normalize_temporal(a), normalize_temporal(b));
    let abs = Abstraction::of(&[&a, &b])?;
    Ok(abs.table(&a)? == abs.table(&b)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connective {
    And,
    Or,
}

impl Connective {
    pub fn symbol(self) -> &'static str {
        match self {
            Connective::And => "&",
            Connective::Or => "|",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "&" => Ok(Connective::And),
            "|" => Ok(Connective::Or),
            _ => Err(Error::Syntax {
                position: 0,
                message: format!("unknown connective `{s}`"),
            }),
        }
    }
}

/// `(conditions) -> action`; no conditions means `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub conditions: Vec<Formula>,
    pub action: Formula,
}

impl Pair {
    pub fn new(conditions: Vec<Formula>, action: Formula) -> Self {
        Self { conditions, action }
    }

    /// `!(c1 & ... & cn) | action`, or `action` alone without conditions.
    pub fn formula(&self) -> Formula {
        if self.conditions.is_empty() {
            self.action.clone()
        } else {
            Formula::conjunction(self.conditions.iter().cloned()).not().or(self.action.clone())
        }
    }

    /// Parses `c1 & c2 -> action`.
    pub fn parse(text: &str, known: &impl Fn(&str) -> bool) -> Result<Self> {
        let Some(arrow) = text.find("->") else {
            return Err(Error::Syntax {
                position: 0,
                message: "expected `->`".into(),
            });
        };
        let (lhs, rhs) = (&text[..arrow], &text[arrow + 2..]);
        let action = parse_formula_with(rhs, known).map_err(|e| shift(e, arrow + 2))?;
        let mut conditions = Vec::new();
        if lhs.trim() != "T" {
            for (start, part) in split_top_level(lhs, b'&') {
                conditions.push(parse_formula_with(part, known).map_err(|e| shift(e, start))?);
            }
        }
        Ok(Self { conditions, action })
    }
}

fn shift(e: Error, by: usize) -> Error {
    match e {
        Error::Syntax { position, message } => Error::Syntax {
            position: position + by,
            message,
        },
        other => other,
    }
}

/// Splits at `sep` outside parentheses, returning (offset, piece).
fn split_top_level(text: &str, sep: u8) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, b) in text.bytes().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth -= 1,
            _ if b == sep && depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &text[start..]));
    out
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conditions.is_empty() {
            f.write_str("T")?;
        }
        for (k, c) in self.conditions.iter().enumerate() {
            if k > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, " -> {}", self.action)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    pub pairs: Vec<Pair>,
    pub connective: Connective,
    /// Learned parameters by predicate id.
    pub theta: Vec<(String, Vec<f64>)>,
    pub provenance: String,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self {
            pairs: Vec::new(),
            connective: Connective::And,
            theta: Vec::new(),
            provenance: String::new(),
        }
    }
}

impl RuleSet {
    pub fn new(pairs: Vec<Pair>, connective: Connective) -> Self {
        Self {
            pairs,
            connective,
            ..Self::default()
        }
    }

    /// The pairs joined by the connective; `T` when there are none.
    pub fn formula(&self) -> Formula {
        let parts = self.pairs.iter().map(Pair::formula);
        match self.connective {
            Connective::And => Formula::conjunction(parts),
            Connective::Or if self.pairs.is_empty() => Formula::True,
            Connective::Or => Formula::disjunction(parts),
        }
    }

    pub fn is_trivial(&self) -> Result<bool> {
        is_tautology(&self.formula())
    }

    /// One pair per line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for p in &self.pairs {
            s.push_str(&p.to_string());
            s.push('\n');
        }
        s
    }

    pub fn atoms(&self) -> Vec<String> {
        self.formula().atoms().into_iter().collect()
    }

    /// Attaches the parameters of `preds`.
    pub fn with_theta(mut self, preds: &[PredicateDescriptor]) -> Self {
        self.theta = preds.iter().map(|p| (p.id.clone(), p.theta.clone())).collect();
        self
    }

    /// Writes the stored parameters into `registry`.
    pub fn apply_theta(&self, registry: &mut PredicateRegistry) -> Result<()> {
        for (id, theta) in &self.theta {
            let d = registry.get_mut(id).ok_or_else(|| Error::UnknownPredicate(id.clone()))?;
            d.check_theta(theta)?;
            d.theta = theta.clone();
        }
        Ok(())
    }
}

fn var_kind(v: &Formula, kind_of: &impl Fn(&str) -> Option<PredicateKind>) -> Result<PredicateKind> {
    let mut kind = PredicateKind::Condition;
    for a in v.atoms() {
        match kind_of(&a) {
            Some(PredicateKind::Action) => kind = PredicateKind::Action,
            Some(PredicateKind::Condition) => {}
            None => return Err(Error::UnknownPredicate(a)),
        }
    }
    Ok(kind)
}

/// Minimal CNF of `f`, one pair per clause. A variable counts as an action
/// when any of its atoms is an action predicate.
pub fn to_condition_action_pairs(f: &Formula, kind_of: impl Fn(&str) -> Option<PredicateKind>) -> Result<RuleSet> {
    let f = normalize_temporal(f);
    let abs = Abstraction::of(&[&f])?;
    let kinds = abs
        .vars
        .iter()
        .map(|v| var_kind(v, &kind_of))
        .collect::<Result<Vec<_>>>()?;
    // clauses of f are the negated terms of a minimal cover of !f
    let cover = minimal_sop(&abs.table(&f)?.not())?;
    let mut pairs = Vec::with_capacity(cover.len());
    for cube in &cover {
        let mut conditions = Vec::new();
        let mut actions = Vec::new();
        for (v, positive_in_term) in cube.literal_list() {
            if kinds[v] == PredicateKind::Action {
                actions.push(abs.literal(v, !positive_in_term));
            } else {
                conditions.push(abs.literal(v, positive_in_term));
            }
        }
        let pair = Pair::new(conditions, Formula::disjunction(actions));
        if pair.action == Formula::False {
            log::info!("environment constraint: {pair}");
        }
        pairs.push(pair);
    }
    Ok(RuleSet::new(pairs, Connective::And))
}

pub fn registry_kinds(registry: &PredicateRegistry) -> impl Fn(&str) -> Option<PredicateKind> + '_ {
    move |id| registry.kind_of(id)
}

/// concretize, simplify and split into pairs, carrying the model's theta.
pub fn extract_rules(
    structure: &EnsembleStructure,
    predicates: &[PredicateDescriptor],
    kind_of: impl Fn(&str) -> Option<PredicateKind>,
) -> Result<RuleSet> {
    let f = simplify(&concretize(structure))?;
    Ok(to_condition_action_pairs(&f, kind_of)?.with_theta(predicates))
}

const SATURATION: f64 = 10.0;
const MAX_DP_STATES: usize = 1 << 22;

fn temporal_chain(f: &Formula) -> Option<(Vec<TemporalOp>, &str)> {
    match f {
        Formula::Atom(a) => Some((Vec::new(), a)),
        Formula::G(x) | Formula::F(x) => {
            let (mut ops, a) = temporal_chain(x)?;
            ops.push(if matches!(f, Formula::G(_)) { TemporalOp::G } else { TemporalOp::F });
            Some((ops, a))
        }
        _ => None,
    }
}

fn u64_var(n: usize, i: usize) -> u64 {
    const W: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    W[i] & u64_mask(n)
}

fn u64_mask(n: usize) -> u64 {
    if n == 6 {
        u64::MAX
    } else {
        (1u64 << (1 << n)) - 1
    }
}

/// Cluster choice: (negate left, negate right, op).
type ClusterChoice = (bool, bool, LogicOp);

const CLUSTER_CHOICES: [ClusterChoice; 8] = [
    (false, false, LogicOp::And),
    (false, false, LogicOp::Or),
    (false, true, LogicOp::And),
    (false, true, LogicOp::Or),
    (true, false, LogicOp::And),
    (true, false, LogicOp::Or),
    (true, true, LogicOp::And),
    (true, true, LogicOp::Or),
];

fn combine(op: LogicOp, a: u64, b: u64) -> u64 {
    match op {
        LogicOp::And => a & b,
        LogicOp::Or => a | b,
    }
}

/// Saturated weights for `s` whose concretization is
/// `(c1 & .. & cn -> a1) op .. op (c1 & .. & cn -> am)`.
///
/// Conditions and actions are predicate ids of `s`, optionally wrapped in
/// up to `depth` temporal operators. Unused inputs must not influence the
/// result. Found by dynamic programming over the truth tables reachable by
/// the cluster fold.
pub fn theorem1_construct(
    s: &LogicStructure,
    conditions: &[Formula],
    actions: &[Formula],
    connective: Connective,
) -> Result<LogicStructure> {
    let n = s.n_inputs();
    if conditions.len() + actions.len() > n {
        return Err(Error::Capacity(format!(
            "{} conditions and {} actions need more than the structure's {n} inputs",
            conditions.len(),
            actions.len()
        )));
    }
    if n > 6 {
        return Err(Error::Capacity(format!("construction supports at most 6 inputs, got {n}")));
    }
    if actions.is_empty() {
        return Err(Error::InvalidArgument("at least one action is required".into()));
    }
    let mut out = s.clone();
    let mut used = vec![false; n];
    let mut slot = |f: &Formula| -> Result<usize> {
        let (ops, id) = temporal_chain(f).ok_or_else(|| {
            Error::InvalidArgument(format!("`{f}` is not a predicate under temporal operators"))
        })?;
        if ops.len() > s.depth {
            return Err(Error::Capacity(format!("`{f}` needs temporal depth {}", ops.len())));
        }
        let i = s
            .predicates
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| Error::UnknownPredicate(id.into()))?;
        if used[i] {
            return Err(Error::InvalidArgument(format!("predicate `{id}` used twice")));
        }
        used[i] = true;
        for l in 0..s.depth {
            out.set_temporal(l, i, ops.get(l).copied().unwrap_or(TemporalOp::Id), SATURATION);
        }
        Ok(i)
    };
    let cond_idx = conditions.iter().map(&mut slot).collect::<Result<Vec<_>>>()?;
    let act_idx = actions.iter().map(&mut slot).collect::<Result<Vec<_>>>()?;
    for i in 0..n {
        if !used[i] {
            for l in 0..s.depth {
                out.set_temporal(l, i, TemporalOp::Id, SATURATION);
            }
        }
    }

    let mask = u64_mask(n);
    let antecedent = cond_idx.iter().fold(mask, |acc, &i| acc & u64_var(n, i));
    let implications = act_idx.iter().map(|&a| (!antecedent | u64_var(n, a)) & mask);
    let target = match connective {
        Connective::And => implications.fold(mask, |x, y| x & y),
        Connective::Or => implications.fold(0, |x, y| x | y),
    };

    let clusters = cluster_pairs(n);
    let cluster_table = |c: usize, (ni, nj, op): ClusterChoice| {
        let (i, j) = clusters[c];
        let a = if ni { !u64_var(n, i) & mask } else { u64_var(n, i) };
        let b = if nj { !u64_var(n, j) & mask } else { u64_var(n, j) };
        combine(op, a, b)
    };
    // layers[k]: table after folding cluster k -> (previous table, choice, fold op)
    let mut layers: Vec<BTreeMap<u64, (u64, u8, LogicOp)>> = Vec::with_capacity(clusters.len());
    let mut first = BTreeMap::new();
    for (ci, ch) in CLUSTER_CHOICES.iter().enumerate() {
        first.entry(cluster_table(0, *ch)).or_insert((0, ci as u8, LogicOp::And));
    }
    layers.push(first);
    for c in 1..clusters.len() {
        let mut next = BTreeMap::new();
        for &prev in layers[c - 1].keys() {
            for op in LOGIC_OPS {
                for (ci, ch) in CLUSTER_CHOICES.iter().enumerate() {
                    next.entry(combine(op, prev, cluster_table(c, *ch)))
                        .or_insert((prev, ci as u8, op));
                }
            }
        }
        if next.len() > MAX_DP_STATES {
            return Err(Error::Capacity("too many reachable truth tables".into()));
        }
        layers.push(next);
    }
    if !layers[clusters.len() - 1].contains_key(&target) {
        return Err(Error::Capacity("target is not expressible by this structure".into()));
    }
    let mut table = target;
    for c in (0..clusters.len()).rev() {
        let (prev, ci, op) = layers[c][&table];
        let (ni, nj, cop) = CLUSTER_CHOICES[ci as usize];
        out.set_negation(c, 0, ni, SATURATION);
        out.set_negation(c, 1, nj, SATURATION);
        out.set_cluster(c, cop, SATURATION);
        if c > 0 {
            out.set_aggregation(c - 1, op, SATURATION);
        }
        table = prev;
    }
    Ok(out)
}

/// The formula `theorem1_construct` aims for.
pub fn theorem1_target(conditions: &[Formula], actions: &[Formula], connective: Connective) -> Formula {
    let rs = RuleSet::new(
        actions
            .iter()
            .map(|a| Pair::new(conditions.to_vec(), a.clone()))
            .collect(),
        connective,
    );
    rs.formula()
}
