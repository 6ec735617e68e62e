//! Quantitative semantics of formulas over predicate signals.
//!
//! Hard semantics uses min/max. Soft semantics replaces them by the
//! Boltzmann-weighted averages
//!
//! ```text
//! softmin(v) = sum_i v_i exp(-k v_i) / sum_j exp(-k v_j)
//! softmax(v) = sum_i v_i exp( k v_i) / sum_j exp( k v_j)
//! ```
//!
//! which stay inside `[min v, max v]`, so robustness values never leave
//! `[-1, 1]`. Temporal operators range over the suffix `t' >= t` of the
//! finite trace. Whole sequences are evaluated at once: suffix aggregates
//! are running sums, so `G`/`F` cost O(L) per node in both directions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::formula::Formula;
use crate::math;

pub type Signals = BTreeMap<String, Vec<f64>>;

pub const DEFAULT_KAPPA: f64 = 10.0;

/// Above this `kappa * spread` a single global shift could underflow every
/// weight of some suffix, so evaluation switches to per-suffix shifts.
const GLOBAL_SHIFT_LIMIT: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Semantics {
    Hard,
    Soft { kappa: f64 },
}

impl Semantics {
    pub fn soft(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid(format!("kappa must be positive, got {kappa}")));
        }
        Ok(Semantics::Soft { kappa })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agg {
    Min,
    Max,
}

impl Agg {
    /// Sign applied to kappa in the Boltzmann weights.
    fn dir(self) -> f64 {
        match self {
            Agg::Min => -1.0,
            Agg::Max => 1.0,
        }
    }

    fn hard(self, a: f64, b: f64) -> f64 {
        match self {
            Agg::Min => a.min(b),
            Agg::Max => a.max(b),
        }
    }

    /// True when `x` should replace the current extremum `cur`.
    fn improves(self, x: f64, cur: f64) -> bool {
        match self {
            Agg::Min => x <= cur,
            Agg::Max => x >= cur,
        }
    }
}

fn boltzmann(values: &[f64], kappa: f64, agg: Agg) -> f64 {
    let s = agg.dir() * kappa;
    let shift = values.iter().map(|v| s * v).fold(f64::NEG_INFINITY, f64::max);
    let (mut num, mut den) = (0.0, 0.0);
    for &v in values {
        let w = math::exp(s * v - shift);
        num += v * w;
        den += w;
    }
    num / den
}

fn boltzmann_gradient(values: &[f64], kappa: f64, agg: Agg) -> Vec<f64> {
    let s = agg.dir() * kappa;
    let y = boltzmann(values, kappa, agg);
    let shift = values.iter().map(|v| s * v).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().map(|v| math::exp(s * v - shift)).collect();
    let z: f64 = w.iter().sum();
    values
        .iter()
        .zip(&w)
        .map(|(v, w)| w / z * (1.0 + s * (v - y)))
        .collect()
}

fn check_soft(values: &[f64], kappa: f64) -> Result<()> {
    if values.is_empty() {
        return Err(invalid("soft min/max of an empty sequence"));
    }
    Semantics::soft(kappa).map(|_| ())
}

pub fn soft_min(values: &[f64], kappa: f64) -> Result<f64> {
    check_soft(values, kappa)?;
    Ok(boltzmann(values, kappa, Agg::Min))
}

pub fn soft_max(values: &[f64], kappa: f64) -> Result<f64> {
    check_soft(values, kappa)?;
    Ok(boltzmann(values, kappa, Agg::Max))
}

/// d soft_min / d values.
pub fn soft_min_gradient(values: &[f64], kappa: f64) -> Result<Vec<f64>> {
    check_soft(values, kappa)?;
    Ok(boltzmann_gradient(values, kappa, Agg::Min))
}

/// d soft_max / d values.
pub fn soft_max_gradient(values: &[f64], kappa: f64) -> Result<Vec<f64>> {
    check_soft(values, kappa)?;
    Ok(boltzmann_gradient(values, kappa, Agg::Max))
}

/// Two-argument aggregate used by `&`, `|` and the gates.
#[inline]
pub fn pair(a: f64, b: f64, agg: Agg, sem: Semantics) -> f64 {
    match sem {
        Semantics::Hard => agg.hard(a, b),
        Semantics::Soft { kappa } => {
            let s = agg.dir() * kappa;
            // weight of b relative to a
            let d = s * (b - a);
            if d > 0.0 {
                let r = math::exp(-d);
                (a * r + b) / (1.0 + r)
            } else {
                let r = math::exp(d);
                (a + b * r) / (1.0 + r)
            }
        }
    }
}

/// Partial derivatives of `pair(a, b)` given its value `y`.
#[inline]
pub fn pair_gradient(a: f64, b: f64, y: f64, agg: Agg, sem: Semantics) -> (f64, f64) {
    match sem {
        Semantics::Hard => {
            if agg.improves(a, b) {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        }
        Semantics::Soft { kappa } => {
            let s = agg.dir() * kappa;
            let d = s * (b - a);
            // softmax weights of (a, b)
            let (wa, wb) = if d > 0.0 {
                let r = math::exp(-d);
                (r / (1.0 + r), 1.0 / (1.0 + r))
            } else {
                let r = math::exp(d);
                (1.0 / (1.0 + r), r / (1.0 + r))
            };
            (wa * (1.0 + s * (a - y)), wb * (1.0 + s * (b - y)))
        }
    }
}

/// `out[t] = agg(x[t..])`.
pub fn suffix_forward(x: &[f64], agg: Agg, sem: Semantics, out: &mut [f64]) {
    let n = x.len();
    debug_assert_eq!(out.len(), n);
    if n == 0 {
        return;
    }
    match sem {
        Semantics::Hard => {
            let mut cur = x[n - 1];
            for t in (0..n).rev() {
                cur = agg.hard(cur, x[t]);
                out[t] = cur;
            }
        }
        Semantics::Soft { kappa } => {
            let s = agg.dir() * kappa;
            let (lo, hi) = bounds(x);
            if kappa * (hi - lo) > GLOBAL_SHIFT_LIMIT {
                for t in 0..n {
                    out[t] = boltzmann(&x[t..], kappa, agg);
                }
                return;
            }
            let shift = if s > 0.0 { s * hi } else { s * lo };
            let (mut num, mut den) = (0.0, 0.0);
            for t in (0..n).rev() {
                let w = math::exp(s * x[t] - shift);
                num += x[t] * w;
                den += w;
                out[t] = num / den;
            }
        }
    }
}

fn bounds(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Accumulates into `dx` the pullback of `dy` through `suffix_forward`.
/// `y` must be the forward output for `x`.
pub fn suffix_backward(x: &[f64], y: &[f64], dy: &[f64], agg: Agg, sem: Semantics, dx: &mut [f64]) {
    let n = x.len();
    if n == 0 {
        return;
    }
    match sem {
        Semantics::Hard => {
            // argmin/argmax of each suffix, lowest index on ties
            let mut arg = n - 1;
            let mut args = vec![0usize; n];
            for t in (0..n).rev() {
                if agg.improves(x[t], x[arg]) {
                    arg = t;
                }
                args[t] = arg;
            }
            for t in 0..n {
                dx[args[t]] += dy[t];
            }
        }
        Semantics::Soft { kappa } => {
            let s = agg.dir() * kappa;
            let (lo, hi) = bounds(x);
            if kappa * (hi - lo) > GLOBAL_SHIFT_LIMIT {
                for t in 0..n {
                    if dy[t] == 0.0 {
                        continue;
                    }
                    let g = boltzmann_gradient(&x[t..], kappa, agg);
                    for (j, gj) in g.iter().enumerate() {
                        dx[t + j] += dy[t] * gj;
                    }
                }
                return;
            }
            let shift = if s > 0.0 { s * hi } else { s * lo };
            // suffix normalizers
            let mut z = vec![0.0; n];
            let mut acc = 0.0;
            for t in (0..n).rev() {
                acc += math::exp(s * x[t] - shift);
                z[t] = acc;
            }
            // dx_j = w_j * sum_{t <= j} dy_t / Z_t * (1 + s (x_j - y_t))
            let (mut a, mut b) = (0.0, 0.0);
            for j in 0..n {
                a += dy[j] / z[j];
                b += dy[j] * y[j] / z[j];
                let w = math::exp(s * x[j] - shift);
                dx[j] += w * (a * (1.0 + s * x[j]) - s * b);
            }
        }
    }
}

fn signal<'a>(signals: &'a Signals, id: &str) -> Result<&'a Vec<f64>> {
    signals.get(id).ok_or_else(|| Error::UnknownPredicate(id.into()))
}

fn common_len(f: &Formula, signals: &Signals) -> Result<usize> {
    let mut len = None;
    for id in f.atoms() {
        let n = signal(signals, &id)?.len();
        match len {
            None => len = Some(n),
            Some(m) if m != n => {
                return Err(invalid(format!("signal `{id}` has length {n}, expected {m}")))
            }
            _ => {}
        }
    }
    // constant-only formulas take their length from any signal present
    Ok(len.or_else(|| signals.values().next().map(Vec::len)).unwrap_or(1))
}

fn eval_node(f: &Formula, signals: &Signals, sem: Semantics, n: usize) -> Result<Vec<f64>> {
    Ok(match f {
        Formula::True => vec![1.0; n],
        Formula::False => vec![-1.0; n],
        Formula::Atom(id) => signal(signals, id)?.clone(),
        Formula::Not(x) => eval_node(x, signals, sem, n)?.into_iter().map(|v| -v).collect(),
        Formula::G(x) | Formula::F(x) => {
            let agg = if matches!(f, Formula::G(_)) { Agg::Min } else { Agg::Max };
            let xs = eval_node(x, signals, sem, n)?;
            let mut out = vec![0.0; n];
            suffix_forward(&xs, agg, sem, &mut out);
            out
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let agg = if matches!(f, Formula::And(..)) { Agg::Min } else { Agg::Max };
            let xa = eval_node(a, signals, sem, n)?;
            let xb = eval_node(b, signals, sem, n)?;
            xa.iter().zip(&xb).map(|(&p, &q)| pair(p, q, agg, sem)).collect()
        }
    })
}

/// Robustness of `f` at every time step.
pub fn eval_sequence(f: &Formula, signals: &Signals, sem: Semantics) -> Result<Vec<f64>> {
    if let Semantics::Soft { kappa } = sem {
        Semantics::soft(kappa)?;
    }
    let n = common_len(f, signals)?;
    eval_node(f, signals, sem, n)
}

fn at(seq: Vec<f64>, t: usize) -> Result<f64> {
    seq.get(t).copied().ok_or(Error::Index { index: t, len: seq.len() })
}

pub fn eval_hard(f: &Formula, signals: &Signals, t: usize) -> Result<f64> {
    at(eval_sequence(f, signals, Semantics::Hard)?, t)
}

pub fn eval_soft(f: &Formula, signals: &Signals, t: usize, kappa: f64) -> Result<f64> {
    at(eval_sequence(f, signals, Semantics::soft(kappa)?)?, t)
}

fn backward_node(
    f: &Formula,
    dy: &[f64],
    signals: &Signals,
    sem: Semantics,
    n: usize,
    grads: &mut Signals,
) -> Result<()> {
    match f {
        Formula::True | Formula::False => {}
        Formula::Atom(id) => {
            let g = grads.get_mut(id).expect("gradient slot per atom");
            for (g, d) in g.iter_mut().zip(dy) {
                *g += d;
            }
        }
        Formula::Not(x) => {
            let neg: Vec<f64> = dy.iter().map(|d| -d).collect();
            backward_node(x, &neg, signals, sem, n, grads)?;
        }
        Formula::G(x) | Formula::F(x) => {
            let agg = if matches!(f, Formula::G(_)) { Agg::Min } else { Agg::Max };
            let xs = eval_node(x, signals, sem, n)?;
            let mut ys = vec![0.0; n];
            suffix_forward(&xs, agg, sem, &mut ys);
            let mut dx = vec![0.0; n];
            suffix_backward(&xs, &ys, dy, agg, sem, &mut dx);
            backward_node(x, &dx, signals, sem, n, grads)?;
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            let agg = if matches!(f, Formula::And(..)) { Agg::Min } else { Agg::Max };
            let xa = eval_node(a, signals, sem, n)?;
            let xb = eval_node(b, signals, sem, n)?;
            let mut da = vec![0.0; n];
            let mut db = vec![0.0; n];
            for t in 0..n {
                let y = pair(xa[t], xb[t], agg, sem);
                let (ga, gb) = pair_gradient(xa[t], xb[t], y, agg, sem);
                da[t] = dy[t] * ga;
                db[t] = dy[t] * gb;
            }
            backward_node(a, &da, signals, sem, n, grads)?;
            backward_node(b, &db, signals, sem, n, grads)?;
        }
    }
    Ok(())
}

/// Gradient of the soft robustness at `t` with respect to every signal
/// value, keyed like `signals` (atoms absent from `f` get zero vectors).
pub fn eval_gradient(f: &Formula, signals: &Signals, t: usize, kappa: f64) -> Result<Signals> {
    let sem = Semantics::soft(kappa)?;
    let n = common_len(f, signals)?;
    if t >= n {
        return Err(Error::Index { index: t, len: n });
    }
    let mut grads: Signals = signals.iter().map(|(k, v)| (k.clone(), vec![0.0; v.len()])).collect();
    let mut dy = vec![0.0; n];
    dy[t] = 1.0;
    backward_node(f, &dy, signals, sem, n, &mut grads)?;
    Ok(grads)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::formula::{atom, strategies};
    use proptest::prelude::*;
    use proptest::strategy::ValueTree;
    use rand::Rng as _;

    pub fn random_signals(rng: &mut crate::rng::Rng, ids: &[&str], len: usize) -> Signals {
        ids.iter()
            .map(|id| (String::from(*id), (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()))
            .collect()
    }

    fn sig(v: &[f64]) -> Signals {
        [(String::from("A"), v.to_vec())].into_iter().collect()
    }

    /// Strong until by its textbook recursion over the suffix.
    pub fn strong_until(l: &[f64], r: &[f64], t: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut prefix = f64::INFINITY;
        for k in t..l.len() {
            best = best.max(r[k].min(prefix));
            prefix = prefix.min(l[k]);
        }
        best
    }

    #[test]
    fn temporal_examples() {
        let s = sig(&[0.5, -0.2, 0.3]);
        assert_eq!(eval_hard(&atom("A").g(), &s, 0).unwrap(), -0.2);
        assert_eq!(eval_hard(&atom("A").f(), &s, 1).unwrap(), 0.3);
        assert_eq!(eval_hard(&atom("A").f(), &s, 3), Err(Error::Index { index: 3, len: 3 }));
        assert_eq!(
            eval_hard(&atom("B"), &s, 0),
            Err(Error::UnknownPredicate("B".into()))
        );
    }

    #[test]
    fn soft_min_examples() {
        assert_eq!(soft_min(&[0.4], 3.0).unwrap(), 0.4);
        let x = -0.37;
        for k in [0.1, 1.0, 50.0, 1e4] {
            assert!((soft_min(&[x, x, x], k).unwrap() - x).abs() < 1e-15);
        }
        let v = soft_min(&[0.5, -0.2, 0.3], 10.0).unwrap();
        // closed form evaluated directly
        let w = [(-5.0f64).exp(), (2.0f64).exp(), (-3.0f64).exp()];
        let direct = (0.5 * w[0] - 0.2 * w[1] + 0.3 * w[2]) / (w[0] + w[1] + w[2]);
        assert!((v - direct).abs() < 1e-12);
        assert!(v > -0.2 && v < 0.5 && (v + 0.2).abs() < 0.02);
        assert!(soft_min(&[], 1.0).is_err());
        assert!(soft_min(&[1.0], 0.0).is_err());
        assert!(eval_soft(&atom("A"), &sig(&[0.1]), 0, -1.0).is_err());
    }

    #[test]
    fn de_morgan_and_double_negation_exact() {
        let mut rng = crate::rng::seeded(11);
        for _ in 0..1000 {
            let s = random_signals(&mut rng, &["A", "B"], 12);
            let t = rng.gen_range(0..12);
            let (a, b) = (atom("A"), atom("B"));
            let lhs = eval_hard(&a.clone().and(b.clone()).not(), &s, t).unwrap();
            let rhs = eval_hard(&a.clone().not().or(b.clone().not()), &s, t).unwrap();
            assert_eq!(lhs, rhs);
            assert_eq!(eval_hard(&a.clone().not().not(), &s, t).unwrap(), eval_hard(&a, &s, t).unwrap());
            assert_eq!(
                eval_hard(&a.clone().g().not(), &s, t).unwrap(),
                eval_hard(&a.clone().not().f(), &s, t).unwrap()
            );
        }
    }

    #[test]
    fn derived_until_under_approximates_strong_until() {
        // F r & G(l | r) implies l U r, and its robustness never exceeds it
        let mut rng = crate::rng::seeded(5);
        let f = atom("B").f().and(atom("A").or(atom("B")).g());
        for _ in 0..1000 {
            let s = random_signals(&mut rng, &["A", "B"], 10);
            let t = rng.gen_range(0..10);
            let derived = eval_hard(&f, &s, t).unwrap();
            let until = strong_until(&s["A"], &s["B"], t);
            assert!(derived <= until);
        }
    }

    #[test]
    fn suffix_soft_matches_direct_weights() {
        let mut rng = crate::rng::seeded(3);
        for kappa in [0.5, 10.0, 400.0] {
            let x: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for agg in [Agg::Min, Agg::Max] {
                let mut y = vec![0.0; 30];
                suffix_forward(&x, agg, Semantics::Soft { kappa }, &mut y);
                for t in 0..30 {
                    let direct = boltzmann(&x[t..], kappa, agg);
                    assert!((y[t] - direct).abs() < 1e-12);
                }
            }
        }
    }

    fn central_difference(f: &Formula, s: &Signals, t: usize, kappa: f64, id: &str, j: usize) -> f64 {
        let h = 1e-5;
        let mut p = s.clone();
        p.get_mut(id).unwrap()[j] += h;
        let mut m = s.clone();
        m.get_mut(id).unwrap()[j] -= h;
        (eval_soft(f, &p, t, kappa).unwrap() - eval_soft(f, &m, t, kappa).unwrap()) / (2.0 * h)
    }

    #[test]
    fn atom_and_negation_gradients() {
        let s = sig(&[0.1, 0.2, 0.3, 0.4]);
        let g = eval_gradient(&atom("A"), &s, 2, 10.0).unwrap();
        assert_eq!(g["A"], vec![0.0, 0.0, 1.0, 0.0]);
        let f = atom("A").f();
        let g1 = eval_gradient(&f, &s, 1, 10.0).unwrap();
        let g2 = eval_gradient(&f.not(), &s, 1, 10.0).unwrap();
        for (a, b) in g1["A"].iter().zip(&g2["A"]) {
            assert_eq!(*a, -b);
        }
    }

    #[test]
    fn soft_min_gradient_matches_differences() {
        let mut rng = crate::rng::seeded(8);
        for _ in 0..50 {
            let v: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let kappa = rng.gen_range(0.5..20.0);
            let g = soft_min_gradient(&v, kappa).unwrap();
            for i in 0..v.len() {
                let h = 1e-6;
                let mut p = v.clone();
                p[i] += h;
                let mut m = v.clone();
                m[i] -= h;
                let fd = (soft_min(&p, kappa).unwrap() - soft_min(&m, kappa).unwrap()) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-5 * fd.abs().max(1e-3), "{fd} {}", g[i]);
            }
        }
    }

    #[test]
    fn soft_gap_shrinks_with_kappa() {
        let mut rng = crate::rng::seeded(21);
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let strat = strategies::formula(&["A", "B", "C"], 5);
        let cases: Vec<(Formula, Signals)> = (0..300)
            .map(|_| {
                let f = strat.new_tree(&mut runner).unwrap().current();
                (f, random_signals(&mut rng, &["A", "B", "C"], 15))
            })
            .collect();
        let gap = |kappa: f64| {
            cases
                .iter()
                .map(|(f, s)| (eval_soft(f, s, 0, kappa).unwrap() - eval_hard(f, s, 0).unwrap()).abs())
                .fold(0.0, f64::max)
        };
        let (g1, g10, g100) = (gap(1.0), gap(10.0), gap(100.0));
        assert!(g1 > g10 && g10 > g100, "{g1} {g10} {g100}");
        assert!(g100 < 0.05, "{g100}");
    }

    proptest! {
        #[test]
        fn soft_max_is_negated_soft_min(v in proptest::collection::vec(-1.0f64..1.0, 1..20), k in 0.1f64..50.0) {
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            let a = soft_max(&v, k).unwrap();
            let b = -soft_min(&neg, k).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn formula_gradient_matches_differences(
            f in strategies::formula(&["A", "B", "C"], 4),
            seed in 0u64..1000,
            t in 0usize..20,
        ) {
            let mut rng = crate::rng::seeded(seed);
            let s = random_signals(&mut rng, &["A", "B", "C"], 20);
            let kappa = 5.0;
            let g = eval_gradient(&f, &s, t, kappa).unwrap();
            for id in ["A", "B", "C"] {
                for j in 0..20 {
                    let fd = central_difference(&f, &s, t, kappa, id, j);
                    let an = g[id][j];
                    prop_assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-2), "{} {} {} {}", id, j, fd, an);
                }
            }
        }

        #[test]
        fn hard_and_soft_are_bounded(
            f in strategies::formula(&["A", "B"], 5),
            seed in 0u64..1000,
        ) {
            let mut rng = crate::rng::seeded(seed);
            let s = random_signals(&mut rng, &["A", "B"], 10);
            let m = s.values().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            for v in [eval_hard(&f, &s, 0).unwrap(), eval_soft(&f, &s, 0, 3.0).unwrap()] {
                prop_assert!(v.abs() <= m + 1e-12);
            }
        }

        #[test]
        fn negation_free_formulas_are_monotone(
            seed in 0u64..1000,
            bump in 0.0f64..0.5,
        ) {
            let mut rng = crate::rng::seeded(seed);
            let s = random_signals(&mut rng, &["A", "B"], 8);
            let f = atom("A").g().or(atom("B").f().and(atom("A"))).f();
            let mut up = s.clone();
            let j = (seed % 8) as usize;
            up.get_mut("A").unwrap()[j] += bump;
            prop_assert!(eval_hard(&f, &up, 0).unwrap() >= eval_hard(&f, &s, 0).unwrap());
        }
    }
}
