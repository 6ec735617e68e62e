//! Two-level Boolean minimization over packed truth tables.
//!
//! Prime implicants come from a recursive Shannon split
//! (`P(f) = P(f0 f1) + x'(P(f0) - P(f0 f1)) + x(P(f1) - P(f0 f1))`), which
//! yields exactly the Quine-McCluskey prime set without materializing the
//! merge levels. The cover is exact by branch and bound seeded with a greedy
//! cover, falling back to the best cover found when the node budget runs out.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 16;
const MAX_PRIMES: usize = 20_000;
const COVER_BUDGET: usize = 20_000;

const VAR_WORDS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Truth table over `n` variables; bit `i` is the value at the assignment
/// whose variable `j` is bit `j` of `i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TruthTable {
    n: usize,
    words: Vec<u64>,
}

fn tail_mask(n: usize) -> u64 {
    if n >= 6 {
        u64::MAX
    } else {
        (1u64 << (1 << n)) - 1
    }
}

impl TruthTable {
    pub fn constant(n: usize, value: bool) -> Result<Self> {
        if n > MAX_VARS {
            return Err(Error::Capacity(format!("{n} variables exceed the limit of {MAX_VARS}")));
        }
        let len = if n >= 6 { 1 << (n - 6) } else { 1 };
        let fill = if value { tail_mask(n) } else { 0 };
        Ok(Self { n, words: vec![fill; len] })
    }

    /// The projection onto variable `i`.
    pub fn var(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::Index { index: i, len: n });
        }
        let mut t = Self::constant(n, false)?;
        let mask = tail_mask(n);
        for (w, word) in t.words.iter_mut().enumerate() {
            *word = if i < 6 {
                VAR_WORDS[i] & mask
            } else if (w >> (i - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            };
        }
        Ok(t)
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, idx: usize) -> bool {
        (self.words[idx >> 6] >> (idx & 63)) & 1 == 1
    }

    pub fn set(&mut self, idx: usize, v: bool) {
        let bit = 1u64 << (idx & 63);
        if v {
            self.words[idx >> 6] |= bit;
        } else {
            self.words[idx >> 6] &= !bit;
        }
    }

    pub fn and(&self, o: &Self) -> Self {
        let words = self.words.iter().zip(&o.words).map(|(a, b)| a & b).collect();
        Self { n: self.n, words }
    }

    pub fn or(&self, o: &Self) -> Self {
        let words = self.words.iter().zip(&o.words).map(|(a, b)| a | b).collect();
        Self { n: self.n, words }
    }

    pub fn not(&self) -> Self {
        let mask = tail_mask(self.n);
        let words = self.words.iter().map(|a| !a & mask).collect();
        Self { n: self.n, words }
    }

    pub fn is_false(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_true(&self) -> bool {
        let mask = tail_mask(self.n);
        self.words.iter().all(|&w| w == mask)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn minterms(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Cofactors on the highest variable: (x = 0, x = 1).
    fn split(&self) -> (Self, Self) {
        let n = self.n - 1;
        if self.n > 6 {
            let half = self.words.len() / 2;
            (
                Self { n, words: self.words[..half].to_vec() },
                Self { n, words: self.words[half..].to_vec() },
            )
        } else {
            let h = 1 << n;
            let m = (1u64 << h) - 1;
            let w = self.words[0];
            (Self { n, words: vec![w & m] }, Self { n, words: vec![(w >> h) & m] })
        }
    }
}

/// A product term: variables in `mask` appear, with polarity from `bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cube {
    pub mask: u32,
    pub bits: u32,
}

impl Cube {
    pub const TOP: Cube = Cube { mask: 0, bits: 0 };

    pub fn literals(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn contains(&self, minterm: usize) -> bool {
        (minterm as u32 & self.mask) == self.bits
    }

    /// Literals as (variable, positive), by variable.
    pub fn literal_list(&self) -> Vec<(usize, bool)> {
        (0..32)
            .filter(|i| self.mask >> i & 1 == 1)
            .map(|i| (i, self.bits >> i & 1 == 1))
            .collect()
    }

    pub fn table(&self, n: usize) -> Result<TruthTable> {
        let mut t = TruthTable::constant(n, true)?;
        for (v, pos) in self.literal_list() {
            let col = TruthTable::var(n, v)?;
            t = t.and(&if pos { col } else { col.not() });
        }
        Ok(t)
    }
}

/// Output order: fewer literals first, then by literal list with lower
/// variables first and the positive literal before the negative one.
pub fn cube_order(a: &Cube, b: &Cube) -> Ordering {
    let key = |c: &Cube| -> Vec<(usize, bool)> { c.literal_list().into_iter().map(|(v, p)| (v, !p)).collect() };
    a.literals().cmp(&b.literals()).then_with(|| key(a).cmp(&key(b)))
}

pub fn sop_table(n: usize, cubes: &[Cube]) -> Result<TruthTable> {
    let mut t = TruthTable::constant(n, false)?;
    for c in cubes {
        t = t.or(&c.table(n)?);
    }
    Ok(t)
}

/// All prime implicants of `t`.
pub fn prime_implicants(t: &TruthTable) -> Result<Vec<Cube>> {
    let mut memo = BTreeMap::new();
    let mut out = primes_rec(t, &mut memo)?;
    out.sort();
    Ok(out)
}

fn primes_rec(t: &TruthTable, memo: &mut BTreeMap<TruthTable, Vec<Cube>>) -> Result<Vec<Cube>> {
    if t.is_false() {
        return Ok(Vec::new());
    }
    if t.is_true() {
        return Ok(vec![Cube::TOP]);
    }
    if let Some(p) = memo.get(t) {
        return Ok(p.clone());
    }
    let x = t.n - 1;
    let (f0, f1) = t.split();
    let both = f0.and(&f1);
    let mut p01 = primes_rec(&both, memo)?;
    p01.sort();
    let mut out = p01.clone();
    for (f, bit) in [(&f0, 0u32), (&f1, 1u32)] {
        for c in primes_rec(f, memo)? {
            if p01.binary_search(&c).is_err() {
                out.push(Cube {
                    mask: c.mask | 1 << x,
                    bits: c.bits | bit << x,
                });
            }
        }
    }
    if out.len() > MAX_PRIMES {
        return Err(Error::Capacity(format!("more than {MAX_PRIMES} prime implicants")));
    }
    memo.insert(t.clone(), out.clone());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Cost {
    terms: usize,
    literals: usize,
}

fn cover_cost(primes: &[Cube], chosen: &[usize]) -> Cost {
    Cost {
        terms: chosen.len(),
        literals: chosen.iter().map(|&i| primes[i].literals()).sum(),
    }
}

fn sorted_cover(primes: &[Cube], chosen: &[usize]) -> Vec<Cube> {
    let mut v: Vec<Cube> = chosen.iter().map(|&i| primes[i]).collect();
    v.sort_by(cube_order);
    v
}

fn better(primes: &[Cube], a: &[usize], b: &[usize]) -> bool {
    match cover_cost(primes, a).cmp(&cover_cost(primes, b)) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => {
            let (sa, sb) = (sorted_cover(primes, a), sorted_cover(primes, b));
            sa.iter().zip(&sb).map(|(x, y)| cube_order(x, y)).find(|o| o.is_ne()) == Some(Ordering::Less)
        }
    }
}

struct CoverSearch<'a> {
    primes: &'a [Cube],
    minterms: Vec<usize>,
    /// Primes covering each minterm, cheapest first.
    covering: Vec<Vec<usize>>,
    /// Minterm slots covered by each prime.
    covers: Vec<Vec<usize>>,
    best: Vec<usize>,
    nodes: usize,
}

impl CoverSearch<'_> {
    fn search(&mut self, covered: &mut [u32], chosen: &mut Vec<usize>) {
        self.nodes += 1;
        if self.nodes > COVER_BUDGET {
            return;
        }
        let Some(next) = (0..self.minterms.len()).find(|&k| covered[k] == 0) else {
            if better(self.primes, chosen, &self.best) {
                self.best = chosen.clone();
            }
            return;
        };
        let cur = cover_cost(self.primes, chosen);
        let best = cover_cost(self.primes, &self.best);
        if cur.terms + 1 > best.terms {
            return;
        }
        for pi in self.covering[next].clone() {
            let c = self.primes[pi];
            let bound = Cost {
                terms: cur.terms + 1,
                literals: cur.literals + c.literals(),
            };
            if bound > best && bound.terms >= best.terms {
                continue;
            }
            for &k in &self.covers[pi] {
                covered[k] += 1;
            }
            chosen.push(pi);
            self.search(covered, chosen);
            chosen.pop();
            for &k in &self.covers[pi] {
                covered[k] -= 1;
            }
        }
    }
}

fn greedy_cover(primes: &[Cube], minterms: &[usize]) -> Vec<usize> {
    let mut covered = vec![false; minterms.len()];
    let mut chosen = Vec::new();
    let mut order: Vec<usize> = (0..primes.len()).collect();
    order.sort_by(|&a, &b| cube_order(&primes[a], &primes[b]));
    while covered.iter().any(|c| !c) {
        let gain = |pi: usize| {
            minterms
                .iter()
                .zip(&covered)
                .filter(|(&m, &c)| !c && primes[pi].contains(m))
                .count()
        };
        let mut pick = order[0];
        let mut pick_gain = 0;
        for &pi in &order {
            let g = gain(pi);
            if g > pick_gain {
                pick = pi;
                pick_gain = g;
            }
        }
        chosen.push(pick);
        for (k, &m) in minterms.iter().enumerate() {
            if primes[pick].contains(m) {
                covered[k] = true;
            }
        }
    }
    chosen
}

/// Minimal sum of products for `t`: fewest terms, then fewest literals,
/// then the smallest cube list under `cube_order`. Terms come sorted.
pub fn minimal_sop(t: &TruthTable) -> Result<Vec<Cube>> {
    if t.is_false() {
        return Ok(Vec::new());
    }
    if t.is_true() {
        return Ok(vec![Cube::TOP]);
    }
    let primes = prime_implicants(t)?;
    let mut minterms: Vec<usize> = t.minterms().collect();
    let mut covering: Vec<Vec<usize>> = minterms
        .iter()
        .map(|&m| {
            let mut v: Vec<usize> = (0..primes.len()).filter(|&i| primes[i].contains(m)).collect();
            v.sort_by(|&a, &b| cube_order(&primes[a], &primes[b]));
            v
        })
        .collect();
    // branch on the most constrained minterms first
    let mut idx: Vec<usize> = (0..minterms.len()).collect();
    idx.sort_by_key(|&k| (covering[k].len(), minterms[k]));
    minterms = idx.iter().map(|&k| minterms[k]).collect();
    covering = idx.iter().map(|&k| core::mem::take(&mut covering[k])).collect();

    let greedy = greedy_cover(&primes, &minterms);
    let mut covers = vec![Vec::new(); primes.len()];
    for (k, list) in covering.iter().enumerate() {
        for &pi in list {
            covers[pi].push(k);
        }
    }
    let mut s = CoverSearch {
        primes: &primes,
        minterms,
        covering,
        covers,
        best: greedy,
        nodes: 0,
    };
    let mut covered = vec![0u32; s.minterms.len()];
    s.search(&mut covered, &mut Vec::new());
    if s.nodes > COVER_BUDGET {
        log::warn!("cover search budget exhausted; keeping best cover found");
    }
    Ok(sorted_cover(&primes, &s.best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn table(n: usize, mut f: impl FnMut(usize) -> bool) -> TruthTable {
        let mut t = TruthTable::constant(n, false).unwrap();
        for i in 0..1 << n {
            t.set(i, f(i));
        }
        t
    }

    fn all_cubes(n: usize) -> Vec<Cube> {
        let mut out = Vec::new();
        for mask in 0u32..1 << n {
            for bits in 0u32..1 << n {
                if bits & !mask == 0 {
                    out.push(Cube { mask, bits });
                }
            }
        }
        out
    }

    fn implies(c: &Cube, t: &TruthTable) -> bool {
        (0..t.len()).all(|i| !c.contains(i) || t.get(i))
    }

    // primes by exhaustive enumeration of all 3^n cubes
    fn brute_primes(t: &TruthTable) -> Vec<Cube> {
        let n = t.n_vars();
        let imps: Vec<Cube> = all_cubes(n).into_iter().filter(|c| implies(c, t)).collect();
        let mut out: Vec<Cube> = imps
            .iter()
            .filter(|c| {
                !imps
                    .iter()
                    .any(|d| d != *c && d.mask & c.mask == d.mask && c.bits & d.mask == d.bits)
            })
            .copied()
            .collect();
        out.sort();
        out
    }

    // smallest-cost cover by enumerating subsets of primes
    fn brute_min_cost(t: &TruthTable) -> (usize, usize) {
        let primes = brute_primes(t);
        let mut best = (usize::MAX, usize::MAX);
        for set in 0u64..1 << primes.len() {
            let chosen: Vec<Cube> = (0..primes.len()).filter(|i| set >> i & 1 == 1).map(|i| primes[i]).collect();
            if sop_table(t.n_vars(), &chosen).unwrap() == *t {
                let cost = (chosen.len(), chosen.iter().map(|c| c.literals()).sum());
                best = best.min(cost);
            }
        }
        best
    }

    #[test]
    fn variable_columns() {
        for n in 1..=8 {
            for v in 0..n {
                let t = TruthTable::var(n, v).unwrap();
                for i in 0..1 << n {
                    assert_eq!(t.get(i), i >> v & 1 == 1);
                }
            }
        }
        assert!(TruthTable::constant(17, false).is_err());
    }

    #[test]
    fn absorption_example() {
        // (A & B) | (A & !B) = A
        let t = table(2, |i| i & 1 == 1);
        assert_eq!(minimal_sop(&t).unwrap(), vec![Cube { mask: 1, bits: 1 }]);
        assert_eq!(minimal_sop(&TruthTable::constant(3, true).unwrap()).unwrap(), vec![Cube::TOP]);
        assert!(minimal_sop(&TruthTable::constant(3, false).unwrap()).unwrap().is_empty());
    }

    #[test]
    fn cyclic_core_is_solved_exactly() {
        // classic cyclic function with 6 primes and a 3-term minimum
        let on = [0usize, 1, 2, 5, 6, 7];
        let t = table(3, |i| on.contains(&i));
        let cover = minimal_sop(&t).unwrap();
        assert_eq!(cover.len(), 3);
        assert_eq!(sop_table(3, &cover).unwrap(), t);
    }

    #[test]
    fn parity_has_only_minterm_primes() {
        let t = table(5, |i| i.count_ones() % 2 == 1);
        let p = prime_implicants(&t).unwrap();
        assert_eq!(p.len(), 16);
        assert!(p.iter().all(|c| c.literals() == 5));
    }

    #[test]
    fn sixteen_variables() {
        // x0 x1 | x14 x15 over 16 variables
        let t = table(16, |i| (i & 3 == 3) || (i >> 14 == 3));
        let cover = minimal_sop(&t).unwrap();
        assert_eq!(cover.len(), 2);
        assert_eq!(sop_table(16, &cover).unwrap(), t);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn primes_match_enumeration(n in 1usize..=4, seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed);
            let t = table(n, |_| rng.gen_bool(0.5));
            prop_assert_eq!(prime_implicants(&t).unwrap(), brute_primes(&t));
        }

        #[test]
        fn cover_is_equivalent_and_minimal(n in 1usize..=4, seed in any::<u64>()) {
            let mut rng = crate::rng::seeded(seed);
            let t = table(n, |_| rng.gen_bool(0.5));
            let cover = minimal_sop(&t).unwrap();
            prop_assert_eq!(sop_table(n, &cover).unwrap(), t.clone());
            let cost = (cover.len(), cover.iter().map(|c| c.literals()).sum::<usize>());
            if !t.is_false() {
                prop_assert_eq!(cost, brute_min_cost(&t));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn larger_tables_round_trip(n in 5usize..=8, seed in any::<u64>(), density in 0.05f64..0.95) {
            let mut rng = crate::rng::seeded(seed);
            let t = table(n, |_| rng.gen_bool(density));
            let cover = minimal_sop(&t).unwrap();
            prop_assert_eq!(sop_table(n, &cover).unwrap(), t);
        }
    }
}
