//! The learnable logic structure.
//!
//! A member maps `N` predicate signals through `depth` Temporal layers
//! (each input blended over `G`, `F` and identity), one Propositional layer
//! (one cluster per unordered input pair, each side passed through a
//! negation gate `tanh(w) * x`, blended over `&` and `|`) and an
//! Aggregation layer folding the clusters left to right (blended over `&`
//! and `|`). An ensemble folds member scores with one more Aggregation
//! layer. Selection gates are softmax blends of their operator values.
//!
//! All gate weights of a member live in one flat vector:
//!
//! ```text
//! [ temporal: depth x N x 3 | negation: C x 2 | cluster: C x 2 | aggregation: (C-1) x 2 ]
//! ```
//!
//! with clusters in lexicographic order of their input pair. Gradients are
//! computed by hand-written reverse mode over a per-call tape.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::math;
use crate::predicates::{PredicateDescriptor, MAX_PARAMS};
use crate::semantics::{pair, pair_gradient, suffix_backward, suffix_forward, Agg, Semantics};
use crate::trace::Trace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalOp {
    G,
    F,
    Id,
}

/// Operator order inside a temporal selection gate.
pub const TEMPORAL_OPS: [TemporalOp; 3] = [TemporalOp::G, TemporalOp::F, TemporalOp::Id];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicOp {
    And,
    Or,
}

/// Operator order inside a propositional or aggregation gate.
pub const LOGIC_OPS: [LogicOp; 2] = [LogicOp::And, LogicOp::Or];

fn softmax<const K: usize>(w: &[f64]) -> [f64; K] {
    let m = w[..K].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; K];
    let mut z = 0.0;
    for k in 0..K {
        p[k] = math::exp(w[k] - m);
        z += p[k];
    }
    for v in p.iter_mut() {
        *v /= z;
    }
    p
}

/// Canonical cluster order: every pair `i < j`, lexicographic.
pub fn cluster_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

fn init_selection(rng: &mut crate::rng::Rng) -> f64 {
    rng.gen_range(-0.1..0.1)
}

fn init_negation(rng: &mut crate::rng::Rng) -> f64 {
    loop {
        let w: f64 = rng.gen_range(-0.5..0.5);
        if w.abs() >= 0.05 {
            return w;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicStructure {
    pub predicates: Vec<String>,
    pub depth: usize,
    pub weights: Vec<f64>,
}

impl LogicStructure {
    pub fn build(predicates: &[String], depth: usize, seed: u64) -> Result<Self> {
        let n = predicates.len();
        if n < 2 {
            return Err(invalid("a logic structure needs at least two predicates"));
        }
        if depth < 1 {
            return Err(invalid("temporal depth must be at least 1"));
        }
        let mut s = Self {
            predicates: predicates.to_vec(),
            depth,
            weights: Vec::new(),
        };
        let mut rng = crate::rng::seeded(seed);
        let len = s.n_weights();
        s.weights = vec![0.0; len];
        for k in 0..s.neg_offset() {
            s.weights[k] = init_selection(&mut rng);
        }
        for k in s.neg_offset()..s.cluster_offset() {
            s.weights[k] = init_negation(&mut rng);
        }
        for k in s.cluster_offset()..len {
            s.weights[k] = init_selection(&mut rng);
        }
        Ok(s)
    }

    pub fn n_inputs(&self) -> usize {
        self.predicates.len()
    }

    pub fn n_clusters(&self) -> usize {
        let n = self.n_inputs();
        n * (n - 1) / 2
    }

    pub fn clusters(&self) -> Vec<(usize, usize)> {
        cluster_pairs(self.n_inputs())
    }

    pub fn neg_offset(&self) -> usize {
        self.depth * self.n_inputs() * 3
    }

    pub fn cluster_offset(&self) -> usize {
        self.neg_offset() + 2 * self.n_clusters()
    }

    pub fn aggregation_offset(&self) -> usize {
        self.cluster_offset() + 2 * self.n_clusters()
    }

    pub fn n_weights(&self) -> usize {
        self.aggregation_offset() + 2 * (self.n_clusters() - 1)
    }

    /// Index of the temporal gate of input `i` in layer `layer` (0-based).
    pub fn temporal_index(&self, layer: usize, i: usize) -> usize {
        (layer * self.n_inputs() + i) * 3
    }

    pub fn negation_index(&self, cluster: usize, side: usize) -> usize {
        self.neg_offset() + 2 * cluster + side
    }

    pub fn cluster_index(&self, cluster: usize) -> usize {
        self.cluster_offset() + 2 * cluster
    }

    pub fn aggregation_index(&self, k: usize) -> usize {
        self.aggregation_offset() + 2 * k
    }

    pub fn temporal_gate(&self, layer: usize, i: usize) -> &[f64] {
        let k = self.temporal_index(layer, i);
        &self.weights[k..k + 3]
    }

    pub fn cluster_gate(&self, c: usize) -> &[f64] {
        let k = self.cluster_index(c);
        &self.weights[k..k + 2]
    }

    pub fn aggregation_gate(&self, k: usize) -> &[f64] {
        let k = self.aggregation_index(k);
        &self.weights[k..k + 2]
    }

    pub fn negation(&self, c: usize, side: usize) -> f64 {
        self.weights[self.negation_index(c, side)]
    }

    /// Sets a temporal gate so `op` wins by `margin`.
    pub fn set_temporal(&mut self, layer: usize, i: usize, op: TemporalOp, margin: f64) {
        let k = self.temporal_index(layer, i);
        for (j, o) in TEMPORAL_OPS.iter().enumerate() {
            self.weights[k + j] = if *o == op { margin } else { 0.0 };
        }
    }

    pub fn set_cluster(&mut self, c: usize, op: LogicOp, margin: f64) {
        let k = self.cluster_index(c);
        self.set_logic(k, op, margin);
    }

    pub fn set_aggregation(&mut self, k: usize, op: LogicOp, margin: f64) {
        let k = self.aggregation_index(k);
        self.set_logic(k, op, margin);
    }

    fn set_logic(&mut self, k: usize, op: LogicOp, margin: f64) {
        self.weights[k] = if op == LogicOp::And { margin } else { 0.0 };
        self.weights[k + 1] = if op == LogicOp::Or { margin } else { 0.0 };
    }

    pub fn set_negation(&mut self, c: usize, side: usize, negate: bool, magnitude: f64) {
        let k = self.negation_index(c, side);
        self.weights[k] = if negate { -magnitude } else { magnitude };
    }

    /// Flat indices of every aggregation-layer `&` weight.
    pub fn and_weight_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_clusters() - 1).map(|k| self.aggregation_index(k))
    }

    /// Score of one trace given its predicate signals (`N x len`, row per
    /// input).
    pub fn forward_inputs(&self, inputs: &[f64], len: usize, sem: Semantics) -> Result<f64> {
        let mut tape = Tape::default();
        self.check_inputs(inputs, len)?;
        Ok(self.run(inputs, len, sem, &mut tape))
    }

    fn check_inputs(&self, inputs: &[f64], len: usize) -> Result<()> {
        if len == 0 {
            return Err(invalid("empty trace"));
        }
        if inputs.len() != self.n_inputs() * len {
            return Err(Error::Internal(format!(
                "expected {} input values, got {}",
                self.n_inputs() * len,
                inputs.len()
            )));
        }
        Ok(())
    }

    fn run(&self, inputs: &[f64], len: usize, sem: Semantics, tape: &mut Tape) -> f64 {
        let n = self.n_inputs();
        let nc = self.n_clusters();
        let nl = n * len;
        tape.len = len;
        tape.x.clear();
        tape.x.extend_from_slice(inputs);
        tape.x.resize((self.depth + 1) * nl, 0.0);
        tape.g.resize(self.depth * nl, 0.0);
        tape.f.resize(self.depth * nl, 0.0);
        tape.pt.resize(self.depth * n * 3, 0.0);
        for l in 0..self.depth {
            for i in 0..n {
                let src = l * nl + i * len;
                let dst = (l + 1) * nl + i * len;
                let gi = l * nl + i * len;
                suffix_forward(&tape.x[src..src + len], Agg::Min, sem, &mut tape.g[gi..gi + len]);
                suffix_forward(&tape.x[src..src + len], Agg::Max, sem, &mut tape.f[gi..gi + len]);
                let p: [f64; 3] = softmax(self.temporal_gate(l, i));
                tape.pt[(l * n + i) * 3..(l * n + i) * 3 + 3].copy_from_slice(&p);
                for t in 0..len {
                    tape.x[dst + t] = p[0] * tape.g[gi + t] + p[1] * tape.f[gi + t] + p[2] * tape.x[src + t];
                }
            }
        }
        let top = self.depth * nl;
        tape.c.resize(nc, ClusterTape::default());
        for (c, &(i, j)) in cluster_pairs(n).iter().enumerate() {
            let ct = &mut tape.c[c];
            ct.tn = [
                math::tanh(self.weights[self.negation_index(c, 0)]),
                math::tanh(self.weights[self.negation_index(c, 1)]),
            ];
            ct.a = ct.tn[0] * tape.x[top + i * len];
            ct.b = ct.tn[1] * tape.x[top + j * len];
            ct.v = [pair(ct.a, ct.b, Agg::Min, sem), pair(ct.a, ct.b, Agg::Max, sem)];
            ct.p = softmax(self.cluster_gate(c));
            ct.y = ct.p[0] * ct.v[0] + ct.p[1] * ct.v[1];
        }
        tape.z.resize(nc, FoldTape::default());
        tape.z[0].out = tape.c[0].y;
        for k in 1..nc {
            let prev = tape.z[k - 1].out;
            let y = tape.c[k].y;
            let zt = &mut tape.z[k];
            zt.v = [pair(prev, y, Agg::Min, sem), pair(prev, y, Agg::Max, sem)];
            zt.p = softmax(self.aggregation_gate(k - 1));
            zt.out = zt.p[0] * zt.v[0] + zt.p[1] * zt.v[1];
        }
        tape.z[nc - 1].out
    }

    /// Reverse pass for a tape filled by `run`. Adds `dscore * d score / d w`
    /// into `dw` and `dscore * d score / d inputs` into `dinputs`.
    fn backward(&self, tape: &Tape, sem: Semantics, dscore: f64, dw: &mut [f64], dinputs: &mut [f64], scratch: &mut Vec<f64>) {
        let n = self.n_inputs();
        let nc = self.n_clusters();
        let len = tape.len;
        let nl = n * len;
        let mut dy = vec![0.0; nc];
        // aggregation fold
        let mut dz = dscore;
        for k in (1..nc).rev() {
            let zt = &tape.z[k];
            let base = self.aggregation_index(k - 1);
            for o in 0..2 {
                dw[base + o] += dz * zt.p[o] * (zt.v[o] - zt.out);
            }
            let prev = tape.z[k - 1].out;
            let y = tape.c[k].y;
            let (da0, db0) = pair_gradient(prev, y, zt.v[0], Agg::Min, sem);
            let (da1, db1) = pair_gradient(prev, y, zt.v[1], Agg::Max, sem);
            dy[k] += dz * (zt.p[0] * db0 + zt.p[1] * db1);
            dz *= zt.p[0] * da0 + zt.p[1] * da1;
        }
        dy[0] += dz;
        // clusters
        let top = self.depth * nl;
        let mut dx = vec![0.0; (self.depth + 1) * nl];
        for (c, &(i, j)) in cluster_pairs(n).iter().enumerate() {
            let ct = &tape.c[c];
            let g = dy[c];
            if g == 0.0 {
                continue;
            }
            let base = self.cluster_index(c);
            for o in 0..2 {
                dw[base + o] += g * ct.p[o] * (ct.v[o] - ct.y);
            }
            let (da0, db0) = pair_gradient(ct.a, ct.b, ct.v[0], Agg::Min, sem);
            let (da1, db1) = pair_gradient(ct.a, ct.b, ct.v[1], Agg::Max, sem);
            let da = g * (ct.p[0] * da0 + ct.p[1] * da1);
            let db = g * (ct.p[0] * db0 + ct.p[1] * db1);
            let (oi, oj) = (tape.x[top + i * len], tape.x[top + j * len]);
            dw[self.negation_index(c, 0)] += da * (1.0 - ct.tn[0] * ct.tn[0]) * oi;
            dw[self.negation_index(c, 1)] += db * (1.0 - ct.tn[1] * ct.tn[1]) * oj;
            dx[top + i * len] += da * ct.tn[0];
            dx[top + j * len] += db * ct.tn[1];
        }
        // temporal layers, top down
        scratch.resize(len, 0.0);
        for l in (0..self.depth).rev() {
            for i in 0..n {
                let src = l * nl + i * len;
                let dst = (l + 1) * nl + i * len;
                let p = &tape.pt[(l * n + i) * 3..(l * n + i) * 3 + 3];
                let base = self.temporal_index(l, i);
                let (mut dwg, mut dwf, mut dwi) = (0.0, 0.0, 0.0);
                let mut any = false;
                for t in 0..len {
                    let d = dx[dst + t];
                    if d == 0.0 {
                        continue;
                    }
                    any = true;
                    let y = tape.x[dst + t];
                    dwg += d * (tape.g[src + t] - y);
                    dwf += d * (tape.f[src + t] - y);
                    dwi += d * (tape.x[src + t] - y);
                }
                if !any {
                    continue;
                }
                dw[base] += p[0] * dwg;
                dw[base + 1] += p[1] * dwf;
                dw[base + 2] += p[2] * dwi;
                let xs = &tape.x[src..src + len];
                for (o, agg, seq) in [(0, Agg::Min, &tape.g), (1, Agg::Max, &tape.f)] {
                    for t in 0..len {
                        scratch[t] = p[o] * dx[dst + t];
                    }
                    let (head, _) = dx.split_at_mut(dst);
                    suffix_backward(xs, &seq[src..src + len], &scratch[..len], agg, sem, &mut head[src..src + len]);
                }
                for t in 0..len {
                    dx[src + t] += p[2] * dx[dst + t];
                }
            }
        }
        for (d, v) in dinputs.iter_mut().zip(&dx[..nl]) {
            *d += v;
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ClusterTape {
    tn: [f64; 2],
    a: f64,
    b: f64,
    v: [f64; 2],
    p: [f64; 2],
    y: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct FoldTape {
    v: [f64; 2],
    p: [f64; 2],
    out: f64,
}

/// Forward values kept for the reverse pass.
#[derive(Debug, Clone, Default)]
struct Tape {
    len: usize,
    x: Vec<f64>,
    g: Vec<f64>,
    f: Vec<f64>,
    pt: Vec<f64>,
    c: Vec<ClusterTape>,
    z: Vec<FoldTape>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStructure {
    pub members: Vec<LogicStructure>,
    /// Outer aggregation gates, `(k - 1) x 2`.
    pub outer: Vec<f64>,
}

impl From<LogicStructure> for EnsembleStructure {
    fn from(s: LogicStructure) -> Self {
        Self {
            members: vec![s],
            outer: Vec::new(),
        }
    }
}

pub fn ensemble(members: Vec<LogicStructure>, seed: u64) -> Result<EnsembleStructure> {
    if members.is_empty() {
        return Err(invalid("an ensemble needs at least one member"));
    }
    if members.iter().any(|m| m.predicates != members[0].predicates) {
        return Err(invalid("ensemble members must share their predicate list"));
    }
    let mut rng = crate::rng::derive(seed, 0xE5E);
    let outer = (0..2 * (members.len() - 1)).map(|_| init_selection(&mut rng)).collect();
    Ok(EnsembleStructure { members, outer })
}

impl EnsembleStructure {
    /// `k` members of the given depth, member `m` seeded from `seed` and `m`.
    pub fn build(predicates: &[String], depth: usize, k: usize, seed: u64) -> Result<Self> {
        let members = (0..k)
            .map(|m| LogicStructure::build(predicates, depth, seed.wrapping_add(0x1000 * m as u64 + 1)))
            .collect::<Result<Vec<_>>>()?;
        ensemble(members, seed)
    }

    pub fn predicates(&self) -> &[String] {
        &self.members[0].predicates
    }

    pub fn outer_gate(&self, k: usize) -> &[f64] {
        &self.outer[2 * k..2 * k + 2]
    }

    pub fn set_outer(&mut self, k: usize, op: LogicOp, margin: f64) {
        self.outer[2 * k] = if op == LogicOp::And { margin } else { 0.0 };
        self.outer[2 * k + 1] = if op == LogicOp::Or { margin } else { 0.0 };
    }

    pub fn n_weights(&self) -> usize {
        self.members.iter().map(|m| m.n_weights()).sum::<usize>() + self.outer.len()
    }

    pub fn flat_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_weights());
        for m in &self.members {
            out.extend_from_slice(&m.weights);
        }
        out.extend_from_slice(&self.outer);
        out
    }

    pub fn set_flat_weights(&mut self, w: &[f64]) -> Result<()> {
        if w.len() != self.n_weights() {
            return Err(Error::Internal(format!("expected {} weights, got {}", self.n_weights(), w.len())));
        }
        let mut off = 0;
        for m in self.members.iter_mut() {
            let n = m.weights.len();
            m.weights.copy_from_slice(&w[off..off + n]);
            off += n;
        }
        self.outer.copy_from_slice(&w[off..]);
        Ok(())
    }

    /// Flat indices of every aggregation `&` weight, members and outer layer.
    pub fn and_weight_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut off = 0;
        for m in &self.members {
            out.extend(m.and_weight_indices().map(|k| off + k));
            off += m.n_weights();
        }
        out.extend((0..self.outer.len() / 2).map(|k| off + 2 * k));
        out
    }

    pub fn forward_inputs(&self, inputs: &[f64], len: usize, sem: Semantics) -> Result<f64> {
        let mut ws = Workspace::default();
        self.members[0].check_inputs(inputs, len)?;
        Ok(self.run(inputs, len, sem, &mut ws))
    }

    fn run(&self, inputs: &[f64], len: usize, sem: Semantics, ws: &mut Workspace) -> f64 {
        ws.tapes.resize(self.members.len(), Tape::default());
        ws.scores.clear();
        for (m, tape) in self.members.iter().zip(ws.tapes.iter_mut()) {
            ws.scores.push(m.run(inputs, len, sem, tape));
        }
        let k = self.members.len();
        ws.outer.resize(k, FoldTape::default());
        ws.outer[0].out = ws.scores[0];
        for j in 1..k {
            let prev = ws.outer[j - 1].out;
            let s = ws.scores[j];
            let zt = &mut ws.outer[j];
            zt.v = [pair(prev, s, Agg::Min, sem), pair(prev, s, Agg::Max, sem)];
            zt.p = softmax(&self.outer[2 * (j - 1)..]);
            zt.out = zt.p[0] * zt.v[0] + zt.p[1] * zt.v[1];
        }
        ws.outer[k - 1].out
    }

    fn backward(&self, ws: &mut Workspace, sem: Semantics, dscore: f64, dw: &mut [f64], dinputs: &mut [f64]) {
        let k = self.members.len();
        let outer_off = self.n_weights() - self.outer.len();
        let mut dmember = vec![0.0; k];
        let mut dz = dscore;
        for j in (1..k).rev() {
            let zt = ws.outer[j];
            for o in 0..2 {
                dw[outer_off + 2 * (j - 1) + o] += dz * zt.p[o] * (zt.v[o] - zt.out);
            }
            let prev = ws.outer[j - 1].out;
            let s = ws.scores[j];
            let (da0, db0) = pair_gradient(prev, s, zt.v[0], Agg::Min, sem);
            let (da1, db1) = pair_gradient(prev, s, zt.v[1], Agg::Max, sem);
            dmember[j] += dz * (zt.p[0] * db0 + zt.p[1] * db1);
            dz *= zt.p[0] * da0 + zt.p[1] * da1;
        }
        dmember[0] += dz;
        let mut off = 0;
        for (j, m) in self.members.iter().enumerate() {
            let n = m.n_weights();
            if dmember[j] != 0.0 {
                m.backward(&ws.tapes[j], sem, dmember[j], &mut dw[off..off + n], dinputs, &mut ws.scratch);
            }
            off += n;
        }
    }
}

/// Reusable buffers for forward and reverse passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    tapes: Vec<Tape>,
    scores: Vec<f64>,
    outer: Vec<FoldTape>,
    scratch: Vec<f64>,
    inputs: Vec<f64>,
    active: Vec<u8>,
    dinputs: Vec<f64>,
}

/// Theta-independent predicate measurements of one trace, so predicate
/// signals can be recomputed cheaply whenever theta moves.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub len: usize,
    /// `[predicate][frame][MAX_PARAMS]`
    offsets: Vec<f64>,
}

impl Features {
    pub fn measure(preds: &[PredicateDescriptor], trace: &Trace) -> Result<Self> {
        let len = trace.frames.len();
        if len == 0 {
            return Err(invalid("empty trace"));
        }
        let mut offsets = Vec::with_capacity(preds.len() * len * MAX_PARAMS);
        for p in preds {
            for t in 0..len {
                offsets.extend_from_slice(&p.measure_at(trace, t)?);
            }
        }
        Ok(Self { len, offsets })
    }

    fn offsets(&self, pred: usize, t: usize) -> &[f64] {
        let k = (pred * self.len + t) * MAX_PARAMS;
        &self.offsets[k..k + MAX_PARAMS]
    }

    /// Predicate values (`N x len`) and the active term of each value.
    fn signals(&self, preds: &[PredicateDescriptor], theta: &ThetaView<'_>, values: &mut Vec<f64>, active: &mut Vec<u8>) {
        values.clear();
        active.clear();
        for (pi, p) in preds.iter().enumerate() {
            let th = theta.get(pi);
            for t in 0..self.len {
                let (v, a) = p.value_from_measure(self.offsets(pi, t), th);
                values.push(v);
                active.push(a as u8);
            }
        }
    }
}

/// Flat theta vector split per predicate.
#[derive(Debug, Clone, Copy)]
pub struct ThetaView<'a> {
    pub flat: &'a [f64],
    pub offsets: &'a [usize],
}

impl<'a> ThetaView<'a> {
    pub fn get(&self, pred: usize) -> &'a [f64] {
        &self.flat[self.offsets[pred]..self.offsets[pred + 1]]
    }
}

/// Prefix offsets of each predicate's parameters in a flat theta vector.
pub fn theta_offsets(preds: &[PredicateDescriptor]) -> Vec<usize> {
    let mut out = Vec::with_capacity(preds.len() + 1);
    let mut acc = 0;
    out.push(0);
    for p in preds {
        acc += p.n_params();
        out.push(acc);
    }
    out
}

pub fn flat_theta(preds: &[PredicateDescriptor]) -> Vec<f64> {
    preds.iter().flat_map(|p| p.theta.iter().copied()).collect()
}

/// A structure together with its input predicates and their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub structure: EnsembleStructure,
    pub predicates: Vec<PredicateDescriptor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Model {
    pub fn new(structure: EnsembleStructure, predicates: Vec<PredicateDescriptor>) -> Result<Self> {
        let ids: Vec<&str> = predicates.iter().map(|p| p.id.as_str()).collect();
        let want: Vec<&str> = structure.predicates().iter().map(String::as_str).collect();
        if ids != want {
            return Err(invalid("predicate descriptors do not match the structure inputs"));
        }
        Ok(Self { structure, predicates })
    }

    pub fn theta(&self) -> Vec<f64> {
        flat_theta(&self.predicates)
    }

    pub fn set_theta(&mut self, flat: &[f64]) {
        let offs = theta_offsets(&self.predicates);
        for (i, p) in self.predicates.iter_mut().enumerate() {
            p.theta.copy_from_slice(&flat[offs[i]..offs[i + 1]]);
        }
    }

    pub fn features(&self, trace: &Trace) -> Result<Features> {
        Features::measure(&self.predicates, trace)
    }

    pub fn forward(&self, trace: &Trace, sem: Semantics) -> Result<f64> {
        let f = self.features(trace)?;
        self.forward_features(&f, sem, &mut Workspace::default())
    }

    pub fn forward_batch(&self, traces: &[Trace], sem: Semantics) -> Result<Vec<f64>> {
        let mut ws = Workspace::default();
        traces
            .iter()
            .map(|t| self.forward_features(&self.features(t)?, sem, &mut ws))
            .collect()
    }

    pub fn forward_features(&self, f: &Features, sem: Semantics, ws: &mut Workspace) -> Result<f64> {
        let theta = self.theta();
        let offs = theta_offsets(&self.predicates);
        Ok(self.forward_with(f, &ThetaView { flat: &theta, offsets: &offs }, sem, ws))
    }

    pub(crate) fn forward_with(&self, f: &Features, theta: &ThetaView<'_>, sem: Semantics, ws: &mut Workspace) -> f64 {
        let mut inputs = core::mem::take(&mut ws.inputs);
        let mut active = core::mem::take(&mut ws.active);
        f.signals(&self.predicates, theta, &mut inputs, &mut active);
        let s = self.structure.run(&inputs, f.len, sem, ws);
        ws.inputs = inputs;
        ws.active = active;
        s
    }

    /// Score of one trace; adds `scale * d score` into `grads`.
    pub(crate) fn accumulate_gradient(
        &self,
        f: &Features,
        theta: &ThetaView<'_>,
        sem: Semantics,
        scale: f64,
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> f64 {
        let s = self.forward_with(f, theta, sem, ws);
        let mut dinputs = core::mem::take(&mut ws.dinputs);
        dinputs.clear();
        dinputs.resize(ws.inputs.len(), 0.0);
        self.structure.backward(ws, sem, scale, &mut grads.weights, &mut dinputs);
        let len = f.len;
        let mut g = [0.0; MAX_PARAMS];
        for (pi, p) in self.predicates.iter().enumerate() {
            let off = theta.offsets[pi];
            let np = p.n_params();
            for t in 0..len {
                let d = dinputs[pi * len + t];
                if d == 0.0 {
                    continue;
                }
                let k = pi * len + t;
                p.gradient_at(f.offsets(pi, t), theta.get(pi), ws.active[k] as usize, &mut g[..np]);
                for q in 0..np {
                    grads.theta[off + q] += d * g[q];
                }
            }
        }
        ws.dinputs = dinputs;
        s
    }

    /// Mean score over `feats` and its gradient with respect to every gate
    /// weight and every theta component.
    pub fn gradient_features(&self, feats: &[&Features], sem: Semantics, ws: &mut Workspace) -> Result<(f64, Gradients)> {
        if feats.is_empty() {
            return Err(invalid("empty batch"));
        }
        let theta = self.theta();
        let offs = theta_offsets(&self.predicates);
        let view = ThetaView { flat: &theta, offsets: &offs };
        let mut grads = Gradients {
            weights: vec![0.0; self.structure.n_weights()],
            theta: vec![0.0; theta.len()],
        };
        let scale = 1.0 / feats.len() as f64;
        let mut total = 0.0;
        for f in feats {
            total += self.accumulate_gradient(f, &view, sem, scale, ws, &mut grads);
        }
        Ok((total * scale, grads))
    }

    pub fn network_gradient(&self, traces: &[Trace], sem: Semantics) -> Result<(f64, Gradients)> {
        let feats = traces.iter().map(|t| self.features(t)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&Features> = feats.iter().collect();
        self.gradient_features(&refs, sem, &mut Workspace::default())
    }
}
