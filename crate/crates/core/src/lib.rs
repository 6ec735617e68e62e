//! Learnable temporal-logic scoring rules for trajectory selection.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic
//! piece of the pipeline:
//!
//! * [`trace`] and [`geometry`]: frames, traces, map context, numerical
//!   kinematics.
//! * [`predicates`]: parameterized predicates `P_theta(env, plan) -> [-1, 1]`
//!   with analytic parameter gradients.
//! * [`formula`] and [`semantics`]: LTLf formulas over finite traces with
//!   hard (min/max) and smooth (Boltzmann softmin/softmax) robustness.
//! * [`network`]: the Temporal / Propositional / Aggregation logic structure
//!   with selection and negation gates, ensembles, reverse-mode gradients.
//! * [`training`]: Adam ascent with parameter tightening and conjunction
//!   bias, early stopping.
//! * [`boolmin`] and [`extract`]: concretization, Quine-McCluskey
//!   minimization, condition-action pairs, rule sets.
//! * [`scoring`]: rule-based ranking of candidate trajectories.
//! * [`sim`]: a small synthetic driving world, proposers, demonstration
//!   synthesis and a closed-loop harness.
//!
//! File formats, the command line and wall-clock timing live in the `tlr`
//! companion crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod boolmin;
pub mod error;
pub mod extract;
pub mod formula;
pub mod geometry;
pub mod kinematics;
pub(crate) mod math;
pub mod network;
pub mod predicates;
pub mod rng;
pub mod scoring;
pub mod semantics;
pub mod sim;
pub mod trace;
pub mod training;

pub use error::{Error, Result};
