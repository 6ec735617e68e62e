//! Structure checkpoints and training metrics files.
//!
//! A checkpoint is a header line followed by one JSON record holding the
//! predicate ids, depth, every member's gate weights in layout order, the
//! outer ensemble gates and theta per predicate.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tlr_core::network::{EnsembleStructure, LogicStructure, Model};
use tlr_core::predicates::PredicateRegistry;
use tlr_core::training::{EpochRecord, TrainReport};

use crate::error::{CliError, CliResult};
use crate::header::Header;

pub const CKPT_FORMAT: &str = "tlr-checkpoint";
pub const CKPT_VERSION: u32 = 1;
pub const METRICS_FORMAT: &str = "tlr-train-metrics";
pub const METRICS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThetaRec {
    id: String,
    values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CkptRec {
    predicates: Vec<String>,
    depth: usize,
    members: Vec<Vec<f64>>,
    outer: Vec<f64>,
    theta: Vec<ThetaRec>,
}

pub fn write_checkpoint(mut out: impl Write, model: &Model) -> CliResult<()> {
    let s = &model.structure;
    let rec = CkptRec {
        predicates: s.predicates().to_vec(),
        depth: s.members[0].depth,
        members: s.members.iter().map(|m| m.weights.clone()).collect(),
        outer: s.outer.clone(),
        theta: model
            .predicates
            .iter()
            .map(|p| ThetaRec {
                id: p.id.clone(),
                values: p.theta.clone(),
            })
            .collect(),
    };
    Header::new(CKPT_FORMAT, CKPT_VERSION).write(&mut out)?;
    serde_json::to_writer(&mut out, &rec).map_err(CliError::internal)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Rebuilds the model; descriptors come from `reg` with the stored theta.
pub fn read_checkpoint(reader: impl BufRead, reg: &PredicateRegistry) -> CliResult<Model> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| CliError::input("empty checkpoint"))?;
    Header::detect(&header)
        .ok_or_else(|| CliError::input("line 1: missing checkpoint header"))?
        .expect(CKPT_FORMAT, CKPT_VERSION)
        .map_err(|e| CliError::input(format!("line 1: {e}")))?;
    let body = lines
        .next()
        .transpose()?
        .ok_or_else(|| CliError::input("checkpoint has no body"))?;
    let rec: CkptRec = serde_json::from_str(&body).map_err(|e| CliError::input(format!("line 2: {e}")))?;
    if rec.members.is_empty() {
        return Err(CliError::input("line 2: checkpoint has no members"));
    }
    let mut members = Vec::new();
    for (m, w) in rec.members.iter().enumerate() {
        let mut s = LogicStructure::build(&rec.predicates, rec.depth, 0)?;
        if w.len() != s.weights.len() {
            return Err(CliError::input(format!(
                "line 2: member {m} has {} weights, layout needs {}",
                w.len(),
                s.weights.len()
            )));
        }
        s.weights.clone_from(w);
        members.push(s);
    }
    if rec.outer.len() != 2 * (members.len() - 1) {
        return Err(CliError::input("line 2: outer gate count does not match the member count"));
    }
    let structure = EnsembleStructure {
        members,
        outer: rec.outer,
    };
    let ids: Vec<&str> = rec.predicates.iter().map(String::as_str).collect();
    let mut preds = reg.subset(&ids)?;
    if rec.theta.len() != preds.len() {
        return Err(CliError::input("line 2: one theta entry per predicate expected"));
    }
    for (p, t) in preds.iter_mut().zip(&rec.theta) {
        if p.id != t.id {
            return Err(CliError::input(format!("line 2: theta for `{}` out of order", t.id)));
        }
        p.check_theta(&t.values)?;
        p.theta.clone_from(&t.values);
    }
    Ok(Model::new(structure, preds)?)
}

pub fn save_checkpoint(path: &Path, model: &Model) -> CliResult<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, model)?;
    std::fs::write(path, buf).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path, reg: &PredicateRegistry) -> CliResult<Model> {
    let f = std::fs::File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    read_checkpoint(std::io::BufReader::new(f), reg).map_err(|e| e.context(path.display()))
}

/// `model.json` -> `model.json.metrics.jsonl`.
pub fn metrics_path(ckpt: &Path) -> PathBuf {
    let mut s = ckpt.as_os_str().to_owned();
    s.push(".metrics.jsonl");
    PathBuf::from(s)
}

#[derive(Serialize, Deserialize)]
struct EpochLine {
    epoch: usize,
    train_obj: f64,
    val_obj: f64,
}

pub fn write_metrics(mut out: impl Write, report: &TrainReport) -> CliResult<()> {
    Header::new(METRICS_FORMAT, METRICS_VERSION).write(&mut out)?;
    for e in &report.epochs {
        let line = EpochLine {
            epoch: e.epoch,
            train_obj: e.train_obj,
            val_obj: e.val_obj,
        };
        serde_json::to_writer(&mut out, &line).map_err(CliError::internal)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_metrics(reader: impl BufRead) -> CliResult<Vec<EpochRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if i == 0 {
            Header::detect(&line)
                .ok_or_else(|| CliError::input("line 1: missing metrics header"))?
                .expect(METRICS_FORMAT, METRICS_VERSION)
                .map_err(|e| CliError::input(format!("line 1: {e}")))?;
            continue;
        }
        let e: EpochLine = serde_json::from_str(&line).map_err(|e| CliError::input(format!("line {}: {e}", i + 1)))?;
        out.push(EpochRecord {
            epoch: e.epoch,
            train_obj: e.train_obj,
            val_obj: e.val_obj,
        });
    }
    Ok(out)
}
