//! Discrete-event simulation of a windowed decoding pipeline.
//!
//! The device executes the program round by round, the window builder tiles
//! the generated rounds into cells, and a pool of decoders works through the
//! cells as their data and dependency bits become available. Blocking
//! instructions hold their patches until every cell covering them has been
//! decoded and verified.

mod engine;
mod export;
mod latency;

pub use engine::simulate;
pub use export::{trace_csv, trace_svg};
pub use latency::{decode_latency, volume_bucket, LatencyError, LatencyModel};

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::matching::DEFAULT_EXACT_CAP;
use crate::program::PatchId;
use crate::windowing::{CellType, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SpeculationMode {
    Off,
    /// Correctness of each speculation is a Bernoulli draw.
    Stochastic,
    /// Each source cell samples a syndrome and runs the 3-step predictor
    /// against the reference matcher.
    Integrated,
}

impl FromStr for SpeculationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(SpeculationMode::Off),
            "on" | "stochastic" => Ok(SpeculationMode::Stochastic),
            "integrated" => Ok(SpeculationMode::Integrated),
            _ => Err(format!("unknown speculation mode `{s}` (expected off, stochastic or integrated)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Recovery {
    Optimistic,
    Adjacent,
    Pessimistic,
}

impl Recovery {
    pub const ALL: [Recovery; 3] = [Recovery::Optimistic, Recovery::Adjacent, Recovery::Pessimistic];

    pub fn name(self) -> &'static str {
        match self {
            Recovery::Optimistic => "optimistic",
            Recovery::Adjacent => "adjacent",
            Recovery::Pessimistic => "pessimistic",
        }
    }
}

impl fmt::Display for Recovery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Recovery {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Recovery::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown recovery strategy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub strategy: Strategy,
    pub speculation: SpeculationMode,
    pub accuracy: f64,
    pub accuracy_adjacent: f64,
    /// Rounds from a source cell's data being complete to its speculated bits.
    pub t_spec: u64,
    pub recovery: Recovery,
    pub latency: LatencyModel,
    /// `None` means unlimited decoders.
    pub processors: Option<usize>,
    pub seed: u64,
    /// Simulation stops (and reports truncation) past this round.
    pub max_rounds: u64,
    /// Physical error rate for integrated speculation.
    pub noise_p: f64,
    pub exact_cap: usize,
    /// Probability that a conditional correction is needed.
    pub s_probability: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Parallel,
            speculation: SpeculationMode::Off,
            accuracy: 0.90,
            accuracy_adjacent: 0.86,
            t_spec: 1,
            recovery: Recovery::Optimistic,
            latency: LatencyModel::Linear(1.0),
            processors: None,
            seed: 0,
            max_rounds: 1 << 22,
            noise_p: 1e-3,
            exact_cap: DEFAULT_EXACT_CAP,
            s_probability: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let ok = (0.0..=1.0).contains(&self.accuracy_adjacent)
            && (0.0..=1.0).contains(&self.accuracy)
            && self.accuracy_adjacent <= self.accuracy;
        if !ok {
            return Err(SimError::Config(format!(
                "need 0 <= accuracy_adjacent <= accuracy <= 1, got {} and {}",
                self.accuracy_adjacent, self.accuracy
            )));
        }
        if self.processors == Some(0) {
            return Err(SimError::Config("processor limit must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.s_probability) {
            return Err(SimError::Config("s_probability must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_p) {
            return Err(SimError::Config("noise_p must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Latency(#[from] LatencyError),
    #[error("integrated speculation: a defect cluster of {defects} exceeds the exact cap {cap}")]
    CapExceeded { defects: usize, cap: usize },
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reaction {
    /// Instruction index of the blocking operation.
    pub op: usize,
    pub end_round: u64,
    pub resolved_round: u64,
    pub reaction: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub patch: PatchId,
    pub t0: u64,
    pub t1: u64,
    pub kind: CellType,
    pub volume: f64,
    pub ready: Option<u64>,
    pub valid_at: Option<u64>,
    pub attempts: u32,
}

/// A run of identical activity on one patch, `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceSpan {
    pub patch: PatchId,
    pub start: u64,
    pub end: u64,
    pub label: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub distance: u32,
    pub runtime_rounds: u64,
    pub runtime_us: f64,
    pub reactions: Vec<Reaction>,
    /// Blocking operations that never resolved before the horizon.
    pub unresolved_ops: Vec<usize>,
    /// Busy decoders per round.
    pub occupancy: Vec<u32>,
    pub p_max: u32,
    pub p_mean: f64,
    pub valid_compute: u64,
    pub wasted_compute: u64,
    pub total_compute: u64,
    pub speculations: u64,
    pub mispredictions: u64,
    pub restarts: u64,
    pub misaligned_ops: usize,
    pub instruction_starts: Vec<Option<u64>>,
    pub cells: Vec<CellRecord>,
    pub trace: Vec<TraceSpan>,
    pub truncated: bool,
}

/// The parts of a result that describe when things happened, as opposed to
/// how much work it took.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub runtime_rounds: u64,
    pub reactions: Vec<Reaction>,
    pub instruction_starts: Vec<Option<u64>>,
    pub cells: Vec<(PatchId, u64, u64, Option<u64>, Option<u64>)>,
    pub trace: Vec<TraceSpan>,
    pub truncated: bool,
}

impl SimResult {
    pub fn timeline(&self) -> Timeline {
        Timeline {
            runtime_rounds: self.runtime_rounds,
            reactions: self.reactions.clone(),
            instruction_starts: self.instruction_starts.clone(),
            cells: self.cells.iter().map(|c| (c.patch, c.t0, c.t1, c.ready, c.valid_at)).collect(),
            trace: self.trace.clone(),
            truncated: self.truncated,
        }
    }

    pub fn reaction_times(&self) -> Vec<u64> {
        self.reactions.iter().map(|r| r.reaction).collect()
    }

    pub fn mean_reaction(&self) -> f64 {
        if self.reactions.is_empty() {
            return 0.0;
        }
        self.reactions.iter().map(|r| r.reaction as f64).sum::<f64>() / self.reactions.len() as f64
    }

    /// Reaction time of one blocking operation, by instruction index.
    pub fn reaction_time(&self, op: usize) -> Option<u64> {
        self.reactions.iter().find(|r| r.op == op).map(|r| r.reaction)
    }

    /// JSON summary without the per-round series.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "distance": self.distance,
            "runtime_rounds": self.runtime_rounds,
            "runtime_d": self.runtime_rounds as f64 / self.distance as f64,
            "runtime_us": self.runtime_us,
            "mean_reaction": self.mean_reaction(),
            "reactions": self.reactions,
            "unresolved_ops": self.unresolved_ops,
            "p_max": self.p_max,
            "p_mean": self.p_mean,
            "valid_compute": self.valid_compute,
            "wasted_compute": self.wasted_compute,
            "total_compute": self.total_compute,
            "speculations": self.speculations,
            "mispredictions": self.mispredictions,
            "restarts": self.restarts,
            "misaligned_ops": self.misaligned_ops,
            "cells": self.cells.len(),
            "truncated": self.truncated,
        })
    }
}
