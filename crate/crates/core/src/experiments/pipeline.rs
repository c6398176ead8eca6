//! Reaction-time sweeps, recovery-cost estimates and processor sizing.

use rayon::prelude::*;
use serde::Serialize;

use crate::program::{builtin_program, Builtin, BuiltinParams, Program, ProgramError};
use crate::sim::{simulate, LatencyModel, Recovery, SimConfig, SimError, SpeculationMode};
use crate::windowing::Strategy;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("empty parameter grid: {0}")]
    EmptyGrid(&'static str),
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub d: u32,
    /// Number of T gates in the repeated-T program.
    pub t_count: usize,
    pub strategies: Vec<Strategy>,
    /// `None` runs without speculation.
    pub accuracies: Vec<Option<f64>>,
    pub latency_factors: Vec<f64>,
    pub seeds: Vec<u64>,
    pub base: SimConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d: 11,
            t_count: 100,
            strategies: Strategy::ALL.to_vec(),
            accuracies: vec![None, Some(0.9), Some(1.0)],
            latency_factors: vec![0.1, 0.25, 0.5, 1.0, 2.0, 4.0],
            seeds: vec![0],
            base: SimConfig { max_rounds: 200_000, ..SimConfig::default() },
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub speculation: bool,
    pub accuracy: f64,
    pub r: f64,
    pub seeds: usize,
    /// Mean over resolved T gates and seeds.
    pub mean_reaction: f64,
    pub max_reaction: u64,
    pub truncated_runs: usize,
}

pub const SWEEP_CSV_HEADER: &str = "strategy,speculation,accuracy,r,seeds,mean_reaction,max_reaction,truncated_runs";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{:.4},{},{}",
            self.strategy,
            if self.speculation { "on" } else { "off" },
            self.accuracy,
            self.r,
            self.seeds,
            self.mean_reaction,
            self.max_reaction,
            self.truncated_runs
        )
    }
}

fn spec_config(base: &SimConfig, accuracy: Option<f64>) -> SimConfig {
    match accuracy {
        None => SimConfig { speculation: SpeculationMode::Off, ..base.clone() },
        Some(a) => SimConfig {
            speculation: SpeculationMode::Stochastic,
            accuracy: a,
            accuracy_adjacent: base.accuracy_adjacent.min(a),
            ..base.clone()
        },
    }
}

/// Mean reaction time of the repeated-T program over the strategy ×
/// accuracy × latency grid.
pub fn sweep_latency(cfg: &SweepConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    if cfg.strategies.is_empty() || cfg.accuracies.is_empty() || cfg.latency_factors.is_empty() || cfg.seeds.is_empty()
    {
        return Err(ExperimentError::EmptyGrid("sweep needs strategies, accuracies, latencies and seeds"));
    }
    let p = builtin_program(Builtin::RepeatedT, BuiltinParams::new(cfg.d, cfg.t_count))?;
    let mut grid = Vec::new();
    for &s in &cfg.strategies {
        for &a in &cfg.accuracies {
            for &r in &cfg.latency_factors {
                grid.push((s, a, r));
            }
        }
    }
    grid.into_par_iter()
        .map(|(strategy, a, r)| {
            let mut sum = 0.0;
            let mut n = 0usize;
            let mut max = 0;
            let mut truncated = 0;
            for &seed in &cfg.seeds {
                let sc = SimConfig {
                    strategy,
                    latency: LatencyModel::Linear(r),
                    seed,
                    ..spec_config(&cfg.base, a)
                };
                let res = simulate(&p, &sc)?;
                truncated += res.truncated as usize;
                for x in res.reaction_times() {
                    sum += x as f64;
                    n += 1;
                    max = max.max(x);
                }
            }
            Ok(SweepRow {
                strategy,
                speculation: a.is_some(),
                accuracy: a.unwrap_or(0.0),
                r,
                seeds: cfg.seeds.len(),
                mean_reaction: if n == 0 { 0.0 } else { sum / n as f64 },
                max_reaction: max,
                truncated_runs: truncated,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RecoveryEvalConfig {
    pub d: u32,
    /// Cells in the zig-zag chain.
    pub windows: usize,
    /// Decode times in cycles of `d` rounds.
    pub decode_cycles: Vec<u64>,
    pub accuracy: f64,
    pub accuracy_adjacent: f64,
    pub shots: usize,
    pub seed: u64,
    pub strategy: Strategy,
}

impl Default for RecoveryEvalConfig {
    fn default() -> Self {
        Self {
            d: 5,
            windows: 100,
            decode_cycles: vec![1, 2, 4, 8],
            accuracy: 0.90,
            accuracy_adjacent: 0.86,
            shots: 10_000,
            seed: 0,
            strategy: Strategy::Sliding,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RecoveryRow {
    pub recovery: Recovery,
    pub decode_cycles: u64,
    pub shots: usize,
    /// Mean decoder rounds per shot.
    pub valid: f64,
    pub wasted: f64,
    pub total: f64,
    pub mean_restarts: f64,
}

pub const RECOVERY_CSV_HEADER: &str = "recovery,decode_cycles,shots,valid,wasted,total,mean_restarts";

impl RecoveryRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4}",
            self.recovery, self.decode_cycles, self.shots, self.valid, self.wasted, self.total, self.mean_restarts
        )
    }
}

/// Decoder work of the three recovery strategies on a zig-zag chain of
/// windows under stochastic speculation.
pub fn recovery_eval(cfg: &RecoveryEvalConfig) -> Result<Vec<RecoveryRow>, ExperimentError> {
    if cfg.decode_cycles.is_empty() || cfg.shots == 0 {
        return Err(ExperimentError::EmptyGrid("recovery eval needs decode times and shots"));
    }
    let p = builtin_program(Builtin::ZigzagChain, BuiltinParams::new(cfg.d, cfg.windows))?;
    let mut rows = Vec::new();
    for &c in &cfg.decode_cycles {
        for recovery in Recovery::ALL {
            let sums = (0..cfg.shots)
                .into_par_iter()
                .map(|shot| {
                    let sc = SimConfig {
                        strategy: cfg.strategy,
                        speculation: SpeculationMode::Stochastic,
                        accuracy: cfg.accuracy,
                        accuracy_adjacent: cfg.accuracy_adjacent,
                        recovery,
                        latency: LatencyModel::Fixed(c * cfg.d as u64),
                        seed: cfg.seed.wrapping_add(shot as u64),
                        ..SimConfig::default()
                    };
                    let r = simulate(&p, &sc)?;
                    Ok::<_, SimError>((r.valid_compute, r.wasted_compute, r.restarts))
                })
                .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
            let n = cfg.shots as f64;
            rows.push(RecoveryRow {
                recovery,
                decode_cycles: c,
                shots: cfg.shots,
                valid: sums.0 as f64 / n,
                wasted: sums.1 as f64 / n,
                total: (sums.0 + sums.1) as f64 / n,
                mean_restarts: sums.2 as f64 / n,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ProcessorReport {
    /// Peak and mean decoder occupancy with perfect speculation and no limit.
    pub p_max: u32,
    pub p_mean: f64,
    pub epsilon: f64,
    /// `ceil(p_max + epsilon * p_mean)`.
    pub limit: usize,
    pub runtime_unlimited: u64,
    pub runtime_limited: u64,
    pub relative_change: f64,
    pub peak_limited: u32,
    /// Mean occupancy with the configured speculation over that without.
    pub spec_concurrency_ratio: f64,
}

/// `ceil(p_max + epsilon * p_mean)`, at least one.
pub fn processor_heuristic(p_max: u32, p_mean: f64, epsilon: f64) -> usize {
    ((p_max as f64 + epsilon * p_mean - 1e-9).ceil() as usize).max(1)
}

/// Sizes the decoder pool with the heuristic and compares the runtime
/// against an unlimited pool under `cfg` (its processor limit is ignored).
pub fn processor_report(p: &Program, cfg: &SimConfig) -> Result<ProcessorReport, ExperimentError> {
    let unlimited = SimConfig { processors: None, ..cfg.clone() };
    let epsilon = match cfg.speculation {
        SpeculationMode::Off => 0.0,
        _ => 1.0 - cfg.accuracy,
    };
    let ideal = match cfg.speculation {
        SpeculationMode::Off => unlimited.clone(),
        _ => SimConfig { accuracy: 1.0, accuracy_adjacent: 1.0, speculation: SpeculationMode::Stochastic, ..unlimited.clone() },
    };
    let base = simulate(p, &ideal)?;
    let limit = processor_heuristic(base.p_max, base.p_mean, epsilon);
    let free = simulate(p, &unlimited)?;
    let capped = simulate(p, &SimConfig { processors: Some(limit), ..unlimited.clone() })?;
    let off = simulate(p, &SimConfig { speculation: SpeculationMode::Off, ..unlimited })?;
    let relative_change = if free.runtime_rounds == 0 {
        0.0
    } else {
        (capped.runtime_rounds as f64 - free.runtime_rounds as f64).abs() / free.runtime_rounds as f64
    };
    Ok(ProcessorReport {
        p_max: base.p_max,
        p_mean: base.p_mean,
        epsilon,
        limit,
        runtime_unlimited: free.runtime_rounds,
        runtime_limited: capped.runtime_rounds,
        relative_change,
        peak_limited: capped.p_max,
        spec_concurrency_ratio: if off.p_mean > 0.0 { free.p_mean / off.p_mean } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heuristic_without_speculation_is_peak() {
        assert_eq!(processor_heuristic(7, 3.2, 0.0), 7);
        assert_eq!(processor_heuristic(7, 3.2, 0.1), 8);
        assert_eq!(processor_heuristic(0, 0.0, 0.0), 1);
    }

    #[test]
    fn zero_accuracy_row_equals_off_row() {
        let cfg = SweepConfig {
            d: 5,
            t_count: 10,
            strategies: vec![Strategy::Parallel],
            accuracies: vec![None, Some(0.0)],
            latency_factors: vec![1.0],
            ..SweepConfig::default()
        };
        let rows = sweep_latency(&cfg).unwrap();
        assert_eq!(rows[0].mean_reaction, rows[1].mean_reaction);
        assert_eq!(rows[0].max_reaction, rows[1].max_reaction);
    }

    #[test]
    fn perfect_accuracy_wastes_nothing() {
        let cfg = RecoveryEvalConfig {
            windows: 20,
            decode_cycles: vec![4],
            accuracy: 1.0,
            accuracy_adjacent: 1.0,
            shots: 4,
            ..RecoveryEvalConfig::default()
        };
        for row in recovery_eval(&cfg).unwrap() {
            assert_eq!(row.wasted, 0.0);
        }
    }
}
