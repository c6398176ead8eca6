//! Monte Carlo accuracy of the boundary predictors against the reference matcher.

use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{build_window_graph, sample_error_set, BufferSpec, GraphError};
use crate::matching::{decode_auto, extract_dependency_bits, DEFAULT_EXACT_CAP};
use crate::predictor::{classify, predict, BoundaryLayout, PredictorKind};
use crate::seed;

#[derive(Debug, Clone)]
pub struct PredictorEvalConfig {
    pub distances: Vec<u32>,
    pub p: f64,
    pub shots: usize,
    pub seed: u64,
    /// Face whose boundary is predicted; the window gets a `d`-deep buffer there.
    pub boundary: BufferSpec,
    pub exact_cap: usize,
}

impl Default for PredictorEvalConfig {
    fn default() -> Self {
        Self {
            distances: vec![13, 17, 21, 25],
            p: 1e-3,
            shots: 10_000,
            seed: 0,
            boundary: BufferSpec::FUTURE,
            exact_cap: DEFAULT_EXACT_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PredictorRow {
    pub d: u32,
    pub p: f64,
    pub predictor: &'static str,
    pub shots: usize,
    pub accuracy: f64,
    /// Fraction of shots with at least one excess toggle.
    pub fp_rate: f64,
    /// Fraction of shots with at least one missing toggle.
    pub fn_rate: f64,
}

pub const PREDICTOR_CSV_HEADER: &str = "d,p,predictor,shots,accuracy,fp_rate,fn_rate";

impl PredictorRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6}",
            self.d, self.p, self.predictor, self.shots, self.accuracy, self.fp_rate, self.fn_rate
        )
    }
}

#[derive(Default, Clone, Copy)]
struct Tally {
    correct: usize,
    fp: usize,
    fnn: usize,
}

/// One row per (d, predictor). Shots are independent and run in parallel.
pub fn predictor_eval(cfg: &PredictorEvalConfig) -> Result<Vec<PredictorRow>, GraphError> {
    let mut rows = Vec::new();
    for &d in &cfg.distances {
        let g = build_window_graph(d, d, &[cfg.boundary])?;
        let plane = &g.planes()[0];
        let layout = BoundaryLayout::new(&g, plane);
        let m = g.edges().len();
        let tallies = (0..cfg.shots)
            .into_par_iter()
            .map(|shot| {
                let mut rng = seed::rng(cfg.seed, &[d as u64, shot as u64]);
                let errors = sample_error_set(m, cfg.p, &mut rng);
                let s = g.syndrome_of(&errors);
                let truth = extract_dependency_bits(&g, &decode_auto(&g, &s, cfg.exact_cap), plane);
                let view = layout.view(&s);
                let mut t = [Tally::default(); 3];
                for (k, kind) in PredictorKind::ALL.into_iter().enumerate() {
                    let c = classify(&predict(kind, &view), &truth).expect("same plane");
                    t[k].correct += c.correct as usize;
                    t[k].fp += (c.false_positives > 0) as usize;
                    t[k].fnn += (c.false_negatives > 0) as usize;
                }
                t
            })
            .reduce(
                || [Tally::default(); 3],
                |mut a, b| {
                    for k in 0..3 {
                        a[k].correct += b[k].correct;
                        a[k].fp += b[k].fp;
                        a[k].fnn += b[k].fnn;
                    }
                    a
                },
            );
        let n = cfg.shots.max(1) as f64;
        for (k, kind) in PredictorKind::ALL.into_iter().enumerate() {
            rows.push(PredictorRow {
                d,
                p: cfg.p,
                predictor: kind.name(),
                shots: cfg.shots,
                accuracy: tallies[k].correct as f64 / n,
                fp_rate: tallies[k].fp as f64 / n,
                fn_rate: tallies[k].fnn as f64 / n,
            });
        }
    }
    Ok(rows)
}
