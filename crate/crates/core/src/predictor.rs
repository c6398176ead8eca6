//! Constant-depth boundary predictors.
//!
//! A predictor only looks at syndrome bits within graph distance 2 of one
//! boundary plane and guesses which matches cross it. Each phase below is a
//! set of checks that hardware can evaluate simultaneously, so the phase
//! count is a structural latency measure and never depends on `d`.

use thiserror::Error;

use crate::graph::{BoundaryPlane, DecodingGraph, DependencyBits, Syndrome, MAX_DEGREE};

/// Number of phase-2 bins: an endpoint counter never exceeds `1 + MAX_DEGREE`.
pub const NUM_BINS: usize = 2 * (1 + MAX_DEGREE);

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LocalEdge {
    id: usize,
    u: u32,
    v: u32,
    /// Commit-side endpoint for crossing edges.
    toggle: Option<usize>,
}

/// Two near nodes joined by a two-edge chain through the plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Weight2Pair {
    pub u: usize,
    pub v: usize,
    /// Plane nodes toggled by the chain.
    pub toggles: Vec<usize>,
}

/// Static, per-shape part of a boundary view: which nodes and edges the
/// predictor can see and the precomputed weight-2 pairs.
#[derive(Debug, Clone)]
pub struct BoundaryLayout {
    plane: usize,
    near: Vec<usize>,
    local: Vec<u32>,
    edges: Vec<LocalEdge>,
    crossing: Vec<usize>,
    weight2: Vec<(u32, u32, Vec<usize>)>,
}

impl BoundaryLayout {
    pub fn new(g: &DecodingGraph, plane: &BoundaryPlane) -> Self {
        let mut local = vec![NONE; g.num_nodes()];
        for (i, &n) in plane.near_nodes.iter().enumerate() {
            local[n] = i as u32;
        }
        let toggle_of = |e: usize| {
            let edge = g.edge(e);
            if g.is_commit(edge.u) {
                edge.u
            } else {
                edge.v
            }
        };
        let edges: Vec<LocalEdge> = plane
            .near_edges
            .iter()
            .map(|&e| {
                let edge = g.edge(e);
                LocalEdge {
                    id: e,
                    u: local[edge.u],
                    v: local[edge.v],
                    toggle: plane.is_crossing(e).then(|| toggle_of(e)),
                }
            })
            .collect();
        let crossing = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.toggle.is_some())
            .map(|(i, _)| i)
            .collect();

        let mut pairs = std::collections::BTreeMap::new();
        for &e in &plane.crossing_edges {
            let edge = g.edge(e);
            for (x, y) in [(edge.u, edge.v), (edge.v, edge.u)] {
                for &(w, _) in g.neighbors(x) {
                    if w == g.virtual_node() || w == y || g.dist(w, y) != 2 {
                        continue;
                    }
                    let key = (w.min(y), w.max(y));
                    if pairs.contains_key(&key) {
                        continue;
                    }
                    let path = g.canonical_path(key.0, key.1);
                    let toggles =
                        DependencyBits::from_xor(plane.id, path.iter().filter(|&&p| plane.is_crossing(p)).map(|&p| toggle_of(p)));
                    if path.iter().any(|&p| plane.is_crossing(p)) {
                        pairs.insert(key, toggles.toggles);
                    }
                }
            }
        }
        let weight2 = pairs
            .into_iter()
            .filter(|((u, v), _)| local[*u] != NONE && local[*v] != NONE)
            .map(|((u, v), t)| (local[u], local[v], t))
            .collect();
        Self { plane: plane.id, near: plane.near_nodes.clone(), local, edges, crossing, weight2 }
    }

    pub fn plane(&self) -> usize {
        self.plane
    }

    pub fn near_nodes(&self) -> &[usize] {
        &self.near
    }

    pub fn weight2_pairs(&self) -> Vec<Weight2Pair> {
        self.weight2
            .iter()
            .map(|(u, v, t)| Weight2Pair { u: self.near[*u as usize], v: self.near[*v as usize], toggles: t.clone() })
            .collect()
    }

    /// Loads the near-region bits of `s` into a fresh view.
    pub fn view(&self, s: &Syndrome) -> BoundaryView<'_> {
        let counters = self.near.iter().map(|&n| s.bits[n].min(1)).collect();
        BoundaryView { layout: self, counters }
    }

    /// Local index of a near node.
    pub fn local_index(&self, n: usize) -> Option<usize> {
        self.local.get(n).copied().filter(|&x| x != NONE).map(|x| x as usize)
    }
}

/// Counters over the near region of one plane, initialised from syndrome bits.
#[derive(Debug, Clone)]
pub struct BoundaryView<'a> {
    layout: &'a BoundaryLayout,
    counters: Vec<u8>,
}

impl BoundaryView<'_> {
    pub fn counters(&self) -> &[u8] {
        &self.counters
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeclaredMatch {
    /// A single edge, by graph edge id.
    Edge(usize),
    /// A weight-2 chain between two nodes.
    Chain(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub declared: Vec<DeclaredMatch>,
    pub bits: DependencyBits,
    pub phases_executed: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    OneStep,
    TwoStep,
    ThreeStep,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 3] = [PredictorKind::OneStep, PredictorKind::TwoStep, PredictorKind::ThreeStep];

    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::OneStep => "1-step",
            PredictorKind::TwoStep => "2-step",
            PredictorKind::ThreeStep => "3-step",
        }
    }
}

pub fn predict(kind: PredictorKind, v: &BoundaryView) -> Prediction {
    match kind {
        PredictorKind::OneStep => predict_1step(v),
        PredictorKind::TwoStep => predict_2step(v),
        PredictorKind::ThreeStep => predict_3step(v),
    }
}

/// Declares every crossing edge whose two endpoints are lit.
pub fn predict_1step(v: &BoundaryView) -> Prediction {
    let l = v.layout;
    let c = &v.counters;
    let mut declared = Vec::new();
    let mut toggles = Vec::new();
    for &k in &l.crossing {
        let e = l.edges[k];
        if c[e.u as usize] == 1 && c[e.v as usize] == 1 {
            declared.push(DeclaredMatch::Edge(e.id));
            toggles.push(e.toggle.unwrap());
        }
    }
    Prediction { declared, bits: DependencyBits::from_xor(l.plane, toggles), phases_executed: 1 }
}

/// Runs the increment and binned matching phases, returning the surviving
/// counters alongside the declared edges.
fn two_step_core(v: &BoundaryView) -> (Vec<u8>, Vec<DeclaredMatch>, Vec<usize>) {
    let l = v.layout;
    let bits = &v.counters;
    let mut c = bits.clone();
    // Phase 1: every near edge with both bits set bumps both endpoints.
    let mut cands = Vec::new();
    for (k, e) in l.edges.iter().enumerate() {
        if bits[e.u as usize] == 1 && bits[e.v as usize] == 1 {
            c[e.u as usize] += 1;
            c[e.v as usize] += 1;
            cands.push(k);
        }
    }
    // Phase 2: bins in increasing endpoint-counter sum, edge id order inside a bin.
    let mut bins: Vec<Vec<usize>> = vec![Vec::new(); NUM_BINS + 1];
    for &k in &cands {
        let e = l.edges[k];
        let sum = (c[e.u as usize] + c[e.v as usize]) as usize;
        bins[sum.min(NUM_BINS)].push(k);
    }
    let mut declared = Vec::new();
    let mut toggles = Vec::new();
    for bin in bins.iter().skip(1) {
        for &k in bin {
            let e = l.edges[k];
            let (u, w) = (e.u as usize, e.v as usize);
            if c[u] != 0 && c[w] != 0 {
                c[u] = 0;
                c[w] = 0;
                declared.push(DeclaredMatch::Edge(e.id));
                if let Some(t) = e.toggle {
                    toggles.push(t);
                }
            }
        }
    }
    (c, declared, toggles)
}

pub const TWO_STEP_PHASES: u32 = 1 + NUM_BINS as u32;
pub const THREE_STEP_PHASES: u32 = TWO_STEP_PHASES + 1;

pub fn predict_2step(v: &BoundaryView) -> Prediction {
    let (_, declared, toggles) = two_step_core(v);
    Prediction {
        declared,
        bits: DependencyBits::from_xor(v.layout.plane, toggles),
        phases_executed: TWO_STEP_PHASES,
    }
}

/// Two-step prediction followed by one simultaneous pass over the
/// precomputed weight-2 pairs.
pub fn predict_3step(v: &BoundaryView) -> Prediction {
    let l = v.layout;
    let (c, mut declared, mut toggles) = two_step_core(v);
    for (u, w, t) in &l.weight2 {
        if c[*u as usize] != 0 && c[*w as usize] != 0 {
            declared.push(DeclaredMatch::Chain(l.near[*u as usize], l.near[*w as usize]));
            toggles.extend_from_slice(t);
        }
    }
    Prediction {
        declared,
        bits: DependencyBits::from_xor(l.plane, toggles),
        phases_executed: THREE_STEP_PHASES,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Classification {
    pub correct: bool,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredictorError {
    #[error("prediction is for plane {pred} but truth is for plane {truth}")]
    PlaneMismatch { pred: usize, truth: usize },
}

/// Exact-match verdict plus per-bit excess and missing toggles.
pub fn classify(pred: &Prediction, truth: &DependencyBits) -> Result<Classification, PredictorError> {
    if pred.bits.plane != truth.plane {
        return Err(PredictorError::PlaneMismatch { pred: pred.bits.plane, truth: truth.plane });
    }
    let p = &pred.bits.toggles;
    let t = &truth.toggles;
    let fp = p.iter().filter(|x| t.binary_search(x).is_err()).count();
    let fnn = t.iter().filter(|x| p.binary_search(x).is_err()).count();
    Ok(Classification { correct: fp == 0 && fnn == 0, false_positives: fp, false_negatives: fnn })
}
