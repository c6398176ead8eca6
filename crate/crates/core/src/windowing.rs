//! Spacetime tiling of a program into window cells and source/sink assignment.
//!
//! A cell is one patch for at most `d` rounds. Cells on the same patch that
//! touch in time share a temporal face; cells on grid-adjacent patches that
//! take part in the same merge at the same round share a spatial face. The
//! owner (source) of a face holds the `d`-deep buffer on it and decodes
//! first; the other side (sink) waits for its dependency bits.
//!
//! [`WindowBuilder`] consumes the device timeline one round at a time so that
//! the simulator can tile a schedule whose timing is only known online. The
//! static [`build_window_cells`] and [`assign_boundaries`] run the same builder
//! on a program's nominal schedule.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::program::{InstructionKind, PatchId, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Strategy {
    Sliding,
    Parallel,
    Aligned,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Sliding, Strategy::Parallel, Strategy::Aligned];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Sliding => "sliding",
            Strategy::Parallel => "parallel",
            Strategy::Aligned => "aligned",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected sliding, parallel or aligned)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Face {
    Past,
    Future,
    Left,
    Right,
    Up,
    Down,
}

impl Face {
    pub fn opposite(self) -> Face {
        match self {
            Face::Past => Face::Future,
            Face::Future => Face::Past,
            Face::Left => Face::Right,
            Face::Right => Face::Left,
            Face::Up => Face::Down,
            Face::Down => Face::Up,
        }
    }

    pub fn is_temporal(self) -> bool {
        matches!(self, Face::Past | Face::Future)
    }

    /// Faces of one cell are adjacent unless they are opposite each other.
    pub fn adjacent(self, other: Face) -> bool {
        other != self.opposite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CellType {
    /// Owns the buffers on all faces it can (parallel colour class).
    Source,
    /// Receives dependency bits on all faces it can.
    Sink,
    /// Per-face roles (sliding windows).
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Role {
    Source,
    Sink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Boundary {
    pub neighbor: usize,
    pub face: Face,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowCell {
    pub id: usize,
    pub patch: PatchId,
    pub patch_index: usize,
    /// Position among the cells of this patch.
    pub seq: usize,
    /// Index of the contiguous activity interval of the patch this cell belongs to.
    pub life: usize,
    pub t0: u64,
    /// Exclusive commit end; `u64::MAX` while the cell is still open.
    pub t1: u64,
    pub kind: CellType,
    pub boundaries: Vec<Boundary>,
    /// Commit plus owned buffers, in units of d^3.
    pub volume: f64,
    /// Round by which the cell's data including owned buffers exists.
    pub generation_complete_round: Option<u64>,
}

impl WindowCell {
    pub fn is_closed(&self) -> bool {
        self.t1 != u64::MAX
    }

    pub fn height(&self) -> u64 {
        self.t1 - self.t0
    }

    pub fn owned_faces(&self) -> BTreeSet<Face> {
        self.boundaries.iter().filter(|b| b.role == Role::Source).map(|b| b.face).collect()
    }

    pub fn sources(&self) -> impl Iterator<Item = &Boundary> {
        self.boundaries.iter().filter(|b| b.role == Role::Sink)
    }

    pub fn sinks(&self) -> impl Iterator<Item = &Boundary> {
        self.boundaries.iter().filter(|b| b.role == Role::Source)
    }

    pub fn owns_future(&self) -> bool {
        self.boundaries.iter().any(|b| b.face == Face::Future && b.role == Role::Source)
    }

    pub fn is_all_sink(&self) -> bool {
        !self.boundaries.iter().any(|b| b.role == Role::Source)
    }
}

/// Patches that only ever appear in merge-type instructions exist only while
/// those instructions run; every other patch lives from its first
/// instruction to its last.
pub fn persistent_patches(p: &Program) -> Vec<bool> {
    let n = (p.grid.rows * p.grid.cols) as usize;
    let mut out = vec![false; n];
    for ins in &p.instructions {
        let ephemeral_kind = matches!(
            ins.kind,
            InstructionKind::MergeZZ | InstructionKind::MergeXX | InstructionKind::Split | InstructionKind::TTeleport
        );
        for &q in &ins.patches {
            // The first patch of a teleport is the consumer of the magic state.
            let first_of_teleport = ins.kind == InstructionKind::TTeleport && q == ins.patches[0];
            if !ephemeral_kind || first_of_teleport {
                out[q.index(p.grid.cols)] = true;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Default)]
struct PatchState {
    open: Option<usize>,
    prev: Option<usize>,
    alive_prev: bool,
    life: usize,
    cells: usize,
    origin: u64,
    planned: BTreeSet<u64>,
    plan_end: Option<u64>,
}

/// What happened during one builder step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepOutput {
    pub opened: Vec<usize>,
    pub closed: Vec<usize>,
    /// Cells whose data (with owned buffers) became complete this round.
    pub ready: Vec<usize>,
}

/// Incremental window tiler.
#[derive(Debug, Clone)]
pub struct WindowBuilder {
    d: u64,
    cols: u32,
    strategy: Strategy,
    patches: Vec<PatchState>,
    cells: Vec<WindowCell>,
    linked: HashSet<(usize, usize)>,
    awaiting: Vec<usize>,
    pending_plans: Vec<(usize, u64, u64)>,
    misaligned: usize,
    ephemeral: Vec<bool>,
}

impl WindowBuilder {
    pub fn new(d: u32, rows: u32, cols: u32, strategy: Strategy) -> Self {
        Self {
            d: d as u64,
            cols,
            strategy,
            patches: vec![PatchState::default(); (rows * cols) as usize],
            cells: Vec::new(),
            linked: HashSet::new(),
            awaiting: Vec::new(),
            pending_plans: Vec::new(),
            misaligned: 0,
            ephemeral: vec![false; (rows * cols) as usize],
        }
    }

    /// Marks patches whose cells follow a merged neighbour: an ephemeral
    /// patch in a merge with a grid-adjacent persistent patch is cut whenever
    /// that patch is cut and takes the opposite cell type.
    pub fn set_ephemeral(&mut self, flags: Vec<bool>) {
        assert_eq!(flags.len(), self.patches.len());
        self.ephemeral = flags;
    }

    fn leaders(&self, alive: &[bool], merges: &[&[PatchId]]) -> Vec<Option<usize>> {
        let mut out = vec![None; self.patches.len()];
        for group in merges {
            for &p in group.iter() {
                let pi = p.index(self.cols);
                if !self.ephemeral[pi] || out[pi].is_some() {
                    continue;
                }
                out[pi] = group
                    .iter()
                    .map(|q| q.index(self.cols))
                    .find(|&qi| !self.ephemeral[qi] && alive[qi] && p.is_grid_adjacent(PatchId::new(qi as u32 / self.cols, qi as u32 % self.cols)));
            }
        }
        out
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn cells(&self) -> &[WindowCell] {
        &self.cells
    }

    pub fn cell(&self, id: usize) -> &WindowCell {
        &self.cells[id]
    }

    pub fn open_cell(&self, patch_index: usize) -> Option<usize> {
        self.patches[patch_index].open
    }

    /// Blocking operations whose final cell could not be made a source.
    pub fn misaligned(&self) -> usize {
        self.misaligned
    }

    /// Requests that the cell ending at round `end` on this patch be a source
    /// cell. Only the aligned strategy acts on it; call before `step(start)`.
    pub fn plan_alignment(&mut self, patch_index: usize, start: u64, end: u64) {
        if self.strategy == Strategy::Aligned && end > start {
            self.pending_plans.push((patch_index, start, end));
        }
    }

    fn parity_type(&self, patch_index: usize, t0: u64) -> CellType {
        let row = patch_index as u32 / self.cols;
        let col = patch_index as u32 % self.cols;
        if ((t0 / self.d) + (row + col) as u64) % 2 == 0 {
            CellType::Source
        } else {
            CellType::Sink
        }
    }

    fn color(&self, patch_index: usize) -> u32 {
        (patch_index as u32 / self.cols + patch_index as u32 % self.cols) % 2
    }

    fn apply_plan(&mut self, pi: usize, s: u64, e: u64) {
        let d = self.d;
        let st = &self.patches[pi];
        let (t0, tau) = match st.open.filter(|_| st.alive_prev) {
            Some(c) => (self.cells[c].t0, self.cells[c].kind),
            None => (s, self.parity_type(pi, s)),
        };
        // Natural cuts still ahead of us, then the cut at the op's end.
        let mut cuts: Vec<u64> = Vec::new();
        let mut c = if let Some(pe) = st.plan_end.filter(|&pe| pe > s) {
            cuts.extend(st.planned.iter().copied().filter(|&c| c >= s && c > t0 && c < e && c < pe));
            pe
        } else if s < st.origin {
            st.origin
        } else {
            st.origin + (s - st.origin).div_ceil(d) * d
        };
        while c < e {
            if c >= s && c > t0 {
                cuts.push(c);
            }
            c += d;
        }
        cuts.sort_unstable();
        cuts.dedup();
        let ends_as_source = |n_cuts: usize| {
            let flip = n_cuts % 2 == 1;
            match (tau, flip) {
                (CellType::Source, false) | (CellType::Sink, true) => true,
                _ => false,
            }
        };
        if !ends_as_source(cuts.len()) {
            let mut bounds = vec![t0];
            bounds.extend(&cuts);
            bounds.push(e);
            let mut best: Option<(u64, u64)> = None;
            for w in bounds.windows(2) {
                let (a, b) = (w[0], w[1]);
                let lo = (a + 1).max(s);
                let hi = b - 1;
                if lo > hi {
                    continue;
                }
                let m = ((a + b) / 2).clamp(lo, hi);
                let len = b - a;
                if best.map_or(true, |(l, _)| len > l) {
                    best = Some((len, m));
                }
            }
            match best {
                Some((_, m)) => cuts.push(m),
                None => self.misaligned += 1,
            }
        }
        cuts.push(e);
        let st = &mut self.patches[pi];
        st.planned = cuts.into_iter().collect();
        st.plan_end = Some(e);
        st.origin = e;
    }

    fn is_cut(&self, pi: usize, t: u64) -> bool {
        let st = &self.patches[pi];
        let c = &self.cells[st.open.unwrap()];
        if t <= c.t0 {
            return false;
        }
        if st.planned.contains(&t) {
            return true;
        }
        if st.plan_end.is_some_and(|pe| t < pe) {
            return false;
        }
        t >= st.origin && (t - st.origin) % self.d == 0
    }

    fn link(&mut self, a: usize, b: usize, face_a: Face, a_owns: bool) {
        let key = (a.min(b), a.max(b));
        if !self.linked.insert(key) {
            return;
        }
        let (ra, rb) = if a_owns { (Role::Source, Role::Sink) } else { (Role::Sink, Role::Source) };
        self.cells[a].boundaries.push(Boundary { neighbor: b, face: face_a, role: ra });
        self.cells[b].boundaries.push(Boundary { neighbor: a, face: face_a.opposite(), role: rb });
    }

    fn owner_first(&self, a: usize, b: usize, face_a: Face) -> bool {
        let (ca, cb) = (&self.cells[a], &self.cells[b]);
        match self.strategy {
            Strategy::Sliding => {
                if face_a.is_temporal() {
                    face_a == Face::Future
                } else {
                    ca.patch_index < cb.patch_index
                }
            }
            Strategy::Parallel | Strategy::Aligned => match (ca.kind, cb.kind) {
                (CellType::Source, CellType::Sink) => true,
                (CellType::Sink, CellType::Source) => false,
                _ if face_a.is_temporal() => face_a == Face::Future,
                _ => self.color(ca.patch_index) == 0,
            },
        }
    }

    /// Advances to round `t`.
    ///
    /// `alive[i]` says whether patch `i` generates round `t`; `merges` lists
    /// the patch sets of merge-type instructions active during round `t`.
    pub fn step(&mut self, t: u64, alive: &[bool], merges: &[&[PatchId]]) -> StepOutput {
        let mut out = StepOutput::default();
        let plans = std::mem::take(&mut self.pending_plans);
        let (now, later): (Vec<_>, Vec<_>) = plans.into_iter().partition(|&(_, s, _)| s <= t);
        self.pending_plans = later;
        for (pi, s, e) in now {
            if alive[pi] {
                self.apply_plan(pi, s.max(t), e);
            }
        }

        // Close cells at cuts and deaths.
        let leaders = self.leaders(alive, merges);
        let cut: Vec<bool> = (0..self.patches.len())
            .map(|pi| alive[pi] && self.patches[pi].open.is_some() && leaders[pi].is_none() && self.is_cut(pi, t))
            .collect();
        for pi in 0..self.patches.len() {
            let Some(c) = self.patches[pi].open else { continue };
            let cut_here = match leaders[pi] {
                Some(l) => cut[l] && t > self.cells[c].t0,
                None => cut[pi],
            };
            if !alive[pi] {
                self.cells[c].t1 = t;
                self.patches[pi].open = None;
                self.patches[pi].prev = None;
                out.closed.push(c);
            } else if cut_here {
                self.cells[c].t1 = t;
                self.patches[pi].open = None;
                self.patches[pi].prev = Some(c);
                out.closed.push(c);
            }
        }
        for pi in 0..self.patches.len() {
            let st = &mut self.patches[pi];
            if st.plan_end.is_some_and(|pe| t >= pe) {
                st.plan_end = None;
                st.planned.clear();
            }
        }

        // Open cells for live patches, leaders before their followers.
        let order: Vec<usize> = (0..self.patches.len())
            .filter(|&pi| leaders[pi].is_none())
            .chain((0..self.patches.len()).filter(|&pi| leaders[pi].is_some()))
            .collect();
        for pi in order {
            if !alive[pi] {
                if self.patches[pi].alive_prev {
                    self.patches[pi].life += 1;
                }
                self.patches[pi].alive_prev = false;
                continue;
            }
            if self.patches[pi].open.is_none() {
                let prev = self.patches[pi].prev.take();
                let leader_kind = leaders[pi].and_then(|l| self.patches[l].open).map(|c| self.cells[c].kind);
                let kind = match (self.strategy, prev) {
                    (Strategy::Sliding, _) => CellType::Mixed,
                    (_, _) if leader_kind.is_some() => match leader_kind.unwrap() {
                        CellType::Source => CellType::Sink,
                        _ => CellType::Source,
                    },
                    (Strategy::Parallel, _) => self.parity_type(pi, t),
                    (Strategy::Aligned, Some(p)) => match self.cells[p].kind {
                        CellType::Source => CellType::Sink,
                        _ => CellType::Source,
                    },
                    (Strategy::Aligned, None) => self.parity_type(pi, t),
                };
                let id = self.cells.len();
                let st = &self.patches[pi];
                self.cells.push(WindowCell {
                    id,
                    patch: PatchId::new(pi as u32 / self.cols, pi as u32 % self.cols),
                    patch_index: pi,
                    seq: st.cells,
                    life: st.life,
                    t0: t,
                    t1: u64::MAX,
                    kind,
                    boundaries: Vec::new(),
                    volume: 0.0,
                    generation_complete_round: None,
                });
                self.patches[pi].cells += 1;
                self.patches[pi].open = Some(id);
                out.opened.push(id);
                if let Some(p) = prev {
                    let owns = self.owner_first(p, id, Face::Future);
                    self.link(p, id, Face::Future, owns);
                }
            }
            self.patches[pi].alive_prev = true;
        }

        // Spatial faces between merged neighbours.
        for group in merges {
            for (i, &p) in group.iter().enumerate() {
                for &q in &group[i + 1..] {
                    if !p.is_grid_adjacent(q) {
                        continue;
                    }
                    let (pi, qi) = (p.index(self.cols), q.index(self.cols));
                    let (Some(a), Some(b)) = (self.patches[pi].open, self.patches[qi].open) else { continue };
                    let face = if p.row == q.row {
                        if p.col < q.col { Face::Right } else { Face::Left }
                    } else if p.row < q.row {
                        Face::Down
                    } else {
                        Face::Up
                    };
                    let owns = self.owner_first(a, b, face);
                    self.link(a, b, face, owns);
                }
            }
        }

        // Finalise closed cells.
        for &c in &out.closed {
            let owned = self.cells[c].owned_faces().len() as f64;
            let cell = &mut self.cells[c];
            cell.volume = (cell.height() as f64 + self.d as f64 * owned) / self.d as f64;
            if cell.owns_future() {
                self.awaiting.push(c);
            } else {
                cell.generation_complete_round = Some(t);
                out.ready.push(c);
            }
        }
        let d = self.d;
        let cells = &mut self.cells;
        let patches = &self.patches;
        self.awaiting.retain(|&c| {
            let cell = &mut cells[c];
            if cell.t1 == t {
                return true;
            }
            if t >= cell.t1 + d || !alive[cell.patch_index] || patches[cell.patch_index].life != cell.life {
                cell.generation_complete_round = Some(t);
                out.ready.push(c);
                false
            } else {
                true
            }
        });
        out
    }

    /// Closes every open cell at round `t` and flushes pending buffers.
    pub fn finish(&mut self, t: u64) -> StepOutput {
        let alive = vec![false; self.patches.len()];
        let mut out = self.step(t, &alive, &[]);
        let mut extra = self.step(t + 1, &alive, &[]);
        out.ready.append(&mut extra.ready);
        out
    }

    pub fn into_graph(self) -> WindowGraph {
        WindowGraph::from_cells(self.cells, self.strategy)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowGraph {
    pub cells: Vec<WindowCell>,
    /// Dependency edges `(source, sink)`.
    pub edges: Vec<(usize, usize)>,
    pub strategy: Strategy,
}

impl WindowGraph {
    pub fn from_cells(cells: Vec<WindowCell>, strategy: Strategy) -> Self {
        let mut edges: Vec<(usize, usize)> = cells
            .iter()
            .flat_map(|c| c.sinks().map(move |b| (c.id, b.neighbor)))
            .collect();
        edges.sort_unstable();
        Self { cells, edges, strategy }
    }

    /// Topological order, or `None` if the graph has a cycle.
    pub fn topo_order(&self) -> Option<Vec<usize>> {
        let n = self.cells.len();
        let mut indeg = vec![0usize; n];
        let mut out = vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            indeg[b] += 1;
            out[a].push(b);
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(n);
        while let Some(x) = stack.pop() {
            order.push(x);
            for &y in &out[x] {
                indeg[y] -= 1;
                if indeg[y] == 0 {
                    stack.push(y);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_order().is_some()
    }

    /// Longest dependency path in edges.
    pub fn depth(&self) -> usize {
        let order = self.topo_order().expect("acyclic");
        let mut level = vec![0usize; self.cells.len()];
        let mut out = vec![Vec::new(); self.cells.len()];
        for &(a, b) in &self.edges {
            out[a].push(b);
        }
        for x in order {
            for &y in &out[x] {
                level[y] = level[y].max(level[x] + 1);
            }
        }
        level.into_iter().max().unwrap_or(0)
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "strategy": self.strategy.name(),
            "cells": self.cells,
            "edges": self.edges,
        })
    }
}

/// Earliest round at which the cell's data, including its owned buffers, exists.
pub fn ready_round(cell: &WindowCell) -> Option<u64> {
    cell.generation_complete_round
}

/// Round-by-round activity of a program run at its nominal times.
pub struct NominalTimeline {
    pub end: u64,
    alive: Vec<Vec<(u64, u64)>>,
}

impl NominalTimeline {
    pub fn new(p: &Program) -> Self {
        let n = (p.grid.rows * p.grid.cols) as usize;
        let persistent = persistent_patches(p);
        let mut spans: Vec<Vec<(u64, u64)>> = vec![Vec::new(); n];
        for ins in &p.instructions {
            for &q in &ins.patches {
                spans[q.index(p.grid.cols)].push((ins.start_round, ins.end_round()));
            }
        }
        for (i, s) in spans.iter_mut().enumerate() {
            s.sort_unstable();
            if persistent[i] && !s.is_empty() {
                let first = s[0].0;
                let last = s.iter().map(|x| x.1).max().unwrap();
                *s = vec![(first, last)];
            }
        }
        Self { end: p.nominal_end(), alive: spans }
    }

    pub fn alive_at(&self, t: u64) -> Vec<bool> {
        self.alive.iter().map(|s| s.iter().any(|&(a, b)| a <= t && t < b)).collect()
    }
}

fn run_builder(p: &Program, strategy: Strategy) -> WindowBuilder {
    let timeline = NominalTimeline::new(p);
    let persistent = persistent_patches(p);
    let mut b = WindowBuilder::new(p.distance, p.grid.rows, p.grid.cols, strategy);
    b.set_ephemeral(persistent.iter().map(|&x| !x).collect());
    for t in 0..timeline.end {
        for ins in p.instructions.iter().filter(|i| i.blocking && i.start_round == t) {
            for q in &ins.patches {
                let pi = q.index(p.grid.cols);
                if persistent[pi] {
                    b.plan_alignment(pi, t, ins.end_round());
                }
            }
        }
        let merges: Vec<&[PatchId]> = p
            .instructions
            .iter()
            .filter(|i| i.kind.is_merge() && i.start_round <= t && t < i.end_round())
            .map(|i| i.patches.as_slice())
            .collect();
        b.step(t, &timeline.alive_at(t), &merges);
    }
    b.finish(timeline.end);
    b
}

/// Tiles the program's nominal spacetime volume with natural `d`-round cuts.
pub fn build_window_cells(p: &Program) -> Vec<WindowCell> {
    run_builder(p, Strategy::Parallel).cells
}

/// Assigns source/sink roles under `strategy`.
///
/// Sliding and parallel keep the natural tiling of `cells`; the aligned
/// strategy shifts each patch's cut phase around blocking operations and
/// therefore re-tiles the program.
pub fn assign_boundaries(cells: &[WindowCell], strategy: Strategy, p: &Program) -> WindowGraph {
    let b = run_builder(p, strategy);
    if strategy != Strategy::Aligned {
        debug_assert_eq!(
            b.cells.iter().map(|c| (c.patch, c.t0, c.t1)).collect::<Vec<_>>(),
            cells.iter().map(|c| (c.patch, c.t0, c.t1)).collect::<Vec<_>>()
        );
    }
    b.into_graph()
}
