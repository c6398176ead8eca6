use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::sync::Arc;

use rand::Rng;

use super::latency::decode_latency;
use super::{CellRecord, Reaction, Recovery, SimConfig, SimError, SimResult, SpeculationMode, TraceSpan};
use crate::graph::{build_window_graph, sample_errors, BufferSpec, DecodingGraph};
use crate::matching::{decode_exact_clusters, extract_dependency_bits, DecodeError};
use crate::predictor::{predict_3step, BoundaryLayout};
use crate::program::{PatchId, Program};
use crate::seed;
use crate::windowing::{persistent_patches, Face, Role, WindowBuilder};

const KEY_LATENCY: u64 = 1;
const KEY_SPEC: u64 = 2;
const KEY_FIRE: u64 = 3;
const KEY_NOISE: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    DecodeDone { cell: usize, attempt: u32 },
    SpecAvailable { src: usize, dst: usize },
}

impl Event {
    fn priority(self) -> u8 {
        match self {
            Event::DecodeDone { .. } => 0,
            Event::SpecAvailable { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Input {
    Empty,
    Spec { correct: bool },
    Verified,
}

#[derive(Debug, Clone)]
struct CellState {
    /// Parallel to the cell's boundary list; only `Role::Sink` entries matter.
    inputs: Vec<Input>,
    /// A speculation received on this boundary turned out wrong.
    wrong_in: Vec<bool>,
    latency: u64,
    ready_at: Option<u64>,
    attempt: u32,
    running: Option<u64>,
    finished: bool,
    queued: bool,
    valid_at: Option<u64>,
    attempts_started: u32,
}

impl CellState {
    fn new() -> Self {
        Self {
            inputs: Vec::new(),
            wrong_in: Vec::new(),
            latency: 0,
            ready_at: None,
            attempt: 0,
            running: None,
            finished: false,
            queued: false,
            valid_at: None,
            attempts_started: 0,
        }
    }

    fn began(&self) -> bool {
        self.running.is_some() || self.finished
    }
}

type GraphKey = (u32, Vec<BufferSpec>);
type GraphEntry = Arc<(DecodingGraph, Vec<BoundaryLayout>)>;

struct Engine<'a> {
    p: &'a Program,
    cfg: &'a SimConfig,
    d: u32,
    builder: WindowBuilder,
    cells: Vec<CellState>,
    events: BinaryHeap<Reverse<(u64, u8, u64, Event)>>,
    event_seq: u64,
    queue: VecDeque<usize>,
    busy: usize,

    persistent: Vec<bool>,
    patch_queue: Vec<VecDeque<usize>>,
    busy_until: Vec<u64>,
    active: Vec<Option<usize>>,
    locked: Vec<Option<usize>>,
    first_started: Vec<bool>,
    instr_start: Vec<Option<u64>>,
    instr_end: Vec<u64>,
    resolved: Vec<Option<u64>>,
    unresolved: Vec<usize>,
    reactions: Vec<Reaction>,
    patch_cells: Vec<Vec<usize>>,
    first_invalid: Vec<usize>,

    trace_open: Vec<Option<(&'static str, u64)>>,
    trace: Vec<TraceSpan>,
    occupancy: Vec<u32>,

    integrated: HashMap<usize, Vec<(Face, bool)>>,
    graphs: HashMap<GraphKey, GraphEntry>,

    total_compute: u64,
    valid_compute: u64,
    speculations: u64,
    mispredictions: u64,
    restarts: u64,
}

/// Runs `p` through the decoding pipeline described by `cfg`.
pub fn simulate(p: &Program, cfg: &SimConfig) -> Result<SimResult, SimError> {
    cfg.validate()?;
    let mut e = Engine::new(p, cfg);
    e.run()
}

impl<'a> Engine<'a> {
    fn new(p: &'a Program, cfg: &'a SimConfig) -> Self {
        let n = (p.grid.rows * p.grid.cols) as usize;
        let mut order: Vec<usize> = (0..p.instructions.len()).collect();
        order.sort_by_key(|&i| (p.instructions[i].start_round, i));
        let mut patch_queue = vec![VecDeque::new(); n];
        for &i in &order {
            for q in &p.instructions[i].patches {
                patch_queue[q.index(p.grid.cols)].push_back(i);
            }
        }
        let persistent = persistent_patches(p);
        let mut builder = WindowBuilder::new(p.distance, p.grid.rows, p.grid.cols, cfg.strategy);
        builder.set_ephemeral(persistent.iter().map(|&x| !x).collect());
        Self {
            p,
            cfg,
            d: p.distance,
            builder,
            cells: Vec::new(),
            events: BinaryHeap::new(),
            event_seq: 0,
            queue: VecDeque::new(),
            busy: 0,
            persistent,
            patch_queue,
            busy_until: vec![0; n],
            active: vec![None; n],
            locked: vec![None; n],
            first_started: vec![false; n],
            instr_start: vec![None; p.instructions.len()],
            instr_end: vec![0; p.instructions.len()],
            resolved: vec![None; p.instructions.len()],
            unresolved: Vec::new(),
            reactions: Vec::new(),
            patch_cells: vec![Vec::new(); n],
            first_invalid: vec![0; n],
            trace_open: vec![None; n],
            trace: Vec::new(),
            occupancy: Vec::new(),
            integrated: HashMap::new(),
            graphs: HashMap::new(),
            total_compute: 0,
            valid_compute: 0,
            speculations: 0,
            mispredictions: 0,
            restarts: 0,
        }
    }

    fn patch_id(&self, pi: usize) -> PatchId {
        PatchId::new(pi as u32 / self.p.grid.cols, pi as u32 % self.p.grid.cols)
    }

    fn schedule(&mut self, t: u64, ev: Event) {
        self.event_seq += 1;
        self.events.push(Reverse((t, ev.priority(), self.event_seq, ev)));
    }

    fn run(&mut self) -> Result<SimResult, SimError> {
        let n = self.patch_queue.len();
        let mut t = 0u64;
        let mut truncated = false;
        loop {
            if t > self.cfg.max_rounds {
                truncated = true;
                break;
            }
            self.process_events(t)?;
            self.check_resolutions(t);
            self.start_instructions(t);

            let alive: Vec<bool> = (0..n).map(|pi| self.alive(pi, t)).collect();
            let merge_groups: Vec<&[PatchId]> = self
                .active_merges(t)
                .into_iter()
                .map(|i| self.p.instructions[i].patches.as_slice())
                .collect();
            let out = self.builder.step(t, &alive, &merge_groups);
            self.record_trace(t, &alive);
            for &c in &out.opened {
                debug_assert_eq!(c, self.cells.len());
                self.cells.push(CellState::new());
                let pi = self.builder.cell(c).patch_index;
                self.patch_cells[pi].push(c);
            }
            for &c in &out.ready {
                self.on_ready(c, t)?;
            }
            self.process_events(t)?;
            self.check_resolutions(t);
            self.dispatch(t);
            self.occupancy.push(self.busy as u32);

            if self.finished(t, &alive) {
                break;
            }
            t += 1;
        }
        for pi in 0..n {
            if let Some((label, start)) = self.trace_open[pi].take() {
                self.trace.push(TraceSpan { patch: self.patch_id(pi), start, end: t, label });
            }
        }
        Ok(self.result(t, truncated))
    }

    fn finished(&self, t: u64, alive: &[bool]) -> bool {
        let device_done = self.instr_start.iter().all(Option::is_some)
            && self.instr_end.iter().all(|&e| e <= t + 1)
            && !alive.iter().any(|&a| a);
        device_done
            && (0..alive.len()).all(|pi| self.builder.open_cell(pi).is_none())
            && self.cells.iter().all(|c| c.valid_at.is_some())
            && self.events.is_empty()
            && self.busy == 0
    }

    fn result(&self, t: u64, truncated: bool) -> SimResult {
        let runtime_rounds = if truncated {
            t
        } else {
            self.instr_end.iter().copied().max().unwrap_or(0)
        };
        let p_max = self.occupancy.iter().copied().max().unwrap_or(0);
        let p_mean = if self.occupancy.is_empty() {
            0.0
        } else {
            self.occupancy.iter().map(|&x| x as f64).sum::<f64>() / self.occupancy.len() as f64
        };
        let cells = self
            .builder
            .cells()
            .iter()
            .zip(&self.cells)
            .map(|(w, s)| CellRecord {
                patch: w.patch,
                t0: w.t0,
                t1: w.t1,
                kind: w.kind,
                volume: w.volume,
                ready: s.ready_at,
                valid_at: s.valid_at,
                attempts: s.attempts_started,
            })
            .collect();
        let mut unresolved_ops: Vec<usize> = self.unresolved.clone();
        unresolved_ops.sort_unstable();
        let mut reactions = self.reactions.clone();
        reactions.sort_by_key(|r| r.op);
        SimResult {
            distance: self.d,
            runtime_rounds,
            runtime_us: runtime_rounds as f64 * self.p.round_time_us,
            reactions,
            unresolved_ops,
            occupancy: self.occupancy.clone(),
            p_max,
            p_mean,
            valid_compute: self.valid_compute,
            wasted_compute: self.total_compute - self.valid_compute,
            total_compute: self.total_compute,
            speculations: self.speculations,
            mispredictions: self.mispredictions,
            restarts: self.restarts,
            misaligned_ops: self.builder.misaligned(),
            instruction_starts: self.instr_start.clone(),
            cells,
            trace: self.trace.clone(),
            truncated,
        }
    }

    // ---- device ----

    fn alive(&self, pi: usize, t: u64) -> bool {
        if self.active[pi].is_some() && self.busy_until[pi] > t {
            return true;
        }
        self.persistent[pi]
            && self.first_started[pi]
            && (!self.patch_queue[pi].is_empty() || self.locked[pi].is_some())
    }

    fn active_merges(&self, t: u64) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.active.len())
            .filter(|&pi| self.busy_until[pi] > t)
            .filter_map(|pi| self.active[pi])
            .filter(|&i| self.p.instructions[i].kind.is_merge())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn label(&self, pi: usize, t: u64) -> &'static str {
        match self.active[pi] {
            Some(i) if self.busy_until[pi] > t => self.p.instructions[i].kind.label(),
            _ if self.locked[pi].is_some() => "stall",
            _ => "idle",
        }
    }

    fn record_trace(&mut self, t: u64, alive: &[bool]) {
        for pi in 0..alive.len() {
            let label = if alive[pi] { Some(self.label(pi, t)) } else { None };
            let open = self.trace_open[pi];
            if open.map(|(l, _)| l) == label {
                continue;
            }
            if let Some((l, start)) = open {
                self.trace.push(TraceSpan { patch: self.patch_id(pi), start, end: t, label: l });
            }
            self.trace_open[pi] = label.map(|l| (l, t));
        }
    }

    fn start_instructions(&mut self, t: u64) {
        let cols = self.p.grid.cols;
        loop {
            let mut progressed = false;
            for pi in 0..self.patch_queue.len() {
                let Some(&i) = self.patch_queue[pi].front() else { continue };
                let ins = &self.p.instructions[i];
                if t < ins.start_round {
                    continue;
                }
                let free = ins.patches.iter().all(|q| {
                    let qi = q.index(cols);
                    self.patch_queue[qi].front() == Some(&i) && self.busy_until[qi] <= t && self.locked[qi].is_none()
                });
                let target_ok = ins.conditional_on.is_none_or(|c| self.resolved[c].is_some());
                if free && target_ok {
                    self.start(i, t);
                    progressed = true;
                }
            }
            if !progressed {
                break;
            }
        }
    }

    fn start(&mut self, i: usize, t: u64) {
        let cols = self.p.grid.cols;
        let ins = &self.p.instructions[i];
        self.instr_start[i] = Some(t);
        let fires = ins.conditional_on.is_none()
            || seed::rng(self.cfg.seed, &[KEY_FIRE, i as u64]).gen::<f64>() < self.cfg.s_probability;
        let dur = if fires { ins.duration } else { 0 };
        self.instr_end[i] = t + dur;
        for q in &ins.patches {
            let qi = q.index(cols);
            self.patch_queue[qi].pop_front();
            if dur > 0 {
                self.busy_until[qi] = t + dur;
                self.active[qi] = Some(i);
                self.first_started[qi] = true;
            }
        }
        if ins.blocking && dur > 0 {
            for q in &ins.patches {
                let qi = q.index(cols);
                if self.persistent[qi] {
                    self.locked[qi] = Some(i);
                    self.builder.plan_alignment(qi, t, t + dur);
                }
            }
            self.unresolved.push(i);
        } else if ins.blocking {
            self.resolved[i] = Some(t);
        }
    }

    fn check_resolutions(&mut self, t: u64) {
        let mut k = 0;
        while k < self.unresolved.len() {
            let i = self.unresolved[k];
            let e = self.instr_end[i];
            if t >= e && self.op_decoded(i, e) {
                self.unresolved.swap_remove(k);
                self.resolved[i] = Some(t);
                self.reactions.push(Reaction { op: i, end_round: e, resolved_round: t, reaction: t - e });
                for q in &self.p.instructions[i].patches {
                    let qi = q.index(self.p.grid.cols);
                    if self.locked[qi] == Some(i) {
                        self.locked[qi] = None;
                    }
                }
            } else {
                k += 1;
            }
        }
    }

    /// Every cell covering a round before `e` on the op's patches is valid.
    fn op_decoded(&mut self, i: usize, e: u64) -> bool {
        let cols = self.p.grid.cols;
        for q in &self.p.instructions[i].patches {
            let qi = q.index(cols);
            let list = &self.patch_cells[qi];
            let mut k = self.first_invalid[qi];
            while k < list.len() && self.cells[list[k]].valid_at.is_some() {
                k += 1;
            }
            self.first_invalid[qi] = k;
            if let Some(&c) = list.get(k) {
                if self.builder.cell(c).t0 < e {
                    return false;
                }
            }
        }
        true
    }

    // ---- decoders ----

    fn sink_inputs_ready(&self, c: usize) -> bool {
        let w = self.builder.cell(c);
        w.boundaries
            .iter()
            .zip(&self.cells[c].inputs)
            .all(|(b, inp)| b.role == Role::Source || *inp != Input::Empty)
    }

    fn sink_inputs_verified(&self, c: usize) -> bool {
        let w = self.builder.cell(c);
        w.boundaries
            .iter()
            .zip(&self.cells[c].inputs)
            .all(|(b, inp)| b.role == Role::Source || *inp == Input::Verified)
    }

    fn size_inputs(&mut self, c: usize) {
        let n = self.builder.cell(c).boundaries.len();
        let s = &mut self.cells[c];
        if s.inputs.len() < n {
            s.inputs.resize(n, Input::Empty);
            s.wrong_in.resize(n, false);
        }
    }

    /// Boundary index on `dst` of the face shared with `src`.
    fn slot(&mut self, dst: usize, src: usize) -> usize {
        self.size_inputs(dst);
        self.builder
            .cell(dst)
            .boundaries
            .iter()
            .position(|b| b.neighbor == src && b.role == Role::Sink)
            .expect("dependency edge without a matching sink boundary")
    }

    fn on_ready(&mut self, c: usize, t: u64) -> Result<(), SimError> {
        self.size_inputs(c);
        let w = self.builder.cell(c);
        let mut rng = seed::rng(self.cfg.seed, &[KEY_LATENCY, w.patch_index as u64, w.seq as u64]);
        let latency = decode_latency(w.volume, self.d, &self.cfg.latency, &mut rng)?;
        let dsts: Vec<usize> = w.sinks().map(|b| b.neighbor).collect();
        self.cells[c].latency = latency;
        self.cells[c].ready_at = Some(t);
        if self.cfg.speculation != SpeculationMode::Off {
            for dst in dsts {
                self.schedule(t + self.cfg.t_spec, Event::SpecAvailable { src: c, dst });
            }
        }
        self.try_enqueue(c);
        Ok(())
    }

    fn try_enqueue(&mut self, c: usize) {
        let s = &self.cells[c];
        if s.ready_at.is_none() || s.queued || s.began() || s.valid_at.is_some() {
            return;
        }
        if !self.sink_inputs_ready(c) {
            return;
        }
        self.cells[c].queued = true;
        self.queue.push_back(c);
    }

    fn dispatch(&mut self, t: u64) {
        while self.cfg.processors.is_none_or(|m| self.busy < m) {
            let Some(c) = self.queue.pop_front() else { break };
            let s = &mut self.cells[c];
            s.queued = false;
            if s.began() || s.valid_at.is_some() {
                continue;
            }
            s.running = Some(t);
            s.attempts_started += 1;
            let (latency, attempt) = (s.latency, s.attempt);
            self.busy += 1;
            self.schedule(t + latency, Event::DecodeDone { cell: c, attempt });
        }
    }

    fn process_events(&mut self, t: u64) -> Result<(), SimError> {
        while let Some(&Reverse((time, _, _, ev))) = self.events.peek() {
            if time > t {
                break;
            }
            self.events.pop();
            match ev {
                Event::DecodeDone { cell, attempt } => {
                    let s = &mut self.cells[cell];
                    if s.attempt != attempt || s.running.is_none() {
                        continue;
                    }
                    s.running = None;
                    s.finished = true;
                    self.busy -= 1;
                    self.total_compute += s.latency;
                    self.propagate_validity(cell, t);
                }
                Event::SpecAvailable { src, dst } => {
                    let k = self.slot(dst, src);
                    if self.cells[dst].inputs[k] != Input::Empty {
                        continue;
                    }
                    let correct = self.draw_speculation(src, dst)?;
                    self.speculations += 1;
                    self.cells[dst].inputs[k] = Input::Spec { correct };
                    if !correct {
                        self.cells[dst].wrong_in[k] = true;
                    }
                    self.try_enqueue(dst);
                }
            }
        }
        Ok(())
    }

    fn outgoing_face(&self, src: usize, dst: usize) -> Face {
        self.builder
            .cell(src)
            .boundaries
            .iter()
            .find(|b| b.neighbor == dst && b.role == Role::Source)
            .map(|b| b.face)
            .expect("speculation without an owned face")
    }

    fn draw_speculation(&mut self, src: usize, dst: usize) -> Result<bool, SimError> {
        let face = self.outgoing_face(src, dst);
        match self.cfg.speculation {
            SpeculationMode::Off => Err(SimError::Internal("speculation event with speculation off".into())),
            SpeculationMode::Stochastic => {
                let w = self.builder.cell(src);
                let poisoned = w
                    .boundaries
                    .iter()
                    .zip(&self.cells[src].wrong_in)
                    .any(|(b, &wrong)| wrong && b.role == Role::Sink && b.face.adjacent(face));
                let a = if poisoned { self.cfg.accuracy_adjacent } else { self.cfg.accuracy };
                let dw = self.builder.cell(dst);
                let keys = [KEY_SPEC, w.patch_index as u64, w.seq as u64, dw.patch_index as u64, dw.seq as u64];
                Ok(seed::rng(self.cfg.seed, &keys).gen::<f64>() < a)
            }
            SpeculationMode::Integrated => {
                if !self.integrated.contains_key(&src) {
                    let flags = self.integrated_flags(src)?;
                    self.integrated.insert(src, flags);
                }
                Ok(self.integrated[&src].iter().find(|(f, _)| *f == face).map(|&(_, ok)| ok).unwrap_or(true))
            }
        }
    }

    /// Samples noise on the source cell's window and checks the predictor
    /// against the reference matcher on every owned face.
    fn integrated_flags(&mut self, src: usize) -> Result<Vec<(Face, bool)>, SimError> {
        let w = self.builder.cell(src);
        let faces = w.owned_faces();
        let (buffers, mapping) = buffer_layout(&faces);
        let commit = w.height().max(1) as u32;
        let key = (commit, buffers.clone());
        let entry = match self.graphs.get(&key) {
            Some(e) => e.clone(),
            None => {
                let g = build_window_graph(self.d, commit, &buffers).map_err(|e| SimError::Internal(e.to_string()))?;
                let layouts = g.planes().iter().map(|pl| BoundaryLayout::new(&g, pl)).collect();
                let e = Arc::new((g, layouts));
                self.graphs.insert(key, e.clone());
                e
            }
        };
        let (g, layouts) = &*entry;
        let noise = seed::derive(self.cfg.seed, &[KEY_NOISE, w.patch_index as u64, w.seq as u64]);
        let (_, s) = sample_errors(g, self.cfg.noise_p, noise);
        let m = decode_exact_clusters(g, &s, self.cfg.exact_cap).map_err(|e| match e {
            DecodeError::CapExceeded { defects, cap } => SimError::CapExceeded { defects, cap },
        })?;
        let per_plane: Vec<bool> = g
            .planes()
            .iter()
            .zip(layouts)
            .map(|(pl, lay)| predict_3step(&lay.view(&s)).bits == extract_dependency_bits(g, &m, pl))
            .collect();
        Ok(mapping.into_iter().map(|(f, k)| (f, per_plane[k])).collect())
    }

    /// Marks `c` and any cells it unblocks as valid, verifying outgoing bits.
    fn propagate_validity(&mut self, c: usize, t: u64) {
        let mut stack = vec![c];
        while let Some(c) = stack.pop() {
            let s = &self.cells[c];
            if s.valid_at.is_some() || !s.finished || !self.sink_inputs_verified(c) {
                continue;
            }
            self.cells[c].valid_at = Some(t);
            self.valid_compute += self.cells[c].latency;
            let dsts: Vec<usize> = self.builder.cell(c).sinks().map(|b| b.neighbor).collect();
            for y in dsts {
                let k = self.slot(y, c);
                match self.cells[y].inputs[k] {
                    Input::Empty => {
                        self.cells[y].inputs[k] = Input::Verified;
                        self.try_enqueue(y);
                    }
                    Input::Spec { correct: true } => {
                        self.cells[y].inputs[k] = Input::Verified;
                        stack.push(y);
                    }
                    Input::Spec { correct: false } => {
                        self.cells[y].inputs[k] = Input::Verified;
                        self.mispredictions += 1;
                        if self.cells[y].began() {
                            self.recover(y, k, t);
                        }
                    }
                    Input::Verified => {}
                }
            }
        }
    }

    fn recover(&mut self, y: usize, k: usize, t: u64) {
        let face = self.builder.cell(y).boundaries[k].face;
        let mut victims = vec![y];
        match self.cfg.recovery {
            Recovery::Optimistic => {}
            Recovery::Adjacent => {
                let outs: Vec<(usize, Face)> = self.builder.cell(y).sinks().map(|b| (b.neighbor, b.face)).collect();
                for (z, f) in outs {
                    if !f.adjacent(face) || !self.cells[z].began() || self.cells[z].valid_at.is_some() {
                        continue;
                    }
                    let kz = self.slot(z, y);
                    if matches!(self.cells[z].inputs[kz], Input::Spec { .. }) {
                        victims.push(z);
                    }
                }
            }
            Recovery::Pessimistic => {
                let mut seen = BTreeSet::from([y]);
                let mut frontier = vec![y];
                while let Some(u) = frontier.pop() {
                    let outs: Vec<usize> = self.builder.cell(u).sinks().map(|b| b.neighbor).collect();
                    for z in outs {
                        if self.cells[z].valid_at.is_none() && seen.insert(z) {
                            frontier.push(z);
                            if self.cells[z].began() {
                                victims.push(z);
                            }
                        }
                    }
                }
            }
        }
        for z in victims {
            self.restart(z, t);
        }
    }

    fn restart(&mut self, c: usize, t: u64) {
        let s = &mut self.cells[c];
        if let Some(start) = s.running.take() {
            self.total_compute += t - start;
            self.busy -= 1;
        }
        s.finished = false;
        s.attempt += 1;
        self.restarts += 1;
        self.try_enqueue(c);
    }
}

/// Maps owned faces to graph buffers: temporal faces to the past/future
/// buffers, spatial faces to the left/right slots. When more than two
/// spatial faces are owned the extras share a slot.
fn buffer_layout(faces: &BTreeSet<Face>) -> (Vec<BufferSpec>, Vec<(Face, usize)>) {
    let mut buffers: Vec<BufferSpec> = Vec::new();
    let mut mapping = Vec::new();
    let slot_of = |b: BufferSpec, buffers: &mut Vec<BufferSpec>| match buffers.iter().position(|&x| x == b) {
        Some(k) => k,
        None => {
            buffers.push(b);
            buffers.len() - 1
        }
    };
    for &f in faces {
        let b = match f {
            Face::Past => BufferSpec::PAST,
            Face::Future => BufferSpec::FUTURE,
            Face::Left | Face::Up => {
                if buffers.contains(&BufferSpec::LEFT) && !buffers.contains(&BufferSpec::RIGHT) {
                    BufferSpec::RIGHT
                } else {
                    BufferSpec::LEFT
                }
            }
            Face::Right | Face::Down => {
                if buffers.contains(&BufferSpec::RIGHT) && !buffers.contains(&BufferSpec::LEFT) {
                    BufferSpec::LEFT
                } else {
                    BufferSpec::RIGHT
                }
            }
        };
        let k = slot_of(b, &mut buffers);
        mapping.push((f, k));
    }
    (buffers, mapping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{Grid, Instruction, InstructionKind};
    use crate::sim::LatencyModel;
    use crate::windowing::Strategy;

    fn one_patch(d: u32, instrs: Vec<Instruction>) -> Program {
        Program { distance: d, grid: Grid { rows: 1, cols: 2 }, instructions: instrs, round_time_us: 1.0 }
    }

    #[test]
    fn face_layout() {
        let faces = BTreeSet::from([Face::Past, Face::Left, Face::Right, Face::Up]);
        let (b, m) = buffer_layout(&faces);
        assert_eq!(b, vec![BufferSpec::PAST, BufferSpec::LEFT, BufferSpec::RIGHT]);
        assert_eq!(m, vec![(Face::Past, 0), (Face::Left, 1), (Face::Right, 2), (Face::Up, 1)]);
    }

    #[test]
    fn reaction_at_least_twice_window_latency() {
        let d = 5;
        let a = PatchId::new(0, 0);
        let b = PatchId::new(0, 1);
        let p = one_patch(
            d,
            vec![
                Instruction::new(InstructionKind::Idle, vec![a], 0, 3 * d as u64),
                Instruction::new(InstructionKind::TTeleport, vec![a, b], 3 * d as u64, d as u64),
                Instruction::new(InstructionKind::Idle, vec![a], 4 * d as u64, d as u64),
            ],
        );
        let cfg = SimConfig { strategy: Strategy::Sliding, latency: LatencyModel::Fixed(8), ..SimConfig::default() };
        let r = simulate(&p, &cfg).unwrap();
        assert!(!r.truncated);
        assert_eq!(r.reactions.len(), 1);
        assert!(r.reactions[0].reaction >= 16, "{:?}", r.reactions);
        assert_eq!(r.wasted_compute, 0);
        assert!(r.cells.iter().all(|c| c.valid_at.is_some()));
    }

    #[test]
    fn perfect_speculation_wastes_nothing() {
        let d = 5;
        let a = PatchId::new(0, 0);
        let p = one_patch(d, vec![Instruction::new(InstructionKind::Idle, vec![a], 0, 12 * d as u64)]);
        for strategy in Strategy::ALL {
            let cfg = SimConfig {
                strategy,
                speculation: SpeculationMode::Stochastic,
                accuracy: 1.0,
                accuracy_adjacent: 1.0,
                latency: LatencyModel::Fixed(3 * d as u64),
                ..SimConfig::default()
            };
            let r = simulate(&p, &cfg).unwrap();
            assert_eq!(r.wasted_compute, 0, "{strategy}");
            assert_eq!(r.mispredictions, 0);
            assert!(r.speculations > 0);
        }
    }

    #[test]
    fn wrong_speculation_matches_no_speculation_timeline() {
        let d = 5;
        let a = PatchId::new(0, 0);
        let b = PatchId::new(0, 1);
        let p = one_patch(
            d,
            vec![
                Instruction::new(InstructionKind::Idle, vec![a], 0, 4 * d as u64),
                Instruction::new(InstructionKind::TTeleport, vec![a, b], 4 * d as u64, d as u64),
                Instruction::new(InstructionKind::Idle, vec![a], 5 * d as u64, 2 * d as u64),
            ],
        );
        let off = SimConfig { strategy: Strategy::Sliding, latency: LatencyModel::Fixed(2 * d as u64), ..SimConfig::default() };
        let wrong = SimConfig { speculation: SpeculationMode::Stochastic, accuracy: 0.0, accuracy_adjacent: 0.0, ..off.clone() };
        let r0 = simulate(&p, &off).unwrap();
        let r1 = simulate(&p, &wrong).unwrap();
        assert_eq!(r0.timeline(), r1.timeline());
        assert!(r1.wasted_compute > 0);
    }

    #[test]
    fn processor_limit_caps_occupancy() {
        let d = 3;
        let a = PatchId::new(0, 0);
        let b = PatchId::new(0, 1);
        let p = one_patch(
            d,
            vec![
                Instruction::new(InstructionKind::Idle, vec![a], 0, 30),
                Instruction::new(InstructionKind::Idle, vec![b], 0, 30),
            ],
        );
        let cfg = SimConfig { latency: LatencyModel::Fixed(20), processors: Some(1), ..SimConfig::default() };
        let r = simulate(&p, &cfg).unwrap();
        assert_eq!(r.p_max, 1);
        let free = simulate(&p, &SimConfig { processors: None, ..cfg }).unwrap();
        assert!(free.p_max > 1);
    }

    #[test]
    fn horizon_truncates() {
        let d = 3;
        let a = PatchId::new(0, 0);
        let b = PatchId::new(0, 1);
        let mut v = Vec::new();
        for k in 0..10u64 {
            v.push(Instruction::new(InstructionKind::TTeleport, vec![a, b], k * d as u64, d as u64));
        }
        let cfg = SimConfig { latency: LatencyModel::Fixed(1000), max_rounds: 200, ..SimConfig::default() };
        let r = simulate(&one_patch(d, v), &cfg).unwrap();
        assert!(r.truncated);
        assert!(!r.unresolved_ops.is_empty());
    }
}
