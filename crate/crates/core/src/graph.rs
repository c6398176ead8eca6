//! Phenomenological matching graphs for one window of the rotated surface code.
//!
//! Only the Z-type stabilizers are modeled. A plaquette sits at `(a, b)` with
//! `a + b` even, `0 <= a <= d` and `1 <= b <= W - 1`, where `W` is the window
//! width in data-qubit columns. Data qubit `(i, j)` joins plaquettes
//! `(i, j)-(i+1, j+1)` when `i + j` is even and `(i+1, j)-(i, j+1)` otherwise;
//! an edge with a missing endpoint ends on the single virtual node. Layers are
//! joined by measurement-error edges, and the outermost layers also reach the
//! virtual node.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

/// Largest degree of a non-virtual node (4 data + 2 measurement edges).
pub const MAX_DEGREE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Temporal,
    Spatial,
}

/// `Low` is the past (temporal) or left (spatial) face, `High` the future or right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BufferSpec {
    pub orientation: Orientation,
    pub side: Side,
}

impl BufferSpec {
    pub const FUTURE: BufferSpec = BufferSpec { orientation: Orientation::Temporal, side: Side::High };
    pub const PAST: BufferSpec = BufferSpec { orientation: Orientation::Temporal, side: Side::Low };
    pub const LEFT: BufferSpec = BufferSpec { orientation: Orientation::Spatial, side: Side::Low };
    pub const RIGHT: BufferSpec = BufferSpec { orientation: Orientation::Spatial, side: Side::High };
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("distance {0} must be odd and at least 3")]
    BadDistance(u32),
    #[error("commit region must span at least one round")]
    EmptyCommit,
    #[error("unsupported buffer combination: more than one buffer on the {0:?} {1:?} face")]
    DuplicateFace(Orientation, Side),
    #[error("toggle on node {0} which is not a plane node")]
    ToggleOutsidePlane(usize),
    #[error("plane {0} does not belong to this graph")]
    UnknownPlane(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Node {
    pub t: u32,
    pub a: u32,
    pub b: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    DataError,
    MeasurementError,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    /// Equal to [`DecodingGraph::virtual_node`] for boundary edges.
    pub v: usize,
    pub kind: EdgeKind,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Commit,
    /// Index into the buffer list the graph was built from.
    Buffer(usize),
}

#[derive(Debug, Clone)]
pub struct BoundaryPlane {
    pub id: usize,
    pub orientation: Orientation,
    pub side: Side,
    /// Commit-side endpoints of the crossing edges, sorted.
    pub nodes: Vec<usize>,
    /// Edges with one endpoint in the commit region and one in this buffer.
    pub crossing_edges: Vec<usize>,
    /// Nodes within graph distance 2 of a crossing-edge endpoint, sorted.
    pub near_nodes: Vec<usize>,
    /// Non-virtual edges with both endpoints near, sorted.
    pub near_edges: Vec<usize>,
}

impl BoundaryPlane {
    pub fn is_crossing(&self, e: usize) -> bool {
        self.crossing_edges.binary_search(&e).is_ok()
    }

    pub fn contains_node(&self, n: usize) -> bool {
        self.nodes.binary_search(&n).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Band {
    Low,
    Commit,
    High,
}

pub struct DecodingGraph {
    d: u32,
    width: u32,
    layers: u32,
    commit_layers: (u32, u32),
    commit_cols: (u32, u32),
    buffers: Vec<BufferSpec>,
    nodes: Vec<Node>,
    index: Vec<u32>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    region: Vec<Region>,
    planes: Vec<BoundaryPlane>,
    volume: f64,
    rectangular: bool,
    table: OnceLock<Vec<u16>>,
}

impl fmt::Debug for DecodingGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DecodingGraph")
            .field("d", &self.d)
            .field("width", &self.width)
            .field("layers", &self.layers)
            .field("nodes", &self.nodes.len())
            .field("edges", &self.edges.len())
            .field("buffers", &self.buffers)
            .finish()
    }
}

const ABSENT: u32 = u32::MAX;

/// Builds the matching graph of a window with `commit_rounds` committed
/// rounds on one patch plus one `d`-deep buffer per entry of `buffers`.
pub fn build_window_graph(
    d: u32,
    commit_rounds: u32,
    buffers: &[BufferSpec],
) -> Result<DecodingGraph, GraphError> {
    if d < 3 || d % 2 == 0 {
        return Err(GraphError::BadDistance(d));
    }
    if commit_rounds == 0 {
        return Err(GraphError::EmptyCommit);
    }
    for (i, b) in buffers.iter().enumerate() {
        if buffers[..i].contains(b) {
            return Err(GraphError::DuplicateFace(b.orientation, b.side));
        }
    }
    let find = |spec: BufferSpec| buffers.iter().position(|&b| b == spec);
    let (past, future) = (find(BufferSpec::PAST), find(BufferSpec::FUTURE));
    let (left, right) = (find(BufferSpec::LEFT), find(BufferSpec::RIGHT));

    let t0 = if past.is_some() { d } else { 0 };
    let t1 = t0 + commit_rounds;
    let layers = t1 + if future.is_some() { d } else { 0 };
    let c0 = if left.is_some() { d } else { 0 };
    let c1 = c0 + d;
    let width = c1 + if right.is_some() { d } else { 0 };

    let t_band = |t: u32| {
        if t < t0 {
            Band::Low
        } else if t < t1 {
            Band::Commit
        } else {
            Band::High
        }
    };
    // Plaquette column b covers data columns b-1 and b; the seam column
    // belongs to the buffer so the commit keeps its d-1 plaquette columns.
    let plaq_band = |b: u32| {
        if left.is_some() && b <= c0 {
            Band::Low
        } else if right.is_some() && b >= c1 {
            Band::High
        } else {
            Band::Commit
        }
    };
    let data_band = |j: u32| {
        if j < c0 {
            Band::Low
        } else if j < c1 {
            Band::Commit
        } else {
            Band::High
        }
    };
    let region_of = |tb: Band, cb: Band| -> Option<Region> {
        match (tb, cb) {
            (Band::Commit, Band::Commit) => Some(Region::Commit),
            (Band::Low, Band::Commit) => Some(Region::Buffer(past.unwrap())),
            (Band::High, Band::Commit) => Some(Region::Buffer(future.unwrap())),
            (Band::Commit, Band::Low) => Some(Region::Buffer(left.unwrap())),
            (Band::Commit, Band::High) => Some(Region::Buffer(right.unwrap())),
            _ => None,
        }
    };

    let stride_a = (width + 1) as usize;
    let stride_t = (d as usize + 1) * stride_a;
    let mut index = vec![ABSENT; layers as usize * stride_t];
    let mut nodes = Vec::new();
    let mut region = Vec::new();
    for t in 0..layers {
        for a in 0..=d {
            for b in 1..width {
                if (a + b) % 2 != 0 {
                    continue;
                }
                if let Some(r) = region_of(t_band(t), plaq_band(b)) {
                    index[t as usize * stride_t + a as usize * stride_a + b as usize] = nodes.len() as u32;
                    nodes.push(Node { t, a, b });
                    region.push(r);
                }
            }
        }
    }
    let n = nodes.len();
    let lookup = |t: u32, a: i64, b: i64| -> Option<usize> {
        if a < 0 || b < 0 || a > d as i64 || b > width as i64 {
            return None;
        }
        let k = index[t as usize * stride_t + a as usize * stride_a + b as usize];
        (k != ABSENT).then_some(k as usize)
    };

    let mut edges = Vec::new();
    let push = |edges: &mut Vec<Edge>, x: Option<usize>, y: Option<usize>, kind| {
        let (u, v) = match (x, y) {
            (Some(x), Some(y)) => (x.min(y), x.max(y)),
            (Some(x), None) | (None, Some(x)) => (x, n),
            (None, None) => return,
        };
        edges.push(Edge { u, v, kind, weight: 1.0 });
    };
    for t in 0..layers {
        let tb = t_band(t);
        for i in 0..d as i64 {
            for j in 0..width as i64 {
                if tb != Band::Commit && data_band(j as u32) != Band::Commit {
                    continue;
                }
                let (p, q) = if (i + j) % 2 == 0 {
                    ((i, j), (i + 1, j + 1))
                } else {
                    ((i + 1, j), (i, j + 1))
                };
                push(&mut edges, lookup(t, p.0, p.1), lookup(t, q.0, q.1), EdgeKind::DataError);
            }
        }
        for a in 0..=d as i64 {
            for b in 1..width as i64 {
                if (a + b) % 2 != 0 {
                    continue;
                }
                let here = lookup(t, a, b);
                if t == 0 && here.is_some() {
                    push(&mut edges, here, None, EdgeKind::MeasurementError);
                }
                if t + 1 < layers {
                    push(&mut edges, here, lookup(t + 1, a, b), EdgeKind::MeasurementError);
                } else if here.is_some() {
                    push(&mut edges, here, None, EdgeKind::MeasurementError);
                }
            }
        }
    }

    let mut adj = vec![Vec::new(); n + 1];
    for (k, e) in edges.iter().enumerate() {
        adj[e.u].push((e.v, k));
        adj[e.v].push((e.u, k));
    }
    for l in &mut adj {
        l.sort_unstable();
    }

    let volume = commit_rounds as f64 / d as f64 + buffers.len() as f64;
    let rectangular = !((past.is_some() || future.is_some()) && (left.is_some() || right.is_some()));
    let mut g = DecodingGraph {
        d,
        width,
        layers,
        commit_layers: (t0, t1),
        commit_cols: (c0, c1),
        buffers: buffers.to_vec(),
        nodes,
        index,
        edges,
        adj,
        region,
        planes: Vec::new(),
        volume,
        rectangular,
        table: OnceLock::new(),
    };
    g.planes = (0..buffers.len()).map(|k| g.make_plane(k)).collect();
    Ok(g)
}

impl DecodingGraph {
    fn make_plane(&self, k: usize) -> BoundaryPlane {
        let spec = self.buffers[k];
        let mut crossing = Vec::new();
        let mut nodes = BTreeSet::new();
        let mut ends = BTreeSet::new();
        for (id, e) in self.edges.iter().enumerate() {
            if e.v == self.virtual_node() {
                continue;
            }
            let (ru, rv) = (self.region[e.u], self.region[e.v]);
            let commit_side = match (ru, rv) {
                (Region::Commit, Region::Buffer(x)) if x == k => e.u,
                (Region::Buffer(x), Region::Commit) if x == k => e.v,
                _ => continue,
            };
            crossing.push(id);
            nodes.insert(commit_side);
            ends.insert(e.u);
            ends.insert(e.v);
        }
        // Radius-2 ball around the crossing endpoints, never through the virtual node.
        let mut depth = vec![u8::MAX; self.nodes.len()];
        let mut queue = VecDeque::new();
        for &s in &ends {
            depth[s] = 0;
            queue.push_back(s);
        }
        while let Some(x) = queue.pop_front() {
            if depth[x] == 2 {
                continue;
            }
            for &(y, _) in &self.adj[x] {
                if y != self.virtual_node() && depth[y] == u8::MAX {
                    depth[y] = depth[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        let near_nodes: Vec<usize> = (0..self.nodes.len()).filter(|&x| depth[x] <= 2).collect();
        let near_edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.v != self.virtual_node() && depth[e.u] <= 2 && depth[e.v] <= 2)
            .map(|(id, _)| id)
            .collect();
        BoundaryPlane {
            id: k,
            orientation: spec.orientation,
            side: spec.side,
            nodes: nodes.into_iter().collect(),
            crossing_edges: crossing,
            near_nodes,
            near_edges,
        }
    }

    pub fn distance(&self) -> u32 {
        self.d
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Id of the single virtual boundary node (one past the last real node).
    pub fn virtual_node(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Node {
        self.nodes[id]
    }

    pub fn node_id(&self, t: u32, a: u32, b: u32) -> Option<usize> {
        if t >= self.layers || a > self.d || b > self.width {
            return None;
        }
        let stride_a = (self.width + 1) as usize;
        let stride_t = (self.d as usize + 1) * stride_a;
        let k = self.index[t as usize * stride_t + a as usize * stride_a + b as usize];
        (k != ABSENT).then_some(k as usize)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    /// Neighbours of `n` as `(node, edge)` pairs sorted by node then edge id.
    pub fn neighbors(&self, n: usize) -> &[(usize, usize)] {
        &self.adj[n]
    }

    pub fn degree(&self, n: usize) -> usize {
        self.adj[n].len()
    }

    pub fn region(&self, n: usize) -> Region {
        self.region[n]
    }

    pub fn is_commit(&self, n: usize) -> bool {
        n < self.nodes.len() && self.region[n] == Region::Commit
    }

    pub fn planes(&self) -> &[BoundaryPlane] {
        &self.planes
    }

    pub fn plane(&self, id: usize) -> Result<&BoundaryPlane, GraphError> {
        self.planes.get(id).ok_or(GraphError::UnknownPlane(id))
    }

    pub fn buffers(&self) -> &[BufferSpec] {
        &self.buffers
    }

    /// Window volume in units of d^3.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn layers(&self) -> u32 {
        self.layers
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn commit_layers(&self) -> (u32, u32) {
        self.commit_layers
    }

    pub fn commit_cols(&self) -> (u32, u32) {
        self.commit_cols
    }

    /// Whether the closed-form distance applies (no cut-out corner).
    pub fn is_rectangular(&self) -> bool {
        self.rectangular
    }

    /// Shortest-path length between two real nodes, never passing through
    /// the virtual node.
    pub fn dist(&self, u: usize, v: usize) -> u32 {
        if self.rectangular {
            let (x, y) = (self.nodes[u], self.nodes[v]);
            x.t.abs_diff(y.t) + x.a.abs_diff(y.a).max(x.b.abs_diff(y.b))
        } else {
            let n = self.nodes.len();
            self.table()[u * (n + 1) + v] as u32
        }
    }

    /// Length of the shortest path from a real node to the virtual node.
    pub fn boundary_dist(&self, u: usize) -> u32 {
        if self.rectangular {
            let x = self.nodes[u];
            x.b.min(self.width - x.b).min(x.t + 1).min(self.layers - x.t)
        } else {
            let n = self.nodes.len();
            self.table()[u * (n + 1) + n] as u32
        }
    }

    fn table(&self) -> &[u16] {
        self.table.get_or_init(|| {
            let n = self.nodes.len();
            let mut out = vec![u16::MAX; n * (n + 1)];
            for s in 0..n {
                let row = &mut out[s * (n + 1)..(s + 1) * (n + 1)];
                bfs_into(self, s, row);
            }
            out
        })
    }

    /// Breadth-first distances from `s` to every node (virtual last).
    pub fn bfs(&self, s: usize) -> Vec<u32> {
        let mut row = vec![u16::MAX; self.nodes.len() + 1];
        bfs_into(self, s, &mut row);
        row.into_iter().map(|x| x as u32).collect()
    }

    /// Canonical shortest path between two real nodes as a list of edge ids.
    ///
    /// Walks from the lower-id endpoint, always taking the first neighbour
    /// (by node id) that is one step closer to the target.
    pub fn canonical_path(&self, u: usize, v: usize) -> Vec<usize> {
        let (mut x, target) = (u.min(v), u.max(v));
        let mut path = Vec::new();
        let mut left = self.dist(x, target);
        while left > 0 {
            let &(y, e) = self.adj[x]
                .iter()
                .find(|&&(y, _)| y != self.virtual_node() && self.dist(y, target) + 1 == left)
                .expect("shortest path step exists");
            path.push(e);
            x = y;
            left -= 1;
        }
        path
    }

    /// Canonical shortest path from a real node to the virtual boundary.
    pub fn canonical_boundary_path(&self, u: usize) -> Vec<usize> {
        let mut x = u;
        let mut path = Vec::new();
        let mut left = self.boundary_dist(x);
        while left > 1 {
            let &(y, e) = self.adj[x]
                .iter()
                .find(|&&(y, _)| y != self.virtual_node() && self.boundary_dist(y) + 1 == left)
                .expect("boundary step exists");
            path.push(e);
            x = y;
            left -= 1;
        }
        let &(_, e) = self.adj[x]
            .iter()
            .find(|&&(y, _)| y == self.virtual_node())
            .expect("node next to boundary has a virtual edge");
        path.push(e);
        path
    }

    /// Parity of flipped incident edges on every real node.
    pub fn syndrome_of(&self, errors: &ErrorSet) -> Syndrome {
        let mut bits = vec![0u8; self.nodes.len()];
        for &e in &errors.edges {
            let edge = &self.edges[e];
            bits[edge.u] ^= 1;
            if edge.v != self.virtual_node() {
                bits[edge.v] ^= 1;
            }
        }
        Syndrome { bits }
    }

    /// JSON adjacency dump for debugging.
    pub fn to_json_value(&self) -> Value {
        json!({
            "d": self.d,
            "width": self.width,
            "layers": self.layers,
            "volume": self.volume,
            "virtual": self.virtual_node(),
            "nodes": self.nodes.iter().zip(&self.region).map(|(n, r)| json!({
                "t": n.t, "a": n.a, "b": n.b,
                "region": match r { Region::Commit => json!("commit"), Region::Buffer(k) => json!(k) },
            })).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|e| json!([e.u, e.v, match e.kind {
                EdgeKind::DataError => "data",
                EdgeKind::MeasurementError => "measurement",
            }])).collect::<Vec<_>>(),
        })
    }
}

fn bfs_into(g: &DecodingGraph, s: usize, row: &mut [u16]) {
    let vn = g.virtual_node();
    row[s] = 0;
    let mut queue = VecDeque::from([s]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in &g.adj[x] {
            if row[y] == u16::MAX {
                row[y] = row[x] + 1;
                if y != vn {
                    queue.push_back(y);
                }
            }
        }
    }
}

/// Set of flipped edges, sorted by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ErrorSet {
    pub edges: Vec<usize>,
}

impl ErrorSet {
    pub fn from_edges(mut edges: Vec<usize>) -> Self {
        edges.sort_unstable();
        edges.dedup();
        Self { edges }
    }
}

/// Defect bits on the real nodes of a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Syndrome {
    pub bits: Vec<u8>,
}

impl Syndrome {
    pub fn zeros(n: usize) -> Self {
        Self { bits: vec![0; n] }
    }

    pub fn lit(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, &b)| b != 0).map(|(i, _)| i).collect()
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }
}

/// XOR toggles on the plane nodes of one boundary plane.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DependencyBits {
    pub plane: usize,
    /// Plane nodes whose bit is toggled, sorted.
    pub toggles: Vec<usize>,
}

impl DependencyBits {
    pub fn empty(plane: usize) -> Self {
        Self { plane, toggles: Vec::new() }
    }

    /// Builds the toggle set as the XOR of the given nodes.
    pub fn from_xor(plane: usize, nodes: impl IntoIterator<Item = usize>) -> Self {
        let mut set = BTreeSet::new();
        for n in nodes {
            if !set.remove(&n) {
                set.insert(n);
            }
        }
        Self { plane, toggles: set.into_iter().collect() }
    }
}

/// Samples independent edge flips with probability `p`.
pub fn sample_errors(g: &DecodingGraph, p: f64, seed: u64) -> (ErrorSet, Syndrome) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors = sample_error_set(g.edges.len(), p, &mut rng);
    let s = g.syndrome_of(&errors);
    (errors, s)
}

/// Geometric-skip sampling of Bernoulli(p) flips over `m` edges.
pub fn sample_error_set<R: Rng>(m: usize, p: f64, rng: &mut R) -> ErrorSet {
    let mut edges = Vec::new();
    if p <= 0.0 || m == 0 {
        return ErrorSet { edges };
    }
    if p >= 1.0 {
        return ErrorSet { edges: (0..m).collect() };
    }
    let log_q = (1.0 - p).ln();
    let mut i = 0usize;
    loop {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (m - i) as f64 {
            break;
        }
        i += skip as usize;
        edges.push(i);
        i += 1;
        if i >= m {
            break;
        }
    }
    ErrorSet { edges }
}

/// XORs the toggles into the plane-node bits of `s`.
pub fn apply_dependency_bits(
    g: &DecodingGraph,
    s: &Syndrome,
    bits: &DependencyBits,
) -> Result<Syndrome, GraphError> {
    let plane = g.plane(bits.plane)?;
    let mut out = s.clone();
    for &n in &bits.toggles {
        if !plane.contains_node(n) {
            return Err(GraphError::ToggleOutsidePlane(n));
        }
        out.bits[n] ^= 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_counts_and_volume() {
        let g = build_window_graph(3, 3, &[BufferSpec::FUTURE]).unwrap();
        assert_eq!(g.num_nodes(), 24);
        assert_eq!(g.volume(), 2.0);
        assert_eq!(g.planes().len(), 1);

        let g = build_window_graph(5, 5, &[BufferSpec::FUTURE, BufferSpec::RIGHT]).unwrap();
        assert_eq!(g.volume(), 3.0);
        assert!(!g.is_rectangular());

        let g = build_window_graph(7, 7, &[]).unwrap();
        assert!(g.planes().is_empty());
        assert_eq!(g.volume(), 1.0);
        assert_eq!(g.num_nodes(), 7 * 24);
    }

    #[test]
    fn duplicate_face_rejected() {
        let err = build_window_graph(3, 3, &[BufferSpec::LEFT, BufferSpec::LEFT]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateFace(Orientation::Spatial, Side::Low));
    }

    #[test]
    fn degree_bound() {
        for d in [3, 5, 9] {
            let g = build_window_graph(d, d, &[BufferSpec::FUTURE, BufferSpec::LEFT]).unwrap();
            assert!((0..g.num_nodes()).all(|n| g.degree(n) <= MAX_DEGREE && g.degree(n) >= 1));
            assert_eq!(g.node(0).t, 0);
        }
    }

    #[test]
    fn closed_form_matches_bfs() {
        for spec in [vec![], vec![BufferSpec::FUTURE], vec![BufferSpec::LEFT, BufferSpec::RIGHT]] {
            let g = build_window_graph(5, 5, &spec).unwrap();
            assert!(g.is_rectangular());
            for s in (0..g.num_nodes()).step_by(7) {
                let row = g.bfs(s);
                for v in 0..g.num_nodes() {
                    assert_eq!(g.dist(s, v), row[v], "dist {s}->{v}");
                }
                assert_eq!(g.boundary_dist(s), row[g.virtual_node()], "bd {s}");
            }
        }
    }

    #[test]
    fn canonical_paths_are_shortest_walks() {
        let g = build_window_graph(5, 5, &[BufferSpec::FUTURE, BufferSpec::RIGHT]).unwrap();
        for (u, v) in [(0, 40), (3, 190), (17, 18), (100, 5)] {
            let path = g.canonical_path(u, v);
            assert_eq!(path.len() as u32, g.dist(u, v));
            let mut ends = vec![0u8; g.num_nodes() + 1];
            for e in &path {
                ends[g.edge(*e).u] ^= 1;
                ends[g.edge(*e).v] ^= 1;
            }
            let odd: Vec<usize> = (0..ends.len()).filter(|&i| ends[i] == 1).collect();
            assert_eq!(odd, vec![u.min(v), u.max(v)]);
        }
        let p = g.canonical_boundary_path(50);
        assert_eq!(p.len() as u32, g.boundary_dist(50));
        assert_eq!(g.edge(*p.last().unwrap()).v, g.virtual_node());
    }

    #[test]
    fn planes_straddle_the_interface() {
        let g = build_window_graph(5, 5, &[BufferSpec::FUTURE, BufferSpec::LEFT]).unwrap();
        for plane in g.planes() {
            assert!(!plane.crossing_edges.is_empty());
            for &n in &plane.nodes {
                assert!(g.is_commit(n));
                assert!(plane.near_nodes.binary_search(&n).is_ok());
            }
            for &e in &plane.crossing_edges {
                let edge = g.edge(e);
                assert!(g.is_commit(edge.u) != g.is_commit(edge.v));
            }
        }
        // the temporal plane has one node per plaquette of a layer
        assert_eq!(g.plane(0).unwrap().nodes.len(), 12);
    }

    #[test]
    fn single_error_lights_its_endpoints() {
        let g = build_window_graph(5, 5, &[BufferSpec::FUTURE]).unwrap();
        for e in [0, 10, 77] {
            let s = g.syndrome_of(&ErrorSet::from_edges(vec![e]));
            let edge = g.edge(e);
            let mut want = vec![edge.u];
            if edge.v != g.virtual_node() {
                want.push(edge.v);
            }
            assert_eq!(s.lit(), want);
        }
        let (err, s) = sample_errors(&g, 0.0, 1);
        assert!(err.edges.is_empty());
        assert_eq!(s.weight(), 0);
    }

    #[test]
    fn dependency_bits_are_involutive() {
        let g = build_window_graph(3, 3, &[BufferSpec::FUTURE]).unwrap();
        let (_, s) = sample_errors(&g, 0.1, 9);
        let plane = &g.planes()[0];
        let bits = DependencyBits { plane: 0, toggles: vec![plane.nodes[0], plane.nodes[2]] };
        let once = apply_dependency_bits(&g, &s, &bits).unwrap();
        assert_ne!(once, s);
        assert_eq!(apply_dependency_bits(&g, &once, &bits).unwrap(), s);
        let none = apply_dependency_bits(&g, &s, &DependencyBits::empty(0)).unwrap();
        assert_eq!(none, s);
        let bad = DependencyBits { plane: 0, toggles: vec![0] };
        assert!(apply_dependency_bits(&g, &s, &bad).is_err());
        assert!(apply_dependency_bits(&g, &s, &DependencyBits::empty(3)).is_err());
    }
}
