//! Reference minimum-weight matcher used as ground truth.
//!
//! Exact mode enumerates pairings with a bitmask memo and is limited to a
//! configurable number of defects. Greedy mode repeatedly takes the globally
//! cheapest remaining pair. [`decode_auto`] first splits the defects into
//! clusters that an optimal matching never joins and decodes each cluster
//! exactly when it fits under the cap.

use thiserror::Error;

use crate::graph::{BoundaryPlane, DecodingGraph, DependencyBits, ErrorSet, Syndrome};

/// Default defect cap for exact mode.
pub const DEFAULT_EXACT_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    Exact,
    Greedy,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("exact matching supports at most {cap} defects, got {defects}")]
    CapExceeded { defects: usize, cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    /// `(defect, partner)`; `None` means the virtual boundary.
    pub pairs: Vec<(usize, Option<usize>)>,
    /// Edge ids of the canonical path for each pair.
    pub paths: Vec<Vec<usize>>,
    pub weight: u32,
}

impl Matching {
    fn from_pairs(g: &DecodingGraph, mut pairs: Vec<(usize, Option<usize>)>) -> Self {
        pairs.sort_unstable_by_key(|&(u, v)| (u, v.unwrap_or(usize::MAX)));
        let paths: Vec<Vec<usize>> = pairs
            .iter()
            .map(|&(u, v)| match v {
                Some(v) => g.canonical_path(u, v),
                None => g.canonical_boundary_path(u),
            })
            .collect();
        let weight = paths.iter().map(|p| p.len() as u32).sum();
        Self { pairs, paths, weight }
    }

    /// All path edges with pairwise cancellation.
    pub fn correction(&self) -> ErrorSet {
        let mut all: Vec<usize> = self.paths.iter().flatten().copied().collect();
        all.sort_unstable();
        let mut out = Vec::with_capacity(all.len());
        let mut i = 0;
        while i < all.len() {
            let mut j = i;
            while j < all.len() && all[j] == all[i] {
                j += 1;
            }
            if (j - i) % 2 == 1 {
                out.push(all[i]);
            }
            i = j;
        }
        ErrorSet { edges: out }
    }

    /// Whether applying the correction clears `s`.
    pub fn clears(&self, g: &DecodingGraph, s: &Syndrome) -> bool {
        g.syndrome_of(&self.correction()) == *s
    }
}

pub fn decode(g: &DecodingGraph, s: &Syndrome, mode: DecodeMode) -> Result<Matching, DecodeError> {
    decode_with_cap(g, s, mode, DEFAULT_EXACT_CAP)
}

pub fn decode_with_cap(
    g: &DecodingGraph,
    s: &Syndrome,
    mode: DecodeMode,
    cap: usize,
) -> Result<Matching, DecodeError> {
    let defects = s.lit();
    let pairs = match mode {
        DecodeMode::Exact => {
            if defects.len() > cap {
                return Err(DecodeError::CapExceeded { defects: defects.len(), cap });
            }
            exact_pairs(g, &defects)
        }
        DecodeMode::Greedy => greedy_pairs(g, &defects),
    };
    Ok(Matching::from_pairs(g, pairs))
}

/// Cluster-wise decoding: exact within the cap, greedy beyond it.
///
/// Two defects share a cluster when `dist(u, v) < bd(u) + bd(v)`; a pair
/// violating this can always be replaced by two boundary matches at no extra
/// cost, so the optimum decomposes over clusters.
pub fn decode_auto(g: &DecodingGraph, s: &Syndrome, cap: usize) -> Matching {
    decode_clusters(g, s, cap, false).expect("greedy fallback never fails")
}

/// Like [`decode_auto`] but fails instead of falling back to greedy when a
/// cluster exceeds `cap`, so the result is always a minimum-weight matching.
pub fn decode_exact_clusters(g: &DecodingGraph, s: &Syndrome, cap: usize) -> Result<Matching, DecodeError> {
    decode_clusters(g, s, cap, true)
}

fn decode_clusters(g: &DecodingGraph, s: &Syndrome, cap: usize, strict: bool) -> Result<Matching, DecodeError> {
    let defects = s.lit();
    let k = defects.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    let bd: Vec<u32> = defects.iter().map(|&u| g.boundary_dist(u)).collect();
    for i in 0..k {
        for j in i + 1..k {
            if g.dist(defects[i], defects[j]) < bd[i] + bd[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..k {
        let r = find(&mut parent, i);
        clusters[r].push(defects[i]);
    }
    let mut pairs = Vec::with_capacity(k);
    for c in clusters.into_iter().filter(|c| !c.is_empty()) {
        if c.len() <= cap {
            pairs.extend(exact_pairs(g, &c));
        } else if strict {
            return Err(DecodeError::CapExceeded { defects: c.len(), cap });
        } else {
            pairs.extend(greedy_pairs(g, &c));
        }
    }
    Ok(Matching::from_pairs(g, pairs))
}

/// Minimum-weight pairing of sorted `defects` by memoized recursion over
/// subsets. The lowest remaining defect is paired first, partners tried in
/// ascending order with the boundary last, keeping the first minimum.
fn exact_pairs(g: &DecodingGraph, defects: &[usize]) -> Vec<(usize, Option<usize>)> {
    let k = defects.len();
    if k == 0 {
        return Vec::new();
    }
    let mut dist = vec![0u32; k * k];
    for i in 0..k {
        for j in i + 1..k {
            let w = g.dist(defects[i], defects[j]);
            dist[i * k + j] = w;
            dist[j * k + i] = w;
        }
    }
    let bd: Vec<u32> = defects.iter().map(|&u| g.boundary_dist(u)).collect();
    let full = (1usize << k) - 1;
    const UNSET: u32 = u32::MAX;
    let mut best = vec![UNSET; full + 1];
    let mut choice = vec![u8::MAX; full + 1];
    best[0] = 0;

    // Iterative DP in increasing mask order: every submask is smaller.
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut b = UNSET;
        let mut c = u8::MAX;
        let mut m = rest;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            m &= m - 1;
            let w = dist[i * k + j] + best[rest & !(1 << j)];
            if w < b {
                b = w;
                c = j as u8;
            }
        }
        let w = bd[i] + best[rest];
        if w < b {
            b = w;
            c = u8::MAX;
        }
        best[mask] = b;
        choice[mask] = c;
    }

    let mut out = Vec::with_capacity(k);
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        mask &= !(1 << i);
        match choice[mask | (1 << i)] {
            u8::MAX => out.push((defects[i], None)),
            j => {
                mask &= !(1 << j);
                out.push((defects[i], Some(defects[j as usize])));
            }
        }
    }
    out
}

fn greedy_pairs(g: &DecodingGraph, defects: &[usize]) -> Vec<(usize, Option<usize>)> {
    let k = defects.len();
    let vn = usize::MAX;
    let mut cands: Vec<(u32, usize, usize)> = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        cands.push((g.boundary_dist(defects[i]), defects[i], vn));
        for j in i + 1..k {
            cands.push((g.dist(defects[i], defects[j]), defects[i], defects[j]));
        }
    }
    cands.sort_unstable();
    let n = g.num_nodes();
    let mut used = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for (_, u, v) in cands {
        if used[u] || (v != vn && used[v]) {
            continue;
        }
        used[u] = true;
        if v == vn {
            out.push((u, None));
        } else {
            used[v] = true;
            out.push((u, Some(v)));
        }
    }
    out
}

/// XOR over matched paths of the commit-side endpoints of crossing edges.
pub fn extract_dependency_bits(g: &DecodingGraph, m: &Matching, plane: &BoundaryPlane) -> DependencyBits {
    let toggles = m
        .paths
        .iter()
        .flatten()
        .filter(|&&e| plane.is_crossing(e))
        .map(|&e| {
            let edge = g.edge(e);
            if g.is_commit(edge.u) {
                edge.u
            } else {
                edge.v
            }
        });
    DependencyBits::from_xor(plane.id, toggles)
}

/// Edges that update the Pauli frame: matched edges lying entirely in the commit region.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PauliFrameUpdate {
    pub edges: Vec<usize>,
}

pub fn commit_corrections(g: &DecodingGraph, m: &Matching) -> PauliFrameUpdate {
    let vn = g.virtual_node();
    let edges = m
        .correction()
        .edges
        .into_iter()
        .filter(|&e| {
            let edge = g.edge(e);
            g.is_commit(edge.u) && (edge.v == vn || g.is_commit(edge.v))
        })
        .collect();
    PauliFrameUpdate { edges }
}
