//! Configuration-model random regular multigraphs.
//!
//! A graph on `n` vertices of degree `d` is a fixed-point-free involution on
//! the `n * d` half-edges; half-edges `v*d .. v*d + d` belong to vertex `v`.
//! Loops and multi-edges are kept.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::local::{Adjacency, LocalView};
use crate::seed;

/// Largest `n * d` accepted by the exhaustive pairing enumerator.
pub const MAX_ENUMERATION_HALF_EDGES: usize = 16;
/// Largest cycle length accepted by [`RegularMultigraph::count_cycles_up_to`].
pub const MAX_CYCLE_LENGTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularMultigraph {
    n: usize,
    d: usize,
    pairing: Vec<usize>,
}

fn check_dims(n: usize, d: usize) -> Result<()> {
    if n == 0 || d == 0 {
        return Err(invalid(format!("n and d must be positive (n={n}, d={d})")));
    }
    if (n * d) % 2 == 1 {
        return Err(invalid(format!("n*d must be even (n={n}, d={d})")));
    }
    Ok(())
}

impl RegularMultigraph {
    pub fn from_pairing(n: usize, d: usize, pairing: Vec<usize>) -> Result<Self> {
        check_dims(n, d)?;
        if pairing.len() != n * d {
            return Err(invalid(format!(
                "pairing has {} entries, expected {}",
                pairing.len(),
                n * d
            )));
        }
        for (h, &p) in pairing.iter().enumerate() {
            if p >= pairing.len() {
                return Err(invalid(format!("half-edge {h} pairs with out-of-range {p}")));
            }
            if p == h {
                return Err(invalid(format!("half-edge {h} pairs with itself")));
            }
            if pairing[p] != h {
                return Err(invalid(format!("pairing is not an involution at half-edge {h}")));
            }
        }
        Ok(RegularMultigraph { n, d, pairing })
    }

    /// Uniform random pairing: shuffle the half-edges and glue consecutive ones.
    pub fn sample(n: usize, d: usize, seed: u64) -> Result<Self> {
        check_dims(n, d)?;
        let m = n * d;
        let mut order: Vec<usize> = (0..m).collect();
        let mut rng = seed::rng(seed, "configuration-model", 0);
        order.shuffle(&mut rng);
        let mut pairing = vec![0; m];
        for pair in order.chunks_exact(2) {
            pairing[pair[0]] = pair[1];
            pairing[pair[1]] = pair[0];
        }
        Ok(RegularMultigraph { n, d, pairing })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn half_edge_count(&self) -> usize {
        self.pairing.len()
    }

    pub fn pairing(&self) -> &[usize] {
        &self.pairing
    }

    #[inline]
    pub fn partner(&self, h: usize) -> usize {
        self.pairing[h]
    }

    #[inline]
    pub fn vertex_of(&self, h: usize) -> usize {
        h / self.d
    }

    #[inline]
    pub fn half_edges(&self, v: usize) -> std::ops::Range<usize> {
        v * self.d..(v + 1) * self.d
    }

    /// Undirected edges as half-edge pairs `(h, partner)` with `h < partner`, ordered by `h`.
    pub fn edge_half_pairs(&self) -> Vec<(usize, usize)> {
        self.pairing
            .iter()
            .enumerate()
            .filter(|&(h, &p)| h < p)
            .map(|(h, &p)| (h, p))
            .collect()
    }

    /// Undirected edges as vertex pairs, one entry per edge (parallel edges repeated).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edge_half_pairs()
            .into_iter()
            .map(|(h, p)| (self.vertex_of(h), self.vertex_of(p)))
            .collect()
    }

    /// Degree of each vertex with loops counted twice.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for (a, b) in self.edges() {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn loop_count(&self) -> usize {
        self.edge_half_pairs()
            .iter()
            .filter(|&&(h, p)| self.vertex_of(h) == self.vertex_of(p))
            .count()
    }

    /// Line format: `n d`, then `h partner(h)` for every half-edge.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(12 * self.pairing.len() + 16);
        writeln!(out, "{} {}", self.n, self.d).unwrap();
        for (h, p) in self.pairing.iter().enumerate() {
            writeln!(out, "{h} {p}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty graph file".into()))?;
        let (n, d) = parse_pair(header)?;
        check_dims(n, d)?;
        let mut pairing = vec![usize::MAX; n * d];
        for line in lines {
            let (h, p) = parse_pair(line)?;
            if h >= pairing.len() {
                return Err(Error::Parse(format!("half-edge {h} out of range")));
            }
            if pairing[h] != usize::MAX {
                return Err(Error::Parse(format!("half-edge {h} listed twice")));
            }
            pairing[h] = p;
        }
        if let Some(h) = pairing.iter().position(|&p| p == usize::MAX) {
            return Err(Error::Parse(format!("half-edge {h} missing")));
        }
        Self::from_pairing(n, d, pairing)
    }

    /// The ball of radius `r` around `v`: vertices within distance `r` and the
    /// edges incident to a vertex at distance `< r`.
    pub fn neighborhood(&self, v: usize, r: usize) -> Result<RootedBall> {
        if v >= self.n {
            return Err(invalid(format!("vertex {v} out of range (n={})", self.n)));
        }
        let mut vertices = vec![v];
        let mut distance = vec![0usize];
        let mut index: HashMap<usize, usize> = HashMap::from([(v, 0)]);
        let mut seen_edges: HashSet<usize> = HashSet::new();
        let mut edges = Vec::new();
        let mut head = 0;
        while head < vertices.len() {
            let u = vertices[head];
            let du = distance[head];
            if du < r {
                for h in self.half_edges(u) {
                    let p = self.partner(h);
                    if !seen_edges.insert(h.min(p)) {
                        continue;
                    }
                    let w = self.vertex_of(p);
                    let wi = *index.entry(w).or_insert_with(|| {
                        vertices.push(w);
                        distance.push(du + 1);
                        vertices.len() - 1
                    });
                    edges.push((head, wi));
                }
            }
            head += 1;
        }
        let is_tree = edges.len() + 1 == vertices.len();
        Ok(RootedBall {
            center: v,
            radius: r,
            vertices,
            distance,
            edges,
            is_tree,
        })
    }

    /// `mask[v]` is true iff the radius-`r` ball around `v` is a tree.
    /// Equivalent to `neighborhood(v, r).is_tree` but stops at the first cycle.
    pub fn tree_ball_mask(&self, r: usize) -> Vec<bool> {
        if r == 0 {
            return vec![true; self.n];
        }
        let chunk = self.n.div_ceil(4 * rayon::current_num_threads()).max(256);
        let mut mask = vec![false; self.n];
        mask.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(ci, out)| {
                let mut scratch = BallScratch::new(self.n);
                for (k, slot) in out.iter_mut().enumerate() {
                    *slot = scratch.is_tree(self, ci * chunk + k, r);
                }
            });
        mask
    }

    /// Exact counts of cycles of length `1..=max_len` (index `l - 1`).
    /// Loops are 1-cycles, pairs of parallel edges 2-cycles; longer cycles are
    /// counted with edge multiplicity.
    pub fn count_cycles_up_to(&self, max_len: usize) -> Result<Vec<u64>> {
        if max_len == 0 || max_len > MAX_CYCLE_LENGTH {
            return Err(Error::OracleGuard(format!(
                "cycle length bound must be in 1..={MAX_CYCLE_LENGTH}, got {max_len}"
            )));
        }
        let mut counts = vec![0u64; max_len];
        let mut mult: Vec<HashMap<usize, u64>> = vec![HashMap::new(); self.n];
        for (a, b) in self.edges() {
            if a == b {
                counts[0] += 1;
            } else {
                *mult[a].entry(b).or_insert(0) += 1;
                *mult[b].entry(a).or_insert(0) += 1;
            }
        }
        let adj: Vec<Vec<(usize, u64)>> = mult
            .into_iter()
            .map(|m| {
                let mut v: Vec<_> = m.into_iter().collect();
                v.sort_unstable();
                v
            })
            .collect();
        if max_len >= 2 {
            for (u, list) in adj.iter().enumerate() {
                for &(w, m) in list {
                    if u < w {
                        counts[1] += m * (m - 1) / 2;
                    }
                }
            }
        }
        if max_len >= 3 {
            let mut on_path = vec![false; self.n];
            let mut path = Vec::with_capacity(max_len);
            for s in 0..self.n {
                path.clear();
                path.push(s);
                on_path[s] = true;
                extend_cycles(&adj, s, 1, max_len, &mut path, &mut on_path, &mut counts);
                on_path[s] = false;
            }
        }
        Ok(counts)
    }
}

fn extend_cycles(
    adj: &[Vec<(usize, u64)>],
    start: usize,
    weight: u64,
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    counts: &mut [u64],
) {
    let u = *path.last().unwrap();
    let len = path.len();
    for &(w, m) in &adj[u] {
        if w == start {
            // Each cycle is found from its smallest vertex in two directions; keep one.
            if len >= 3 && path[1] < u {
                counts[len - 1] += weight * m;
            }
        } else if w > start && !on_path[w] && len < max_len {
            on_path[w] = true;
            path.push(w);
            extend_cycles(adj, start, weight * m, max_len, path, on_path, counts);
            path.pop();
            on_path[w] = false;
        }
    }
}

fn parse_pair(line: &str) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace();
    let mut next = || -> Result<usize> {
        it.next()
            .ok_or_else(|| Error::Parse(format!("expected two integers in {line:?}")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("{e} in {line:?}")))
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(Error::Parse(format!("trailing tokens in {line:?}")));
    }
    Ok((a, b))
}

struct BallScratch {
    stamp: Vec<u32>,
    parent_half: Vec<usize>,
    depth: Vec<usize>,
    queue: Vec<usize>,
    current: u32,
}

impl BallScratch {
    fn new(n: usize) -> Self {
        BallScratch {
            stamp: vec![0; n],
            parent_half: vec![usize::MAX; n],
            depth: vec![0; n],
            queue: Vec::new(),
            current: 0,
        }
    }

    fn is_tree(&mut self, g: &RegularMultigraph, v: usize, r: usize) -> bool {
        self.current += 1;
        let cur = self.current;
        self.queue.clear();
        self.queue.push(v);
        self.stamp[v] = cur;
        self.parent_half[v] = usize::MAX;
        self.depth[v] = 0;
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            if self.depth[u] >= r {
                continue;
            }
            for h in g.half_edges(u) {
                if h == self.parent_half[u] {
                    continue;
                }
                let p = g.partner(h);
                let w = g.vertex_of(p);
                if self.stamp[w] == cur {
                    return false;
                }
                self.stamp[w] = cur;
                self.parent_half[w] = p;
                self.depth[w] = self.depth[u] + 1;
                self.queue.push(w);
            }
        }
        true
    }
}

impl LocalView for RegularMultigraph {
    fn vertex_count(&self) -> usize {
        self.n
    }

    #[inline]
    fn degree(&self, _v: usize) -> usize {
        self.d
    }

    #[inline]
    fn neighbour(&self, v: usize, i: usize) -> usize {
        self.pairing[v * self.d + i] / self.d
    }
}

/// A ball `N_G(v, r)`. Local index 0 is the centre; `vertices` is in BFS order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedBall {
    pub center: usize,
    pub radius: usize,
    /// Graph vertex of each local index.
    pub vertices: Vec<usize>,
    /// Distance from the centre of each local index.
    pub distance: Vec<usize>,
    /// Edges as local index pairs.
    pub edges: Vec<(usize, usize)>,
    pub is_tree: bool,
}

impl RootedBall {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_edges(self.vertices.len(), &self.edges)
    }
}

/// Exhaustive enumeration of all `(nd - 1)!!` pairings.
pub fn enumerate_pairings(n: usize, d: usize) -> Result<PairingIter> {
    check_dims(n, d)?;
    if n * d > MAX_ENUMERATION_HALF_EDGES {
        return Err(Error::OracleGuard(format!(
            "pairing enumeration limited to nd <= {MAX_ENUMERATION_HALF_EDGES}, got {}",
            n * d
        )));
    }
    Ok(PairingIter {
        n,
        d,
        partner: vec![usize::MAX; n * d],
        stack: Vec::new(),
        started: false,
        done: false,
    })
}

/// `(m - 1)!!` for even `m`, as `u128`; `(-1)!! = 1`.
pub fn pairing_count(m: usize) -> u128 {
    (1..m).step_by(2).map(|k| k as u128).product()
}

pub struct PairingIter {
    n: usize,
    d: usize,
    partner: Vec<usize>,
    stack: Vec<(usize, usize)>,
    started: bool,
    done: bool,
}

impl PairingIter {
    fn fill(&mut self) {
        let m = self.partner.len();
        while let Some(a) = (0..m).find(|&h| self.partner[h] == usize::MAX) {
            let b = (a + 1..m)
                .find(|&h| self.partner[h] == usize::MAX)
                .expect("even number of free half-edges");
            self.link(a, b);
        }
    }

    fn link(&mut self, a: usize, b: usize) {
        self.partner[a] = b;
        self.partner[b] = a;
        self.stack.push((a, b));
    }

    fn current(&self) -> RegularMultigraph {
        RegularMultigraph {
            n: self.n,
            d: self.d,
            pairing: self.partner.clone(),
        }
    }
}

impl Iterator for PairingIter {
    type Item = RegularMultigraph;

    fn next(&mut self) -> Option<RegularMultigraph> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill();
            return Some(self.current());
        }
        while let Some((a, b)) = self.stack.pop() {
            self.partner[a] = usize::MAX;
            self.partner[b] = usize::MAX;
            let m = self.partner.len();
            if let Some(b2) = (b + 1..m).find(|&h| self.partner[h] == usize::MAX) {
                self.link(a, b2);
                self.fill();
                return Some(self.current());
            }
        }
        self.done = true;
        None
    }
}
