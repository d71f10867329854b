//! Orienting the edges of a regular multigraph so that no vertex is a source
//! or a sink: peel perfect matchings down to a 2-factor, orient the matchings
//! at random and the 2-factor cycles segment by segment.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::RegularMultigraph;
use crate::matching::{maximum_matching, UNMATCHED};
use crate::seed;

/// Whole-peel attempts before giving up.
pub const PEEL_ATTEMPTS: usize = 20;

/// A direction for each edge of a multigraph, as `(tail, head)` pairs indexed
/// like [`RegularMultigraph::edges`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orientation {
    pub n: usize,
    pub arcs: Vec<(usize, usize)>,
}

impl Orientation {
    pub fn from_arcs(n: usize, arcs: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(u, v)) = arcs.iter().find(|&&(u, v)| u >= n || v >= n) {
            return Err(invalid(format!("arc {u}->{v} outside 0..{n}")));
        }
        Ok(Orientation { n, arcs })
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for &(u, _) in &self.arcs {
            out[u] += 1;
        }
        out
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut inn = vec![0; self.n];
        for &(_, v) in &self.arcs {
            inn[v] += 1;
        }
        inn
    }

    /// One `u v` line per arc, meaning `u -> v`.
    pub fn to_text(&self) -> String {
        self.arcs.iter().map(|(u, v)| format!("{u} {v}\n")).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.sources.is_empty() && self.sinks.is_empty()
    }
}

/// Vertices with at least one edge whose edges all point out (sources) or all point in (sinks).
pub fn certify(o: &Orientation) -> Certificate {
    let (inn, out) = (o.in_degrees(), o.out_degrees());
    let mut cert = Certificate::default();
    for v in 0..o.n {
        if inn[v] + out[v] == 0 {
            continue;
        }
        if inn[v] == 0 {
            cert.sources.push(v);
        }
        if out[v] == 0 {
            cert.sinks.push(v);
        }
    }
    cert
}

/// Perfect matching among the edges with `available[e]`, as edge ids, or
/// `None` when the available subgraph has none. Loops are never used; among
/// parallel edges one is picked at random.
fn perfect_matching_on(
    n: usize,
    edges: &[(usize, usize)],
    available: &[bool],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    if n % 2 == 1 {
        return None;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(u, v)) in edges.iter().enumerate() {
        if available[e] && u != v {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
        list.shuffle(rng);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut mate = vec![UNMATCHED; n];
    for &v in &order {
        if mate[v] == UNMATCHED {
            if let Some(&w) = adj[v].iter().find(|&&w| mate[w] == UNMATCHED) {
                mate[v] = w;
                mate[w] = v;
            }
        }
    }
    let mate = maximum_matching(&adj, mate);
    if mate.contains(&UNMATCHED) {
        return None;
    }
    let mut candidates: Vec<usize> = (0..edges.len())
        .filter(|&e| available[e] && edges[e].0 != edges[e].1 && mate[edges[e].0] == edges[e].1)
        .collect();
    candidates.shuffle(rng);
    let mut taken = vec![false; n];
    let mut chosen = Vec::with_capacity(n / 2);
    for e in candidates {
        let (u, v) = edges[e];
        if !taken[u] && !taken[v] {
            taken[u] = true;
            taken[v] = true;
            chosen.push(e);
        }
    }
    chosen.sort_unstable();
    Some(chosen)
}

/// A perfect matching of `g` as edge ids.
pub fn perfect_matching(g: &RegularMultigraph, seed: u64) -> Result<Vec<usize>> {
    if g.n() % 2 == 1 {
        return Err(invalid(format!("no perfect matching on an odd number of vertices ({})", g.n())));
    }
    let edges = g.edges();
    let mut rng = seed::rng(seed, "perfect-matching", 0);
    perfect_matching_on(g.n(), &edges, &vec![true; edges.len()], &mut rng)
        .ok_or_else(|| Error::PeelFailure { layer: 1, attempts: 1 })
}

/// A 2-factor cycle: `vertices[i]` and `vertices[i+1 mod len]` are joined by `edges[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchingPeel {
    /// `M_1 .. M_{d-2}` as edge ids.
    pub layers: Vec<Vec<usize>>,
    /// Edge ids of the 2-factor left over.
    pub residual: Vec<usize>,
    pub cycles: Vec<Cycle>,
    /// 1-based attempt that succeeded.
    pub attempt: usize,
}

fn split_cycles(n: usize, edges: &[(usize, usize)], residual: &[usize]) -> Result<Vec<Cycle>> {
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &e in residual {
        let (u, v) = edges[e];
        incident[u].push(e);
        incident[v].push(e);
    }
    if let Some(v) = (0..n).find(|&v| incident[v].len() != 2) {
        return Err(invalid(format!("residual is not 2-regular at vertex {v}")));
    }
    let mut seen = vec![false; n];
    let mut cycles = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut vertices = vec![start];
        let mut cyc_edges = Vec::new();
        seen[start] = true;
        let mut at = start;
        let mut via = incident[start][0];
        loop {
            cyc_edges.push(via);
            let (u, v) = edges[via];
            let next = if u == at { v } else { u };
            if next == start {
                break;
            }
            seen[next] = true;
            vertices.push(next);
            let [a, b] = [incident[next][0], incident[next][1]];
            via = if a == via { b } else { a };
            at = next;
        }
        cycles.push(Cycle {
            vertices,
            edges: cyc_edges,
        });
    }
    Ok(cycles)
}

/// `d - 2` edge-disjoint perfect matchings and the 2-factor left over. The
/// whole peel is retried with fresh randomness up to [`PEEL_ATTEMPTS`] times.
pub fn matching_peel(g: &RegularMultigraph, seed: u64) -> Result<MatchingPeel> {
    let (n, d) = (g.n(), g.d());
    if d < 3 {
        return Err(Error::Hypothesis(format!("peeling needs d >= 3, got {d}")));
    }
    if n % 2 == 1 {
        return Err(invalid(format!("n = {n} is odd, so no perfect matching exists")));
    }
    let edges = g.edges();
    let mut last_failure = 1;
    for attempt in 1..=PEEL_ATTEMPTS {
        let mut rng = seed::rng(seed, "matching-peel", attempt as u64);
        let mut available = vec![true; edges.len()];
        let mut layers = Vec::with_capacity(d - 2);
        for layer in 1..=d - 2 {
            match perfect_matching_on(n, &edges, &available, &mut rng) {
                Some(m) => {
                    for &e in &m {
                        available[e] = false;
                    }
                    layers.push(m);
                }
                None => {
                    last_failure = layer;
                    break;
                }
            }
        }
        if layers.len() == d - 2 {
            let residual: Vec<usize> = (0..edges.len()).filter(|&e| available[e]).collect();
            let cycles = split_cycles(n, &edges, &residual)?;
            return Ok(MatchingPeel {
                layers,
                residual,
                cycles,
                attempt,
            });
        }
    }
    Err(Error::PeelFailure {
        layer: last_failure,
        attempts: PEEL_ATTEMPTS,
    })
}

/// Whether a vertex's final-layer matching edge points at it or away from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowClass {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrientedGraph {
    pub orientation: Orientation,
    /// Empty for `d = 2`, where the graph is its own 2-factor.
    pub peel: Option<MatchingPeel>,
    /// Per vertex; empty for `d = 2`.
    pub classes: Vec<FlowClass>,
    /// False for `d = 2`, which the no-source-no-sink theorem does not cover.
    pub within_theorem_scope: bool,
}

/// Orients `g` without sources or sinks. Matching edges get independent
/// uniform directions; each 2-factor cycle is cut into maximal runs of equal
/// [`FlowClass`], each run is oriented along a random direction, and the edge
/// between two runs points from the `In` end to the `Out` end. A cycle with a
/// single class is oriented coherently in a random direction.
pub fn orient_no_source_sink(g: &RegularMultigraph, seed: u64) -> Result<OrientedGraph> {
    let (n, d) = (g.n(), g.d());
    if d < 2 {
        return Err(Error::Hypothesis(format!("d = {d}: every vertex is a source or a sink")));
    }
    let edges = g.edges();
    let mut rng = seed::rng(seed, "orientation", 0);
    let mut arcs: Vec<Option<(usize, usize)>> = vec![None; edges.len()];

    let (peel, cycles, classes) = if d == 2 {
        let all: Vec<usize> = (0..edges.len()).collect();
        (None, split_cycles(n, &edges, &all)?, Vec::new())
    } else {
        let peel = matching_peel(g, seed)?;
        let mut classes = vec![FlowClass::In; n];
        for (li, layer) in peel.layers.iter().enumerate() {
            let last = li + 3 == d;
            for &e in layer {
                let (u, v) = edges[e];
                let (tail, head) = if rng.random_bool(0.5) { (u, v) } else { (v, u) };
                arcs[e] = Some((tail, head));
                if last {
                    classes[tail] = FlowClass::Out;
                    classes[head] = FlowClass::In;
                }
            }
        }
        let cycles = peel.cycles.clone();
        (Some(peel), cycles, classes)
    };

    for cyc in &cycles {
        let len = cyc.vertices.len();
        let forward = |i: usize| (cyc.vertices[i], cyc.vertices[(i + 1) % len]);
        let backward = |i: usize| (cyc.vertices[(i + 1) % len], cyc.vertices[i]);
        let class = |i: usize| classes.get(cyc.vertices[i % len]).copied();
        let flips: Vec<usize> = (0..len).filter(|&i| class(i) != class(i + 1)).collect();
        if flips.is_empty() {
            let fwd = rng.random_bool(0.5);
            for i in 0..len {
                arcs[cyc.edges[i]] = Some(if fwd { forward(i) } else { backward(i) });
            }
            continue;
        }
        // Boundary edges: from the In end to the Out end.
        for &i in &flips {
            let a = forward(i);
            arcs[cyc.edges[i]] = Some(if class(i) == Some(FlowClass::In) { a } else { (a.1, a.0) });
        }
        // Runs between consecutive flips; edge i joins positions i and i+1.
        for (j, &start_flip) in flips.iter().enumerate() {
            let end_flip = flips[(j + 1) % flips.len()];
            let fwd = rng.random_bool(0.5);
            let mut i = (start_flip + 1) % len;
            while i != end_flip {
                arcs[cyc.edges[i]] = Some(if fwd { forward(i) } else { backward(i) });
                i = (i + 1) % len;
            }
        }
    }

    let arcs = arcs
        .into_iter()
        .enumerate()
        .map(|(e, a)| a.ok_or_else(|| invalid(format!("edge {e} left unoriented"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(OrientedGraph {
        orientation: Orientation { n, arcs },
        peel,
        classes,
        within_theorem_scope: d >= 3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_graph(n: usize) -> RegularMultigraph {
        // Half-edge 2v+1 pairs with 2(v+1).
        let mut pairing = vec![0; 2 * n];
        for v in 0..n {
            let a = 2 * v + 1;
            let b = (2 * (v + 1)) % (2 * n);
            pairing[a] = b;
            pairing[b] = a;
        }
        RegularMultigraph::from_pairing(n, 2, pairing).unwrap()
    }

    #[test]
    fn single_edge_matching() {
        let g = RegularMultigraph::sample(2, 1, 0).unwrap();
        assert_eq!(perfect_matching(&g, 0).unwrap(), vec![0]);
    }

    #[test]
    fn four_cycle_matching() {
        let g = cycle_graph(4);
        let edges = g.edges();
        for seed in 0..10 {
            let m = perfect_matching(&g, seed).unwrap();
            assert_eq!(m.len(), 2);
            let mut covered: Vec<usize> = m.iter().flat_map(|&e| [edges[e].0, edges[e].1]).collect();
            covered.sort_unstable();
            assert_eq!(covered, vec![0, 1, 2, 3]);
        }
        assert!(perfect_matching(&RegularMultigraph::sample(3, 2, 0).unwrap(), 0).is_err());
    }

    #[test]
    fn peel_structure() {
        for &(n, d) in &[(20usize, 3usize), (200, 5), (30, 4)] {
            let g = RegularMultigraph::sample(n, d, 4).unwrap();
            let peel = matching_peel(&g, 1).unwrap();
            assert_eq!(peel.layers.len(), d - 2);
            let edges = g.edges();
            let mut used = vec![0; edges.len()];
            for layer in &peel.layers {
                let mut deg = vec![0; n];
                for &e in layer {
                    used[e] += 1;
                    deg[edges[e].0] += 1;
                    deg[edges[e].1] += 1;
                }
                assert!(deg.iter().all(|&x| x == 1));
            }
            for &e in &peel.residual {
                used[e] += 1;
            }
            assert!(used.iter().all(|&u| u == 1));
            let mut covered: Vec<usize> = peel.cycles.iter().flat_map(|c| c.vertices.clone()).collect();
            covered.sort_unstable();
            assert_eq!(covered, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn certify_examples() {
        let cyc = Orientation::from_arcs(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        assert!(certify(&cyc).holds());
        let star = Orientation::from_arcs(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let c = certify(&star);
        assert_eq!(c.sources, vec![0]);
        assert_eq!(c.sinks, vec![1, 2, 3]);
        assert_eq!(star.to_text(), "0 1\n0 2\n0 3\n");
        assert!(Orientation::from_arcs(2, vec![(0, 2)]).is_err());
    }

    #[test]
    fn orientations_have_no_sources_or_sinks() {
        for d in 3..=5 {
            for seed in 0..40 {
                let g = RegularMultigraph::sample(60, d, seed).unwrap();
                let o = orient_no_source_sink(&g, seed).unwrap();
                assert!(certify(&o.orientation).holds(), "d={d} seed={seed}");
                let (inn, out) = (o.orientation.in_degrees(), o.orientation.out_degrees());
                assert!((0..60).all(|v| inn[v] + out[v] == d));
            }
        }
    }

    #[test]
    fn segments_flip_only_at_boundaries() {
        let g = RegularMultigraph::sample(100, 3, 9).unwrap();
        let o = orient_no_source_sink(&g, 2).unwrap();
        let peel = o.peel.as_ref().unwrap();
        let edges = g.edges();
        // The final layer decides the classes.
        for &e in peel.layers.last().unwrap() {
            let (t, h) = o.orientation.arcs[e];
            assert_eq!(o.classes[t], FlowClass::Out);
            assert_eq!(o.classes[h], FlowClass::In);
            assert!(edges[e] == (t, h) || edges[e] == (h, t));
        }
        for cyc in &peel.cycles {
            let len = cyc.vertices.len();
            for i in 0..len {
                let (a, b) = (cyc.vertices[i], cyc.vertices[(i + 1) % len]);
                if o.classes[a] != o.classes[b] {
                    let arc = o.orientation.arcs[cyc.edges[i]];
                    let from_in = if o.classes[a] == FlowClass::In { a } else { b };
                    assert_eq!(arc.0, from_in);
                }
            }
        }
    }

    #[test]
    fn cycles_with_two_vertices_and_loops() {
        // Loop at 0, double edge 1-2.
        let pairing = vec![1, 0, 4, 5, 2, 3];
        let g = RegularMultigraph::from_pairing(3, 2, pairing).unwrap();
        let o = orient_no_source_sink(&g, 0).unwrap();
        assert!(!o.within_theorem_scope);
        assert!(certify(&o.orientation).holds());
    }

    #[test]
    fn d_two_cycle_is_coherent() {
        let g = cycle_graph(7);
        let o = orient_no_source_sink(&g, 3).unwrap();
        assert!(o.orientation.in_degrees().iter().all(|&x| x == 1));
    }

    #[test]
    fn peel_rejects_bad_input() {
        let g = RegularMultigraph::sample(10, 2, 0).unwrap();
        assert!(matches!(matching_peel(&g, 0), Err(Error::Hypothesis(_))));
        let g = RegularMultigraph::sample(5, 4, 0).unwrap();
        assert!(matching_peel(&g, 0).is_err());
    }
}
