//! Observables of colourings: edge profiles, density, correlation ratio,
//! average degree, cluster structure, entropies and the entropy functional.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::factor::{project, BlockFactor, Colour, ColoringField, Projection};
use crate::graph::RegularMultigraph;
use crate::labels::LabelField;
use crate::seed;

/// Mean, extremes and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub stderr: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let count = xs.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / count as f64;
        let var = if count > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Summary {
            count,
            mean,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            stderr: (var / count as f64).sqrt(),
        }
    }
}

/// Integer counts behind an empirical profile: `pair[i*k + j]` directed edges
/// coloured `(i, j)`, `vertex[i]` vertices coloured `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProfileCounts {
    pub n: u64,
    pub d: u64,
    pub colours: usize,
    pub pair: Vec<u64>,
    pub vertex: Vec<u64>,
}

impl ProfileCounts {
    pub fn directed_edges(&self) -> u64 {
        self.n * self.d
    }

    pub fn pair(&self, i: usize, j: usize) -> u64 {
        self.pair[i * self.colours + j]
    }

    /// Symmetry, row sums `d * vertex[i]`, even diagonal, totals.
    pub fn validate(&self) -> Result<()> {
        let k = self.colours;
        if self.pair.len() != k * k || self.vertex.len() != k {
            return Err(invalid("profile count arrays have the wrong shape"));
        }
        if self.vertex.iter().sum::<u64>() != self.n {
            return Err(invalid("vertex counts do not sum to n"));
        }
        for i in 0..k {
            for j in 0..k {
                if self.pair(i, j) != self.pair(j, i) {
                    return Err(invalid(format!("pair counts not symmetric at ({i},{j})")));
                }
            }
            let row: u64 = (0..k).map(|j| self.pair(i, j)).sum();
            if row != self.d * self.vertex[i] {
                return Err(invalid(format!(
                    "row {i} sums to {row}, expected d * {} = {}",
                    self.vertex[i],
                    self.d * self.vertex[i]
                )));
            }
            if self.pair(i, i) % 2 == 1 {
                return Err(invalid(format!("diagonal count at {i} is odd")));
            }
        }
        Ok(())
    }
}

/// The pair `(P, pi)` over colours `0..colours`, row-major `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeProfile {
    pub colours: usize,
    pub p: Vec<f64>,
    pub pi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<ProfileCounts>,
}

impl EdgeProfile {
    pub fn from_counts(counts: ProfileCounts) -> Self {
        let nd = counts.directed_edges() as f64;
        let n = counts.n as f64;
        EdgeProfile {
            colours: counts.colours,
            p: counts.pair.iter().map(|&c| c as f64 / nd).collect(),
            pi: counts.vertex.iter().map(|&c| c as f64 / n).collect(),
            counts: Some(counts),
        }
    }

    /// A real-valued profile; checked for symmetry, non-negativity, unit mass and
    /// row marginals (to 1e-9).
    pub fn from_parts(p: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        let k = pi.len();
        if p.len() != k * k {
            return Err(invalid("P must be a k x k matrix"));
        }
        if p.iter().chain(&pi).any(|&x| !(x >= 0.0)) {
            return Err(invalid("profile entries must be non-negative"));
        }
        let tol = 1e-9;
        if (p.iter().sum::<f64>() - 1.0).abs() > tol || (pi.iter().sum::<f64>() - 1.0).abs() > tol {
            return Err(invalid("profile masses must sum to 1"));
        }
        for i in 0..k {
            for j in 0..k {
                if (p[i * k + j] - p[j * k + i]).abs() > tol {
                    return Err(invalid(format!("P not symmetric at ({i},{j})")));
                }
            }
            let row: f64 = p[i * k..(i + 1) * k].iter().sum();
            if (row - pi[i]).abs() > tol {
                return Err(invalid(format!("row {i} of P does not sum to pi({i})")));
            }
        }
        Ok(EdgeProfile {
            colours: k,
            p,
            pi,
            counts: None,
        })
    }

    /// Binary profile with density `alpha` and correlation ratio `rho`.
    pub fn binary(alpha: f64, rho: f64) -> Result<Self> {
        let both = rho * alpha * alpha;
        let mixed = alpha - both;
        let neither = 1.0 - 2.0 * alpha + both;
        Self::from_parts(vec![neither, mixed, mixed, both], vec![1.0 - alpha, alpha])
    }

    /// `P(i, j) = pi(i) pi(j)`.
    pub fn product(pi: Vec<f64>) -> Result<Self> {
        let p = pi.iter().flat_map(|a| pi.iter().map(move |b| a * b)).collect();
        Self::from_parts(p, pi)
    }

    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.colours + j]
    }

    /// Exact invariants when integer counts are present; otherwise the tolerance checks of [`Self::from_parts`].
    pub fn check_invariants(&self) -> Result<()> {
        match &self.counts {
            Some(c) => c.validate(),
            None => Self::from_parts(self.p.clone(), self.pi.clone()).map(|_| ()),
        }
    }

    /// Rows `i,j,P(i,j)` followed by rows `i,pi(i)`. With `exact`, values are
    /// written as `count/nd` and `count/n`.
    pub fn to_csv(&self, exact: bool) -> Result<String> {
        let k = self.colours;
        let mut out = String::new();
        match (&self.counts, exact) {
            (Some(c), true) => {
                for i in 0..k {
                    for j in 0..k {
                        writeln!(out, "{i},{j},{}/{}", c.pair(i, j), c.directed_edges()).unwrap();
                    }
                }
                for i in 0..k {
                    writeln!(out, "{i},{}/{}", c.vertex[i], c.n).unwrap();
                }
            }
            (None, true) => return Err(invalid("exact export needs an empirical profile")),
            (_, false) => {
                for i in 0..k {
                    for j in 0..k {
                        writeln!(out, "{i},{j},{}", self.p(i, j)).unwrap();
                    }
                }
                for i in 0..k {
                    writeln!(out, "{i},{}", self.pi[i]).unwrap();
                }
            }
        }
        Ok(out)
    }
}

/// Empirical profile; each half-edge `h` contributes the directed edge
/// `(vertex(h), vertex(partner(h)))`, so a loop contributes two copies.
pub fn edge_profile_counts(colours_of: &[Colour], g: &RegularMultigraph, colours: usize) -> Result<ProfileCounts> {
    if colours_of.len() != g.n() {
        return Err(invalid(format!(
            "colouring has {} entries for {} vertices",
            colours_of.len(),
            g.n()
        )));
    }
    if let Some(&c) = colours_of.iter().find(|&&c| c as usize >= colours) {
        return Err(invalid(format!("colour {c} outside 0..{colours}")));
    }
    let mut pair = vec![0u64; colours * colours];
    let mut vertex = vec![0u64; colours];
    for &c in colours_of {
        vertex[c as usize] += 1;
    }
    for (h, &p) in g.pairing().iter().enumerate() {
        let a = colours_of[g.vertex_of(h)] as usize;
        let b = colours_of[g.vertex_of(p)] as usize;
        pair[a * colours + b] += 1;
    }
    Ok(ProfileCounts {
        n: g.n() as u64,
        d: g.d() as u64,
        colours,
        pair,
        vertex,
    })
}

pub fn edge_profile(coloring: &ColoringField, g: &RegularMultigraph) -> Result<EdgeProfile> {
    let colours = coloring
        .colours
        .iter()
        .map(|&c| c as usize + 1)
        .max()
        .unwrap_or(1)
        .max(2);
    edge_profile_counts(&coloring.colours, g, colours).map(EdgeProfile::from_counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercStats {
    pub n: usize,
    pub d: usize,
    pub in_set: usize,
    /// Density.
    pub alpha: f64,
    /// Correlation ratio `P(1,1) / alpha^2`; 0 when `alpha = 0`.
    pub rho: f64,
    /// Mean number of in-set neighbours (with multiplicity) of an in-set vertex; 0 when empty.
    pub avdeg: f64,
    /// Component size -> number of components.
    pub component_sizes: BTreeMap<usize, usize>,
}

fn require_binary(colours: &[Colour]) -> Result<()> {
    match colours.iter().find(|&&c| c > 1) {
        Some(c) => Err(invalid(format!("binary colouring expected, found colour {c}"))),
        None => Ok(()),
    }
}

pub fn percolation_stats(coloring: &[Colour], g: &RegularMultigraph) -> Result<PercStats> {
    require_binary(coloring)?;
    let counts = edge_profile_counts(coloring, g, 2)?;
    let n = g.n();
    let d = g.d();
    let in_set = counts.vertex[1] as usize;
    let both = counts.pair(1, 1);
    let (alpha, rho, avdeg) = if in_set == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let alpha = in_set as f64 / n as f64;
        let p11 = both as f64 / (n * d) as f64;
        (alpha, p11 / (alpha * alpha), d as f64 * p11 / alpha)
    };
    let mut sizes = BTreeMap::new();
    for comp in components(coloring, g) {
        *sizes.entry(comp.len()).or_insert(0) += 1;
    }
    Ok(PercStats {
        n,
        d,
        in_set,
        alpha,
        rho,
        avdeg,
        component_sizes: sizes,
    })
}

/// Connected components of the subgraph induced by colour 1 (loops ignored).
fn components(coloring: &[Colour], g: &RegularMultigraph) -> Vec<Vec<usize>> {
    let n = g.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in g.edges() {
        if a != b && coloring[a] == 1 && coloring[b] == 1 {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in (0..n).filter(|&v| coloring[v] == 1) {
        let r = find(&mut parent, v);
        groups.entry(r).or_default().push(v);
    }
    groups.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDegree {
    pub size: usize,
    /// Distinct in-set neighbour pairs (parallel edges collapsed, loops dropped).
    pub edges: usize,
    pub degree_sum: usize,
    pub is_tree: bool,
    pub average_degree: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentDegreeReport {
    pub components: Vec<ComponentDegree>,
    pub global_average_degree: f64,
    pub all_trees: bool,
    /// Every tree component has degree sum exactly `2(m - 1)`.
    pub tree_identity_holds: bool,
}

pub fn component_degree_check(coloring: &[Colour], g: &RegularMultigraph) -> Result<ComponentDegreeReport> {
    require_binary(coloring)?;
    let mut simple: Vec<Vec<usize>> = vec![Vec::new(); g.n()];
    for (a, b) in g.edges() {
        if a != b && coloring[a] == 1 && coloring[b] == 1 {
            simple[a].push(b);
            simple[b].push(a);
        }
    }
    for list in &mut simple {
        list.sort_unstable();
        list.dedup();
    }
    let mut comps = Vec::new();
    let (mut total_deg, mut total_vertices) = (0usize, 0usize);
    for comp in components(coloring, g) {
        let degree_sum: usize = comp.iter().map(|&v| simple[v].len()).sum();
        let edges = comp
            .iter()
            .map(|&v| simple[v].iter().filter(|&&w| w > v).count())
            .sum::<usize>();
        let m = comp.len();
        total_deg += degree_sum;
        total_vertices += m;
        comps.push(ComponentDegree {
            size: m,
            edges,
            degree_sum,
            is_tree: edges + 1 == m,
            average_degree: degree_sum as f64 / m as f64,
        });
    }
    let all_trees = comps.iter().all(|c| c.is_tree);
    let tree_identity_holds = comps
        .iter()
        .filter(|c| c.is_tree)
        .all(|c| c.degree_sum == 2 * (c.size - 1));
    Ok(ComponentDegreeReport {
        components: comps,
        global_average_degree: if total_vertices == 0 {
            0.0
        } else {
            total_deg as f64 / total_vertices as f64
        },
        all_trees,
        tree_identity_holds,
    })
}

/// `h(x) = -x ln x` with `h(0) = 0`.
pub fn h(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Shannon entropy in nats. Entries must be non-negative and sum to 1 (to 1e-9).
pub fn entropy(dist: &[f64]) -> Result<f64> {
    if let Some(x) = dist.iter().find(|&&x| !(x >= 0.0)) {
        return Err(invalid(format!("negative or NaN mass {x}")));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("distribution sums to {total}, not 1")));
    }
    Ok(dist.iter().map(|&x| h(x)).sum())
}

/// `(d/2) H(P) - (d-1) H(pi)`.
pub fn entropy_functional(profile: &EdgeProfile, d: usize) -> Result<f64> {
    let d = d as f64;
    Ok(d / 2.0 * entropy(&profile.p)? - (d - 1.0) * entropy(&profile.pi)?)
}

/// One colouring of a fresh `G_{n,d}` per trial, seeded by `(seed, trial)`.
pub fn sample_trial(
    factor: &BlockFactor,
    n: usize,
    d: usize,
    seed: u64,
    trial: u64,
    mode: Projection,
) -> Result<(RegularMultigraph, ColoringField)> {
    let graph_seed = seed::derive(seed, "graph", trial);
    let g = RegularMultigraph::sample(n, d, graph_seed)?;
    let labels = LabelField::sample(n, seed::derive(seed, "labels", trial));
    let c = project(factor, &g, &labels, mode)?.with_graph_seed(graph_seed);
    Ok((g, c))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyCheck {
    pub factor: String,
    pub n: usize,
    pub d: usize,
    pub values: Vec<f64>,
    pub summary: Summary,
}

pub fn entropy_check(
    factor: &BlockFactor,
    d: usize,
    n: usize,
    trials: usize,
    seed: u64,
    mode: Projection,
) -> Result<EntropyCheck> {
    let values = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let (g, c) = sample_trial(factor, n, d, seed, t, mode)?;
            entropy_functional(&edge_profile(&c, &g)?, d)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(EntropyCheck {
        factor: factor.to_string(),
        n,
        d,
        summary: Summary::of(&values),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub n: usize,
    /// Mean profile over trials (row-major `P`).
    pub mean_p: Vec<f64>,
    /// `max_t max_{i,j} |P_t(i,j) - mean P(i,j)|`.
    pub max_deviation: f64,
    /// Mean over trials of `max_{i,j} |P_t(i,j) - mean P(i,j)|`.
    pub mean_deviation: f64,
    /// `max_t |pi_t(1) - mean pi(1)|`.
    pub pi1_max_deviation: f64,
}

pub fn concentration_experiment(
    factor: &BlockFactor,
    d: usize,
    ns: &[usize],
    trials: usize,
    seed: u64,
    mode: Projection,
) -> Result<Vec<ConcentrationRow>> {
    ns.iter()
        .map(|&n| {
            let profiles = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let (g, c) = sample_trial(factor, n, d, seed::derive(seed, "concentration", n as u64), t, mode)?;
                    edge_profile_counts(&c.colours, &g, factor.colours()).map(EdgeProfile::from_counts)
                })
                .collect::<Result<Vec<_>>>()?;
            let k = factor.colours();
            let mean_p: Vec<f64> = (0..k * k)
                .map(|e| profiles.iter().map(|p| p.p[e]).sum::<f64>() / trials as f64)
                .collect();
            let mean_pi1 = profiles.iter().map(|p| p.pi[1]).sum::<f64>() / trials as f64;
            let per_trial: Vec<f64> = profiles
                .iter()
                .map(|p| {
                    p.p.iter()
                        .zip(&mean_p)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .collect();
            Ok(ConcentrationRow {
                n,
                max_deviation: per_trial.iter().copied().fold(0.0, f64::max),
                mean_deviation: per_trial.iter().sum::<f64>() / trials as f64,
                pi1_max_deviation: profiles
                    .iter()
                    .map(|p| (p.pi[1] - mean_pi1).abs())
                    .fold(0.0, f64::max),
                mean_p,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factor::{bernoulli_factor, local_min_is, nibble_is};

    #[test]
    fn all_zero_profile() {
        let g = RegularMultigraph::sample(50, 3, 1).unwrap();
        let counts = edge_profile_counts(&vec![0; 50], &g, 2).unwrap();
        let prof = EdgeProfile::from_counts(counts);
        assert_eq!(prof.p, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(prof.pi, vec![1.0, 0.0]);
        assert_eq!(entropy_functional(&prof, 3).unwrap(), 0.0);
    }

    #[test]
    fn single_edge_profile() {
        let g = RegularMultigraph::sample(2, 1, 0).unwrap();
        let prof = EdgeProfile::from_counts(edge_profile_counts(&[0, 1], &g, 2).unwrap());
        assert_eq!(prof.p, vec![0.0, 0.5, 0.5, 0.0]);
        assert_eq!(prof.pi, vec![0.5, 0.5]);
        assert_eq!(prof.to_csv(true).unwrap(), "0,0,0/2\n0,1,1/2\n1,0,1/2\n1,1,0/2\n0,1/2\n1,1/2\n");
    }

    #[test]
    fn loops_contribute_two_directed_edges() {
        let g = RegularMultigraph::sample(1, 2, 0).unwrap();
        let c = edge_profile_counts(&[1], &g, 2).unwrap();
        assert_eq!(c.pair, vec![0, 0, 0, 2]);
        c.validate().unwrap();
    }

    #[test]
    fn empirical_profiles_satisfy_exact_invariants() {
        for seed in 0..10 {
            let g = RegularMultigraph::sample(301, 4, seed).unwrap();
            let cols: Vec<Colour> = (0..301).map(|v| ((v * 7 + seed as usize) % 3) as Colour).collect();
            let counts = edge_profile_counts(&cols, &g, 3).unwrap();
            counts.validate().unwrap();
            let prof = EdgeProfile::from_counts(counts);
            prof.check_invariants().unwrap();
            assert!((prof.p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_set_stats() {
        let g = RegularMultigraph::sample(100, 3, 2).unwrap();
        let s = percolation_stats(&vec![0; 100], &g).unwrap();
        assert_eq!((s.alpha, s.rho, s.avdeg), (0.0, 0.0, 0.0));
        assert!(s.component_sizes.is_empty());
        assert!(percolation_stats(&vec![2; 100], &g).is_err());
    }

    #[test]
    fn avdeg_identity() {
        for seed in 0..20 {
            let g = RegularMultigraph::sample(1000, 5, seed).unwrap();
            let labels = LabelField::sample(1000, seed);
            let c = project(&bernoulli_factor(0.4).unwrap(), &g, &labels, Projection::Strict).unwrap();
            let s = percolation_stats(&c.colours, &g).unwrap();
            let via_rho = g.d() as f64 * s.alpha * s.rho;
            assert!((s.avdeg - via_rho).abs() <= 1e-12 * s.avdeg.max(1.0));
            assert!((0.0..=g.d() as f64).contains(&s.avdeg));
        }
    }

    #[test]
    fn bernoulli_correlation_ratio_is_one() {
        let g = RegularMultigraph::sample(100_000, 3, 7).unwrap();
        let labels = LabelField::sample(100_000, 8);
        let c = project(&bernoulli_factor(0.3).unwrap(), &g, &labels, Projection::Strict).unwrap();
        let s = percolation_stats(&c.colours, &g).unwrap();
        assert!((s.rho - 1.0).abs() < 0.05, "rho={}", s.rho);
        assert!((s.avdeg - 0.9).abs() < 0.05, "avdeg={}", s.avdeg);
        let prof = edge_profile(&c, &g).unwrap();
        assert!((prof.p(1, 1) - 0.09).abs() < 0.005);
    }

    #[test]
    fn independent_set_has_no_internal_edges() {
        let g = RegularMultigraph::sample(100_000, 3, 9).unwrap();
        let labels = LabelField::sample(100_000, 10);
        let c = project(&local_min_is(), &g, &labels, Projection::Strict).unwrap();
        let s = percolation_stats(&c.colours, &g).unwrap();
        assert_eq!(s.rho, 0.0);
        assert_eq!(s.avdeg, 0.0);
        assert_eq!(s.component_sizes.keys().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn component_degrees() {
        // Path 0-1-2 inside a 2-regular cycle on 6 vertices; vertex 4 alone.
        let pairing = vec![11, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 0];
        let g = RegularMultigraph::from_pairing(6, 2, pairing).unwrap();
        let rep = component_degree_check(&[1, 1, 1, 0, 1, 0], &g).unwrap();
        let mut sizes: Vec<(usize, f64)> = rep.components.iter().map(|c| (c.size, c.average_degree)).collect();
        sizes.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(sizes, vec![(1, 0.0), (3, 4.0 / 3.0)]);
        assert!(rep.all_trees && rep.tree_identity_holds);
        assert!(rep.global_average_degree < 2.0);
        // Whole cycle is not a tree.
        let rep = component_degree_check(&[1; 6], &g).unwrap();
        assert!(!rep.all_trees);
        assert_eq!(rep.global_average_degree, 2.0);
        // Two-vertex component has average degree 1.
        let rep = component_degree_check(&[1, 1, 0, 0, 0, 0], &g).unwrap();
        assert_eq!(rep.components[0].average_degree, 1.0);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(h(0.0), 0.0);
        assert_eq!(h(1.0), 0.0);
        let e = std::f64::consts::E;
        assert!((h(1.0 / e) - 1.0 / e).abs() < 1e-15);
        assert!((entropy(&[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(entropy(&[-0.1, 1.1]).is_err());
        assert!(entropy(&[0.5, 0.4]).is_err());
    }

    #[test]
    fn product_profile_functional_is_entropy_of_pi() {
        let prof = EdgeProfile::product(vec![0.7, 0.3]).unwrap();
        let f = entropy_functional(&prof, 3).unwrap();
        // -0.3 ln 0.3 - 0.7 ln 0.7
        assert!((f - 0.610864302054893).abs() < 1e-12, "{f}");
    }

    #[test]
    fn binary_profile_layout() {
        let p = EdgeProfile::binary(0.2, 0.5).unwrap();
        assert!((p.p(1, 1) - 0.02).abs() < 1e-15);
        assert!((p.p(0, 1) - 0.18).abs() < 1e-15);
        assert!((p.p(0, 0) - 0.62).abs() < 1e-15);
        assert!(EdgeProfile::binary(0.8, 0.0).is_err());
    }

    #[test]
    fn entropy_check_is_deterministic() {
        let f = nibble_is(2, 0.3).unwrap();
        let a = entropy_check(&f, 3, 2000, 4, 11, Projection::Strict).unwrap();
        let b = entropy_check(&f, 3, 2000, 4, 11, Projection::Strict).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 4);
    }

    #[test]
    fn bernoulli_density_deviation_within_binomial_scale() {
        let p = 0.3;
        let rows = concentration_experiment(&bernoulli_factor(p).unwrap(), 3, &[10_000], 100, 5, Projection::Strict).unwrap();
        let bound = 4.0 * (p * (1.0 - p) / 10_000.0f64).sqrt();
        assert!(rows[0].pi1_max_deviation < bound, "{} vs {bound}", rows[0].pi1_max_deviation);
    }
}
