//! Block factors and their projection onto finite graphs.
//!
//! Every factor is written as a synchronous local rule over a [`LocalView`].
//! Running the rule on an extracted tree ball and reading the root gives the
//! factor's value on the tree; running it on the whole graph gives the value
//! at every vertex whose ball is a tree in one pass.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{RegularMultigraph, RootedBall};
use crate::labels::{Channel, LabelField};
use crate::local::{Adjacency, LocalView};

pub type Colour = u16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockFactor {
    /// Radius 0: `1{label <= p}`.
    Bernoulli { p: f64 },
    /// Radius 1: join iff the label is strictly below every neighbour's label.
    LocalMinIs,
    /// Candidate/confirm growth of an independent set.
    Nibble { rounds: usize, rate: f64 },
    /// Per vertex, with probability `p` the base independent set, otherwise
    /// Bernoulli of density `x * ln(d) / d`.
    Interpolate {
        base: Box<BlockFactor>,
        x: f64,
        p: f64,
        d: usize,
    },
}

pub fn bernoulli_factor(p: f64) -> Result<BlockFactor> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("bernoulli density p={p} outside [0, 1]")));
    }
    Ok(BlockFactor::Bernoulli { p })
}

pub fn local_min_is() -> BlockFactor {
    BlockFactor::LocalMinIs
}

pub fn nibble_is(rounds: usize, rate: f64) -> Result<BlockFactor> {
    if rounds == 0 {
        return Err(invalid("nibble needs at least one round"));
    }
    if !(rate > 0.0 && rate < 1.0) {
        return Err(invalid(format!("nibble rate={rate} outside (0, 1)")));
    }
    Ok(BlockFactor::Nibble { rounds, rate })
}

/// The nibble schedule used when a run asks for a degree-tuned nibble:
/// candidate rate `1/d` for `3d` rounds.
pub fn nibble_tuned(d: usize) -> Result<BlockFactor> {
    if d < 2 {
        return Err(invalid(format!("tuned nibble needs d >= 2, got {d}")));
    }
    nibble_is(3 * d, 1.0 / d as f64)
}

pub fn interpolate_factor(is_factor: BlockFactor, x: f64, p: f64, d: usize) -> Result<BlockFactor> {
    if !is_factor.produces_independent_sets() {
        return Err(invalid(format!(
            "interpolation base must be an independent-set factor, got {is_factor}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("mixing probability p={p} outside [0, 1]")));
    }
    if d < 2 {
        return Err(invalid(format!("interpolation needs d >= 2, got {d}")));
    }
    if !(x >= 0.0) {
        return Err(invalid(format!("x={x} must be non-negative")));
    }
    Ok(BlockFactor::Interpolate {
        base: Box::new(is_factor),
        x,
        p,
        d,
    })
}

/// Density of the Bernoulli side of an interpolation, `x ln(d) / d` capped at 1.
pub fn interpolation_coin_density(x: f64, d: usize) -> f64 {
    (x * (d as f64).ln() / d as f64).min(1.0)
}

impl BlockFactor {
    pub fn radius(&self) -> usize {
        match self {
            BlockFactor::Bernoulli { .. } => 0,
            BlockFactor::LocalMinIs => 1,
            BlockFactor::Nibble { rounds, .. } => 2 * rounds - 1,
            BlockFactor::Interpolate { base, .. } => base.radius(),
        }
    }

    /// Number of colours `q + 1`.
    pub fn colours(&self) -> usize {
        2
    }

    pub fn name(&self) -> &'static str {
        match self {
            BlockFactor::Bernoulli { .. } => "bernoulli",
            BlockFactor::LocalMinIs => "localmin",
            BlockFactor::Nibble { .. } => "nibble",
            BlockFactor::Interpolate { .. } => "interpolate",
        }
    }

    /// Degree the factor was built for, if it depends on one.
    pub fn arity(&self) -> Option<usize> {
        match self {
            BlockFactor::Interpolate { d, .. } => Some(*d),
            _ => None,
        }
    }

    pub fn produces_independent_sets(&self) -> bool {
        matches!(self, BlockFactor::LocalMinIs | BlockFactor::Nibble { .. })
    }

    /// Runs the rule on every vertex of `view`. `words[v]` is the label word of `v`.
    pub fn run_local<G: LocalView>(&self, view: &G, words: &[u64], ch: Channel) -> Vec<Colour> {
        let n = view.vertex_count();
        debug_assert_eq!(words.len(), n);
        match self {
            BlockFactor::Bernoulli { p } => words
                .iter()
                .map(|&w| Colour::from(ch.uniform(w) <= *p))
                .collect(),
            BlockFactor::LocalMinIs => {
                let keys: Vec<u64> = words.iter().map(|&w| ch.word(w)).collect();
                (0..n)
                    .map(|v| Colour::from(view.neighbours(v).all(|u| keys[u] > keys[v])))
                    .collect()
            }
            BlockFactor::Nibble { rounds, rate } => run_nibble(view, words, ch, *rounds, *rate),
            BlockFactor::Interpolate { base, x, p, d } => {
                let from_base = base.run_local(view, words, ch);
                let density = interpolation_coin_density(*x, *d);
                let choice = ch.child("interpolate-choice");
                let coin = ch.child("interpolate-bernoulli");
                words
                    .iter()
                    .zip(from_base)
                    .map(|(&w, b)| {
                        if choice.uniform(w) < *p {
                            b
                        } else {
                            Colour::from(coin.uniform(w) <= density)
                        }
                    })
                    .collect()
            }
        }
    }
}

fn run_nibble<G: LocalView>(view: &G, words: &[u64], ch: Channel, rounds: usize, rate: f64) -> Vec<Colour> {
    let n = view.vertex_count();
    let mut in_set = vec![false; n];
    let mut blocked = vec![false; n];
    let mut candidate = vec![false; n];
    let mut joined = Vec::new();
    for t in 0..rounds {
        let coin = ch.indexed("nibble-round", t as u64);
        for v in 0..n {
            candidate[v] = !in_set[v] && !blocked[v] && coin.uniform(words[v]) < rate;
        }
        joined.clear();
        for v in 0..n {
            if candidate[v] && view.neighbours(v).all(|u| !candidate[u]) {
                joined.push(v);
            }
        }
        for &v in &joined {
            in_set[v] = true;
            for u in view.neighbours(v) {
                blocked[u] = true;
            }
        }
    }
    in_set.into_iter().map(Colour::from).collect()
}

impl fmt::Display for BlockFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockFactor::Bernoulli { p } => write!(f, "bernoulli:p={p}"),
            BlockFactor::LocalMinIs => write!(f, "localmin"),
            BlockFactor::Nibble { rounds, rate } => write!(f, "nibble:rounds={rounds},rate={rate}"),
            BlockFactor::Interpolate { base, x, p, d } => {
                write!(f, "interpolate:x={x},p={p},d={d},base={}", base.name())?;
                if let BlockFactor::Nibble { rounds, rate } = base.as_ref() {
                    write!(f, ",rounds={rounds},rate={rate}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `name[:k=v,...]`, e.g. `bernoulli:p=0.3`, `nibble:rounds=40,rate=0.05`,
/// `nibble:d=10` (degree-tuned), `interpolate:base=nibble,d=10,c=0.5,p=0.9`.
impl FromStr for BlockFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params: Vec<(String, String)> = Vec::new();
        for item in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("factor parameter {item:?} is not key=value")))?;
            params.push((k.trim().to_string(), v.trim().to_string()));
        }
        let get = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let num = |key: &str| -> Result<Option<f64>> {
            get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("factor field {key}: {v:?} is not a number")))
                })
                .transpose()
        };
        let int = |key: &str| -> Result<Option<usize>> {
            get(key)
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("factor field {key}: {v:?} is not an integer")))
                })
                .transpose()
        };
        let known = |allowed: &[&str]| -> Result<()> {
            match params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
                Some((k, _)) => Err(Error::Parse(format!("unknown factor field {k:?} for {name}"))),
                None => Ok(()),
            }
        };
        let nibble = |allow_d: bool| -> Result<BlockFactor> {
            match (int("rounds")?, num("rate")?, if allow_d { int("d")? } else { None }) {
                (Some(rounds), Some(rate), _) => nibble_is(rounds, rate),
                (None, None, Some(d)) => nibble_tuned(d),
                _ => Err(Error::Parse(
                    "nibble needs rounds= and rate=, or d= for the tuned schedule".into(),
                )),
            }
        };
        match name.trim() {
            "bernoulli" => {
                known(&["p"])?;
                bernoulli_factor(num("p")?.ok_or_else(|| Error::Parse("bernoulli needs p=".into()))?)
            }
            "localmin" | "local_min_is" => {
                known(&[])?;
                Ok(local_min_is())
            }
            "nibble" | "nibble_is" => {
                known(&["rounds", "rate", "d"])?;
                nibble(true)
            }
            "interpolate" => {
                known(&["base", "rounds", "rate", "d", "x", "c", "p"])?;
                let d = int("d")?.ok_or_else(|| Error::Parse("interpolate needs d=".into()))?;
                let p = num("p")?.ok_or_else(|| Error::Parse("interpolate needs p=".into()))?;
                let base = match get("base").unwrap_or("nibble") {
                    "localmin" | "local_min_is" => local_min_is(),
                    "nibble" | "nibble_is" => match (int("rounds")?, num("rate")?) {
                        (Some(rounds), Some(rate)) => nibble_is(rounds, rate)?,
                        (None, None) => nibble_tuned(d)?,
                        _ => return Err(Error::Parse("give both rounds= and rate= or neither".into())),
                    },
                    other => return Err(Error::Parse(format!("unknown interpolation base {other:?}"))),
                };
                let x = match (num("x")?, num("c")?) {
                    (Some(x), None) => x,
                    (None, Some(c)) => crate::bounds::interpolation_params(c, p)?.x,
                    _ => return Err(Error::Parse("interpolate needs exactly one of x= or c=".into())),
                };
                interpolate_factor(base, x, p, d)
            }
            other => Err(Error::Parse(format!("unknown factor {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Vertices whose r-ball is not a tree get colour 0.
    #[default]
    Strict,
    /// The rule runs directly on the graph at every vertex.
    Local,
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Projection::Strict),
            "local" => Ok(Projection::Local),
            other => Err(Error::Parse(format!("unknown projection mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoringField {
    pub colours: Vec<Colour>,
    pub factor: String,
    pub projection: Projection,
    pub graph_seed: Option<u64>,
    pub label_seed: u64,
}

impl ColoringField {
    pub fn len(&self) -> usize {
        self.colours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colours.is_empty()
    }

    pub fn with_graph_seed(mut self, seed: u64) -> Self {
        self.graph_seed = Some(seed);
        self
    }
}

pub fn project(
    factor: &BlockFactor,
    g: &RegularMultigraph,
    labels: &LabelField,
    mode: Projection,
) -> Result<ColoringField> {
    let colours = project_words(factor, g, labels.words(), mode)?;
    Ok(ColoringField {
        colours,
        factor: factor.to_string(),
        projection: mode,
        graph_seed: None,
        label_seed: labels.seed(),
    })
}

/// Projection on a raw word vector; used by the coupling code, which builds
/// mixed labellings without a seed of their own.
pub fn project_words(
    factor: &BlockFactor,
    g: &RegularMultigraph,
    words: &[u64],
    mode: Projection,
) -> Result<Vec<Colour>> {
    if let Some(expected) = factor.arity() {
        if expected != g.d() {
            return Err(Error::DegreeMismatch {
                expected,
                actual: g.d(),
            });
        }
    }
    if words.len() != g.n() {
        return Err(invalid(format!(
            "label field has {} entries for a graph on {} vertices",
            words.len(),
            g.n()
        )));
    }
    let mut colours = factor.run_local(g, words, Channel::ROOT);
    if mode == Projection::Strict {
        let r = factor.radius();
        if r > 0 {
            for (c, tree) in colours.iter_mut().zip(g.tree_ball_mask(r)) {
                if !tree {
                    *c = 0;
                }
            }
        }
    }
    Ok(colours)
}

/// A ball with a label word per local vertex; local index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledBall {
    pub adjacency: Adjacency,
    pub depth: Vec<usize>,
    pub words: Vec<u64>,
    pub radius: usize,
    pub is_tree: bool,
}

impl LabelledBall {
    pub fn from_ball(ball: &RootedBall, labels: &LabelField) -> Self {
        LabelledBall {
            adjacency: ball.adjacency(),
            depth: ball.distance.clone(),
            words: ball.vertices.iter().map(|&v| labels.words()[v]).collect(),
            radius: ball.radius,
            is_tree: ball.is_tree,
        }
    }

    /// A copy of `T_{d,r}` with iid label words, children in BFS order.
    pub fn random_tree<R: Rng>(d: usize, r: usize, rng: &mut R) -> Self {
        let mut edges = Vec::new();
        let mut depth = vec![0];
        let mut head = 0;
        while head < depth.len() {
            if depth[head] < r {
                let children = if head == 0 { d } else { d - 1 };
                for _ in 0..children {
                    depth.push(depth[head] + 1);
                    edges.push((head, depth.len() - 1));
                }
            }
            head += 1;
        }
        let words = (0..depth.len()).map(|_| rng.random::<u64>()).collect();
        LabelledBall {
            adjacency: Adjacency::from_edges(depth.len(), &edges),
            depth,
            words,
            radius: r,
            is_tree: true,
        }
    }
}

pub fn evaluate_on_tree_ball(factor: &BlockFactor, ball: &LabelledBall) -> Result<Colour> {
    if !ball.is_tree {
        return Err(Error::NotATree("ball contains a cycle".into()));
    }
    if ball.radius < factor.radius() {
        return Err(invalid(format!(
            "ball radius {} is smaller than factor radius {}",
            ball.radius,
            factor.radius()
        )));
    }
    if let Some(d) = factor.arity() {
        let deg = ball.adjacency.degree(0);
        if ball.radius > 0 && deg != d {
            return Err(Error::DegreeMismatch {
                expected: d,
                actual: deg,
            });
        }
    }
    Ok(factor.run_local(&ball.adjacency, &ball.words, Channel::ROOT)[0])
}

/// Reference projection: extracts every ball and evaluates it separately.
/// Exponential in the radius; intended as an oracle for [`project`].
pub fn project_by_balls(
    factor: &BlockFactor,
    g: &RegularMultigraph,
    labels: &LabelField,
) -> Result<Vec<Colour>> {
    let r = factor.radius();
    (0..g.n())
        .map(|v| {
            let ball = g.neighborhood(v, r)?;
            if ball.is_tree {
                evaluate_on_tree_ball(factor, &LabelledBall::from_ball(&ball, labels))
            } else {
                Ok(0)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::seq::SliceRandom;

    fn density(c: &[Colour]) -> f64 {
        c.iter().filter(|&&x| x == 1).count() as f64 / c.len() as f64
    }

    fn builtins() -> Vec<BlockFactor> {
        vec![
            bernoulli_factor(0.3).unwrap(),
            local_min_is(),
            nibble_is(1, 0.2).unwrap(),
            nibble_is(2, 0.3).unwrap(),
            interpolate_factor(local_min_is(), 1.0, 0.6, 3).unwrap(),
            interpolate_factor(nibble_is(2, 0.25).unwrap(), 0.5, 0.5, 3).unwrap(),
        ]
    }

    #[test]
    fn bernoulli_endpoints_and_graph_independence() {
        let g = RegularMultigraph::sample(1000, 3, 1).unwrap();
        let labels = LabelField::sample(1000, 2);
        let zero = project(&bernoulli_factor(0.0).unwrap(), &g, &labels, Projection::Strict).unwrap();
        assert!(zero.colours.iter().all(|&c| c == 0));
        let one = project(&bernoulli_factor(1.0).unwrap(), &g, &labels, Projection::Strict).unwrap();
        assert!(one.colours.iter().all(|&c| c == 1));
        let f = bernoulli_factor(0.3).unwrap();
        let c = project(&f, &g, &labels, Projection::Strict).unwrap();
        for v in 0..g.n() {
            assert_eq!(c.colours[v], Colour::from(labels.value(v) <= 0.3));
        }
        assert!(bernoulli_factor(1.5).is_err());
    }

    #[test]
    fn local_min_on_small_balls() {
        // Root with three children; root label smallest.
        let mut ball = LabelledBall::random_tree(3, 1, &mut seed::rng(0, "t", 0));
        let word = |x: f64| (x * (1u64 << 53) as f64) as u64 * 2048;
        ball.words = vec![word(0.1), word(0.5), word(0.9), word(0.7)];
        assert_eq!(evaluate_on_tree_ball(&local_min_is(), &ball).unwrap(), 1);
        ball.words = vec![word(0.95), word(0.5), word(0.9), word(0.7)];
        assert_eq!(evaluate_on_tree_ball(&local_min_is(), &ball).unwrap(), 0);
        // Tie with a neighbour is not a local minimum.
        ball.words = vec![word(0.5), word(0.5), word(0.9), word(0.7)];
        assert_eq!(evaluate_on_tree_ball(&local_min_is(), &ball).unwrap(), 0);
    }

    #[test]
    fn loop_vertex_gets_zero() {
        let g = RegularMultigraph::sample(1, 2, 0).unwrap();
        let labels = LabelField::sample(1, 0);
        for mode in [Projection::Strict, Projection::Local] {
            assert_eq!(project(&local_min_is(), &g, &labels, mode).unwrap().colours, vec![0]);
        }
        let ball = LabelledBall::from_ball(&g.neighborhood(0, 1).unwrap(), &labels);
        assert!(matches!(
            evaluate_on_tree_ball(&local_min_is(), &ball),
            Err(Error::NotATree(_))
        ));
    }

    #[test]
    fn strict_projection_matches_ball_by_ball_evaluation() {
        for (i, f) in builtins().into_iter().enumerate() {
            for s in 0..3 {
                let g = RegularMultigraph::sample(400, 3, 100 * i as u64 + s).unwrap();
                let labels = LabelField::sample(400, s);
                let fast = project(&f, &g, &labels, Projection::Strict).unwrap();
                let slow = project_by_balls(&f, &g, &labels).unwrap();
                assert_eq!(fast.colours, slow, "factor {f}");
            }
        }
    }

    #[test]
    fn local_agrees_with_strict_on_tree_balls() {
        for f in builtins() {
            let g = RegularMultigraph::sample(2000, 3, 9).unwrap();
            let labels = LabelField::sample(2000, 4);
            let strict = project(&f, &g, &labels, Projection::Strict).unwrap();
            let local = project(&f, &g, &labels, Projection::Local).unwrap();
            let mask = g.tree_ball_mask(f.radius());
            for v in 0..g.n() {
                if mask[v] {
                    assert_eq!(strict.colours[v], local.colours[v]);
                } else {
                    assert_eq!(strict.colours[v], 0);
                }
            }
        }
    }

    #[test]
    fn automorphism_invariance() {
        let mut rng = seed::rng(3, "automorphism", 0);
        for f in builtins() {
            let r = f.radius();
            for _ in 0..1000 {
                let ball = LabelledBall::random_tree(3, r, &mut rng);
                let want = evaluate_on_tree_ball(&f, &ball).unwrap();
                // Relabel non-root vertices and shuffle every adjacency list.
                let n = ball.words.len();
                let mut perm: Vec<usize> = (0..n).collect();
                perm[1..].shuffle(&mut rng);
                let mut shuffle_rng = seed::rng(rng.random(), "lists", 0);
                let adjacency = ball
                    .adjacency
                    .relabelled(&perm, |list| list.shuffle(&mut shuffle_rng));
                let mut words = vec![0; n];
                let mut depth = vec![0; n];
                for v in 0..n {
                    words[perm[v]] = ball.words[v];
                    depth[perm[v]] = ball.depth[v];
                }
                let permuted = LabelledBall {
                    adjacency,
                    depth,
                    words,
                    radius: r,
                    is_tree: true,
                };
                assert_eq!(evaluate_on_tree_ball(&f, &permuted).unwrap(), want, "factor {f}");
            }
        }
    }

    #[test]
    fn locality_outside_radius() {
        let mut rng = seed::rng(4, "locality", 0);
        for f in builtins() {
            let r = f.radius();
            for _ in 0..200 {
                let big = LabelledBall::random_tree(3, r + 2, &mut rng);
                let want = f.run_local(&big.adjacency, &big.words, Channel::ROOT)[0];
                let mut changed = big.clone();
                for v in 0..changed.words.len() {
                    if changed.depth[v] > r {
                        changed.words[v] = rng.random();
                    }
                }
                let got = f.run_local(&changed.adjacency, &changed.words, Channel::ROOT)[0];
                assert_eq!(got, want, "factor {f}");
            }
        }
    }

    #[test]
    fn independence_on_tree_balls() {
        for f in [local_min_is(), nibble_is(3, 0.2).unwrap(), nibble_tuned(4).unwrap()] {
            for mode in [Projection::Strict, Projection::Local] {
                let g = RegularMultigraph::sample(5000, 4, 2).unwrap();
                let labels = LabelField::sample(5000, 3);
                let c = project(&f, &g, &labels, mode).unwrap().colours;
                let mask = g.tree_ball_mask(f.radius() + 1);
                for (a, b) in g.edges() {
                    if mode == Projection::Local || (mask[a] && mask[b]) {
                        assert!(!(c[a] == 1 && c[b] == 1), "adjacent pair in {f} ({mode:?})");
                    }
                }
            }
        }
    }

    #[test]
    fn determinism() {
        let g = RegularMultigraph::sample(3000, 3, 5).unwrap();
        for f in builtins() {
            let a = project(&f, &g, &LabelField::sample(3000, 8), Projection::Strict).unwrap();
            let b = project(&f, &g, &LabelField::sample(3000, 8), Projection::Strict).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn degree_mismatch_rejected() {
        let g = RegularMultigraph::sample(10, 4, 5).unwrap();
        let f = interpolate_factor(local_min_is(), 1.0, 0.5, 3).unwrap();
        let labels = LabelField::sample(10, 1);
        assert!(matches!(
            project(&f, &g, &labels, Projection::Strict),
            Err(Error::DegreeMismatch { expected: 3, actual: 4 })
        ));
    }

    #[test]
    fn interpolation_endpoints() {
        let g = RegularMultigraph::sample(20_000, 3, 5).unwrap();
        let labels = LabelField::sample(20_000, 6);
        let base = nibble_is(2, 0.3).unwrap();
        let full = interpolate_factor(base.clone(), 2.0, 1.0, 3).unwrap();
        assert_eq!(
            project(&full, &g, &labels, Projection::Strict).unwrap().colours,
            project(&base, &g, &labels, Projection::Strict).unwrap().colours
        );
        let none = interpolate_factor(base, 2.0, 0.0, 3).unwrap();
        let c = project(&none, &g, &labels, Projection::Strict).unwrap().colours;
        let target = 2.0 * 3f64.ln() / 3.0;
        assert!((density(&c) - target).abs() < 0.015, "{}", density(&c));
        assert_eq!(interpolation_coin_density(3.0, 3), 1.0);
        assert!(interpolate_factor(bernoulli_factor(0.2).unwrap(), 1.0, 0.5, 3).is_err());
    }

    #[test]
    fn local_min_density_is_one_over_d_plus_one() {
        let g = RegularMultigraph::sample(100_000, 3, 12).unwrap();
        let labels = LabelField::sample(100_000, 13);
        let c = project(&local_min_is(), &g, &labels, Projection::Strict).unwrap();
        assert!((density(&c.colours) - 0.25).abs() < 0.005);
    }

    #[test]
    fn bernoulli_density() {
        let g = RegularMultigraph::sample(100_000, 3, 12).unwrap();
        let labels = LabelField::sample(100_000, 14);
        let c = project(&bernoulli_factor(0.3).unwrap(), &g, &labels, Projection::Strict).unwrap();
        assert!((density(&c.colours) - 0.3).abs() < 0.005);
    }

    #[test]
    fn single_round_nibble_density() {
        // A candidate joins iff none of its d neighbours is a candidate.
        let (d, rate) = (3usize, 0.2f64);
        let want = rate * (1.0 - rate).powi(d as i32);
        let g = RegularMultigraph::sample(100_000, d, 21).unwrap();
        let labels = LabelField::sample(100_000, 22);
        let c = project(&nibble_is(1, rate).unwrap(), &g, &labels, Projection::Strict).unwrap();
        // Binomial standard error at n = 1e5 is about 0.001.
        assert!((density(&c.colours) - want).abs() < 0.004, "{} vs {want}", density(&c.colours));
    }

    #[test]
    fn nibble_density_grows_with_rounds_and_vanishes_with_rate() {
        let g = RegularMultigraph::sample(50_000, 5, 1).unwrap();
        let labels = LabelField::sample(50_000, 2);
        let mut last = 0.0;
        for rounds in [1, 2, 4, 8, 16] {
            let c = project(&nibble_is(rounds, 0.2).unwrap(), &g, &labels, Projection::Local).unwrap();
            let dens = density(&c.colours);
            assert!(dens >= last, "rounds={rounds}: {dens} < {last}");
            last = dens;
        }
        let c = project(&nibble_is(8, 1e-5).unwrap(), &g, &labels, Projection::Local).unwrap();
        assert!(density(&c.colours) < 0.001);
    }

    #[test]
    fn tuned_nibble_reaches_large_density_at_d20() {
        let d = 20;
        let g = RegularMultigraph::sample(100_000, d, 3).unwrap();
        let labels = LabelField::sample(100_000, 4);
        let f = nibble_is(40, 1.0 / d as f64).unwrap();
        let c = project(&f, &g, &labels, Projection::Local).unwrap();
        let scale = (d as f64).ln() / d as f64;
        assert!(density(&c.colours) >= 0.6 * scale, "{}", density(&c.colours) / scale);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for s in [
            "bernoulli:p=0.3",
            "localmin",
            "nibble:rounds=40,rate=0.05",
            "interpolate:x=1.5,p=0.9,d=10,base=nibble,rounds=20,rate=0.1",
            "interpolate:x=0.5,p=0.5,d=3,base=localmin",
        ] {
            let f: BlockFactor = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
            assert_eq!(f.to_string().parse::<BlockFactor>().unwrap(), f);
        }
        let tuned: BlockFactor = "nibble:d=10".parse().unwrap();
        assert_eq!(tuned, nibble_tuned(10).unwrap());
        let via_c: BlockFactor = "interpolate:base=localmin,d=10,c=0.75,p=0.5".parse().unwrap();
        match via_c {
            BlockFactor::Interpolate { x, .. } => assert!((x - 1.0).abs() < 1e-12),
            _ => unreachable!(),
        }
        for bad in ["bogus", "bernoulli", "bernoulli:p=x", "bernoulli:q=0.1", "nibble:rounds=3", "localmin:p=1"] {
            assert!(bad.parse::<BlockFactor>().is_err(), "{bad}");
        }
    }
}
