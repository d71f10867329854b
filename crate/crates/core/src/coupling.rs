//! Coupled copies of a percolation obtained by re-randomising the labels on a
//! Bernoulli subset of vertices, and the statistics built on them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::factor::{project_words, BlockFactor, Colour, Projection};
use crate::graph::RegularMultigraph;
use crate::labels::LabelField;
use crate::seed;
use crate::stats::{edge_profile_counts, EdgeProfile, Summary};

/// Runs a factor on a fixed graph, computing the tree-ball mask once.
pub struct Projector<'a> {
    factor: &'a BlockFactor,
    g: &'a RegularMultigraph,
    tree_mask: Option<Vec<bool>>,
}

impl<'a> Projector<'a> {
    pub fn new(factor: &'a BlockFactor, g: &'a RegularMultigraph, mode: Projection) -> Result<Self> {
        let tree_mask = (mode == Projection::Strict && factor.radius() > 0).then(|| g.tree_ball_mask(factor.radius()));
        if let Some(expected) = factor.arity().filter(|&a| a != g.d()) {
            return Err(Error::DegreeMismatch {
                expected,
                actual: g.d(),
            });
        }
        Ok(Projector { factor, g, tree_mask })
    }

    pub fn run(&self, words: &[u64]) -> Result<Vec<Colour>> {
        let mut colours = project_words(self.factor, self.g, words, Projection::Local)?;
        if let Some(mask) = &self.tree_mask {
            for (c, &tree) in colours.iter_mut().zip(mask) {
                if !tree {
                    *c = 0;
                }
            }
        }
        Ok(colours)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("resampling probability p = {p} outside [0, 1]")));
    }
    Ok(())
}

/// Base labels, the per-vertex uniforms behind the resampling mask, and the
/// fresh label stream for copy `i` (1-based).
#[derive(Debug, Clone)]
struct Sources {
    seed: u64,
    base: Vec<u64>,
    mask_uniforms: Vec<f64>,
}

impl Sources {
    fn new(n: usize, seed: u64) -> Self {
        let base = LabelField::sample(n, seed::derive(seed, "coupling-base", 0)).words().to_vec();
        let mut rng = seed::rng(seed, "coupling-mask", 0);
        let mask_uniforms = (0..n).map(|_| rng.random::<f64>()).collect();
        Sources {
            seed,
            base,
            mask_uniforms,
        }
    }

    fn mask(&self, p: f64) -> Vec<bool> {
        self.mask_uniforms.iter().map(|&u| u < p).collect()
    }

    fn fresh(&self, i: u64) -> Vec<u64> {
        LabelField::sample(self.base.len(), seed::derive(self.seed, "coupling-fresh", i))
            .words()
            .to_vec()
    }

    fn mixed(&self, mask: &[bool], i: u64) -> Vec<u64> {
        let fresh = self.fresh(i);
        self.base
            .iter()
            .zip(fresh)
            .zip(mask)
            .map(|((&b, f), &m)| if m { f } else { b })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingEnsemble {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub k: usize,
    pub factor: String,
    pub seed: u64,
    pub base_words: Vec<u64>,
    pub mask: Vec<bool>,
    /// `X^1 .. X^k`.
    pub fresh_words: Vec<Vec<u64>>,
    /// `Y^0`, from the base labels alone.
    pub base: Vec<Colour>,
    /// `Y^1 .. Y^k`.
    pub copies: Vec<Vec<Colour>>,
}

impl CouplingEnsemble {
    /// `W^i`, for `i` in `1..=k`.
    pub fn resampled_words(&self, i: usize) -> Vec<u64> {
        self.base_words
            .iter()
            .zip(&self.fresh_words[i - 1])
            .zip(&self.mask)
            .map(|((&b, &f), &m)| if m { f } else { b })
            .collect()
    }

    /// Colour of `v` in `{0,1}^k`: bit `i` set when `v` is in `Y^{i+1}`.
    pub fn joint_colour(&self, v: usize) -> Colour {
        self.copies
            .iter()
            .enumerate()
            .fold(0, |acc, (i, c)| acc | (Colour::from(c[v] == 1) << i))
    }

    /// Number of vertices in every copy listed in `copies` (0-based indices).
    pub fn intersection_count(&self, copies: &[usize]) -> usize {
        (0..self.n).filter(|&v| copies.iter().all(|&i| self.copies[i][v] == 1)).count()
    }
}

pub fn sample_ensemble(
    factor: &BlockFactor,
    g: &RegularMultigraph,
    p: f64,
    k: usize,
    seed: u64,
    mode: Projection,
) -> Result<CouplingEnsemble> {
    check_p(p)?;
    if k == 0 {
        return Err(invalid("need at least one coupled copy"));
    }
    let proj = Projector::new(factor, g, mode)?;
    let src = Sources::new(g.n(), seed);
    let mask = src.mask(p);
    let fresh_words: Vec<Vec<u64>> = (1..=k as u64).map(|i| src.fresh(i)).collect();
    let copies = (1..=k as u64)
        .into_par_iter()
        .map(|i| proj.run(&src.mixed(&mask, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CouplingEnsemble {
        n: g.n(),
        d: g.d(),
        p,
        k,
        factor: factor.to_string(),
        seed,
        base: proj.run(&src.base)?,
        base_words: src.base,
        mask,
        fresh_words,
        copies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectionDensities {
    pub d: usize,
    /// `raw[i-1]`: fraction of vertices in `Y^1 .. Y^i`.
    pub raw: Vec<f64>,
    /// `raw * d / ln d`.
    pub alpha: Vec<f64>,
}

pub fn intersection_densities(ens: &CouplingEnsemble) -> Result<IntersectionDensities> {
    if let Some(c) = ens.copies.iter().flatten().find(|&&c| c > 1) {
        return Err(invalid(format!("binary colourings expected, found colour {c}")));
    }
    let mut alive = vec![true; ens.n];
    let mut raw = Vec::with_capacity(ens.k);
    for copy in &ens.copies {
        let mut count = 0usize;
        for (a, &c) in alive.iter_mut().zip(copy) {
            *a &= c == 1;
            count += usize::from(*a);
        }
        raw.push(count as f64 / ens.n as f64);
    }
    let scale = ens.d as f64 / (ens.d as f64).ln();
    Ok(IntersectionDensities {
        d: ens.d,
        alpha: raw.iter().map(|r| r * scale).collect(),
        raw,
    })
}

/// The coupled process as a colouring with `2^k` colours, and its edge profile.
pub fn coupled_profile(ens: &CouplingEnsemble, g: &RegularMultigraph) -> Result<EdgeProfile> {
    if ens.k > 12 {
        return Err(invalid(format!("joint profile limited to k <= 12, got {}", ens.k)));
    }
    let colours: Vec<Colour> = (0..ens.n).map(|v| ens.joint_colour(v)).collect();
    edge_profile_counts(&colours, g, 1 << ens.k).map(EdgeProfile::from_counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityMethod {
    /// `alpha_{u+1} / alpha_1` from `k` coupled copies.
    AlphaRatio,
    /// Per-vertex resampling of `Q` conditioned on the base copy.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub u: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub per_trial: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityEstimate {
    pub method: StabilityMethod,
    pub moments: Vec<MomentEstimate>,
}

impl StabilityEstimate {
    pub fn moment(&self, u: f64) -> Option<&MomentEstimate> {
        self.moments.iter().find(|m| m.u == u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityOptions {
    /// Copies for the ratio estimator.
    pub k: usize,
    /// Fresh resamples per trial for the conditional estimator.
    pub m: usize,
    pub mode: Projection,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            k: 4,
            m: 64,
            mode: Projection::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub p: f64,
    pub trials: usize,
    pub alpha_ratio: StabilityEstimate,
    pub conditional: StabilityEstimate,
}

fn binomial_ratio(c: usize, m: usize, u: usize) -> f64 {
    // C(c, u) / C(m, u)
    (0..u).map(|j| (c as f64 - j as f64) / (m - j) as f64).product::<f64>().max(0.0)
}

/// Per-vertex estimate of `Q^u` from `c` hits out of `m` resamples: unbiased
/// `C(c,u)/C(m,u)` for integer `u <= m`, plug-in `(c/m)^u` otherwise.
pub fn q_power_estimate(c: usize, m: usize, u: f64) -> f64 {
    if u.fract() == 0.0 && u >= 0.0 && (u as usize) <= m {
        binomial_ratio(c, m, u as usize)
    } else {
        (c as f64 / m as f64).powf(u)
    }
}

/// Hit counts `c_v` over `m` resamples for the vertices in `Y^0`.
fn conditional_hits(proj: &Projector, src: &Sources, p: f64, m: usize) -> Result<Vec<usize>> {
    let base = proj.run(&src.base)?;
    let members: Vec<usize> = (0..base.len()).filter(|&v| base[v] == 1).collect();
    if members.is_empty() {
        return Err(Error::Estimation("the base copy is empty; E* is undefined".into()));
    }
    let mask = src.mask(p);
    if !mask.iter().any(|&b| b) {
        return Ok(vec![m; members.len()]);
    }
    (1..=m as u64)
        .into_par_iter()
        .map(|i| -> Result<Vec<usize>> {
            let y = proj.run(&src.mixed(&mask, i))?;
            Ok(members.iter().map(|&v| usize::from(y[v] == 1)).collect())
        })
        .try_reduce(
            || vec![0; members.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(a)
            },
        )
}

fn conditional_moments(hits: &[usize], m: usize, us: &[f64]) -> Vec<f64> {
    us.iter()
        .map(|&u| hits.iter().map(|&c| q_power_estimate(c, m, u)).sum::<f64>() / hits.len() as f64)
        .collect()
}

fn summarise(us: &[f64], per_trial: &[Vec<f64>], method: StabilityMethod) -> StabilityEstimate {
    let moments = us
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let xs: Vec<f64> = per_trial.iter().map(|t| t[j]).collect();
            let s = Summary::of(&xs);
            MomentEstimate {
                u,
                estimate: s.mean,
                stderr: s.stderr,
                per_trial: xs,
            }
        })
        .collect();
    StabilityEstimate { method, moments }
}

/// Both estimators of `E*[Q^u]`. The ratio estimator covers integer `u < k`;
/// each uses its own seeded stream of trials.
pub fn stability_moments(
    factor: &BlockFactor,
    g: &RegularMultigraph,
    p: f64,
    us: &[f64],
    trials: usize,
    seed: u64,
    opts: StabilityOptions,
) -> Result<StabilityReport> {
    check_p(p)?;
    if let Some(u) = us.iter().find(|&&u| !(u >= 0.0)) {
        return Err(invalid(format!("moment exponent {u} must be non-negative")));
    }
    if trials == 0 || opts.m == 0 || opts.k == 0 {
        return Err(invalid("trials, m and k must be positive"));
    }
    let proj = Projector::new(factor, g, opts.mode)?;
    let ratio_us: Vec<f64> = us
        .iter()
        .copied()
        .filter(|&u| u.fract() == 0.0 && (u as usize) < opts.k)
        .collect();

    let mut ratio_trials = Vec::with_capacity(trials);
    let mut cond_trials = Vec::with_capacity(trials);
    for t in 0..trials as u64 {
        let ens = sample_ensemble(factor, g, p, opts.k, seed::derive(seed, "alpha-ratio", t), opts.mode)?;
        let counts: Vec<usize> = (1..=opts.k)
            .map(|i| ens.intersection_count(&(0..i).collect::<Vec<_>>()))
            .collect();
        if counts[0] == 0 {
            return Err(Error::Estimation(format!("alpha_1 = 0 in trial {t}")));
        }
        ratio_trials.push(
            ratio_us
                .iter()
                .map(|&u| counts[u as usize] as f64 / counts[0] as f64)
                .collect::<Vec<_>>(),
        );

        let src = Sources::new(g.n(), seed::derive(seed, "conditional", t));
        let hits = conditional_hits(&proj, &src, p, opts.m)?;
        cond_trials.push(conditional_moments(&hits, opts.m, us));
    }
    Ok(StabilityReport {
        p,
        trials,
        alpha_ratio: summarise(&ratio_us, &ratio_trials, StabilityMethod::AlphaRatio),
        conditional: summarise(us, &cond_trials, StabilityMethod::Conditional),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub p: f64,
    pub achieved: f64,
    pub evaluations: usize,
    pub used_grid_search: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub trials: usize,
    pub m: usize,
    pub mode: Projection,
    pub max_evaluations: usize,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            trials: 2,
            m: 64,
            mode: Projection::Strict,
            max_evaluations: 60,
        }
    }
}

/// Finds `p` with `|E*[Q^u](p) - target| <= tolerance`. Every evaluation reuses
/// the same labels and mask uniforms, so the estimate is a deterministic
/// function of `p`.
pub fn tune_p(
    factor: &BlockFactor,
    g: &RegularMultigraph,
    u: f64,
    target: f64,
    tolerance: f64,
    seed: u64,
    opts: TuneOptions,
) -> Result<TuneResult> {
    if !(tolerance > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let proj = Projector::new(factor, g, opts.mode)?;
    let sources: Vec<Sources> = (0..opts.trials as u64)
        .map(|t| Sources::new(g.n(), seed::derive(seed, "tune", t)))
        .collect();
    let evaluations = std::cell::Cell::new(0usize);
    let eval = |p: f64| -> Result<f64> {
        evaluations.set(evaluations.get() + 1);
        let mut total = 0.0;
        for src in &sources {
            total += conditional_moments(&conditional_hits(&proj, src, p, opts.m)?, opts.m, &[u])[0];
        }
        Ok(total / sources.len() as f64)
    };
    let close = |v: f64| (v - target).abs() <= tolerance;

    let (mut lo, mut f_lo) = (0.0, eval(0.0)?);
    if close(f_lo) {
        return Ok(TuneResult { p: 0.0, achieved: f_lo, evaluations: 1, used_grid_search: false });
    }
    let (mut hi, mut f_hi) = (1.0, eval(1.0)?);
    if close(f_hi) {
        return Ok(TuneResult { p: 1.0, achieved: f_hi, evaluations: 2, used_grid_search: false });
    }
    if !(target < f_lo && target > f_hi) {
        return Err(invalid(format!(
            "target {target} outside the attainable range [{f_hi}, {f_lo}]"
        )));
    }
    let mut used_grid_search = false;
    while evaluations.get() < opts.max_evaluations {
        let mid = 0.5 * (lo + hi);
        let f_mid = eval(mid)?;
        if close(f_mid) {
            return Ok(TuneResult { p: mid, achieved: f_mid, evaluations: evaluations.get(), used_grid_search });
        }
        if f_mid > f_lo || f_mid < f_hi {
            // Not monotone on this bracket: scan it and keep a sub-bracket that straddles the target.
            used_grid_search = true;
            let mut prev = (lo, f_lo);
            let mut found = None;
            for s in 1..=16 {
                let x = lo + (hi - lo) * s as f64 / 16.0;
                let fx = eval(x)?;
                if close(fx) {
                    return Ok(TuneResult { p: x, achieved: fx, evaluations: evaluations.get(), used_grid_search });
                }
                if (prev.1 - target) * (fx - target) < 0.0 {
                    found = Some((prev, (x, fx)));
                    break;
                }
                prev = (x, fx);
            }
            let ((a, fa), (b, fb)) = found.ok_or_else(|| Error::Estimation("grid search lost the target".into()))?;
            // Orient so that f_lo > target > f_hi holds again.
            if fa > fb {
                (lo, f_lo, hi, f_hi) = (a, fa, b, fb);
            } else {
                (lo, f_lo, hi, f_hi) = (b, fb, a, fa);
            }
            continue;
        }
        if f_mid > target {
            (lo, f_lo) = (mid, f_mid);
        } else {
            (hi, f_hi) = (mid, f_mid);
        }
    }
    Err(Error::Estimation(format!(
        "no p within {tolerance} of {target} after {} evaluations",
        evaluations.get()
    )))
}

/// Values indexed by subset bitmask of `{1..k}`; index 0 is unused.
pub type SubsetFunction = Vec<f64>;

fn check_subset_len(values: &[f64], k: usize) -> Result<()> {
    if !(1..=12).contains(&k) {
        return Err(invalid(format!("k = {k} outside 1..=12")));
    }
    if values.len() != 1 << k {
        return Err(invalid(format!("expected {} subset values, got {}", 1 << k, values.len())));
    }
    Ok(())
}

/// `alpha(S) = sum_{T >= S} beta(T)`.
pub fn alpha_from_beta(beta: &[f64], k: usize) -> Result<SubsetFunction> {
    check_subset_len(beta, k)?;
    let mut a = beta.to_vec();
    a[0] = 0.0;
    for bit in 0..k {
        for s in 1..a.len() {
            if s & (1 << bit) == 0 {
                a[s] += a[s | (1 << bit)];
            }
        }
    }
    a[0] = 0.0;
    Ok(a)
}

/// `beta(S) = sum_{T >= S} (-1)^{|T \ S|} alpha(T)`.
pub fn beta_from_alpha(alpha: &[f64], k: usize) -> Result<SubsetFunction> {
    check_subset_len(alpha, k)?;
    let mut b = alpha.to_vec();
    b[0] = 0.0;
    for bit in 0..k {
        for s in 1..b.len() {
            if s & (1 << bit) == 0 {
                b[s] -= b[s | (1 << bit)];
            }
        }
    }
    b[0] = 0.0;
    Ok(b)
}

pub fn binomial(k: usize, i: usize) -> f64 {
    (0..i).fold(1.0, |acc, j| acc * (k - j) as f64 / (j + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
}

/// Both sides of the inclusion-exclusion identity for an exchangeable `beta`,
/// the left by direct enumeration of subset pairs.
pub fn lemma_identity_check(beta: &[f64], k: usize) -> Result<IdentityCheck> {
    check_subset_len(beta, k)?;
    if k > 10 {
        return Err(invalid(format!("identity check limited to k <= 10, got {k}")));
    }
    let scale = beta.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for s in 1..beta.len() {
        let rep = (1usize << (s.count_ones() as usize)) - 1;
        if (beta[s] - beta[rep]).abs() > 1e-12 * scale {
            return Err(invalid(format!(
                "beta is not exchangeable: subset {s:#b} differs from {rep:#b}"
            )));
        }
    }
    let total: f64 = beta[1..].iter().sum();
    let mut overlap = 0.0;
    for s in 1..beta.len() {
        for t in 1..beta.len() {
            if s & t != 0 {
                overlap += beta[s] * beta[t];
            }
        }
    }
    let lhs = total - 0.5 * overlap;
    let alpha = alpha_from_beta(beta, k)?;
    let rhs = (1..=k)
        .map(|i| {
            let a = alpha[(1 << i) - 1];
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            sign * binomial(k, i) * (a - 0.5 * a * a)
        })
        .sum();
    Ok(IdentityCheck { lhs, rhs })
}

/// `(1 - (1-x)^k) / x`, equal to `1 + (1-x) + ... + (1-x)^{k-1}`.
pub fn s_k(x: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || k == 0 {
        return Err(invalid(format!("s_k needs x in [0,1] and k >= 1, got x = {x}, k = {k}")));
    }
    let y = 1.0 - x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..k {
        sum += term;
        term *= y;
    }
    Ok(sum)
}

/// `alpha_1 E[s_k(Q)] - (alpha_1^2 / 2) E[s_k(QR)]` with `R` an independent copy of `Q`.
pub fn qinq_functional(alpha1: f64, q: &[f64], r: &[f64], k: usize) -> Result<f64> {
    if q.is_empty() || q.len() != r.len() {
        return Err(invalid("Q and R samples must be non-empty and of equal length"));
    }
    let mut first = 0.0;
    let mut second = 0.0;
    for (&a, &b) in q.iter().zip(r) {
        first += s_k(a, k)?;
        second += s_k(a * b, k)?;
    }
    let len = q.len() as f64;
    Ok(alpha1 * first / len - alpha1 * alpha1 / 2.0 * second / len)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapBound {
    /// Largest `P(S, T)` over joint colours with `S` and `T` sharing a copy.
    pub max_overlap: f64,
    /// Largest `P(1,1)` of a single copy, i.e. `corr * density^2`.
    pub max_single: f64,
}

/// `P(S,T)` with `S` and `T` sharing copy `i` is at most `P_i(1,1)`.
pub fn overlap_bound(ens: &CouplingEnsemble, g: &RegularMultigraph) -> Result<OverlapBound> {
    let prof = coupled_profile(ens, g)?;
    let c = prof.colours;
    let mut max_overlap = 0.0f64;
    for s in 1..c {
        for t in 1..c {
            if s & t != 0 {
                max_overlap = max_overlap.max(prof.p(s, t));
            }
        }
    }
    let mut max_single = 0.0f64;
    for copy in &ens.copies {
        let counts = edge_profile_counts(copy, g, 2)?;
        max_single = max_single.max(counts.pair(1, 1) as f64 / counts.directed_edges() as f64);
    }
    Ok(OverlapBound {
        max_overlap,
        max_single,
    })
}
