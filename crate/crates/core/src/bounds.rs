//! Closed-form density bounds, the entropy-functional upper bounds and the
//! interpolation parameters.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::stats::{entropy, h, EdgeProfile};

/// `Psi(c) = 1 - c + c ln c`, with `Psi(0) = 1`.
pub fn psi(c: f64) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(invalid(format!("Psi is defined for finite c >= 0, got {c}")));
    }
    Ok(1.0 - c - h(c))
}

fn ln_ln(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::Hypothesis(format!("d must be at least 3 for ln ln d > 0, got {d}")));
    }
    Ok((d as f64).ln().ln())
}

fn psi_positive(c: f64) -> Result<f64> {
    let v = psi(c)?;
    if v <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "correlation ratio c = {c} gives Psi(c) = 0; the bound needs c != 1"
        )));
    }
    Ok(v)
}

/// `ln d - ln ln d + 1 + ln Psi(c) + eps`.
pub fn bound_bracket(c: f64, d: usize, eps: f64) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(invalid(format!("eps must be non-negative, got {eps}")));
    }
    let l = ln_ln(d)?;
    Ok((d as f64).ln() - l + 1.0 + psi_positive(c)?.ln() + eps)
}

/// Upper bound on the density of a percolation with correlation ratio `c`:
/// `2 / (Psi(c) d) * (ln d - ln ln d + 1 + ln Psi(c) + eps)`.
pub fn corr_density_bound(c: f64, d: usize, eps: f64) -> Result<f64> {
    let bracket = bound_bracket(c, d, eps)?;
    Ok(2.0 / (psi_positive(c)? * d as f64) * bracket)
}

/// Coefficients `[a, b, c0]` of `q(x) = a x^2 + b x + c0`.
pub fn q_coefficients(rho: f64, c: f64, d: usize) -> Result<[f64; 3]> {
    if !(rho >= 0.0) {
        return Err(invalid(format!("rho must be non-negative, got {rho}")));
    }
    let l = (d as f64).ln();
    let ll = ln_ln(d)?;
    Ok([
        (2.0 * rho + 1.0) * l / (2.0 * d as f64),
        -psi(rho)? / 2.0,
        1.0 + (1.0 + psi_positive(c)?.ln() - ll) / l,
    ])
}

pub fn q_eval(coef: &[f64; 3], x: f64) -> f64 {
    (coef[0] * x + coef[1]) * x + coef[2]
}

/// Real roots of `q`, ascending; empty when the discriminant is negative.
pub fn q_roots(rho: f64, c: f64, d: usize) -> Result<Vec<f64>> {
    let coef = q_coefficients(rho, c, d)?;
    Ok(quadratic_roots(&coef))
}

fn quadratic_roots(&[a, b, c]: &[f64; 3]) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, c / q] };
    roots.sort_by(f64::total_cmp);
    roots
}

/// Lower bound on the larger root: `d / ((2 rho + 1) ln d) * Psi(rho) / 2`.
pub fn larger_root_floor(rho: f64, d: usize) -> Result<f64> {
    Ok(d as f64 / ((2.0 * rho + 1.0) * (d as f64).ln()) * psi(rho)? / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub c: f64,
    pub d: usize,
    pub eps: f64,
    pub rho: f64,
    pub psi_c: f64,
    pub psi_rho: f64,
    pub ln_d: f64,
    pub ln_ln_d: f64,
    pub bracket: f64,
    /// `[a, b, c0]` of `q`.
    pub q_coefficients: [f64; 3],
    pub discriminant: f64,
    pub roots: Vec<f64>,
    pub larger_root_floor: f64,
    pub density_bound: f64,
    /// `density_bound * d / ln d`.
    pub beta_bound: f64,
}

/// Everything behind [`corr_density_bound`]; `rho` defaults to `c`.
pub fn bound_report(c: f64, d: usize, eps: f64, rho: Option<f64>) -> Result<BoundReport> {
    let rho = rho.unwrap_or(c);
    let coef = q_coefficients(rho, c, d)?;
    let density_bound = corr_density_bound(c, d, eps)?;
    let ln_d = (d as f64).ln();
    Ok(BoundReport {
        c,
        d,
        eps,
        rho,
        psi_c: psi(c)?,
        psi_rho: psi(rho)?,
        ln_d,
        ln_ln_d: ln_ln(d)?,
        bracket: bound_bracket(c, d, eps)?,
        q_coefficients: coef,
        discriminant: coef[1] * coef[1] - 4.0 * coef[0] * coef[2],
        roots: quadratic_roots(&coef),
        larger_root_floor: larger_root_floor(rho, d)?,
        density_bound,
        beta_bound: density_bound * d as f64 / ln_d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiRatio {
    pub psi_rho: f64,
    pub psi_c: f64,
    /// `Psi(rho) / (2 rho + 1)`.
    pub ratio: f64,
    /// `Psi(c) / 3` below 1, `Psi(c) / (3c)` above.
    pub ratio_floor: f64,
    pub psi_dominates: bool,
    pub ratio_dominates: bool,
}

/// Lower bounds on `Psi(rho)` for `rho <= c < 1` or `rho >= c > 1`.
pub fn psi_ratio_bounds(rho: f64, c: f64) -> Result<PsiRatio> {
    let below = rho >= 0.0 && rho <= c && c < 1.0;
    let above = rho >= c && c > 1.0;
    if !below && !above {
        return Err(Error::Hypothesis(format!(
            "need rho <= c < 1 or rho >= c > 1, got rho = {rho}, c = {c}"
        )));
    }
    let psi_rho = psi(rho)?;
    let psi_c = psi(c)?;
    let ratio = psi_rho / (2.0 * rho + 1.0);
    let ratio_floor = if below { psi_c / 3.0 } else { psi_c / (3.0 * c) };
    Ok(PsiRatio {
        psi_rho,
        psi_c,
        ratio,
        ratio_floor,
        psi_dominates: psi_rho >= psi_c,
        ratio_dominates: ratio >= ratio_floor,
    })
}

/// Whether `(alpha, rho)` describes a binary edge profile.
pub fn binary_profile_valid(alpha: f64, rho: f64) -> bool {
    let both = rho * alpha * alpha;
    (0.0..=1.0).contains(&alpha) && rho >= 0.0 && both <= alpha && 2.0 * alpha - both <= 1.0
}

/// `-(d/2) Psi(rho) alpha^2 + alpha + h(alpha) + ((2 rho + 1) d / 2) alpha^3`.
pub fn h_upper_bound(alpha: f64, rho: f64, d: usize) -> Result<f64> {
    if !binary_profile_valid(alpha, rho) {
        return Err(invalid(format!(
            "alpha = {alpha}, rho = {rho} is not a valid binary profile"
        )));
    }
    let d = d as f64;
    Ok(-d / 2.0 * psi(rho)? * alpha * alpha + alpha + h(alpha) + (2.0 * rho + 1.0) * d / 2.0 * alpha.powi(3))
}

/// Profile, symmetric pair set `lambda` avoiding colour 0, and the caps `K`, `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntropyInput {
    pub profile: EdgeProfile,
    pub lambda: Vec<(usize, usize)>,
    pub k: f64,
    pub j: f64,
}

impl MaxEntropyInput {
    pub fn q(&self) -> usize {
        self.profile.colours - 1
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        self.lambda.contains(&(i, j))
    }

    pub fn validate(&self) -> Result<()> {
        let colours = self.profile.colours;
        if colours < 2 {
            return Err(Error::Hypothesis("need at least two colours".into()));
        }
        self.profile
            .check_invariants()
            .map_err(|e| Error::Hypothesis(format!("edge profile: {e}")))?;
        let mut seen = self.lambda.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.lambda.len() {
            return Err(Error::Hypothesis("pair set has duplicates".into()));
        }
        for &(i, j) in &self.lambda {
            if i >= colours || j >= colours {
                return Err(Error::Hypothesis(format!("pair ({i},{j}) uses an unknown colour")));
            }
            if !self.contains(j, i) {
                return Err(Error::Hypothesis(format!("pair set not symmetric: ({i},{j}) without ({j},{i})")));
            }
            if i == 0 || j == 0 {
                return Err(Error::Hypothesis(format!("pair set contains ({i},{j}) involving colour 0")));
            }
            if self.profile.p(i, j) > self.k {
                return Err(Error::Hypothesis(format!(
                    "P({i},{j}) = {} exceeds K = {}",
                    self.profile.p(i, j),
                    self.k
                )));
            }
        }
        for i in 1..colours {
            if self.profile.pi[i] > self.j {
                return Err(Error::Hypothesis(format!(
                    "pi({i}) = {} exceeds J = {}",
                    self.profile.pi[i], self.j
                )));
            }
        }
        let cap = 1.0 / (std::f64::consts::E * self.q() as f64);
        if !(self.k > 0.0 && self.k <= cap) {
            return Err(Error::Hypothesis(format!("K = {} must lie in (0, 1/(e q)] = (0, {cap}]", self.k)));
        }
        if !(self.j > 0.0) {
            return Err(Error::Hypothesis(format!("J = {} must be positive", self.j)));
        }
        Ok(())
    }

    /// `sum_i pi(i) pi(Lambda_i)`, expanded row by row.
    pub fn pi_squared_by_rows(&self) -> f64 {
        let pi = &self.profile.pi;
        let mut total = 0.0;
        for i in 0..self.profile.colours {
            for j in (0..self.profile.colours).filter(|&j| self.contains(i, j)) {
                total += pi[i] * pi[j];
            }
        }
        total
    }

    /// `sum_{(i,j) in Lambda} pi(i) pi(j)`.
    pub fn pi_squared_by_pairs(&self) -> f64 {
        let pi = &self.profile.pi;
        let mut pairs = self.lambda.clone();
        pairs.sort_unstable();
        pairs.iter().map(|&(i, j)| pi[i] * pi[j]).sum()
    }
}

/// `H(pi) - (d/2) pi^2(Lambda) + q^2 (dK + dK ln(J^2 / K))`.
pub fn max_entropy_bound(input: &MaxEntropyInput, d: usize) -> Result<f64> {
    input.validate()?;
    let d = d as f64;
    let q = input.q() as f64;
    let (k, j) = (input.k, input.j);
    Ok(entropy(&input.profile.pi)? - d / 2.0 * input.pi_squared_by_rows()
        + q * q * (d * k + d * k * (j * j / k).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationParams {
    /// Bernoulli density in units of `ln d / d`.
    pub x: f64,
    /// Predicted density in units of `ln d / d`.
    pub density_factor: f64,
}

/// `x = p/(1-p) (1/sqrt(1-c) - 1)`, density factor `p / sqrt(1-c)`.
pub fn interpolation_params(c: f64, p: f64) -> Result<InterpolationParams> {
    if !(0.0..1.0).contains(&c) {
        return Err(invalid(format!("target correlation c = {c} must lie in [0, 1)")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("mixing probability p = {p} must lie in (0, 1)")));
    }
    let s = (1.0 - c).sqrt();
    Ok(InterpolationParams {
        x: p / (1.0 - p) * (1.0 / s - 1.0),
        density_factor: p / s,
    })
}

/// Density and correlation ratio of the interpolation, given the base density
/// `gamma ln d / d` and the Bernoulli density `x ln d / d` (both in `ln d / d` units).
pub fn interpolation_prediction(gamma: f64, x: f64, p: f64) -> (f64, f64) {
    let den = p * gamma + (1.0 - p) * x;
    let corr = ((1.0 - p).powi(2) * x * x + 2.0 * p * (1.0 - p) * gamma * x) / (den * den);
    (den, corr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::entropy_functional;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psi_values() {
        assert_eq!(psi(0.0).unwrap(), 1.0);
        assert_eq!(psi(1.0).unwrap(), 0.0);
        assert!((psi(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!(psi(-0.1).is_err());
    }

    #[test]
    fn psi_monotone_on_grid() {
        let grid: Vec<f64> = (0..=2000).map(|i| i as f64 / 1000.0).collect();
        for w in grid.windows(2) {
            let (a, b) = (psi(w[0]).unwrap(), psi(w[1]).unwrap());
            if w[1] <= 1.0 {
                assert!(b < a, "{w:?}");
            } else if w[0] >= 1.0 {
                assert!(b > a, "{w:?}");
            }
        }
        assert!(grid.iter().all(|&c| psi(c).unwrap() >= 0.0));
    }

    #[test]
    fn density_bound_at_thousand() {
        let b = corr_density_bound(0.0, 1000, 0.0).unwrap();
        // 0.002 * (6.907755278982137 - 1.9326447339160655 + 1)
        assert!((b - 0.011950221090132143).abs() < 1e-15, "{b}");
        assert!((b - 0.0119505).abs() < 1e-6);
    }

    #[test]
    fn density_bound_guards() {
        assert!(matches!(corr_density_bound(1.0, 100, 0.0), Err(Error::Hypothesis(_))));
        assert!(matches!(corr_density_bound(0.0, 2, 0.0), Err(Error::Hypothesis(_))));
        assert!(corr_density_bound(0.0, 100, -1.0).is_err());
    }

    #[test]
    fn eps_is_linear() {
        for &(c, d) in &[(0.0, 10usize), (0.5, 1000), (2.0, 50)] {
            let diff = corr_density_bound(c, d, 1.0).unwrap() - corr_density_bound(c, d, 0.0).unwrap();
            let expect = 2.0 / (psi(c).unwrap() * d as f64);
            assert!((diff - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn larger_psi_gives_smaller_bound() {
        let d = 100_000;
        for &(c, c2) in &[(0.5, 0.2), (0.9, 0.0), (3.0, 5.0), (1.5, 0.1)] {
            assert!(psi(c2).unwrap() > psi(c).unwrap());
            assert!(bound_bracket(c, d, 0.0).unwrap() > 0.0);
            assert!(corr_density_bound(c2, d, 0.0).unwrap() < corr_density_bound(c, d, 0.0).unwrap());
        }
    }

    #[test]
    fn c_zero_bound_exceeds_ln_d_over_d() {
        for d in 3..2000usize {
            let ratio = corr_density_bound(0.0, d, 0.0).unwrap() * d as f64 / (d as f64).ln();
            assert!(ratio > 1.0, "d={d}: {ratio}");
        }
    }

    #[test]
    fn q_roots_exist_for_large_d() {
        let r = q_roots(0.0, 0.0, 1_000_000).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r[0] <= r[1]);
        assert!(r[1] >= larger_root_floor(0.0, 1_000_000).unwrap());
        let coef = q_coefficients(0.0, 0.0, 1_000_000).unwrap();
        for x in r {
            assert!(q_eval(&coef, x).abs() < 1e-9);
        }
    }

    #[test]
    fn q_roots_empty_when_discriminant_negative() {
        // Psi(rho) tiny next to the constant term.
        let r = q_roots(0.999, 0.0, 10).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn report_is_consistent() {
        let r = bound_report(0.0, 1000, 0.0, None).unwrap();
        assert_eq!(r.rho, 0.0);
        assert!((r.density_bound - 2.0 / 1000.0 * r.bracket).abs() < 1e-16);
        assert!((r.beta_bound - r.density_bound * 1000.0 / r.ln_d).abs() < 1e-14);
        assert_eq!(r.roots.len(), 2);
    }

    #[test]
    fn psi_ratio_examples() {
        let r = psi_ratio_bounds(0.5, 0.5).unwrap();
        assert!((r.ratio - psi(0.5).unwrap() / 2.0).abs() < 1e-15);
        assert!(r.ratio_dominates && r.psi_dominates);
        let r = psi_ratio_bounds(0.0, 0.5).unwrap();
        assert_eq!(r.psi_rho, 1.0);
        assert!(r.psi_dominates);
        let r = psi_ratio_bounds(3.0, 2.0).unwrap();
        assert!((r.psi_rho - 1.2958368660043291).abs() < 1e-12);
        assert!((r.psi_c - 0.3862943611198906).abs() < 1e-12);
        assert!((r.ratio - r.psi_rho / 7.0).abs() < 1e-15);
        assert!((r.ratio_floor - r.psi_c / 6.0).abs() < 1e-15);
        assert!(r.ratio_dominates);
        assert!(psi_ratio_bounds(0.7, 0.5).is_err());
        assert!(psi_ratio_bounds(1.5, 2.0).is_err());
        assert!(psi_ratio_bounds(1.0, 1.0).is_err());
    }

    #[test]
    fn h_upper_bound_examples() {
        assert_eq!(h_upper_bound(0.0, 0.3, 7).unwrap(), 0.0);
        let v = h_upper_bound(0.3, 1.0, 3).unwrap();
        // 0.3 + h(0.3) + 4.5 * 0.027
        assert!((v - 0.7826918412977808).abs() < 1e-12, "{v}");
        assert!(h_upper_bound(0.8, 0.0, 3).is_err());
    }

    #[test]
    fn interpolation_examples() {
        let a = interpolation_params(0.0, 0.4).unwrap();
        assert_eq!((a.x, a.density_factor), (0.0, 0.4));
        let b = interpolation_params(0.75, 0.5).unwrap();
        assert!((b.x - 1.0).abs() < 1e-15 && (b.density_factor - 1.0).abs() < 1e-15);
        let c = interpolation_params(0.5, 1.0 - 1e-9).unwrap();
        assert!((c.density_factor - 2f64.sqrt()).abs() < 1e-8);
        assert!(interpolation_params(1.0, 0.5).is_err());
        assert!(interpolation_params(0.5, 1.0).is_err());
    }

    #[test]
    fn interpolation_prediction_recovers_target() {
        for &c in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            for &p in &[0.2, 0.5, 0.9] {
                let ip = interpolation_params(c, p).unwrap();
                let (den, corr) = interpolation_prediction(1.0, ip.x, p);
                assert!((den - ip.density_factor).abs() < 1e-12);
                assert!((corr - c).abs() < 1e-12);
            }
        }
    }

    fn three_colour_input() -> MaxEntropyInput {
        let p = vec![
            0.50, 0.10, 0.05, //
            0.10, 0.05, 0.02, //
            0.05, 0.02, 0.11,
        ];
        let pi = vec![0.65, 0.17, 0.18];
        MaxEntropyInput {
            profile: EdgeProfile::from_parts(p, pi).unwrap(),
            lambda: vec![(1, 1), (1, 2), (2, 1)],
            k: 0.05,
            j: 0.18,
        }
    }

    #[test]
    fn pi_squared_two_ways() {
        let inp = three_colour_input();
        inp.validate().unwrap();
        assert_eq!(inp.pi_squared_by_rows(), inp.pi_squared_by_pairs());
        assert!((inp.pi_squared_by_rows() - (0.17 * 0.17 + 2.0 * 0.17 * 0.18)).abs() < 1e-15);
    }

    #[test]
    fn max_entropy_hypotheses_are_named() {
        let mut bad = three_colour_input();
        bad.lambda = vec![(1, 2)];
        assert!(matches!(bad.validate(), Err(Error::Hypothesis(m)) if m.contains("symmetric")));
        let mut bad = three_colour_input();
        bad.lambda = vec![(0, 1), (1, 0)];
        assert!(matches!(bad.validate(), Err(Error::Hypothesis(m)) if m.contains("colour 0")));
        let mut bad = three_colour_input();
        bad.k = 0.01;
        assert!(matches!(bad.validate(), Err(Error::Hypothesis(m)) if m.contains("exceeds K")));
        let mut bad = three_colour_input();
        bad.j = 0.1;
        assert!(matches!(bad.validate(), Err(Error::Hypothesis(m)) if m.contains("exceeds J")));
        let mut bad = three_colour_input();
        bad.k = 0.5;
        assert!(matches!(bad.validate(), Err(Error::Hypothesis(m)) if m.contains("1/(e q)")));
    }

    #[test]
    fn empty_pair_set_reduces() {
        let mut inp = three_colour_input();
        inp.lambda.clear();
        let d = 5;
        let v = max_entropy_bound(&inp, d).unwrap();
        let q2 = 4.0;
        let expect = entropy(&inp.profile.pi).unwrap()
            + q2 * d as f64 * inp.k * (1.0 + (inp.j * inp.j / inp.k).ln());
        assert!((v - expect).abs() < 1e-12);
    }

    #[test]
    fn max_entropy_dominates_fixed_example() {
        let inp = three_colour_input();
        for d in 2..50 {
            assert!(max_entropy_bound(&inp, d).unwrap() >= entropy_functional(&inp.profile, d).unwrap());
        }
    }

    #[test]
    fn h_upper_bound_dominates_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let alpha: f64 = rng.random_range(0.0..0.5);
            let rho_max = if alpha > 0.0 { ((2.0 * alpha - 1.0).max(0.0) / (alpha * alpha)).max(0.0) } else { 0.0 };
            let rho_hi = if alpha > 0.0 { 1.0 / alpha } else { 10.0 };
            let rho = rng.random_range(rho_max..=rho_hi);
            let d = rng.random_range(2..500usize);
            if !binary_profile_valid(alpha, rho) {
                continue;
            }
            let prof = EdgeProfile::binary(alpha, rho).unwrap();
            assert!(h_upper_bound(alpha, rho, d).unwrap() >= entropy_functional(&prof, d).unwrap() - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn quadratic_roots_are_roots(rho in 0.0f64..20.0, c in 0.0f64..20.0, d in 3usize..1_000_000_000) {
            prop_assume!((c - 1.0).abs() > 1e-6);
            let coef = q_coefficients(rho, c, d).unwrap();
            for r in q_roots(rho, c, d).unwrap() {
                let scale = coef[0].abs() * r * r + coef[1].abs() * r.abs() + coef[2].abs();
                prop_assert!(q_eval(&coef, r).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn psi_is_non_negative(c in 0.0f64..1e6) {
            prop_assert!(psi(c).unwrap() >= 0.0);
        }
    }
}
