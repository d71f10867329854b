//! Helpers for the acceptance suite in `tests/acceptance.rs`: verdict lines,
//! a couple of statistics and random valid inputs for the pointwise bounds.

use std::io::Write;

use fiid_core::bounds::MaxEntropyInput;
use fiid_core::stats::EdgeProfile;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: u32, title: &'static str, pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            id,
            title,
            pass,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {:>2} {status} [{}] {}", self.id, self.title, self.detail)
    }

    /// Writes the line straight to stdout, so it shows up even when the test
    /// harness captures output, then fails the test if the criterion failed.
    pub fn finish(self) {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{}", self.line());
        let _ = out.flush();
        drop(out);
        assert!(self.pass, "{}", self.line());
    }
}

/// Adjacent pairs where the sequence goes up.
pub fn inversions(xs: &[f64]) -> usize {
    xs.windows(2).filter(|w| w[1] > w[0]).count()
}

/// `|a - b|` in units of the combined standard error.
pub fn z_score(a: f64, se_a: f64, b: f64, se_b: f64) -> f64 {
    let se = (se_a * se_a + se_b * se_b).sqrt();
    if se == 0.0 {
        if a == b {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / se
    }
}

/// A random probability vector with `k` entries, some of them possibly tiny.
pub fn random_distribution<R: Rng>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.random();
            if rng.random_bool(0.2) {
                u * 1e-6
            } else {
                u
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// A random symmetric edge profile on `k` colours together with a symmetric
/// pair set avoiding colour 0 and caps `K`, `J` meeting the hypotheses of
/// the max-entropy bound. `None` when the draw misses them.
pub fn random_max_entropy_input<R: Rng>(rng: &mut R, k: usize) -> Option<MaxEntropyInput> {
    let q = k - 1;
    let mut lambda = Vec::new();
    for i in 1..k {
        for j in i..k {
            if rng.random_bool(0.4) {
                lambda.push((i, j));
                if i != j {
                    lambda.push((j, i));
                }
            }
        }
    }
    let mut w = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let small = lambda.contains(&(i, j));
            let u: f64 = rng.random();
            let x = if small { u * rng.random_range(1e-6..1e-2) } else { u };
            w[i * k + j] = x;
            w[j * k + i] = x;
        }
    }
    let total: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / total).collect();
    let pi: Vec<f64> = (0..k).map(|i| p[i * k..(i + 1) * k].iter().sum()).collect();
    let profile = EdgeProfile::from_parts(p, pi).ok()?;
    let cap = 1.0 / (std::f64::consts::E * q as f64);
    let largest = lambda.iter().map(|&(i, j)| profile.p(i, j)).fold(0.0, f64::max);
    if largest > cap {
        return None;
    }
    let k_cap = largest + rng.random::<f64>() * (cap - largest);
    let j_cap = (1..k).map(|i| profile.pi[i]).fold(0.0, f64::max) * (1.0 + rng.random::<f64>());
    let input = MaxEntropyInput {
        profile,
        lambda,
        k: k_cap,
        j: j_cap,
    };
    input.validate().ok()?;
    Some(input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inversions_count_rises() {
        assert_eq!(inversions(&[3.0, 2.0, 2.5, 1.0, 0.5]), 1);
        assert_eq!(inversions(&[]), 0);
    }

    #[test]
    fn z_of_equal_exact_values() {
        assert_eq!(z_score(1.0, 0.0, 1.0, 0.0), 0.0);
        assert!(z_score(1.0, 0.0, 2.0, 0.0).is_infinite());
        assert!((z_score(1.0, 0.3, 2.0, 0.4) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn verdict_line_format() {
        let v = Verdict::new(3, "demo", true, "ok");
        assert_eq!(v.line(), "criterion  3 PASS [demo] ok");
    }
}
