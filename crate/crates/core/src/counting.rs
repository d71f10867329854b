//! Expected number of partitions of `G_{n,d}` with a prescribed integer edge
//! profile: the exact closed form, a brute-force oracle over all pairings, and
//! log-scale evaluation for larger `n`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{enumerate_pairings, pairing_count, MAX_ENUMERATION_HALF_EDGES};
use crate::stats::{entropy_functional, EdgeProfile, ProfileCounts};

pub fn factorial(m: u64) -> BigUint {
    (1..=m).fold(BigUint::one(), |acc, k| acc * k)
}

/// `m!!` for odd `m`, with `(-1)!! = 1`.
pub fn odd_double_factorial(m: i64) -> BigUint {
    assert!(m >= -1 && m % 2 != 0, "odd_double_factorial needs odd m >= -1");
    (1..=m.max(0) as u64).step_by(2).fold(BigUint::one(), |acc, k| acc * k)
}

fn multinomial(total: u64, parts: impl IntoIterator<Item = u64>) -> BigUint {
    parts.into_iter().fold(factorial(total), |acc, k| acc / factorial(k))
}

/// Integer counts of a real profile at size `(n, d)`; entries must be integers to 1e-9.
pub fn integer_profile(profile: &EdgeProfile, n: u64, d: u64) -> Result<ProfileCounts> {
    let to_int = |x: f64, scale: u64, what: &str| -> Result<u64> {
        let v = x * scale as f64;
        let r = v.round();
        if (v - r).abs() > 1e-9 || r < 0.0 {
            return Err(invalid(format!("{what} = {x} is not a multiple of 1/{scale}")));
        }
        Ok(r as u64)
    };
    let counts = ProfileCounts {
        n,
        d,
        colours: profile.colours,
        pair: profile
            .p
            .iter()
            .map(|&x| to_int(x, n * d, "P entry"))
            .collect::<Result<_>>()?,
        vertex: profile
            .pi
            .iter()
            .map(|&x| to_int(x, n, "pi entry"))
            .collect::<Result<_>>()?,
    };
    counts.validate()?;
    Ok(counts)
}

fn numerator(c: &ProfileCounts) -> BigUint {
    let k = c.colours;
    let mut num = multinomial(c.n, c.vertex.iter().copied());
    for i in 0..k {
        num *= multinomial(c.d * c.vertex[i], (0..k).map(|j| c.pair(i, j)));
        for j in i + 1..k {
            num *= factorial(c.pair(i, j));
        }
        num *= odd_double_factorial(c.pair(i, i) as i64 - 1);
    }
    num
}

/// `E[Z]` for the profile given by `counts`, exactly.
pub fn expected_partition_count_exact(counts: &ProfileCounts) -> Result<BigRational> {
    counts.validate()?;
    let nd = counts.directed_edges();
    if nd == 0 || nd % 2 == 1 {
        return Err(invalid(format!("n d = {nd} must be positive and even")));
    }
    let den = odd_double_factorial(nd as i64 - 1);
    Ok(BigRational::new(numerator(counts).into(), den.into()))
}

/// Every valid integer profile at `(n, d)` over `colours` colours.
pub fn enumerate_integer_profiles(n: u64, d: u64, colours: usize) -> Vec<ProfileCounts> {
    let mut out = Vec::new();
    let mut vertex = vec![0u64; colours];
    compositions(n, 0, &mut vertex, &mut |vertex| {
        let k = colours;
        let upper: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
        let mut pair = vec![0u64; k * k];
        fill_pairs(d, vertex, &upper, 0, &mut pair, &mut |pair| {
            out.push(ProfileCounts {
                n,
                d,
                colours: k,
                pair: pair.to_vec(),
                vertex: vertex.to_vec(),
            });
        });
    });
    out
}

fn compositions(left: u64, at: usize, parts: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
    if at + 1 == parts.len() {
        parts[at] = left;
        f(parts);
        return;
    }
    for x in 0..=left {
        parts[at] = x;
        compositions(left - x, at + 1, parts, f);
    }
}

fn fill_pairs(d: u64, vertex: &[u64], upper: &[(usize, usize)], at: usize, pair: &mut [u64], f: &mut dyn FnMut(&[u64])) {
    let k = vertex.len();
    let row_used = |pair: &[u64], i: usize| -> u64 { (0..k).filter(|&j| j != i).map(|j| pair[i * k + j]).sum() };
    if at == upper.len() {
        for i in 0..k {
            let used = row_used(pair, i);
            let total = d * vertex[i];
            if used > total || (total - used) % 2 == 1 {
                return;
            }
            pair[i * k + i] = total - used;
        }
        f(pair);
        for i in 0..k {
            pair[i * k + i] = 0;
        }
        return;
    }
    let (i, j) = upper[at];
    let cap = (d * vertex[i] - row_used(pair, i)).min(d * vertex[j] - row_used(pair, j));
    for m in 0..=cap {
        pair[i * k + j] = m;
        pair[j * k + i] = m;
        fill_pairs(d, vertex, upper, at + 1, pair, f);
    }
    pair[i * k + j] = 0;
    pair[j * k + i] = 0;
}

/// Brute-force `E[Z]` for every profile that occurs, by enumerating all
/// pairings and all colourings with `colours` colours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub n: u64,
    pub d: u64,
    pub colours: usize,
    pub pairings: u128,
    /// Profile counts -> number of (pairing, colouring) pairs realising it.
    pub tallies: Vec<(ProfileCounts, u64)>,
}

impl OracleTable {
    pub fn expectation(&self, counts: &ProfileCounts) -> BigRational {
        let hits = self
            .tallies
            .iter()
            .find(|(c, _)| c == counts)
            .map_or(0, |(_, t)| *t);
        BigRational::new(BigUint::from(hits).into(), BigUint::from(self.pairings).into())
    }
}

/// Largest colouring count the oracle will enumerate per pairing.
pub const MAX_ORACLE_COLOURINGS: u64 = 1 << 16;

pub fn brute_force_table(n: u64, d: u64, colours: usize) -> Result<OracleTable> {
    let m = (n * d) as usize;
    if m > MAX_ENUMERATION_HALF_EDGES {
        return Err(Error::OracleGuard(format!(
            "n d = {m} exceeds the enumeration limit {MAX_ENUMERATION_HALF_EDGES}"
        )));
    }
    if !(2..=8).contains(&colours) {
        return Err(invalid(format!("oracle supports 2..=8 colours, got {colours}")));
    }
    let colourings = (colours as u64)
        .checked_pow(n as u32)
        .filter(|&c| c <= MAX_ORACLE_COLOURINGS)
        .ok_or_else(|| Error::OracleGuard(format!("{colours}^{n} colourings exceed the oracle limit")))?;
    let k = colours;
    let d_us = d as usize;
    // Every pair count is at most 16, so a byte per entry suffices.
    let mut tally: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    let mut colour = vec![0usize; n as usize];
    let mut key = vec![0u8; k * k];
    for g in enumerate_pairings(n as usize, d_us)? {
        let pairing = g.pairing();
        for code in 0..colourings {
            let mut c = code;
            for slot in colour.iter_mut() {
                *slot = (c % k as u64) as usize;
                c /= k as u64;
            }
            key.iter_mut().for_each(|x| *x = 0);
            for (h, &p) in pairing.iter().enumerate() {
                key[colour[h / d_us] * k + colour[p / d_us]] += 1;
            }
            match tally.get_mut(&key) {
                Some(t) => *t += 1,
                None => {
                    tally.insert(key.clone(), 1);
                }
            }
        }
    }
    let tallies = tally
        .into_iter()
        .map(|(key, hits)| {
            let pair: Vec<u64> = key.iter().map(|&x| x as u64).collect();
            let vertex = (0..k).map(|i| pair[i * k..(i + 1) * k].iter().sum::<u64>() / d).collect();
            (
                ProfileCounts {
                    n,
                    d,
                    colours: k,
                    pair,
                    vertex,
                },
                hits,
            )
        })
        .collect();
    Ok(OracleTable {
        n,
        d,
        colours,
        pairings: pairing_count(m),
        tallies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub n: u64,
    pub d: u64,
    pub colours: usize,
    pub profiles: usize,
    pub mismatches: Vec<String>,
}

/// Formula against brute force on every valid profile, plus a check that
/// brute force produced no profile outside the enumeration.
pub fn compare_with_oracle(n: u64, d: u64, colours: usize) -> Result<OracleComparison> {
    let table = brute_force_table(n, d, colours)?;
    let profiles = enumerate_integer_profiles(n, d, colours);
    let mut mismatches = Vec::new();
    for p in &profiles {
        let formula = expected_partition_count_exact(p)?;
        let brute = table.expectation(p);
        if formula != brute {
            mismatches.push(format!("{:?}: formula {formula} vs brute force {brute}", p.pair));
        }
    }
    for (p, _) in &table.tallies {
        if !profiles.contains(p) {
            mismatches.push(format!("{:?} realised but not enumerated", p.pair));
        }
    }
    Ok(OracleComparison {
        n,
        d,
        colours,
        profiles: profiles.len(),
        mismatches,
    })
}

/// Natural log of a positive big integer.
pub fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("finite").ln();
    }
    let shift = bits - 60;
    (x >> shift).to_f64().expect("finite").ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln` of a positive rational.
pub fn ln_rational(x: &BigRational) -> Result<f64> {
    if x <= &BigRational::zero() {
        return Err(invalid("logarithm of a non-positive number"));
    }
    let num = x.numer().to_biguint().expect("positive");
    let den = x.denom().to_biguint().expect("positive");
    Ok(ln_biguint(&num) - ln_biguint(&den))
}

/// `ln m!`: exact summation below 256, Stirling series above.
pub fn ln_factorial(m: u64) -> f64 {
    if m < 256 {
        return (2..=m).map(|k| (k as f64).ln()).sum();
    }
    let x = m as f64;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
}

/// `ln (2k - 1)!! = ln (2k)! - k ln 2 - ln k!`.
fn ln_odd_double_factorial_of_even(m: u64) -> f64 {
    let k = m / 2;
    ln_factorial(m) - k as f64 * std::f64::consts::LN_2 - ln_factorial(k)
}

/// `ln E[Z]` evaluated in floating point; usable at any size.
pub fn log_expected_partition_count(c: &ProfileCounts) -> Result<f64> {
    c.validate()?;
    let k = c.colours;
    let mut total = ln_factorial(c.n) - c.vertex.iter().map(|&x| ln_factorial(x)).sum::<f64>();
    for i in 0..k {
        total += ln_factorial(c.d * c.vertex[i]);
        for j in 0..k {
            total -= ln_factorial(c.pair(i, j));
        }
        for j in i + 1..k {
            total += ln_factorial(c.pair(i, j));
        }
        total += ln_odd_double_factorial_of_even(c.pair(i, i));
    }
    Ok(total - ln_odd_double_factorial_of_even(c.directed_edges()))
}

/// `n [(d/2) H(P) - (d-1) H(pi)]`.
pub fn partition_count_log_bound(profile: &EdgeProfile, n: u64, d: usize) -> Result<f64> {
    profile.check_invariants()?;
    Ok(n as f64 * entropy_functional(profile, d)?)
}

/// `ln E[Z] - n F(P, pi)` using the exact count.
pub fn log_gap(c: &ProfileCounts) -> Result<f64> {
    let exact = ln_rational(&expected_partition_count_exact(c)?)?;
    let profile = EdgeProfile::from_counts(c.clone());
    Ok(exact - partition_count_log_bound(&profile, c.n, c.d as usize)?)
}
