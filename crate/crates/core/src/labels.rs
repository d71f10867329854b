//! Random labellings. Each vertex carries one 64-bit word; its label is the
//! uniform value in (0, 1) read from the top 52 bits. Further uniforms needed
//! by a rule (coins, choices) are derived from the same word through a
//! [`Channel`], so every vertex still owns exactly one iid label.

use rand::Rng;

use crate::seed::{self, mix64};

const UNIT: f64 = 1.0 / (1u64 << 52) as f64;

/// Maps a word to the open interval (0, 1).
#[inline]
pub fn word_to_unit(word: u64) -> f64 {
    ((word >> 12) as f64 + 0.5) * UNIT
}

/// A deterministic sub-stream of a vertex label. `Channel::ROOT` is the label itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Channel(u64);

impl Channel {
    pub const ROOT: Channel = Channel(0);

    pub fn child(self, tag: &str) -> Channel {
        self.indexed(tag, 0)
    }

    pub fn indexed(self, tag: &str, index: u64) -> Channel {
        let c = seed::derive(self.0, tag, index);
        Channel(if c == 0 { 1 } else { c })
    }

    #[inline]
    pub fn word(self, label: u64) -> u64 {
        if self.0 == 0 {
            label
        } else {
            mix64(label ^ mix64(self.0))
        }
    }

    #[inline]
    pub fn uniform(self, label: u64) -> f64 {
        word_to_unit(self.word(label))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelField {
    seed: u64,
    words: Vec<u64>,
}

impl LabelField {
    pub fn sample(n: usize, seed: u64) -> Self {
        let mut rng = seed::rng(seed, "labels", 0);
        let words = (0..n).map(|_| rng.random::<u64>()).collect();
        LabelField { seed, words }
    }

    pub fn from_words(seed: u64, words: Vec<u64>) -> Self {
        LabelField { seed, words }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn value(&self, v: usize) -> f64 {
        word_to_unit(self.words[v])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regeneration_is_bit_identical() {
        assert_eq!(LabelField::sample(1000, 5), LabelField::sample(1000, 5));
        assert_ne!(LabelField::sample(1000, 5), LabelField::sample(1000, 6));
    }

    #[test]
    fn labels_are_in_open_unit_interval() {
        assert!(word_to_unit(0) > 0.0);
        assert!(word_to_unit(u64::MAX) < 1.0);
        let f = LabelField::sample(10_000, 1);
        let mean = (0..f.len()).map(|v| f.value(v)).sum::<f64>() / f.len() as f64;
        assert!((mean - 0.5).abs() < 0.02);
    }

    #[test]
    fn derived_channels_look_independent() {
        let f = LabelField::sample(50_000, 2);
        let a = Channel::ROOT;
        let b = Channel::ROOT.child("coin");
        let n = f.len() as f64;
        let (mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0);
        for &w in f.words() {
            let x = a.uniform(w);
            let y = b.uniform(w);
            sa += x;
            sb += y;
            sab += x * y;
        }
        let cov = sab / n - (sa / n) * (sb / n);
        // Var of a uniform is 1/12; a correlation of 0.02 would be far outside noise.
        assert!(cov.abs() < 0.02 / 12.0, "cov={cov}");
        assert!((sb / n - 0.5).abs() < 0.01);
    }
}
