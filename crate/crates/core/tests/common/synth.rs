//! Synthetic corpora for end-to-end checks.

#![allow(dead_code)]

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two context-disjoint clusters of `words_per_cluster` words each. Every
/// line draws `line_len` tokens uniformly from one cluster, so words from
/// different clusters never share a window.
pub fn two_cluster_corpus(
    words_per_cluster: usize,
    tokens: usize,
    line_len: usize,
    seed: u64,
) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::with_capacity(tokens * 5);
    let mut written = 0;
    let mut cluster = 0;
    while written < tokens {
        let n = line_len.min(tokens - written);
        for i in 0..n {
            let w = rng.random_range(0..words_per_cluster);
            if i > 0 {
                text.push(' ');
            }
            let _ = write!(text, "{}{w}", if cluster == 0 { "a" } else { "b" });
        }
        text.push('\n');
        written += n;
        cluster = 1 - cluster;
    }
    text
}

pub fn cluster_of(word: &str) -> usize {
    if word.starts_with('a') {
        0
    } else {
        1
    }
}

/// Three-level taxonomy: one root, `categories` mid-level words, and
/// `leaves` leaf words under each category.
pub struct Taxonomy {
    pub root: String,
    pub categories: Vec<String>,
    /// `leaves[c]` are the hyponyms of `categories[c]`.
    pub leaves: Vec<Vec<String>>,
}

impl Taxonomy {
    pub fn new(categories: usize, leaves: usize) -> Self {
        Taxonomy {
            root: "root".into(),
            categories: (0..categories).map(|c| format!("cat{c}")).collect(),
            leaves: (0..categories)
                .map(|c| (0..leaves).map(|l| format!("leaf{c}x{l}")).collect())
                .collect(),
        }
    }

    /// Lines about one category: its leaves, the category word, and the root.
    pub fn corpus(&self, tokens: usize, line_len: usize, seed: u64) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut text = String::new();
        let mut written = 0;
        while written < tokens {
            let c = rng.random_range(0..self.categories.len());
            let n = line_len.min(tokens - written);
            for i in 0..n {
                if i > 0 {
                    text.push(' ');
                }
                let u: f64 = rng.random();
                let w = if u < 0.15 {
                    &self.categories[c]
                } else if u < 0.2 {
                    &self.root
                } else {
                    &self.leaves[c][rng.random_range(0..self.leaves[c].len())]
                };
                text.push_str(w);
            }
            text.push('\n');
            written += n;
        }
        text
    }

    /// `IsA` triples for the first `train_leaves` leaves of every category,
    /// plus category -> root.
    pub fn isa_triples(&self, train_leaves: usize) -> String {
        let mut out = String::new();
        for (c, cat) in self.categories.iter().enumerate() {
            for leaf in &self.leaves[c][..train_leaves] {
                let _ = writeln!(out, "IsA\t{leaf}\t{cat}");
            }
            let _ = writeln!(out, "IsA\t{cat}\t{}", self.root);
        }
        out
    }

    /// Held-out entailment pairs over leaves `train_leaves..`: each leaf
    /// entails its category and the root; the reversed pairs and the leaf
    /// paired with another category do not.
    pub fn heldout_pairs(&self, train_leaves: usize) -> String {
        let mut out = String::new();
        let k = self.categories.len();
        for (c, cat) in self.categories.iter().enumerate() {
            for leaf in &self.leaves[c][train_leaves..] {
                let other = &self.categories[(c + 1) % k];
                let _ = writeln!(out, "{leaf}\t{cat}\t1");
                let _ = writeln!(out, "{leaf}\t{}\t1", self.root);
                let _ = writeln!(out, "{cat}\t{leaf}\t0");
                let _ = writeln!(out, "{}\t{leaf}\t0", self.root);
                let _ = writeln!(out, "{leaf}\t{other}\t0");
            }
        }
        out
    }
}
