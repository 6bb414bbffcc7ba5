//! Intrinsic evaluation: word similarity (Spearman), entailment (best F1 and
//! average precision over KL scores), and nearest-neighbour queries.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::artifactio::Model;
use crate::corpus::SENTINEL;
use crate::geometry::{kl_spherical, w2_spherical};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{name}:{line}: {msg}")]
    Format {
        name: String,
        line: usize,
        msg: String,
    },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),
    #[error("only {covered} of {total} pairs are in the vocabulary")]
    InsufficientCoverage { covered: usize, total: usize },
    #[error(
        "degenerate entailment set: {positives} positive and {negatives} negative covered pairs"
    )]
    Degenerate { positives: usize, negatives: usize },
    #[error("word {0:?} is not in the vocabulary")]
    UnknownWord(String),
    #[error("n must be at least 1")]
    BadCount,
}

/// `(word1, word2, human score)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

/// Ordered `(word1, word2, word1 entails word2)` triples.
#[derive(Debug, Clone, PartialEq)]
pub struct EntailmentDataset {
    pub name: String,
    pub pairs: Vec<(String, String, bool)>,
}

fn dataset_lines<'t>(
    name: &'t str,
    text: &'t str,
) -> impl Iterator<Item = Result<(usize, String, String, &'t str), EvalError>> + 't {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(move |(n, l)| {
            let fields: Vec<&str> = l.split('\t').map(str::trim).collect();
            match fields.as_slice() {
                [a, b, v] if !a.is_empty() && !b.is_empty() => {
                    Ok((n, a.to_lowercase(), b.to_lowercase(), *v))
                }
                _ => Err(EvalError::Format {
                    name: name.to_owned(),
                    line: n,
                    msg: "expected word1<TAB>word2<TAB>value".into(),
                }),
            }
        })
}

impl SimilarityDataset {
    /// Parses `word1<TAB>word2<TAB>score` lines. Words are lowercased; a
    /// repeated unordered pair keeps its first score.
    pub fn parse(name: &str, text: &str) -> Result<Self, EvalError> {
        let mut seen = HashSet::new();
        let mut pairs = Vec::new();
        for row in dataset_lines(name, text) {
            let (n, a, b, v) = row?;
            let score = v
                .parse::<f64>()
                .ok()
                .filter(|s| s.is_finite())
                .ok_or_else(|| EvalError::Format {
                    name: name.to_owned(),
                    line: n,
                    msg: format!("bad score {v:?}"),
                })?;
            let key = if a <= b {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            };
            if seen.insert(key) {
                pairs.push((a, b, score));
            }
        }
        Ok(SimilarityDataset {
            name: name.to_owned(),
            pairs,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&dataset_name(path), &text)
    }
}

impl EntailmentDataset {
    /// Parses `word1<TAB>word2<TAB>1|0` lines; words are lowercased.
    pub fn parse(name: &str, text: &str) -> Result<Self, EvalError> {
        let mut pairs = Vec::new();
        for row in dataset_lines(name, text) {
            let (n, a, b, v) = row?;
            let label = match v {
                "1" => true,
                "0" => false,
                _ => {
                    return Err(EvalError::Format {
                        name: name.to_owned(),
                        line: n,
                        msg: format!("label must be 1 or 0, got {v:?}"),
                    })
                }
            };
            pairs.push((a, b, label));
        }
        Ok(EntailmentDataset {
            name: name.to_owned(),
            pairs,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let text = fs::read_to_string(path).map_err(|source| EvalError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&dataset_name(path), &text)
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// 1-based ranks; tied values share the mean of their ranks.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::UndefinedCorrelation("zero rank variance".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::UndefinedCorrelation(format!(
            "length mismatch {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(EvalError::UndefinedCorrelation(
            "need at least two observations".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(EvalError::UndefinedCorrelation("NaN input".into()));
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.as_f64(), y.as_f64());
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityResult {
    pub name: String,
    /// Spearman correlation in `[-1, 1]`.
    pub rho: f64,
    pub covered: usize,
    pub skipped: usize,
}

/// Spearman correlation between cosine similarity of means and the human
/// scores, over pairs whose words are both in the model.
pub fn eval_similarity<F: Scalar>(
    model: &Model<F>,
    dataset: &SimilarityDataset,
) -> Result<SimilarityResult, EvalError> {
    let mut model_scores = Vec::new();
    let mut human = Vec::new();
    for (a, b, s) in &dataset.pairs {
        if let (Some(ia), Some(ib)) = (model.id(a), model.id(b)) {
            model_scores.push(cosine(model.params.mean(ia), model.params.mean(ib)));
            human.push(*s);
        }
    }
    let covered = human.len();
    if covered < 2 {
        return Err(EvalError::InsufficientCoverage {
            covered,
            total: dataset.pairs.len(),
        });
    }
    Ok(SimilarityResult {
        name: dataset.name.clone(),
        rho: spearman(&model_scores, &human)?,
        covered,
        skipped: dataset.pairs.len() - covered,
    })
}

/// Threshold-swept F1 and average precision of a scored binary ranking.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntailmentScores {
    /// In `[0, 1]`.
    pub best_f1: f64,
    /// In `[0, 1]`.
    pub average_precision: f64,
    /// Pairs scoring strictly above this are predicted to entail.
    pub threshold: f64,
}

/// Best F1 over thresholds at the midpoints between consecutive distinct
/// scores (plus +-inf), and average precision of the descending ranking.
/// Tied scores form one block; each positive in a block is credited with
/// the precision at the block's end, so constant scores give AP equal to
/// the positive rate.
pub fn entailment_metrics(scores: &[f64], labels: &[bool]) -> Result<EntailmentScores, EvalError> {
    assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::Degenerate {
            positives,
            negatives,
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable: ties keep dataset order.
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));

    let mut best_f1 = 0.0;
    let mut threshold = f64::INFINITY;
    let mut ap = 0.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let mut block_pos = 0;
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
                block_pos += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let precision = tp as f64 / (tp + fp) as f64;
        ap += block_pos as f64 * precision;
        let f1 = 2.0 * tp as f64 / (2 * tp + fp + (positives - tp)) as f64;
        if f1 > best_f1 {
            best_f1 = f1;
            threshold = match order.get(i) {
                Some(&next) => (s + scores[next]) / 2.0,
                None => f64::NEG_INFINITY,
            };
        }
    }
    Ok(EntailmentScores {
        best_f1,
        average_precision: ap / positives as f64,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntailmentResult {
    pub name: String,
    pub scores: EntailmentScores,
    pub covered: usize,
    pub skipped: usize,
}

/// Entailment score of `w1 |= w2`: `-KL(f_w1 || f_w2)`, higher is more entailing.
pub fn entailment_score<F: Scalar>(model: &Model<F>, w1: u32, w2: u32) -> f64 {
    -kl_spherical(model.params.gaussian(w1), model.params.gaussian(w2))
        .map(|k| k.as_f64())
        .unwrap_or(f64::INFINITY)
}

pub fn eval_entailment<F: Scalar>(
    model: &Model<F>,
    dataset: &EntailmentDataset,
) -> Result<EntailmentResult, EvalError> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for (a, b, l) in &dataset.pairs {
        if let (Some(ia), Some(ib)) = (model.id(a), model.id(b)) {
            scores.push(entailment_score(model, ia, ib));
            labels.push(*l);
        }
    }
    let covered = labels.len();
    Ok(EntailmentResult {
        name: dataset.name.clone(),
        scores: entailment_metrics(&scores, &labels)?,
        covered,
        skipped: dataset.pairs.len() - covered,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Cosine,
    W2,
    Kl,
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine" => Ok(Metric::Cosine),
            "w2" => Ok(Metric::W2),
            "kl" => Ok(Metric::Kl),
            _ => Err(format!("unknown metric {s:?} (expected cosine|w2|kl)")),
        }
    }
}

/// The `n` words closest to `query`, excluding the query itself and the
/// relation sentinel. Cosine is sorted descending, W2 and `KL(query || w)`
/// ascending; ties keep id order.
pub fn nearest<F: Scalar>(
    model: &Model<F>,
    query: &str,
    n: usize,
    metric: Metric,
) -> Result<Vec<(String, f64)>, EvalError> {
    if n == 0 {
        return Err(EvalError::BadCount);
    }
    let q = model
        .id(query)
        .ok_or_else(|| EvalError::UnknownWord(query.to_owned()))?;
    let qg = model.params.gaussian(q);
    let mut scored: Vec<(u32, f64)> = (0..model.words.len() as u32)
        .filter(|&i| i != q && model.words[i as usize] != SENTINEL)
        .map(|i| {
            let g = model.params.gaussian(i);
            let s = match metric {
                Metric::Cosine => cosine(qg.mean, g.mean),
                Metric::W2 => w2_spherical(qg, g).map(|d| d.as_f64()).unwrap_or(f64::NAN),
                Metric::Kl => kl_spherical(qg, g).map(|d| d.as_f64()).unwrap_or(f64::NAN),
            };
            (i, s)
        })
        .collect();
    match metric {
        Metric::Cosine => scored.sort_by(|a, b| b.1.total_cmp(&a.1)),
        Metric::W2 | Metric::Kl => scored.sort_by(|a, b| a.1.total_cmp(&b.1)),
    }
    Ok(scored
        .into_iter()
        .take(n)
        .map(|(i, s)| (model.words[i as usize].clone(), s))
        .collect())
}

/// Results of one evaluation run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub similarity: Vec<SimilarityResult>,
    pub entailment: Vec<EntailmentResult>,
}

impl EvalReport {
    /// Human-readable table; Spearman, F1 and AP are scaled by 100.
    pub fn table(&self) -> String {
        let mut out = String::new();
        if !self.similarity.is_empty() {
            out.push_str(&format!(
                "{:<24} {:>8} {:>8} {:>8}\n",
                "dataset", "rho*100", "covered", "skipped"
            ));
            for r in &self.similarity {
                out.push_str(&format!(
                    "{:<24} {:>8.2} {:>8} {:>8}\n",
                    r.name,
                    100.0 * r.rho,
                    r.covered,
                    r.skipped
                ));
            }
        }
        if !self.entailment.is_empty() {
            out.push_str(&format!(
                "{:<24} {:>8} {:>8} {:>10} {:>8} {:>8}\n",
                "dataset", "best_f1", "best_ap", "threshold", "covered", "skipped"
            ));
            for r in &self.entailment {
                out.push_str(&format!(
                    "{:<24} {:>8.2} {:>8.2} {:>10.4} {:>8} {:>8}\n",
                    r.name,
                    100.0 * r.scores.best_f1,
                    100.0 * r.scores.average_precision,
                    r.scores.threshold,
                    r.covered,
                    r.skipped
                ));
            }
        }
        out
    }
}

impl fmt::Display for EvalReport {
    /// Machine-readable lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.similarity {
            writeln!(
                f,
                "dataset={} rho={:.4} covered={} skipped={}",
                r.name,
                100.0 * r.rho,
                r.covered,
                r.skipped
            )?;
        }
        for r in &self.entailment {
            writeln!(
                f,
                "entail best_f1={:.4} best_ap={:.4} thr={:.6}",
                100.0 * r.scores.best_f1,
                100.0 * r.scores.average_precision,
                r.scores.threshold
            )?;
        }
        Ok(())
    }
}
