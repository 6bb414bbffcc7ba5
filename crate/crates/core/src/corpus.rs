//! Vocabulary construction, sampling tables, and (center, context) pair
//! generation over a whitespace-tokenised, line-per-sentence corpus.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Lines, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Reserved word used as the relation target of words without relations.
pub const SENTINEL: &str = "<NO_REL>";

/// Default number of entries in the negative sampling table.
pub const DEFAULT_TABLE_SIZE: usize = 1_000_000;

/// Default number of pairs shuffled together.
pub const DEFAULT_SHUFFLE_BUFFER: usize = 1 << 20;

/// Attempts made to draw a negative that differs from the excluded ids.
pub const NEGATIVE_DRAW_ATTEMPTS: usize = 8;

const VOCAB_MAGIC: &str = "#gauss-embed-vocab";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("empty vocabulary")]
    EmptyVocabulary,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}:{line}: {msg}")]
    Format {
        path: PathBuf,
        line: usize,
        msg: String,
    },
}

impl CorpusError {
    fn io(path: &Path, source: io::Error) -> Self {
        CorpusError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

/// Word/id mapping with occurrence counts. Ids are dense and assigned in
/// descending count order, ties broken by first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    id_of: HashMap<String, u32>,
    counts: Vec<u64>,
    total_tokens: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from `(word, count)` pairs given in first-seen
    /// order, keeping words with `count >= min_count`.
    pub fn from_counts<I, S>(counts: I, min_count: u64) -> Result<Self, CorpusError>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut kept: Vec<(String, u64)> = counts
            .into_iter()
            .map(|(w, c)| (w.into(), c))
            .filter(|&(_, c)| c >= min_count && c > 0)
            .collect();
        if kept.is_empty() {
            return Err(CorpusError::EmptyVocabulary);
        }
        // Stable sort keeps first-seen order among equal counts.
        kept.sort_by_key(|e| std::cmp::Reverse(e.1));
        Ok(Self::from_ordered(kept))
    }

    fn from_ordered(entries: Vec<(String, u64)>) -> Self {
        let mut words = Vec::with_capacity(entries.len());
        let mut counts = Vec::with_capacity(entries.len());
        let mut id_of = HashMap::with_capacity(entries.len());
        for (i, (w, c)) in entries.into_iter().enumerate() {
            id_of.insert(w.clone(), i as u32);
            words.push(w);
            counts.push(c);
        }
        let total_tokens = counts.iter().sum();
        Vocabulary {
            words,
            id_of,
            counts,
            total_tokens,
        }
    }

    /// Counts whitespace-separated tokens in first-seen order.
    pub fn from_text(text: &str, min_count: u64) -> Result<Self, CorpusError> {
        let mut counter = Counter::default();
        for tok in text.split_ascii_whitespace() {
            counter.add(tok);
        }
        Self::from_counts(counter.into_counts(), min_count)
    }

    /// Copy of this vocabulary with [`SENTINEL`] appended as the last id.
    /// The sentinel has count zero and never enters the negative table.
    /// Returns an unchanged copy if the sentinel is already present.
    pub fn with_sentinel(&self) -> Self {
        let mut v = self.clone();
        if !v.id_of.contains_key(SENTINEL) {
            v.id_of.insert(SENTINEL.to_owned(), v.words.len() as u32);
            v.words.push(SENTINEL.to_owned());
            v.counts.push(0);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.id_of.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Sum of the retained words' counts.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn sentinel_id(&self) -> Option<u32> {
        self.id(SENTINEL)
    }

    /// Relative frequency `count / total_tokens`.
    pub fn frequency(&self, id: u32) -> f64 {
        self.counts[id as usize] as f64 / self.total_tokens as f64
    }

    /// Writes the `word<TAB>count` vocabulary file.
    pub fn write_to(&self, mut out: impl Write) -> io::Result<()> {
        writeln!(
            out,
            "{VOCAB_MAGIC} v1 {} {}",
            self.words.len(),
            self.total_tokens
        )?;
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| CorpusError::io(path, e))
    }

    /// Reads a vocabulary file written by [`Vocabulary::save`].
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
        let bad = |line: usize, msg: String| CorpusError::Format {
            path: path.to_owned(),
            line,
            msg,
        };
        let mut lines = BufReader::new(file).lines();
        let header = match lines.next() {
            Some(l) => l.map_err(|e| CorpusError::io(path, e))?,
            None => return Err(bad(1, "missing header".into())),
        };
        let fields: Vec<&str> = header.split_ascii_whitespace().collect();
        let (v, total) = match fields.as_slice() {
            [VOCAB_MAGIC, "v1", v, t] => match (v.parse::<usize>(), t.parse::<u64>()) {
                (Ok(v), Ok(t)) => (v, t),
                _ => return Err(bad(1, format!("bad header {header:?}"))),
            },
            _ => return Err(bad(1, format!("unsupported header {header:?}"))),
        };
        let mut entries = Vec::with_capacity(v);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| CorpusError::io(path, e))?;
            let (w, c) = line
                .split_once('\t')
                .ok_or_else(|| bad(i + 2, "expected word<TAB>count".into()))?;
            let c = c
                .parse::<u64>()
                .map_err(|_| bad(i + 2, format!("bad count {c:?}")))?;
            entries.push((w.to_owned(), c));
        }
        if entries.len() != v {
            return Err(bad(
                entries.len() + 1,
                format!("header promises {v} words, found {}", entries.len()),
            ));
        }
        let vocab = Self::from_ordered(entries);
        if vocab.total_tokens != total {
            return Err(bad(1, format!("total_tokens {total} != sum of counts")));
        }
        if vocab.id_of.len() != vocab.words.len() {
            return Err(bad(1, "duplicate words".into()));
        }
        Ok(vocab)
    }
}

#[derive(Default)]
struct Counter {
    index: HashMap<String, usize>,
    entries: Vec<(String, u64)>,
}

impl Counter {
    fn add(&mut self, tok: &str) {
        match self.index.get(tok) {
            Some(&i) => self.entries[i].1 += 1,
            None => {
                self.index.insert(tok.to_owned(), self.entries.len());
                self.entries.push((tok.to_owned(), 1));
            }
        }
    }

    fn into_counts(self) -> Vec<(String, u64)> {
        self.entries
    }
}

/// Counts the corpus at `corpus_path` and keeps words seen at least
/// `min_count` times.
pub fn build_vocabulary(corpus_path: &Path, min_count: u64) -> Result<Vocabulary, CorpusError> {
    let file = File::open(corpus_path).map_err(|e| CorpusError::io(corpus_path, e))?;
    let mut counter = Counter::default();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CorpusError::io(corpus_path, e))?;
        for tok in line.split_ascii_whitespace() {
            counter.add(tok);
        }
    }
    Vocabulary::from_counts(counter.into_counts(), min_count)
}

/// Probability of discarding a token of relative frequency `frequency`:
/// `max(0, 1 - sqrt(t / frequency))`.
pub fn discard_probability(frequency: f64, t: f64) -> Result<f64, CorpusError> {
    if !(frequency > 0.0) || !(t > 0.0) {
        return Err(CorpusError::Domain(format!(
            "frequency {frequency} and threshold {t} must be positive"
        )));
    }
    Ok((1.0 - (t / frequency).sqrt()).clamp(0.0, 1.0))
}

/// Builds a table of word ids in which word `w` occupies a share
/// proportional to `count(w)^(3/4)`. Shares are apportioned by largest
/// remainder; any word with a nonzero count is then guaranteed one entry
/// (taken from the currently largest share).
pub fn build_negative_table(
    vocab: &Vocabulary,
    table_size: usize,
) -> Result<Vec<u32>, CorpusError> {
    let present = vocab.counts().iter().filter(|&&c| c > 0).count();
    if present == 0 {
        return Err(CorpusError::EmptyVocabulary);
    }
    if table_size < present {
        return Err(CorpusError::Config(format!(
            "negative table size {table_size} is smaller than the vocabulary ({present})"
        )));
    }
    let weights: Vec<f64> = vocab
        .counts()
        .iter()
        .map(|&c| (c as f64).powf(0.75))
        .collect();
    let z: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| table_size as f64 * w / z).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(table_size.saturating_sub(assigned)) {
        alloc[i] += 1;
    }
    for i in 0..alloc.len() {
        if vocab.counts()[i] > 0 && alloc[i] == 0 {
            let donor = (0..alloc.len())
                .max_by(|&a, &b| alloc[a].cmp(&alloc[b]).then(b.cmp(&a)))
                .expect("non-empty");
            alloc[donor] -= 1;
            alloc[i] = 1;
        }
    }
    let mut table = Vec::with_capacity(table_size);
    for (id, &n) in alloc.iter().enumerate() {
        table.extend(std::iter::repeat_n(id as u32, n));
    }
    Ok(table)
}

/// Per-word discard probabilities and the negative sampling table.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingTables {
    /// `None` disables sub-sampling.
    pub discard_prob: Option<Vec<f64>>,
    pub negative_table: Vec<u32>,
}

impl SamplingTables {
    /// `subsample` is the threshold `t`; `None` keeps every token.
    pub fn build(
        vocab: &Vocabulary,
        subsample: Option<f64>,
        table_size: usize,
    ) -> Result<Self, CorpusError> {
        let discard_prob = match subsample {
            Some(t) => Some(
                (0..vocab.len() as u32)
                    .map(|id| match vocab.count(id) {
                        0 => Ok(0.0),
                        _ => discard_probability(vocab.frequency(id), t),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            None => None,
        };
        Ok(SamplingTables {
            discard_prob,
            negative_table: build_negative_table(vocab, table_size)?,
        })
    }

    pub fn sample_negative<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        self.negative_table[rng.random_range(0..self.negative_table.len())]
    }

    /// Draws a negative, redrawing while it hits `exclude`. After
    /// [`NEGATIVE_DRAW_ATTEMPTS`] draws the last one is kept.
    pub fn draw_negative<R: Rng + ?Sized>(&self, rng: &mut R, exclude: &[u32]) -> u32 {
        let mut n = self.sample_negative(rng);
        for _ in 1..NEGATIVE_DRAW_ATTEMPTS {
            if !exclude.contains(&n) {
                break;
            }
            n = self.sample_negative(rng);
        }
        n
    }

    pub fn keep<R: Rng + ?Sized>(&self, id: u32, rng: &mut R) -> bool {
        match &self.discard_prob {
            Some(p) => {
                let p = p[id as usize];
                p == 0.0 || rng.random::<f64>() >= p
            }
            None => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrainingPair {
    pub center: u32,
    pub context: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairConfig {
    pub window: usize,
    /// Shrink the window per center token to a uniform size in `1..=window`.
    pub dynamic_window: bool,
    pub shuffle_buffer: usize,
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            window: 5,
            dynamic_window: false,
            shuffle_buffer: DEFAULT_SHUFFLE_BUFFER,
        }
    }
}

/// Emits `(w, c)` for every `c` within the window of `w` in an already
/// sub-sampled sentence.
pub fn window_pairs<R: Rng + ?Sized>(
    sentence: &[u32],
    window: usize,
    dynamic_window: bool,
    rng: &mut R,
    out: &mut Vec<TrainingPair>,
) {
    for (i, &center) in sentence.iter().enumerate() {
        let w = if dynamic_window && window > 1 {
            rng.random_range(1..=window)
        } else {
            window
        };
        let lo = i.saturating_sub(w);
        let hi = (i + w).min(sentence.len() - 1);
        for (j, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                out.push(TrainingPair { center, context });
            }
        }
    }
}

fn shuffle_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Shuffled stream of training pairs read lazily from a corpus file.
///
/// Sub-sampling and windowing draw from one RNG, shuffling from another,
/// so [`count_pairs`] can replay the former without shuffling.
pub struct PairStream<'a> {
    path: PathBuf,
    lines: Lines<BufReader<File>>,
    vocab: &'a Vocabulary,
    tables: &'a SamplingTables,
    config: PairConfig,
    sample_rng: ChaCha8Rng,
    shuffle_rng: ChaCha8Rng,
    sentence: Vec<u32>,
    buffer: Vec<TrainingPair>,
    done: bool,
}

impl<'a> PairStream<'a> {
    /// Next shuffled block of at most `shuffle_buffer` pairs; a single long
    /// sentence may overflow the buffer, in which case the block is larger.
    pub fn next_block(&mut self) -> Option<Result<Vec<TrainingPair>, CorpusError>> {
        let cap = self.config.shuffle_buffer.max(1);
        while !self.done && self.buffer.len() < cap {
            match self.lines.next() {
                None => self.done = true,
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(CorpusError::io(&self.path, e)));
                }
                Some(Ok(line)) => {
                    self.sentence.clear();
                    for tok in line.split_ascii_whitespace() {
                        if let Some(id) = self.vocab.id(tok) {
                            if self.tables.keep(id, &mut self.sample_rng) {
                                self.sentence.push(id);
                            }
                        }
                    }
                    window_pairs(
                        &self.sentence,
                        self.config.window,
                        self.config.dynamic_window,
                        &mut self.sample_rng,
                        &mut self.buffer,
                    );
                }
            }
        }
        if self.buffer.is_empty() {
            return None;
        }
        let mut block = std::mem::take(&mut self.buffer);
        block.shuffle(&mut self.shuffle_rng);
        Some(Ok(block))
    }
}

impl Iterator for PairStream<'_> {
    type Item = Result<Vec<TrainingPair>, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_block()
    }
}

/// Opens a pair stream over `corpus_path`. Lines are sentence boundaries;
/// tokens missing from the vocabulary are dropped, the rest are sub-sampled,
/// and windows slide over what survives.
pub fn generate_pairs<'a>(
    corpus_path: &Path,
    vocab: &'a Vocabulary,
    tables: &'a SamplingTables,
    config: PairConfig,
    seed: u64,
) -> Result<PairStream<'a>, CorpusError> {
    if config.window == 0 {
        return Err(CorpusError::Config("window must be at least 1".into()));
    }
    let file = File::open(corpus_path).map_err(|e| CorpusError::io(corpus_path, e))?;
    Ok(PairStream {
        path: corpus_path.to_owned(),
        lines: BufReader::new(file).lines(),
        vocab,
        tables,
        config,
        sample_rng: ChaCha8Rng::seed_from_u64(seed),
        shuffle_rng: ChaCha8Rng::seed_from_u64(shuffle_seed(seed)),
        sentence: Vec::new(),
        buffer: Vec::new(),
        done: false,
    })
}

/// Number of pairs [`generate_pairs`] yields for the same arguments.
pub fn count_pairs(
    corpus_path: &Path,
    vocab: &Vocabulary,
    tables: &SamplingTables,
    config: PairConfig,
    seed: u64,
) -> Result<u64, CorpusError> {
    if config.window == 0 {
        return Err(CorpusError::Config("window must be at least 1".into()));
    }
    let file = File::open(corpus_path).map_err(|e| CorpusError::io(corpus_path, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentence = Vec::new();
    let mut total = 0u64;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CorpusError::io(corpus_path, e))?;
        sentence.clear();
        for tok in line.split_ascii_whitespace() {
            if let Some(id) = vocab.id(tok) {
                if tables.keep(id, &mut rng) {
                    sentence.push(id);
                }
            }
        }
        let n = sentence.len();
        for i in 0..n {
            let w = if config.dynamic_window && config.window > 1 {
                rng.random_range(1..=config.window)
            } else {
                config.window
            };
            let lo = i.saturating_sub(w);
            let hi = (i + w).min(n - 1);
            total += (hi - lo) as u64;
        }
    }
    Ok(total)
}
