//! Knowledge-graph relation triples used as extra context during training.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::corpus::{SamplingTables, Vocabulary, SENTINEL};

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unknown relation {0:?}")]
    UnknownRelation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationTag {
    DefinedAs,
    InstanceOf,
    SimilarTo,
    Synonym,
    FormOf,
    IsA,
}

impl RelationTag {
    pub const ALL: [RelationTag; 6] = [
        RelationTag::DefinedAs,
        RelationTag::InstanceOf,
        RelationTag::SimilarTo,
        RelationTag::Synonym,
        RelationTag::FormOf,
        RelationTag::IsA,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationTag::DefinedAs => "DefinedAs",
            RelationTag::InstanceOf => "InstanceOf",
            RelationTag::SimilarTo => "SimilarTo",
            RelationTag::Synonym => "Synonym",
            RelationTag::FormOf => "FormOf",
            RelationTag::IsA => "IsA",
        }
    }

    /// Symmetric relations are mirrored at load time.
    pub fn is_symmetric(self) -> bool {
        matches!(self, RelationTag::SimilarTo | RelationTag::Synonym)
    }
}

impl fmt::Display for RelationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationTag {
    type Err = RelationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Accept ConceptNet's "/r/IsA" spelling as well as the bare name.
        let name = s.strip_prefix("/r/").unwrap_or(s);
        RelationTag::ALL
            .into_iter()
            .find(|t| t.as_str() == name)
            .ok_or_else(|| RelationError::UnknownRelation(s.to_owned()))
    }
}

/// Which stored relations may be drawn as a target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetMode {
    All,
    IsAOnly,
}

impl FromStr for TargetMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(TargetMode::All),
            "isa" | "isa-only" => Ok(TargetMode::IsAOnly),
            _ => Err(format!("unknown target mode {s:?} (expected all|isa)")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub kept: usize,
    pub drop_oov: usize,
    pub drop_rel: usize,
    pub drop_malformed: usize,
    /// Repeats of an already kept triple; not part of the log line.
    pub duplicates: usize,
}

impl fmt::Display for IngestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "kept={} drop_oov={} drop_rel={} drop_malformed={}",
            self.kept, self.drop_oov, self.drop_rel, self.drop_malformed
        )
    }
}

/// Per-word relation neighbours. `IsA` is stored hyponym -> hypernym;
/// symmetric relations are stored in both directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationStore {
    entries: Vec<Vec<(RelationTag, u32)>>,
    sentinel_id: u32,
}

impl RelationStore {
    /// An empty store for `vocab`; every word maps to the sentinel.
    pub fn empty(vocab: &Vocabulary) -> Self {
        RelationStore {
            entries: vec![Vec::new(); vocab.len()],
            sentinel_id: vocab.sentinel_id().unwrap_or(vocab.len() as u32),
        }
    }

    /// Id returned for words without a usable relation. Equal to the
    /// vocabulary's [`SENTINEL`] row when present, else one past the last id.
    pub fn sentinel_id(&self) -> u32 {
        self.sentinel_id
    }

    pub fn neighbors(&self, word: u32) -> &[(RelationTag, u32)] {
        self.entries
            .get(word as usize)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn n_entries(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    fn push(&mut self, word: u32, tag: RelationTag, neighbor: u32) {
        let list = &mut self.entries[word as usize];
        if !list.contains(&(tag, neighbor)) {
            list.push((tag, neighbor));
        }
    }

    /// Uniform draw among `word`'s entries allowed by `mode`, or
    /// `(None, sentinel_id)` when there are none.
    pub fn sample_target<R: Rng + ?Sized>(
        &self,
        word: u32,
        mode: TargetMode,
        rng: &mut R,
    ) -> (Option<RelationTag>, u32) {
        let list = self.neighbors(word);
        let allowed = |t: &RelationTag| mode == TargetMode::All || *t == RelationTag::IsA;
        let n = list.iter().filter(|(t, _)| allowed(t)).count();
        if n == 0 {
            return (None, self.sentinel_id);
        }
        let k = rng.random_range(0..n);
        let &(tag, target) = list
            .iter()
            .filter(|(t, _)| allowed(t))
            .nth(k)
            .expect("k < n");
        (Some(tag), target)
    }
}

/// Reads `relation<TAB>word1<TAB>word2` lines, keeping whitelisted
/// relations whose endpoints are both in `vocab`. Malformed lines are
/// counted and skipped; blank lines and `#` comments are ignored.
pub fn load_relations(
    path: &Path,
    vocab: &Vocabulary,
    whitelist: &[RelationTag],
) -> Result<(RelationStore, IngestReport), RelationError> {
    let file = File::open(path).map_err(|source| RelationError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        lines.push(line.map_err(|source| RelationError::Io {
            path: path.to_owned(),
            source,
        })?);
    }
    Ok(ingest(lines.iter().map(String::as_str), vocab, whitelist))
}

/// [`load_relations`] over in-memory lines.
pub fn ingest<'l>(
    lines: impl IntoIterator<Item = &'l str>,
    vocab: &Vocabulary,
    whitelist: &[RelationTag],
) -> (RelationStore, IngestReport) {
    let mut store = RelationStore::empty(vocab);
    let mut report = IngestReport::default();
    let mut seen: HashSet<(RelationTag, u32, u32)> = HashSet::new();
    for line in lines {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let [rel, source, target] = fields.as_slice() else {
            report.drop_malformed += 1;
            continue;
        };
        if rel.is_empty() || source.is_empty() || target.is_empty() {
            report.drop_malformed += 1;
            continue;
        }
        let tag = match rel.parse::<RelationTag>() {
            Ok(t) if whitelist.contains(&t) => t,
            _ => {
                report.drop_rel += 1;
                continue;
            }
        };
        let lookup = |w: &str| vocab.id(w).filter(|_| w != SENTINEL);
        let (Some(a), Some(b)) = (lookup(source), lookup(target)) else {
            report.drop_oov += 1;
            continue;
        };
        let key = if tag.is_symmetric() {
            (tag, a.min(b), a.max(b))
        } else {
            (tag, a, b)
        };
        if !seen.insert(key) {
            report.duplicates += 1;
            continue;
        }
        report.kept += 1;
        store.push(a, tag, b);
        if tag.is_symmetric() {
            store.push(b, tag, a);
        }
    }
    (store, report)
}

/// `k` negatives for the relation term, drawn independently of the context
/// negatives with the same collision rule.
pub fn resample_negatives<R: Rng + ?Sized>(
    tables: &SamplingTables,
    k: usize,
    exclude: &[u32],
    rng: &mut R,
) -> Vec<u32> {
    (0..k).map(|_| tables.draw_negative(rng, exclude)).collect()
}
