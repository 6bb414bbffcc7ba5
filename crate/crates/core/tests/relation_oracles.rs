use std::collections::HashSet;
use std::io::Write;

use gauss_embed::corpus::Vocabulary;
use gauss_embed::relations::{load_relations, RelationTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 6] = [
    "IsA",
    "SimilarTo",
    "Synonym",
    "InstanceOf",
    "DefinedAs",
    "FormOf",
];

#[derive(Debug, Default, PartialEq)]
struct Counts {
    kept: usize,
    oov: usize,
    rel: usize,
    malformed: usize,
    dup: usize,
}

/// Straight transcription of the filter rules, one line at a time.
fn brute_filter(lines: &[String], known: &[&str], whitelist: &[&str]) -> Counts {
    let mut c = Counts::default();
    let mut seen = HashSet::new();
    for line in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').map(|s| s.trim()).collect();
        if f.len() != 3 || f.iter().any(|s| s.is_empty()) {
            c.malformed += 1;
            continue;
        }
        let rel = f[0].strip_prefix("/r/").unwrap_or(f[0]);
        if !whitelist.contains(&rel) {
            c.rel += 1;
            continue;
        }
        if !known.contains(&f[1]) || !known.contains(&f[2]) {
            c.oov += 1;
            continue;
        }
        let symmetric = rel == "SimilarTo" || rel == "Synonym";
        let key = if symmetric && f[2] < f[1] {
            (rel.to_string(), f[2].to_string(), f[1].to_string())
        } else {
            (rel.to_string(), f[1].to_string(), f[2].to_string())
        };
        if seen.insert(key) {
            c.kept += 1;
        } else {
            c.dup += 1;
        }
    }
    c
}

#[test]
fn thousand_line_file_matches_brute_filter() {
    let known = ["cat", "dog", "animal", "pet", "mammal", "tail"];
    let counts = known.iter().map(|&w| (w, 10u64));
    let vocab = Vocabulary::from_counts(counts, 1).unwrap().with_sentinel();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut lines = Vec::new();
    for _ in 0..1000 {
        let word = |rng: &mut ChaCha8Rng| {
            if rng.random_bool(0.8) {
                known[rng.random_range(0..known.len())].to_string()
            } else {
                ["zebra", "<NO_REL>", "Cat"][rng.random_range(0..3)].to_string()
            }
        };
        let rel = match rng.random_range(0..10) {
            0 => ["Antonym", "PartOf"][rng.random_range(0..2)].to_string(),
            1 => format!("/r/{}", NAMES[rng.random_range(0..6)]),
            _ => NAMES[rng.random_range(0..6)].to_string(),
        };
        let line = match rng.random_range(0..20) {
            0 => String::new(),
            1 => format!("# {rel}"),
            2 => format!("{rel}\t{}", word(&mut rng)),
            3 => format!("{rel}\t{}\t{}\textra", word(&mut rng), word(&mut rng)),
            4 => format!("{rel}\t\t{}", word(&mut rng)),
            _ => format!("{rel}\t{}\t{}", word(&mut rng), word(&mut rng)),
        };
        lines.push(line);
    }
    let whitelist = [
        RelationTag::IsA,
        RelationTag::SimilarTo,
        RelationTag::Synonym,
        RelationTag::InstanceOf,
    ];
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(lines.join("\n").as_bytes()).unwrap();
    let (store, report) = load_relations(f.path(), &vocab, &whitelist).unwrap();
    let expected = brute_filter(
        &lines,
        &known,
        &["IsA", "SimilarTo", "Synonym", "InstanceOf"],
    );
    let got = Counts {
        kept: report.kept,
        oov: report.drop_oov,
        rel: report.drop_rel,
        malformed: report.drop_malformed,
        dup: report.duplicates,
    };
    assert_eq!(got, expected);
    assert!(expected.kept > 0 && expected.oov > 0 && expected.rel > 0 && expected.malformed > 0);
    assert!(store.n_entries() >= report.kept);
}
