//! Acceptance run. Prints one `PASS`/`FAIL`/`SKIP` line per criterion and
//! exits non-zero if any criterion fails.
//!
//! The text8 criterion needs external data: set `GAUSS_EMBED_TEXT8` to the
//! text8 file and `GAUSS_EMBED_WS353` to a `word1<TAB>word2<TAB>score` file.

mod common;

use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use gauss_embed::artifactio::{parse_model, Model, ModelFormat};
use gauss_embed::corpus::{build_vocabulary, SamplingTables, Vocabulary};
use gauss_embed::evalsuite::{
    cosine, entailment_metrics, eval_entailment, eval_similarity, spearman, EntailmentDataset,
    EvalError, SimilarityDataset,
};
use gauss_embed::geometry::{kl_spherical, w2_diagonal, w2_spherical, EnergyKind, GaussianView};
use gauss_embed::relations::{ingest, RelationTag, TargetMode};
use gauss_embed::trainer::{
    loss_and_grad, objective_loss, train, Corpus, EmbeddingMatrix, Gradient, LossSample, Objective,
    RelationTarget, Supervision, TrainConfig,
};
use gauss_embed::DiagGaussian;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{oracles, synth};

type Check = (&'static str, fn() -> Verdict);

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, ok: bool, detail: String) -> Verdict {
    let detail = format!(
        "{detail}, {:.2}s (limit {}s)",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    verdict(ok && elapsed <= limit, detail)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn write_temp(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f.flush().unwrap();
    f
}

fn w2_vs_quantile_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (m1, m2) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let (s1, s2): (f64, f64) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let a = DiagGaussian {
            mean: vec![m1],
            variances: vec![s1 * s1],
        };
        let b = DiagGaussian {
            mean: vec![m2],
            variances: vec![s2 * s2],
        };
        let closed = w2_diagonal(&a, &b).unwrap();
        let numeric = oracles::w2_quantile_1d(m1, s1, m2, s2, 100_000);
        worst = worst.max(rel_err(closed, numeric));
    }
    within(
        start.elapsed(),
        Duration::from_secs(1),
        worst <= 2e-3,
        format!("max rel err {worst:.2e} over 10 pairs (tol 2e-3)"),
    )
}

fn epsilon_vectors() -> Verdict {
    let mut notes = Vec::new();
    let mut ok = true;
    for eps in [1e-1f64, 1e-2] {
        // Variance eps^3, so sigma = eps^1.5.
        let s = eps.powf(1.5);
        let (m0, m1) = ([0.0], [eps]);
        let (p, q) = (GaussianView::new(&m0, s), GaussianView::new(&m1, s));
        let w2 = w2_spherical(p, q).unwrap();
        let kl = kl_spherical(p, q).unwrap();
        let (ew, ek) = ((w2 - eps).abs(), (kl - 1.0 / (2.0 * eps)).abs());
        ok &= ew <= 1e-10 && ek <= 1e-6;
        notes.push(format!(
            "eps={eps:e}: |W2-eps|={ew:.1e} |KL-1/(2eps)|={ek:.1e}"
        ));
    }
    verdict(ok, notes.join("; "))
}

/// One random loss configuration for the finite-difference check.
fn random_case(
    rng: &mut ChaCha8Rng,
    dim: usize,
    case: usize,
) -> (EmbeddingMatrix<f64>, LossSample, Objective) {
    let n_words = rng.random_range(3..7usize);
    let means = (0..n_words * dim)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let sigmas = (0..n_words).map(|_| rng.random_range(0.5..2.0)).collect();
    let params = EmbeddingMatrix::new(
        dim,
        means,
        sigmas,
        rng.random_range(-1.0..2.0),
        rng.random_range(-1.0..2.0),
    );
    let other = |rng: &mut ChaCha8Rng| rng.random_range(1..n_words as u32);
    let negatives = (0..rng.random_range(1..6)).map(|_| other(rng)).collect();
    let (objective, tag) = match case % 4 {
        0 => (Objective::wdg(EnergyKind::W2), None),
        1 => (Objective::wdg(EnergyKind::W2Squared), None),
        2 => (
            Objective::wdg_ei(
                EnergyKind::W2,
                TargetMode::IsAOnly,
                rng.random_range(0.1..2.0),
            ),
            if rng.random_bool(0.8) {
                Some(RelationTag::IsA)
            } else {
                None
            },
        ),
        _ => {
            let tag = RelationTag::ALL[rng.random_range(0..RelationTag::ALL.len())];
            let energy = if rng.random_bool(0.5) {
                EnergyKind::W2
            } else {
                EnergyKind::W2Squared
            };
            (
                Objective::wdg_ei(energy, TargetMode::All, rng.random_range(0.1..2.0)),
                Some(tag),
            )
        }
    };
    let relation = objective.relations.map(|_| RelationTarget {
        tag,
        target: other(rng),
        negatives: (0..rng.random_range(1..4)).map(|_| other(rng)).collect(),
    });
    let sample = LossSample {
        center: 0,
        context: other(rng),
        negatives,
        relation,
    };
    (params, sample, objective)
}

fn gradient_check() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut grad = Gradient::default();
    // Fourth-order stencil: roundoff on losses of order 10 stays well under
    // the tolerance even for gradients near 1e-6.
    let h = 1e-3;
    for case in 0..100 {
        let dim = [1, 2, 5, 50][case % 4];
        let (mut params, sample, objective) = random_case(&mut rng, dim, case / 4);
        loss_and_grad(&sample, &params, &objective, &mut grad).unwrap();
        let fd = |params: &mut EmbeddingMatrix<f64>,
                  get: &dyn Fn(&mut EmbeddingMatrix<f64>) -> &mut f64| {
            let x = *get(params);
            let mut at = |dx: f64| {
                *get(params) = x + dx;
                objective_loss(&sample, params, &objective).unwrap()
            };
            let d = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
            *get(params) = x;
            d
        };
        for row in 0..params.n_words() as u32 {
            let (dm, ds) = match grad.row(row) {
                Some((m, s)) => (m.to_vec(), s),
                None => (vec![0.0; dim], 0.0),
            };
            for k in 0..dim {
                let n = fd(&mut params, &|p| &mut p.mean_mut(row)[k]);
                worst = worst.max(rel_err(dm[k], n));
            }
            let n = fd(&mut params, &|p| &mut p.sigmas[row as usize]);
            worst = worst.max(rel_err(ds, n));
        }
        let n1 = fd(&mut params, &|p| &mut p.bias1);
        let n2 = fd(&mut params, &|p| &mut p.bias2);
        worst = worst
            .max(rel_err(grad.d_bias1, n1))
            .max(rel_err(grad.d_bias2, n2));
    }
    within(
        start.elapsed(),
        Duration::from_secs(30),
        worst <= 1e-4,
        format!("100 configs, D in {{1,2,5,50}}, max rel err {worst:.2e} (tol 1e-4)"),
    )
}

/// `|k - n p| <= 3 sqrt(n p (1 - p))`; exact when `p` is 0 or 1.
fn binomial_ok(k: u64, n: u64, p: f64) -> bool {
    let (k, n) = (k as f64, n as f64);
    (k - n * p).abs() <= 3.0 * (n * p * (1.0 - p)).sqrt() + 1e-9
}

fn sampling_statistics() -> Verdict {
    let counts = [
        ("a", 5000u64),
        ("b", 2000),
        ("c", 500),
        ("d", 100),
        ("e", 10),
    ];
    let vocab = Vocabulary::from_counts(counts.iter().map(|&(w, c)| (w, c)), 1).unwrap();
    let total: u64 = counts.iter().map(|c| c.1).sum();
    let t = 0.01;
    let tables = SamplingTables::build(&vocab, Some(t), 1_000_000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;

    let trials = 100_000u64;
    let mut max_z: f64 = 0.0;
    for &(w, c) in &counts {
        let id = vocab.id(w).unwrap();
        let f = c as f64 / total as f64;
        let keep_p = 1.0 - (1.0 - (t / f).sqrt()).max(0.0);
        let kept = (0..trials).filter(|_| tables.keep(id, &mut rng)).count() as u64;
        ok &= binomial_ok(kept, trials, keep_p);
        let sd = (trials as f64 * keep_p * (1.0 - keep_p)).sqrt().max(1e-12);
        max_z = max_z.max((kept as f64 - trials as f64 * keep_p).abs() / sd);
    }

    let draws = 1_000_000u64;
    let mut hist = vec![0u64; vocab.len()];
    for _ in 0..draws {
        hist[tables.sample_negative(&mut rng) as usize] += 1;
    }
    let z: f64 = counts.iter().map(|c| (c.1 as f64).powf(0.75)).sum();
    for &(w, c) in &counts {
        let p = (c as f64).powf(0.75) / z;
        let k = hist[vocab.id(w).unwrap() as usize];
        ok &= binomial_ok(k, draws, p);
        max_z =
            max_z.max((k as f64 - draws as f64 * p).abs() / (draws as f64 * p * (1.0 - p)).sqrt());
    }

    let rel_vocab =
        Vocabulary::from_counts([("x", 9u64), ("p", 5), ("q", 5), ("r", 5)], 1).unwrap();
    let lines = ["IsA\tx\tp", "IsA\tx\tq", "IsA\tx\tr"];
    let (store, _) = ingest(lines, &rel_vocab, &RelationTag::ALL);
    let x = rel_vocab.id("x").unwrap();
    let mut rel_hist = vec![0u64; rel_vocab.len()];
    for _ in 0..trials {
        rel_hist[store.sample_target(x, TargetMode::All, &mut rng).1 as usize] += 1;
    }
    for w in ["p", "q", "r"] {
        let k = rel_hist[rel_vocab.id(w).unwrap() as usize];
        ok &= binomial_ok(k, trials, 1.0 / 3.0);
        max_z =
            max_z.max((k as f64 - trials as f64 / 3.0).abs() / (trials as f64 * 2.0 / 9.0).sqrt());
    }
    verdict(
        ok,
        format!("discard 5x1e5, negatives 1e6, relation targets 1e5 draws; max |z| {max_z:.2} (bound 3)"),
    )
}

fn rank_and_threshold_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut threshold_ok = true;
    for case in 0..500 {
        let n = rng.random_range(3..=20);
        let levels = rng.random_range(2..8);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..levels) as f64).collect();
        let ys: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0..levels) as f64 * 0.5)
            .collect();
        if let Ok(rho) = spearman(&xs, &ys) {
            worst = worst.max((rho - oracles::brute_spearman(&xs, &ys)).abs());
        }
        let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
        labels[0] = true;
        labels[1] = false;
        if case % 2 == 1 {
            labels.reverse();
        }
        let m = entailment_metrics(&xs, &labels).unwrap();
        worst = worst
            .max((m.best_f1 - oracles::brute_best_f1(&xs, &labels)).abs())
            .max((m.average_precision - oracles::brute_ap(&xs, &labels)).abs());
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for (&s, &l) in xs.iter().zip(&labels) {
            match (s > m.threshold, l) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        threshold_ok &= (2.0 * tp / (2.0 * tp + fp + fn_) - m.best_f1).abs() <= 1e-12;
    }
    verdict(
        worst <= 1e-12 && threshold_ok,
        format!("500 tied cases of <= 20 elements, max |diff| {worst:.1e}, threshold reproduces best F1: {threshold_ok}"),
    )
}

fn mean_cosines(params: &EmbeddingMatrix<f64>, vocab: &Vocabulary) -> (f64, f64) {
    let (mut intra, mut ni, mut inter, mut ne) = (0.0, 0, 0.0, 0);
    for i in 0..vocab.len() as u32 {
        for j in 0..i {
            let c = cosine(params.mean(i), params.mean(j));
            if synth::cluster_of(vocab.word(i).unwrap())
                == synth::cluster_of(vocab.word(j).unwrap())
            {
                intra += c;
                ni += 1;
            } else {
                inter += c;
                ne += 1;
            }
        }
    }
    (intra / ni as f64, inter / ne as f64)
}

fn two_cluster_training() -> Verdict {
    let start = Instant::now();
    let file = write_temp(&synth::two_cluster_corpus(20, 200_000, 1000, 7));
    let config = TrainConfig {
        dim: 20,
        ..TrainConfig::default()
    };
    let vocab = build_vocabulary(file.path(), config.min_count).unwrap();
    let tables = SamplingTables::build(&vocab, config.subsample, config.table_size).unwrap();
    let corpus = Corpus {
        path: file.path(),
        vocab: &vocab,
        tables: &tables,
    };
    let (params, report) = train::<f64>(corpus, None, &config).unwrap();
    let (intra, inter) = mean_cosines(&params, &vocab);
    let losses: Vec<f64> = report.epochs.iter().map(|e| e.mean_loss).collect();
    let drops = losses.windows(2).filter(|w| w[1] < w[0]).count();
    let ok = vocab.len() == 40 && intra - inter >= 0.3 && drops <= 1 && report.skipped() == 0;
    within(
        start.elapsed(),
        Duration::from_secs(120),
        ok,
        format!(
            "V={} intra {intra:.3} inter {inter:.3} gap {:.3} (min 0.3), loss drops {drops} (max 1), skipped {}",
            vocab.len(),
            intra - inter,
            report.skipped()
        ),
    )
}

fn taxonomy_entailment() -> Verdict {
    let start = Instant::now();
    let tax = synth::Taxonomy::new(4, 6);
    let train_leaves = 4;
    let held = EntailmentDataset::parse("held-out", &tax.heldout_pairs(train_leaves)).unwrap();
    let triples = tax.isa_triples(train_leaves);
    let mut wins = 0;
    let mut runs = Vec::new();
    for seed in 0..5u64 {
        let file = write_temp(&tax.corpus(200_000, 200, 100 + seed));
        let config = TrainConfig {
            dim: 20,
            seed,
            ..TrainConfig::default()
        };
        let plain = build_vocabulary(file.path(), config.min_count).unwrap();
        let vocab = plain.with_sentinel();

        let tables = SamplingTables::build(&plain, config.subsample, config.table_size).unwrap();
        let corpus = Corpus {
            path: file.path(),
            vocab: &plain,
            tables: &tables,
        };
        let (p0, _) = train::<f64>(corpus, None, &config).unwrap();
        let m0 = Model::new(plain.words().to_vec(), p0).unwrap();

        let tables = SamplingTables::build(&vocab, config.subsample, config.table_size).unwrap();
        let corpus = Corpus {
            path: file.path(),
            vocab: &vocab,
            tables: &tables,
        };
        let (store, _) = ingest(triples.lines(), &vocab, &[RelationTag::IsA]);
        let sup = Supervision {
            store: &store,
            mode: TargetMode::IsAOnly,
        };
        let (p1, _) = train::<f64>(corpus, Some(sup), &config).unwrap();
        let m1 = Model::new(vocab.words().to_vec(), p1).unwrap();

        let f0 = eval_entailment(&m0, &held).unwrap().scores.best_f1;
        let f1 = eval_entailment(&m1, &held).unwrap().scores.best_f1;
        if f1 > f0 {
            wins += 1;
        }
        runs.push(format!("{f1:.3}/{f0:.3}"));
    }
    within(
        start.elapsed(),
        Duration::from_secs(300),
        wins >= 4,
        format!(
            "WDG-ei(IsA) beats WDG best F1 in {wins}/5 seeds (need 4) [{}]",
            runs.join(" ")
        ),
    )
}

fn text8_smoke() -> Verdict {
    let (Ok(text8), Ok(ws353)) = (
        std::env::var("GAUSS_EMBED_TEXT8"),
        std::env::var("GAUSS_EMBED_WS353"),
    ) else {
        return Verdict::Skip(
            "GAUSS_EMBED_TEXT8 / GAUSS_EMBED_WS353 not set; text8 and WordSim-353 are not bundled"
                .into(),
        );
    };
    let start = Instant::now();
    let config = TrainConfig {
        dim: 50,
        epochs: 5,
        window: 5,
        negatives: 5,
        subsample: Some(1e-5),
        min_count: 5,
        threads: 1,
        ..TrainConfig::default()
    };
    let path = Path::new(&text8);
    let vocab = match build_vocabulary(path, config.min_count) {
        Ok(v) => v,
        Err(e) => return Verdict::Fail(format!("cannot read {text8}: {e}")),
    };
    let dataset = match SimilarityDataset::load(Path::new(&ws353)) {
        Ok(d) => d,
        Err(e) => return Verdict::Fail(format!("cannot read {ws353}: {e}")),
    };
    let tables = SamplingTables::build(&vocab, config.subsample, config.table_size).unwrap();
    let corpus = Corpus {
        path,
        vocab: &vocab,
        tables: &tables,
    };
    let (params, _) = train::<f64>(corpus, None, &config).unwrap();
    let model = Model::new(vocab.words().to_vec(), params).unwrap();
    match eval_similarity(&model, &dataset) {
        Ok(r) => {
            let coverage = r.covered as f64 / dataset.pairs.len() as f64;
            within(
                start.elapsed(),
                Duration::from_secs(45 * 60),
                r.rho >= 0.35 && coverage >= 0.9,
                format!(
                    "rho {:.4} (min 0.35), coverage {:.1}% (min 90%)",
                    r.rho,
                    100.0 * coverage
                ),
            )
        }
        Err(e) => Verdict::Fail(format!("evaluation failed: {e}")),
    }
}

fn bits(p: &EmbeddingMatrix<f64>) -> Vec<u64> {
    p.means
        .iter()
        .chain(&p.sigmas)
        .chain([&p.bias1, &p.bias2])
        .map(|x| x.to_bits())
        .collect()
}

fn determinism_and_round_trip() -> Verdict {
    let tax = synth::Taxonomy::new(3, 4);
    let file = write_temp(&tax.corpus(30_000, 50, 1));
    let config = TrainConfig {
        dim: 8,
        epochs: 2,
        seed: 42,
        ..TrainConfig::default()
    };
    let vocab = build_vocabulary(file.path(), config.min_count)
        .unwrap()
        .with_sentinel();
    let tables = SamplingTables::build(&vocab, config.subsample, config.table_size).unwrap();
    let corpus = Corpus {
        path: file.path(),
        vocab: &vocab,
        tables: &tables,
    };
    let triples = tax.isa_triples(2);
    let (store, _) = ingest(triples.lines(), &vocab, &RelationTag::ALL);
    let run = || {
        let sup = Supervision {
            store: &store,
            mode: TargetMode::IsAOnly,
        };
        train::<f64>(corpus, Some(sup), &config).unwrap()
    };
    let ((a, ra), (b, rb)) = (run(), run());
    let reproducible = bits(&a) == bits(&b) && ra == rb;

    let model = Model::new(vocab.words().to_vec(), a).unwrap();
    let mut exact = true;
    for format in [ModelFormat::Text, ModelFormat::Binary] {
        let back = parse_model(&model.to_bytes(format)).unwrap();
        exact &= back.words == model.words && bits(&back.params) == bits(&model.params);
    }
    verdict(
        reproducible && exact,
        format!("two seeded runs bit-identical: {reproducible}; text and binary round trips bit-exact: {exact}"),
    )
}

fn mutate(rng: &mut ChaCha8Rng, bytes: &mut Vec<u8>) {
    match rng.random_range(0..4) {
        0 => bytes.truncate(rng.random_range(0..=bytes.len())),
        1 if !bytes.is_empty() => {
            let i = rng.random_range(0..bytes.len());
            bytes[i] = rng.random();
        }
        2 => {
            let i = rng.random_range(0..=bytes.len());
            bytes.insert(i, [b'\t', b'\n', b' ', b'#', 0xff][rng.random_range(0..5)]);
        }
        _ if !bytes.is_empty() => {
            bytes.remove(rng.random_range(0..bytes.len()));
        }
        _ => {}
    }
}

fn robustness_fuzz() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let vocab = Vocabulary::from_counts([("cat", 9u64), ("animal", 7), ("dog", 5)], 1)
        .unwrap()
        .with_sentinel();
    let relations = "IsA\tcat\tanimal\nIsA\tdog\tanimal\nSynonym\tcat\tdog\n/r/PartOf\tcat\tdog\n";
    let model = {
        let params = EmbeddingMatrix::new(
            2,
            vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.0, 0.0],
            vec![0.5, 1.5, 0.7, 1.0],
            1.0,
            1.0,
        );
        Model::new(vocab.words().to_vec(), params).unwrap()
    };
    let encoded = [
        model.to_bytes(ModelFormat::Text),
        model.to_bytes(ModelFormat::Binary),
    ];
    let (mut panics, mut rel_miscount, mut model_errs, mut eval_errs) = (0, 0, 0, 0);
    for i in 0..1000 {
        let mut bytes = relations.as_bytes().to_vec();
        for _ in 0..rng.random_range(1..6) {
            mutate(&mut rng, &mut bytes);
        }
        let text = String::from_utf8_lossy(&bytes).into_owned();
        match catch_unwind(|| ingest(text.lines(), &vocab, &RelationTag::ALL)) {
            Ok((_, r)) => {
                let lines = text
                    .lines()
                    .filter(|l| !l.trim_end_matches('\r').trim().is_empty() && !l.starts_with('#'))
                    .count();
                if r.kept + r.drop_oov + r.drop_rel + r.drop_malformed + r.duplicates != lines {
                    rel_miscount += 1;
                }
            }
            Err(_) => panics += 1,
        }

        let mut bytes = encoded[i % 2].clone();
        for _ in 0..rng.random_range(1..4) {
            mutate(&mut rng, &mut bytes);
        }
        match catch_unwind(|| parse_model(&bytes).map(|_| ())) {
            Ok(Err(_)) => model_errs += 1,
            Ok(Ok(())) => {}
            Err(_) => panics += 1,
        }

        let mut pairs = String::new();
        for _ in 0..rng.random_range(1..12) {
            let w = |rng: &mut ChaCha8Rng| {
                if rng.random_bool(0.2) {
                    ["cat", "dog", "animal"][rng.random_range(0..3)].to_string()
                } else {
                    format!("oov{}", rng.random_range(0..1000))
                }
            };
            let (a, b) = (w(&mut rng), w(&mut rng));
            pairs.push_str(&format!("{a}\t{b}\t{}\n", rng.random_range(0..10)));
        }
        let sim = SimilarityDataset::parse("oov", &pairs).unwrap();
        let outcome = catch_unwind(AssertUnwindSafe(|| match eval_similarity(&model, &sim) {
            Ok(r) => r.covered + r.skipped == sim.pairs.len(),
            Err(EvalError::InsufficientCoverage { .. } | EvalError::UndefinedCorrelation(_)) => {
                true
            }
            Err(_) => false,
        }));
        match outcome {
            Ok(true) => {}
            Ok(false) => eval_errs += 1,
            Err(_) => panics += 1,
        }
    }
    verdict(
        panics == 0 && rel_miscount == 0 && eval_errs == 0,
        format!(
            "1000 mutations each: panics {panics}, relation count mismatches {rel_miscount}, \
             unexpected eval outcomes {eval_errs}, structured model errors {model_errs}"
        ),
    )
}

fn main() {
    let criteria: [Check; 10] = [
        ("closed-form W2 vs quantile coupling", w2_vs_quantile_oracle),
        ("epsilon test vectors for W2 and KL", epsilon_vectors),
        ("analytic vs finite-difference gradients", gradient_check),
        ("sampling statistics within 3 sigma", sampling_statistics),
        (
            "Spearman and entailment brute-force oracles",
            rank_and_threshold_oracles,
        ),
        ("synthetic two-cluster training", two_cluster_training),
        ("taxonomy entailment ordering", taxonomy_entailment),
        ("text8 / WordSim-353 smoke bar", text8_smoke),
        ("determinism and serialization", determinism_and_round_trip),
        ("robustness fuzz", robustness_fuzz),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = catch_unwind(check).unwrap_or_else(|_| Verdict::Fail("panicked".into()));
        let (tag, detail) = match v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("{tag} {:>2} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
