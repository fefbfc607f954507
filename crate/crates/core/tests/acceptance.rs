//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p sent2vec --test acceptance`.

mod common;

use std::collections::HashMap;
use std::io::Cursor;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sent2vec::corpus::WordEntry;
use sent2vec::io::{read_model, write_model, write_text_vectors};
use sent2vec::model::{l1_prox, ngram_dropout, soft_threshold};
use sent2vec::sampling::{keep_probability, keep_token, negative_probabilities};
use sent2vec::trainer::train_corpus;
use sent2vec::{
    cosine, embed_sentence, extract_ngrams, norm_profile, pearson, spearman, train_step, EmbeddingMatrices, Model,
    NegativeTable, Preset, SentenceIndices, Step, StepWorkspace, TrainConfig, TrainingCorpus, Vocabulary,
};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed < limit
}

// ---------------------------------------------------------------- oracles

/// `ln(1 + e^{-x})` written independently of the library.
fn softplus_neg(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Masked context computed from first principles: every unigram except the
/// one at `pos`, plus every n-gram whose span does not include `pos`.
fn oracle_context(s: &SentenceIndices, pos: usize) -> Vec<u32> {
    let mut ctx: Vec<u32> = s
        .unigram_ids
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pos)
        .map(|(_, &id)| id)
        .collect();
    for (j, &id) in s.ngram_ids.iter().enumerate() {
        let span = s.ngram_spans[j];
        if !(span.start <= pos && pos <= span.end) {
            ctx.push(id);
        }
    }
    ctx
}

fn oracle_loss(m: &EmbeddingMatrices<f64>, ctx: &[u32], target: u32, negatives: &[u32]) -> f64 {
    let h = m.dim();
    let mut v = vec![0.0; h];
    for &id in ctx {
        for (a, b) in v.iter_mut().zip(m.source_row(id)) {
            *a += b;
        }
    }
    for a in &mut v {
        *a /= ctx.len() as f64;
    }
    let score = |row: u32| m.target_row(row).iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
    softplus_neg(score(target)) + negatives.iter().map(|&n| softplus_neg(-score(n))).sum::<f64>()
}

// ---------------------------------------------------------------- 1

fn gradient_oracle() -> Verdict {
    const EPS: f64 = 1e-3;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (h, vocab, buckets) = (5usize, 9usize, 6u32);
    let mut worst: f64 = 0.0;
    let mut partials = 0usize;
    let mut bad_untouched = 0usize;

    for _ in 0..200 {
        let len = rng.random_range(2..=7);
        let ids: Vec<u32> = (0..len).map(|_| rng.random_range(0..vocab as u32)).collect();
        let n = rng.random_range(1..=3);
        let sentence = extract_ngrams(&ids, n, vocab, buckets);
        let pos = rng.random_range(0..len);
        let target = ids[pos];
        let k = rng.random_range(0..=5);
        let negatives: Vec<u32> = (0..k)
            .map(|_| loop {
                let id = rng.random_range(0..vocab as u32);
                if id != target {
                    break id;
                }
            })
            .collect();

        let mut m = EmbeddingMatrices::<f64>::zeros(vocab, buckets as usize, h);
        for x in m.source_mut() {
            *x = rng.random_range(-1.0..1.0);
        }
        for x in m.target_mut() {
            *x = rng.random_range(-1.0..1.0);
        }

        let ctx = oracle_context(&sentence, pos);
        let mut stepped = m.clone();
        let mut ws = StepWorkspace::new(h);
        let step = train_step(&mut stepped, &sentence, pos, &negatives, 1.0, &mut ws).unwrap();
        assert!(matches!(step, Step::Trained(_)) == !ctx.is_empty());
        if ctx.is_empty() {
            continue;
        }

        let mut check = |analytic: f64, fd: f64| {
            let scale = analytic.abs().max(fd.abs());
            let rel = if scale == 0.0 { 0.0 } else { (analytic - fd).abs() / scale };
            worst = worst.max(rel);
            partials += 1;
        };

        let touched_src: Vec<u32> = {
            let mut t = ctx.clone();
            t.sort_unstable();
            t.dedup();
            t
        };
        for row in 0..m.source_rows() as u32 {
            for c in 0..h {
                let i = row as usize * h + c;
                let analytic = m.source()[i] - stepped.source()[i];
                if !touched_src.contains(&row) {
                    bad_untouched += usize::from(analytic != 0.0);
                    continue;
                }
                let mut plus = m.clone();
                plus.source_mut()[i] += EPS;
                let mut minus = m.clone();
                minus.source_mut()[i] -= EPS;
                let fd = (oracle_loss(&plus, &ctx, target, &negatives)
                    - oracle_loss(&minus, &ctx, target, &negatives))
                    / (2.0 * EPS);
                check(analytic, fd);
            }
        }
        for row in 0..vocab as u32 {
            let used = row == target || negatives.contains(&row);
            for c in 0..h {
                let i = row as usize * h + c;
                let analytic = m.target()[i] - stepped.target()[i];
                if !used {
                    bad_untouched += usize::from(analytic != 0.0);
                    continue;
                }
                let mut plus = m.clone();
                plus.target_mut()[i] += EPS;
                let mut minus = m.clone();
                minus.target_mut()[i] -= EPS;
                let fd = (oracle_loss(&plus, &ctx, target, &negatives)
                    - oracle_loss(&minus, &ctx, target, &negatives))
                    / (2.0 * EPS);
                check(analytic, fd);
            }
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst < 1e-4 && bad_untouched == 0 && within(Duration::from_secs(5), elapsed),
        format!(
            "{partials} partials, max rel err {worst:.2e}, \
             {bad_untouched} stray updates, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 2

fn vocab_from_counts(counts: &[u64]) -> Vocabulary {
    let words = counts
        .iter()
        .enumerate()
        .map(|(i, &count)| WordEntry {
            word: format!("w{i}"),
            count,
        })
        .collect();
    Vocabulary::from_entries(words, counts.iter().sum(), 1, 1).unwrap()
}

fn sampler_fidelity() -> Verdict {
    let start = Instant::now();
    let counts: Vec<u64> = (0..50u64).map(|r| 20_000 / (r + 1) + 3).collect();
    let vocab = vocab_from_counts(&counts);
    let table = NegativeTable::build(&vocab, 10_000_000, 1, 5).unwrap();
    let q = negative_probabilities(&counts).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_tv: f64 = 0.0;
    // Draws exclude the target, so their law is q_n conditioned on w ≠ target.
    for target in [0u32, 17, 49] {
        let draws = table.sample(target, 1_000_000, &mut rng).unwrap();
        let mut hist = vec![0u64; counts.len()];
        for d in draws {
            hist[d as usize] += 1;
        }
        let rest = 1.0 - q[target as usize];
        let tv: f64 = 0.5
            * (0..counts.len())
                .map(|w| {
                    let expected = if w == target as usize { 0.0 } else { q[w] / rest };
                    (hist[w] as f64 / 1e6 - expected).abs()
                })
                .sum::<f64>();
        worst_tv = worst_tv.max(tv);
    }

    let t = 1e-3;
    let mut worst_keep: f64 = 0.0;
    for id in 0..vocab.len() as u32 {
        let q_p = keep_probability(vocab.frequency(id), t).unwrap();
        let trials = 1_000_000;
        let kept = (0..trials).filter(|_| keep_token(q_p as f32, &mut rng)).count();
        worst_keep = worst_keep.max((kept as f64 / trials as f64 - q_p).abs());
    }
    let elapsed = start.elapsed();
    Verdict::new(
        worst_tv <= 0.01 && worst_keep <= 0.01 && within(Duration::from_secs(10), elapsed),
        format!(
            "max TV {worst_tv:.4} over 3 targets × 1e6 draws, max |keep − q_p| {worst_keep:.4}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 3

fn zero_fixed_point() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (vocab, buckets, h) = (12usize, 8u32, 7usize);
    let mut failures = 0;
    let mut steps = 0;
    for _ in 0..500 {
        let len = rng.random_range(2..=9);
        let ids: Vec<u32> = (0..len).map(|_| rng.random_range(0..vocab as u32)).collect();
        let sentence = extract_ngrams(&ids, 2, vocab, buckets);
        let pos = rng.random_range(0..len);
        let k = rng.random_range(0..=20);
        let negatives: Vec<u32> = (0..k)
            .map(|_| loop {
                let id = rng.random_range(0..vocab as u32);
                if id != ids[pos] {
                    break id;
                }
            })
            .collect();
        let mut m = EmbeddingMatrices::<f32>::zeros(vocab, buckets as usize, h);
        let mut ws = StepWorkspace::new(h);
        match train_step(&mut m, &sentence, pos, &negatives, 0.2, &mut ws).unwrap() {
            Step::Trained(out) => {
                steps += 1;
                let expected = (1 + k) as f64 * std::f64::consts::LN_2;
                let unchanged = m.source().iter().chain(m.target()).all(|&x| x == 0.0);
                if out.loss != expected || !unchanged {
                    failures += 1;
                }
            }
            Step::Skipped => {}
        }
    }
    Verdict::new(
        failures == 0 && steps > 0,
        format!("{steps} steps with |N| ≤ 20, {failures} with loss ≠ (1+|N|)·ln 2 or a non-zero update"),
    )
}

// ---------------------------------------------------------------- 4

fn serialize(model: &Model) -> Vec<u8> {
    let mut buf = Vec::new();
    write_model(model, &mut buf).unwrap();
    buf
}

fn determinism() -> Verdict {
    let lines = common::zipf_sentences(10_000, 12, 3_000, 4);
    let corpus = TrainingCorpus::from_lines(&lines, false, 2, 2).unwrap();
    let config = TrainConfig {
        dim: 32,
        epochs: 2,
        word_ngrams: 2,
        buckets: 50_000,
        dropout_k: 2,
        l1_tau: 0.0005,
        threads: 1,
        seed: 42,
        negative_table_size: 1_000_000,
        ..TrainConfig::default()
    };
    let a = serialize(&train_corpus(&corpus, &config).unwrap().model);
    let b = serialize(&train_corpus(&corpus, &config).unwrap().model);
    Verdict::new(a == b, format!("{} corpus sentences, model files of {} and {} bytes", lines.len(), a.len(), b.len()))
}

// ---------------------------------------------------------------- 5

fn learning_signal() -> Verdict {
    let start = Instant::now();
    let lines: Vec<String> = common::two_topic_sentences(20_000, 5).into_iter().map(|(s, _)| s).collect();
    let preset = Preset::BooksUni.config();
    let config = TrainConfig {
        dim: 50,
        epochs: 5,
        threads: 1,
        seed: 5,
        ..preset
    };
    let corpus = TrainingCorpus::from_lines(&lines, false, config.min_count, config.min_target_count).unwrap();
    let model = train_corpus(&corpus, &config).unwrap().model;

    let held_out = common::two_topic_sentences(400, 55);
    let vecs: Vec<(Vec<f32>, usize)> = held_out
        .iter()
        .map(|(s, topic)| (embed_sentence(&model, s).vector, *topic))
        .collect();
    let (mut within_sum, mut within_n, mut cross_sum, mut cross_n) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..vecs.len() {
        for j in i + 1..vecs.len() {
            let c = cosine(&vecs[i].0, &vecs[j].0);
            if vecs[i].1 == vecs[j].1 {
                within_sum += c;
                within_n += 1;
            } else {
                cross_sum += c;
                cross_n += 1;
            }
        }
    }
    let within_mean = within_sum / within_n as f64;
    let cross_mean = cross_sum / cross_n as f64;
    let elapsed = start.elapsed();
    Verdict::new(
        within_mean - cross_mean >= 0.2 && within(Duration::from_secs(120), elapsed),
        format!(
            "within-topic {within_mean:.3}, cross-topic {cross_mean:.3}, gap {:.3}, {:.1}s",
            within_mean - cross_mean,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 6

fn norm_frequency_profile() -> Verdict {
    let start = Instant::now();
    let config = TrainConfig {
        dim: 100,
        min_count: 5,
        min_target_count: 5,
        lr: 0.5,
        epochs: 20,
        subsample: 1e-4,
        word_ngrams: 1,
        buckets: 0,
        dropout_k: 0,
        negatives: 10,
        seed: 6,
        ..TrainConfig::default()
    };
    let (source, corpus) = match std::env::var_os("S2V_NATURAL_CORPUS") {
        Some(path) => (
            format!("{}", path.to_string_lossy()),
            TrainingCorpus::from_path(&path, true, config.min_count, config.min_target_count).unwrap(),
        ),
        None => {
            let lines = common::prose_like_text(10_000_000, 6);
            (
                "10 MB synthetic prose-like text".to_owned(),
                TrainingCorpus::from_lines(&lines, false, config.min_count, config.min_target_count).unwrap(),
            )
        }
    };
    let model = train_corpus(&corpus, &config).unwrap().model;
    let profile = norm_profile(&model);
    let top = profile.band_mean(0.0, 0.01).unwrap();
    let mid = profile.band_mean(0.4, 0.6).unwrap();
    let bottom = profile.band_mean(0.99, 1.0).unwrap();
    let elapsed = start.elapsed();
    Verdict::new(
        top < mid && bottom < mid && within(Duration::from_secs(600), elapsed),
        format!(
            "{source}, |V|={}: mean norm top-1% {top:.4}, 40–60% {mid:.4}, bottom-1% {bottom:.4}, {:.1}s",
            model.vocab.len(),
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------- 7

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    sxy * sxy / (sxx * syy)
}

fn efficiency() -> Verdict {
    // Touched-row accounting on real sentences with dropout.
    let lines = common::zipf_sentences(2_000, 14, 500, 7);
    let corpus = TrainingCorpus::from_lines(&lines, false, 1, 1).unwrap();
    let vocab = corpus.vocab().len();
    let buckets = 1_000u32;
    let mut m = EmbeddingMatrices::<f32>::random(vocab, buckets as usize, 16, &mut ChaCha8Rng::seed_from_u64(7));
    let mut ws = StepWorkspace::new(16);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut steps, mut mismatches) = (0, 0);
    for i in 0..corpus.len() {
        let ids = corpus.sentence(i);
        let full = extract_ngrams(ids, 3, vocab, buckets);
        let sentence = ngram_dropout(&full, 2, &mut rng);
        let pos = rng.random_range(0..ids.len());
        let k = rng.random_range(0..=10);
        let negatives: Vec<u32> = (0..k)
            .map(|_| loop {
                let id = rng.random_range(0..vocab as u32);
                if id != ids[pos] {
                    break id;
                }
            })
            .collect();
        let expected = oracle_context(&sentence, pos).len();
        if let Step::Trained(out) = train_step(&mut m, &sentence, pos, &negatives, 0.1, &mut ws).unwrap() {
            steps += 1;
            if out.source_row_updates + out.target_row_updates != expected + 1 + k
                || out.source_row_updates != expected
            {
                mismatches += 1;
            }
        }
    }

    // Wall-clock scaling with corpus size.
    let base = common::zipf_sentences(40_000, 14, 5_000, 8);
    let config = TrainConfig {
        dim: 50,
        epochs: 1,
        word_ngrams: 2,
        buckets: 100_000,
        threads: 1,
        seed: 8,
        negative_table_size: 1_000_000,
        ..TrainConfig::default()
    };
    // Rounds interleave the sizes so that a slow spell on a shared machine
    // does not land on a single size; the fastest round per size is kept.
    let corpora: Vec<TrainingCorpus> = [1usize, 2, 4]
        .iter()
        .map(|&factor| TrainingCorpus::from_lines(&base[..10_000 * factor], false, 1, 1).unwrap())
        .collect();
    let sizes: Vec<f64> = corpora.iter().map(|c| c.len() as f64).collect();
    let mut times = vec![f64::INFINITY; corpora.len()];
    for _ in 0..5 {
        for (corpus, best) in corpora.iter().zip(&mut times) {
            let t = Instant::now();
            train_corpus(corpus, &config).unwrap();
            *best = best.min(t.elapsed().as_secs_f64());
        }
    }
    let r2 = r_squared(&sizes, &times);
    Verdict::new(
        mismatches == 0 && steps > 0 && r2 > 0.98,
        format!(
            "{steps} steps, {mismatches} touched-count mismatches; times {:.3}/{:.3}/{:.3}s for 1×/2×/4×, R² {r2:.5}",
            times[0], times[1], times[2]
        ),
    )
}

// ---------------------------------------------------------------- 8

fn l1_behaviour() -> Verdict {
    let lines = common::zipf_sentences(20_000, 12, 3_000, 9);
    let corpus = TrainingCorpus::from_lines(&lines, false, 5, 5).unwrap();
    let base = TrainConfig {
        dim: 50,
        epochs: 2,
        subsample: 5e-6,
        word_ngrams: 2,
        buckets: 20_000,
        dropout_k: 2,
        threads: 1,
        seed: 10,
        negative_table_size: 1_000_000,
        ..TrainConfig::default()
    };
    let zero_fraction = |tau: f64| {
        let config = TrainConfig { l1_tau: tau, ..base.clone() };
        let model = train_corpus(&corpus, &config).unwrap().model;
        let src = model.matrices.source();
        src.iter().filter(|&&x| x == 0.0).count() as f64 / src.len() as f64
    };
    let sparse = zero_fraction(0.0005);
    let dense = zero_fraction(0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    let xs: Vec<f64> = (0..100_000).map(|_| rng.random_range(-1.0..1.0)).collect();
    let alphas: Vec<f64> = (0..100_000).map(|_| rng.random_range(0.0..0.5)).collect();
    for (&x, &a) in xs.iter().zip(&alphas) {
        let y = soft_threshold(x, a);
        let shrinks = y.abs() <= x.abs();
        let sign_kept = y == 0.0 || y.signum() == x.signum();
        let dead_zone = x.abs() > a || y == 0.0;
        let magnitude = (y.abs() - (x.abs() - a).max(0.0)).abs() <= 1e-15;
        violations += usize::from(!(shrinks && sign_kept && dead_zone && magnitude));
    }
    let mut block = xs.clone();
    l1_prox(&mut block, 0.25);
    violations += block
        .iter()
        .zip(&xs)
        .filter(|&(&y, &x)| y != soft_threshold(x, 0.25))
        .count();
    Verdict::new(
        sparse > dense && violations == 0,
        format!("zero fraction τ=0.0005 {sparse:.5} vs τ=0 {dense:.5}; {violations} prox-law violations on 1e5 scalars"),
    )
}

// ---------------------------------------------------------------- 9

fn serialization() -> Verdict {
    let lines = ["the cat sat on the mat", "the dog sat", "a cat and a dog"];
    let corpus = TrainingCorpus::from_lines(&lines, false, 1, 1).unwrap();
    let config = TrainConfig {
        dim: 4,
        min_count: 1,
        min_target_count: 1,
        epochs: 3,
        word_ngrams: 2,
        buckets: 10,
        threads: 1,
        negative_table_size: 1_000,
        ..TrainConfig::default()
    };
    let model = train_corpus(&corpus, &config).unwrap().model;
    let bytes = serialize(&model);
    let back = read_model(Cursor::new(&bytes)).unwrap();
    let bits = |m: &Model| -> Vec<u32> {
        m.matrices.source().iter().chain(m.matrices.target()).map(|x| x.to_bits()).collect()
    };
    let bit_exact = back.vocab == model.vocab
        && back.word_ngrams == model.word_ngrams
        && back.subsample.to_bits() == model.subsample.to_bits()
        && bits(&back) == bits(&model)
        && serialize(&back) == bytes;

    let (v, h, b) = (model.vocab.len() as u64, model.dim() as u64, model.buckets() as u64);
    let word_bytes: u64 = model.vocab.entries().iter().map(|e| 4 + e.word.len() as u64 + 8).sum();
    let layout = 48 + word_bytes + 4 * h * (v + b) + 4 * h * v;

    let mut text = Vec::new();
    write_text_vectors(&model, &mut text).unwrap();
    let text = String::from_utf8(text).unwrap();
    let mut lines_iter = text.lines();
    let header_ok = lines_iter.next() == Some(format!("{v} {h}").as_str());
    let mut worst: f64 = 0.0;
    let mut parsed_rows = 0;
    let word_ids: HashMap<&str, u32> =
        model.vocab.entries().iter().enumerate().map(|(i, e)| (e.word.as_str(), i as u32)).collect();
    for line in lines_iter {
        let mut fields = line.split(' ');
        let id = word_ids[fields.next().unwrap()];
        let values: Vec<f64> = fields.map(|f| f.parse().unwrap()).collect();
        assert_eq!(values.len(), h as usize);
        for (&parsed, &orig) in values.iter().zip(model.matrices.source_row(id)) {
            let orig = f64::from(orig);
            let rel = if orig == 0.0 { parsed.abs() } else { (parsed - orig).abs() / orig.abs() };
            worst = worst.max(rel);
        }
        parsed_rows += 1;
    }
    Verdict::new(
        bit_exact && bytes.len() as u64 == layout && header_ok && parsed_rows == v && worst < 1e-5,
        format!(
            "round trip bit-exact: {bit_exact}; size {} vs layout {layout}; text export {parsed_rows} rows, max rel err {worst:.2e}",
            bytes.len()
        ),
    )
}

// ---------------------------------------------------------------- 10

/// Pearson correlation through the pairwise identity
/// `r = Σ_{i<j} ΔxΔy / √(Σ Δx² · Σ Δy²)`, which needs no means.
fn brute_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (dx, dy) = (x[i] - x[j], y[i] - y[j]);
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Average rank of each value by counting: 1 + #smaller + (#equal − 1)/2.
fn brute_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&a| {
            let less = x.iter().filter(|&&b| b < a).count() as f64;
            let equal = x.iter().filter(|&&b| b == a).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

fn statistics_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut worst, mut degenerate, mut disagreements) = (0.0f64, 0, 0);
    for case in 0..1_000 {
        let n = rng.random_range(2..=50);
        let draw = |rng: &mut ChaCha8Rng| -> f64 {
            match case % 3 {
                0 => rng.random_range(-1.0..1.0),
                1 => f64::from(rng.random_range(0..5u8)),
                _ => rng.random_range(-1e3..1e3),
            }
        };
        let x: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| draw(&mut rng)).collect();
        for (lib, oracle) in [
            (pearson(&x, &y).ok(), brute_pearson(&x, &y)),
            (spearman(&x, &y).ok(), brute_pearson(&brute_ranks(&x), &brute_ranks(&y))),
        ] {
            match (lib, oracle) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => degenerate += 1,
                _ => disagreements += 1,
            }
        }
    }
    Verdict::new(
        worst <= 1e-12 && disagreements == 0,
        format!("max |Δ| {worst:.2e} over 2000 statistics, {degenerate} agreed degenerate, {disagreements} disagreements"),
    )
}

// ---------------------------------------------------------------- driver

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 10] = [
        ("gradient oracle", gradient_oracle),
        ("sampler fidelity", sampler_fidelity),
        ("zero fixed point", zero_fixed_point),
        ("determinism", determinism),
        ("learning signal", learning_signal),
        ("norm-frequency profile", norm_frequency_profile),
        ("efficiency contract", efficiency),
        ("L1 behaviour", l1_behaviour),
        ("serialization", serialization),
        ("statistics oracle", statistics_oracle),
    ];
    let filter: Vec<usize> = std::env::var("S2V_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect())
        .unwrap_or_default();

    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !filter.is_empty() && !filter.contains(&number) {
            continue;
        }
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        });
        let status = if verdict.pass { "PASS" } else { "FAIL" };
        println!("criterion {number:>2} {status} {name}: {}", verdict.detail);
        failed += usize::from(!verdict.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
