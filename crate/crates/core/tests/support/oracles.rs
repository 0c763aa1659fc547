//! Library results checked against independent, deliberately naive
//! reimplementations. Each check panics on mismatch.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rolebench_core::corpus::{DatasetId, MetaLabel, SentenceRecord};
use rolebench_core::eval::{confusion, f1_score, prf1};
use rolebench_core::svm::{
    default_grid, grid_search, primal_objective, train_linear_svm, ClassWeight, FeatureConfig, SparseVector,
    SvmHyperparams, Vocabulary,
};

fn label(facts: bool) -> MetaLabel {
    if facts {
        MetaLabel::Facts
    } else {
        MetaLabel::NonFacts
    }
}

fn rec(doc: &str, i: usize, text: &str, l: MetaLabel) -> SentenceRecord {
    SentenceRecord {
        dataset_id: DatasetId::Bva,
        doc_id: doc.into(),
        sent_index: i,
        text: text.into(),
        source_label: String::new(),
        meta_label: Some(l),
    }
}

pub fn confusion_matches_brute_force_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let n = rng.random_range(1..40);
        let pred: Vec<MetaLabel> = (0..n).map(|_| label(rng.random_bool(0.4))).collect();
        let gold: Vec<MetaLabel> = (0..n).map(|_| label(rng.random_bool(0.3))).collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for k in 0..n {
            let p = pred[k] == MetaLabel::Facts;
            let g = gold[k] == MetaLabel::Facts;
            if p && g {
                tp += 1;
            }
            if p && !g {
                fp += 1;
            }
            if !p && g {
                fn_ += 1;
            }
            if !p && !g {
                tn += 1;
            }
        }
        let c = confusion(&pred, &gold).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn, c.n_sentences), (tp, fp, fn_, tn, n));
        let p = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let r = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        assert_eq!(prf1(&c).f1, f);
    }
}

/// Count-then-weigh TF-IDF, written without the library's helpers.
fn naive_tfidf(train: &[String], text: &str) -> BTreeMap<String, f64> {
    fn grams(s: &str) -> Vec<String> {
        let lower = s.to_lowercase();
        let words: Vec<&str> = lower
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let mut out = Vec::new();
        for n in 1..=3 {
            if words.len() >= n {
                for start in 0..=words.len() - n {
                    out.push(words[start..start + n].join(" "));
                }
            }
        }
        out
    }
    let n_docs = train.len() as f64;
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for s in train {
        let mut seen: Vec<String> = grams(s);
        seen.sort();
        seen.dedup();
        for g in seen {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let mut weights: BTreeMap<String, f64> = BTreeMap::new();
    for g in grams(text) {
        if let Some(d) = df.get(&g) {
            let idf = ((1.0 + n_docs) / (1.0 + *d as f64)).ln() + 1.0;
            *weights.entry(g).or_insert(0.0) += idf;
        }
    }
    let norm: f64 = weights.values().map(|w| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for w in weights.values_mut() {
            *w /= norm;
        }
    }
    weights
}

pub fn tfidf_matches_naive_recomputation() {
    let words = [
        "the",
        "veteran",
        "court",
        "held",
        "pain",
        "knee",
        "in",
        "1999",
        "claim",
        "Évidence",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for round in 0..20 {
        let n = rng.random_range(1..=50);
        let sentence = |rng: &mut ChaCha8Rng| {
            let len = rng.random_range(0..12);
            (0..len)
                .map(|_| words[rng.random_range(0..words.len())])
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut train: Vec<String> = (0..n).map(|_| sentence(&mut rng)).collect();
        train[0].push_str(" the");
        let vocab = Vocabulary::fit(train.iter().map(String::as_str), FeatureConfig::default()).unwrap();
        for _ in 0..10 {
            let text = sentence(&mut rng);
            let got = vocab.vectorize(&text);
            let want = naive_tfidf(&train, &text);
            assert_eq!(got.entries().len(), want.len(), "round {round}: {text}");
            for &(i, w) in got.entries() {
                let expected = want[vocab.ngram(i)];
                assert!(
                    (w - expected).abs() <= 1e-12,
                    "round {round}: {} {w} vs {expected}",
                    vocab.ngram(i)
                );
            }
        }
    }
}

fn oracle_pick(grid: &[SvmHyperparams], f1s: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..grid.len() {
        let better_f1 = f1s[i] > f1s[best];
        let tie_smaller_c = f1s[i] == f1s[best] && grid[i].c < grid[best].c;
        if better_f1 || tie_smaller_c {
            best = i;
        }
    }
    best
}

pub fn grid_search_matches_train_all_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pos = ["injury", "testified", "reported", "knee", "examination"];
    let neg = ["law", "statute", "therefore", "held", "regulation"];
    let shared = ["the", "veteran", "board", "claim"];
    let mut make = |doc: &str, n: usize| -> Vec<SentenceRecord> {
        (0..n)
            .map(|i| {
                let facts = rng.random_bool(0.35);
                let flip = rng.random_bool(0.1);
                let src = if facts ^ flip { &pos } else { &neg };
                let words: Vec<&str> = (0..6)
                    .map(|k| {
                        if k % 2 == 0 {
                            src[rng.random_range(0..5)]
                        } else {
                            shared[rng.random_range(0..4)]
                        }
                    })
                    .collect();
                rec(doc, i, &words.join(" "), label(facts))
            })
            .collect()
    };
    let train = make("t", 60);
    let validation = make("v", 30);
    let grid = vec![
        SvmHyperparams {
            c: 0.01,
            ..Default::default()
        },
        SvmHyperparams {
            c: 0.1,
            class_weight: ClassWeight::Balanced,
            ..Default::default()
        },
        SvmHyperparams {
            c: 1.0,
            ..Default::default()
        },
        SvmHyperparams {
            c: 10.0,
            class_weight: ClassWeight::Balanced,
            ..Default::default()
        },
    ];

    let vocab = Vocabulary::fit(train.iter().map(|s| s.text.as_str()), FeatureConfig::default()).unwrap();
    let x: Vec<SparseVector> = train.iter().map(|s| vocab.vectorize(&s.text)).collect();
    let y: Vec<MetaLabel> = train.iter().map(|s| s.meta_label.unwrap()).collect();
    let gold: Vec<MetaLabel> = validation.iter().map(|s| s.meta_label.unwrap()).collect();
    let mut models = Vec::new();
    let mut f1s = Vec::new();
    for h in &grid {
        let m = train_linear_svm(&x, &y, vocab.len(), h).unwrap();
        let pred: Vec<MetaLabel> = validation
            .iter()
            .map(|s| m.predict(&vocab.vectorize(&s.text)).0)
            .collect();
        f1s.push(f1_score(&pred, &gold).unwrap());
        models.push(m);
    }
    let best = oracle_pick(&grid, &f1s);

    let out = grid_search(&train, &validation, &grid, FeatureConfig::default()).unwrap();
    assert_eq!(out.chosen, grid[best]);
    assert_eq!(out.val_f1, f1s[best]);
    let bits = |w: &[f64]| w.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&out.model.svm.weights), bits(&models[best].weights));
    assert_eq!(out.model.svm.bias.to_bits(), models[best].bias.to_bits());
    let trial_f1s: Vec<f64> = out.trials.iter().map(|t| t.val_f1.unwrap()).collect();
    assert_eq!(trial_f1s, f1s);
}

pub fn over_regularized_combination_loses() {
    // Training: 7 "fact" Facts sentences, 3 "other" NonFacts sentences. With a
    // tiny C every dual variable sits at its bound, the bias dominates and
    // everything is called Facts: on this validation set that is F1 = 0.5.
    // A large C separates the two tokens: 9 TP, 1 FP, 1 FN, F1 = 0.9.
    let mut train = Vec::new();
    for i in 0..7 {
        train.push(rec("t", i, "fact", MetaLabel::Facts));
    }
    for i in 7..10 {
        train.push(rec("t", i, "other", MetaLabel::NonFacts));
    }
    let mut validation = Vec::new();
    for i in 0..9 {
        validation.push(rec("v", i, "fact", MetaLabel::Facts));
    }
    validation.push(rec("v", 9, "other", MetaLabel::Facts));
    validation.push(rec("v", 10, "fact", MetaLabel::NonFacts));
    for i in 11..30 {
        validation.push(rec("v", i, "other", MetaLabel::NonFacts));
    }
    let grid = vec![
        SvmHyperparams {
            c: 0.001,
            ..Default::default()
        },
        SvmHyperparams {
            c: 10.0,
            ..Default::default()
        },
    ];
    let out = grid_search(&train, &validation, &grid, FeatureConfig::default()).unwrap();
    let f1s: Vec<f64> = out.trials.iter().map(|t| t.val_f1.unwrap()).collect();
    assert!((f1s[0] - 0.5).abs() < 1e-12, "{f1s:?}");
    assert!((f1s[1] - 0.9).abs() < 1e-12, "{f1s:?}");
    assert_eq!(out.chosen.c, 10.0);

    let single = grid_search(&train, &validation, &grid[..1], FeatureConfig::default()).unwrap();
    assert_eq!(single.chosen, grid[0]);

    let tied = vec![
        SvmHyperparams {
            c: 100.0,
            ..Default::default()
        },
        SvmHyperparams {
            c: 10.0,
            ..Default::default()
        },
    ];
    let out = grid_search(&train, &validation, &tied, FeatureConfig::default()).unwrap();
    assert_eq!(out.trials[0].val_f1, out.trials[1].val_f1);
    assert_eq!(out.chosen.c, 10.0);
}

/// Subgradient descent on the primal, step 1/t (the objective is 1-strongly
/// convex in (w, b)), keeping the best iterate.
fn subgradient_oracle(points: &[[f64; 2]], y: &[f64], c: f64) -> f64 {
    let objective = |w: &[f64; 3]| {
        let reg = 0.5 * (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
        let loss: f64 = points
            .iter()
            .zip(y)
            .map(|(p, yi)| (1.0 - yi * (w[0] * p[0] + w[1] * p[1] + w[2])).max(0.0))
            .sum();
        reg + c * loss
    };
    let mut w = [0.0f64; 3];
    let mut best = objective(&w);
    for t in 1..=400_000u64 {
        let mut g = w;
        for (p, yi) in points.iter().zip(y) {
            if yi * (w[0] * p[0] + w[1] * p[1] + w[2]) < 1.0 {
                g[0] -= c * yi * p[0];
                g[1] -= c * yi * p[1];
                g[2] -= c * yi;
            }
        }
        let step = 1.0 / t as f64;
        for k in 0..3 {
            w[k] -= step * g[k];
        }
        best = best.min(objective(&w));
    }
    best
}

pub fn solver_objective_matches_subgradient_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut points = Vec::new();
    let mut y = Vec::new();
    while points.len() < 20 {
        let p: [f64; 2] = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
        let side = p[0] + 0.5 * p[1] - 0.2;
        if side.abs() < 0.3 {
            continue;
        }
        points.push(p);
        y.push(side.signum());
    }
    let x: Vec<SparseVector> = points
        .iter()
        .map(|p| SparseVector::from_pairs(vec![(0, p[0]), (1, p[1])]))
        .collect();
    let labels: Vec<MetaLabel> = y.iter().map(|v| label(*v > 0.0)).collect();
    for c in [0.1, 1.0, 10.0] {
        let h = SvmHyperparams {
            c,
            max_iterations: 100_000,
            tolerance: 1e-8,
            ..Default::default()
        };
        let m = train_linear_svm(&x, &labels, 2, &h).unwrap();
        let ours = primal_objective(&x, &labels, &h, &m.weights, m.bias);
        let oracle = subgradient_oracle(&points, &y, c);
        assert!((ours - oracle).abs() <= 0.01 * oracle, "C={c}: {ours} vs {oracle}");
        assert!(m.training.converged);
    }
}

pub fn default_grid_runs_end_to_end() {
    let train: Vec<SentenceRecord> = (0..12)
        .map(|i| {
            rec(
                "t",
                i,
                if i % 3 == 0 { "she testified" } else { "the law says" },
                label(i % 3 == 0),
            )
        })
        .collect();
    let out = grid_search(&train, &train, &default_grid(), FeatureConfig::default()).unwrap();
    assert_eq!(out.trials.len(), 20);
    assert_eq!(out.val_f1, 1.0);
}
