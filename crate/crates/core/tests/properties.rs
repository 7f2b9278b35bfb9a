use std::collections::BTreeMap;

use proptest::prelude::*;

use dialogsynth_core::analysis::{count_ngrams, cosine, entropy_of_counts, pairwise_cosine};
use dialogsynth_core::corpus::{load_qa_corpus, read_dialogue_corpus, sample_seed_qas, write_dialogue_corpus, write_qa_corpus};
use dialogsynth_core::dialogue::{parse_dialogue, render_dialogue};
use dialogsynth_core::evalharness::{
    bleu_n, evaluate, fleiss_kappa, lcs_len, meteor, rouge_l, EvalCase, HashingCharEmbedder, MetricConfig, MeteorParams,
};
use dialogsynth_core::genclient::EmbeddingVector;
use dialogsynth_core::preprocess::{flag_manual_review, truncate_qa, ReviewFlag};
use dialogsynth_core::sft::{build_records, split_sessions, to_chat_record, ChatRole};
use dialogsynth_core::{Dialogue, MarkerConfig, Method, QaPair, Utterance};

#[path = "support/oracles.rs"]
mod oracles;

const TEXT: &str = "[我你他好难过开心谢谢工作压力睡不着。，！？]{1,12}";

fn dialogue_strategy() -> impl Strategy<Value = Dialogue> {
    (1usize..=14, prop::collection::vec(TEXT, 14)).prop_map(|(len, texts)| {
        let utterances = texts
            .into_iter()
            .take(len)
            .enumerate()
            .map(|(i, t)| {
                if i % 2 == 0 {
                    Utterance::help_seeker(t).unwrap()
                } else {
                    Utterance::supporter(t).unwrap()
                }
            })
            .collect();
        Dialogue::new("d", Method::Smile, utterances).unwrap()
    })
}

fn symbols(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 1..=max_len)
}

fn unit_vectors(k: std::ops::RangeInclusive<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), k)
        .prop_filter("nonzero", |vs| vs.iter().all(|v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6))
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(d in dialogue_strategy()) {
        let m = MarkerConfig::default();
        let raw = render_dialogue(&d.utterances, &m);
        prop_assert_eq!(parse_dialogue(&raw, &m).unwrap(), d.utterances);
    }

    #[test]
    fn dialogue_corpus_round_trips(ds in prop::collection::vec(dialogue_strategy(), 1..6)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let ds: Vec<Dialogue> = ds
            .into_iter()
            .enumerate()
            .map(|(i, mut d)| { d.id = format!("d{i}"); d.with_seed_qa(format!("qa{i}")) })
            .collect();
        write_dialogue_corpus(&ds, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let back = read_dialogue_corpus(&path).unwrap();
        prop_assert_eq!(&back, &ds);
        write_dialogue_corpus(&back, &path).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), bytes);
    }

    #[test]
    fn qa_corpus_round_trips(texts in prop::collection::vec((TEXT, TEXT), 1..10)) {
        let qas: Vec<QaPair> = texts
            .into_iter()
            .enumerate()
            .map(|(i, (q, a))| QaPair::new(format!("q{i}"), q, a))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("qa.jsonl");
        write_qa_corpus(&qas, &path).unwrap();
        let (back, manifest) = load_qa_corpus(&path).unwrap();
        prop_assert_eq!(back, qas.clone());
        prop_assert_eq!(manifest.record_count, qas.len());
    }

    #[test]
    fn seed_sampling_draws_distinct_questions(
        questions in prop::collection::vec(0u8..12, 1..40),
        seed in any::<u64>(),
        take in 0usize..12,
    ) {
        let corpus: Vec<QaPair> = questions
            .iter()
            .enumerate()
            .map(|(i, q)| QaPair::new(format!("r{i}"), format!("问题{q}"), format!("回答{i}")))
            .collect();
        let distinct = questions.iter().collect::<std::collections::BTreeSet<_>>().len();
        let take = take.min(distinct);
        let a = sample_seed_qas(&corpus, corpus.len(), take, seed).unwrap();
        let b = sample_seed_qas(&corpus, corpus.len(), take, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), take);
        let keys: std::collections::BTreeSet<_> = a.iter().map(|qa| qa.question.clone()).collect();
        prop_assert_eq!(keys.len(), take);
        prop_assert!(a.iter().all(|qa| corpus.contains(qa)));
    }

    #[test]
    fn review_flags_match_naive_scan(
        text in "[抱你好哈]{0,30}",
        terms in prop::collection::vec("[抱你好哈]{1,3}", 1..4),
    ) {
        let chars: Vec<char> = text.chars().collect();
        let mut expected = Vec::new();
        for start in 0..chars.len() {
            for term in &terms {
                let t: Vec<char> = term.chars().collect();
                if chars[start..].starts_with(&t) {
                    expected.push(ReviewFlag {
                        qa_id: "x".into(),
                        term: term.clone(),
                        span_start: start,
                        span_end: start + t.len(),
                    });
                }
            }
        }
        prop_assert_eq!(flag_manual_review("x", &text, &terms), expected);
    }

    #[test]
    fn truncation_respects_budget(
        q in "[问题很长]{1,40}",
        a in "[回答内容]{1,200}",
        max in 20usize..150,
        min_answer in 0usize..20,
    ) {
        let qa = QaPair::new("q", q.clone(), a.clone());
        match truncate_qa(&qa, max, min_answer) {
            Ok(out) => {
                prop_assert!(out.char_len() <= max);
                prop_assert_eq!(&out.question, &q);
                prop_assert!(a.starts_with(&out.answer));
                if qa.char_len() <= max {
                    prop_assert_eq!(out, qa);
                } else {
                    prop_assert_eq!(out.char_len(), max);
                }
            }
            Err(_) => prop_assert!(q.chars().count() > max.saturating_sub(min_answer)),
        }
    }

    #[test]
    fn ngram_counts_match_sorting_oracle(seqs in prop::collection::vec(symbols(10), 1..6), n in 1usize..4) {
        let (unique, total) = count_ngrams(&seqs, n);
        match oracles::distinct(&seqs, n) {
            None => prop_assert_eq!(total, 0),
            Some(ratio) => {
                prop_assert!(total > 0);
                prop_assert!((unique as f64 / total as f64 - ratio).abs() < 1e-12);
                let expected_total: usize = seqs.iter().map(|s| s.len().saturating_sub(n - 1)).sum();
                prop_assert_eq!(total as usize, expected_total);
            }
        }
    }

    #[test]
    fn cosine_is_symmetric_bounded_and_matches_oracle(vs in unit_vectors(2..=2, 8)) {
        let (a, b) = (&vs[0], &vs[1]);
        let ab = cosine(a, b);
        prop_assert_eq!(ab, cosine(b, a));
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((ab - oracles::cosine(a, b)).abs() < 1e-12);
        prop_assert!((cosine(a, a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairwise_cosine_covers_every_pair(vs in unit_vectors(2..=12, 6)) {
        let k = vs.len();
        let embeddings: Vec<EmbeddingVector<f64>> =
            vs.iter().map(|v| EmbeddingVector::new(v.clone(), "t").unwrap()).collect();
        let dist = pairwise_cosine(&embeddings).unwrap();
        prop_assert_eq!(dist.len(), k * (k - 1) / 2);
        let mut idx = 0;
        for i in 0..k {
            for j in i + 1..k {
                prop_assert!((dist.values[idx] - oracles::cosine(&vs[i], &vs[j])).abs() < 1e-12);
                idx += 1;
            }
        }
        prop_assert!(dist.values.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn entropy_is_bounded_by_uniform_and_order_free(
        counts in prop::collection::vec(1usize..50, 1..20),
        rotate in 0usize..20,
    ) {
        let h: f64 = entropy_of_counts(counts.clone()).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (counts.len() as f64).log2() + 1e-12);
        prop_assert!((h - oracles::entropy(&counts)).abs() < 1e-12);
        let mut permuted = counts.clone();
        permuted.rotate_left(rotate % counts.len());
        permuted.reverse();
        let hp: f64 = entropy_of_counts(permuted).unwrap();
        prop_assert!((h - hp).abs() < 1e-12);
        let uniform: f64 = entropy_of_counts(vec![7; counts.len()]).unwrap();
        prop_assert!(h <= uniform + 1e-12);
    }

    #[test]
    fn chat_records_alternate_and_extend_each_other(d in dialogue_strategy()) {
        let supporters = d.utterances.iter().filter(|u| u.role == dialogsynth_core::Role::Supporter).count();
        match split_sessions(&d, "你是一名心理支持者。") {
            Err(_) => prop_assert_eq!(supporters, 0),
            Ok(sessions) => {
                prop_assert_eq!(sessions.len(), supporters);
                let records: Vec<_> = sessions.iter().map(|s| to_chat_record(s).unwrap()).collect();
                for (k, (s, r)) in sessions.iter().zip(&records).enumerate() {
                    prop_assert!(r.validate().is_ok());
                    prop_assert_eq!(s.session_index, k + 1);
                    prop_assert_eq!(s.history.len(), 2 * k + 1);
                    prop_assert_eq!(r.messages.last().unwrap().role, ChatRole::Assistant);
                }
                for w in records.windows(2) {
                    prop_assert_eq!(&w[1].messages[..w[0].messages.len()], &w[0].messages[..]);
                }
                // The final record replays the dialogue up to its last supporter line.
                let last = records.last().unwrap();
                let texts: Vec<&str> = last.messages[1..].iter().map(|m| m.content.as_str()).collect();
                let originals: Vec<&str> = d.utterances[..texts.len()].iter().map(|u| u.text.as_str()).collect();
                prop_assert_eq!(texts, originals);
                prop_assert_eq!(build_records(std::slice::from_ref(&d), "你是一名心理支持者。").unwrap(), records);
            }
        }
    }

    #[test]
    fn bleu_matches_oracle(c in symbols(8), r in symbols(8), n in 1usize..=3, smooth in any::<bool>()) {
        let s = smooth.then_some(0.1);
        let got = bleu_n(&c, &r, n, s).unwrap();
        let want = oracles::bleu(&c, &r, n, s);
        prop_assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        prop_assert!((0.0..=100.0).contains(&got));
    }

    #[test]
    fn rouge_matches_oracle(c in symbols(8), r in symbols(8), beta in 0.5f64..3.0) {
        let l = oracles::lcs_brute(&c, &r);
        prop_assert_eq!(l, oracles::lcs_table(&c, &r));
        prop_assert_eq!(lcs_len(&c, &r), l);
        let got = rouge_l(&c, &r, beta).unwrap();
        prop_assert!((got - oracles::rouge_l(l, c.len(), r.len(), beta)).abs() < 1e-9);
    }

    #[test]
    fn meteor_matches_exhaustive_alignment(c in symbols(8), r in symbols(8)) {
        let p = MeteorParams::default();
        let (m, chunks) = oracles::best_alignment(&c, &r);
        let want = oracles::meteor(c.len(), r.len(), m, chunks, p.alpha, p.beta, p.gamma);
        let got = meteor(&c, &r, &p).unwrap();
        prop_assert!((got - want).abs() < 1e-9, "{got} vs {want} ({m} matches, {chunks} chunks)");
    }

    #[test]
    fn evaluation_ignores_case_order(
        pairs in prop::collection::vec(("[好的谢谢你我懂]{3,10}", "[好的谢谢你我懂]{3,10}"), 1..8),
        rotate in 0usize..8,
    ) {
        let cases: Vec<EvalCase> = pairs
            .iter()
            .enumerate()
            .map(|(i, (cand, reference))| EvalCase {
                case_id: format!("c{i}"),
                history: vec![Utterance::help_seeker("最近压力很大").unwrap()],
                reference: reference.clone(),
                candidates: BTreeMap::from([("sys".to_string(), cand.clone())]),
            })
            .collect();
        let mut shuffled = cases.clone();
        shuffled.rotate_left(rotate % cases.len());
        shuffled.reverse();
        let e = HashingCharEmbedder::default();
        let cfg = MetricConfig::default();
        let a = evaluate(&cases, "sys", &e, &cfg).unwrap();
        let b = evaluate(&shuffled, "sys", &e, &cfg).unwrap();
        for (x, y) in [
            (a.meteor, b.meteor), (a.bleu_1, b.bleu_1), (a.bleu_2, b.bleu_2), (a.bleu_3, b.bleu_3),
            (a.rouge_l, b.rouge_l), (a.distinct_1, b.distinct_1), (a.distinct_2, b.distinct_2),
            (a.distinct_3, b.distinct_3), (a.bertscore, b.bertscore),
        ] {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn kappa_is_bounded_and_matches_oracle(rows in prop::collection::vec(prop::collection::vec(0u8..3, 3), 1..30)) {
        let k: f64 = fleiss_kappa(&rows).unwrap();
        prop_assert!((-1.0..=1.0).contains(&k), "{k}");
        let categories: std::collections::BTreeSet<u8> = rows.iter().flatten().copied().collect();
        if categories.len() > 1 {
            let table: Vec<Vec<usize>> = rows
                .iter()
                .map(|r| categories.iter().map(|c| r.iter().filter(|x| *x == c).count()).collect())
                .collect();
            prop_assert!((k - oracles::fleiss(&table)).abs() < 1e-9);
        } else {
            prop_assert_eq!(k, 1.0);
        }
    }
}
