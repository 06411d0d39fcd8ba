use mtgru::cells::{gru_forward, mtgru_backward, mtgru_forward, CellWeights};
use mtgru::corpus::{build_vocab, corpus_stats, make_pairs, tokenize, DfUnit, DocumentRecord};
use mtgru::numkit::{Matrix, Rng};
use mtgru::rouge::{lcs_len, rouge_l, rouge_n, RougeReport};
use mtgru::seq2seq::{
    batch_loss, perplexity, Batch, Bucket, Example, ModelDims, Seq2SeqModel, TimescaleSchedule, DEFAULT_BUCKETS,
    NUM_SPECIAL,
};
use proptest::prelude::*;

fn cell(seed: u64, input: usize, hidden: usize, scale: f64) -> CellWeights {
    let mut w = CellWeights::init(input, hidden, &mut Rng::new(seed));
    for m in w.matrices_mut() {
        m.scale(scale);
    }
    w
}

fn toks(ids: &[u8]) -> Vec<String> {
    ids.iter().map(|&i| ((b'a' + i % 5) as char).to_string()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identity_product_is_exact(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let m = Matrix::new(rows, cols, rng.uniform_vec(rows * cols, -5.0, 5.0)).unwrap();
        prop_assert_eq!(&Matrix::identity(rows).matmul(&m).unwrap(), &m);
        prop_assert_eq!(&m.matmul(&Matrix::identity(cols)).unwrap(), &m);
    }

    #[test]
    fn states_stay_inside_unit_interval(
        seed in any::<u64>(),
        tau in 1.0f64..20.0,
        scale in 0.1f64..3.0,
        steps in 1usize..60,
    ) {
        let w = cell(seed, 4, 6, scale);
        let mut rng = Rng::new(seed ^ 1);
        let mut h = vec![0.0; 6];
        for _ in 0..steps {
            let x = rng.uniform_vec(4, -3.0, 3.0);
            h = mtgru_forward(&x, &h, &w, tau).unwrap().0;
            prop_assert!(h.iter().all(|v| v.abs() < 1.0));
        }
    }

    #[test]
    fn tau_one_matches_gru_bitwise(seed in any::<u64>(), i in 1usize..7, n in 1usize..7) {
        let w = cell(seed, i, n, 1.0);
        let mut rng = Rng::new(seed ^ 2);
        let x = rng.uniform_vec(i, -2.0, 2.0);
        let h = rng.uniform_vec(n, -1.0, 1.0);
        prop_assert_eq!(mtgru_forward(&x, &h, &w, 1.0).unwrap().0, gru_forward(&x, &h, &w).unwrap().0);
    }

    #[test]
    fn leak_decomposition(seed in any::<u64>(), tau in 1.0f64..10.0) {
        let w = cell(seed, 3, 5, 1.0);
        let mut rng = Rng::new(seed ^ 3);
        let x = rng.uniform_vec(3, -2.0, 2.0);
        let h = rng.uniform_vec(5, -1.0, 1.0);
        let m = mtgru_forward(&x, &h, &w, tau).unwrap().0;
        let g = gru_forward(&x, &h, &w).unwrap().0;
        for k in 0..5 {
            let want = g[k] / tau + (1.0 - 1.0 / tau) * h[k];
            prop_assert!((m[k] - want).abs() <= 1e-14, "{} vs {}", m[k], want);
        }
    }

    #[test]
    fn backward_is_linear(seed in any::<u64>(), tau in 1.0f64..3.0, alpha in -4.0f64..4.0) {
        let w = cell(seed, 3, 4, 1.0);
        let mut rng = Rng::new(seed ^ 4);
        let x = rng.uniform_vec(3, -1.0, 1.0);
        let h = rng.uniform_vec(4, -0.9, 0.9);
        let d = rng.uniform_vec(4, -1.0, 1.0);
        let (_, cache) = mtgru_forward(&x, &h, &w, tau).unwrap();
        let one = mtgru_backward(&d, &cache, &w).unwrap();
        let scaled_d: Vec<f64> = d.iter().map(|v| v * alpha).collect();
        let two = mtgru_backward(&scaled_d, &cache, &w).unwrap();
        let pairs = one.d_h_prev.iter().zip(&two.d_h_prev).chain(one.d_x.iter().zip(&two.d_x));
        for (a, b) in pairs {
            prop_assert!((a * alpha - b).abs() <= 1e-12);
        }
        for (ma, mb) in one.weights.matrices().iter().zip(two.weights.matrices()) {
            for (a, b) in ma.data().iter().zip(mb.data()) {
                prop_assert!((a * alpha - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn padding_never_changes_batch_loss(seed in any::<u64>(), extra in 1usize..6) {
        let dims = ModelDims { vocab_size: 9, embed_dim: 3, hidden_dim: 4, layers: 2 };
        let model = Seq2SeqModel::new(dims, TimescaleSchedule::new(vec![1.0, 1.5]).unwrap(), &mut Rng::new(seed)).unwrap();
        let mut rng = Rng::new(seed ^ 5);
        let examples: Vec<Example> = (0..3)
            .map(|_| Example {
                source: (0..rng.range_inclusive(1, 5)).map(|_| rng.range_inclusive(NUM_SPECIAL, 8)).collect(),
                target: (0..rng.range_inclusive(1, 4)).map(|_| rng.range_inclusive(NUM_SPECIAL, 8)).collect(),
            })
            .collect();
        let refs: Vec<&Example> = examples.iter().collect();
        let tight = Batch::from_examples(0, Bucket::new(5, 4), &refs);
        let loose = Batch::from_examples(0, Bucket::new(5 + extra, 4 + extra), &refs);
        prop_assert_eq!(batch_loss(&model, &tight).unwrap().to_bits(), batch_loss(&model, &loose).unwrap().to_bits());
    }

    #[test]
    fn perplexity_is_monotone_and_at_least_one(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        prop_assert!(perplexity(a) >= 1.0);
        if a <= b {
            prop_assert!(perplexity(a) <= perplexity(b));
        }
    }

    #[test]
    fn rouge_scores_are_bounded(c in prop::collection::vec(0u8..5, 0..15), r in prop::collection::vec(0u8..5, 0..15)) {
        let (c, r) = (toks(&c), toks(&r));
        for s in RougeReport::from_tokens(&c, &r).scores() {
            for v in [s.recall, s.precision, s.f_score] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn rouge_identity(x in prop::collection::vec(0u8..5, 2..15)) {
        let x = toks(&x);
        prop_assert_eq!(rouge_n(&x, &x, 1).recall, 1.0);
        prop_assert_eq!(rouge_n(&x, &x, 2).recall, 1.0);
        prop_assert_eq!(rouge_l(&x, &x).f_score, 1.0);
    }

    #[test]
    fn repeating_a_token_never_adds_overlap(r in prop::collection::vec(0u8..5, 1..10), k in 1usize..6) {
        let r = toks(&r);
        let base = vec![r[0].clone()];
        let repeated = vec![r[0].clone(); k];
        let limit = r.iter().filter(|t| **t == r[0]).count();
        let hits = rouge_n(&repeated, &r, 1).recall * r.len() as f64;
        prop_assert!((hits - (k.min(limit)) as f64).abs() < 1e-9);
        prop_assert!(hits >= rouge_n(&base, &r, 1).recall * r.len() as f64 - 1e-9);
    }

    #[test]
    fn lcs_recall_grows_with_supersequence(
        c in prop::collection::vec(0u8..5, 0..10),
        inserts in prop::collection::vec((0usize..12, 0u8..5), 0..6),
        r in prop::collection::vec(0u8..5, 1..12),
    ) {
        let (c, r) = (toks(&c), toks(&r));
        let mut bigger = c.clone();
        for (pos, t) in inserts {
            bigger.insert(pos.min(bigger.len()), toks(&[t])[0].clone());
        }
        prop_assert!(lcs_len(&bigger, &r) >= lcs_len(&c, &r));
        prop_assert!(rouge_l(&bigger, &r).recall >= rouge_l(&c, &r).recall);
    }

    #[test]
    fn permuting_summaries_keeps_unigram_scores(parts in prop::collection::vec(prop::collection::vec(0u8..5, 1..6), 1..5), r in prop::collection::vec(0u8..5, 1..12)) {
        let r = toks(&r);
        let fwd: Vec<String> = parts.iter().flat_map(|p| toks(p)).collect();
        let rev: Vec<String> = parts.iter().rev().flat_map(|p| toks(p)).collect();
        prop_assert_eq!(rouge_n(&fwd, &r, 1), rouge_n(&rev, &r, 1));
    }

    #[test]
    fn pairs_are_conserved_and_verbatim(
        docs in prop::collection::vec(
            prop::collection::vec(prop::collection::vec("[a-f]{1,3}( [a-f]{1,3}){0,6}", 1..4), 1..4),
            1..4,
        ),
    ) {
        let records: Vec<DocumentRecord> = docs
            .iter()
            .enumerate()
            .map(|(i, paras)| DocumentRecord {
                doc_id: format!("d{i}"),
                abstract_text: "x".into(),
                intro_paragraphs: paras.iter().map(|ss| ss.iter().map(|s| format!("{s}.")).collect::<Vec<_>>().join(" ")).collect(),
            })
            .collect();
        let stats = corpus_stats(&records, DfUnit::Paragraph);
        prop_assert!(stats.document_frequency.values().all(|&df| df <= stats.document_count));
        let set = make_pairs(&records, &stats, &DEFAULT_BUCKETS);
        let paragraphs: usize = records.iter().map(|d| d.intro_paragraphs.len()).sum();
        prop_assert_eq!(set.pairs.len() + set.overflow, paragraphs);
        for p in &set.pairs {
            prop_assert!(p.source_tokens.windows(p.target_tokens.len()).any(|w| w == p.target_tokens.as_slice()));
        }
        let vocab = build_vocab(set.pairs.iter().map(|p| p.source_tokens.as_slice()), 12).unwrap();
        for p in &set.pairs {
            let ids = vocab.encode(&p.target_tokens);
            prop_assert!(ids.iter().all(|&i| i < vocab.len()));
        }
    }

    #[test]
    fn tokenizer_output_is_lowercase_or_placeholder(text in "[A-Za-z0-9 .,$]{0,40}") {
        for t in tokenize(&text) {
            prop_assert!(t == t.to_lowercase() || ["MATH", "CITE", "REF", "NUM"].contains(&t.as_str()), "{}", t);
        }
    }
}
