//! Retrieval invariants over the bundled knowledge base.

use std::path::Path;
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use syntagm_agent::retrieval::{dot, format_few_shot_block, index_knowledge_base, HashingEmbedder, KnowledgeBase};

fn kb() -> &'static KnowledgeBase {
    static KB: OnceLock<KnowledgeBase> = OnceLock::new();
    KB.get_or_init(|| {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../knowledge_base");
        index_knowledge_base(&dir, Arc::new(HashingEmbedder::new())).unwrap()
    })
}

#[test]
fn corpus_has_22_unit_vectors_of_one_dimension() {
    let kb = kb();
    assert_eq!(kb.len(), 22);
    assert_eq!(kb.provider_id(), "hashing-256");
    for (e, v) in &kb.entries {
        assert_eq!(v.len(), kb.dim());
        assert!((dot(v, v) - 1.0).abs() < 1e-9, "{}", e.id);
        assert!(!e.model.is_empty() && !e.data.is_empty());
    }
}

#[test]
fn pairwise_scores_are_symmetric_and_bounded() {
    let kb = kb();
    for (a, va) in &kb.entries {
        for (b, vb) in &kb.entries {
            let (ab, ba) = (dot(va, vb), dot(vb, va));
            assert_eq!(ab, ba, "{} vs {}", a.id, b.id);
            assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&ab));
        }
    }
}

#[test]
fn few_shot_block_follows_top_k_order() {
    let hits = kb().top_k("assign workers to shifts with minimum staffing levels", 3).unwrap();
    let block = format_few_shot_block(&hits);
    let positions: Vec<usize> = hits.iter().map(|h| block.find(&format!("id=\"{}\"", h.exemplar.id)).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    for h in &hits {
        assert!(block.contains(h.exemplar.model.trim_end()));
        assert!(block.contains(h.exemplar.data.trim_end()));
    }
    assert_eq!(block.matches("<example ").count(), 3);
}

proptest! {
    #[test]
    fn truncation_is_monotone(query in "[a-z ]{0,80}", k in 1usize..30) {
        let kb = kb();
        let small = kb.top_k(&query, k).unwrap();
        let big = kb.top_k(&query, k + 1).unwrap();
        prop_assert_eq!(small.len(), k.min(kb.len()));
        prop_assert_eq!(&big[..small.len()], &small[..]);
        prop_assert!(small.windows(2).all(|w| w[0].score > w[1].score
            || (w[0].score == w[1].score && w[0].exemplar.id < w[1].exemplar.id)));
    }
}
